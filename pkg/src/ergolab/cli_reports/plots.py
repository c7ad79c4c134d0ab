"""Figure rendering for report traces.

Each trace kind gets one PNG next to its CSV, rendered headlessly.  The
figures are diagnostic companions to the delimited output, not part of
the deterministic report surface (PNG bytes embed library metadata).
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _finish(fig, path: Path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def _render_phi(trace, path: Path) -> None:
    ts = [r[0] for r in trace.rows]
    vals = [r[1] for r in trace.rows]
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.plot(ts, vals, lw=1.0)
    ax.axhline(0.0, color="0.6", lw=0.7)
    ax.set_xlabel("t")
    ax.set_ylabel("running integral")
    _finish(fig, path)


def _render_zeros(trace, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(7, 3.5))
    hit_t = [r[1] for r in trace.rows if r[2]]
    hit_s = [r[0] for r in trace.rows if r[2]]
    miss_t = [r[1] for r in trace.rows if not r[2]]
    miss_s = [r[0] for r in trace.rows if not r[2]]
    ax.plot(miss_t, miss_s, ".", ms=2, color="0.7", label="outside target")
    ax.plot(hit_t, hit_s, ".", ms=3, color="tab:blue", label="in target")
    ax.set_xlabel("zero time")
    ax.set_ylabel("sample")
    if hit_t and miss_t:
        ax.legend(loc="best", fontsize=8)
    _finish(fig, path)


def _render_sums(trace, path: Path) -> None:
    ns = [r[0] for r in trace.rows]
    ss = [r[1] for r in trace.rows]
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.plot(ns, ss, lw=0.8)
    ax.axhline(0.0, color="0.6", lw=0.7)
    ax.set_xlabel("n")
    ax.set_ylabel("running sum")
    _finish(fig, path)


def _render_weiss(trace, path: Path) -> None:
    ns = [r[0] for r in trace.rows]
    fr = [r[1] for r in trace.rows]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(ns, fr, "o-")
    ax.set_xscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("tail fraction")
    ax.set_ylim(-0.05, 1.05)
    _finish(fig, path)


def _render_wiener(trace, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ts = [r[1] for r in trace.rows]
    res = [max(r[2], 1e-18) for r in trace.rows]
    bounds = [max(r[3], 1e-18) for r in trace.rows]
    ax.loglog(ts, res, ".", ms=4, label="residual")
    ax.loglog(ts, bounds, "x", ms=4, color="0.5", label="rate bound")
    ax.set_xlabel("t")
    ax.set_ylabel("|average - pointwise|")
    ax.legend(fontsize=8)
    _finish(fig, path)


def _render_lemma(trace, path: Path) -> None:
    slacks = [r[1] for r in trace.rows]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.hist(slacks, bins=40)
    ax.set_xlabel("slack")
    ax.set_ylabel("trials")
    _finish(fig, path)


def _render_induced(trace, path: Path) -> None:
    times = [r[2] for r in trace.rows]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.hist(times, bins=range(1, max(times) + 2))
    ax.set_xlabel("return time")
    ax.set_ylabel("steps")
    _finish(fig, path)


_RENDERERS = {
    "phi": _render_phi,
    "zeros": _render_zeros,
    "sums": _render_sums,
    "weiss": _render_weiss,
    "wiener": _render_wiener,
    "lemma": _render_lemma,
    "induced": _render_induced,
}


def render_trace(trace, out_dir: Path) -> str | None:
    """Render one trace to PNG; returns the filename, or None if empty."""
    if not trace.rows:
        return None
    renderer = _RENDERERS.get(trace.plot)
    if renderer is None:
        return None
    name = Path(trace.filename).stem + ".png"
    renderer(trace, out_dir / name)
    return name
