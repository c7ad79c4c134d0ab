"""Seeded experiment execution and report emission.

``run`` executes one validated config and emits, into the output
directory: ``report.json`` (config echo, per-sample results, aggregates,
counters, timing), one CSV per trace kind with a fixed header, and one
rendered PNG per trace (unless plots are disabled).  Identical configs
and seeds reproduce ``report.json`` byte for byte, timing fields aside;
samples run on per-index substreams, so a worker pool cannot perturb the
results either.
"""

from __future__ import annotations

import json
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .. import lemma_tools, zero_lab
from ..cascades import (
    StepFunction,
    birkhoff_sums,
    induced_cascade_run,
    shneiberg_sign_times,
    sum_zero_times,
    weiss_statistic,
)
from ..observables import Observable, phi_profile
from ..rng import SplitMix64, substream_seed
from ..special_flow import FlowPoint, SpecialFlow, TargetSet
from .config import ConfigError, ExperimentConfig, resolve, system_meta, validate

DEFAULT_ZERO_TOL = zero_lab.DEFAULT_ZERO_TOL
DEFAULT_MAX_EVENTS = 1000


@dataclass(frozen=True)
class Trace:
    """One delimited output: rows under a fixed header, plus a plot kind."""

    filename: str
    header: tuple[str, ...]
    rows: list[tuple]
    plot: str


@dataclass(frozen=True)
class RunReport:
    """Everything one run produced; ``report`` is the JSON document."""

    report: dict[str, Any]
    output_dir: Path | None
    files: tuple[str, ...]

    @property
    def samples(self) -> list[dict]:
        return self.report["samples"]

    @property
    def aggregate(self) -> dict:
        return self.report["aggregate"]


def _jsonify(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _jsonify(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonify(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonify(v) for v in value.tolist()]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    return value


def _csv_cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (np.integer,)):
        return str(int(value))
    if isinstance(value, (np.floating,)):
        return repr(float(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_trace(trace: Trace, out_dir: Path) -> str:
    path = out_dir / trace.filename
    lines = [",".join(trace.header)]
    lines.extend(",".join(_csv_cell(v) for v in row) for row in trace.rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return trace.filename


def _summary_stats(counts: list[int | float]) -> dict[str, float]:
    if not counts:
        return {"min": 0, "median": 0, "max": 0}
    return {
        "min": min(counts),
        "median": statistics.median(counts),
        "max": max(counts),
    }


def _sample_flow_point(rng: SplitMix64, flow: SpecialFlow) -> FlowPoint:
    """Area-uniform point under the roof (rejection in the bounding box)."""
    rmax = flow.roof.max_value
    while True:
        a = rng.uniform()
        b = rng.uniform() * rmax
        if b < flow.roof.value_at(a):
            return FlowPoint(a, b)


def _sample_target_point(rng: SplitMix64, target: TargetSet,
                         f: Observable | None = None) -> FlowPoint:
    """Area-uniform point of the target; optionally requires f != 0 there."""
    areas = [
        (a_hi - a_lo) * (b_hi - b_lo)
        for a_lo, a_hi, b_lo, b_hi in target.rectangles
    ]
    total = sum(areas)
    for _ in range(10_000):
        u = rng.uniform() * total
        for (a_lo, a_hi, b_lo, b_hi), area in zip(target.rectangles, areas):
            if u < area:
                break
            u -= area
        x = FlowPoint(
            a_lo + rng.uniform() * (a_hi - a_lo),
            b_lo + rng.uniform() * (b_hi - b_lo),
        )
        if f is None or f.eval(x) != 0.0:
            return x
    raise RuntimeError("could not sample a target point with f != 0")


def _map_samples(worker: Callable, bundle: tuple, count: int,
                 workers: int) -> list[dict]:
    if workers <= 1:
        return [worker(bundle, i) for i in range(count)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(partial(worker, bundle), range(count)))


# --------------------------------------------------------------------------
# per-sample workers (module level so a process pool can pickle them)

def _flow_zeros_worker(bundle: tuple, i: int) -> dict:
    flow, f, target, horizon, zero_tol, max_events, seed, sample_in_target = bundle
    rng = SplitMix64(substream_seed(seed, i))
    if sample_in_target:
        x = _sample_target_point(rng, target, f)
    else:
        x = _sample_flow_point(rng, flow)
    events = zero_lab.find_integral_zeros(
        flow, f, x, horizon, target=target, zero_tol=zero_tol,
        max_events=max_events,
    )
    return {
        "sample_id": i,
        "x": [x.base_pos, x.height],
        "event_count": len(events),
        "in_target_count": sum(1 for e in events if e.in_target),
        "transversal_count": sum(1 for e in events if e.kind == "transversal"),
        "max_residual": max((e.residual for e in events), default=0.0),
        "first_times": [e.time for e in events[:10]],
        "rows": [(i, e.time, e.in_target, e.residual) for e in events],
    }


def _denisova_worker(bundle: tuple, i: int) -> dict:
    flow, f, radii, horizon, zero_tol, seed = bundle
    rng = SplitMix64(substream_seed(seed, i))
    x = _sample_flow_point(rng, flow)
    accepted = zero_lab.denisova_returns(flow, f, x, horizon, list(radii),
                                         zero_tol=zero_tol)
    return {
        "sample_id": i,
        "x": [x.base_pos, x.height],
        "accepted_times": [e.time for e in accepted],
        "radii_consumed": len(accepted),
        "all_radii_consumed": len(accepted) == len(radii),
        "rows": [(i, e.time, e.in_target, e.residual) for e in accepted],
    }


def _cascade_zeros_worker(bundle: tuple, i: int) -> dict:
    base, g, n_steps, seed = bundle
    rng = SplitMix64(substream_seed(seed, i))
    x = rng.uniform()
    zeros = sum_zero_times(base, g, x, n_steps)
    return {
        "sample_id": i,
        "x": x,
        "zero_count": int(zeros.size),
        "first_zeros": [int(n) for n in zeros[:10]],
        "rows": [(i, int(n), True, 0.0) for n in zeros],
    }


def _shneiberg_worker(bundle: tuple, i: int) -> dict:
    base, g, n_steps, ratio_floor, seed = bundle
    rng = SplitMix64(substream_seed(seed, i))
    x = rng.uniform()
    st = shneiberg_sign_times(base, g, x, n_steps)
    tail = st.ratio_times >= ratio_floor
    tail_dev = (
        float(np.abs(st.ratios[tail] - st.mean_value).max())
        if tail.any() else None
    )
    return {
        "sample_id": i,
        "x": x,
        "below_count": int(st.below.size),
        "above_count": int(st.above.size),
        "mean_value": st.mean_value,
        "max_tail_ratio_dev": tail_dev,
    }


def _induced_worker(bundle: tuple, i: int) -> dict:
    base, g, base_set, k_steps, max_steps_per_return, seed = bundle
    rng = SplitMix64(substream_seed(seed, i))
    # uniform start inside the base set
    lengths = [v - u for u, v in base_set.intervals]
    total = sum(lengths)
    u = rng.uniform() * total
    for (lo, hi), ln in zip(base_set.intervals, lengths):
        if u < ln:
            x = lo + u
            break
        u -= ln
    run = induced_cascade_run(base, g, base_set, x, k_steps,
                              max_steps_per_return=max_steps_per_return)
    total_n = run.total_return_time
    total_f = run.total_cocycle()
    telescoped = None
    if run.complete and g.integer_valued and total_n > 0:
        full = birkhoff_sums(base, g, x, total_n)
        telescoped = bool(total_f == int(full[total_n - 1]))
    return {
        "sample_id": i,
        "x": x,
        "complete": run.complete,
        "steps": len(run.steps),
        "total_return_time": total_n,
        "total_cocycle": total_f,
        "telescoping_exact": telescoped,
        "rows": [
            (i, k, s.return_time, s.landing, s.cocycle_sum)
            for k, s in enumerate(run.steps)
        ],
    }


def _wiener_worker(bundle: tuple, i: int) -> dict:
    flow, f, t_values, margin, seed = bundle
    rng = SplitMix64(substream_seed(seed, i))
    t_max = max(t_values)
    for _ in range(10_000):
        x = _sample_flow_point(rng, flow)
        if x.height + t_max + margin < flow.roof.value_at(x.base_pos):
            break
    else:
        raise RuntimeError("could not sample an interior point; roof too low")
    residuals = lemma_tools.local_wiener_check(flow, f, x, list(t_values))
    bound = lemma_tools.wiener_slope_bound(flow, f, x, t_max)
    return {
        "sample_id": i,
        "x": [x.base_pos, x.height],
        "slope_bound": bound,
        "residuals": residuals,
        "rows": [
            (i, t, r, bound * t / 2.0)
            for t, r in zip(t_values, residuals)
        ],
    }


# --------------------------------------------------------------------------
# experiment drivers

def _drive_flow_zeros(cfg: ExperimentConfig, parts: dict, workers: int):
    p = cfg.params
    horizon = float(p["horizon"])
    zero_tol = float(p.get("zero_tol", DEFAULT_ZERO_TOL))
    max_events = p.get("max_events", DEFAULT_MAX_EVENTS)
    min_events = int(p.get("min_events", 10))
    seed = cfg.sampling["seed"]
    count = int(cfg.sampling.get("count", 1))
    in_target = cfg.experiment == "theorem1"
    target = parts.get("target")
    bundle = (parts["flow"], parts["f"], target, horizon, zero_tol,
              max_events, seed, in_target)
    samples = _map_samples(_flow_zeros_worker, bundle, count, workers)
    rows = [r for s in samples for r in s.pop("rows")]
    if in_target:
        min_hits = int(p.get("min_target_events", 3))
        successes = [s["in_target_count"] >= min_hits for s in samples]
        key = "in_target_count"
    else:
        successes = [
            s["event_count"] >= min_events and s["max_residual"] <= zero_tol
            for s in samples
        ]
        key = "event_count"
    aggregate = {
        "success_fraction": sum(successes) / len(successes),
        "events": _summary_stats([s["event_count"] for s in samples]),
        "in_target": _summary_stats([s["in_target_count"] for s in samples]),
        "required_" + key: min_hits if in_target else min_events,
    }
    traces = [Trace("zeros.csv", ("sample_id", "t_k", "in_target", "residual"),
                    rows, plot="zeros")]
    counters = {"samples": count, "events_total": len(rows)}
    return samples, aggregate, traces, counters


def _drive_denisova(cfg: ExperimentConfig, parts: dict, workers: int):
    p = cfg.params
    radii = tuple(float(r) for r in p["radii"])
    bundle = (parts["flow"], parts["f"], radii, float(p["horizon"]),
              float(p.get("zero_tol", DEFAULT_ZERO_TOL)), cfg.sampling["seed"])
    count = int(cfg.sampling.get("count", 1))
    samples = _map_samples(_denisova_worker, bundle, count, workers)
    rows = [r for s in samples for r in s.pop("rows")]
    aggregate = {
        "success_fraction": sum(s["all_radii_consumed"] for s in samples) / count,
        "radii": list(radii),
        "consumed": _summary_stats([s["radii_consumed"] for s in samples]),
    }
    traces = [Trace("zeros.csv", ("sample_id", "t_k", "in_target", "residual"),
                    rows, plot="zeros")]
    return samples, aggregate, traces, {"samples": count, "events_total": len(rows)}


def _drive_cascade_zeros(cfg: ExperimentConfig, parts: dict, workers: int):
    p = cfg.params
    n_steps = int(p["N"])
    bundle = (parts["base"], parts["g"], n_steps, cfg.sampling["seed"])
    count = int(cfg.sampling.get("count", 1))
    samples = _map_samples(_cascade_zeros_worker, bundle, count, workers)
    rows = [r for s in samples for r in s.pop("rows")]
    aggregate = {
        "zero_counts": _summary_stats([s["zero_count"] for s in samples]),
        "min_zero_count": min(s["zero_count"] for s in samples),
    }
    traces = [Trace("zeros.csv", ("sample_id", "t_k", "in_target", "residual"),
                    rows, plot="zeros")]
    counters = {"samples": count, "steps_total": count * n_steps}
    return samples, aggregate, traces, counters


def _drive_shneiberg(cfg: ExperimentConfig, parts: dict, workers: int):
    p = cfg.params
    n_steps = int(p["N"])
    ratio_floor = int(p.get("ratio_floor", 10_000))
    seed = cfg.sampling["seed"]
    bundle = (parts["base"], parts["g"], n_steps, ratio_floor, seed)
    count = int(cfg.sampling.get("count", 1))
    samples = _map_samples(_shneiberg_worker, bundle, count, workers)
    devs = [s["max_tail_ratio_dev"] for s in samples
            if s["max_tail_ratio_dev"] is not None]
    aggregate = {
        "both_lists_nonempty": all(
            s["below_count"] > 0 and s["above_count"] > 0 for s in samples
        ),
        "max_tail_ratio_dev": max(devs) if devs else None,
        "ratio_floor": ratio_floor,
    }
    # the sums trace follows the first sample's orbit
    rng = SplitMix64(substream_seed(seed, 0))
    x0 = rng.uniform()
    sums = birkhoff_sums(parts["base"], parts["g"], x0, min(n_steps, 200_000))
    stride = max(1, sums.size // 100_000)
    rows = [(int(n), sums[n - 1]) for n in range(1, sums.size + 1, stride)]
    traces = [Trace("sums.csv", ("n", "S"), rows, plot="sums")]
    counters = {"samples": count, "steps_total": count * n_steps}
    return samples, aggregate, traces, counters


def _drive_induced(cfg: ExperimentConfig, parts: dict, workers: int):
    p = cfg.params
    bundle = (parts["base"], parts["g"], parts["base_set"], int(p["K"]),
              int(p.get("max_steps_per_return", 10_000_000)),
              cfg.sampling["seed"])
    count = int(cfg.sampling.get("count", 1))
    samples = _map_samples(_induced_worker, bundle, count, workers)
    rows = [r for s in samples for r in s.pop("rows")]
    checked = [s for s in samples if s["telescoping_exact"] is not None]
    aggregate = {
        "all_complete": all(s["complete"] for s in samples),
        "telescoping_exact_all": (
            all(s["telescoping_exact"] for s in checked) if checked else None
        ),
        "return_time_mean": (
            sum(s["total_return_time"] for s in samples)
            / sum(s["steps"] for s in samples)
        ),
    }
    traces = [Trace(
        "induced.csv",
        ("sample_id", "step", "return_time", "landing", "cocycle_sum"),
        rows, plot="induced",
    )]
    return samples, aggregate, traces, {"samples": count}


def _drive_weiss(cfg: ExperimentConfig, parts: dict, workers: int):
    p = cfg.params
    table = weiss_statistic(
        parts["base"], parts["g"],
        [int(n) for n in p["n_values"]], float(p["eps"]),
        int(cfg.sampling.get("count", 1)), cfg.sampling["seed"],
    )
    samples = [{
        "n": n, "fraction": fr, "exceed_count": c,
    } for n, fr, c in zip(table.n_values, table.fractions, table.exceed_counts)]
    aggregate = {
        "eps": table.eps,
        "samples": table.samples,
        "non_increasing": all(
            a >= b for a, b in zip(table.fractions, table.fractions[1:])
        ),
        "final_fraction": table.fractions[-1],
    }
    rows = [(n, fr) for n, fr in zip(table.n_values, table.fractions)]
    traces = [Trace("weiss.csv", ("n", "fraction"), rows, plot="weiss")]
    counters = {"steps_total": table.samples * table.n_values[-1]}
    return samples, aggregate, traces, counters


def _drive_lemma_fuzz(cfg: ExperimentConfig, parts: dict, workers: int):
    p = cfg.params
    report = lemma_tools.lemma_fuzz(
        seed=cfg.sampling["seed"],
        trials=int(p["trials"]),
        degree_cap=int(p.get("degree_cap", 5)),
        piece_cap=int(p.get("piece_cap", 4)),
    )
    samples = [{
        "trial": t, "slack": s,
    } for t, s in enumerate(report.slacks)]
    aggregate = {
        "trials": report.trials,
        "min_slack": report.min_slack,
        "min_slack_witness": report.min_witness,
        "equality_trials": report.equality_trials,
        "max_equality_abs_slack": report.max_equality_abs_slack,
    }
    rows = [(t, s) for t, s in enumerate(report.slacks)]
    traces = [Trace("lemma.csv", ("trial", "slack"), rows, plot="lemma")]
    return samples, aggregate, traces, {"trials": report.trials}


def _drive_wiener(cfg: ExperimentConfig, parts: dict, workers: int):
    p = cfg.params
    t_values = tuple(
        float(t) for t in p.get("t_values", (1e-1, 1e-2, 1e-3, 1e-4, 1e-5))
    )
    bundle = (parts["flow"], parts["f"], t_values,
              float(p.get("interior_margin", 0.05)), cfg.sampling["seed"])
    count = int(cfg.sampling.get("count", 1))
    samples = _map_samples(_wiener_worker, bundle, count, workers)
    rows = [r for s in samples for r in s.pop("rows")]
    bound_ok = all(
        r <= s["slope_bound"] * t / 2.0 + 1e-9
        for s in samples for t, r in zip(t_values, s["residuals"])
    )
    aggregate = {
        "t_values": list(t_values),
        "bound_satisfied": bound_ok,
        "max_residual": max(r for s in samples for r in s["residuals"]),
    }
    traces = [Trace("wiener.csv", ("sample_id", "t", "residual", "bound"),
                    rows, plot="wiener")]
    return samples, aggregate, traces, {"samples": count}


def _drive_phi_trace(cfg: ExperimentConfig, parts: dict, workers: int):
    p = cfg.params
    if "t_values" in p:
        t_values = [float(t) for t in p["t_values"]]
    else:
        t_max = float(p.get("t_max", 10.0))
        t_step = float(p.get("t_step", 0.1))
        n = int(round(t_max / t_step))
        t_values = [i * t_step for i in range(n + 1)]
    values = phi_profile(parts["flow"], parts["f"], parts["x"], t_values)
    samples = [{"t": t, "phi": v} for t, v in zip(t_values, values)]
    aggregate = {
        "points": len(t_values),
        "max_abs_phi": max((abs(v) for v in values), default=0.0),
        "final_phi": values[-1] if values else 0.0,
    }
    rows = list(zip(t_values, values))
    traces = [Trace("phi_trace.csv", ("t", "phi"), rows, plot="phi")]
    return samples, aggregate, traces, {"points": len(t_values)}


_DRIVERS = {
    "flow-zeros": _drive_flow_zeros,
    "theorem1": _drive_flow_zeros,
    "denisova": _drive_denisova,
    "cascade-zeros": _drive_cascade_zeros,
    "shneiberg-discrete": _drive_shneiberg,
    "induced": _drive_induced,
    "weiss": _drive_weiss,
    "lemma-fuzz": _drive_lemma_fuzz,
    "wiener": _drive_wiener,
    "phi-trace": _drive_phi_trace,
}


def run(config: ExperimentConfig | dict, *, output_dir: str | Path | None = None,
        seed: int | None = None, workers: int = 1,
        make_plots: bool = True) -> RunReport:
    """Execute one experiment config and emit its report artifacts.

    ``seed`` and ``output_dir`` override the corresponding config fields
    and are folded into the echoed config, so the echo always describes
    exactly what ran.
    """
    if isinstance(config, dict):
        config = ExperimentConfig.from_dict(config)
    if seed is not None:
        sampling = dict(config.sampling or {})
        sampling["seed"] = seed
        config = ExperimentConfig(**{**config.__dict__, "sampling": sampling})
    if output_dir is not None:
        config = ExperimentConfig(**{**config.__dict__, "output": str(output_dir)})

    violations = validate(config)
    if violations:
        raise ConfigError(violations)

    t_start = time.perf_counter()
    parts = resolve(config)
    samples, aggregate, traces, counters = _DRIVERS[config.experiment](
        config, parts, workers
    )
    wall = time.perf_counter() - t_start

    report: dict[str, Any] = {
        "experiment": config.experiment,
        "config": config.to_dict(),
        "samples": _jsonify(samples),
        "aggregate": _jsonify(aggregate),
        "counters": _jsonify(counters),
        "timing": {"wall_clock_s": wall},
    }
    if config.system is not None:
        report["system_meta"] = _jsonify(system_meta(config.system))

    files: list[str] = []
    out = Path(config.output) if config.output else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        text = json.dumps(report, sort_keys=True, indent=2) + "\n"
        (out / "report.json").write_text(text, encoding="utf-8")
        files.append("report.json")
        for trace in traces:
            files.append(_write_trace(trace, out))
        if make_plots:
            from . import plots
            for trace in traces:
                png = plots.render_trace(trace, out)
                if png is not None:
                    files.append(png)
    return RunReport(report=report, output_dir=out, files=tuple(files))
