"""Experiment configuration: a single JSON document, validated up front.

One config fully determines one experiment: the base system, roof,
observable, target, numeric parameters, and the sampling seed.  Rotation
angles may be given as decimals, as exact rationals ``{"p": ..., "q": ...}``
(useful for periodic oracle cases), or as the string ``"golden"``; the
report echoes which form was used.  Step-function cells may carry exact
rational endpoints as ``"p/q"`` strings, which enables exact zero-mean
checks downstream.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from ..base_systems import BaseSet, IntervalExchange, Rotation, UnitIntervalMap
from ..cascades import StepFunction
from ..observables import (
    Observable,
    indicator_observable,
    mean,
    mean_center,
    piecewise_observable,
)
from ..special_flow import Roof, SpecialFlow, TargetSet

EXPERIMENTS = (
    "cascade-zeros",
    "shneiberg-discrete",
    "flow-zeros",
    "theorem1",
    "denisova",
    "induced",
    "weiss",
    "lemma-fuzz",
    "wiener",
    "phi-trace",
)

#: experiments whose flows/cascades assume a centred observable
_ZERO_MEAN_EXPERIMENTS = {"cascade-zeros", "flow-zeros", "theorem1", "denisova"}

_FLOW_EXPERIMENTS = {"flow-zeros", "theorem1", "denisova", "wiener", "phi-trace"}
_CASCADE_EXPERIMENTS = {"cascade-zeros", "shneiberg-discrete", "weiss", "induced"}

GOLDEN_RATIO = (1.0 + math.sqrt(5.0)) / 2.0
GOLDEN_ROTATION = (math.sqrt(5.0) - 1.0) / 2.0

_TOP_KEYS = {
    "experiment", "system", "roof", "observable", "target",
    "params", "sampling", "output",
}


class ConfigError(ValueError):
    """Structured validation failure listing every violated constraint."""

    def __init__(self, violations: list[str]) -> None:
        super().__init__("invalid configuration:\n" + "\n".join(
            f"  - {v}" for v in violations
        ))
        self.violations = violations


@dataclass
class ExperimentConfig:
    """Parsed but unresolved experiment description (raw JSON values)."""

    experiment: str
    system: dict | None = None
    roof: dict | None = None
    observable: dict | None = None
    target: dict | None = None
    params: dict = field(default_factory=dict)
    sampling: dict | None = None
    output: str | None = None

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ExperimentConfig":
        unknown = sorted(set(d) - _TOP_KEYS)
        if unknown:
            raise ConfigError([f"unknown top-level key {k!r}" for k in unknown])
        if "experiment" not in d:
            raise ConfigError(["missing required key 'experiment'"])
        return cls(
            experiment=d["experiment"],
            system=d.get("system"),
            roof=d.get("roof"),
            observable=d.get("observable"),
            target=d.get("target"),
            params=dict(d.get("params") or {}),
            sampling=d.get("sampling"),
            output=d.get("output"),
        )

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"experiment": self.experiment, "params": self.params}
        for key in ("system", "roof", "observable", "target", "sampling", "output"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        return out


def _as_number(v: Any, what: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValueError(f"{what} must be a number; got {v!r}")
    return float(v)


def build_map(system: dict) -> UnitIntervalMap:
    kind = system.get("kind")
    if kind == "rotation":
        alpha = system.get("alpha")
        if alpha == "golden":
            return Rotation(GOLDEN_ROTATION)
        if isinstance(alpha, dict):
            p, q = alpha.get("p"), alpha.get("q")
            if not (isinstance(p, int) and isinstance(q, int) and 0 < p < q):
                raise ValueError(
                    "rational rotation angle needs integers 0 < p < q"
                )
            return Rotation(p / q)
        return Rotation(_as_number(alpha, "rotation angle"))
    if kind == "iet":
        lengths = system.get("lengths")
        permutation = system.get("permutation")
        if not isinstance(lengths, list) or not isinstance(permutation, list):
            raise ValueError("iet system needs 'lengths' and 'permutation' lists")
        return IntervalExchange(
            tuple(_as_number(v, "iet length") for v in lengths),
            tuple(permutation),
        )
    raise ValueError(f"system kind must be 'rotation' or 'iet'; got {kind!r}")


def system_meta(system: dict) -> dict:
    """How the base angle was specified (recorded in the report)."""
    if system.get("kind") == "rotation":
        alpha = system.get("alpha")
        if alpha == "golden":
            return {"alpha_kind": "golden", "alpha": GOLDEN_ROTATION}
        if isinstance(alpha, dict):
            return {"alpha_kind": "rational", "alpha": alpha["p"] / alpha["q"]}
        return {"alpha_kind": "decimal", "alpha": float(alpha)}
    return {"alpha_kind": "iet"}


def _roof_value(v: Any) -> float:
    if v == "golden":
        return GOLDEN_RATIO
    return _as_number(v, "roof value")


def build_roof(roof: dict) -> Roof:
    if "constant" in roof:
        return Roof.constant(_roof_value(roof["constant"]))
    bp = roof.get("breakpoints")
    values = roof.get("values")
    if not isinstance(bp, list) or not isinstance(values, list):
        raise ValueError("roof needs 'breakpoints' and 'values' lists (or 'constant')")
    return Roof(
        tuple(_as_number(b, "roof breakpoint") for b in bp),
        tuple(_roof_value(v) for v in values),
    )


def build_observable(observable: dict, roof: Roof, flow: SpecialFlow) -> Observable:
    preset = observable.get("preset")
    if preset is not None:
        interval = observable.get("interval")
        if (not isinstance(interval, list) or len(interval) != 2):
            raise ValueError(f"preset {preset!r} needs 'interval': [lo, hi]")
        lo, hi = (_as_number(v, "interval endpoint") for v in interval)
        if preset == "indicator":
            return indicator_observable(roof, lo, hi)
        if preset == "centered-indicator":
            return mean_center(indicator_observable(roof, lo, hi), flow)
        raise ValueError(f"unknown observable preset {preset!r}")
    pieces = observable.get("pieces")
    if not isinstance(pieces, list) or not pieces:
        raise ValueError("observable needs 'pieces' or a 'preset'")
    parsed = []
    for piece in pieces:
        interval = piece.get("interval")
        coeffs = piece.get("coeffs")
        if not isinstance(interval, list) or len(interval) != 2:
            raise ValueError("each observable piece needs 'interval': [lo, hi]")
        if not isinstance(coeffs, list) or not coeffs:
            raise ValueError("each observable piece needs nonempty 'coeffs'")
        parsed.append((
            _as_number(interval[0], "piece endpoint"),
            _as_number(interval[1], "piece endpoint"),
            tuple(_as_number(c, "coefficient") for c in coeffs),
        ))
    f = piecewise_observable(roof, parsed)
    if observable.get("mean_center"):
        f = mean_center(f, flow)
    return f


def _cell_endpoint(v: Any) -> tuple[float, Fraction | None]:
    if isinstance(v, str):
        fr = Fraction(v)
        return float(fr), fr
    return _as_number(v, "cell endpoint"), None


def build_step_function(observable: dict) -> StepFunction:
    cells = observable.get("cells")
    if not isinstance(cells, list) or not cells:
        raise ValueError("cascade observable needs a 'cells' list")
    integer = bool(observable.get("integer", False))
    parsed = []
    exact: list[tuple[Fraction, Fraction]] | None = []
    for cell in cells:
        interval = cell.get("interval")
        if not isinstance(interval, list) or len(interval) != 2:
            raise ValueError("each cell needs 'interval': [lo, hi]")
        value = cell.get("value")
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError("each cell needs a numeric 'value'")
        if integer and not isinstance(value, int):
            raise ValueError("integer step function cells need integer values")
        lo, lo_fr = _cell_endpoint(interval[0])
        hi, hi_fr = _cell_endpoint(interval[1])
        parsed.append((lo, hi, value))
        if exact is not None and lo_fr is not None and hi_fr is not None:
            exact.append((lo_fr, hi_fr))
        else:
            exact = None
    if exact is not None:
        cells_exact = sorted(
            (lo_fr, hi_fr, v)
            for (lo_fr, hi_fr), (_, _, v) in zip(exact, parsed)
        )
        return StepFunction.from_rational_cells(cells_exact, integer=integer)
    return StepFunction.from_cells(sorted(parsed), integer=integer)


def build_target(target: dict, flow: SpecialFlow, f: Observable | None) -> TargetSet:
    preset = target.get("preset")
    if preset == "upper-level":
        if f is None:
            raise ValueError("upper-level target needs an observable")
        fraction = _as_number(target.get("fraction", 0.5), "level fraction")
        if not 0.0 < fraction <= 1.0:
            raise ValueError("level fraction must lie in (0, 1]")
        if any(len(row) != 1 for row in f.coeffs):
            raise ValueError(
                "upper-level target needs a height-constant observable"
            )
        level = fraction * max(row[0] for row in f.coeffs)
        bp = f.breakpoints
        rects = tuple(
            (bp[j], bp[j + 1], 0.0, flow.roof.value_at(bp[j]))
            for j, row in enumerate(f.coeffs)
            if row[0] >= level
        )
        if not rects:
            raise ValueError("upper-level target is empty at this fraction")
        result = TargetSet(rects)
    elif preset is not None:
        raise ValueError(f"unknown target preset {preset!r}")
    else:
        rects = target.get("rectangles")
        if not isinstance(rects, list) or not rects:
            raise ValueError("target needs 'rectangles' or a 'preset'")
        result = TargetSet(tuple(
            tuple(_as_number(v, "rectangle coordinate") for v in r)
            for r in rects
        ))
    result.check_within(flow)
    return result


def build_base_set(target: dict) -> BaseSet:
    intervals = target.get("intervals")
    if not isinstance(intervals, list) or not intervals:
        raise ValueError("base-level target needs an 'intervals' list")
    return BaseSet(tuple(
        (_as_number(iv[0], "interval endpoint"), _as_number(iv[1], "interval endpoint"))
        for iv in intervals
    ))


_REQUIRED_SECTIONS = {
    "phi-trace": ("system", "roof", "observable"),
    "flow-zeros": ("system", "roof", "observable", "sampling"),
    "theorem1": ("system", "roof", "observable", "target", "sampling"),
    "denisova": ("system", "roof", "observable", "sampling"),
    "wiener": ("system", "roof", "observable", "sampling"),
    "cascade-zeros": ("system", "observable", "sampling"),
    "shneiberg-discrete": ("system", "observable", "sampling"),
    "weiss": ("system", "observable", "sampling"),
    "induced": ("system", "observable", "target", "sampling"),
    "lemma-fuzz": ("sampling",),
}

_REQUIRED_PARAMS = {
    "phi-trace": ("x",),
    "flow-zeros": ("horizon",),
    "theorem1": ("horizon",),
    "denisova": ("horizon", "radii"),
    "wiener": (),
    "cascade-zeros": ("N",),
    "shneiberg-discrete": ("N",),
    "weiss": ("n_values", "eps"),
    "induced": ("K",),
    "lemma-fuzz": ("trials",),
}


def resolve(config: ExperimentConfig) -> dict[str, Any]:
    """Build every object a config references; raises ValueError on the
    first inconsistency.  ``validate`` wraps this to collect all of them."""
    exp = config.experiment
    parts: dict[str, Any] = {}
    if exp in _FLOW_EXPERIMENTS:
        base = build_map(config.system or {})
        roof = build_roof(config.roof or {})
        flow = SpecialFlow(base, roof)
        f = build_observable(config.observable or {}, roof, flow)
        parts.update(flow=flow, f=f)
        if config.target is not None:
            parts["target"] = build_target(config.target, flow, f)
        if "x" in config.params:
            x = config.params["x"]
            if not isinstance(x, list) or len(x) != 2:
                raise ValueError("params.x must be [base_pos, height]")
            parts["x"] = flow.point(float(x[0]), float(x[1]))
    elif exp in _CASCADE_EXPERIMENTS:
        base = build_map(config.system or {})
        g = build_step_function(config.observable or {})
        parts.update(base=base, g=g)
        if exp == "induced":
            parts["base_set"] = build_base_set(config.target or {})
    return parts


def validate(config: ExperimentConfig | dict) -> list[str]:
    """Every violated structural constraint, as human-readable strings.

    An empty list means the config is runnable.  A nonzero observable
    mean in an experiment that assumes zero mean is emitted as a
    ``UserWarning`` rather than a violation.
    """
    violations: list[str] = []
    if isinstance(config, dict):
        try:
            config = ExperimentConfig.from_dict(config)
        except ConfigError as exc:
            return list(exc.violations)

    if config.experiment not in EXPERIMENTS:
        violations.append(
            f"unknown experiment {config.experiment!r}; "
            f"expected one of {', '.join(EXPERIMENTS)}"
        )
        return violations

    for section in _REQUIRED_SECTIONS[config.experiment]:
        if getattr(config, section) is None:
            violations.append(f"experiment {config.experiment!r} needs section {section!r}")
    for key in _REQUIRED_PARAMS[config.experiment]:
        if key not in config.params:
            violations.append(f"experiment {config.experiment!r} needs params.{key}")

    if config.sampling is not None:
        if "seed" not in config.sampling:
            violations.append("sampling.seed is mandatory for seeded experiments")
        elif not isinstance(config.sampling["seed"], int):
            violations.append("sampling.seed must be an integer")
        count = config.sampling.get("count")
        if count is not None and (not isinstance(count, int) or count < 1):
            violations.append("sampling.count must be a positive integer")

    if violations:
        return violations

    try:
        parts = resolve(config)
    except (ValueError, TypeError) as exc:
        violations.append(str(exc))
        return violations

    if config.experiment == "cascade-zeros" and not parts["g"].integer_valued:
        violations.append(
            "cascade-zeros needs an integer-valued step function "
            "(set observable.integer: true)"
        )

    if config.experiment in _ZERO_MEAN_EXPERIMENTS:
        if "f" in parts:
            m = mean(parts["f"], parts["flow"])
        elif "g" in parts:
            exact = parts["g"].exact_mean()
            m = float(exact) if exact is not None else parts["g"].mean()
        else:
            m = 0.0
        if abs(m) > 1e-10:
            warnings.warn(
                f"experiment {config.experiment!r} assumes a zero-mean "
                f"observable but the mean is {m!r}",
                stacklevel=2,
            )
    return violations
