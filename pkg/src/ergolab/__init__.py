"""ergolab: desk-scale experiments on special flows and cylindrical cascades.

The library builds concrete measure-preserving systems (rotations and
interval exchanges of [0, 1), unit-speed flows under piecewise-constant
roofs), evaluates trajectory integrals of piecewise-polynomial observables
in closed form, and searches orbits for the recurrence phenomena those
systems exhibit: exact zeros of integer Birkhoff sums, integral zeros of
flows (optionally constrained to land in a target set), conservativity
checks for induced cascades, and the image-measure bound for indefinite
integrals.  The ``ergolab`` CLI runs seeded, reproducible experiment
configs and emits JSON reports with CSV traces and rendered figures.
"""

from .base_systems import (
    BaseSet,
    HorizonExhausted,
    IntervalExchange,
    ReturnStep,
    Rotation,
    UnitIntervalMap,
    circle_distance,
    first_return,
)
from .cascades import (
    CascadeState,
    FiberOverflowError,
    InducedRun,
    SignTimes,
    StepFunction,
    WeissTable,
    birkhoff_sums,
    cascade_step,
    induced_cascade_run,
    shneiberg_sign_times,
    sum_zero_times,
    weiss_statistic,
)
from .lemma_tools import (
    FuzzReport,
    ImageMeasureResult,
    IntervalUnion,
    LemmaViolation,
    Poly1D,
    image_measure,
    lemma_fuzz,
    local_wiener_check,
    wiener_slope_bound,
)
from .observables import (
    Observable,
    PhiResult,
    constant_observable,
    indicator_observable,
    max_abs,
    mean,
    mean_center,
    occupation_time,
    phi,
    phi_profile,
    piecewise_observable,
)
from .special_flow import (
    FlowPoint,
    Roof,
    SpecialFlow,
    TargetSet,
    TrajectorySegment,
    advance,
    flow_distance,
)
from .zero_lab import (
    AbParams,
    IdenticallyZeroObservable,
    PairMatch,
    PairSearchStats,
    ZeroEvent,
    ab_membership,
    canonical_setup,
    denisova_returns,
    find_integral_zeros,
    joint_pair_search,
)

__version__ = "0.1.0"
