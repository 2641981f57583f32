"""Period-aware asymptotic gains for stable linear and Lurie-type systems.

Compute exact periodic input-output gains of stable linear systems,
conservative bounds for nonlinear systems with quadratic remainder
constants, and validate both against simulated periodic steady states.
"""

from .errors import (
    DivergedError,
    EigenSolverError,
    EmptyInputError,
    ExpOverflowError,
    InvalidBoundError,
    NoConvergeError,
    NoSteadyStateError,
    NotHurwitzError,
    PagkitError,
    PeriodSingularError,
    StructureMismatchError,
    SupSearchError,
    UnboundedSuspectError,
)
from .gains import (
    Branch,
    LinearPag,
    NonlinearPagResult,
    Sharpness,
    SubsystemPags,
    classical_ag_slope,
    linear_pag,
    linear_pag_conservative,
    mu_slope,
    nonlinear_pag_general,
    nonlinear_pag_special,
    quad_resolve,
    sharpness_compare,
    subsystem_pags,
)
from .linops import (
    ImpulseGrid,
    dc_transfer,
    frequency_response,
    impulse_response,
    is_hurwitz,
    matrix_exponential,
    periodic_impulse_response,
)
from .median import MedianResult, geometric_median, mad_about, scalar_median
from .model import (
    DEFAULT_GRID_SIZE,
    Composition,
    GainCurve,
    GainRow,
    NonlinearSystem,
    RhoVector,
    SampledSignal,
    StateSpace,
    Structure,
    acdc_decompose,
    composition_rho,
    rho_of,
)
from .pll import PllParams, estimate_Mf, pll_system
from .sim import (
    ContractionReport,
    InputKind,
    InputSpec,
    PeriodicSteadyState,
    Trajectory,
    bangbang_worst_input,
    contraction_check,
    estimate_b,
    integrate,
    periodic_steady_state,
    periodic_steady_state_batch,
    random_harmonic_input,
)

__version__ = "0.1.0"
