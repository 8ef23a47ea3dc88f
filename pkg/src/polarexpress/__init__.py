"""Polar factors of rectangular matrices by optimal compositions of odd polynomials."""

from .accel import (
    FastApplyConfig,
    PowerEstimate,
    fast_apply,
    init_cubic,
    power_lower_bound,
    should_use_fast,
    spectrum_aware_init,
)
from .bench import SpectrumSpec, gen_matrix, parse_spectrum, run_convergence, write_csv
from .engine import (
    BASELINES,
    BaselineRegistry,
    ConvergenceReport,
    MatrixBuffer,
    NonFiniteError,
    apply_schedule,
    exact_polar,
    metrics,
    normalize,
    poly_step,
    read_matrix,
    write_matrix,
)
from .minimax import (
    EquioscillationCertificate,
    OddPolynomial,
    RemezConvergenceError,
    eval_poly,
    optimal_cubic,
    remez_quintic,
    verify_equioscillation,
)
from .schedule import (
    Interval,
    Schedule,
    ScheduleFormatError,
    build_schedule,
    certified_error,
    load_schedule,
    save_schedule,
    scalar_compose,
)

__version__ = "0.1.0"
