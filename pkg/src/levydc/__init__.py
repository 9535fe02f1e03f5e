"""Strong-pathwise simulation of Levy-driven SDEs with cut jump measures."""

from .dynamic_cutting import (
    CutParams,
    JumpStream,
    compensated_drift,
    conditional_size_cdf,
    conditional_size_inverse,
    empirical_laplace_check,
    intensity_lambda,
    inverse_jump_size_cdf,
    inverse_lambda,
    jump_size_cdf,
    sample_jump_sizes,
    sample_jump_stream,
    sample_jump_times,
    small_jump_variance_rate,
)
from .engine import (
    CouplingError,
    DrivingNoise,
    MergedGrid,
    PathDivergenceError,
    PathRecord,
    build_merged_grid,
    prepare_noise,
    simulate_batch,
    simulate_path,
)
from .fixed_cutting import (
    ArParams,
    ar_intensity,
    ar_sample_jumps,
    ar_small_jump_variance,
)
from .harness import (
    ComparisonResult,
    ErrorTable,
    ExperimentConfig,
    estimate_lp,
    fit_convergence_order,
    h_for_variance_match,
    rate_hint,
    run_comparison,
    strong_error,
)
from .measures import (
    DegenerateModelError,
    IntegrabilityError,
    LevyModel,
    PlateauError,
    TruncatedStableModel,
    check_tail_pruitt_equivalence,
)
from .rng import TrajectorySeeds
from .sde import (
    CoefficientSet,
    large_jump_compensator,
    make_sin_cos_example,
    sigma_small_sq,
)

__version__ = "0.1.0"
