"""Achievable rate regions of RIS-assisted MIMO broadcast channels with
rate splitting, proper or improper Gaussian signaling and I/Q imbalance."""

__version__ = "0.1.0"

from .ao import AoState, RegionPoint, StopRule, ao_iterate, initial_state, run_ao
from .errors import (
    ConditioningError,
    ConfigurationError,
    ConstraintViolationError,
    RisRegionError,
    SolverError,
    ValidationError,
)
from .inner import SolveReport, normalize_phases, solve_covariance_surrogate, solve_ris_surrogate
from .rates import (
    CovarianceSet,
    SignalingStructure,
    best_allocation,
    common_rate,
    common_rate_at_user,
    private_rate,
    project_proper,
    user_total_rate,
)
from .region import sweep_region, sweep_schemes, tdma_timesharing, ts_objective
from .scenario import (
    DEFAULT_IQI,
    IqiConfig,
    ScenarioConfig,
    fixture_config,
    generate_scene,
    load_fixed_realization,
)
from .schemes import SchemeConfig, parse_scheme
from .surrogate import (
    build_common_cov_bound,
    build_common_phase_bound,
    build_private_cov_bound,
    build_private_phase_bound,
    linearize_unit_modulus,
)
from .wlmodel import (
    ComplexScene,
    IqiProfile,
    LinkModel,
    RealLink,
    RisPhases,
    build_iqi_matrices,
    compose_effective_channel,
    real_decompose,
    real_links,
)
