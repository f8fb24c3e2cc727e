"""Sum-rate analysis and type selection for RIS-assisted multi-user downlinks."""

from .capacity import (
    CapacityReport,
    PowerAllocation,
    allocate_power,
    closed_form_rate,
    hybrid_rate,
    hybrid_reflect_fraction,
    monte_carlo_capacity,
    reflective_rate,
    transmissive_rate,
    upper_bound,
)
from .channel import (
    ChannelMatrix,
    DegenerateGeometryError,
    FADING_LAWS,
    LinkBudget,
    aggregated_gain_statistics,
    dump_channel,
    link_budget,
    prepare_sampler,
    sample_channel,
    zone_gain_statistics,
)
from .scenario import (
    ConfigError,
    ConfigSyntaxError,
    ConfigValidationError,
    RegimeReport,
    RisPanel,
    RisType,
    ScenarioConfig,
    config_digest,
    dbm_to_watts,
    incident_angle_factor,
    load_scenario,
    parse_scenario,
    validate_approximation_regime,
    watts_to_dbm,
)
from .selection import (
    AsymptoticDiagnostics,
    CertificateError,
    DerivativeDominanceReport,
    MonotonicityCertificate,
    RegimeViolationError,
    SelectionDecision,
    SelectionThresholds,
    asymptotic_checks,
    brute_force_optimal,
    decide_type,
    derivative_dominance,
    find_thresholds,
    monotonicity_certificate,
)

__version__ = "0.1.0"
