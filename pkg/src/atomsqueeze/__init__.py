"""Simulation and control optimization for a coherently driven two-level
atom under homodyne monitoring with Markovian feedback."""

__version__ = "0.1.0"

from .errors import (
    AtomSqueezeError,
    ChannelSumError,
    ExceptionalCase,
    FeedbackWithoutChannel1,
    InsufficientData,
    InvalidConfig,
    InvalidPoint,
    NegativeParameter,
    NoFeasiblePoint,
    SingularDrift,
    SingularResolvent,
    StepRejected,
)
from .model import (
    BlochVector,
    ControlConfig,
    atomic_squeezing,
    bloch_from_density,
    config_from_dict,
    config_to_dict,
    density_from_bloch,
    load_config,
    parse_angle,
    sigma_phase,
    validate_config,
    validate_density,
)
from .dynamics import (
    DriftModel,
    apply_liouvillian,
    build_drift,
    exceptional_conditions,
    is_exceptional,
    propagate_apriori,
    steady_state,
)
from .spectrum import (
    ChannelVectors,
    SpectrumCurve,
    channel_vectors,
    mean_squeezing,
    sigma2,
    sigma2_numeric,
    spectrum_minimum,
    spectrum_sweep,
    spectrum_value,
    spectrum_values,
)
from .trajectory import (
    PeriodogramAccumulator,
    SimulationPlan,
    TrajectoryRecord,
    ensemble_bloch_stats,
    periodogram_spectrum,
    simulate_ensemble,
    simulate_trajectory,
    sme_step,
)
from .control_search import (
    SearchResult,
    SearchSpec,
    evaluate_objective,
    load_search_spec,
    optimize,
    spec_from_dict,
)
