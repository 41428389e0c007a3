"""Interval-valued conditional failure rates of overhead lines via credal networks."""

__version__ = "0.1.0"

from .cfr import (
    CfrNetworkSpec,
    CredibleMode,
    DirichletMode,
    IdmMode,
    OperatingRecord,
    Scenario,
    build_cfr_network,
    case_study_network,
    case_study_scenarios,
    case_study_spec,
    case_study_weights,
    classify_record,
    count_contingencies,
    evaluate_scenario,
)
from .credal import (
    CategoricalVariable,
    CredalNetwork,
    Evidence,
    IntervalCPT,
    bayes_infer,
    credal_infer,
    credal_infer_soft,
    enumerate_extreme_mass_functions,
)
from .estimation import (
    ProbabilityInterval,
    RateObservation,
    chi_square_rate_interval,
    clt_rate_interval,
    dirichlet_posterior_mean,
    idm_credible_interval,
    idm_interval,
)
from .exceptions import (
    CombinatorialBudgetError,
    ConfigError,
    CredalCfrError,
    DomainError,
    EmptyCredalSetError,
    EstimatorInapplicableError,
    InconsistentEvidenceError,
    NetworkError,
)
from .oltsim import ConvergenceTrace, SimulationConfig, run_convergence_study, simulate
