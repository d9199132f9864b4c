"""Sign-error-rate control for simultaneous inference in the normal means model."""

from ._backend import backend_name
from .errors import (
    BracketError,
    DegenerateFitError,
    DegenerateRegionError,
    InfeasibleError,
    InsufficientDataError,
    QuadratureError,
    SignGateError,
)
from .numerics import Interval
from .distributions import (
    AsymmetricLaplace,
    EffectDistribution,
    NormalEffect,
    ShiftedChiSq,
    SpikeSlab,
    effect_from_config,
    fit_ald_moments,
)
from .error_rates import AcceptanceRegion, RateTriple, b1, b2, lemma_bound, rate_triple
from .procedures import (
    Dataset,
    DecisionSet,
    by_procedure,
    count_sign_errors,
    decide,
    joint_optimize,
    lc_procedure,
    nlc_procedure,
    optimize_s,
    tce_procedure,
    tco_alpha,
    two_sided_pvalues,
)
from .simulation import (
    Lemma1Result,
    Prop1Row,
    ProcedureOutcome,
    ReplicateResult,
    ReportRow,
    Scenario,
    ScenarioReport,
    calibrate_tau_grid,
    lemma1_diagnostic,
    load_scenarios,
    prop1_diagnostic,
    replicate_rng,
    reports_to_csv,
    run_replicate,
    run_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "backend_name",
    "SignGateError",
    "BracketError",
    "QuadratureError",
    "DegenerateRegionError",
    "DegenerateFitError",
    "InfeasibleError",
    "InsufficientDataError",
    "Interval",
    "EffectDistribution",
    "AsymmetricLaplace",
    "SpikeSlab",
    "ShiftedChiSq",
    "NormalEffect",
    "fit_ald_moments",
    "effect_from_config",
    "AcceptanceRegion",
    "RateTriple",
    "b1",
    "b2",
    "rate_triple",
    "lemma_bound",
    "Dataset",
    "DecisionSet",
    "two_sided_pvalues",
    "decide",
    "by_procedure",
    "lc_procedure",
    "nlc_procedure",
    "tco_alpha",
    "tce_procedure",
    "optimize_s",
    "joint_optimize",
    "count_sign_errors",
    "Scenario",
    "ProcedureOutcome",
    "ReplicateResult",
    "ReportRow",
    "ScenarioReport",
    "replicate_rng",
    "run_replicate",
    "run_scenario",
    "reports_to_csv",
    "Lemma1Result",
    "lemma1_diagnostic",
    "Prop1Row",
    "prop1_diagnostic",
    "calibrate_tau_grid",
    "load_scenarios",
]
