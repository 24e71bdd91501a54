"""Recurrence and transience of random walks on layered environments.

A walk on Z^d x Z moves vertically between strata with probabilities
p_n (up) and q_n (down) and horizontally within stratum n by r_n mu_n.
This package builds the derived scalar sequences of such an environment,
the directional flux variances, the continued-fraction characteristic
function of a vertical excursion, and the series whose divergence
decides recurrence; Monte Carlo samplers cross-check each analytic
route.
"""

from .cfrac import (
    EvalResult,
    ExtinctionEstimate,
    SPCoefficients,
    SPViolation,
    WalkCoefficients,
    convergents,
    evaluate,
    gw_extinction,
    gw_gf,
    reverse_check,
    weighted_excursion_gf,
)
from .chi import ChiEvaluation, ChiEvaluator, R_error, SmallnessViolation, chi_D, reflect
from .criterion import (
    Classification,
    ClassifyOptions,
    CriterionEvaluator,
    chung_fuchs_integral,
    classify,
    criterion_term,
    halfpipe_classify,
    transience_sufficient,
)
from .environment import (
    AntisymPowerLaw,
    CampaninoPetritis,
    ConfigError,
    HalfPipe,
    Homogeneous,
    HorizontalLaw,
    StratifiedEnvironment,
    StratumLaw,
    Tabulated,
    ValidationReport,
    environment_from_config,
    family,
    perturb_one_stratum,
    validate,
)
from .expansion import (
    CoefficientTable,
    delta_poly,
    direct_quadratic,
    flux_tables,
    kappa_from_delta,
    series_value,
    v1_lower_bound,
    verify_against_direct,
)
from .flux import Direction, FluxProfile, PhiFamily, phi_family, u_grid
from .montecarlo import (
    ExcursionBatch,
    WalkPath,
    collect_run_lengths,
    empirical_chf,
    gw_extinction_mc,
    make_rng,
    sample_excursions,
    simulate,
    transition_counts,
    vertical_path,
)
from .sequences import (
    MonotoneCache,
    MonotonicityError,
    SequenceSet,
    build,
    generalized_inverse,
    vertical_classification,
)

__version__ = "0.1.0"

__all__ = [
    "AntisymPowerLaw",
    "CampaninoPetritis",
    "ChiEvaluation",
    "ChiEvaluator",
    "Classification",
    "ClassifyOptions",
    "CoefficientTable",
    "ConfigError",
    "CriterionEvaluator",
    "Direction",
    "EvalResult",
    "ExcursionBatch",
    "ExtinctionEstimate",
    "FluxProfile",
    "HalfPipe",
    "Homogeneous",
    "HorizontalLaw",
    "MonotoneCache",
    "MonotonicityError",
    "PhiFamily",
    "R_error",
    "SPCoefficients",
    "SPViolation",
    "SequenceSet",
    "SmallnessViolation",
    "StratifiedEnvironment",
    "StratumLaw",
    "Tabulated",
    "ValidationReport",
    "WalkCoefficients",
    "WalkPath",
    "build",
    "chi_D",
    "chung_fuchs_integral",
    "classify",
    "collect_run_lengths",
    "convergents",
    "criterion_term",
    "delta_poly",
    "direct_quadratic",
    "empirical_chf",
    "environment_from_config",
    "evaluate",
    "family",
    "flux_tables",
    "generalized_inverse",
    "gw_extinction",
    "gw_extinction_mc",
    "gw_gf",
    "halfpipe_classify",
    "kappa_from_delta",
    "make_rng",
    "perturb_one_stratum",
    "phi_family",
    "reflect",
    "reverse_check",
    "sample_excursions",
    "series_value",
    "simulate",
    "transience_sufficient",
    "transition_counts",
    "u_grid",
    "v1_lower_bound",
    "validate",
    "verify_against_direct",
    "vertical_classification",
    "vertical_path",
    "weighted_excursion_gf",
]
