"""Cox intensity models for sentiment-labeled event streams on evolving
directed follow networks: incremental network covariates, maximum partial
likelihood with Wald inference, a counting-process simulator, and a
label-misclassification robustness resampler."""

__version__ = "0.1.0"

from .covariates import CovariateCache, CovariateSpec, Covariate, FOCAL_NAMES, FULL_NAMES
from .estimator import CoxIntensityModel
from .events import (
    Event,
    EventKind,
    EventLog,
    LogParseError,
    SentimentLabel,
    parse_log,
    serialize_log,
    window,
    write_log,
)
from .fitter import FitConfig, FitResult, Significance, fit, fit_trace, wald_significance
from .likelihood import (
    BaselineHazard,
    LikelihoodTrace,
    LikelihoodValue,
    RiskSetPolicy,
    breslow_baseline,
    build_trace,
    evaluate,
    log_partial_likelihood,
)
from .resampler import (
    ConfusionModel,
    RealizationProfile,
    estimate_confusion,
    reclassify,
    run_profile,
)
from .simulator import SimConfig, SimOutput, SimulationOverflowError, make_network, simulate
from .state import NetworkState, TweetCounters

__all__ = [
    "__version__",
    "BaselineHazard",
    "ConfusionModel",
    "Covariate",
    "CovariateCache",
    "CovariateSpec",
    "CoxIntensityModel",
    "Event",
    "EventKind",
    "EventLog",
    "FitConfig",
    "FitResult",
    "FOCAL_NAMES",
    "FULL_NAMES",
    "LikelihoodTrace",
    "LikelihoodValue",
    "LogParseError",
    "NetworkState",
    "RealizationProfile",
    "RiskSetPolicy",
    "SentimentLabel",
    "Significance",
    "SimConfig",
    "SimOutput",
    "SimulationOverflowError",
    "TweetCounters",
    "breslow_baseline",
    "build_trace",
    "estimate_confusion",
    "evaluate",
    "fit",
    "fit_trace",
    "log_partial_likelihood",
    "make_network",
    "parse_log",
    "reclassify",
    "run_profile",
    "serialize_log",
    "simulate",
    "wald_significance",
    "window",
    "write_log",
]
