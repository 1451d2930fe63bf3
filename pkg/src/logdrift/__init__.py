"""Log template count vectors and windowed Bayes-factor drift monitoring."""

from .core import (
    CountVector,
    DirichletState,
    ProbabilityVector,
    Template,
    TemplateSet,
    elementwise_mean,
    normalize,
)
from .detector import (
    BfTrace,
    Detector,
    DetectorConfig,
    TraceEntry,
    build_prior,
    first_detection,
    log_multivariate_beta,
    run,
)
from .multinomial import FitReport, SdDiagnostic, chi_squared_fit, chi_squared_sf, mle, sd_diagnostic
from .simulator import (
    RunMetrics,
    ScenarioConfig,
    contamination_profile,
    evaluate,
    run_scenario,
    sim_drift,
    synthetic_pools,
)
from .templater import (
    LogRecord,
    WindowSpec,
    match_template,
    mine_templates,
    preprocess,
    window_counts,
)

__version__ = "0.1.0"

__all__ = [
    "BfTrace",
    "CountVector",
    "Detector",
    "DetectorConfig",
    "DirichletState",
    "FitReport",
    "LogRecord",
    "ProbabilityVector",
    "RunMetrics",
    "ScenarioConfig",
    "SdDiagnostic",
    "Template",
    "TemplateSet",
    "TraceEntry",
    "WindowSpec",
    "build_prior",
    "chi_squared_fit",
    "chi_squared_sf",
    "contamination_profile",
    "elementwise_mean",
    "evaluate",
    "first_detection",
    "log_multivariate_beta",
    "match_template",
    "mine_templates",
    "mle",
    "normalize",
    "preprocess",
    "run",
    "run_scenario",
    "sd_diagnostic",
    "sim_drift",
    "synthetic_pools",
    "window_counts",
    "__version__",
]
