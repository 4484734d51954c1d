from .config import SimConfig, SimConfigError
from .invariants import InvariantViolation
from .metrics import (
    RunMetrics,
    TraceTooShortError,
    classify_stability,
    lyapunov_sample,
    VERDICT_STABLE,
    VERDICT_UNSTABLE,
    VERDICT_INCONCLUSIVE,
)
from .engine import Engine, run, DECISION_LOG_COLUMNS
