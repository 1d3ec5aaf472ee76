"""Input validation helpers shared across the public API surface."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np

from .covariates import CovariateSpec
from .events import EventLog, parse_log

__all__ = [
    "as_event_log",
    "as_covariate_spec",
    "normalize_sentiment",
    "check_beta",
    "check_probability",
    "check_positive",
    "check_confusion_matrix",
    "check_window",
]

_SENTIMENT_ALIASES = {
    "pos": "pos",
    "positive": "pos",
    "neg": "neg",
    "negative": "neg",
}


def as_event_log(source) -> EventLog:
    """Accept an EventLog, a path, or raw lines; return a validated log."""
    if isinstance(source, EventLog):
        return source
    return parse_log(source)


def as_covariate_spec(spec) -> CovariateSpec:
    """Accept a CovariateSpec, the presets 'focal'/'full', or name lists."""
    if isinstance(spec, CovariateSpec):
        return spec
    if spec is None or spec == "focal":
        return CovariateSpec.focal()
    if spec == "full":
        return CovariateSpec.full()
    if isinstance(spec, str):
        return CovariateSpec.from_names(n.strip() for n in spec.split(",") if n.strip())
    return CovariateSpec.from_names(spec)


def normalize_sentiment(sentiment) -> str:
    key = str(sentiment).lower()
    if key not in _SENTIMENT_ALIASES:
        raise ValueError(
            f"sentiment must be 'positive' or 'negative', got {sentiment!r}"
        )
    return _SENTIMENT_ALIASES[key]


def check_beta(beta, p: int, name: str = "beta") -> np.ndarray:
    if beta is None:
        return np.zeros(p, dtype=np.float64)
    out = np.asarray(beta, dtype=np.float64).ravel()
    if out.shape != (p,):
        raise ValueError(f"{name} must have length {p}, got {out.shape}")
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} contains non-finite entries")
    return out


def check_probability(x: float, name: str) -> float:
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {x}")
    return x


def check_positive(x: float, name: str, strict: bool = True) -> float:
    x = float(x)
    if strict and not x > 0:
        raise ValueError(f"{name} must be positive, got {x}")
    if not strict and not x >= 0:
        raise ValueError(f"{name} must be non-negative, got {x}")
    return x


def check_confusion_matrix(matrix, atol: float = 1e-12) -> np.ndarray:
    q = np.asarray(matrix, dtype=np.float64)
    if q.shape != (4, 4):
        raise ValueError(f"confusion matrix must be 4x4, got {q.shape}")
    if np.any(q < 0):
        raise ValueError("confusion matrix entries must be non-negative")
    rowsums = q.sum(axis=1)
    if np.any(np.abs(rowsums - 1.0) > atol):
        raise ValueError(f"confusion matrix rows must sum to 1, got {rowsums}")
    return q


def check_window(t_start: float, t_end: float) -> tuple[float, float]:
    t_start, t_end = float(t_start), float(t_end)
    if t_start > t_end:
        raise ValueError(f"window start {t_start} exceeds end {t_end}")
    return t_start, t_end
