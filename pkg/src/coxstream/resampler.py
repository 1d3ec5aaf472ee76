"""Label-misclassification robustness via repeated random reclassification.

Each realization redraws every tweet's label from a row-stochastic
confusion model conditioned on the currently assigned label, rebuilds the
covariate history, and refits both sentiment models.  Aggregating the K
per-realization Wald intervals yields, per coefficient, a CI profile and
the fraction of realizations with a significantly positive / negative /
indistinct estimate.

Per-realization seeds derive from the master seed by the counter rule
``SeedSequence(master_seed, spawn_key=(k,))``, so profiles are exactly
reproducible and realizations stay independent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .covariates import CovariateSpec
from .events import EventKind, EventLog, SentimentLabel, window
from .fitter import FitConfig, FitResult, fit_trace
from .likelihood import RiskSetPolicy, build_trace
from .validation import check_confusion_matrix, check_window

__all__ = [
    "ConfusionModel",
    "RealizationProfile",
    "estimate_confusion",
    "reclassify",
    "realization_seed",
    "run_profile",
]

_LABELS = tuple(SentimentLabel)


@dataclass(frozen=True)
class ConfusionModel:
    """Row-stochastic 4x4 matrix: row = assigned label, column = the
    distribution its replacement is drawn from."""

    matrix: np.ndarray
    calibration_counts: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "matrix", check_confusion_matrix(self.matrix))

    @classmethod
    def identity(cls) -> "ConfusionModel":
        return cls(np.eye(4))

    @classmethod
    def uniform(cls) -> "ConfusionModel":
        return cls(np.full((4, 4), 0.25))

    @classmethod
    def diagonal(cls, accuracy: float) -> "ConfusionModel":
        """Keep the label with ``accuracy``, spread the rest uniformly."""
        if not 0.0 <= accuracy <= 1.0:
            raise ValueError("accuracy must lie in [0, 1]")
        off = (1.0 - accuracy) / 3.0
        q = np.full((4, 4), off)
        np.fill_diagonal(q, accuracy)
        return cls(q)

    def diagonal_mass(self, weights: np.ndarray | None = None) -> float:
        """Probability a redraw keeps its label, weighted by row usage."""
        d = np.diag(self.matrix)
        if weights is None:
            return float(d.mean())
        w = np.asarray(weights, dtype=np.float64)
        total = w.sum()
        if total <= 0:
            return float(d.mean())
        return float((d * w).sum() / total)


def estimate_confusion(pairs, smoothing: float = 1.0) -> ConfusionModel:
    """Estimate true-given-predicted probabilities from calibration pairs.

    ``pairs`` holds (predicted, true) labels as SentimentLabel values or
    POS/NEG/NEU/UNR-style names.  Add-``smoothing`` regularization per
    cell; with smoothing 0 every predicted class must appear.
    """
    if smoothing < 0:
        raise ValueError("smoothing must be non-negative")
    counts = np.zeros((4, 4), dtype=np.float64)
    for pred, true in pairs:
        counts[_as_label(pred), _as_label(true)] += 1
    if counts.sum() == 0:
        raise ValueError("calibration set is empty")
    rows = counts.sum(axis=1, keepdims=True)
    if smoothing == 0 and np.any(rows == 0):
        missing = [int(i) for i in np.where(rows.ravel() == 0)[0]]
        raise ValueError(
            f"predicted classes {missing} absent from calibration and smoothing is 0"
        )
    q = (counts + smoothing) / (rows + 4.0 * smoothing)
    return ConfusionModel(q, calibration_counts=counts)


def _as_label(x) -> int:
    if isinstance(x, SentimentLabel):
        return int(x)
    if isinstance(x, (int, np.integer)):
        if 0 <= int(x) < 4:
            return int(x)
        raise ValueError(f"label index out of range: {x}")
    token = str(x).strip().upper()
    full = {"POS": 0, "POSITIVE": 0, "NEG": 1, "NEGATIVE": 1,
            "NEU": 2, "NEUTRAL": 2, "UNR": 3, "UNRELATED": 3}
    if token in full:
        return full[token]
    raise ValueError(f"unknown label {x!r}")


def realization_seed(master_seed: int, k: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(k,)))


def reclassify(log: EventLog, model: ConfusionModel, seed) -> EventLog:
    """Redraw every tweet label from the confusion model; everything else
    (times, actors, follow edges) is untouched."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    labels = log.labels.copy()
    tweet_mask = log.kinds == int(EventKind.TWEET)
    for lab in range(4):
        rows = np.flatnonzero(tweet_mask & (log.labels == lab))
        if rows.size:
            labels[rows] = rng.choice(4, size=rows.size, p=model.matrix[lab])
    return log.replace_labels(labels)


@dataclass
class RealizationProfile:
    """Per-coefficient CI profile over K reclassified realizations."""

    sentiment: str
    names: tuple
    estimates: np.ndarray  # (K, p)
    ci_lower: np.ndarray
    ci_upper: np.ndarray
    converged: np.ndarray  # (K,) bool
    k_total: int

    @property
    def n_excluded(self) -> int:
        return int(self.k_total - self.converged.sum())

    def significance_fractions(self) -> dict[str, np.ndarray]:
        """Share of included realizations with each Wald classification;
        the three fractions sum to 1 per coefficient."""
        inc = self.converged
        n_inc = max(int(inc.sum()), 1)
        c_pos = (self.ci_lower[inc] > 0).sum(axis=0)
        c_neg = (self.ci_upper[inc] < 0).sum(axis=0)
        c_not = int(inc.sum()) - c_pos - c_neg
        return {
            "sig_pos": c_pos / n_inc,
            "sig_neg": c_neg / n_inc,
            "not_sig": c_not / n_inc,
        }

    def mean_estimates(self) -> np.ndarray:
        inc = self.converged
        if not inc.any():
            return np.full(len(self.names), np.nan)
        return self.estimates[inc].mean(axis=0)


def _one_realization(log, spec, config, policy, model, t_start, t_end, master_seed, k):
    rng = realization_seed(master_seed, k)
    relabeled = reclassify(log, model, rng)
    history, analysis = window(relabeled, t_start, t_end)
    trace = build_trace(history, analysis, spec, policy)
    res_pos = fit_trace(trace, "positive", config)
    res_neg = fit_trace(trace, "negative", config)
    return res_pos, res_neg


def run_profile(
    log: EventLog,
    spec: CovariateSpec,
    config: FitConfig,
    model: ConfusionModel,
    k_realizations: int = 200,
    master_seed: int = 0,
    t_start: float = float("-inf"),
    t_end: float = float("inf"),
    policy: RiskSetPolicy = RiskSetPolicy(),
    n_jobs: int = 1,
) -> dict[str, RealizationProfile]:
    """Reclassify, refit, and aggregate K times; returns one profile per
    sentiment stream.  Realizations failing to converge are kept in the
    tables but excluded from fractions, with the exclusion count exposed."""
    if k_realizations < 1:
        raise ValueError("k_realizations must be at least 1")
    t_start, t_end = check_window(t_start, t_end)

    results = Parallel(n_jobs=n_jobs)(
        delayed(_one_realization)(
            log, spec, config, policy, model, t_start, t_end, master_seed, k
        )
        for k in range(k_realizations)
    )

    profiles = {}
    for s, pick in (("positive", 0), ("negative", 1)):
        fits: list[FitResult] = [pair[pick] for pair in results]
        profiles[s] = RealizationProfile(
            sentiment=s,
            names=spec.names,
            estimates=np.vstack([f.beta for f in fits]),
            ci_lower=np.vstack([f.ci_lower for f in fits]),
            ci_upper=np.vstack([f.ci_upper for f in fits]),
            converged=np.asarray([f.converged for f in fits], dtype=bool),
            k_total=k_realizations,
        )
    return profiles


def profile_table(profile: RealizationProfile) -> str:
    """Long-form tabular text: one row per coefficient and realization."""
    lines = [
        f"# sentiment: {profile.sentiment}",
        f"# k_total: {profile.k_total}",
        f"# n_excluded: {profile.n_excluded}",
        "covariate\trealization\testimate\tci_lo\tci_hi\tconverged",
    ]
    for j, name in enumerate(profile.names):
        for k in range(profile.k_total):
            lines.append(
                f"{name}\t{k}\t{profile.estimates[k, j]:.10g}"
                f"\t{profile.ci_lower[k, j]:.10g}\t{profile.ci_upper[k, j]:.10g}"
                f"\t{str(bool(profile.converged[k])).lower()}"
            )
    return "\n".join(lines) + "\n"


def summary_table(profile: RealizationProfile) -> str:
    """Per-coefficient means and significance percentages."""
    fr = profile.significance_fractions()
    mean = profile.mean_estimates()
    lines = [
        f"# sentiment: {profile.sentiment}",
        f"# k_total: {profile.k_total}",
        f"# n_excluded: {profile.n_excluded}",
        "covariate\tmean_estimate\tsig_pos_pct\tsig_neg_pct\tnot_sig_pct",
    ]
    for j, name in enumerate(profile.names):
        lines.append(
            f"{name}\t{mean[j]:.10g}"
            f"\t{100.0 * fr['sig_pos'][j]:.10g}"
            f"\t{100.0 * fr['sig_neg'][j]:.10g}"
            f"\t{100.0 * fr['not_sig'][j]:.10g}"
        )
    return "\n".join(lines) + "\n"
