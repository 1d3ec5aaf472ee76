"""Maximum partial likelihood estimation by safeguarded Newton ascent.

Newton steps on the concave log partial likelihood with step halving, so
the accepted objective sequence is non-decreasing.  Standard errors come
from the inverse observed information at the optimum; Wald intervals at
the configured confidence level.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, stats

from .covariates import CovariateSpec
from .events import EventLog
from .likelihood import (
    LikelihoodTrace,
    RiskSetPolicy,
    build_trace,
    column_moments,
    evaluate,
)
from .validation import check_beta, normalize_sentiment

__all__ = [
    "FitConfig",
    "FitResult",
    "Significance",
    "fit",
    "fit_trace",
    "wald_significance",
    "result_table",
]


@dataclass(frozen=True)
class FitConfig:
    max_iterations: int = 100
    grad_tol: float = 1e-8
    max_step_halvings: int = 30
    ridge: float = 1e-8
    confidence_level: float = 0.95
    standardize: bool = False
    divergence_bound: float = 50.0

    def __post_init__(self):
        if self.max_iterations <= 0 or self.max_step_halvings <= 0:
            raise ValueError("iteration limits must be positive")
        if self.grad_tol <= 0 or self.ridge <= 0 or self.divergence_bound <= 0:
            raise ValueError("tolerances must be positive")
        if not 0.0 < self.confidence_level < 1.0:
            raise ValueError("confidence level must lie in (0, 1)")


class Significance(enum.Enum):
    SIG_POS = "sig_pos"
    SIG_NEG = "sig_neg"
    NOT_SIG = "not_sig"


@dataclass
class FitResult:
    """Estimates and diagnostics for one sentiment stream."""

    sentiment: str
    names: tuple
    beta: np.ndarray
    se: np.ndarray
    ci_lower: np.ndarray
    ci_upper: np.ndarray
    loglik: float
    iterations: int
    converged: bool
    gradient_norm: float
    loglik_path: list
    ridge_used: bool
    separation: bool
    n_terms: int
    n_nodes: int
    risk_set: str
    ties: str
    confidence_level: float
    standardized: bool
    center: np.ndarray | None = None
    scale: np.ndarray | None = None

    @property
    def p(self) -> int:
        return len(self.names)

    def significance(self) -> list[Significance]:
        return wald_significance(self)


def wald_significance(result: FitResult) -> list[Significance]:
    """Classify each coefficient by whether its CI clears zero."""
    out = []
    for lo, hi in zip(result.ci_lower, result.ci_upper):
        if lo > 0.0:
            out.append(Significance.SIG_POS)
        elif hi < 0.0:
            out.append(Significance.SIG_NEG)
        else:
            out.append(Significance.NOT_SIG)
    return out


def _solve_newton_step(hessian: np.ndarray, gradient: np.ndarray, ridge: float):
    """Solve (-H + r I) step = gradient, escalating r only as needed.

    Returns (step, ridge_used_flag, information) where information is the
    (possibly ridged) negated Hessian used for the solve.
    """
    a = -hessian
    try:
        c, low = linalg.cho_factor(a, check_finite=False)
        return linalg.cho_solve((c, low), gradient, check_finite=False), False, a
    except linalg.LinAlgError:
        pass
    r = ridge
    eye = np.eye(a.shape[0])
    for _ in range(40):
        try:
            c, low = linalg.cho_factor(a + r * eye, check_finite=False)
            return (
                linalg.cho_solve((c, low), gradient, check_finite=False),
                True,
                a + r * eye,
            )
        except linalg.LinAlgError:
            r *= 10.0
    raise linalg.LinAlgError("information matrix could not be factorized")


def fit_trace(
    trace: LikelihoodTrace,
    sentiment: str,
    config: FitConfig = FitConfig(),
    beta_init=None,
) -> FitResult:
    """Maximize the partial likelihood for one stream over a frozen trace."""
    sentiment = normalize_sentiment(sentiment)
    p = trace.p
    beta = check_beta(beta_init, p, "beta_init")

    center = scale = None
    if config.standardize:
        center, sd = column_moments(trace)
        scale = np.where(sd > 1e-12, sd, 1.0)

    def ev(b):
        return evaluate(trace, b, sentiment, order=2, center=center, scale=scale)

    value = ev(beta)
    path = [value.loglik]
    converged = False
    ridge_used = False
    separation = False
    iterations = 0

    for _ in range(config.max_iterations):
        gnorm = float(np.max(np.abs(value.gradient))) if p else 0.0
        if gnorm < config.grad_tol:
            converged = True
            break
        step, ridged, _info = _solve_newton_step(
            value.hessian, value.gradient, config.ridge
        )
        ridge_used = ridge_used or ridged
        iterations += 1

        accepted = False
        t = 1.0
        for _ in range(config.max_step_halvings + 1):
            cand = beta + t * step
            cand_value = ev(cand)
            if np.isfinite(cand_value.loglik) and cand_value.loglik >= value.loglik:
                beta, value = cand, cand_value
                path.append(value.loglik)
                accepted = True
                break
            t /= 2.0
        if not accepted:
            break
        if float(np.max(np.abs(beta))) > config.divergence_bound:
            separation = True
            break

    gnorm = float(np.max(np.abs(value.gradient))) if p else 0.0
    if not converged:
        converged = gnorm < config.grad_tol

    # Observed information at the optimum; ridge keeps degenerate
    # directions finite and is reported, not hidden.
    info = -value.hessian
    try:
        c, low = linalg.cho_factor(info, check_finite=False)
        cov = linalg.cho_solve((c, low), np.eye(p), check_finite=False)
    except linalg.LinAlgError:
        ridge_used = True
        r = config.ridge
        while True:
            try:
                c, low = linalg.cho_factor(info + r * np.eye(p), check_finite=False)
                cov = linalg.cho_solve((c, low), np.eye(p), check_finite=False)
                break
            except linalg.LinAlgError:
                r *= 10.0
                if r > 1e12:
                    cov = np.full((p, p), np.nan)
                    break
    se = np.sqrt(np.maximum(np.diag(cov), 0.0))
    z = stats.norm.ppf(0.5 + config.confidence_level / 2.0)

    return FitResult(
        sentiment="positive" if sentiment == "pos" else "negative",
        names=trace.names,
        beta=beta,
        se=se,
        ci_lower=beta - z * se,
        ci_upper=beta + z * se,
        loglik=value.loglik,
        iterations=iterations,
        converged=converged and not separation,
        gradient_norm=gnorm,
        loglik_path=path,
        ridge_used=ridge_used,
        separation=separation,
        n_terms=trace.n_terms(sentiment),
        n_nodes=trace.n,
        risk_set=trace.policy.mode,
        ties=trace.policy.ties,
        confidence_level=config.confidence_level,
        standardized=config.standardize,
        center=center,
        scale=scale,
    )


def fit(
    history: EventLog,
    analysis: EventLog,
    spec: CovariateSpec,
    sentiment: str = "positive",
    config: FitConfig = FitConfig(),
    policy: RiskSetPolicy = RiskSetPolicy(),
    beta_init=None,
    trace: LikelihoodTrace | None = None,
) -> FitResult:
    """Window-level entry point; builds the trace unless one is supplied."""
    if trace is None:
        trace = build_trace(history, analysis, spec, policy)
    return fit_trace(trace, sentiment, config, beta_init)


def result_table(result: FitResult) -> str:
    """Tabular text rendering: metadata header block plus one row per
    coefficient (name, estimate, se, CI bounds, significance)."""
    lines = [
        f"# sentiment: {result.sentiment}",
        f"# n_terms: {result.n_terms}",
        f"# n_nodes: {result.n_nodes}",
        f"# risk_set: {result.risk_set}",
        f"# ties: {result.ties}",
        f"# confidence_level: {result.confidence_level:g}",
        f"# standardized: {str(result.standardized).lower()}",
        f"# loglik: {result.loglik:.10g}",
        f"# iterations: {result.iterations}",
        f"# converged: {str(result.converged).lower()}",
        f"# gradient_norm: {result.gradient_norm:.6g}",
        f"# ridge_used: {str(result.ridge_used).lower()}",
        f"# separation: {str(result.separation).lower()}",
        "covariate\testimate\tse\tci_lo\tci_hi\tsignificance",
    ]
    signif = wald_significance(result)
    for k, name in enumerate(result.names):
        sig = signif[k].value
        lines.append(
            f"{name}\t{result.beta[k]:.10g}\t{result.se[k]:.10g}"
            f"\t{result.ci_lower[k]:.10g}\t{result.ci_upper[k]:.10g}\t{sig}"
        )
    return "\n".join(lines) + "\n"
