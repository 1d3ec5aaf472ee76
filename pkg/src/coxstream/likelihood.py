"""Cox log partial likelihood, gradient, and Hessian over an event window.

The per-node message intensity for one sentiment stream is modeled as
``baseline(t) * exp(beta . s(i, t-))`` where ``s(i, t-)`` is the covariate
row of node i just before t.  The baseline cancels from the partial
likelihood, which sums, over window events of the chosen stream,

    beta . s(actor, t-)  -  log sum_{k in R(t)} exp(beta . s(k, t-))

Tied event times use the Breslow convention: every event at a tied time
contributes its own numerator against one shared denominator, evaluated on
the state strictly before that time.

Evaluation runs over a frozen :class:`LikelihoodTrace` (built once per
window), which stores the base covariate matrix and, per distinct event
time, the actor terms and the covariate rows that change.  Replaying a
trace at a given beta maintains the denominator sums incrementally,
touching only changed rows, with periodic full refreshes and max-shift
rebasing to keep the exponentials stable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .covariates import CovariateCache, CovariateSpec
from .events import EventKind, EventLog
from .state import NetworkState
from .validation import normalize_sentiment

__all__ = [
    "RiskSetPolicy",
    "LikelihoodValue",
    "LikelihoodTrace",
    "BaselineHazard",
    "build_trace",
    "evaluate",
    "column_moments",
    "log_partial_likelihood",
    "breslow_baseline",
]

ALL_NODES = "all_nodes"
EVER_ACTIVE = "ever_active"

# Full-refresh cadence for the running denominator sums, and the linear
# predictor excursion beyond the current shift that forces a rebase.
_REFRESH_EVERY = 512
_REBASE_AT = 40.0


@dataclass(frozen=True)
class RiskSetPolicy:
    """Who is at risk at each event time, and how ties are handled.

    ``all_nodes`` puts every registered node at risk everywhere;
    ``ever_active`` restricts to nodes that have tweeted at or before the
    event time (a node enters the risk set with its first tweet).  Ties
    are Breslow only.
    """

    mode: str = ALL_NODES
    ties: str = "breslow"

    def __post_init__(self):
        if self.mode not in (ALL_NODES, EVER_ACTIVE):
            raise ValueError(f"unknown risk-set mode {self.mode!r}")
        if self.ties != "breslow":
            raise ValueError(f"unsupported tie method {self.ties!r}")


@dataclass
class LikelihoodValue:
    loglik: float
    gradient: np.ndarray
    hessian: np.ndarray


@dataclass
class LikelihoodTrace:
    """Frozen covariate history for one analysis window.

    Group g covers all events at ``group_times[g]``.  Ragged per-group
    payloads use offset arrays of length G+1: stream actor terms
    (``pos_actors`` / ``neg_actors``), covariate row changes applied after
    the group's terms, and risk-set entries (ever-active mode only).
    """

    n: int
    p: int
    names: tuple
    policy: RiskSetPolicy
    base_matrix: np.ndarray
    base_at_risk: np.ndarray
    group_times: np.ndarray
    pos_offsets: np.ndarray
    pos_actors: np.ndarray
    neg_offsets: np.ndarray
    neg_actors: np.ndarray
    change_offsets: np.ndarray
    change_nodes: np.ndarray
    change_rows: np.ndarray
    entry_offsets: np.ndarray
    entry_nodes: np.ndarray

    @property
    def n_groups(self) -> int:
        return len(self.group_times)

    def actor_array(self, sentiment: str) -> tuple[np.ndarray, np.ndarray]:
        if normalize_sentiment(sentiment) == "pos":
            return self.pos_offsets, self.pos_actors
        return self.neg_offsets, self.neg_actors

    def n_terms(self, sentiment: str) -> int:
        offsets, actors = self.actor_array(sentiment)
        return int(len(actors))


def _ragged(chunks: list[list[int]], dtype=np.int64) -> tuple[np.ndarray, np.ndarray]:
    offsets = np.zeros(len(chunks) + 1, dtype=np.int64)
    np.cumsum([len(c) for c in chunks], out=offsets[1:])
    values = np.fromiter(
        (v for c in chunks for v in c), dtype=dtype, count=int(offsets[-1])
    )
    return offsets, values


def build_trace(
    history: EventLog,
    analysis: EventLog,
    spec: CovariateSpec,
    policy: RiskSetPolicy = RiskSetPolicy(),
) -> LikelihoodTrace:
    """Replay history, then freeze the analysis window into a trace."""
    n = analysis.n_nodes
    state = NetworkState(n)
    state.replay(history)
    cache = CovariateCache(state, spec)
    base_matrix = cache.matrix.copy()
    if not np.all(np.isfinite(base_matrix)):
        raise ValueError("non-finite covariate values in base matrix")

    ever_active = policy.mode == EVER_ACTIVE
    if ever_active:
        active = np.zeros(n, dtype=bool)
        tweet_rows = history.kinds == int(EventKind.TWEET)
        active[history.actors[tweet_rows]] = True
        base_at_risk = active.copy()
    else:
        base_at_risk = np.ones(n, dtype=bool)
        active = None

    times = analysis.times
    kinds = analysis.kinds
    actors = analysis.actors
    labels = analysis.labels
    targets = analysis.targets
    n_events = analysis.n_events

    group_times: list[float] = []
    pos_chunks: list[list[int]] = []
    neg_chunks: list[list[int]] = []
    entry_chunks: list[list[int]] = []
    change_node_chunks: list[np.ndarray] = []
    change_row_chunks: list[np.ndarray] = []
    change_counts: list[int] = []

    i = 0
    while i < n_events:
        t = float(times[i])
        j = i
        pos: list[int] = []
        neg: list[int] = []
        entries: list[int] = []
        changed: set[int] = set()
        while j < n_events and times[j] == t:
            a = int(actors[j])
            if kinds[j] == int(EventKind.TWEET):
                lab = int(labels[j])
                if lab == 0:
                    pos.append(a)
                elif lab == 1:
                    neg.append(a)
                if ever_active and not active[a]:
                    active[a] = True
                    entries.append(a)
            changed.update(
                cache.apply_row(t, int(kinds[j]), a, int(labels[j]), int(targets[j])).tolist()
            )
            j += 1
        group_times.append(t)
        pos_chunks.append(pos)
        neg_chunks.append(neg)
        entry_chunks.append(entries)
        idx = np.fromiter(changed, dtype=np.int64, count=len(changed))
        idx.sort()
        rows = cache.matrix[idx].copy()
        if rows.size and not np.all(np.isfinite(rows)):
            raise ValueError(f"non-finite covariate values at time {t}")
        change_node_chunks.append(idx)
        change_row_chunks.append(rows)
        change_counts.append(len(idx))
        i = j

    pos_offsets, pos_actors = _ragged(pos_chunks)
    neg_offsets, neg_actors = _ragged(neg_chunks)
    entry_offsets, entry_nodes = _ragged(entry_chunks)
    change_offsets = np.zeros(len(change_counts) + 1, dtype=np.int64)
    np.cumsum(change_counts, out=change_offsets[1:])
    change_nodes = (
        np.concatenate(change_node_chunks)
        if change_node_chunks
        else np.empty(0, dtype=np.int64)
    )
    change_rows = (
        np.concatenate(change_row_chunks)
        if change_row_chunks
        else np.empty((0, spec.p))
    )

    return LikelihoodTrace(
        n=n,
        p=spec.p,
        names=spec.names,
        policy=policy,
        base_matrix=base_matrix,
        base_at_risk=base_at_risk,
        group_times=np.asarray(group_times, dtype=np.float64),
        pos_offsets=pos_offsets,
        pos_actors=pos_actors,
        neg_offsets=neg_offsets,
        neg_actors=neg_actors,
        change_offsets=change_offsets,
        change_nodes=change_nodes,
        change_rows=change_rows,
        entry_offsets=entry_offsets,
        entry_nodes=entry_nodes,
    )


class _DenominatorSums:
    """Running risk-set sums S0, S1, S2 at a fixed beta during a replay."""

    def __init__(self, C, at_risk, beta, order):
        self.C = C
        self.at_risk = at_risk
        self.beta = beta
        self.order = order
        self.eta = C @ beta
        self.refresh()

    def refresh(self):
        at = self.at_risk
        self.shift = float(self.eta[at].max()) if at.any() else 0.0
        w = np.where(at, np.exp(self.eta - self.shift), 0.0)
        self.w = w
        self.s0 = float(w.sum())
        if self.order >= 1:
            self.s1 = w @ self.C
        if self.order >= 2:
            self.s2 = (self.C * w[:, None]).T @ self.C

    def enter(self, ix):
        self.at_risk[ix] = True
        if self.eta[ix].max() - self.shift > _REBASE_AT:
            self.refresh()
            return
        wnew = np.exp(self.eta[ix] - self.shift)
        self.w[ix] = wnew
        self.s0 += float(wnew.sum())
        rows = self.C[ix]
        if self.order >= 1:
            self.s1 += wnew @ rows
        if self.order >= 2:
            self.s2 += (rows * wnew[:, None]).T @ rows

    def update_rows(self, ix, rows):
        eta_new = rows @ self.beta
        if eta_new.size and eta_new.max() - self.shift > _REBASE_AT:
            self.C[ix] = rows
            self.eta[ix] = eta_new
            self.refresh()
            return
        old = self.C[ix]
        wold = self.w[ix]
        self.s0 -= float(wold.sum())
        if self.order >= 1:
            self.s1 -= wold @ old
        if self.order >= 2:
            self.s2 -= (old * wold[:, None]).T @ old
        self.C[ix] = rows
        self.eta[ix] = eta_new
        wnew = np.where(self.at_risk[ix], np.exp(eta_new - self.shift), 0.0)
        self.w[ix] = wnew
        self.s0 += float(wnew.sum())
        if self.order >= 1:
            self.s1 += wnew @ rows
        if self.order >= 2:
            self.s2 += (rows * wnew[:, None]).T @ rows

    def log_denominator(self):
        return float(np.log(self.s0) + self.shift)


def _transform_rows(rows, center, scale):
    if center is None:
        return rows
    return (rows - center) / scale


def evaluate(
    trace: LikelihoodTrace,
    beta: np.ndarray,
    sentiment: str,
    order: int = 2,
    center: np.ndarray | None = None,
    scale: np.ndarray | None = None,
) -> LikelihoodValue:
    """Log partial likelihood (and derivatives) for one sentiment stream.

    ``center``/``scale`` optionally standardize every covariate row on the
    fly; beta then lives on the standardized scale.
    """
    beta = np.asarray(beta, dtype=np.float64)
    p = trace.p
    if beta.shape != (p,):
        raise ValueError(f"beta must have length {p}")
    offsets, actors = trace.actor_array(sentiment)

    C = _transform_rows(trace.base_matrix, center, scale).copy()
    at_risk = trace.base_at_risk.copy()
    sums = _DenominatorSums(C, at_risk, beta, order)

    loglik = 0.0
    grad = np.zeros(p) if order >= 1 else None
    hess = np.zeros((p, p)) if order >= 2 else None

    co, cn, cr = trace.change_offsets, trace.change_nodes, trace.change_rows
    eo, en = trace.entry_offsets, trace.entry_nodes
    ever_active = trace.policy.mode == EVER_ACTIVE

    for g in range(trace.n_groups):
        if ever_active and en.size:
            lo, hi = eo[g], eo[g + 1]
            if hi > lo:
                sums.enter(en[lo:hi])
        lo, hi = offsets[g], offsets[g + 1]
        d = int(hi - lo)
        if d:
            if sums.s0 <= 0.0 or not np.isfinite(sums.s0):
                sums.refresh()
                if sums.s0 <= 0.0:
                    raise ValueError(
                        f"empty risk set at time {trace.group_times[g]}"
                    )
            ai = actors[lo:hi]
            log_den = sums.log_denominator()
            loglik += float(sums.eta[ai].sum()) - d * log_den
            if order >= 1:
                sbar = sums.s1 / sums.s0
                grad += sums.C[ai].sum(axis=0) - d * sbar
            if order >= 2:
                hess -= d * (sums.s2 / sums.s0 - np.outer(sbar, sbar))
        lo, hi = co[g], co[g + 1]
        if hi > lo:
            rows = _transform_rows(cr[lo:hi], center, scale)
            sums.update_rows(cn[lo:hi], rows)
        if (g + 1) % _REFRESH_EVERY == 0:
            sums.refresh()

    if order >= 2:
        hess = (hess + hess.T) / 2.0
    return LikelihoodValue(
        loglik=loglik,
        gradient=grad if grad is not None else np.zeros(p),
        hessian=hess if hess is not None else np.zeros((p, p)),
    )


def column_moments(trace: LikelihoodTrace) -> tuple[np.ndarray, np.ndarray]:
    """Mean and standard deviation of each covariate over all risk-set
    evaluations in the window (every at-risk node at every event time)."""
    C = trace.base_matrix.copy()
    at_risk = trace.base_at_risk.copy()
    csum = C[at_risk].sum(axis=0)
    csumsq = (C[at_risk] ** 2).sum(axis=0)
    n_at_risk = int(at_risk.sum())

    total = np.zeros(trace.p)
    total_sq = np.zeros(trace.p)
    count = 0

    co, cn, cr = trace.change_offsets, trace.change_nodes, trace.change_rows
    eo, en = trace.entry_offsets, trace.entry_nodes
    for g in range(trace.n_groups):
        lo, hi = eo[g], eo[g + 1]
        if hi > lo:
            ix = en[lo:hi]
            at_risk[ix] = True
            n_at_risk += int(hi - lo)
            csum += C[ix].sum(axis=0)
            csumsq += (C[ix] ** 2).sum(axis=0)
        total += csum
        total_sq += csumsq
        count += n_at_risk
        lo, hi = co[g], co[g + 1]
        if hi > lo:
            ix = cn[lo:hi]
            mask = at_risk[ix]
            old = C[ix][mask]
            new = cr[lo:hi][mask]
            csum += new.sum(axis=0) - old.sum(axis=0)
            csumsq += (new**2).sum(axis=0) - (old**2).sum(axis=0)
            C[ix] = cr[lo:hi]

    if count == 0:
        return np.zeros(trace.p), np.ones(trace.p)
    mean = total / count
    var = np.maximum(total_sq / count - mean**2, 0.0)
    return mean, np.sqrt(var)


@dataclass
class BaselineHazard:
    """Cumulative baseline hazard as a right-continuous step function."""

    times: np.ndarray
    cumulative: np.ndarray

    def at(self, t) -> np.ndarray:
        idx = np.searchsorted(self.times, np.asarray(t, dtype=np.float64), side="right")
        padded = np.concatenate([[0.0], self.cumulative])
        return padded[idx]

    def __call__(self, t):
        out = self.at(t)
        return float(out) if np.isscalar(t) else out


def breslow_baseline(
    trace: LikelihoodTrace,
    beta: np.ndarray,
    sentiment: str,
    center: np.ndarray | None = None,
    scale: np.ndarray | None = None,
) -> BaselineHazard:
    """Breslow estimator of the cumulative baseline hazard at ``beta``.

    Jumps d_t / sum_{k in R(t)} exp(beta . s(k, t-)) at every window time
    with d_t > 0 events of the chosen stream.
    """
    beta = np.asarray(beta, dtype=np.float64)
    offsets, _actors = trace.actor_array(sentiment)
    C = _transform_rows(trace.base_matrix, center, scale).copy()
    at_risk = trace.base_at_risk.copy()
    sums = _DenominatorSums(C, at_risk, beta, order=0)

    co, cn, cr = trace.change_offsets, trace.change_nodes, trace.change_rows
    eo, en = trace.entry_offsets, trace.entry_nodes
    ever_active = trace.policy.mode == EVER_ACTIVE

    jump_times = []
    jumps = []
    for g in range(trace.n_groups):
        if ever_active and en.size:
            lo, hi = eo[g], eo[g + 1]
            if hi > lo:
                sums.enter(en[lo:hi])
        d = int(offsets[g + 1] - offsets[g])
        if d:
            if not sums.s0 > 0.0:
                raise ValueError(f"empty risk set at time {trace.group_times[g]}")
            jump_times.append(float(trace.group_times[g]))
            jumps.append(d * np.exp(-sums.log_denominator()))
        lo, hi = co[g], co[g + 1]
        if hi > lo:
            sums.update_rows(cn[lo:hi], _transform_rows(cr[lo:hi], center, scale))
        if (g + 1) % _REFRESH_EVERY == 0:
            sums.refresh()

    return BaselineHazard(
        times=np.asarray(jump_times, dtype=np.float64),
        cumulative=np.cumsum(jumps) if jumps else np.empty(0, dtype=np.float64),
    )


def log_partial_likelihood(
    history: EventLog,
    analysis: EventLog,
    spec: CovariateSpec,
    beta,
    policy: RiskSetPolicy = RiskSetPolicy(),
    sentiment: str = "positive",
) -> LikelihoodValue:
    """Build a trace for the window and evaluate at ``beta`` in one call."""
    trace = build_trace(history, analysis, spec, policy)
    return evaluate(trace, np.asarray(beta, dtype=np.float64), sentiment)
