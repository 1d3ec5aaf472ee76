"""Counting-process simulator with known coefficients.

Generates synthetic event streams whose per-node intensities follow the
same model the fitter estimates: for each sentiment stream,
``lambda_s(i, t) = baseline_s * exp(beta_s . s(i, t-))``.  Covariates are
piecewise constant between events, so the next event is drawn exactly by
competing exponentials: sample the waiting time at the current total
rate, attribute it proportionally to (node, stream), apply, repeat.
Neutral tweets arrive as an independent per-node Poisson stream, and an
optional Poisson process adds follow edges during the run.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .covariates import CovariateCache, CovariateSpec
from .events import EventKind, EventLog, NodeRegistry, SentimentLabel
from .state import NetworkState
from .validation import check_beta, check_positive, check_probability

__all__ = ["SimConfig", "SimOutput", "SimulationOverflowError", "make_network", "simulate"]

_ETA_LIMIT = 700.0  # exp() overflow threshold for float64


class SimulationOverflowError(RuntimeError):
    """A linear predictor left the representable range of exp()."""


@dataclass(frozen=True)
class SimConfig:
    """Generator settings; ``edges`` overrides the random network when set."""

    n_nodes: int
    horizon: float
    seed: int
    spec: CovariateSpec = field(default_factory=CovariateSpec.focal)
    beta_pos: tuple = ()
    beta_neg: tuple = ()
    baseline_pos: float = 0.0
    baseline_neg: float = 0.0
    neutral_rate: float = 0.0
    p_edge: float = 0.0
    p_reciprocal: float = 0.0
    edges: tuple | None = None
    follow_rate: float = 0.0

    def __post_init__(self):
        if self.n_nodes <= 0:
            raise ValueError("n_nodes must be positive")
        check_positive(self.horizon, "horizon")
        check_positive(self.baseline_pos, "baseline_pos", strict=False)
        check_positive(self.baseline_neg, "baseline_neg", strict=False)
        check_positive(self.neutral_rate, "neutral_rate", strict=False)
        check_positive(self.follow_rate, "follow_rate", strict=False)
        check_probability(self.p_edge, "p_edge")
        check_probability(self.p_reciprocal, "p_reciprocal")
        object.__setattr__(
            self, "beta_pos", tuple(check_beta(self.beta_pos or None, self.spec.p, "beta_pos"))
        )
        object.__setattr__(
            self, "beta_neg", tuple(check_beta(self.beta_neg or None, self.spec.p, "beta_neg"))
        )


@dataclass
class SimOutput:
    log: EventLog
    config: SimConfig
    n_pos: int
    n_neg: int
    n_neu: int
    n_follow: int

    @property
    def n_opinionated(self) -> int:
        return self.n_pos + self.n_neg


def make_network(
    n_nodes: int, p_edge: float, p_reciprocal: float, rng: np.random.Generator
) -> list[tuple[int, int]]:
    """Directed Erdos-Renyi edges plus reciprocal completion.

    Every ordered pair (i, j), i != j, receives an edge with probability
    ``p_edge``; each realized edge's reverse is then added with
    probability ``p_reciprocal`` (if not already present).  Returns a
    sorted, duplicate-free edge list.
    """
    check_probability(p_edge, "p_edge")
    check_probability(p_reciprocal, "p_reciprocal")
    edges: set[tuple[int, int]] = set()
    if p_edge > 0.0:
        for i in range(n_nodes):
            k = rng.binomial(n_nodes - 1, p_edge)
            if k == 0:
                continue
            targets = rng.choice(n_nodes - 1, size=k, replace=False)
            for t in targets:
                j = int(t) + (t >= i)  # skip the diagonal
                edges.add((i, j))
    if p_reciprocal > 0.0 and edges:
        base = sorted(edges)
        flips = rng.random(len(base)) < p_reciprocal
        for (a, b), flip in zip(base, flips):
            if flip:
                edges.add((b, a))
    return sorted(edges)


def _node_names(n: int) -> list[str]:
    width = len(str(max(n - 1, 0)))
    return [f"u{str(i).zfill(width)}" for i in range(n)]


def simulate(config: SimConfig) -> SimOutput:
    """Draw one event stream; identical config and seed give identical logs."""
    rng = np.random.default_rng(config.seed)
    n = config.n_nodes
    spec = config.spec
    beta_pos = np.asarray(config.beta_pos, dtype=np.float64)
    beta_neg = np.asarray(config.beta_neg, dtype=np.float64)

    if config.edges is not None:
        edges = sorted(set(map(tuple, config.edges)))
        for a, b in edges:
            if a == b or not (0 <= a < n and 0 <= b < n):
                raise ValueError(f"bad edge ({a}, {b})")
    else:
        edges = make_network(n, config.p_edge, config.p_reciprocal, rng)

    state = NetworkState(n)
    for a, b in edges:
        state.apply_row(0.0, int(EventKind.FOLLOW), a, -1, b)
    cache = CovariateCache(state, spec)

    eta_pos = cache.matrix @ beta_pos
    eta_neg = cache.matrix @ beta_neg
    worst = max(
        float(np.max(np.abs(eta_pos), initial=0.0)),
        float(np.max(np.abs(eta_neg), initial=0.0)),
    )
    if worst > _ETA_LIMIT:
        raise SimulationOverflowError(
            f"initial linear predictor magnitude {worst:.3g} exceeds exp() range"
        )
    w_pos = np.exp(eta_pos)
    w_neg = np.exp(eta_neg)

    times: list[float] = []
    kinds: list[int] = []
    actors: list[int] = []
    labels: list[int] = []
    targets: list[int] = []
    n_events_by_label = [0, 0, 0]
    n_follow_dynamic = 0

    neutral_total = config.neutral_rate * n
    edge_set = set(edges)

    t = 0.0
    while True:
        rate_pos = config.baseline_pos * float(w_pos.sum())
        rate_neg = config.baseline_neg * float(w_neg.sum())
        total = rate_pos + rate_neg + neutral_total + config.follow_rate
        if total <= 0.0:
            break
        t += rng.exponential(1.0 / total)
        if t > config.horizon:
            break

        u = rng.uniform(0.0, total)
        if u < rate_pos:
            node = int(np.searchsorted(np.cumsum(w_pos), u / config.baseline_pos))
            node = min(node, n - 1)
            label = int(SentimentLabel.POSITIVE)
        elif u < rate_pos + rate_neg:
            v = (u - rate_pos) / config.baseline_neg
            node = int(np.searchsorted(np.cumsum(w_neg), v))
            node = min(node, n - 1)
            label = int(SentimentLabel.NEGATIVE)
        elif u < rate_pos + rate_neg + neutral_total:
            node = int(rng.integers(0, n))
            label = int(SentimentLabel.NEUTRAL)
        else:
            pair = _draw_new_edge(rng, n, edge_set)
            if pair is None:
                continue
            a, b = pair
            edge_set.add(pair)
            changed = cache.apply_row(t, int(EventKind.FOLLOW), a, -1, b)
            _update_predictors(cache, changed, beta_pos, beta_neg, eta_pos, eta_neg, w_pos, w_neg)
            times.append(t)
            kinds.append(int(EventKind.FOLLOW))
            actors.append(a)
            labels.append(-1)
            targets.append(b)
            n_follow_dynamic += 1
            continue

        changed = cache.apply_row(t, int(EventKind.TWEET), node, label, -1)
        _update_predictors(cache, changed, beta_pos, beta_neg, eta_pos, eta_neg, w_pos, w_neg)
        times.append(t)
        kinds.append(int(EventKind.TWEET))
        actors.append(node)
        labels.append(label)
        targets.append(-1)
        n_events_by_label[label] += 1

    registry = NodeRegistry()
    for name in _node_names(n):
        registry.intern(name)

    n_net = len(edges)
    log = EventLog(
        times=np.concatenate([np.zeros(n_net), np.asarray(times, dtype=np.float64)]),
        kinds=np.concatenate(
            [np.full(n_net, int(EventKind.FOLLOW), dtype=np.uint8),
             np.asarray(kinds, dtype=np.uint8)]
        ),
        actors=np.concatenate(
            [np.asarray([a for a, _ in edges], dtype=np.int64),
             np.asarray(actors, dtype=np.int64)]
        ),
        labels=np.concatenate(
            [np.full(n_net, -1, dtype=np.int64), np.asarray(labels, dtype=np.int64)]
        ),
        targets=np.concatenate(
            [np.asarray([b for _, b in edges], dtype=np.int64),
             np.asarray(targets, dtype=np.int64)]
        ),
        registry=registry,
    )
    return SimOutput(
        log=log,
        config=config,
        n_pos=n_events_by_label[0],
        n_neg=n_events_by_label[1],
        n_neu=n_events_by_label[2],
        n_follow=n_net + n_follow_dynamic,
    )


def _update_predictors(cache, changed, beta_pos, beta_neg, eta_pos, eta_neg, w_pos, w_neg):
    if len(changed) == 0:
        return
    rows = cache.matrix[changed]
    ep = rows @ beta_pos
    en = rows @ beta_neg
    worst = max(float(np.max(np.abs(ep))), float(np.max(np.abs(en))))
    if worst > _ETA_LIMIT:
        raise SimulationOverflowError(
            f"linear predictor magnitude {worst:.3g} exceeds exp() range; "
            "reduce coefficient magnitudes or the horizon"
        )
    eta_pos[changed] = ep
    eta_neg[changed] = en
    w_pos[changed] = np.exp(ep)
    w_neg[changed] = np.exp(en)


def _draw_new_edge(rng, n, edge_set, max_tries: int = 128):
    for _ in range(max_tries):
        a = int(rng.integers(0, n))
        b = int(rng.integers(0, n))
        if a != b and (a, b) not in edge_set:
            return (a, b)
    return None  # graph (nearly) complete; drop this arrival
