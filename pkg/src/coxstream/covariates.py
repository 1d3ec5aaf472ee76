"""Per-node network covariates with a brute-force and an incremental path.

Every covariate is a function of the network state right before an event
time.  The followee families weight each followee j by its opinionated
fraction w_j^s = N^s(j)/N^a(j) (zero when j has no counted tweets):

* ``f1_<s>``  opinionated neighborhood size: sum of weights over followees.
* ``f2_<s>``  average opinionated exposure intensity: weighted mean of
  N^s(j), normalized by f1 (zero when f1 is zero).
* ``f5_<s>``  opinionated reciprocal neighborhood fraction: weighted share
  of followees that follow back.
* ``f3``/``f4``  mean followee out-degree / follower count; ``f6``/``f7``
  mean shared followers / shared followees with each followee (triangle
  style clustering).  Plain means when unsentimented; with a ``_pos`` or
  ``_neg`` suffix they become opinion-weighted means normalized by f1,
  mirroring the f2 construction.
* ``u1_<s>``  the node's own sentiment-s tweet count; ``u2_<s>``  the sum
  of opinionated fractions over the node's followers.
* ``struct_*``  sentiment-free structure: out/in degree, reciprocal edge
  fraction, total counted tweets, log(1 + degree) transforms.

Zero-denominator convention throughout: a normalized quantity is 0 when
its denominator is 0.

The incremental path (:class:`CovariateCache`) keeps an (n, p) matrix in
sync with a replayed event stream, recomputing rows only for nodes the
event can affect; values are identical to full recomputation because both
paths share the row evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .events import EventKind, EventLog, SentimentLabel
from .state import NetworkState

__all__ = [
    "Covariate",
    "CovariateSpec",
    "CovariateCache",
    "CacheDesyncError",
    "FOCAL_NAMES",
    "FULL_NAMES",
]

_WEIGHTED_KINDS = ("f1", "f2", "f5", "u1", "u2")
_AUX_KINDS = ("f3", "f4", "f6", "f7")
_STRUCT_KINDS = (
    "struct_outdeg",
    "struct_indeg",
    "struct_recip_frac",
    "struct_activity",
    "struct_log_outdeg",
    "struct_log_indeg",
)
_ALL_KINDS = _WEIGHTED_KINDS + _AUX_KINDS + _STRUCT_KINDS

_SENTIMENTS = ("pos", "neg")

FOCAL_NAMES = ("f1_pos", "f1_neg", "f2_pos", "f2_neg", "f5_pos", "f5_neg")

FULL_NAMES = tuple(
    f"{kind}_{s}" for kind in ("f1", "f2", "f3", "f4", "f5", "f6", "f7", "u1", "u2")
    for s in _SENTIMENTS
) + _STRUCT_KINDS


class CacheDesyncError(RuntimeError):
    """Incremental covariate cache no longer matches its network state."""


@dataclass(frozen=True)
class Covariate:
    """A single covariate descriptor: family kind plus optional sentiment."""

    kind: str
    sentiment: str | None = None

    def __post_init__(self):
        if self.kind not in _ALL_KINDS:
            raise ValueError(f"unknown covariate kind {self.kind!r}")
        if self.kind in _WEIGHTED_KINDS and self.sentiment not in _SENTIMENTS:
            raise ValueError(f"{self.kind} requires sentiment 'pos' or 'neg'")
        if self.kind in _STRUCT_KINDS and self.sentiment is not None:
            raise ValueError(f"{self.kind} takes no sentiment")
        if self.sentiment not in (None, "pos", "neg"):
            raise ValueError(f"bad sentiment {self.sentiment!r}")

    @property
    def name(self) -> str:
        return f"{self.kind}_{self.sentiment}" if self.sentiment else self.kind

    @classmethod
    def from_name(cls, name: str) -> "Covariate":
        if name in _STRUCT_KINDS:
            return cls(name, None)
        for suffix, s in (("_pos", "pos"), ("_neg", "neg")):
            if name.endswith(suffix) and name[: -len(suffix)] in _ALL_KINDS:
                return cls(name[: -len(suffix)], s)
        if name in _ALL_KINDS:
            return cls(name, None)
        raise ValueError(f"unknown covariate name {name!r}")


class CovariateSpec:
    """Ordered covariate registry; the six focal descriptors are mandatory.

    Build with :meth:`focal` (p=6), :meth:`full` (the 24-covariate default
    registry), or :meth:`from_names` for a custom ordering.
    """

    def __init__(self, covariates: Iterable[Covariate]):
        covs = tuple(covariates)
        names = [c.name for c in covs]
        if len(set(names)) != len(names):
            raise ValueError("duplicate covariate descriptors")
        missing = [n for n in FOCAL_NAMES if n not in names]
        if missing:
            raise ValueError(f"focal covariates missing from spec: {missing}")
        if len(covs) < 6:
            raise ValueError("spec must contain at least the six focal covariates")
        self.covariates = covs
        self.names = tuple(names)
        self.p = len(covs)
        self._build_plan()

    @classmethod
    def focal(cls) -> "CovariateSpec":
        return cls.from_names(FOCAL_NAMES)

    @classmethod
    def full(cls) -> "CovariateSpec":
        return cls.from_names(FULL_NAMES)

    @classmethod
    def from_names(cls, names: Iterable[str]) -> "CovariateSpec":
        return cls(Covariate.from_name(n) for n in names)

    def index_of(self, name: str) -> int:
        return self.names.index(name)

    def __len__(self) -> int:
        return self.p

    def __eq__(self, other) -> bool:
        return isinstance(other, CovariateSpec) and self.names == other.names

    def __repr__(self) -> str:
        return f"CovariateSpec({list(self.names)})"

    def _build_plan(self):
        col = {name: k for k, name in enumerate(self.names)}

        def pair(kind):
            return (col.get(f"{kind}_pos"), col.get(f"{kind}_neg"))

        self._c_f1 = pair("f1")
        self._c_f2 = pair("f2")
        self._c_f5 = pair("f5")
        self._c_f3w = pair("f3")
        self._c_f4w = pair("f4")
        self._c_f6w = pair("f6")
        self._c_f7w = pair("f7")
        self._c_f3 = col.get("f3")
        self._c_f4 = col.get("f4")
        self._c_f6 = col.get("f6")
        self._c_f7 = col.get("f7")
        self._c_u1 = pair("u1")
        self._c_u2 = pair("u2")
        self._c_struct = {k: col.get(k) for k in _STRUCT_KINDS}

        def any_of(*vals):
            return any(v is not None for v in vals)

        self._need_u2 = any_of(*self._c_u2)
        self._need_f3 = any_of(self._c_f3, *self._c_f3w)
        self._need_f4 = any_of(self._c_f4, *self._c_f4w)
        self._need_f6 = any_of(self._c_f6, *self._c_f6w)
        self._need_f7 = any_of(self._c_f7, *self._c_f7w)
        # FOLLOW(a, b): a's out-degree and followee set feed f3/f7 terms of
        # a's followers; b's in-degree and follower set feed f4/f6 terms of
        # b's followers.
        self._follow_touches_followers_of_actor = self._need_f3 or self._need_f7
        self._follow_touches_followers_of_target = self._need_f4 or self._need_f6

    # -- evaluation --------------------------------------------------------

    def node_row(self, state: NetworkState, i: int, out: np.ndarray | None = None) -> np.ndarray:
        """Covariate row of node ``i`` read directly from ``state``."""
        if not 0 <= i < state.n:
            raise KeyError(f"unknown node index {i}")
        if out is None:
            out = np.zeros(self.p, dtype=np.float64)
        else:
            out[:] = 0.0

        followees = state.followees[i]
        followers_i = state.followers[i]
        n_pos = state.n_pos
        n_neg = state.n_neg
        n_neu = state.n_neu

        deg = len(followees)
        f1p = f1n = 0.0
        s2p = s2n = 0.0
        s5p = s5n = 0.0
        s3 = s4 = s6 = s7 = 0
        s3wp = s3wn = s4wp = s4wn = 0.0
        s6wp = s6wn = s7wp = s7wn = 0.0
        n_recip = 0

        need_f3, need_f4 = self._need_f3, self._need_f4
        need_f6, need_f7 = self._need_f6, self._need_f7

        for j in followees:
            if j in followers_i:
                recip = True
                n_recip += 1
            else:
                recip = False
            dj_out = len(state.followees[j]) if need_f3 else 0
            dj_in = len(state.followers[j]) if need_f4 else 0
            sh_f = len(followers_i & state.followers[j]) if need_f6 else 0
            sh_e = len(followees & state.followees[j]) if need_f7 else 0
            s3 += dj_out
            s4 += dj_in
            s6 += sh_f
            s7 += sh_e
            na = n_pos[j] + n_neg[j] + n_neu[j]
            if na:
                wp = n_pos[j] / na
                wn = n_neg[j] / na
                f1p += wp
                f1n += wn
                s2p += wp * n_pos[j]
                s2n += wn * n_neg[j]
                if recip:
                    s5p += wp
                    s5n += wn
                if need_f3:
                    s3wp += wp * dj_out
                    s3wn += wn * dj_out
                if need_f4:
                    s4wp += wp * dj_in
                    s4wn += wn * dj_in
                if need_f6:
                    s6wp += wp * sh_f
                    s6wn += wn * sh_f
                if need_f7:
                    s7wp += wp * sh_e
                    s7wn += wn * sh_e

        inv_f1p = 1.0 / f1p if f1p > 0.0 else 0.0
        inv_f1n = 1.0 / f1n if f1n > 0.0 else 0.0
        inv_deg = 1.0 / deg if deg else 0.0

        def put(cols, vp, vn):
            cp, cn = cols
            if cp is not None:
                out[cp] = vp
            if cn is not None:
                out[cn] = vn

        put(self._c_f1, f1p, f1n)
        put(self._c_f2, s2p * inv_f1p, s2n * inv_f1n)
        put(self._c_f5, s5p * inv_f1p, s5n * inv_f1n)
        put(self._c_f3w, s3wp * inv_f1p, s3wn * inv_f1n)
        put(self._c_f4w, s4wp * inv_f1p, s4wn * inv_f1n)
        put(self._c_f6w, s6wp * inv_f1p, s6wn * inv_f1n)
        put(self._c_f7w, s7wp * inv_f1p, s7wn * inv_f1n)
        if self._c_f3 is not None:
            out[self._c_f3] = s3 * inv_deg
        if self._c_f4 is not None:
            out[self._c_f4] = s4 * inv_deg
        if self._c_f6 is not None:
            out[self._c_f6] = s6 * inv_deg
        if self._c_f7 is not None:
            out[self._c_f7] = s7 * inv_deg

        if any(c is not None for c in self._c_u1):
            put(self._c_u1, float(n_pos[i]), float(n_neg[i]))
        if self._need_u2:
            u2p = u2n = 0.0
            for k in followers_i:
                na = n_pos[k] + n_neg[k] + n_neu[k]
                if na:
                    u2p += n_pos[k] / na
                    u2n += n_neg[k] / na
            put(self._c_u2, u2p, u2n)

        cs = self._c_struct
        if cs["struct_outdeg"] is not None:
            out[cs["struct_outdeg"]] = deg
        if cs["struct_indeg"] is not None:
            out[cs["struct_indeg"]] = len(followers_i)
        if cs["struct_recip_frac"] is not None:
            out[cs["struct_recip_frac"]] = n_recip * inv_deg
        if cs["struct_activity"] is not None:
            out[cs["struct_activity"]] = float(n_pos[i] + n_neg[i] + n_neu[i])
        if cs["struct_log_outdeg"] is not None:
            out[cs["struct_log_outdeg"]] = math.log1p(deg)
        if cs["struct_log_indeg"] is not None:
            out[cs["struct_log_indeg"]] = math.log1p(len(followers_i))
        return out

    def matrix(self, state: NetworkState, nodes: Sequence[int] | None = None) -> np.ndarray:
        """Brute-force covariate matrix over all nodes (or a subset)."""
        idx = range(state.n) if nodes is None else nodes
        out = np.zeros((len(idx) if nodes is not None else state.n, self.p))
        for r, i in enumerate(idx):
            self.node_row(state, i, out[r])
        return out


# Convenience single-covariate evaluators used by tests and small scripts.

def f1(state: NetworkState, i: int, sentiment: str) -> float:
    spec = CovariateSpec.focal()
    return float(spec.node_row(state, i)[spec.index_of(f"f1_{sentiment}")])


def f2(state: NetworkState, i: int, sentiment: str) -> float:
    spec = CovariateSpec.focal()
    return float(spec.node_row(state, i)[spec.index_of(f"f2_{sentiment}")])


def f5(state: NetworkState, i: int, sentiment: str) -> float:
    spec = CovariateSpec.focal()
    return float(spec.node_row(state, i)[spec.index_of(f"f5_{sentiment}")])


class CovariateCache:
    """An (n, p) covariate matrix kept in sync with an event replay.

    Owns its :class:`NetworkState`; callers advance it through
    :meth:`apply` / :meth:`apply_row`, which return the indices of the
    rows that were refreshed.  Between events the matrix reflects the
    history up to and including everything applied so far, so reading it
    before applying an event yields the pre-event covariates that event's
    intensity conditions on.
    """

    def __init__(self, state: NetworkState, spec: CovariateSpec):
        self.state = state
        self.spec = spec
        self.matrix = np.zeros((state.n, spec.p), dtype=np.float64)
        self.refresh()

    def refresh(self, nodes: Iterable[int] | None = None) -> None:
        idx = range(self.state.n) if nodes is None else nodes
        for i in idx:
            self.spec.node_row(self.state, i, self.matrix[i])

    def apply(self, event) -> np.ndarray:
        return self.apply_row(
            event.time,
            int(event.kind),
            event.actor,
            int(event.label) if event.label is not None else -1,
            event.target if event.target is not None else -1,
        )

    def apply_row(self, time: float, kind: int, actor: int, label: int, target: int) -> np.ndarray:
        """Advance state by one event; refresh and return affected rows."""
        state = self.state
        spec = self.spec
        state.apply_row(time, kind, actor, label, target)
        if kind == int(EventKind.TWEET):
            if label == int(SentimentLabel.UNRELATED):
                return np.empty(0, dtype=np.int64)
            affected = set(state.followers[actor])
            affected.add(actor)
            if spec._need_u2:
                affected.update(state.followees[actor])
        else:
            affected = {actor, target}
            if spec._follow_touches_followers_of_actor:
                affected.update(state.followers[actor])
            if spec._follow_touches_followers_of_target:
                affected.update(state.followers[target])
        out = np.fromiter(affected, dtype=np.int64, count=len(affected))
        out.sort()
        for i in out:
            spec.node_row(state, int(i), self.matrix[i])
        return out

    def check_consistency(self, rtol: float = 1e-12) -> None:
        """Compare against full recomputation; raise on desynchronization."""
        fresh = self.spec.matrix(self.state)
        scale = np.maximum(np.abs(fresh), 1.0)
        err = np.abs(self.matrix - fresh) / scale
        worst = float(err.max()) if err.size else 0.0
        if worst > rtol:
            i, k = np.unravel_index(int(err.argmax()), err.shape)
            raise CacheDesyncError(
                f"cache desynchronized: node {i}, covariate "
                f"{self.spec.names[k]}, relative error {worst:.3e}"
            )


def write_covariate_trace(
    path,
    history: EventLog,
    analysis: EventLog,
    spec: CovariateSpec,
    nodes: Sequence[int] | None = None,
) -> int:
    """Export pre-event covariate rows, one per event time and node.

    At every distinct event time in ``analysis``, writes the covariates of
    each node in ``nodes`` (all registered nodes by default) as seen right
    before that time.  Returns the number of data rows written.  Output is
    tab-separated with a header; intended for small logs or node subsets.
    """
    state = NetworkState(history.n_nodes)
    state.replay(history)
    cache = CovariateCache(state, spec)
    which = list(range(state.n)) if nodes is None else list(nodes)
    ids = analysis.registry.ids
    rows = 0
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("time\tnode\t" + "\t".join(spec.names) + "\n")
        i = 0
        n_events = analysis.n_events
        while i < n_events:
            t = float(analysis.times[i])
            for node in which:
                vals = "\t".join(f"{v:.12g}" for v in cache.matrix[node])
                fh.write(f"{t!r}\t{ids[node]}\t{vals}\n")
                rows += 1
            while i < n_events and analysis.times[i] == t:
                cache.apply_row(
                    float(analysis.times[i]),
                    int(analysis.kinds[i]),
                    int(analysis.actors[i]),
                    int(analysis.labels[i]),
                    int(analysis.targets[i]),
                )
                i += 1
    return rows
