"""Evolving directed-network state: adjacency, reciprocity, tweet counters.

The state is replayed event-by-event.  An edge "a follows b" is stored in
both directions (``followees[a]`` contains ``b`` and ``followers[b]``
contains ``a``); information flows from followee to follower.  Tweet
counters track positive / negative / neutral messages per node; UNRELATED
tweets only bump a shadow counter and never enter any covariate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .events import Event, EventKind, EventLog, SentimentLabel

__all__ = ["TweetCounters", "NetworkState"]


@dataclass(frozen=True)
class TweetCounters:
    n_pos: int
    n_neg: int
    n_neu: int

    @property
    def n_all(self) -> int:
        return self.n_pos + self.n_neg + self.n_neu


class NetworkState:
    """Mutable network history, advanced by :meth:`apply`.

    Attributes
    ----------
    followees, followers : list of set of int
        Exact inverse indexes of the directed follow graph.
    n_pos, n_neg, n_neu, n_unrelated : ndarray of int64
        Per-node tweet counters; ``n_unrelated`` is the shadow counter.
    clock : float
        Time of the last applied event (-inf for a fresh state).
    """

    def __init__(self, n_nodes: int):
        if n_nodes < 0:
            raise ValueError("n_nodes must be non-negative")
        self.n = n_nodes
        self.followees: list[set[int]] = [set() for _ in range(n_nodes)]
        self.followers: list[set[int]] = [set() for _ in range(n_nodes)]
        self.n_pos = np.zeros(n_nodes, dtype=np.int64)
        self.n_neg = np.zeros(n_nodes, dtype=np.int64)
        self.n_neu = np.zeros(n_nodes, dtype=np.int64)
        self.n_unrelated = np.zeros(n_nodes, dtype=np.int64)
        self.clock = float("-inf")

    @classmethod
    def from_log(cls, log: EventLog) -> "NetworkState":
        """Batch-build the state reached after replaying a whole log."""
        state = cls(log.n_nodes)
        state.replay(log)
        return state

    def replay(self, log: EventLog) -> "NetworkState":
        for i in range(log.n_events):
            self.apply_row(
                float(log.times[i]),
                int(log.kinds[i]),
                int(log.actors[i]),
                int(log.labels[i]),
                int(log.targets[i]),
            )
        return self

    def apply(self, event: Event) -> "NetworkState":
        self.apply_row(
            event.time,
            int(event.kind),
            event.actor,
            int(event.label) if event.label is not None else -1,
            event.target if event.target is not None else -1,
        )
        return self

    def apply_row(self, time: float, kind: int, actor: int, label: int, target: int) -> None:
        """Apply one event given as raw columns (hot path for replays)."""
        if time < self.clock:
            raise ValueError(
                f"time regression: event at {time} before state clock {self.clock}"
            )
        self._check_node(actor)
        if kind == int(EventKind.TWEET):
            if label == int(SentimentLabel.POSITIVE):
                self.n_pos[actor] += 1
            elif label == int(SentimentLabel.NEGATIVE):
                self.n_neg[actor] += 1
            elif label == int(SentimentLabel.NEUTRAL):
                self.n_neu[actor] += 1
            else:
                self.n_unrelated[actor] += 1
        else:
            self._check_node(target)
            if target == actor:
                raise ValueError(f"FOLLOW self-loop on node {actor}")
            self.followees[actor].add(target)
            self.followers[target].add(actor)
        self.clock = time

    def _check_node(self, i: int) -> None:
        if not 0 <= i < self.n:
            raise KeyError(f"unknown node index {i}")

    # -- queries ---------------------------------------------------------

    def counters(self, i: int) -> TweetCounters:
        self._check_node(i)
        return TweetCounters(
            n_pos=int(self.n_pos[i]),
            n_neg=int(self.n_neg[i]),
            n_neu=int(self.n_neu[i]),
        )

    def n_all(self, i: int) -> int:
        self._check_node(i)
        return int(self.n_pos[i] + self.n_neg[i] + self.n_neu[i])

    def out_degree(self, i: int) -> int:
        self._check_node(i)
        return len(self.followees[i])

    def in_degree(self, i: int) -> int:
        self._check_node(i)
        return len(self.followers[i])

    def has_edge(self, follower: int, followee: int) -> bool:
        self._check_node(follower)
        self._check_node(followee)
        return followee in self.followees[follower]

    def reciprocal_followees(self, i: int) -> set[int]:
        """Followees of ``i`` that also follow ``i`` back."""
        self._check_node(i)
        return self.followees[i] & self.followers[i]

    def shared_followers(self, i: int, j: int) -> int:
        self._check_node(i)
        self._check_node(j)
        return len(self.followers[i] & self.followers[j])

    def shared_followees(self, i: int, j: int) -> int:
        self._check_node(i)
        self._check_node(j)
        return len(self.followees[i] & self.followees[j])

    def n_edges(self) -> int:
        return sum(len(s) for s in self.followees)

    # -- checkpointing -----------------------------------------------------

    def copy(self) -> "NetworkState":
        """Independent checkpoint; the copy shares nothing mutable."""
        out = NetworkState.__new__(NetworkState)
        out.n = self.n
        out.followees = [s.copy() for s in self.followees]
        out.followers = [s.copy() for s in self.followers]
        out.n_pos = self.n_pos.copy()
        out.n_neg = self.n_neg.copy()
        out.n_neu = self.n_neu.copy()
        out.n_unrelated = self.n_unrelated.copy()
        out.clock = self.clock
        return out

    def edge_list(self) -> list[tuple[int, int]]:
        """Debug dump of the adjacency as (follower, followee) pairs."""
        return sorted(
            (a, b) for a, members in enumerate(self.followees) for b in members
        )
