import numpy as np
import pytest

from coxstream import parse_log


def random_log_lines(
    rng,
    n_nodes=50,
    n_events=500,
    t_max=100.0,
    p_follow=0.3,
    tie_fraction=0.2,
    label_probs=(0.35, 0.3, 0.2, 0.15),
):
    """Random mixed TWEET/FOLLOW stream as raw lines (some tied times)."""
    tokens = ["POS", "NEG", "NEU", "UNR"]
    times = np.sort(rng.uniform(0.0, t_max, size=n_events))
    ties = rng.random(n_events) < tie_fraction
    times[ties] = np.round(times[ties])
    times = np.sort(times)
    lines = []
    for t in times:
        t = float(t)
        if rng.random() < p_follow:
            a = int(rng.integers(n_nodes))
            b = int(rng.integers(n_nodes - 1))
            b = int(b + (b >= a))
            lines.append(f"{t!r} FOLLOW n{a} n{b}")
        else:
            a = int(rng.integers(n_nodes))
            lab = tokens[int(rng.choice(4, p=list(label_probs)))]
            lines.append(f"{t!r} TWEET n{a} {lab}")
    # register every node so dense indices cover [0, n_nodes)
    for i in range(n_nodes):
        lines.append(f"{float(t_max + 1.0)!r} TWEET n{i} NEU")
    return lines


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


def make_random_log(rng, **kwargs):
    return parse_log(random_log_lines(rng, **kwargs))
