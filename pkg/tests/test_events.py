import math

import numpy as np
import pytest

from coxstream import (
    EventKind,
    LogParseError,
    SentimentLabel,
    parse_log,
    serialize_log,
    window,
)

from conftest import make_random_log, random_log_lines


def test_empty_stream():
    log = parse_log([])
    assert log.n_events == 0
    assert log.n_nodes == 0


def test_single_tweet_line():
    log = parse_log(["0.0 TWEET u1 POS"])
    assert log.n_events == 1
    assert log.n_nodes == 1
    e = log.event(0)
    assert e.time == 0.0
    assert e.kind == EventKind.TWEET
    assert e.label == SentimentLabel.POSITIVE


def test_out_of_order_times_sorted():
    # both permutations land in the same (stable) time order
    a = parse_log(["5.0 TWEET u1 POS", "3.0 TWEET u2 NEG"])
    b = parse_log(["3.0 TWEET u2 NEG", "5.0 TWEET u1 POS"])
    for log in (a, b):
        assert list(log.times) == [3.0, 5.0]
        assert log.registry.ids[log.actors[0]] == "u2"
        assert log.registry.ids[log.actors[1]] == "u1"


def test_tied_times_keep_line_order():
    log = parse_log(
        ["1.0 TWEET a POS", "1.0 TWEET b NEG", "1.0 TWEET c NEU"]
    )
    names = [log.registry.ids[a] for a in log.actors]
    assert names == ["a", "b", "c"]


def test_comments_and_blank_lines_skipped():
    log = parse_log(["# header", "", "1.0 TWEET u POS", "# trailing"])
    assert log.n_events == 1


@pytest.mark.parametrize(
    "line,fragment",
    [
        ("1.0 TWEET u", "4 fields"),
        ("x TWEET u POS", "bad time"),
        ("inf TWEET u POS", "non-finite"),
        ("1.0 TWEET u BAD", "unknown label"),
        ("1.0 FOLLOW u u", "self-loop"),
        ("1.0 POKE u v", "unknown event kind"),
    ],
)
def test_malformed_lines_raise_with_line_number(line, fragment):
    with pytest.raises(LogParseError) as err:
        parse_log(["0.0 TWEET w NEU", line])
    assert "line 2" in str(err.value)
    assert fragment in str(err.value)


def test_duplicate_follow_dropped_with_count():
    log = parse_log(
        [
            "0.0 FOLLOW a b",
            "1.0 FOLLOW a b",
            "2.0 FOLLOW b a",
            "3.0 FOLLOW a b",
        ]
    )
    assert log.n_events == 2
    assert log.duplicate_follows == 2


def test_parse_serialize_parse_identity(rng):
    log = make_random_log(rng, n_nodes=20, n_events=200)
    text = serialize_log(log)
    log2 = parse_log(text.splitlines())
    assert np.array_equal(log.times, log2.times)
    assert np.array_equal(log.kinds, log2.kinds)
    assert np.array_equal(log.actors, log2.actors)
    assert np.array_equal(log.labels, log2.labels)
    assert np.array_equal(log.targets, log2.targets)
    assert log.registry.ids == log2.registry.ids
    assert serialize_log(log2) == text


def test_window_identity_and_all_history(rng):
    log = make_random_log(rng, n_nodes=10, n_events=50)
    hist, ana = window(log, -math.inf, math.inf)
    assert hist.n_events == 0
    assert ana.n_events == log.n_events
    hist, ana = window(log, math.inf, math.inf)
    assert hist.n_events == log.n_events
    assert ana.n_events == 0


def test_window_counts_by_linear_scan():
    lines = [f"{float(t)!r} TWEET u POS" for t in range(1, 11)]
    log = parse_log(lines)
    hist, ana = window(log, 6.0, 10.0)
    assert hist.n_events == 5
    assert ana.n_events == 5


def test_window_partition_property(rng):
    log = make_random_log(rng, n_nodes=15, n_events=120)
    for _ in range(20):
        t0, t1 = np.sort(rng.uniform(-5, 110, size=2))
        hist, ana = window(log, t0, t1)
        n_le_end = int(np.sum(log.times <= t1))
        assert hist.n_events + ana.n_events == n_le_end
        assert np.all(hist.times < t0)
        assert np.all((ana.times >= t0) & (ana.times <= t1))


def test_window_rejects_inverted_bounds(rng):
    log = make_random_log(rng, n_nodes=5, n_events=10)
    with pytest.raises(ValueError):
        window(log, 5.0, 1.0)


def test_window_boundaries_inclusive_exclusive():
    log = parse_log(["1.0 TWEET a POS", "2.0 TWEET a POS", "3.0 TWEET a POS"])
    hist, ana = window(log, 2.0, 3.0)
    assert list(hist.times) == [1.0]
    assert list(ana.times) == [2.0, 3.0]


def test_replace_labels_touches_only_tweets():
    log = parse_log(["0.0 FOLLOW a b", "1.0 TWEET a POS"])
    out = log.replace_labels(np.array([2, 2]))
    assert out.labels[0] == -1  # FOLLOW row keeps the sentinel
    assert out.labels[1] == 2
