import numpy as np
import pytest

from coxstream import CovariateCache, CovariateSpec, NetworkState
from coxstream.covariates import Covariate, f1, f2, f5

from conftest import make_random_log
from oracles import FOLLOW, TWEET, Snapshot, covariate_matrix, rows_of


def two_followee_fixture():
    """i follows j1 (2 pos of 4 counted) and j2 (1 pos of 2 counted)."""
    state = NetworkState(3)
    i, j1, j2 = 0, 1, 2
    state.apply_row(0.0, FOLLOW, i, -1, j1)
    state.apply_row(0.0, FOLLOW, i, -1, j2)
    for _ in range(2):
        state.apply_row(1.0, TWEET, j1, 0, -1)
    for _ in range(2):
        state.apply_row(1.0, TWEET, j1, 2, -1)
    state.apply_row(1.0, TWEET, j2, 0, -1)
    state.apply_row(1.0, TWEET, j2, 2, -1)
    return state, i


def test_f1_two_followee_fixture():
    state, i = two_followee_fixture()
    assert f1(state, i, "pos") == 1.0


def test_f2_two_followee_fixture():
    state, i = two_followee_fixture()
    assert f2(state, i, "pos") == 1.5


def test_f1_no_followees_is_zero():
    state = NetworkState(2)
    assert f1(state, 0, "pos") == 0.0


def test_f1_all_followees_silent_is_zero():
    state = NetworkState(3)
    state.apply_row(0.0, FOLLOW, 0, -1, 1)
    state.apply_row(0.0, FOLLOW, 0, -1, 2)
    state.apply_row(1.0, TWEET, 1, 3, -1)  # UNRELATED does not count
    assert f1(state, 0, "pos") == 0.0


def test_f2_constant_exposure_equals_constant():
    state = NetworkState(4)
    for j in (1, 2, 3):
        state.apply_row(0.0, FOLLOW, 0, -1, j)
    for j in (1, 2, 3):
        for _ in range(5):
            state.apply_row(1.0, TWEET, j, 0, -1)
    assert f2(state, 0, "pos") == 5.0


def test_f2_zero_when_f1_zero():
    state = NetworkState(2)
    state.apply_row(0.0, FOLLOW, 0, -1, 1)
    assert f1(state, 0, "pos") == 0.0
    assert f2(state, 0, "pos") == 0.0


def test_f5_fully_reciprocal_is_one():
    state = NetworkState(3)
    for j in (1, 2):
        state.apply_row(0.0, FOLLOW, 0, -1, j)
        state.apply_row(0.0, FOLLOW, j, -1, 0)
    for j in (1, 2):
        state.apply_row(1.0, TWEET, j, 0, -1)
    assert f5(state, 0, "pos") == 1.0


def test_f5_no_reciprocal_is_zero():
    state, i = two_followee_fixture()
    assert f5(state, i, "pos") == 0.0


def test_f5_random_matches_weighted_fraction(rng):
    log = make_random_log(rng, n_nodes=30, n_events=300, p_follow=0.5)
    state = NetworkState.from_log(log)
    snap = Snapshot(rows_of(log), log.n_nodes)
    for i in range(state.n):
        f1v = sum(snap.weight(j, "pos") for j in snap.followees[i])
        expected = (
            sum(
                snap.weight(j, "pos")
                for j in snap.followees[i]
                if j in snap.followers[i]
            )
            / f1v
            if f1v > 0
            else 0.0
        )
        assert f5(state, i, "pos") == pytest.approx(expected, rel=1e-12, abs=1e-15)


def test_auxiliary_isolated_node_all_zero():
    spec = CovariateSpec.full()
    state = NetworkState(1)
    assert np.all(spec.node_row(state, 0) == 0.0)


def test_u1_counts_own_tweets():
    spec = CovariateSpec.full()
    state = NetworkState(1)
    for _ in range(3):
        state.apply_row(0.0, TWEET, 0, 0, -1)
    row = spec.node_row(state, 0)
    assert row[spec.index_of("u1_pos")] == 3.0
    assert row[spec.index_of("u1_neg")] == 0.0


def test_f6_shared_follower_gadget():
    # k follows both i and its followee j: one shared follower for that j
    spec = CovariateSpec.from_names(list(CovariateSpec.focal().names) + ["f6"])
    state = NetworkState(3)
    i, j, k = 0, 1, 2
    state.apply_row(0.0, FOLLOW, i, -1, j)
    state.apply_row(0.0, FOLLOW, k, -1, i)
    state.apply_row(0.0, FOLLOW, k, -1, j)
    row = spec.node_row(state, i)
    assert row[spec.index_of("f6")] == 1.0


def test_struct_covariates_basic():
    spec = CovariateSpec.from_names(
        list(CovariateSpec.focal().names)
        + ["struct_outdeg", "struct_indeg", "struct_recip_frac",
           "struct_activity", "struct_log_outdeg", "struct_log_indeg"]
    )
    state = NetworkState(3)
    state.apply_row(0.0, FOLLOW, 0, -1, 1)
    state.apply_row(0.0, FOLLOW, 0, -1, 2)
    state.apply_row(0.0, FOLLOW, 1, -1, 0)
    state.apply_row(1.0, TWEET, 0, 0, -1)
    state.apply_row(1.0, TWEET, 0, 3, -1)
    row = spec.node_row(state, 0)
    assert row[spec.index_of("struct_outdeg")] == 2.0
    assert row[spec.index_of("struct_indeg")] == 1.0
    assert row[spec.index_of("struct_recip_frac")] == 0.5
    assert row[spec.index_of("struct_activity")] == 1.0  # UNRELATED excluded
    assert row[spec.index_of("struct_log_outdeg")] == pytest.approx(np.log(3))
    assert row[spec.index_of("struct_log_indeg")] == pytest.approx(np.log(2))


def test_focal_bounds_invariants(rng):
    spec = CovariateSpec.focal()
    log = make_random_log(rng, n_nodes=25, n_events=400, p_follow=0.4)
    state = NetworkState.from_log(log)
    mat = spec.matrix(state)
    f1p = mat[:, spec.index_of("f1_pos")]
    f1n = mat[:, spec.index_of("f1_neg")]
    f5p = mat[:, spec.index_of("f5_pos")]
    f5n = mat[:, spec.index_of("f5_neg")]
    outdeg = np.array([state.out_degree(i) for i in range(state.n)])
    assert np.all(f1p >= 0) and np.all(f1n >= 0)
    assert np.all((f5p >= 0) & (f5p <= 1))
    assert np.all((f5n >= 0) & (f5n <= 1))
    assert np.all(f1p + f1n <= outdeg + 1e-12)
    assert np.all(mat[:, spec.index_of("f2_pos")] >= 0)


def test_full_matrix_matches_naive_oracle(rng):
    spec = CovariateSpec.full()
    for trial in range(3):
        log = make_random_log(rng, n_nodes=12, n_events=120, p_follow=0.45)
        rows = rows_of(log)
        state = NetworkState.from_log(log)
        got = spec.matrix(state)
        want = covariate_matrix(rows, log.n_nodes, spec.names)
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-15)


def test_cache_initial_matches_brute():
    spec = CovariateSpec.full()
    state = NetworkState(5)
    cache = CovariateCache(state, spec)
    np.testing.assert_array_equal(cache.matrix, spec.matrix(state))


def test_cache_tracks_brute_force_every_step(rng):
    spec = CovariateSpec.full()
    log = make_random_log(rng, n_nodes=20, n_events=250, p_follow=0.4)
    state = NetworkState(log.n_nodes)
    cache = CovariateCache(state, spec)
    reference = NetworkState(log.n_nodes)
    for i in range(log.n_events):
        cache.apply_row(
            float(log.times[i]), int(log.kinds[i]), int(log.actors[i]),
            int(log.labels[i]), int(log.targets[i]),
        )
        reference.apply_row(
            float(log.times[i]), int(log.kinds[i]), int(log.actors[i]),
            int(log.labels[i]), int(log.targets[i]),
        )
        brute = spec.matrix(reference)
        scale = np.maximum(np.abs(brute), 1.0)
        assert np.max(np.abs(cache.matrix - brute) / scale) <= 1e-12


def test_tweet_changes_only_actor_followers_and_u2_followees(rng):
    spec = CovariateSpec.full()
    log = make_random_log(rng, n_nodes=15, n_events=80, p_follow=0.6)
    state = NetworkState(log.n_nodes)
    cache = CovariateCache(state, spec)
    for i in range(log.n_events):
        before = cache.matrix.copy()
        changed = cache.apply_row(
            float(log.times[i]), int(log.kinds[i]), int(log.actors[i]),
            int(log.labels[i]), int(log.targets[i]),
        )
        if log.kinds[i] == TWEET and log.labels[i] <= 2:
            a = int(log.actors[i])
            allowed = {a} | cache.state.followers[a] | cache.state.followees[a]
            assert set(changed.tolist()) <= allowed
        untouched = np.setdiff1d(np.arange(log.n_nodes), changed)
        np.testing.assert_array_equal(cache.matrix[untouched], before[untouched])


def test_unrelated_tweet_changes_nothing():
    spec = CovariateSpec.full()
    state = NetworkState(3)
    state.apply_row(0.0, FOLLOW, 1, -1, 0)
    cache = CovariateCache(state, spec)
    before = cache.matrix.copy()
    changed = cache.apply_row(1.0, TWEET, 0, 3, -1)
    assert changed.size == 0
    np.testing.assert_array_equal(cache.matrix, before)


def test_cache_consistency_check_detects_corruption(rng):
    from coxstream.covariates import CacheDesyncError

    spec = CovariateSpec.focal()
    log = make_random_log(rng, n_nodes=10, n_events=60)
    state = NetworkState(log.n_nodes)
    cache = CovariateCache(state, spec)
    for i in range(log.n_events):
        cache.apply_row(
            float(log.times[i]), int(log.kinds[i]), int(log.actors[i]),
            int(log.labels[i]), int(log.targets[i]),
        )
    cache.check_consistency()
    cache.matrix[3, 0] += 1.0
    with pytest.raises(CacheDesyncError):
        cache.check_consistency()


def test_spec_validation():
    with pytest.raises(ValueError, match="focal"):
        CovariateSpec.from_names(["f1_pos", "f1_neg", "f2_pos", "f2_neg", "f5_pos"])
    with pytest.raises(ValueError, match="duplicate"):
        CovariateSpec.from_names(list(CovariateSpec.focal().names) + ["f1_pos"])
    with pytest.raises(ValueError):
        Covariate("f1")  # sentiment required
    with pytest.raises(ValueError):
        Covariate("struct_outdeg", "pos")
    with pytest.raises(ValueError):
        Covariate.from_name("nope_pos")
    assert CovariateSpec.full().p == 24
    assert CovariateSpec.focal().p == 6
