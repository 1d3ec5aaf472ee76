import numpy as np
import pytest

from coxstream import (
    ConfusionModel,
    CovariateSpec,
    FitConfig,
    SentimentLabel,
    SimConfig,
    estimate_confusion,
    reclassify,
    run_profile,
    simulate,
)
from coxstream.resampler import profile_table, realization_seed, summary_table


@pytest.fixture(scope="module")
def sim_log():
    config = SimConfig(
        n_nodes=30, horizon=60.0, seed=21, baseline_pos=0.04,
        baseline_neg=0.04, neutral_rate=0.03, p_edge=0.1, p_reciprocal=0.4,
    )
    return simulate(config).log


def test_identity_confusion_is_noop(sim_log):
    out = reclassify(sim_log, ConfusionModel.identity(), seed=3)
    assert np.array_equal(out.labels, sim_log.labels)


def test_permutation_confusion_swaps_labels(sim_log):
    q = np.eye(4)[[1, 0, 2, 3]]  # swap POS and NEG rows
    out = reclassify(sim_log, ConfusionModel(q), seed=3)
    pos_before = sim_log.labels == int(SentimentLabel.POSITIVE)
    neg_before = sim_log.labels == int(SentimentLabel.NEGATIVE)
    assert np.all(out.labels[pos_before] == int(SentimentLabel.NEGATIVE))
    assert np.all(out.labels[neg_before] == int(SentimentLabel.POSITIVE))


def test_reclassify_changes_only_labels(sim_log):
    out = reclassify(sim_log, ConfusionModel.uniform(), seed=5)
    assert np.array_equal(out.times, sim_log.times)
    assert np.array_equal(out.kinds, sim_log.kinds)
    assert np.array_equal(out.actors, sim_log.actors)
    assert np.array_equal(out.targets, sim_log.targets)
    follows = sim_log.kinds == 1
    assert np.array_equal(out.labels[follows], sim_log.labels[follows])


def test_uniform_confusion_label_shares(rng):
    # 10,000 tweets, uniform redraw: each label's share within 3 sigma of 1/4
    lines = [f"{float(t)!r} TWEET u POS" for t in range(10_000)]
    from coxstream import parse_log

    log = parse_log(lines)
    out = reclassify(log, ConfusionModel.uniform(), seed=17)
    n = 10_000
    sigma = np.sqrt(0.25 * 0.75 / n)
    for lab in range(4):
        share = float(np.mean(out.labels == lab))
        assert abs(share - 0.25) <= 3 * sigma


def test_reclassify_deterministic_per_seed(sim_log):
    a = reclassify(sim_log, ConfusionModel.diagonal(0.8), seed=9)
    b = reclassify(sim_log, ConfusionModel.diagonal(0.8), seed=9)
    c = reclassify(sim_log, ConfusionModel.diagonal(0.8), seed=10)
    assert np.array_equal(a.labels, b.labels)
    assert not np.array_equal(a.labels, c.labels)


def test_estimate_confusion_perfect_calibration():
    pairs = [("POS", "POS"), ("NEG", "NEG"), ("NEU", "NEU"), ("UNR", "UNR")] * 5
    model = estimate_confusion(pairs, smoothing=0.0)
    np.testing.assert_array_equal(model.matrix, np.eye(4))


def test_estimate_confusion_single_pair():
    model = estimate_confusion([("POS", "NEG")], smoothing=0.0)
    np.testing.assert_array_equal(model.matrix[0], [0.0, 1.0, 0.0, 0.0])


def test_estimate_confusion_missing_class_needs_smoothing():
    with pytest.raises(ValueError, match="absent"):
        estimate_confusion([("POS", "POS")], smoothing=0.0)
    model = estimate_confusion([("POS", "POS")], smoothing=1.0)
    np.testing.assert_allclose(model.matrix.sum(axis=1), 1.0)


def test_estimate_confusion_accuracy_mass(rng):
    # calibration set consistent with an 84.29% accurate classifier
    n = 10_000
    accuracy = 0.8429
    pairs = []
    for _ in range(n):
        pred = int(rng.integers(4))
        if rng.random() < accuracy:
            true = pred
        else:
            true = int((pred + 1 + rng.integers(3)) % 4)
        pairs.append((pred, true))
    model = estimate_confusion(pairs, smoothing=0.0)
    counts = model.calibration_counts.sum(axis=1)
    mass = model.diagonal_mass(weights=counts)
    assert mass == pytest.approx(accuracy, abs=0.015)


def test_run_profile_identity_confusion_degenerate(sim_log):
    spec = CovariateSpec.focal()
    profiles = run_profile(
        sim_log, spec, FitConfig(), ConfusionModel.identity(),
        k_realizations=5, master_seed=1,
    )
    for profile in profiles.values():
        assert profile.k_total == 5
        # all realizations identical: zero dispersion per coefficient
        assert np.all(profile.estimates.std(axis=0) == 0.0)
        assert np.all(profile.ci_lower.std(axis=0) == 0.0)
        fr = profile.significance_fractions()
        for key in ("sig_pos", "sig_neg", "not_sig"):
            assert np.all(np.isin(fr[key], [0.0, 1.0]))


def test_run_profile_k1_reduces_to_single_fit(sim_log):
    spec = CovariateSpec.focal()
    profiles = run_profile(
        sim_log, spec, FitConfig(), ConfusionModel.identity(),
        k_realizations=1, master_seed=0,
    )
    from coxstream import fit, window

    hist, ana = window(sim_log, float("-inf"), float("inf"))
    direct = fit(hist, ana, spec, "positive")
    np.testing.assert_allclose(
        profiles["positive"].estimates[0], direct.beta, rtol=1e-10
    )


def test_run_profile_reproducible_and_fraction_sums(sim_log):
    spec = CovariateSpec.focal()
    kwargs = dict(k_realizations=6, master_seed=33)
    a = run_profile(sim_log, spec, FitConfig(), ConfusionModel.diagonal(0.85), **kwargs)
    b = run_profile(sim_log, spec, FitConfig(), ConfusionModel.diagonal(0.85), **kwargs)
    for s in ("positive", "negative"):
        np.testing.assert_array_equal(a[s].estimates, b[s].estimates)
        fr = a[s].significance_fractions()
        total = fr["sig_pos"] + fr["sig_neg"] + fr["not_sig"]
        np.testing.assert_allclose(total, 1.0, atol=1e-12)


def test_run_profile_parallel_matches_serial(sim_log):
    spec = CovariateSpec.focal()
    kwargs = dict(k_realizations=4, master_seed=2)
    serial = run_profile(
        sim_log, spec, FitConfig(), ConfusionModel.diagonal(0.9), n_jobs=1, **kwargs
    )
    parallel = run_profile(
        sim_log, spec, FitConfig(), ConfusionModel.diagonal(0.9), n_jobs=2, **kwargs
    )
    for s in ("positive", "negative"):
        np.testing.assert_array_equal(serial[s].estimates, parallel[s].estimates)


def test_profile_and_summary_tables(sim_log):
    spec = CovariateSpec.focal()
    profiles = run_profile(
        sim_log, spec, FitConfig(), ConfusionModel.diagonal(0.9),
        k_realizations=3, master_seed=4,
    )
    profile = profiles["positive"]
    table = profile_table(profile)
    data_rows = [
        l for l in table.strip().splitlines()
        if not l.startswith("#") and not l.startswith("covariate\t")
    ]
    assert len(data_rows) == 3 * len(spec.names)
    summary = summary_table(profile)
    assert "sig_pos_pct" in summary
    assert f"# k_total: 3" in summary


def test_realization_seed_rule():
    a = realization_seed(7, 0).integers(1 << 30)
    b = realization_seed(7, 0).integers(1 << 30)
    c = realization_seed(7, 1).integers(1 << 30)
    assert a == b
    assert a != c


def test_confusion_model_validation():
    with pytest.raises(ValueError):
        ConfusionModel(np.ones((4, 4)))
    with pytest.raises(ValueError):
        ConfusionModel(np.eye(3))
    with pytest.raises(ValueError):
        ConfusionModel(np.eye(4) * -1.0)


def test_monotone_degradation_trend():
    # a strong true effect (on the bounded reciprocity covariate) stays
    # significant under light confusion and degrades as off-diagonal mass
    # grows
    spec = CovariateSpec.focal()
    config = SimConfig(
        n_nodes=40, horizon=120.0, seed=77, spec=spec,
        beta_pos=(0, 0, 0, 0, 1.0, 0), baseline_pos=0.03, baseline_neg=0.03,
        neutral_rate=0.02, p_edge=0.08, p_reciprocal=0.5,
    )
    log = simulate(config).log
    k_idx = 4  # f5_pos
    fractions = []
    for acc in (0.95, 0.6, 0.3):
        profiles = run_profile(
            log, spec, FitConfig(), ConfusionModel.diagonal(acc),
            k_realizations=12, master_seed=5,
        )
        fr = profiles["positive"].significance_fractions()["sig_pos"][k_idx]
        fractions.append(float(fr))
    assert fractions[0] >= fractions[-1]
    assert fractions[0] >= 0.8
