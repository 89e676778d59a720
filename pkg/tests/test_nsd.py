"""Outlier-model features, scaler, logistic regression, persistence."""

import math

import numpy as np
import pytest

from oracles import central_difference_gradient, logreg_loss, plain_gd_logreg
from scmkit import nsd
from scmkit.corpus import parse_dataset
from scmkit.geometry import EmbeddingTable
from synthdata import make_synthetic


def test_feature_names_canonical_order():
    assert len(nsd.FEATURE_NAMES) == 13
    assert nsd.FEATURE_NAMES[0] == "space_a_cos"
    assert nsd.FEATURE_NAMES[4] == "space_a_euclid_l2"
    assert nsd.FEATURE_NAMES[5] == "space_b_cos"
    assert nsd.FEATURE_NAMES[10:] == ("n_old_usages", "n_old_senses", "n_new_usages")


def pair_of_tables(usage_a, gloss_a, usage_b=None, gloss_b=None, dim=2):
    ta = EmbeddingTable("a", dim)
    tb = EmbeddingTable("b", dim)
    ta.add("usage", "u", np.asarray(usage_a, dtype=float))
    ta.add("gloss", "s", np.asarray(gloss_a, dtype=float))
    tb.add("usage", "u", np.asarray(usage_b if usage_b is not None else usage_a, dtype=float))
    tb.add("gloss", "s", np.asarray(gloss_b if gloss_b is not None else gloss_a, dtype=float))
    return ta, tb


def test_identical_vectors_zero_distances_counts_pass_through():
    tables = pair_of_tables([1.0, 2.0], [1.0, 2.0])
    f = nsd.extract_features("u", "s", tables, (5, 2, 7))
    assert np.allclose(f[:10], 0.0, atol=1e-12)
    assert np.array_equal(f[10:], [5.0, 2.0, 7.0])


def test_orthogonal_vectors_feature_values():
    tables = pair_of_tables([1.0, 0.0], [0.0, 1.0])
    f = nsd.extract_features("u", "s", tables, (0, 0, 0))
    expected = [1.0, math.sqrt(2), 2.0, 2.0, math.sqrt(2)]
    assert np.allclose(f[:5], expected, atol=1e-12)
    assert np.allclose(f[5:10], expected, atol=1e-12)


def test_fit_scaler_population_std_and_degenerate_column():
    rows = np.array([
        [1.0, 4.0, 9.0],
        [3.0, 4.0, 9.0],
    ])
    scaler = nsd.fit_scaler(rows)
    assert np.allclose(scaler.mean, [2.0, 4.0, 9.0])
    assert np.allclose(scaler.std, [1.0, 1.0, 1.0])  # zero stds forced to 1
    scaled = scaler.transform(rows)
    assert np.allclose(scaled.mean(axis=0), 0.0, atol=1e-12)
    with pytest.raises(ValueError):
        nsd.fit_scaler(rows[:1])


def test_sigmoid_center_and_saturation():
    assert nsd.sigmoid(np.array([0.0]))[0] == 0.5
    big = nsd.sigmoid(np.array([800.0, -800.0]))
    assert big[0] == pytest.approx(1.0)
    assert big[1] == pytest.approx(0.0)
    assert np.all(np.isfinite(big))


def test_objective_matches_independent_loss_and_gradient():
    rng = np.random.default_rng(42)
    for _ in range(20):
        n, d = int(rng.integers(3, 12)), int(rng.integers(1, 5))
        x = rng.normal(size=(n, d))
        y = rng.integers(0, 2, size=n).astype(float)
        w = rng.normal(size=d)
        b = float(rng.normal())
        c = float(rng.uniform(0.3, 3.0))

        loss, grad_w, grad_b = nsd.logreg_objective(w, b, x, y, c)
        assert loss == pytest.approx(logreg_loss(w, b, x, y, c), rel=1e-10)

        point = np.concatenate([w, [b]])

        def f(p):
            return logreg_loss(p[:-1], p[-1], x, y, c)

        numeric = central_difference_gradient(f, point, eps=1e-6)
        analytic = np.concatenate([grad_w, [grad_b]])
        denom = max(1.0, float(np.linalg.norm(numeric)))
        assert float(np.linalg.norm(analytic - numeric)) / denom <= 1e-6


def test_train_separable_sign_and_single_class_error():
    x = np.array([[-1.0], [1.0]])
    y = [0, 1]
    w, b = nsd.train_logreg(x, y)
    assert w[0] > 0
    with pytest.raises(ValueError, match="both classes"):
        nsd.train_logreg(x, [1, 1])


def test_training_objective_never_increases():
    rng = np.random.default_rng(8)
    x = rng.normal(size=(30, 4))
    y = (x[:, 0] + 0.3 * rng.normal(size=30) > 0).astype(int)
    if y.min() == y.max():
        y[0] = 1 - y[0]
    trace = []
    nsd.train_logreg(x, y, trace=trace)
    assert len(trace) >= 2
    assert all(b <= a + 1e-12 for a, b in zip(trace, trace[1:]))


def test_trained_weights_match_plain_gradient_descent():
    rng = np.random.default_rng(1234)
    for _ in range(4):
        n, d = int(rng.integers(10, 40)), int(rng.integers(2, 6))
        x = rng.normal(size=(n, d))
        w_true = rng.normal(size=d)
        y = (nsd.sigmoid(x @ w_true) > rng.uniform(size=n)).astype(int)
        if y.min() == y.max():
            y[0] = 1 - y[0]
        w, b = nsd.train_logreg(x, y)
        w_ref, b_ref, gnorm = plain_gd_logreg(x, y, c=1.0)
        assert gnorm < 1e-6, "reference optimizer failed to converge"
        assert float(np.abs(w - w_ref).max()) <= 1e-4
        assert abs(b - b_ref) <= 1e-4


def identity_model(weights, bias, threshold=nsd.DEFAULT_THRESHOLD):
    d = len(weights)
    scaler = nsd.ScalerParams(np.zeros(d), np.ones(d))
    pad = np.zeros(13)
    pad[:d] = weights
    return nsd.NsdModel(scaler=nsd.ScalerParams(np.zeros(13), np.ones(13)),
                        weights=pad, bias=bias, threshold=threshold)


def test_outlier_decision_is_strictly_above_threshold():
    model = identity_model([1.0], 0.0)
    f = np.zeros(13)
    f[0] = math.log(0.65 / 0.35)
    p, _ = nsd.predict_outlier(model, f)
    exactly = model.with_threshold(p)
    assert nsd.predict_outlier(exactly, f) == (p, False)
    below = model.with_threshold(p - 1e-9)
    assert nsd.predict_outlier(below, f) == (p, True)


def test_raising_threshold_never_creates_outliers():
    rng = np.random.default_rng(3)
    model_lo = identity_model(rng.normal(size=13), 0.1, threshold=0.3)
    model_hi = model_lo.with_threshold(0.8)
    for _ in range(50):
        f = rng.normal(size=13)
        _, out_lo = nsd.predict_outlier(model_lo, f)
        _, out_hi = nsd.predict_outlier(model_hi, f)
        assert not (out_hi and not out_lo)


def test_model_validation():
    scaler = nsd.ScalerParams(np.zeros(13), np.ones(13))
    with pytest.raises(ValueError):
        nsd.NsdModel(scaler=scaler, weights=np.zeros(12), bias=0.0)
    with pytest.raises(ValueError):
        nsd.NsdModel(scaler=scaler, weights=np.zeros(13), bias=0.0, threshold=1.5)
    with pytest.raises(ValueError):
        nsd.ScalerParams(np.zeros(2), np.array([1.0, 0.0]))


def test_model_round_trip_is_lossless(tmp_path):
    rng = np.random.default_rng(10)
    model = nsd.NsdModel(
        scaler=nsd.ScalerParams(rng.normal(size=13), np.abs(rng.normal(size=13)) + 0.1),
        weights=rng.normal(size=13),
        bias=float(rng.normal()),
        threshold=0.73,
    )
    path = tmp_path / "model.txt"
    nsd.save_model(model, path)
    back = nsd.load_model(path)
    assert np.array_equal(back.scaler.mean, model.scaler.mean)
    assert np.array_equal(back.scaler.std, model.scaler.std)
    assert np.array_equal(back.weights, model.weights)
    assert back.bias == model.bias
    assert back.threshold == model.threshold


def test_model_file_errors(tmp_path):
    model = nsd.NsdModel(
        scaler=nsd.ScalerParams(np.zeros(13), np.ones(13)),
        weights=np.zeros(13), bias=0.0,
    )
    lines = nsd.serialize_model(model).splitlines()

    short = tmp_path / "short.txt"
    short.write_text("\n".join(lines[1:]) + "\n")
    with pytest.raises(nsd.ModelFormatError, match="feature names"):
        nsd.load_model(short)

    renamed = tmp_path / "renamed.txt"
    renamed.write_text("\n".join(lines).replace("space_a_cos", "space_a_cosine") + "\n")
    with pytest.raises(nsd.ModelFormatError):
        nsd.load_model(renamed)

    no_bias = tmp_path / "nobias.txt"
    no_bias.write_text("\n".join(l for l in lines if not l.startswith("bias")) + "\n")
    with pytest.raises(nsd.ModelFormatError, match="bias or threshold"):
        nsd.load_model(no_bias)

    garbage = tmp_path / "garbage.txt"
    garbage.write_text("feature space_a_cos mean x std 1 weight 0\n")
    with pytest.raises(nsd.ModelFormatError, match="line 1"):
        nsd.load_model(garbage)


def test_build_training_data_labels_gained_senses():
    dataset, table_a, table_b = make_synthetic(n_words=3, n_old=4, n_new=8, seed=5)
    data = nsd.build_training_data(dataset, table_a, table_b)
    assert data.rows.shape == (24, 13)
    # new usages cycle senses 0..3; senses 2 and 3 are gained
    for uid, label in zip(data.usage_ids, data.labels):
        idx = int(uid.rsplit("new", 1)[1])
        assert label == (1 if idx % 4 >= 2 else 0)


def test_build_training_data_requires_gold():
    lines = [
        "word\tusage_id\tperiod\ttext\tstart\tend\tsense_id\tgloss",
        "w\tu1\told\tx\t\t\tw:s0\tgloss text",
        "w\tu2\tnew\ty\t\t\t\t",
    ]
    dataset = parse_dataset(lines)
    ta = EmbeddingTable("a", 2)
    tb = EmbeddingTable("b", 2)
    for t in (ta, tb):
        t.add("usage", "u1", np.array([1.0, 0.0]))
        t.add("usage", "u2", np.array([0.0, 1.0]))
        t.add("gloss", "w:s0", np.array([1.0, 0.0]))
    with pytest.raises(ValueError, match="gold"):
        nsd.build_training_data(dataset, ta, tb)


def test_train_nsd_model_end_to_end_separates():
    dataset, table_a, table_b = make_synthetic(n_words=6, n_old=6, n_new=12, seed=11)
    model = nsd.train_nsd_model(dataset, table_a, table_b)
    data = nsd.build_training_data(dataset, table_a, table_b)
    correct = 0
    for row, label in zip(data.rows, data.labels):
        _, flagged = nsd.predict_outlier(model, row)
        correct += int(flagged == bool(label))
    assert correct / len(data.labels) >= 0.95
