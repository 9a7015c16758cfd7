import math

import numpy as np
import pytest

import mdnfair


def test_version():
    assert mdnfair.__version__.startswith("mdn ")


def test_ce_loss_uniform_logits():
    logits = np.zeros((1, 2))
    y = np.array([0], dtype=np.int32)
    loss, probs = mdnfair.ce_loss(logits, y)
    assert loss == pytest.approx(math.log(2.0), abs=1e-12)
    assert probs[0, 0] == pytest.approx(0.5, abs=1e-12)


def test_msl_reduces_to_ce_at_zero_margins():
    rng = np.random.default_rng(0)
    logits = rng.normal(size=(6, 3))
    y = rng.integers(0, 3, size=6).astype(np.int32)
    b = rng.integers(0, 2, size=6).astype(np.int32)
    ce, _ = mdnfair.ce_loss(logits, y)
    msl, _ = mdnfair.msl_loss(logits, y, b, np.zeros((3, 2)))
    assert msl == ce  # bit-identical


def test_margin_gradient_sums_to_zero_per_bias_column():
    rng = np.random.default_rng(1)
    logits = rng.normal(size=(8, 3))
    y = rng.integers(0, 3, size=8).astype(np.int32)
    b = rng.integers(0, 2, size=8).astype(np.int32)
    grad = mdnfair.msl_grad_margins(logits, y, b, np.zeros((3, 2)))
    # Within every sample, onehot and softmax both sum to 1, so each bias
    # column of the batch-mean gradient sums to 0.
    assert np.allclose(grad.sum(axis=0), 0.0, atol=1e-12)


def test_generate_dataset_shapes_and_balance():
    d = mdnfair.generate_dataset(kind="blobs", classes=2, bias=2, rho=0.9,
                                 n_train=400, n_test=80, seed=5)
    assert d["train"]["x"].shape == (400, 4)
    counts = d["group_counts"]
    assert counts.sum() == 400
    # The evaluation splits are group-balanced by construction.
    test_y, test_b = d["test"]["y"], d["test"]["b"]
    cells = {(int(y), int(b)) for y, b in zip(test_y, test_b)}
    assert len(cells) == 4
    per_cell = [np.sum((test_y == y) & (test_b == b)) for y, b in cells]
    assert len(set(per_cell)) == 1
    assert 0.8 <= d["realized_correlation"] <= 1.0


def test_mel_loss_zero_when_groups_match():
    logits = np.array([[2.0, 0.0], [2.0, 0.0], [0.0, 2.0], [0.0, 2.0]])
    y = np.array([0, 0, 1, 1], dtype=np.int32)
    b = np.array([0, 1, 1, 0], dtype=np.int32)
    counts = np.array([[90, 10], [10, 90]], dtype=np.int64)
    value, gaps = mdnfair.mel_loss(logits, y, b, counts)
    assert value == pytest.approx(0.0, abs=1e-12)
    assert gaps == pytest.approx([0.0, 0.0], abs=1e-12)


def test_metrics_aggregates():
    y_true = np.array([0, 0, 1, 1], dtype=np.int32)
    b = np.array([0, 1, 0, 1], dtype=np.int32)
    y_pred = np.array([0, 1, 1, 1], dtype=np.int32)
    counts = np.array([[90, 10], [10, 90]], dtype=np.int64)
    rep = mdnfair.metrics(y_true, b, y_pred, counts)
    assert rep["unbiased_acc"] == pytest.approx(0.75)
    assert rep["worst_group_acc"] == pytest.approx(0.0)
    assert rep["bias_conflict_acc"] == pytest.approx(0.5)


def test_gradient_checks_pass():
    for suite in mdnfair.run_gradient_checks(seed=3, instances=2):
        assert suite["pass"], suite


def test_train_end_to_end_deterministic():
    kwargs = dict(kind="blobs", classes=2, bias=2, rho=0.95, n_train=600,
                  n_test=120, mode="mdn", epochs=2, hidden=[16], seed=9)
    r1 = mdnfair.train(**kwargs)
    r2 = mdnfair.train(**kwargs)
    assert r1["best_epoch"] == r2["best_epoch"]
    assert r1["test"]["unbiased_acc"] == r2["test"]["unbiased_acc"]
    assert np.array_equal(r1["margins"], r2["margins"])
    assert len(r1["epochs"]) == 2


def test_errors_surface_as_engine_error():
    with pytest.raises(Exception):
        mdnfair.generate_dataset(kind="blobs", classes=2, bias=2, rho=0.2)
