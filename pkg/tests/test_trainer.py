import math

import numpy as np
import pytest

from dressedq.dataio import BatchPlan, SplitSpec, split_and_batch
from dressedq.errors import DivergenceError, ShapeError
from dressedq.model import DressedModel
from dressedq.qlayer import QuantumLayerConfig
from dressedq.smote import LabeledDataset, class_counts
from dressedq.trainer import (
    Adam,
    MetricsRecord,
    SGD,
    TrainConfig,
    accuracy,
    confusion_matrix,
    evaluate,
    fit,
    mae,
    metrics_csv,
    read_metrics_csv,
)


def two_blobs(seed=0, n=40):
    rng = np.random.default_rng(seed)
    labels = np.repeat([0, 1], n // 2)
    centers = np.array([[-1.5, -1.5], [1.5, 1.5]])
    return LabeledDataset(centers[labels] + rng.normal(0, 0.5, size=(n, 2)), labels, ["a", "b"])


def small_setup(seed=0, n_qubits=2, depth=1):
    ds = two_blobs(seed)
    plan, val = split_and_batch(ds, SplitSpec(0.75, True, seed), batch_size=1)
    model = DressedModel.init(2, 2, QuantumLayerConfig(n_qubits, depth), seed=seed, class_names=ds.class_names)
    return model, plan, val


def test_accuracy_examples():
    assert accuracy([1, 2, 3], [1, 2, 3]) == 1.0
    assert accuracy([1, 2, 3], [1, 2, 0]) == pytest.approx(2 / 3, abs=1e-15)
    assert accuracy([0, 0], [1, 1]) == 0.0
    with pytest.raises(ValueError):
        accuracy([], [])
    with pytest.raises(ValueError):
        accuracy([1], [1, 2])


def test_mae_examples():
    assert mae([1, 2], [1, 2]) == 0.0
    assert mae([0, 2], [1, 2]) == 0.5
    assert mae([0], [6]) == 6.0
    with pytest.raises(ValueError):
        mae([], [])


def test_confusion_examples():
    np.testing.assert_array_equal(confusion_matrix([0, 1, 1, 2], [0, 1, 1, 2], 3), np.diag([1, 2, 1]))
    np.testing.assert_array_equal(confusion_matrix([1, 1], [0, 1], 2), [[0, 1], [0, 1]])
    np.testing.assert_array_equal(confusion_matrix([], [], 3), np.zeros((3, 3)))
    with pytest.raises(ValueError):
        confusion_matrix([3], [0], 3)


def test_confusion_consistent_with_accuracy(rng):
    preds = rng.integers(0, 5, size=200)
    labels = rng.integers(0, 5, size=200)
    cm = confusion_matrix(preds, labels, 5)
    assert cm.sum() == 200
    np.testing.assert_array_equal(cm.sum(axis=1), np.bincount(labels, minlength=5))
    assert abs(accuracy(preds, labels) - np.trace(cm) / cm.sum()) <= 1e-12


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(optimizer="rmsprop")
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=-1)
    assert TrainConfig().lr == 0.05 and TrainConfig(optimizer="adam").lr == 0.001
    assert TrainConfig().epochs == 10


def test_sgd_and_adam_steps():
    p = {"w": np.array([1.0, -2.0])}
    SGD(0.5).step(p, {"w": np.array([2.0, 2.0])})
    np.testing.assert_array_equal(p["w"], [0.0, -3.0])
    p = {"w": np.array([1.0])}
    opt = Adam(0.1)
    opt.step(p, {"w": np.array([4.0])})
    # first bias-corrected Adam step moves by lr * sign(g)
    assert p["w"][0] == pytest.approx(0.9, abs=1e-8)


def test_zero_learning_rate_changes_nothing():
    model, plan, val = small_setup()
    result = fit(model, plan, val, TrainConfig(epochs=3, learning_rate=0.0))
    assert result.model.checksum() == model.checksum()
    train_recs = [r for r in result.history if r.phase == "train"]
    assert len({(r.accuracy, r.loss, r.mae) for r in train_recs}) == 1


def test_fit_does_not_mutate_input_model():
    model, plan, val = small_setup()
    before = model.checksum()
    fit(model, plan, val, TrainConfig(epochs=1))
    assert model.checksum() == before


def test_history_layout_and_validation_side_effect_free():
    model, plan, val = small_setup()
    result = fit(model, plan, val, TrainConfig(epochs=3))
    assert [(r.epoch, r.phase) for r in result.history] == [
        (1, "train"), (1, "validation"), (2, "train"), (2, "validation"), (3, "train"), (3, "validation")
    ]
    assert len(result.validation_checksums) == 3
    assert all(before == after for before, after in result.validation_checksums)
    for r in result.history:
        assert 0 <= r.accuracy <= 1 and r.loss >= 0 and r.mae >= 0 and math.isfinite(r.loss)
    cm = result.confusion["validation"]
    assert cm.sum() == len(val)
    assert np.trace(cm) / cm.sum() == pytest.approx(result.history[-1].accuracy, abs=1e-12)


def test_separable_blobs_reach_high_accuracy():
    model, plan, val = small_setup()
    result = fit(model, plan, val, TrainConfig(epochs=50, seed=0))
    assert max(r.accuracy for r in result.history if r.phase == "train") >= 0.95


def test_fit_deterministic():
    model, plan, val = small_setup(1)
    cfg = TrainConfig(epochs=2, use_lora=True, use_smote=True, seed=4)
    a = fit(model, plan, val, cfg)
    b = fit(model, plan, val, cfg)
    assert a.history == b.history
    assert a.model.checksum() == b.model.checksum()


def test_lora_keeps_base_weights_frozen():
    model, plan, val = small_setup()
    result = fit(model, plan, val, TrainConfig(epochs=2, use_lora=True, lora_rank=2, lora_alpha=4.0))
    trained = result.model
    assert trained.uses_lora
    assert trained.pre_net.base.weights.tobytes() == model.pre_net.weights.tobytes()
    assert trained.pre_net.base.bias.tobytes() == model.pre_net.bias.tobytes()
    assert trained.post_net.base.weights.tobytes() == model.post_net.weights.tobytes()
    assert trained.post_net.base.bias.tobytes() == model.post_net.bias.tobytes()
    assert np.any(trained.pre_net.B != 0)


def test_smote_balances_training_split_only():
    rng = np.random.default_rng(0)
    labels = np.array([0] * 30 + [1] * 10)
    ds = LabeledDataset(rng.normal(size=(40, 2)) + labels[:, None], labels)
    plan, val = split_and_batch(ds, SplitSpec(0.75, True, 0))
    model = DressedModel.init(2, 2, QuantumLayerConfig(2, 1), seed=0)
    result = fit(model, plan, val, TrainConfig(epochs=1, use_smote=True))
    assert class_counts(result.train_data).tolist() == [23, 23]
    assert result.confusion["validation"].sum() == len(val) == 10


def test_adam_optimizer_runs():
    model, plan, val = small_setup()
    result = fit(model, plan, val, TrainConfig(epochs=2, optimizer="adam"))
    assert result.model.checksum() != model.checksum()


def test_dimension_mismatch():
    model, plan, val = small_setup()
    wide = LabeledDataset(np.zeros((4, 3)), [0, 1, 0, 1])
    with pytest.raises(ShapeError):
        fit(model, BatchPlan(wide), val)
    with pytest.raises(ShapeError):
        evaluate(model, wide)


def test_divergence_is_reported():
    model, plan, val = small_setup()
    with pytest.raises(DivergenceError) as err:
        fit(model, plan, val, TrainConfig(epochs=1, learning_rate=1e308))
    assert err.value.epoch == 1


def test_metrics_csv_roundtrip():
    history = [MetricsRecord(1, "train", 0.5, 0.6931471805599453, 0.5), MetricsRecord(1, "validation", 1.0, 0.1, 0.0)]
    text = metrics_csv(history)
    assert text.splitlines()[0] == "epoch,phase,accuracy,loss,mae"
    assert read_metrics_csv(text) == history
