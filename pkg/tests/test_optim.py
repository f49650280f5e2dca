import numpy as np
import pytest

from ahcr import layers as L
from ahcr.dataset import synth_dataset
from ahcr.model import PARAM_ORDER, Model
from ahcr.optim import EpochRecord, SgdConfig, TrainHistory, TrainingDiverged, sgd_step, train


def scalar_step(p, g, v, **kw):
    params, grads, vel = {"w": np.array([[p]])}, {"w": np.array([[g]])}, {"w": np.array([[v]])}
    sgd_step(params, grads, vel, SgdConfig(**kw))
    return params["w"][0, 0], vel["w"][0, 0]


def test_defaults_are_reference_hyperparameters():
    cfg = SgdConfig()
    assert (cfg.learning_rate, cfg.momentum, cfg.weight_decay, cfg.batch_size, cfg.max_epochs) == \
        (0.02, 0.8, 0.001, 32, 400)


@pytest.mark.parametrize("kw", [{"learning_rate": 0}, {"momentum": 1.0}, {"batch_size": 0}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SgdConfig(**kw)


def test_zero_gradient_no_decay_is_a_no_op():
    assert scalar_step(1.5, 0.0, 0.0, weight_decay=0.0) == (1.5, 0.0)


def test_hand_evaluated_step():
    p, v = scalar_step(1.0, 1.0, 0.0, learning_rate=0.02, weight_decay=0.001, momentum=0.8)
    assert v == pytest.approx(-0.02002, abs=1e-15)
    assert p == pytest.approx(0.97998, abs=1e-15)


def test_momentum_accumulates():
    lr, m, g = 0.02, 0.8, 0.7
    params, grads, vel = {"w": np.ones((1, 1))}, {"w": np.full((1, 1), g)}, {"w": np.zeros((1, 1))}
    cfg = SgdConfig(learning_rate=lr, momentum=m, weight_decay=0.0)
    sgd_step(params, grads, vel, cfg)
    before = params["w"].copy()
    sgd_step(params, grads, vel, cfg)
    assert (params["w"] - before)[0, 0] == pytest.approx(-lr * g * (1 + m), rel=1e-12)


def test_biases_skip_weight_decay():
    params = {"w": np.ones((2, 2)), "b": np.ones(2)}
    grads = {k: np.zeros_like(v) for k, v in params.items()}
    vel = {k: np.zeros_like(v) for k, v in params.items()}
    sgd_step(params, grads, vel, SgdConfig(weight_decay=0.5))
    assert np.all(params["b"] == 1.0) and np.all(params["w"] < 1.0)
    sgd_step(params, grads, vel, SgdConfig(weight_decay=0.5, decay_biases=True))
    assert np.all(params["b"] < 1.0)


def test_shape_mismatch():
    with pytest.raises(ValueError):
        sgd_step({"w": np.ones(2)}, {"w": np.ones(3)}, {"w": np.zeros(2)}, SgdConfig())


@pytest.mark.parametrize("wd", [0.001, 0.5])
def test_pure_weight_decay_matches_closed_form(wd):
    lr, m, p0, steps = 0.02, 0.8, 1.7, 60
    a = lr * wd
    # (p, v) follows a linear recurrence with characteristic z^2 - (1 - a + m) z + m = 0
    r1, r2 = np.roots([1.0, -(1 - a + m), m])
    p1 = (1 - a) * p0
    alpha = (p1 - r2 * p0) / (r1 - r2)
    beta = p0 - alpha
    params, grads, vel = {"w": np.full((1, 1), p0)}, {"w": np.zeros((1, 1))}, {"w": np.zeros((1, 1))}
    cfg = SgdConfig(learning_rate=lr, momentum=m, weight_decay=wd)
    for t in range(1, steps + 1):
        sgd_step(params, grads, vel, cfg)
        expected = np.real(alpha * r1**t + beta * r2**t)
        assert abs(params["w"][0, 0] - expected) <= 1e-10 * abs(expected)


def test_quadratic_loss_is_monotone():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(40, 5))
    target = x @ rng.normal(size=(5, 3)) + 0.1 * rng.normal(size=(40, 3))
    params = {"w": np.zeros((3, 5)), "b": np.zeros(3)}
    vel = {k: np.zeros_like(v) for k, v in params.items()}
    m = 0.8
    hess_max = np.linalg.eigvalsh(2 * np.c_[x, np.ones(40)].T @ np.c_[x, np.ones(40)] / 40).max()
    cfg = SgdConfig(learning_rate=0.5 * (1 - np.sqrt(m)) ** 2 / hess_max, momentum=m, weight_decay=0)
    losses = []
    for _ in range(200):
        y, cache = L.dense_forward(x, params["w"], params["b"])
        losses.append(float(np.mean(np.sum((y - target) ** 2, axis=1))))
        _, dw, db = L.dense_backward(2 * (y - target) / len(x), cache)
        sgd_step(params, {"w": dw, "b": db}, vel, cfg)
    assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))
    assert losses[-1] < 0.5 * losses[0]


@pytest.fixture(scope="module")
def tiny_split():
    split = synth_dataset(5, 4)
    return split.train.subset(slice(0, 40)), split.test


def test_zero_epochs_leaves_model_unchanged(tiny_split):
    model = Model((2, 2, 2), seed=0)
    before = {k: v.copy() for k, v in model.params.items()}
    history = train(model, tiny_split[0], None, SgdConfig(max_epochs=0))
    assert len(history) == 0
    for k in PARAM_ORDER:
        np.testing.assert_array_equal(model.params[k], before[k])


def test_training_is_deterministic(tiny_split):
    runs = []
    for _ in range(2):
        model = Model((2, 3, 4), seed=1)
        history = train(model, tiny_split[0], tiny_split[1], SgdConfig(max_epochs=2, seed=9, batch_size=16))
        runs.append((b"".join(model.params[k].tobytes() for k in PARAM_ORDER), history.csv_text()))
    assert runs[0] == runs[1]
    assert len(runs[0][1].splitlines()) == 3


def test_empty_training_set(tiny_split):
    with pytest.raises(ValueError):
        train(Model((2, 2, 2)), tiny_split[0].subset(slice(0, 0)), None, SgdConfig())


def test_divergence_is_reported(tiny_split):
    with np.errstate(all="ignore"):
        with pytest.raises(TrainingDiverged) as err:
            train(Model((2, 2, 2)), tiny_split[0], None, SgdConfig(learning_rate=1e12, max_epochs=3))
    assert err.value.epoch >= 1 and err.value.batch >= 0


def test_history_csv_round_trip(tmp_path):
    h = TrainHistory([EpochRecord(1, 1.25, 50.0, 40.0), EpochRecord(2, 0.5, 75.0, None)])
    path = tmp_path / "history.csv"
    h.to_csv(path)
    assert path.read_text().splitlines()[0] == "epoch,train_loss,train_acc,test_acc"
    assert TrainHistory.from_csv(path).records == h.records


def test_early_stop_callback(tiny_split):
    seen = []
    train(Model((2, 2, 2)), tiny_split[0], None, SgdConfig(max_epochs=5),
          on_epoch=lambda r: seen.append(r.epoch) or r.epoch == 2)
    assert seen == [1, 2]
