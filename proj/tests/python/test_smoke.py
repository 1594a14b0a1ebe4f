"""Python smoke tests for the compiled qcgan module."""

import math

import pytest

import qcgan


def test_ground_state_expectations():
    state = qcgan.init_ground(4, "pure")
    assert state.num_qubits == 4
    assert state.backend == "pure"
    for q in range(4):
        assert state.expect_z(q) == pytest.approx(1.0)


def test_ry_rotation_follows_cosine():
    state = qcgan.init_ground(1, "pure")
    state.apply_gate("ry", 0, angle=math.pi * 0.3)
    assert state.expect_z(0) == pytest.approx(math.cos(math.pi * 0.3), abs=1e-10)


def test_noise_channel_requires_mixed_backend():
    pure = qcgan.init_ground(2, "pure")
    with pytest.raises(qcgan.UsageError):
        pure.apply_channel("bitflip", 0.2, 0)
    mixed = qcgan.init_ground(2, "mixed")
    mixed.apply_channel("depolarizing", 0.75, 0)
    assert mixed.expect_z(0) == pytest.approx(0.0, abs=1e-12)
    assert mixed.norm_residual() < 1e-12


def test_parameter_budgets():
    assert qcgan.CircuitConfig().param_count() == 48
    assert qcgan.CircuitConfig.compact16().param_count() == 16
    assert qcgan.critic_parameter_count() == 8961
    assert abs(qcgan.classical_generator_parameter_count() - 1412) <= 0.01 * 1412


def test_generator_and_parameter_shift():
    config = qcgan.CircuitConfig(num_qubits=2, num_blocks=1, layers_per_block=1)
    theta = [0.1] * config.param_count()
    x = qcgan.generate(config, theta, [0.0, 0.0])
    assert len(x) == 2
    assert all(-1.0 <= v <= 1.0 for v in x)

    grad = qcgan.parameter_shift_grad(config, theta, [0.3, -0.2], [1.0, 1.0])
    assert len(grad) == config.param_count()

    # finite-difference cross-check on one angle
    h = 1e-4
    up = list(theta)
    up[0] += h
    down = list(theta)
    down[0] -= h
    fd = sum(
        (a - b) / (2 * h)
        for a, b in zip(
            qcgan.generate(config, up, [0.3, -0.2]),
            qcgan.generate(config, down, [0.3, -0.2]),
        )
    )
    assert grad[0] == pytest.approx(fd, rel=1e-5, abs=1e-8)


def test_metric_identities():
    names, rows, labels = qcgan.generate_synthetic(qcgan.bimodal_spec_json(), 120, 3)
    assert len(names) == 4
    assert len(rows) == 120
    assert set(labels) <= {0, 1}
    assert qcgan.wasserstein_per_feature(rows, rows) == 0.0
    assert qcgan.mse_quantile_paired(rows, rows) == 0.0
    assert qcgan.mmd(rows, rows) <= 0.01


def test_quantile_transform_bounds():
    _, train, _ = qcgan.generate_synthetic(qcgan.separable_spec_json(2.0), 200, 4)
    _, other, _ = qcgan.generate_synthetic(qcgan.separable_spec_json(2.0), 50, 5)
    t_train, t_other = qcgan.quantile_fit_apply(train, other)
    for row in t_train + t_other:
        for v in row:
            assert -1.0 <= v <= 1.0


def test_random_forest_separates_classes():
    _, x, y = qcgan.generate_synthetic(qcgan.separable_spec_json(6.0), 400, 6)
    forest = qcgan.RandomForest.train(x, y, n_trees=20, seed=1)
    assert forest.accuracy(x, y) > 0.99
    assert len(forest.feature_importances()) == 4


def test_tiny_gan_training_round_trip():
    _, rows, _ = qcgan.generate_synthetic(qcgan.bimodal_spec_json(), 200, 7)
    clipped = [[max(-1.0, min(1.0, v)) for v in row] for row in rows]
    train, val = clipped[:160], clipped[160:]
    trace = qcgan.train_gan(
        "classical", train, val, epochs=1, batch_size=16, n_critic=2, seed=9,
        val_samples=32,
    )
    assert len(trace["val_mmd"]) == 1
    assert trace["critic_steps"] == 2 * trace["generator_steps"]
    samples = qcgan.generate_from_checkpoint(trace["checkpoint_json"], 10, seed=1)
    assert len(samples) == 10
    assert all(len(row) == 4 for row in samples)
