"""Cost, shift-rule gradients, gradient descent, and the task generators."""

import math

import numpy as np
import pytest

from chiralnet.circuit import (
    Binder,
    CircuitSpec,
    GateAddress,
    ParameterTable,
    ThetaKey,
    build_circuit,
    forward,
    init_parameters,
)
from chiralnet.errors import ConfigError
from chiralnet.learning import (
    Dataset,
    TrainConfig,
    classification_sets,
    classify_metric,
    cost,
    cost_gradient,
    gd_step,
    physical_gradient,
    regression_grid,
    regression_targets,
    shift_gradient,
    train,
    _forward_and_shift,
)

SMALL = CircuitSpec(Q=2, L=1, N=2, L_prime=2)


def fd_cost_gradient(theta, dataset, spec, table, config, step=1e-5):
    out = np.zeros_like(theta)
    for i in range(len(theta)):
        up, dn = theta.copy(), theta.copy()
        up[i] += step
        dn[i] -= step
        out[i] = (
            cost(up, dataset, spec, table, config.output_scale, config.output_offset)
            - cost(dn, dataset, spec, table, config.output_scale, config.output_offset)
        ) / (2 * step)
    return out


class TestCost:
    def test_perfect_fit_costs_nothing(self):
        # teachers generated by the model itself
        spec = SMALL
        table = init_parameters(spec, seed=1)
        xs = np.linspace(-1, 1, 5)
        binder = Binder(spec, table)
        probs = binder.forward(table.theta0, xs)
        ds = Dataset(xs, 2.0 * probs - 0.5)
        assert cost(table.theta0, ds, spec, table, 2.0, -0.5) == pytest.approx(0.0)

    def test_single_unit_residual(self):
        spec = CircuitSpec(Q=1, L=1, N=1, L_prime=1)
        addrs = build_circuit(spec)
        r1 = addrs[0]
        r2, p2 = addrs[1], addrs[2]
        table = ParameterTable(
            spec=spec,
            seed=0,
            train_part_one_omega=True,
            fixed_delta_k={r1: 0.0, r2: 0.8, p2: 0.8},
            theta_keys=(
                ThetaKey(r1, "omega"),
                ThetaKey(r2, "omega"),
                ThetaKey(r2, "delta_laser"),
                ThetaKey(p2, "omega"),
                ThetaKey(p2, "delta_laser"),
            ),
            theta0=np.array([0.0, 1.0, 0.8, 1.0, 0.8]),
            frozen={},
        )
        # the circuit outputs g = P = 1 at x = 1; teacher 0 leaves cost 1/2
        ds = Dataset(np.array([1.0]), np.array([0.0]))
        assert cost(table.theta0, ds, spec, table, 1.0, 0.0) == pytest.approx(0.5)

    def test_two_point_residuals(self):
        # residuals 0.1 and -0.2 must cost 0.5*(0.01 + 0.04)
        spec = SMALL
        table = init_parameters(spec, seed=2)
        xs = np.array([-0.3, 0.4])
        binder = Binder(spec, table)
        outputs = 2.0 * binder.forward(table.theta0, xs) - 0.5
        ds = Dataset(xs, outputs - np.array([0.1, -0.2]))
        assert cost(table.theta0, ds, spec, table, 2.0, -0.5) == pytest.approx(0.025)

    def test_empty_dataset_rejected(self):
        spec = SMALL
        table = init_parameters(spec, seed=1)
        ds = Dataset(np.array([]), np.array([]))
        with pytest.raises(ValueError):
            cost(table.theta0, ds, spec, table, 2.0, -0.5)


def single_qubit_quarter_angle_table():
    """One-qubit circuit whose first gate sits at angle pi/2, others inert."""
    spec = CircuitSpec(Q=1, L=1, N=1, L_prime=1)
    addrs = build_circuit(spec)
    r1, r2, p2 = addrs
    # coupling 1, omega 1, photon detuning -2, laser detuning -1:
    # two-photon detuning -1, so the angle is 2*atan2(1, 1) = pi/2
    table = ParameterTable(
        spec=spec,
        seed=0,
        train_part_one_omega=True,
        fixed_delta_k={r1: -2.0, r2: 0.8, p2: 0.8},
        theta_keys=(
            ThetaKey(r1, "omega"),
            ThetaKey(r2, "omega"),
            ThetaKey(r2, "delta_laser"),
            ThetaKey(p2, "omega"),
            ThetaKey(p2, "delta_laser"),
        ),
        theta0=np.array([1.0, 1.0, 0.8, 1.0, 0.8]),
        frozen={},
    )
    return spec, table, r1


class TestShiftGradient:
    def test_single_qubit_sine_law(self):
        # P(angle) = sin^2(angle/2); at angle pi/2 the derivative is 1/2
        spec, table, addr = single_qubit_quarter_angle_table()
        x = -1.0  # encoding keeps the laser detuning at -1
        g = shift_gradient(spec, table, table.theta0, x, addr, s=math.pi / 2)
        assert g == pytest.approx(0.5, abs=1e-12)

    def test_shift_independence(self):
        spec = SMALL
        table = init_parameters(spec, seed=3)
        addr = next(a for a in build_circuit(spec) if a.part == 2)
        values = [
            shift_gradient(spec, table, table.theta0, 0.37, addr, s)
            for s in (math.pi / 6, math.pi / 4, math.pi / 2)
        ]
        assert max(values) - min(values) < 1e-10

    def test_gate_without_downstream_entangler_has_zero_influence(self):
        spec = CircuitSpec(Q=2, L=1, N=1, L_prime=1)
        table = init_parameters(spec, seed=5)
        addr = next(a for a in build_circuit(spec) if a.qubit == 1)
        g = shift_gradient(
            spec, table, table.theta0, 0.2, addr, controlled_identity=True
        )
        assert abs(g) < 1e-12

    def test_controlled_address_rejected(self):
        spec = SMALL
        table = init_parameters(spec, seed=5)
        addr = next(a for a in build_circuit(spec) if a.kind == "controlled")
        with pytest.raises(ValueError):
            shift_gradient(spec, table, table.theta0, 0.1, addr)


class TestPhysicalGradient:
    def test_zero_rabi_frequency_kills_omega_gradient(self):
        spec, table, addr = single_qubit_quarter_angle_table()
        theta = table.theta0.copy()
        theta[0] = 0.0  # laser off at the addressed gate
        g_omega, _ = physical_gradient(spec, table, theta, -1.0, addr)
        assert g_omega == 0.0

    def test_matches_finite_difference_of_forward(self):
        spec = SMALL
        table = init_parameters(spec, seed=7)
        theta = table.theta0.copy()
        x = 0.3
        h = 1e-5
        for addr in build_circuit(spec):
            if addr.part != 2 or addr.kind == "controlled":
                continue
            g_omega, g_laser = physical_gradient(spec, table, theta, x, addr)
            for name, got in (("omega", g_omega), ("delta_laser", g_laser)):
                i = table.theta_index(ThetaKey(addr, name))
                up, dn = theta.copy(), theta.copy()
                up[i] += h
                dn[i] -= h
                fd = (
                    forward(spec, table, up, x) - forward(spec, table, dn, x)
                ) / (2 * h)
                assert got == pytest.approx(fd, abs=2e-6)

    def test_encoding_slots_are_not_gradient_coordinates(self):
        spec = SMALL
        table = init_parameters(spec, seed=9)
        names = {k.name for k in table.theta_keys if k.address.part == 1}
        assert names == {"omega"}


class TestEngine:
    def test_engine_matches_naive_shift_rule(self):
        spec = CircuitSpec(Q=3, L=2, N=2, L_prime=2)
        table = init_parameters(spec, seed=11)
        theta = table.theta0.copy()
        xs = np.array([0.25, -0.6])
        binder = Binder(spec, table)
        probs, grads = _forward_and_shift(binder, theta, xs, math.pi / 2)
        np.testing.assert_allclose(probs, binder.forward(theta, xs), atol=1e-13)
        for j, x in enumerate(xs):
            for addr in build_circuit(spec):
                if addr.kind == "controlled":
                    continue
                pairs = (
                    [("omega", 0)]
                    if addr.part == 1
                    else [("omega", 0), ("delta_laser", 1)]
                )
                dp = shift_gradient(spec, table, theta, x, addr)
                for name, which in pairs:
                    idx = table.theta_index(ThetaKey(addr, name))
                    grad_fn = physical_gradient(spec, table, theta, x, addr)
                    assert grads[j, idx] == pytest.approx(grad_fn[which], abs=1e-11)

    def test_cost_gradient_matches_finite_differences(self):
        spec = CircuitSpec(Q=3, L=2, N=2, L_prime=2)
        table = init_parameters(spec, seed=13)
        ds = regression_targets("sin2pi", np.array([-0.5, 0.1, 0.8]))
        config = TrainConfig()
        theta = table.theta0.copy()
        analytic = cost_gradient(theta, ds, spec, table, config)
        fd = fd_cost_gradient(theta, ds, spec, table, config)
        np.testing.assert_allclose(analytic, fd, atol=1e-5, rtol=1e-3)

    def test_angle_space_gradient_matches_finite_differences(self):
        spec = SMALL
        table = init_parameters(spec, seed=15)
        ds = regression_targets("sin2pi", np.array([-0.4, 0.6]))
        config = TrainConfig(gradient_space="angle")
        binder = Binder(spec, table, "angle")
        theta = binder.initial_theta()
        analytic = cost_gradient(theta, ds, spec, table, config)
        h = 1e-6
        fd = np.zeros_like(analytic)
        for i in range(len(theta)):
            up, dn = theta.copy(), theta.copy()
            up[i] += h
            dn[i] -= h
            fd[i] = (
                cost(up, ds, spec, table, 2.0, -0.5, space="angle")
                - cost(dn, ds, spec, table, 2.0, -0.5, space="angle")
            ) / (2 * h)
        np.testing.assert_allclose(analytic, fd, atol=1e-6, rtol=1e-4)


class TestNonFiniteGuard:
    def test_nan_parameters_raise_with_offending_key(self):
        from chiralnet.errors import NonFiniteGradientError

        spec = SMALL
        table = init_parameters(spec, seed=2)
        ds = regression_targets("sin2pi", np.array([0.1, -0.2]))
        theta = table.theta0.copy()
        theta[3] = float("nan")
        with np.errstate(invalid="ignore"):
            with pytest.raises(NonFiniteGradientError) as err:
                cost_gradient(theta, ds, spec, table, TrainConfig())
        assert err.value.key is not None


class TestGdStep:
    def test_zero_cost_is_stationary(self):
        spec = SMALL
        table = init_parameters(spec, seed=17)
        xs = np.linspace(-1, 1, 4)
        binder = Binder(spec, table)
        teachers = 2.0 * binder.forward(table.theta0, xs) - 0.5
        ds = Dataset(xs, teachers)
        out = gd_step(table.theta0, ds, spec, table, TrainConfig())
        np.testing.assert_allclose(out, table.theta0, atol=1e-14)

    def test_update_rule_arithmetic(self):
        spec = SMALL
        table = init_parameters(spec, seed=19)
        ds = regression_targets("sin2pi", np.array([0.2, -0.7]))
        config = TrainConfig(learning_rate=0.1)
        grad = cost_gradient(table.theta0, ds, spec, table, config)
        out = gd_step(table.theta0, ds, spec, table, config)
        np.testing.assert_allclose(out, table.theta0 - 0.1 * grad, atol=0)

    def test_small_steps_rarely_increase_cost(self):
        spec = CircuitSpec(Q=3, L=2, N=2, L_prime=3)
        ds = regression_targets("sin2pi", regression_grid(9))
        config = TrainConfig(learning_rate=1e-3)
        rng = np.random.default_rng(127)
        table = init_parameters(spec, seed=21)
        drops = 0
        total = 100
        for _ in range(total):
            theta = table.theta0 + rng.normal(scale=0.5, size=table.n_trainable)
            before = cost(theta, ds, spec, table, 2.0, -0.5)
            theta2 = gd_step(theta, ds, spec, table, config)
            after = cost(theta2, ds, spec, table, 2.0, -0.5)
            if after <= before + 1e-9:
                drops += 1
        assert drops >= 95


class TestTrain:
    def test_zero_epochs_records_initial_cost(self):
        spec = SMALL
        table = init_parameters(spec, seed=23)
        ds = regression_targets("sin2pi", regression_grid(5))
        run = train(spec, table, ds, TrainConfig(epochs=0))
        assert len(run.cost_history) == 1
        assert run.cost_history[0] == pytest.approx(
            cost(table.theta0, ds, spec, table, 2.0, -0.5)
        )

    def test_deterministic_history(self):
        spec = SMALL
        table = init_parameters(spec, seed=29)
        ds = regression_targets("exp", regression_grid(5))
        config = TrainConfig(epochs=5)
        a = train(spec, table, ds, config)
        b = train(spec, init_parameters(spec, seed=29), ds, config)
        np.testing.assert_array_equal(a.cost_history, b.cost_history)
        np.testing.assert_array_equal(a.theta, b.theta)

    def test_cost_threshold_stops_early(self):
        spec = SMALL
        table = init_parameters(spec, seed=31)
        ds = regression_targets("sin2pi", regression_grid(5))
        run = train(spec, table, ds, TrainConfig(epochs=50, cost_threshold=1e9))
        assert run.stopped_early
        assert len(run.cost_history) == 1

    def test_history_decreases_on_easy_instance(self):
        spec = SMALL
        table = init_parameters(spec, seed=37)
        ds = regression_targets("quartic", regression_grid(7))
        run = train(spec, table, ds, TrainConfig(epochs=30, cost_threshold=0.0))
        assert run.cost_history[-1] < run.cost_history[0]


class TestRegressionTargets:
    def test_sine_squared_peak(self):
        ds = regression_targets("sin2pi", np.array([0.5]))
        assert ds.teachers[0] == pytest.approx(1.0)

    def test_relu_clamps_negative(self):
        ds = regression_targets("relu", np.array([-0.3]))
        assert ds.teachers[0] == 0.0

    def test_decaying_cosine_at_origin(self):
        ds = regression_targets("decay_cos", np.array([0.0]))
        assert ds.teachers[0] == pytest.approx(math.exp(-1.0))

    def test_all_targets_evaluate_on_grid(self):
        from chiralnet.learning import REGRESSION_TARGETS

        grid = regression_grid(21)
        assert len(REGRESSION_TARGETS) == 7
        for name in REGRESSION_TARGETS:
            ds = regression_targets(name, grid)
            assert np.all(np.isfinite(ds.teachers))

    def test_unknown_name_rejected(self):
        with pytest.raises(ConfigError):
            regression_targets("mystery", regression_grid(5))


class TestClassificationSets:
    def test_circle_rule_labels_emitted_points(self):
        ds = classification_sets("circle", 50, seed=1)
        inside = np.sum(ds.inputs**2, axis=1) < 0.36
        np.testing.assert_array_equal(ds.teachers, inside.astype(float))

    def test_circle_rule_labels_center_as_class_one(self):
        from chiralnet.learning import _circle_label

        assert _circle_label(np.array([[0.0, 0.0]]))[0] == 1.0

    def test_xor_quadrant_rule(self):
        ds = classification_sets("xor", 100, seed=2)
        np.testing.assert_array_equal(
            ds.teachers, (ds.inputs[:, 0] * ds.inputs[:, 1] > 0).astype(float)
        )

    def test_xor_rule_on_mixed_quadrant_point(self):
        from chiralnet.learning import _xor_label

        assert _xor_label(np.array([[0.5, -0.5]]))[0] == 0.0

    def test_circle_balance(self):
        ds = classification_sets("circle", 200, seed=3)
        assert 0.4 <= ds.teachers.mean() <= 0.6

    def test_deterministic(self):
        a = classification_sets("stripes", 64, seed=5)
        b = classification_sets("stripes", 64, seed=5)
        np.testing.assert_array_equal(a.inputs, b.inputs)

    def test_inputs_in_unit_square(self):
        for name in ("circle", "xor", "stripes"):
            ds = classification_sets(name, 100, seed=7)
            assert np.all(np.abs(ds.inputs) <= 1.0)

    def test_unknown_name_rejected(self):
        with pytest.raises(ConfigError):
            classification_sets("spiral", 10, seed=1)


class TestClassifyMetric:
    def test_perfect(self):
        t = np.array([0.0, 1.0, 1.0])
        assert classify_metric(t, t) == 1.0

    def test_tie_counts_as_class_one(self):
        assert classify_metric(np.array([0.5]), np.array([1.0])) == 1.0
        assert classify_metric(np.array([0.5]), np.array([0.0])) == 0.0

    def test_inverted(self):
        t = np.array([0.0, 1.0])
        assert classify_metric(1.0 - t, t) == 0.0


class TestTrainConfigValidation:
    def test_bad_learning_rate(self):
        with pytest.raises(ConfigError):
            TrainConfig(learning_rate=0.0)

    def test_bad_shift(self):
        with pytest.raises(ConfigError):
            TrainConfig(shift=0.0)
        with pytest.raises(ConfigError):
            TrainConfig(shift=math.pi)

    def test_bad_space(self):
        with pytest.raises(ConfigError):
            TrainConfig(gradient_space="spectral")
