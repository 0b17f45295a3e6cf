import numpy as np
import pytest

from robustqml.gradients import (
    grad_loss,
    grad_raw_adjoint,
    grad_raw_parameter_shift,
    regularizer,
)
from robustqml.model import (
    CircuitLayout,
    EncodingGate,
    ModelParams,
    OutputScaling,
    build_logistic_circuit,
    evaluate_raw,
    init_params,
    predict,
)
from robustqml.statevector import PauliAxis, PauliString

from oracles import central_difference_params, dense_angle_gradient


def random_params(layout, seed, scale=np.pi / 2):
    rng = np.random.default_rng(seed)
    return ModelParams(
        rng.uniform(-scale, scale, layout.num_weights), rng.uniform(-scale, scale, layout.num_biases)
    )


class TestParameterShift:
    def test_zero_params_against_finite_differences(self, layout):
        p = ModelParams(np.zeros(96), np.zeros(96))
        x = np.random.default_rng(0).uniform(0, 1, 12)
        g = grad_raw_parameter_shift(layout, p, x).as_array()
        fd = central_difference_params(lambda q: evaluate_raw(layout, q, x), layout, p)
        np.testing.assert_allclose(g, fd, atol=1e-6, rtol=0)

    def test_pinned_extremum(self):
        lay = CircuitLayout(1, 1, (EncodingGate(0, PauliAxis.Z, 0, 0, 0),), PauliString.parse("Z"))
        g = grad_raw_parameter_shift(lay, ModelParams([0.7], [0.3]), [0.4])
        assert g.d_weights[0] == pytest.approx(0.0, abs=1e-15)
        assert g.d_biases[0] == pytest.approx(0.0, abs=1e-15)

    def test_bias_is_weight_over_feature(self, layout):
        p = random_params(layout, 1)
        x = np.random.default_rng(1).uniform(0.1, 1, 12)
        g = grad_raw_parameter_shift(layout, p, x)
        feats = np.array([gate.feature_index for gate in layout.encoding_gates])
        np.testing.assert_allclose(g.d_biases, g.d_weights / x[feats], rtol=1e-10, atol=1e-14)


class TestAdjoint:
    def test_agrees_with_parameter_shift(self, layout):
        rng = np.random.default_rng(2)
        for seed in range(5):
            p = random_params(layout, seed, scale=3.0)
            x = rng.uniform(0, 1, 12)
            a = grad_raw_adjoint(layout, p, x).as_array()
            s = grad_raw_parameter_shift(layout, p, x).as_array()
            np.testing.assert_allclose(a, s, atol=1e-10, rtol=0)

    def test_zero_weight_pattern(self, layout):
        p = random_params(layout, 3).replace(weights=np.zeros(96))
        x = np.random.default_rng(3).uniform(0, 1, 12)
        x[4] = 0.0
        a = grad_raw_adjoint(layout, p, x).as_array()
        s = grad_raw_parameter_shift(layout, p, x).as_array()
        np.testing.assert_array_equal(np.abs(a) < 1e-13, np.abs(s) < 1e-13)
        np.testing.assert_allclose(a, s, atol=1e-10, rtol=0)

    @pytest.mark.parametrize("q, l", [(2, 1), (3, 2)])
    def test_dense_matrix_calculus(self, q, l):
        lay = build_logistic_circuit(q, l)
        rng = np.random.default_rng(q + l)
        p = random_params(lay, 4, scale=2.5)
        x = rng.uniform(-1, 1, l)
        oracle = dense_angle_gradient(lay, p, x)
        g = grad_raw_adjoint(lay, p, x)
        np.testing.assert_allclose(g.d_biases, oracle, atol=1e-12, rtol=0)
        feats = np.array([gate.feature_index for gate in lay.encoding_gates])
        np.testing.assert_allclose(g.d_weights, oracle * x[feats], atol=1e-12, rtol=0)

    def test_masked_weights_zero(self, layout):
        p = random_params(layout, 5)
        frozen = ModelParams(p.weights, p.biases, encoding_trainable=False)
        g = grad_raw_adjoint(layout, frozen, np.full(12, 0.3))
        assert np.all(g.d_weights == 0.0)
        assert np.any(g.d_biases != 0.0)


class TestRegularizer:
    def test_zero_weights(self, layout):
        assert regularizer(ModelParams(np.zeros(96), np.ones(96)), layout, 0.5) == 0.0

    def test_single_gate(self):
        lay = CircuitLayout(1, 1, (EncodingGate(0, PauliAxis.Y, 0, 0, 0),), PauliString.parse("Z"))
        assert regularizer(ModelParams([2.0], [1.3]), lay, 1.0) == pytest.approx(1.0, abs=1e-15)

    def test_lambda_zero(self, layout):
        assert regularizer(init_params(layout, 0), layout, 0.0) == 0.0

    def test_biases_excluded(self, layout):
        p = init_params(layout, 0)
        assert regularizer(p, layout, 0.1) == regularizer(p.replace(biases=p.biases * 5), layout, 0.1)

    def test_negative_lambda(self, layout):
        with pytest.raises(ValueError):
            regularizer(init_params(layout, 0), layout, -1e-3)


def _pairs(layout, params, n, seed, noise=0.0):
    rng = np.random.default_rng(seed)
    xs = rng.uniform(0, 1, (n, layout.sequence_length))
    return [(x, predict(layout, params, OutputScaling(), x) + noise * rng.standard_normal()) for x in xs]


class TestGradLoss:
    def test_perfect_predictions(self, layout):
        p = init_params(layout, 1)
        loss, g = grad_loss(layout, p, OutputScaling(), _pairs(layout, p, 4, 0), 0.0)
        assert loss == pytest.approx(0.0, abs=1e-28)
        assert np.max(np.abs(g.as_array())) < 1e-14

    def test_perfect_predictions_regularized(self, layout):
        p = init_params(layout, 1)
        loss, _ = grad_loss(layout, p, OutputScaling(), _pairs(layout, p, 4, 0), 0.02)
        assert loss == pytest.approx(regularizer(p, layout, 0.02), rel=1e-12, abs=1e-28)

    @pytest.mark.parametrize("lam", [0.0, 0.01])
    def test_finite_differences(self, lam):
        lay = build_logistic_circuit(3, 4)
        p = random_params(lay, 6)
        batch = _pairs(lay, random_params(lay, 7), 5, 1, noise=0.05)
        sc = OutputScaling()
        _, g = grad_loss(lay, p, sc, batch, lam)
        fd = central_difference_params(lambda q: grad_loss(lay, q, sc, batch, lam)[0], lay, p)
        # relative to the gradient's overall scale
        assert np.max(np.abs(g.as_array() - fd)) <= 1e-6 * np.max(np.abs(fd))

    def test_methods_agree(self, layout):
        p = init_params(layout, 2)
        batch = _pairs(layout, init_params(layout, 3), 6, 2)
        la, ga = grad_loss(layout, p, OutputScaling(), batch, 0.004, "adjoint")
        ls, gs = grad_loss(layout, p, OutputScaling(), batch, 0.004, "parameter-shift")
        assert la == pytest.approx(ls, abs=1e-14)
        np.testing.assert_allclose(ga.as_array(), gs.as_array(), atol=1e-10, rtol=0)

    def test_mask(self, layout):
        p = init_params(layout, 2, encoding_trainable=False)
        _, g = grad_loss(layout, p, OutputScaling(), _pairs(layout, init_params(layout, 3), 5, 3), 0.03)
        assert np.all(g.d_weights == 0.0)

    def test_penalty_gradient(self, layout):
        p = init_params(layout, 8)
        batch = _pairs(layout, p, 3, 4)
        lam = 0.03
        _, g0 = grad_loss(layout, p, OutputScaling(), batch, 0.0)
        _, g1 = grad_loss(layout, p, OutputScaling(), batch, lam)
        closed = lam * p.weights / 2
        np.testing.assert_allclose(g1.d_weights - g0.d_weights, closed, atol=1e-15)
        fd = np.array(
            [
                (regularizer(p.replace(weights=p.weights + h), layout, lam)
                 - regularizer(p.replace(weights=p.weights - h), layout, lam)) / 2e-5
                for h in np.eye(96) * 1e-5
            ]
        )
        np.testing.assert_allclose(closed, fd, atol=1e-8, rtol=0)

    def test_empty_batch(self, layout):
        with pytest.raises(ValueError):
            grad_loss(layout, init_params(layout, 0), OutputScaling(), [], 0.0)

    def test_dataset_batch(self, layout):
        from robustqml.dataset import generate_dataset

        ds = generate_dataset(6)
        p = init_params(layout, 0)
        pairs = [(s.sequence, s.target) for s in ds]
        a = grad_loss(layout, p, OutputScaling(), ds, 0.01)
        b = grad_loss(layout, p, OutputScaling(), pairs, 0.01)
        assert a[0] == b[0]
        np.testing.assert_array_equal(a[1].as_array(), b[1].as_array())
