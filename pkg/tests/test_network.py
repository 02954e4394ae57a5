"""Multi-pipeline forward/backward passes and the coupled mode."""

import dataclasses

import numpy as np
import pytest

from conftest import fd_close, fd_step, random_model
from nlsig.calculus import PARAM_NAMES, WeightLayer
from nlsig.core import NlsigModel, Partition
from nlsig.network import (
    NlsigNetwork,
    backward,
    descend_weights,
    forward,
    forward_multinomial,
)


def simple_model(y_min=0.0, y_max=1.0, delta=5.0, lam=6.0):
    p = Partition(x_min=0, x_max=10, delta=delta, y_min=y_min, y_max=y_max,
                  lam=lam)
    return NlsigModel((p,))


def random_network(rng, m, q, n=None):
    pipes = []
    for _ in range(m):
        model = random_model(rng, n=n)
        mid = 0.5 * (model.partitions[0].x_min + model.partitions[-1].x_max)
        weights = np.concatenate([[mid], rng.normal(0, 2.0, size=q)])
        pipes.append((WeightLayer(weights), model))
    return NlsigNetwork(tuple(pipes))


class TestForward:
    def test_single_pipeline_reduces_to_scalar_stack(self):
        rng = np.random.default_rng(91)
        net = random_network(rng, m=1, q=2)
        layer, model = net.pipelines[0]
        inputs = rng.normal(size=2)
        y, g, h = forward(net, inputs)
        x = layer.combine(inputs)
        assert y[0] == model.value(x)
        assert g[0] == model.derivative(x)
        assert h[0] == model.second_derivative(x)

    def test_three_pipelines_equal_three_singles(self):
        rng = np.random.default_rng(92)
        net = random_network(rng, m=3, q=2)
        inputs = rng.normal(size=2)
        y, g, h = forward(net, inputs)
        for j in range(3):
            single = NlsigNetwork((net.pipelines[j],))
            ys, gs, hs = forward(single, inputs)
            assert y[j] == ys[0] and g[j] == gs[0] and h[j] == hs[0]

    def test_input_sensitivity_matches_finite_difference(self):
        rng = np.random.default_rng(93)
        net = random_network(rng, m=2, q=3)
        inputs = rng.normal(size=3)
        y0, g, _ = forward(net, inputs)
        for j, (layer, _) in enumerate(net.pipelines):
            for l in range(3):
                h = 1e-6

                def bumped(v):
                    shifted = inputs.copy()
                    shifted[l] = v
                    return forward(net, shifted)[0][j]

                fd = (bumped(inputs[l] + h) - bumped(inputs[l] - h)) / (2 * h)
                assert fd_close(layer.weights[1 + l] * g[j], fd)

    def test_perturbing_one_pipeline_leaves_others_unchanged(self):
        rng = np.random.default_rng(94)
        net = random_network(rng, m=3, q=1)
        inputs = np.array([0.3])
        y0, _, _ = forward(net, inputs)
        layer, model = net.pipelines[1]
        bumped_part = dataclasses.replace(model.partitions[0],
                                          lam=model.partitions[0].lam * 2)
        bumped_model = NlsigModel((bumped_part,) + model.partitions[1:],
                                  sign=model.sign)
        pipes = list(net.pipelines)
        pipes[1] = (layer, bumped_model)
        y1, _, _ = forward(NlsigNetwork(tuple(pipes)), inputs)
        assert y1[0] == y0[0] and y1[2] == y0[2]
        assert y1[1] != y0[1]

    def test_arity_mismatch_rejected(self):
        net = NlsigNetwork(((WeightLayer(np.array([0.0, 1.0])), simple_model()),))
        with pytest.raises(ValueError):
            forward(net, np.array([1.0, 2.0]))

    def test_heterogeneous_arities_rejected(self):
        with pytest.raises(ValueError):
            NlsigNetwork((
                (WeightLayer(np.array([0.0, 1.0])), simple_model()),
                (WeightLayer(np.array([0.0, 1.0, 1.0])), simple_model()),
            ))


class TestBackward:
    def test_zero_error_means_zero_gradients(self):
        rng = np.random.default_rng(101)
        net = random_network(rng, m=2, q=2)
        inputs = rng.normal(size=2)
        targets, _, _ = forward(net, inputs)
        for grad in backward(net, inputs, targets):
            np.testing.assert_allclose(grad.weights, 0.0, atol=1e-12)
            np.testing.assert_allclose(grad.params, 0.0, atol=1e-12)

    def test_single_pipeline_weight_gradient_form(self):
        rng = np.random.default_rng(102)
        net = random_network(rng, m=1, q=3)
        layer, model = net.pipelines[0]
        inputs = rng.normal(size=3)
        target = np.array([forward(net, inputs)[0][0] + 0.25])
        grad = backward(net, inputs, target)[0]
        err = 0.25
        slope = model.derivative(layer.combine(inputs))
        expected = -err * slope * np.concatenate([[1.0], inputs])
        np.testing.assert_allclose(grad.weights, expected, rtol=1e-12)

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(103)
        net = random_network(rng, m=2, q=2, n=2)
        inputs = rng.normal(size=2)
        targets = forward(net, inputs)[0] + rng.normal(0, 0.3, size=2)

        def energy(network):
            y = forward(network, inputs)[0]
            e = targets - y
            return 0.5 * float(e @ e)

        grads = backward(net, inputs, targets)
        for j, (layer, model) in enumerate(net.pipelines):
            for l in range(layer.weights.size):
                h = fd_step(layer.weights[l])

                def with_weight(v):
                    w = layer.weights.copy()
                    w[l] = v
                    pipes = list(net.pipelines)
                    pipes[j] = (WeightLayer(w), model)
                    return NlsigNetwork(tuple(pipes))

                fd = (energy(with_weight(layer.weights[l] + h))
                      - energy(with_weight(layer.weights[l] - h))) / (2 * h)
                assert fd_close(grads[j].weights[l], fd)

            for i, p in enumerate(model.partitions):
                for c, name in enumerate(PARAM_NAMES):
                    val = getattr(p, name)
                    h = fd_step(val)

                    def with_param(v):
                        q = dataclasses.replace(p, **{name: v})
                        parts = list(model.partitions)
                        parts[i] = q
                        pipes = list(net.pipelines)
                        pipes[j] = (layer, NlsigModel(tuple(parts), sign=model.sign))
                        return NlsigNetwork(tuple(pipes))

                    fd = (energy(with_param(val + h))
                          - energy(with_param(val - h))) / (2 * h)
                    assert fd_close(grads[j].params[i, c], fd), (j, i, name)

    def test_shape_mismatch_rejected(self):
        rng = np.random.default_rng(104)
        net = random_network(rng, m=2, q=1)
        with pytest.raises(ValueError):
            backward(net, np.array([1.0]), np.array([1.0, 2.0, 3.0]))


class TestDescendWeights:
    def test_reduces_batch_error(self):
        rng = np.random.default_rng(111)
        net = random_network(rng, m=1, q=1, n=1)
        inputs_batch = rng.normal(0, 1.0, size=(20, 1))
        layer, model = net.pipelines[0]
        true_w = layer.weights + np.array([0.5, -0.3])
        targets_batch = np.array([
            [model.value(WeightLayer(true_w).combine(row))]
            for row in inputs_batch])

        def batch_energy(network):
            total = 0.0
            for row, tgt in zip(inputs_batch, targets_batch):
                e = tgt - forward(network, row)[0]
                total += 0.5 * float(e @ e)
            return total

        before = batch_energy(net)
        trained = descend_weights(net, inputs_batch, targets_batch,
                                  steps=50, rate=1e-2)
        assert batch_energy(trained) < before

    def test_logistic_parameters_untouched(self):
        rng = np.random.default_rng(112)
        net = random_network(rng, m=2, q=1)
        inputs_batch = rng.normal(size=(5, 1))
        targets_batch = rng.normal(size=(5, 2))
        trained = descend_weights(net, inputs_batch, targets_batch, steps=3)
        for (_, before), (_, after) in zip(net.pipelines, trained.pipelines):
            assert before == after


class TestMultinomial:
    def _identical_pair(self, m=2):
        pipes = tuple(
            (WeightLayer(np.array([0.0, 1.0])), simple_model())
            for _ in range(m))
        return NlsigNetwork(pipes)

    def test_symmetric_inputs_give_equal_outputs(self):
        net = self._identical_pair()
        y = forward_multinomial(net, np.array([4.0]))
        assert abs(y[0] - y[1]) < 1e-12
        # at the shared peak each denominator is 1 + 1, so y = dy/2
        y_peak = forward_multinomial(net, np.array([5.0]))
        np.testing.assert_allclose(y_peak, 0.5, atol=1e-15)

    def test_three_way_split_sums_to_ceiling(self):
        net = self._identical_pair(m=3)
        y = forward_multinomial(net, np.array([5.0]))
        np.testing.assert_allclose(y, 1.0 / 3.0, atol=1e-15)
        assert abs(np.sum(y) - 1.0) < 1e-12

    def test_saturation_routes_rise_to_dominant_pipeline(self):
        # distinct biases: pipeline 1 sees a much larger input
        pipes = (
            (WeightLayer(np.array([-1e4, 1.0])), simple_model()),
            (WeightLayer(np.array([1e4, 1.0])), simple_model()),
        )
        net = NlsigNetwork(pipes)
        y = forward_multinomial(net, np.array([0.0]))
        # increasing sign: pipeline 0's evaluated exponent is +inf-like, so
        # its denominator explodes and it keeps only its floor; pipeline 1
        # takes the whole rise
        assert y[0] == pytest.approx(0.0, abs=1e-12)
        assert y[1] == pytest.approx(1.0, abs=1e-12)

    def test_requires_at_least_two_pipelines(self):
        net = NlsigNetwork(((WeightLayer(np.array([0.0, 1.0])), simple_model()),))
        with pytest.raises(ValueError):
            forward_multinomial(net, np.array([1.0]))

    def test_rejects_mismatched_phase_counts(self):
        two_phase = NlsigModel((
            Partition(x_min=0, x_max=10, delta=4, y_min=0, y_max=1, lam=6),
            Partition(x_min=10, x_max=20, delta=14, y_min=1, y_max=2, lam=6),
        ))
        pipes = (
            (WeightLayer(np.array([0.0, 1.0])), simple_model()),
            (WeightLayer(np.array([0.0, 1.0])), two_phase),
        )
        with pytest.raises(ValueError):
            forward_multinomial(NlsigNetwork(pipes), np.array([1.0]))

    def test_rejects_mixed_bases(self):
        pipes = (
            (WeightLayer(np.array([0.0, 1.0])), simple_model()),
            (WeightLayer(np.array([0.0, 1.0])),
             NlsigModel((Partition(x_min=0, x_max=10, delta=5, y_min=0,
                                   y_max=1, lam=6, base=2.0),))),
        )
        with pytest.raises(ValueError):
            forward_multinomial(NlsigNetwork(pipes), np.array([1.0]))
