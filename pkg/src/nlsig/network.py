"""Multi-output pipelines of weighted inputs feeding logistic curves.

Each of the m pipelines owns an affine input layer and a multi-phase
logistic model; by default the pipelines are fully independent, so the
network is m parallel single-output stacks.  An optional coupled mode
ties the pipelines through a shared softmax-like denominator so that
identical pipelines split one rise among themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .calculus import LsqObjective, WeightLayer, residual_jacobian, weight_partials
from .core import EXP_CLAMP, NlsigModel, sign_factor

__all__ = [
    "NlsigNetwork",
    "PipelineGradients",
    "forward",
    "backward",
    "forward_multinomial",
    "descend_weights",
]


@dataclass(frozen=True)
class NlsigNetwork:
    """m parallel (input layer, logistic model) pipelines over q inputs."""

    pipelines: tuple

    def __post_init__(self):
        pipes = tuple(self.pipelines)
        object.__setattr__(self, "pipelines", pipes)
        if len(pipes) < 1:
            raise ValueError("network needs at least one pipeline")
        arities = set()
        for pair in pipes:
            layer, model = pair
            if not isinstance(layer, WeightLayer) or not isinstance(model, NlsigModel):
                raise ValueError("each pipeline is a (WeightLayer, NlsigModel) pair")
            arities.add(layer.arity)
        if len(arities) != 1:
            raise ValueError(f"pipelines disagree on input arity: {sorted(arities)}")

    @property
    def m(self) -> int:
        return len(self.pipelines)

    @property
    def q(self) -> int:
        return self.pipelines[0][0].arity


def forward(net: NlsigNetwork, inputs):
    """Per-pipeline value, slope, and acceleration at the weighted inputs.

    Returns three arrays of length m; entry j is exactly the single-output
    result of pipeline j's model at its own combined input.
    """
    inputs = np.asarray(inputs, dtype=float)
    y = np.empty(net.m)
    g = np.empty(net.m)
    h = np.empty(net.m)
    for j, (layer, model) in enumerate(net.pipelines):
        xj = layer.combine(inputs)
        y[j] = model.value(xj)
        g[j] = model.derivative(xj)
        h[j] = model.second_derivative(xj)
    return y, g, h


@dataclass(frozen=True)
class PipelineGradients:
    """Gradient of the squared error for one pipeline.

    ``weights`` has length q+1 (bias first); ``params`` has shape (n, 7)
    in the canonical order (base, lam, x_max, x_min, delta, y_max, y_min).
    """

    weights: np.ndarray
    params: np.ndarray


def backward(net: NlsigNetwork, inputs, targets):
    """Gradients of E = 0.5 * sum((target_j - y_j)**2) for one datum.

    Returns one PipelineGradients per pipeline covering its input weights
    and every logistic hyper-parameter; all entries match central finite
    differences of E.
    """
    inputs = np.asarray(inputs, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if targets.shape != (net.m,):
        raise ValueError(f"expected {net.m} targets, got shape {targets.shape}")
    grads = []
    for j, (layer, model) in enumerate(net.pipelines):
        xj = layer.combine(inputs)
        err = targets[j] - model.value(xj)
        w_grad = -err * weight_partials(layer, inputs, model)
        point = LsqObjective(x=np.array([xj]), r=np.array([targets[j]]),
                             model=model)
        p_grad = (-err * residual_jacobian(point)[0]).reshape(model.n, 7)
        grads.append(PipelineGradients(weights=w_grad, params=p_grad))
    return grads


def descend_weights(net: NlsigNetwork, inputs_batch, targets_batch,
                    steps: int = 1, rate: float = 1e-2) -> NlsigNetwork:
    """Fixed-step full-batch gradient descent on the input weights.

    Logistic parameters stay fixed (they carry invariants that a raw
    gradient step could break; fit them with the fit module instead).
    Batch gradients accumulate in data order, so results are reproducible.
    """
    inputs_batch = np.asarray(inputs_batch, dtype=float)
    targets_batch = np.asarray(targets_batch, dtype=float)
    current = net
    for _ in range(steps):
        total = [np.zeros(current.q + 1) for _ in range(current.m)]
        for inputs, targets in zip(inputs_batch, targets_batch):
            for j, grad in enumerate(backward(current, inputs, targets)):
                total[j] += grad.weights
        pipelines = tuple(
            (WeightLayer(layer.weights - rate * total[j]), model)
            for j, (layer, model) in enumerate(current.pipelines))
        current = NlsigNetwork(pipelines)
    return current


def _require_homogeneous(net: NlsigNetwork):
    ns = {model.n for _, model in net.pipelines}
    bases = {p.base for _, model in net.pipelines for p in model.partitions}
    if len(ns) != 1 or len(bases) != 1:
        raise ValueError(
            "coupled mode needs every pipeline to share the phase count "
            f"and base (got phase counts {sorted(ns)}, bases {sorted(bases)})")
    return ns.pop(), bases.pop()


def forward_multinomial(net: NlsigNetwork, inputs):
    """Coupled forward pass with a shared softmax-like denominator.

    Pipeline j's phase-i denominator is 1 plus the sum over the other
    pipelines of base**(s*(u_ij - u_ik)) where u_ab is that pipeline's
    scaled distance from its own peak.  Identical pipelines at identical
    inputs therefore split the rise evenly.
    """
    if net.m < 2:
        raise ValueError("coupled mode needs at least two pipelines")
    n, base = _require_homogeneous(net)
    inputs = np.asarray(inputs, dtype=float)
    lnb = math.log(base)

    u = np.empty((n, net.m))
    for j, (layer, model) in enumerate(net.pipelines):
        xj = layer.combine(inputs)
        for i, p in enumerate(model.partitions):
            u[i, j] = p.alpha * (xj - p.delta)

    y = np.empty(net.m)
    for j, (_, model) in enumerate(net.pipelines):
        s = sign_factor(model.sign)
        yj = model.floor
        for i, p in enumerate(model.partitions):
            expo = s * (u[i, j] - np.delete(u[i], j))
            damp = 1.0 + np.sum(np.exp(np.clip(lnb * expo, -EXP_CLAMP, EXP_CLAMP)))
            yj += p.dy / damp
        y[j] = yj
    return y
