"""Exact gradients of the model output and of the regularized squared-error loss."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    CNOT,
    CircuitLayout,
    ModelParams,
    OutputScaling,
    _as_batch,
    gate_angles,
    run_circuit,
)
from .statevector import (
    PAULI_MATRICES,
    apply_1q_batch,
    apply_pauli_string_batch,
    expectation_batch,
    rotation_entries,
)

# spectral norm of a rotation generator P/2
GENERATOR_NORM = 0.5

GRADIENT_METHODS = ("adjoint", "parameter-shift")


@dataclass(frozen=True, eq=False)
class GradientVector:
    d_weights: np.ndarray
    d_biases: np.ndarray

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.d_weights, self.d_biases])


def adjoint_angle_grads(layout: CircuitLayout, angles: np.ndarray, return_values=False):
    """d<M>/d(angle) for every encoding gate and every batch row.

    One forward pass, then a reverse sweep that un-applies each gate to both
    the state and the observable-projected state. With ``return_values`` the
    forward expectation values are returned as well.
    """
    n = layout.num_qubits
    batch, num_gates = angles.shape
    psi = run_circuit(layout, angles)
    phi = apply_pauli_string_batch(psi, layout.observable)
    values = np.einsum("bi,bi->b", psi.conj(), phi).real
    stack = np.concatenate([psi, phi])
    back_angles = -np.concatenate([angles, angles])
    perms = layout._gate_arrays["cnot_perm"]
    grads = np.empty((batch, num_gates))
    g = num_gates
    for op in reversed(layout.ops):
        if isinstance(op, CNOT):
            stack = stack[:, perms[(op.control, op.target)]]
            continue
        g -= 1
        m = PAULI_MATRICES[op.axis]
        p_psi = apply_1q_batch(stack[:batch], op.qubit, n, m[0, 0], m[0, 1], m[1, 0], m[1, 1])
        grads[:, g] = np.einsum("bi,bi->b", stack[batch:].conj(), p_psi).imag
        stack = apply_1q_batch(stack, op.qubit, n, *rotation_entries(op.axis, back_angles[:, g]))
    return (values, grads) if return_values else grads


def shift_angle_grads(layout: CircuitLayout, angles: np.ndarray) -> np.ndarray:
    """Two-term parameter-shift rule, all shifted circuits evaluated as one batch."""
    batch, num_gates = angles.shape
    shifts = np.concatenate([np.eye(num_gates), -np.eye(num_gates)]) * (np.pi / 2)
    shifted = (angles[:, None, :] + shifts[None, :, :]).reshape(-1, num_gates)
    vals = expectation_batch(run_circuit(layout, shifted), layout.observable)
    vals = vals.reshape(batch, 2, num_gates)
    return (vals[:, 0, :] - vals[:, 1, :]) / 2


def _angle_grads(layout, angles, method):
    if method == "adjoint":
        return adjoint_angle_grads(layout, angles)
    if method == "parameter-shift":
        return shift_angle_grads(layout, angles)
    raise ValueError(f"unknown gradient method {method!r}; choose from {GRADIENT_METHODS}")


def _chain(layout, params, X, dangle, cotangent) -> GradientVector:
    """Map per-row angle gradients onto weight and bias slots."""
    arr = layout._gate_arrays
    weighted = dangle * cotangent[:, None]
    d_w = np.zeros(layout.num_weights)
    d_b = np.zeros(layout.num_biases)
    d_w[arr["wslot"]] = np.sum(weighted * X[:, arr["feature"]], axis=0)
    d_b[arr["bslot"]] = np.sum(weighted, axis=0)
    if not params.encoding_trainable:
        d_w[:] = 0.0
    return GradientVector(d_w, d_b)


def _grad_raw(layout, params, x, method) -> GradientVector:
    params.check(layout)
    X = _as_batch(layout, x)
    if X.shape[0] != 1:
        raise ValueError("raw gradients take a single input sequence")
    dangle = _angle_grads(layout, gate_angles(layout, params, X), method)
    return _chain(layout, params, X, dangle, np.ones(1))


def grad_raw_adjoint(layout: CircuitLayout, params: ModelParams, x) -> GradientVector:
    return _grad_raw(layout, params, x, "adjoint")


def grad_raw_parameter_shift(layout: CircuitLayout, params: ModelParams, x) -> GradientVector:
    return _grad_raw(layout, params, x, "parameter-shift")


def regularizer(params: ModelParams, layout: CircuitLayout, lam: float) -> float:
    """lam * sum_j |w_j|^2 |H_j|^2 over encoding gates; biases are not penalized."""
    if lam < 0:
        raise ValueError(f"regularization strength must be >= 0, got {lam}")
    w = params.weights[layout._gate_arrays["wslot"]]
    return float(lam * GENERATOR_NORM**2 * np.sum(w * w))


def _batch_arrays(batch):
    if hasattr(batch, "sequences") and hasattr(batch, "targets"):
        return np.asarray(batch.sequences, dtype=float), np.asarray(batch.targets, dtype=float)
    pairs = list(batch)
    if not pairs:
        raise ValueError("empty batch")
    X = np.array([np.asarray(x, dtype=float) for x, _ in pairs])
    y = np.array([float(t) for _, t in pairs])
    return X, y


def grad_loss(
    layout: CircuitLayout,
    params: ModelParams,
    scaling: OutputScaling,
    batch,
    lam: float,
    method: str = "adjoint",
) -> tuple[float, GradientVector]:
    """Mean squared error of scaled predictions plus the weight penalty, and its gradient.

    ``batch`` is either a sequence of ``(x, y)`` pairs or an object exposing
    ``sequences`` and ``targets`` arrays (e.g. a :class:`~robustqml.dataset.Dataset`).
    """
    X, y = _batch_arrays(batch)
    return grad_loss_arrays(layout, params, scaling, X, y, lam, method)


def grad_loss_arrays(layout, params, scaling, X, y, lam, method="adjoint"):
    params.check(layout)
    X = _as_batch(layout, X)
    if X.shape[0] == 0:
        raise ValueError("empty batch")
    n = X.shape[0]
    angles = gate_angles(layout, params, X)
    if method == "adjoint":
        raw, dangle = adjoint_angle_grads(layout, angles, return_values=True)
    else:
        dangle = _angle_grads(layout, angles, method)
        raw = expectation_batch(run_circuit(layout, angles), layout.observable)
    resid = scaling.apply(raw) - y
    reg = regularizer(params, layout, lam)
    loss = float(np.mean(resid * resid)) + reg
    grad = _chain(layout, params, X, dangle, 2.0 / n * resid * scaling.slope)
    if params.encoding_trainable and lam:
        # d/dw of lam * |w|^2 / 4
        d_w = grad.d_weights.copy()
        slots = layout._gate_arrays["wslot"]
        d_w[slots] += lam * GENERATOR_NORM**2 * 2 * params.weights[slots]
        grad = GradientVector(d_w, grad.d_biases)
    return loss, grad
