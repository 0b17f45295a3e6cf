"""Dense statevector simulation for few-qubit registers.

Amplitudes are stored with qubit 0 as the most significant bit of the basis
index. Kernels (the underscore-free ``*_batch`` functions) act on arrays of
shape ``(batch, 2**n)`` so that many inputs can be pushed through one circuit
at once; the :class:`StateVector` API wraps them for single states.

Rotation gates follow the usual convention ``R_P(a) = exp(-i a P / 2)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

MAX_QUBITS = 24


class CapacityError(ValueError):
    """Requested register is outside the dense simulation budget."""


class InvalidGateError(ValueError):
    pass


class ShapeError(ValueError):
    pass


class PauliAxis(str, enum.Enum):
    I = "I"
    X = "X"
    Y = "Y"
    Z = "Z"


PAULI_MATRICES = {
    PauliAxis.I: np.eye(2, dtype=np.complex128),
    PauliAxis.X: np.array([[0, 1], [1, 0]], dtype=np.complex128),
    PauliAxis.Y: np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    PauliAxis.Z: np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


def as_axis(axis: PauliAxis | str) -> PauliAxis:
    try:
        return PauliAxis(axis)
    except ValueError:
        raise InvalidGateError(f"unknown Pauli axis {axis!r}") from None


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis, one factor per qubit."""

    factors: tuple[PauliAxis, ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(as_axis(f) for f in self.factors))
        if not self.factors:
            raise ShapeError("Pauli string needs at least one factor")

    @classmethod
    def parse(cls, text: str) -> "PauliString":
        return cls(tuple(text))

    @property
    def num_qubits(self) -> int:
        return len(self.factors)

    @property
    def spectral_norm(self) -> float:
        # every Pauli string is unitary and Hermitian
        return 1.0

    def __str__(self) -> str:
        return "".join(f.value for f in self.factors)

    def matrix(self) -> np.ndarray:
        out = np.ones((1, 1), dtype=np.complex128)
        for f in self.factors:
            out = np.kron(out, PAULI_MATRICES[f])
        return out


@dataclass
class StateVector:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (2**self.num_qubits,):
            raise ShapeError(
                f"expected {2**self.num_qubits} amplitudes, got shape {self.amplitudes.shape}"
            )

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amplitudes.copy())


def _check_qubits(num_qubits: int) -> None:
    if not 1 <= num_qubits <= MAX_QUBITS:
        raise CapacityError(f"num_qubits must be in [1, {MAX_QUBITS}], got {num_qubits}")


def _check_index(qubit: int, num_qubits: int) -> None:
    if not 0 <= qubit < num_qubits:
        raise IndexError(f"qubit {qubit} out of range for {num_qubits} qubits")


def zero_state_batch(num_qubits: int, batch: int) -> np.ndarray:
    _check_qubits(num_qubits)
    psi = np.zeros((batch, 2**num_qubits), dtype=np.complex128)
    psi[:, 0] = 1.0
    return psi


def apply_1q_batch(psi, qubit, num_qubits, m00, m01, m10, m11):
    """Apply a 2x2 matrix to ``qubit`` of every state in ``psi``.

    Matrix entries may be scalars or arrays of shape ``(batch,)``.
    """
    batch = psi.shape[0]
    view = psi.reshape(batch, 2**qubit, 2, 2 ** (num_qubits - qubit - 1))
    a = view[:, :, 0, :]
    b = view[:, :, 1, :]
    m00, m01, m10, m11 = (_bcast(m) for m in (m00, m01, m10, m11))
    out = np.empty_like(view)
    out[:, :, 0, :] = m00 * a + m01 * b
    out[:, :, 1, :] = m10 * a + m11 * b
    return out.reshape(psi.shape)


def _bcast(m):
    m = np.asarray(m)
    return m.reshape(-1, 1, 1) if m.ndim == 1 else m


def rotation_entries(axis: PauliAxis, angle):
    """Entries (m00, m01, m10, m11) of exp(-i angle P / 2)."""
    c = np.cos(np.asarray(angle) / 2)
    s = np.sin(np.asarray(angle) / 2)
    if axis is PauliAxis.X:
        return c, -1j * s, -1j * s, c
    if axis is PauliAxis.Y:
        return c, -s, s, c
    if axis is PauliAxis.Z:
        return c - 1j * s, 0.0, 0.0, c + 1j * s
    raise InvalidGateError("the identity is not a rotation axis")


def rotate_batch(psi, qubit, num_qubits, axis, angle):
    axis = as_axis(axis)
    return apply_1q_batch(psi, qubit, num_qubits, *rotation_entries(axis, angle))


def pauli_batch(psi, qubit, num_qubits, axis):
    """Apply a bare Pauli (not a rotation) to one qubit."""
    m = PAULI_MATRICES[as_axis(axis)]
    return apply_1q_batch(psi, qubit, num_qubits, m[0, 0], m[0, 1], m[1, 0], m[1, 1])


def cnot_permutation(control: int, target: int, num_qubits: int) -> np.ndarray:
    """Index map such that ``psi[..., perm]`` applies CNOT(control, target)."""
    if control == target:
        raise InvalidGateError("CNOT control and target must differ")
    _check_index(control, num_qubits)
    _check_index(target, num_qubits)
    idx = np.arange(2**num_qubits)
    cbit = 1 << (num_qubits - 1 - control)
    tbit = 1 << (num_qubits - 1 - target)
    return np.where(idx & cbit, idx ^ tbit, idx)


def pauli_string_action(observable: PauliString) -> tuple[np.ndarray, np.ndarray]:
    """Return (source, phase) with ``(P psi)[j] = phase[j] * psi[source[j]]``."""
    n = observable.num_qubits
    idx = np.arange(2**n)
    flip = 0
    for q, f in enumerate(observable.factors):
        if f in (PauliAxis.X, PauliAxis.Y):
            flip |= 1 << (n - 1 - q)
    source = idx ^ flip
    phase = np.ones(2**n, dtype=np.complex128)
    for q, f in enumerate(observable.factors):
        bit = (source >> (n - 1 - q)) & 1
        if f is PauliAxis.Z:
            phase *= np.where(bit, -1.0, 1.0)
        elif f is PauliAxis.Y:
            # Y|0> = i|1>, Y|1> = -i|0>
            phase *= np.where(bit, -1j, 1j)
    return source, phase


def apply_pauli_string_batch(psi, observable: PauliString):
    source, phase = pauli_string_action(observable)
    return phase * psi[..., source]


def expectation_batch(psi, observable: PauliString) -> np.ndarray:
    vals = np.einsum("bi,bi->b", psi.conj(), apply_pauli_string_batch(psi, observable))
    return vals.real


# Single-state API


def init_zero_state(num_qubits: int) -> StateVector:
    return StateVector(num_qubits, zero_state_batch(num_qubits, 1)[0])


def apply_rotation(state: StateVector, qubit: int, axis: PauliAxis | str, angle: float) -> StateVector:
    axis = as_axis(axis)
    if axis is PauliAxis.I:
        raise InvalidGateError("the identity is not a rotation axis")
    _check_index(qubit, state.num_qubits)
    out = rotate_batch(state.amplitudes[None, :], qubit, state.num_qubits, axis, angle)
    return StateVector(state.num_qubits, out[0])


def apply_cnot(state: StateVector, control: int, target: int) -> StateVector:
    perm = cnot_permutation(control, target, state.num_qubits)
    return StateVector(state.num_qubits, state.amplitudes[perm])


def expectation(state: StateVector, observable: PauliString | str | Sequence[str]) -> float:
    if not isinstance(observable, PauliString):
        observable = PauliString(tuple(observable))
    if observable.num_qubits != state.num_qubits:
        raise ShapeError(
            f"observable acts on {observable.num_qubits} qubits, state has {state.num_qubits}"
        )
    psi = state.amplitudes[None, :]
    val = np.vdot(psi[0], apply_pauli_string_batch(psi, observable)[0])
    assert abs(val.imag) < 1e-12 * max(1.0, state.norm_squared())
    return float(val.real)
