"""Data re-uploading variational model and its 4-qubit logistic-map instance.

Every encoding gate is a single-qubit rotation whose angle is
``weight * x[feature_index] + bias``. Fixed CNOT gates carry no parameters.
The model output is the expectation value of a Pauli-string observable on the
final state, optionally mapped affinely to a target range.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .statevector import (
    PauliAxis,
    PauliString,
    ShapeError,
    as_axis,
    cnot_permutation,
    expectation_batch,
    rotation_entries,
    apply_1q_batch,
    zero_state_batch,
)

LAYOUT_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class EncodingGate:
    qubit: int
    axis: PauliAxis
    feature_index: int
    weight_slot: int
    bias_slot: int

    def __post_init__(self):
        object.__setattr__(self, "axis", as_axis(self.axis))


@dataclass(frozen=True)
class CNOT:
    control: int
    target: int


Op = Union[EncodingGate, CNOT]


@dataclass(frozen=True)
class CircuitLayout:
    num_qubits: int
    sequence_length: int
    ops: tuple[Op, ...]
    observable: PauliString
    # derived arrays, filled in __post_init__
    _gate_arrays: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        if self.observable.num_qubits != self.num_qubits:
            raise ShapeError("observable size does not match num_qubits")
        gates = self.encoding_gates
        for g in gates:
            if not 0 <= g.feature_index < self.sequence_length:
                raise ShapeError(f"feature_index {g.feature_index} outside sequence")
            if g.axis is PauliAxis.I:
                raise ValueError("encoding gates need a non-identity axis")
        wslots = [g.weight_slot for g in gates]
        bslots = [g.bias_slot for g in gates]
        if len(set(wslots)) != len(wslots) or len(set(bslots)) != len(bslots):
            raise ValueError("weight and bias slots must be unique across gates")
        perms = {}
        for op in self.ops:
            if isinstance(op, CNOT):
                perms[(op.control, op.target)] = cnot_permutation(
                    op.control, op.target, self.num_qubits
                )
        object.__setattr__(
            self,
            "_gate_arrays",
            {
                "feature": np.array([g.feature_index for g in gates], dtype=int),
                "wslot": np.array(wslots, dtype=int),
                "bslot": np.array(bslots, dtype=int),
                "cnot_perm": perms,
            },
        )

    @property
    def encoding_gates(self) -> list[EncodingGate]:
        return [op for op in self.ops if isinstance(op, EncodingGate)]

    @property
    def num_cnots(self) -> int:
        return sum(isinstance(op, CNOT) for op in self.ops)

    @property
    def num_weights(self) -> int:
        w = self._gate_arrays["wslot"]
        return int(w.max()) + 1 if w.size else 0

    @property
    def num_biases(self) -> int:
        b = self._gate_arrays["bslot"]
        return int(b.max()) + 1 if b.size else 0

    def to_dict(self) -> dict:
        ops = []
        for op in self.ops:
            if isinstance(op, CNOT):
                ops.append({"type": "cnot", "control": op.control, "target": op.target})
            else:
                ops.append(
                    {
                        "type": "encoding",
                        "qubit": op.qubit,
                        "axis": op.axis.value,
                        "feature_index": op.feature_index,
                        "weight_slot": op.weight_slot,
                        "bias_slot": op.bias_slot,
                    }
                )
        return {
            "num_qubits": self.num_qubits,
            "sequence_length": self.sequence_length,
            "observable": str(self.observable),
            "ops": ops,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CircuitLayout":
        ops: list[Op] = []
        for item in d["ops"]:
            kind = item.get("type")
            if kind == "cnot":
                ops.append(CNOT(int(item["control"]), int(item["target"])))
            elif kind == "encoding":
                ops.append(
                    EncodingGate(
                        int(item["qubit"]),
                        as_axis(item["axis"]),
                        int(item["feature_index"]),
                        int(item["weight_slot"]),
                        int(item["bias_slot"]),
                    )
                )
            else:
                raise ValueError(f"unknown op type {kind!r}")
        n = int(d["num_qubits"])
        obs = PauliString.parse(d.get("observable", "Z" * n))
        return cls(n, int(d["sequence_length"]), tuple(ops), obs)


@dataclass(frozen=True, eq=False)
class ModelParams:
    weights: np.ndarray
    biases: np.ndarray
    encoding_trainable: bool = True

    def __post_init__(self):
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=np.float64))
        object.__setattr__(self, "biases", np.asarray(self.biases, dtype=np.float64))

    def replace(self, weights=None, biases=None) -> "ModelParams":
        return ModelParams(
            self.weights if weights is None else weights,
            self.biases if biases is None else biases,
            self.encoding_trainable,
        )

    def check(self, layout: CircuitLayout) -> None:
        if self.weights.shape != (layout.num_weights,) or self.biases.shape != (layout.num_biases,):
            raise ShapeError(
                f"params have {self.weights.shape[0]} weights / {self.biases.shape[0]} biases, "
                f"layout needs {layout.num_weights} / {layout.num_biases}"
            )


@dataclass(frozen=True)
class OutputScaling:
    offset: float = 3.75
    slope: float = 0.25

    def __post_init__(self):
        if not self.slope > 0:
            raise ValueError("output scaling slope must be positive")

    def apply(self, raw):
        return self.offset + self.slope * raw


def build_logistic_circuit(num_qubits: int = 4, sequence_length: int = 12) -> CircuitLayout:
    """Sequential encoding: per timestep RZ then RY on every qubit, then a CNOT chain."""
    if num_qubits < 2 or sequence_length < 1:
        raise ValueError("need num_qubits >= 2 and sequence_length >= 1")
    ops: list[Op] = []
    slot = 0
    for t in range(sequence_length):
        for q in range(num_qubits):
            for axis in (PauliAxis.Z, PauliAxis.Y):
                ops.append(EncodingGate(q, axis, t, slot, slot))
                slot += 1
        for q in range(num_qubits - 1):
            ops.append(CNOT(q, q + 1))
    return CircuitLayout(num_qubits, sequence_length, tuple(ops), PauliString((PauliAxis.Z,) * num_qubits))


def init_params(layout: CircuitLayout, seed: int, encoding_trainable: bool = True) -> ModelParams:
    """Draw every weight and bias i.i.d. from U[-pi/2, pi/2] using PCG64."""
    rng = np.random.Generator(np.random.PCG64(seed))
    weights = rng.uniform(-np.pi / 2, np.pi / 2, layout.num_weights)
    biases = rng.uniform(-np.pi / 2, np.pi / 2, layout.num_biases)
    return ModelParams(weights, biases, encoding_trainable)


def gate_angles(layout: CircuitLayout, params: ModelParams, X: np.ndarray) -> np.ndarray:
    """Angles of all encoding gates, shape (batch, num_gates)."""
    arr = layout._gate_arrays
    return X[:, arr["feature"]] * params.weights[arr["wslot"]] + params.biases[arr["bslot"]]


def _as_batch(layout: CircuitLayout, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != layout.sequence_length:
        raise ShapeError(
            f"inputs must have length {layout.sequence_length}, got shape {X.shape}"
        )
    return X


def run_circuit(layout: CircuitLayout, angles: np.ndarray) -> np.ndarray:
    """Final states for a batch of gate-angle rows."""
    n = layout.num_qubits
    psi = zero_state_batch(n, angles.shape[0])
    perms = layout._gate_arrays["cnot_perm"]
    g = 0
    for op in layout.ops:
        if isinstance(op, CNOT):
            psi = psi[:, perms[(op.control, op.target)]]
        else:
            psi = apply_1q_batch(psi, op.qubit, n, *rotation_entries(op.axis, angles[:, g]))
            g += 1
    return psi


def evaluate_raw_batch(layout: CircuitLayout, params: ModelParams, X) -> np.ndarray:
    params.check(layout)
    X = _as_batch(layout, X)
    psi = run_circuit(layout, gate_angles(layout, params, X))
    return expectation_batch(psi, layout.observable)


def evaluate_raw(layout: CircuitLayout, params: ModelParams, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError("evaluate_raw takes a single input sequence")
    return float(evaluate_raw_batch(layout, params, x)[0])


def predict_batch(layout, params, scaling: OutputScaling, X) -> np.ndarray:
    return scaling.apply(evaluate_raw_batch(layout, params, X))


def predict(layout, params, scaling: OutputScaling, x) -> float:
    return float(scaling.apply(evaluate_raw(layout, params, x)))


def model_to_dict(layout: CircuitLayout, params: ModelParams) -> dict:
    d = {"version": LAYOUT_SCHEMA_VERSION}
    d.update(layout.to_dict())
    d["weights"] = params.weights.tolist()
    d["biases"] = params.biases.tolist()
    d["encoding_trainable"] = bool(params.encoding_trainable)
    return d


def model_from_dict(d: dict) -> tuple[CircuitLayout, ModelParams]:
    if d.get("version") != LAYOUT_SCHEMA_VERSION:
        raise ValueError(f"unsupported model document version {d.get('version')!r}")
    layout = CircuitLayout.from_dict(d)
    params = ModelParams(d["weights"], d["biases"], bool(d["encoding_trainable"]))
    params.check(layout)
    return layout, params


def save_model(path, layout: CircuitLayout, params: ModelParams) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(layout, params), fh, indent=1)


def load_model(path) -> tuple[CircuitLayout, ModelParams]:
    with open(path) as fh:
        return model_from_dict(json.load(fh))
