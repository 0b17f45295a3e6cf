"""Parameter-dependent Lipschitz bounds, sampled estimates and generalization gaps."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .dataset import make_rng
from .gradients import GENERATOR_NORM
from .model import CircuitLayout, ModelParams, evaluate_raw_batch


@dataclass(frozen=True)
class LipschitzReport:
    bound_raw: float
    bound_scaled: float
    empirical_estimate: float
    num_probe_pairs: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class GapReport:
    train_mse: float
    test_mse: float
    gap: float

    def to_dict(self) -> dict:
        return asdict(self)


def bound_from_norms(observable_norm: float, weight_norms, generator_norms) -> float:
    """2 |M| sum_j |w_j| |H_j|, for arbitrary per-gate weight vector norms."""
    weight_norms = np.asarray(weight_norms, dtype=float)
    generator_norms = np.broadcast_to(np.asarray(generator_norms, dtype=float), weight_norms.shape)
    return float(2.0 * observable_norm * np.sum(weight_norms * generator_norms))


def lipschitz_bound(layout: CircuitLayout, params: ModelParams) -> float:
    """Lipschitz bound of the unscaled expectation value w.r.t. the input (2-norm).

    Each encoding gate reads one feature, so its weight vector norm is |w|.
    Constant gates have zero weight and drop out.
    """
    params.check(layout)
    w = params.weights[layout._gate_arrays["wslot"]]
    return bound_from_norms(layout.observable.spectral_norm, np.abs(w), GENERATOR_NORM)


def empirical_lipschitz(
    layout: CircuitLayout,
    params: ModelParams,
    probe_count: int = 1000,
    input_dim: int | None = None,
    perturbation_scale: float = 0.1,
    seed=0,
) -> float:
    """Largest sampled |f(x + d) - f(x)| / |d| with x ~ U[0,1]^l and |d| = scale."""
    if probe_count < 1:
        raise ValueError("probe_count must be >= 1")
    if not perturbation_scale > 0:
        raise ValueError("perturbation_scale must be positive")
    dim = layout.sequence_length
    if input_dim is not None and input_dim != dim:
        raise ValueError(f"input_dim {input_dim} does not match sequence length {dim}")
    rng = make_rng(seed)
    x = rng.uniform(0.0, 1.0, (probe_count, dim))
    d = rng.standard_normal((probe_count, dim))
    d *= perturbation_scale / np.linalg.norm(d, axis=1, keepdims=True)
    f = evaluate_raw_batch(layout, params, np.concatenate([x, x + d]))
    diff = np.abs(f[probe_count:] - f[:probe_count])
    return float(np.max(diff / np.linalg.norm(d, axis=1)))


def lipschitz_report(layout, params, slope: float, probe_count=1000, perturbation_scale=0.1, seed=0):
    bound = lipschitz_bound(layout, params)
    est = empirical_lipschitz(layout, params, probe_count, None, perturbation_scale, seed)
    return LipschitzReport(bound, slope * bound, est, probe_count)


def generalization_gap(train_mse: float, test_mse: float) -> GapReport:
    if train_mse < 0 or test_mse < 0:
        raise ValueError("MSE values must be non-negative")
    return GapReport(float(train_mse), float(test_mse), float(test_mse - train_mse))
