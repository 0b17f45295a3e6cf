"""Lipschitz-regularized training and robustness analysis of re-uploading quantum models."""

__version__ = "0.1.0"

from .dataset import Dataset, generate_dataset, logistic_sequence, perturb, split
from .gradients import grad_loss, grad_raw_adjoint, grad_raw_parameter_shift, regularizer
from .lipschitz import empirical_lipschitz, generalization_gap, lipschitz_bound
from .model import (
    CircuitLayout,
    ModelParams,
    OutputScaling,
    build_logistic_circuit,
    evaluate_raw,
    init_params,
    predict,
)
from .training import TrainingConfig, evaluate_mse, train

__all__ = [
    "CircuitLayout",
    "Dataset",
    "ModelParams",
    "OutputScaling",
    "TrainingConfig",
    "build_logistic_circuit",
    "empirical_lipschitz",
    "evaluate_mse",
    "evaluate_raw",
    "generalization_gap",
    "generate_dataset",
    "grad_loss",
    "grad_raw_adjoint",
    "grad_raw_parameter_shift",
    "init_params",
    "lipschitz_bound",
    "logistic_sequence",
    "perturb",
    "predict",
    "regularizer",
    "split",
    "train",
]
