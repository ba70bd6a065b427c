"""Graph-smoothness regularizer, joint loss, and their analytic gradients.

The regularizer is the Dirichlet energy of the parameter stack over the
graph: sum over edges of W_ij ||theta_i - theta_j||^2, computed in the
vertex domain as trace(Theta^T L Theta). Its exact frequency-domain form is
sum_k lambda_k ||theta_hat_k||^2, so penalizing it suppresses rough
(high-frequency) variation of parameters across the graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .param_graph import ParameterGraph
from .spectral_engine import as_parameter_matrix


@dataclass(frozen=True)
class JointLossConfig:
    """Regularization weight for the joint objective task + lam * smoothness."""

    lam: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam >= 0):
            raise ValueError(f"regularization weight must be finite and >= 0, got {self.lam}")


@dataclass(frozen=True)
class LossBreakdown:
    task: float
    spec: float
    joint: float


def spectral_reg(g: ParameterGraph, theta) -> float:
    """Dirichlet energy trace(Theta^T L Theta) = sum_{i<j} W_ij ||theta_i - theta_j||^2."""
    arr = as_parameter_matrix(theta, g.n_nodes)
    value = float(np.sum(arr * (g.laplacian @ arr)))
    # quadratic form of a PSD matrix; tiny negatives are pure round-off
    return max(value, 0.0)


def spectral_reg_grad(g: ParameterGraph, theta) -> np.ndarray:
    """Gradient of the Dirichlet energy: 2 L Theta."""
    arr = as_parameter_matrix(theta, g.n_nodes)
    return 2.0 * (g.laplacian @ arr)


def joint_loss(task: float, spec: float, cfg: JointLossConfig) -> LossBreakdown:
    """Combine task loss and smoothness penalty into the joint objective."""
    if not (math.isfinite(task) and math.isfinite(spec)):
        raise ValueError(f"loss terms must be finite, got task={task}, spec={spec}")
    return LossBreakdown(task=float(task), spec=float(spec), joint=float(task) + cfg.lam * float(spec))


def joint_grad(task_grad, g: ParameterGraph, theta, cfg: JointLossConfig) -> np.ndarray:
    """Gradient of the joint objective: task gradient + lam * 2 L Theta."""
    tg = as_parameter_matrix(task_grad, g.n_nodes)
    arr = as_parameter_matrix(theta, g.n_nodes)
    if tg.shape != arr.shape:
        raise ValueError(
            f"task gradient shape {tg.shape} does not match parameter shape {arr.shape}"
        )
    if cfg.lam == 0.0:
        return tg.copy()
    return tg + cfg.lam * (2.0 * (g.laplacian @ arr))
