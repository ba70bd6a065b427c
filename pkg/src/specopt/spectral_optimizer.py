"""Spectrally filtered gradient descent with graph-smoothness regularization.

One step maps the task gradient through the low-pass filter in the graph
eigenbasis, adds the regularizer gradient, and descends at a fixed rate.
The eigenbasis is computed once from the static graph at the start of a
run and never refreshed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coopt_loss import JointLossConfig, joint_loss, spectral_reg, spectral_reg_grad
from .param_graph import ParameterGraph
from .spectral_engine import (
    FilterSpec,
    SpectralBasis,
    apply_filter,
    as_parameter_matrix,
    eigendecompose,
)
from .toy_tasks import ToyTask

# Runs whose joint loss passes this guard are halted as diverged.
DIVERGENCE_LIMIT = 1e12

FILTER_TARGETS = ("task_gradient", "total_gradient")


@dataclass(frozen=True)
class OptimizerConfig:
    eta: float
    max_steps: int
    reg: JointLossConfig = JointLossConfig(0.0)
    filter: FilterSpec = FilterSpec.identity()
    filter_target: str = "task_gradient"
    stop_loss: float | None = None
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.eta) and self.eta > 0):
            raise ValueError(f"learning rate must be positive, got {self.eta}")
        if self.max_steps < 1:
            raise ValueError(f"max_steps must be >= 1, got {self.max_steps}")
        if self.filter_target not in FILTER_TARGETS:
            raise ValueError(
                f"filter_target must be one of {FILTER_TARGETS}, got {self.filter_target!r}"
            )
        if self.stop_loss is not None and not math.isfinite(self.stop_loss):
            raise ValueError(f"stop_loss must be finite, got {self.stop_loss}")


@dataclass(frozen=True)
class TraceRecord:
    step: int
    task_loss: float
    spec_loss: float
    joint_loss: float
    grad_norm_pre: float
    grad_norm_post: float
    dirichlet_energy: float


@dataclass
class TrainTrace:
    """Per-step history of one run plus its terminal status.

    status is one of "completed", "reached_stop_loss", "diverged"; when
    diverged, `diagnostic` says what tripped at which step and no record is
    appended for the failed step.
    """

    records: list = field(default_factory=list)
    status: str = "completed"
    diagnostic: str | None = None


def filtered_task_grad(basis: SpectralBasis, spec: FilterSpec, task_grad) -> np.ndarray:
    """Low-pass the task gradient in the graph eigenbasis (never lengthens it)."""
    return apply_filter(basis, spec, task_grad)


def _descent_direction(theta, basis, g, cfg, task_grad):
    """Direction plus pre/post-filter gradient norms for the trace."""
    if cfg.filter_target == "task_gradient":
        pre = float(np.linalg.norm(task_grad))
        filtered = apply_filter(basis, cfg.filter, task_grad)
        post = float(np.linalg.norm(filtered))
        direction = filtered + cfg.reg.lam * spectral_reg_grad(g, theta)
    else:
        total = task_grad + cfg.reg.lam * spectral_reg_grad(g, theta)
        pre = float(np.linalg.norm(total))
        direction = apply_filter(basis, cfg.filter, total)
        post = float(np.linalg.norm(direction))
    return direction, pre, post


def step(theta, basis: SpectralBasis, g: ParameterGraph, cfg: OptimizerConfig, task_grad) -> np.ndarray:
    """One descent update; returns the new parameter stack."""
    arr = as_parameter_matrix(theta, g.n_nodes)
    tg = as_parameter_matrix(task_grad, g.n_nodes)
    if tg.shape != arr.shape:
        raise ValueError(f"gradient shape {tg.shape} does not match parameters {arr.shape}")
    direction, _, _ = _descent_direction(arr, basis, g, cfg, tg)
    return arr - cfg.eta * direction


def train(task: ToyTask, g: ParameterGraph, cfg: OptimizerConfig, theta0):
    """Run filtered gradient descent from theta0.

    Returns (trace, theta_final). Stops at max_steps, when the joint loss
    reaches cfg.stop_loss, or with a diagnostic when the run diverges
    (joint loss past the guard, or a non-finite loss/gradient).
    The eigenbasis is decomposed once up front; decomposition failures
    propagate before any step executes.
    """
    theta = as_parameter_matrix(theta0, g.n_nodes).copy()
    if task.n_nodes != g.n_nodes:
        raise ValueError(f"task has {task.n_nodes} nodes, graph has {g.n_nodes}")
    if theta.shape[1] != task.dim:
        raise ValueError(f"theta width {theta.shape[1]} does not match task width {task.dim}")
    basis = eigendecompose(g.laplacian)

    trace = TrainTrace()
    for t in range(cfg.max_steps):
        task_loss = task.loss(theta)
        spec_val = spectral_reg(g, theta)
        if not (math.isfinite(task_loss) and math.isfinite(spec_val)):
            trace.status = "diverged"
            trace.diagnostic = f"step {t}: non-finite loss (task={task_loss}, spec={spec_val})"
            return trace, theta
        breakdown = joint_loss(task_loss, spec_val, cfg.reg)
        if abs(breakdown.joint) > DIVERGENCE_LIMIT:
            trace.status = "diverged"
            trace.diagnostic = f"step {t}: joint loss {breakdown.joint:.3e} beyond divergence guard"
            return trace, theta

        task_grad = np.asarray(task.grad(theta), dtype=np.float64)
        if not np.all(np.isfinite(task_grad)):
            trace.status = "diverged"
            trace.diagnostic = f"step {t}: non-finite task gradient"
            return trace, theta
        direction, pre, post = _descent_direction(theta, basis, g, cfg, task_grad)
        trace.records.append(
            TraceRecord(
                step=t,
                task_loss=task_loss,
                spec_loss=spec_val,
                joint_loss=breakdown.joint,
                grad_norm_pre=pre,
                grad_norm_post=post,
                dirichlet_energy=spec_val,
            )
        )
        if cfg.stop_loss is not None and breakdown.joint <= cfg.stop_loss:
            trace.status = "reached_stop_loss"
            return trace, theta
        theta = theta - cfg.eta * direction

    trace.status = "completed"
    return trace, theta
