"""Desk-scale differentiable tasks with exact gradients.

Two task families exercise the optimizer:

* NodeRegression: per-node linear probes of a graph-smooth ground truth,
  so the smoothness prior is correct by construction. The convex testbed.
* TinyNet: a one-hidden-layer tanh classifier where graph nodes are the
  hidden units; nonconvex, and the prior is only approximate. Deliberately
  so.

Both support observation subsampling through `sample_fraction`, the
few-shot axis: subsets are nested across fractions for a fixed seed.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass

import numpy as np

from .spectral_engine import SpectralBasis, as_parameter_matrix


@dataclass(frozen=True)
class SmoothSignalSpec:
    """Ground-truth generator knobs: energy in the `cutoff` lowest graph
    frequencies only, coefficients scaled by `coeff_scale`, observations
    later corrupted at `noise_sd`."""

    cutoff: int
    dim: int = 1
    coeff_scale: float = 1.0
    noise_sd: float = 0.0

    def __post_init__(self):
        if self.cutoff < 1:
            raise ValueError(f"cutoff must be >= 1, got {self.cutoff}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if not (math.isfinite(self.coeff_scale) and self.coeff_scale > 0):
            raise ValueError(f"coeff_scale must be positive, got {self.coeff_scale}")
        if not (math.isfinite(self.noise_sd) and self.noise_sd >= 0):
            raise ValueError(f"noise_sd must be >= 0, got {self.noise_sd}")


def gen_smooth_signal(basis: SpectralBasis, spec: SmoothSignalSpec, seed: int) -> np.ndarray:
    """Draw an N x dim signal whose spectrum is supported on frequencies < cutoff."""
    n = basis.n_nodes
    if spec.cutoff > n:
        raise ValueError(f"cutoff {spec.cutoff} exceeds node count {n}")
    rng = np.random.default_rng(seed)
    coeffs = np.zeros((n, spec.dim))
    coeffs[: spec.cutoff] = spec.coeff_scale * rng.standard_normal((spec.cutoff, spec.dim))
    return basis.eigenvectors @ coeffs


def _subset_indices(total: int, fraction: float, rng: np.random.Generator) -> np.ndarray:
    """Seeded subset of ceil(fraction * total) indices; nested across fractions."""
    if not (0 < fraction <= 1):
        raise ValueError(f"sample_fraction must be in (0, 1], got {fraction}")
    kept = math.ceil(fraction * total)
    if kept < 1:
        raise ValueError("subsampling retained zero observations")
    return np.sort(rng.permutation(total)[:kept])


class ToyTask(abc.ABC):
    """Differentiable objective over an N x d parameter stack."""

    n_nodes: int
    dim: int

    @abc.abstractmethod
    def loss(self, theta) -> float: ...

    @abc.abstractmethod
    def grad(self, theta) -> np.ndarray: ...


class NodeRegressionTask(ToyTask):
    """Mean squared error of per-node linear probes.

    Node i carries observations y = a^T theta*_i + eps for unit-norm random
    probes a. The loss averages squared residuals over every retained
    observation, so the gradient of node i only sees node i's probes.
    """

    def __init__(self, probes: np.ndarray, targets: np.ndarray, meta: dict | None = None):
        if probes.ndim != 3 or targets.shape != probes.shape[:2]:
            raise ValueError(
                f"probes (N, m, d) and targets (N, m) disagree: {probes.shape} vs {targets.shape}"
            )
        self.probes = probes
        self.targets = targets
        self.n_nodes = probes.shape[0]
        self.dim = probes.shape[2]
        self.n_obs = targets.size
        self.meta = dict(meta or {})

    def _residuals(self, theta) -> np.ndarray:
        arr = as_parameter_matrix(theta, self.n_nodes)
        return np.einsum("nmd,nd->nm", self.probes, arr) - self.targets

    def loss(self, theta) -> float:
        r = self._residuals(theta)
        return float(np.mean(r * r))

    def grad(self, theta) -> np.ndarray:
        r = self._residuals(theta)
        return (2.0 / self.n_obs) * np.einsum("nm,nmd->nd", r, self.probes)

    def audit_dict(self) -> dict:
        return {
            "kind": "node_regression",
            **self.meta,
            "probes": self.probes.tolist(),
            "targets": self.targets.tolist(),
        }


def node_regression_task(
    ground_truth,
    noise_sd: float,
    m: int,
    sample_fraction: float = 1.0,
    seed: int = 0,
) -> NodeRegressionTask:
    """Observe a ground-truth stack through m random unit-norm probes per node.

    Observations are corrupted with white noise of sd `noise_sd`; only
    ceil(sample_fraction * m) probes per node are retained (same seeded
    subset for every node, nested across fractions).
    """
    gt = as_parameter_matrix(ground_truth)
    if m < 1:
        raise ValueError(f"observations per node must be >= 1, got {m}")
    if not (math.isfinite(noise_sd) and noise_sd >= 0):
        raise ValueError(f"noise_sd must be >= 0, got {noise_sd}")
    n, d = gt.shape
    rng = np.random.default_rng(seed)
    probes = rng.standard_normal((n, m, d))
    norms = np.linalg.norm(probes, axis=2, keepdims=True)
    probes /= np.maximum(norms, 1e-300)
    noise = noise_sd * rng.standard_normal((n, m))
    targets = np.einsum("nmd,nd->nm", probes, gt) + noise
    keep = _subset_indices(m, sample_fraction, rng)
    meta = {
        "seed": int(seed),
        "noise_sd": float(noise_sd),
        "m": int(m),
        "sample_fraction": float(sample_fraction),
        "kept_indices": [int(i) for i in keep],
    }
    return NodeRegressionTask(probes[:, keep, :], targets[:, keep], meta)


class TinyNetTask(ToyTask):
    """Softmax cross-entropy of a one-hidden-layer tanh network.

    Hidden unit i owns row i of the parameter stack: its incoming weight
    vector (first `n_in` entries) concatenated with its outgoing weights
    (last `n_out` entries). No biases.
    """

    def __init__(
        self,
        x: np.ndarray,
        labels: np.ndarray,
        n_hidden: int,
        n_out: int,
        meta: dict | None = None,
    ):
        if labels.max() >= n_out:
            raise ValueError(f"label {labels.max()} out of range for {n_out} classes")
        self.x = x
        self.labels = labels
        self.n_in = x.shape[1]
        self.n_out = int(n_out)
        self.n_nodes = n_hidden
        self.dim = self.n_in + self.n_out
        self.meta = dict(meta or {})

    def _split(self, theta):
        arr = as_parameter_matrix(theta, self.n_nodes)
        if arr.shape[1] != self.dim:
            raise ValueError(f"expected width {self.dim} (= in + out), got {arr.shape[1]}")
        return arr[:, : self.n_in], arr[:, self.n_in :]

    def _forward(self, theta):
        w_in, w_out = self._split(theta)
        hidden = np.tanh(self.x @ w_in.T)
        logits = hidden @ w_out
        shifted = logits - logits.max(axis=1, keepdims=True)
        log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        return hidden, w_out, log_probs

    def loss(self, theta) -> float:
        _, _, log_probs = self._forward(theta)
        return float(-np.mean(log_probs[np.arange(self.x.shape[0]), self.labels]))

    def grad(self, theta) -> np.ndarray:
        hidden, w_out, log_probs = self._forward(theta)
        batch = self.x.shape[0]
        d_logits = np.exp(log_probs)
        d_logits[np.arange(batch), self.labels] -= 1.0
        d_logits /= batch
        d_w_out = hidden.T @ d_logits
        d_hidden = d_logits @ w_out.T
        d_pre = d_hidden * (1.0 - hidden * hidden)
        d_w_in = d_pre.T @ self.x
        return np.concatenate([d_w_in, d_w_out], axis=1)

    def accuracy(self, theta) -> float:
        _, _, log_probs = self._forward(theta)
        return float(np.mean(log_probs.argmax(axis=1) == self.labels))

    def audit_dict(self) -> dict:
        return {
            "kind": "tiny_net",
            **self.meta,
            "inputs": self.x.tolist(),
            "labels": self.labels.tolist(),
        }


def tiny_net_task(
    widths,
    dataset_seed: int = 0,
    sample_fraction: float = 1.0,
    n_examples: int = 64,
) -> TinyNetTask:
    """Seeded Gaussian-blob classification set for a [in, hidden, out] network.

    The hidden width must equal the parameter graph's node count; each
    class is a unit-covariance blob around a seeded center.
    """
    if len(widths) != 3:
        raise ValueError(f"widths must be [in, hidden, out], got {widths}")
    n_in, n_hidden, n_out = (int(w) for w in widths)
    if min(n_in, n_hidden, n_out) < 1:
        raise ValueError(f"widths must be positive, got {widths}")
    if n_out < 2:
        raise ValueError("need at least 2 classes")
    if n_examples < n_out:
        raise ValueError(f"need at least {n_out} examples for {n_out} classes")
    rng = np.random.default_rng(dataset_seed)
    centers = 2.0 * rng.standard_normal((n_out, n_in))
    labels = np.arange(n_examples) % n_out
    x = centers[labels] + rng.standard_normal((n_examples, n_in))
    keep = _subset_indices(n_examples, sample_fraction, rng)
    meta = {
        "dataset_seed": int(dataset_seed),
        "widths": [n_in, n_hidden, n_out],
        "n_examples": int(n_examples),
        "sample_fraction": float(sample_fraction),
        "kept_indices": [int(i) for i in keep],
    }
    return TinyNetTask(x[keep], labels[keep], n_hidden, n_out, meta)
