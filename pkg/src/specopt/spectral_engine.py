"""Symmetric eigendecomposition, frequency transforms, and spectral filters.

The eigensolver is a cyclic Jacobi sweep over the dense matrix: robust,
dependency-free, and fast enough for the node counts this library targets
(N up to a few hundred). Eigenvectors of equal eigenvalues are not
canonicalized beyond a sign convention, so anything built on top must be
basis-free (reconstructions, projections, energies).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

SYMMETRY_TOL = 1e-10
DEFAULT_JACOBI_TOL = 1e-12
MAX_SWEEPS = 64
# Round-off negatives this close to zero are clamped; genuine negative
# eigenvalues of non-PSD inputs are preserved.
ZERO_CLAMP = 1e-9

FILTER_VARIANTS = ("identity", "ideal_lowpass", "heat", "tikhonov")


class JacobiConvergenceError(RuntimeError):
    """Raised when the sweep budget is exhausted before the target off-norm."""

    def __init__(self, achieved: float, target: float, sweeps: int):
        self.achieved = achieved
        self.target = target
        self.sweeps = sweeps
        super().__init__(
            f"Jacobi failed to converge after {sweeps} sweeps: "
            f"off-diagonal norm {achieved:.3e} > target {target:.3e}"
        )


@dataclass(frozen=True)
class SpectralBasis:
    """Eigenpairs of a symmetric matrix: ascending eigenvalues, column k of
    `eigenvectors` paired with eigenvalue k."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.eigenvalues.shape[0]


@dataclass(frozen=True)
class FilterSpec:
    """Per-frequency gain g(lambda), one of four low-pass families.

    identity        g = 1
    ideal_lowpass   g = 1 on the k lowest frequencies, 0 above
    heat            g = exp(-t lambda)
    tikhonov        g = 1 / (1 + t lambda)

    Every variant satisfies 0 <= g <= 1 and is nonincreasing in lambda.
    """

    variant: str
    k: int | None = None
    t: float | None = None

    def __post_init__(self):
        if self.variant not in FILTER_VARIANTS:
            raise ValueError(
                f"unknown filter variant {self.variant!r}; expected one of {FILTER_VARIANTS}"
            )
        if self.variant == "identity":
            if self.k is not None or self.t is not None:
                raise ValueError("identity filter takes no parameters")
        elif self.variant == "ideal_lowpass":
            if self.t is not None:
                raise ValueError("ideal_lowpass takes k, not t")
            if self.k is None or int(self.k) < 1:
                raise ValueError(
                    f"ideal_lowpass needs keep-count k >= 1, got {self.k} "
                    "(k=0 would annihilate every signal)"
                )
            object.__setattr__(self, "k", int(self.k))
        else:  # heat / tikhonov
            if self.k is not None:
                raise ValueError(f"{self.variant} takes t, not k")
            if self.t is None or not math.isfinite(self.t) or self.t < 0:
                raise ValueError(f"{self.variant} needs finite t >= 0, got {self.t}")
            object.__setattr__(self, "t", float(self.t))

    @classmethod
    def identity(cls) -> "FilterSpec":
        return cls("identity")

    @classmethod
    def ideal_lowpass(cls, k: int) -> "FilterSpec":
        return cls("ideal_lowpass", k=k)

    @classmethod
    def heat(cls, t: float) -> "FilterSpec":
        return cls("heat", t=t)

    @classmethod
    def tikhonov(cls, t: float) -> "FilterSpec":
        return cls("tikhonov", t=t)


def as_parameter_matrix(theta, n_nodes: int | None = None) -> np.ndarray:
    """Validate an N x d stack of per-node parameter vectors."""
    arr = np.asarray(theta, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"parameter matrix must be 2-D (N x d), got shape {arr.shape}")
    if n_nodes is not None and arr.shape[0] != n_nodes:
        raise ValueError(
            f"parameter matrix has {arr.shape[0]} rows, graph has {n_nodes} nodes"
        )
    if not np.all(np.isfinite(arr)):
        raise ValueError("parameter matrix contains non-finite entries")
    return arr


def eigendecompose(L, tol: float = DEFAULT_JACOBI_TOL, max_sweeps: int = MAX_SWEEPS) -> SpectralBasis:
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Converged when the off-diagonal Frobenius norm drops to tol * ||L||_F.
    Eigenvalues are returned ascending with consistently permuted
    eigenvectors; negatives within round-off of zero are clamped to 0.
    Each eigenvector is sign-fixed so its largest-magnitude entry is
    positive, which makes serialized bases reproducible.

    Raises JacobiConvergenceError (with the achieved off-norm) if the sweep
    budget runs out, and ValueError for asymmetric input.
    """
    a = np.array(L, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got shape {a.shape}")
    n = a.shape[0]
    if n < 1:
        raise ValueError("matrix must be at least 1 x 1")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains non-finite entries")
    asym = np.max(np.abs(a - a.T)) if n > 1 else 0.0
    if asym > SYMMETRY_TOL:
        raise ValueError(f"matrix is not symmetric: max |A - A^T| = {asym:.3e}")
    a = 0.5 * (a + a.T)  # fold round-off asymmetry before rotating

    norm0 = float(np.linalg.norm(a))
    target = tol * norm0
    skip = target / max(n, 1)  # skipped mass can never exceed the target
    v = np.eye(n)

    def off_norm(m):
        # summed directly over off-diagonal entries: subtracting the diagonal
        # mass from ||A||_F^2 would cancel catastrophically near convergence
        off = m.copy()
        np.fill_diagonal(off, 0.0)
        return float(np.linalg.norm(off))

    sweeps = 0
    while off_norm(a) > target:
        if sweeps >= max_sweeps:
            raise JacobiConvergenceError(off_norm(a), target, sweeps)
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= skip:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0:
                    t_rot = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t_rot = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t_rot * t_rot)
                s = t_rot * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                new_p = c * col_p - s * col_q
                new_q = s * col_p + c * col_q
                a[:, p] = new_p
                a[p, :] = new_p
                a[:, q] = new_q
                a[q, :] = new_q
                # the 2x2 pivot block has exact closed forms
                a[p, p] = col_p[p] - t_rot * apq
                a[q, q] = col_q[q] + t_rot * apq
                a[p, q] = a[q, p] = 0.0
                vcol_p = v[:, p].copy()
                vcol_q = v[:, q].copy()
                v[:, p] = c * vcol_p - s * vcol_q
                v[:, q] = s * vcol_p + c * vcol_q

    eigvals = np.diag(a).copy()
    order = np.argsort(eigvals, kind="stable")
    eigvals = eigvals[order]
    vecs = v[:, order]
    clamp = ZERO_CLAMP * max(1.0, norm0)
    eigvals[(eigvals < 0) & (eigvals >= -clamp)] = 0.0

    for col in range(n):
        lead = np.argmax(np.abs(vecs[:, col]))
        if vecs[lead, col] < 0:
            vecs[:, col] = -vecs[:, col]

    eigvals.setflags(write=False)
    vecs.setflags(write=False)
    return SpectralBasis(eigenvalues=eigvals, eigenvectors=vecs)


def to_spectral(basis: SpectralBasis, theta) -> np.ndarray:
    """Map vertex-domain rows into the frequency domain: U^T Theta."""
    arr = as_parameter_matrix(theta, basis.n_nodes)
    return basis.eigenvectors.T @ arr


def from_spectral(basis: SpectralBasis, signal) -> np.ndarray:
    """Inverse transform: U Theta'."""
    arr = as_parameter_matrix(signal, basis.n_nodes)
    return basis.eigenvectors @ arr


def filter_gains(spec: FilterSpec, eigenvalues) -> np.ndarray:
    """Elementwise gains for an ascending list of graph frequencies."""
    lam = np.asarray(eigenvalues, dtype=np.float64)
    if lam.ndim != 1:
        raise ValueError(f"eigenvalues must be 1-D, got shape {lam.shape}")
    if np.any(lam < -1e-12):
        raise ValueError("eigenvalues must be nonnegative")
    lam = np.maximum(lam, 0.0)
    if spec.variant == "identity":
        return np.ones_like(lam)
    if spec.variant == "ideal_lowpass":
        if spec.k > lam.shape[0]:
            raise ValueError(
                f"ideal_lowpass keep-count k={spec.k} exceeds spectrum size {lam.shape[0]}"
            )
        gains = np.zeros_like(lam)
        gains[: spec.k] = 1.0
        return gains
    if spec.variant == "heat":
        return np.exp(-spec.t * lam)
    return 1.0 / (1.0 + spec.t * lam)  # tikhonov


def apply_filter(basis: SpectralBasis, spec: FilterSpec, x) -> np.ndarray:
    """Apply the per-frequency gain in the eigenbasis: U diag(g) U^T X."""
    arr = as_parameter_matrix(x, basis.n_nodes)
    gains = filter_gains(spec, basis.eigenvalues)
    return basis.eigenvectors @ (gains[:, None] * (basis.eigenvectors.T @ arr))


def basis_to_dict(basis: SpectralBasis) -> dict:
    """JSON-ready form; eigenvectors listed column by column."""
    return {
        "eigenvalues": [float(v) for v in basis.eigenvalues],
        "eigenvectors": [
            [float(v) for v in basis.eigenvectors[:, k]] for k in range(basis.n_nodes)
        ],
    }


def basis_from_dict(doc: dict) -> SpectralBasis:
    missing = {"eigenvalues", "eigenvectors"} - set(doc)
    if missing:
        raise ValueError(f"basis document missing fields: {sorted(missing)}")
    eigvals = np.asarray(doc["eigenvalues"], dtype=np.float64)
    vecs = np.asarray(doc["eigenvectors"], dtype=np.float64).T
    n = eigvals.shape[0]
    if vecs.shape != (n, n):
        raise ValueError(f"eigenvector block has shape {vecs.shape}, expected ({n}, {n})")
    if np.any(np.diff(eigvals) < 0):
        raise ValueError("eigenvalues must be ascending")
    eigvals.setflags(write=False)
    vecs.setflags(write=False)
    return SpectralBasis(eigenvalues=eigvals, eigenvectors=vecs)


def save_basis(basis: SpectralBasis, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(basis_to_dict(basis), fh)


def load_basis(path) -> SpectralBasis:
    with open(path, "r", encoding="utf-8") as fh:
        return basis_from_dict(json.load(fh))
