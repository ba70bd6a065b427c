"""Independent reference implementations used to check the library.

Everything here deliberately avoids the code paths under test: eigenvalues
come from bisection on LDL^T inertia counts, the smoothness penalty from an
explicit edge loop, gradients from central differences, and the descent
baseline from a self-contained loop.
"""

import numpy as np


def count_eigs_below(a: np.ndarray, x: float) -> int:
    """Number of eigenvalues of symmetric `a` strictly below x.

    Sylvester inertia of a - x I via symmetric Gaussian elimination; the
    shift is jittered on an exact pivot breakdown.
    """
    n = a.shape[0]
    scale = max(1.0, float(np.abs(a).max()))
    for attempt in range(16):
        shift = x + attempt * 1e-12 * scale
        m = a - shift * np.eye(n)
        negatives = 0
        ok = True
        for k in range(n):
            pivot = m[k, k]
            if pivot == 0.0:
                ok = False
                break
            if pivot < 0:
                negatives += 1
            if k + 1 < n:
                m[k + 1 :, k + 1 :] -= np.outer(m[k + 1 :, k], m[k, k + 1 :]) / pivot
        if ok:
            return negatives
    raise RuntimeError("inertia count kept hitting zero pivots")


def bisection_eigenvalues(a: np.ndarray, iterations: int = 60) -> np.ndarray:
    """All eigenvalues of a symmetric matrix by bisection on inertia counts."""
    n = a.shape[0]
    radii = np.sum(np.abs(a), axis=1) - np.abs(np.diag(a))
    lo = float(np.min(np.diag(a) - radii)) - 1e-6
    hi = float(np.max(np.diag(a) + radii)) + 1e-6
    out = np.empty(n)
    for k in range(n):
        a_lo, a_hi = lo, hi
        for _ in range(iterations):
            mid = 0.5 * (a_lo + a_hi)
            if count_eigs_below(a, mid) >= k + 1:
                a_hi = mid
            else:
                a_lo = mid
        out[k] = 0.5 * (a_lo + a_hi)
    return out


def pairwise_dirichlet(weights: np.ndarray, theta: np.ndarray) -> float:
    """sum over unordered pairs of W_ij ||theta_i - theta_j||^2, written out."""
    n = weights.shape[0]
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            diff = theta[i] - theta[j]
            total += weights[i, j] * float(diff @ diff)
    return total


def central_diff_grad(f, theta: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central finite differences of a scalar function over every entry."""
    grad = np.zeros_like(theta, dtype=float)
    it = np.nditer(theta, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        plus = theta.copy()
        plus[idx] += h
        minus = theta.copy()
        minus[idx] -= h
        grad[idx] = (f(plus) - f(minus)) / (2.0 * h)
    return grad


def rel_err(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    denom = max(1.0, float(np.linalg.norm(a)), float(np.linalg.norm(b)))
    return float(np.linalg.norm(a - b)) / denom


def plain_gd(grad_fn, theta0: np.ndarray, eta: float, steps: int):
    """Reference gradient descent; returns the list of iterates theta_0..theta_T."""
    theta = theta0.copy()
    path = [theta.copy()]
    for _ in range(steps):
        theta = theta - eta * grad_fn(theta)
        path.append(theta.copy())
    return path


def knn_union_weights(vectors: np.ndarray, k: int, sigma: float) -> np.ndarray:
    """Brute-force Gaussian k-NN weights under the union rule."""
    n = vectors.shape[0]
    w = np.zeros((n, n))
    dist = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            d = vectors[i] - vectors[j]
            dist[i, j] = float(d @ d)
    for i in range(n):
        order = sorted((dist[i, j], j) for j in range(n) if j != i)
        for _, j in order[:k]:
            w[i, j] = np.exp(-dist[i, j] / (2.0 * sigma * sigma))
            w[j, i] = np.exp(-dist[i, j] / (2.0 * sigma * sigma))
    return w


def naive_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Triple-loop matrix product, independent of numpy's dot path."""
    n, m = a.shape
    m2, p = b.shape
    assert m == m2
    out = np.zeros((n, p))
    for i in range(n):
        for j in range(p):
            acc = 0.0
            for k in range(m):
                acc += a[i, k] * b[k, j]
            out[i, j] = acc
    return out


def random_graph(rng: np.random.Generator, n: int, p_edge: float = 0.35):
    """Random weighted graph (possibly disconnected) as a weight matrix."""
    w = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p_edge:
                weight = float(rng.uniform(0.1, 2.0))
                w[i, j] = w[j, i] = weight
    return w
