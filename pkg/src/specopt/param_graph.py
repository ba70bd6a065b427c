"""Weighted parameter graphs and their Laplacians.

A graph node stands for one parameter vector (a row of the N x d parameter
matrix), never a scalar entry. Edge weights encode how strongly two nodes
should co-vary during optimization. The Laplacian L = D - W is the object
everything downstream consumes: its quadratic form is the smoothness
penalty and its eigenvectors are the frequency basis.

All matrices are dense float64; node counts stay in the hundreds at most.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

ROW_SUM_TOL = 1e-12


@dataclass(frozen=True)
class ParameterGraph:
    """Immutable weighted undirected graph over parameter nodes.

    `weights` is symmetric, nonnegative, zero-diagonal. `degree` and
    `laplacian` are derived at construction and must not be mutated.
    """

    n_nodes: int
    weights: np.ndarray
    degree: np.ndarray = field(init=False, repr=False)
    laplacian: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if self.n_nodes < 1:
            raise ValueError(f"node count must be positive, got {self.n_nodes}")
        if w.shape != (self.n_nodes, self.n_nodes):
            raise ValueError(
                f"weight matrix shape {w.shape} does not match n_nodes={self.n_nodes}"
            )
        if not np.all(np.isfinite(w)):
            raise ValueError("weight matrix contains non-finite entries")
        if np.any(w < 0):
            raise ValueError("weight matrix contains negative entries")
        if np.any(np.diag(w) != 0):
            raise ValueError("weight matrix has nonzero diagonal entries")
        if not np.array_equal(w, w.T):
            raise ValueError("weight matrix is not exactly symmetric")
        deg = np.diag(w.sum(axis=1))
        lap = deg - w
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "degree", deg)
        object.__setattr__(self, "laplacian", lap)
        w.setflags(write=False)
        deg.setflags(write=False)
        lap.setflags(write=False)


def from_edge_list(n: int, edges) -> ParameterGraph:
    """Build a graph from explicit undirected edges (i, j, w).

    Rejects self-loops, out-of-range indices, nonpositive weights, and
    duplicate edges (in either orientation).
    """
    if n < 1:
        raise ValueError(f"node count must be positive, got {n}")
    w = np.zeros((n, n), dtype=np.float64)
    seen = set()
    for i, j, weight in edges:
        i, j = int(i), int(j)
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"edge ({i}, {j}) has an index outside [0, {n})")
        if i == j:
            raise ValueError(f"self-loop on node {i} is not allowed")
        if not (weight > 0):
            raise ValueError(f"edge ({i}, {j}) has nonpositive weight {weight}")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise ValueError(f"duplicate edge {key}")
        seen.add(key)
        w[i, j] = w[j, i] = float(weight)
    return ParameterGraph(n_nodes=n, weights=w)


def layer_chain_graph(group_sizes, intra_w: float, inter_w: float) -> ParameterGraph:
    """Block-structured graph for nodes organized into an ordered chain of layers.

    Nodes within one layer are fully connected at `intra_w`; nodes in
    adjacent layers are fully connected at `inter_w`. Weights of zero simply
    omit those edges.
    """
    sizes = [int(s) for s in group_sizes]
    if len(sizes) == 0:
        raise ValueError("group_sizes must not be empty")
    if any(s < 1 for s in sizes):
        raise ValueError(f"all group sizes must be >= 1, got {sizes}")
    if intra_w < 0 or inter_w < 0:
        raise ValueError("layer weights must be nonnegative")
    n = sum(sizes)
    w = np.zeros((n, n), dtype=np.float64)
    offsets = np.cumsum([0] + sizes)
    for layer, size in enumerate(sizes):
        lo, hi = offsets[layer], offsets[layer + 1]
        w[lo:hi, lo:hi] = intra_w
        if layer + 1 < len(sizes):
            nxt = offsets[layer + 2]
            w[lo:hi, hi:nxt] = inter_w
            w[hi:nxt, lo:hi] = inter_w
    np.fill_diagonal(w, 0.0)
    return ParameterGraph(n_nodes=n, weights=w)


def similarity_graph(vectors, k: int, sigma: float) -> ParameterGraph:
    """Gaussian-kernel k-nearest-neighbor graph over per-node feature vectors.

    Candidate weight exp(-||v_i - v_j||^2 / (2 sigma^2)); an edge is kept
    when either endpoint ranks the other among its k nearest (union rule),
    which guarantees a symmetric weight matrix without halving weights.
    Typical feature vectors are initial task gradients.
    """
    v = np.asarray(vectors, dtype=np.float64)
    if v.ndim != 2:
        raise ValueError(f"vectors must be a 2-D array, got shape {v.shape}")
    n = v.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 nodes, got {n}")
    if not (1 <= k < n):
        raise ValueError(f"neighbor count k={k} must satisfy 1 <= k < {n}")
    if not (sigma > 0):
        raise ValueError(f"kernel width sigma={sigma} must be positive")
    diff = v[:, None, :] - v[None, :, :]
    sq_dist = np.einsum("ijk,ijk->ij", diff, diff)
    kernel = np.exp(-sq_dist / (2.0 * sigma * sigma))
    np.fill_diagonal(sq_dist, np.inf)
    keep = np.zeros((n, n), dtype=bool)
    for i in range(n):
        nearest = np.argsort(sq_dist[i], kind="stable")[:k]
        keep[i, nearest] = True
    keep = keep | keep.T  # union symmetrization
    w = np.where(keep, kernel, 0.0)
    np.fill_diagonal(w, 0.0)
    return ParameterGraph(n_nodes=n, weights=w)


def connected_components(g: ParameterGraph):
    """Components under edges with positive weight.

    Returns (count, labels) where labels[i] is the 0-based component index
    of node i, numbered in order of first appearance.
    """
    n = g.n_nodes
    labels = np.full(n, -1, dtype=np.int64)
    adjacency = g.weights > 0
    count = 0
    for root in range(n):
        if labels[root] >= 0:
            continue
        stack = [root]
        labels[root] = count
        while stack:
            node = stack.pop()
            for nbr in np.nonzero(adjacency[node])[0]:
                if labels[nbr] < 0:
                    labels[nbr] = count
                    stack.append(nbr)
        count += 1
    return count, labels


def graph_to_dict(g: ParameterGraph) -> dict:
    """JSON-ready form {"n": ..., "edges": [[i, j, w], ...]} with i < j."""
    ii, jj = np.nonzero(np.triu(g.weights, k=1))
    edges = [[int(i), int(j), float(g.weights[i, j])] for i, j in zip(ii, jj)]
    return {"n": int(g.n_nodes), "edges": edges}


def graph_from_dict(doc: dict) -> ParameterGraph:
    """Inverse of graph_to_dict; accepts edges in either orientation."""
    if not isinstance(doc, dict):
        raise ValueError("graph document must be a JSON object")
    missing = {"n", "edges"} - set(doc)
    if missing:
        raise ValueError(f"graph document missing fields: {sorted(missing)}")
    unknown = set(doc) - {"n", "edges"}
    if unknown:
        raise ValueError(f"graph document has unknown fields: {sorted(unknown)}")
    return from_edge_list(int(doc["n"]), [tuple(e) for e in doc["edges"]])


def save_graph(g: ParameterGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(graph_to_dict(g), fh)


def load_graph(path) -> ParameterGraph:
    with open(path, "r", encoding="utf-8") as fh:
        return graph_from_dict(json.load(fh))
