"""Density-based clustering: mutual reachability, MST, condensed tree, and
excess-of-mass flat extraction. Points in no selected cluster get label -1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractViolationError
from . import _kernels


@dataclass
class ClusterModel:
    """Result of one fit: flat labels plus the pieces needed to inspect or
    reuse the fit (core distances, condensed hierarchy, selection)."""

    data: np.ndarray
    labels: np.ndarray
    core_distances: np.ndarray
    min_cluster_size: int
    min_samples: int
    metric: str = "euclidean"
    # condensed hierarchy rows: parent id, child id, lambda = 1/distance, child size
    condensed_parent: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))
    condensed_child: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))
    condensed_lambda: np.ndarray = field(default_factory=lambda: np.empty(0))
    condensed_size: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))
    selected_clusters: tuple[int, ...] = ()
    stability: dict[int, float] = field(default_factory=dict)

    @property
    def n_clusters(self) -> int:
        return len(self.selected_clusters)


def mutual_reachability(data: np.ndarray, min_samples: int) -> np.ndarray:
    """Pairwise max(core_a, core_b, euclidean(a, b)).

    The core distance of x is row index `min_samples` of its sorted distance
    list (self-distance 0 sits at index 0), clamped to the last index when
    the dataset is exactly min_samples rows.
    """
    data = np.asarray(data, dtype=np.float64)
    n = data.shape[0]
    if n < min_samples:
        raise ContractViolationError(
            f"need at least min_samples={min_samples} rows, got {n}"
        )
    diff = data[:, None, :] - data[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=-1))
    core = np.sort(dist, axis=1)[:, min(min_samples, n - 1)]
    return np.maximum(np.maximum(core[:, None], core[None, :]), dist)


def _compute_stability(
    parent: np.ndarray, child: np.ndarray, lam: np.ndarray, size: np.ndarray, n: int
) -> np.ndarray:
    """stability[c] = sum over c's rows of (lambda_row - lambda_birth(c)) * size.

    Cluster ids start at n (the root); index c-n into the returned array.
    The root is born at lambda 0; every other cluster at the lambda of the
    row that created it.
    """
    if parent.size == 0:
        return np.zeros(0)
    num_clusters = int(parent.max()) - n + 1
    births = np.zeros(num_clusters)
    cluster_children = child >= n
    births[child[cluster_children] - n] = lam[cluster_children]
    births[0] = 0.0
    stability = np.zeros(num_clusters)
    np.add.at(stability, parent - n, (lam - births[parent - n]) * size)
    return stability


def _extract_eom(
    parent: np.ndarray,
    child: np.ndarray,
    lam: np.ndarray,
    size: np.ndarray,
    n: int,
    stability: np.ndarray,
) -> tuple[np.ndarray, list[int]]:
    """Excess-of-mass selection over the condensed cluster tree, root excluded,
    then point labelling by nearest selected ancestor."""
    labels = np.full(n, -1, dtype=np.int64)
    if parent.size == 0:
        return labels, []

    stab = stability.copy()
    cluster_rows = child >= n
    children_of: dict[int, list[int]] = {}
    for p, c in zip(parent[cluster_rows], child[cluster_rows]):
        children_of.setdefault(int(p), []).append(int(c))

    num_clusters = stab.shape[0]
    # ids descend from the deepest (largest) label; the root (id n) is skipped
    candidates = list(range(n + num_clusters - 1, n, -1))
    is_cluster = {c: True for c in candidates}
    for node in candidates:
        subtree = sum(stab[k - n] for k in children_of.get(node, []))
        if subtree > stab[node - n]:
            is_cluster[node] = False
            stab[node - n] = subtree
        else:
            queue = list(children_of.get(node, []))
            while queue:
                sub = queue.pop()
                is_cluster[sub] = False
                queue.extend(children_of.get(sub, []))

    selected = sorted(c for c, keep in is_cluster.items() if keep)
    label_map = {c: i for i, c in enumerate(selected)}

    # Resolve every cluster id to its nearest selected ancestor's flat label
    # (or -1). Parents always carry smaller ids, so one ascending pass works.
    cluster_parent = np.full(num_clusters, -1, dtype=np.int64)
    cluster_parent[child[cluster_rows] - n] = parent[cluster_rows]
    resolved = np.full(num_clusters, -1, dtype=np.int64)
    for c in range(n + 1, n + num_clusters):
        if c in label_map:
            resolved[c - n] = label_map[c]
        else:
            up = cluster_parent[c - n]
            if up >= n:
                resolved[c - n] = resolved[up - n]

    point_rows = ~cluster_rows
    labels[child[point_rows]] = resolved[parent[point_rows] - n]
    return labels, selected


def fit_hdbscan(
    data: np.ndarray, min_cluster_size: int = 5, min_samples: int = 5
) -> ClusterModel:
    """Fit on euclidean `data` (one row per point) and extract flat clusters.

    Deterministic in the input: ties in the MST break by vertex index and in
    the linkage by edge discovery order.
    """
    data = np.ascontiguousarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] < 2:
        raise ContractViolationError("need a 2-D dataset with at least 2 rows")
    if min_cluster_size < 2:
        raise ContractViolationError(f"min_cluster_size must be >= 2, got {min_cluster_size}")
    if min_samples < 1:
        raise ContractViolationError(f"min_samples must be >= 1, got {min_samples}")
    n = data.shape[0]

    if np.all(data == data[0]):
        # Degenerate fit: indistinguishable points form one cluster when they
        # are numerous enough to be a cluster at all.
        label = 0 if n >= min_cluster_size else -1
        return ClusterModel(
            data=data,
            labels=np.full(n, label, dtype=np.int64),
            core_distances=np.zeros(n),
            min_cluster_size=min_cluster_size,
            min_samples=min_samples,
            selected_clusters=(0,) if label == 0 else (),
        )

    k = min(min_samples, n - 1)
    gram = data @ data.T
    diag = np.ascontiguousarray(np.diagonal(gram))
    core2 = _kernels.core_sq_distances(gram, diag, k)
    edge_a, edge_b, edge_w2 = _kernels.mst_prim(gram, diag, core2)
    edge_w = np.sqrt(edge_w2)
    order = np.argsort(edge_w, kind="stable")
    left, right, weight, merged = _kernels.single_linkage(
        edge_a[order], edge_b[order], edge_w[order], n
    )
    cp, cc, cl, cs = _kernels.condense(left, right, weight, merged, n, min_cluster_size)
    stability = _compute_stability(cp, cc, cl, cs, n)
    labels, selected = _extract_eom(cp, cc, cl, cs, n, stability)

    return ClusterModel(
        data=data,
        labels=labels,
        core_distances=np.sqrt(core2),
        min_cluster_size=min_cluster_size,
        min_samples=min_samples,
        condensed_parent=cp,
        condensed_child=cc,
        condensed_lambda=cl,
        condensed_size=cs,
        selected_clusters=tuple(selected),
        stability={n + i: float(s) for i, s in enumerate(stability)},
    )
