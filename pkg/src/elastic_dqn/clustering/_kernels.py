"""Numba kernels for the clustering hot path.

The pipeline refits on every environment step, so the O(n^2) pieces
(pairwise distances, core distances, Prim's MST over mutual reachability,
single-linkage, tree condensation) are JIT-compiled. Distances are kept
squared throughout (max() commutes with sqrt); only the n-1 MST edge
weights and the n core distances are square-rooted by the caller.

Squared distances are derived from a precomputed Gram matrix G = X X^T:
d2(i, j) = G[i,i] + G[j,j] - 2 G[i,j], clamped at zero.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def core_sq_distances(gram: np.ndarray, diag: np.ndarray, k: int) -> np.ndarray:
    """Squared core distance per point: (k+1)-smallest squared distance in its
    row, counting the zero self-distance at index 0."""
    n = gram.shape[0]
    out = np.empty(n)
    top = np.empty(k + 1)
    buf = np.empty(n)
    for i in range(n):
        di = diag[i]
        for j in range(n):  # branch-free pass, vectorizes
            d2 = di + diag[j] - 2.0 * gram[i, j]
            buf[j] = max(d2, 0.0)
        for t in range(k + 1):
            top[t] = np.inf
        threshold = np.inf
        for j in range(n):
            d2 = buf[j]
            if d2 < threshold:
                pos = k
                while pos > 0 and top[pos - 1] > d2:
                    top[pos] = top[pos - 1]
                    pos -= 1
                top[pos] = d2
                threshold = top[k]
        out[i] = top[k]
    return out


@njit(cache=True)
def mst_prim(
    gram: np.ndarray, diag: np.ndarray, core2: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Prim's MST over mutual reachability max(core2_i, core2_j, d2_ij).

    Returns (from, to, squared_weight) arrays of length n-1 in discovery
    order. Ties break toward the lowest vertex index.
    """
    n = gram.shape[0]
    best = np.full(n, np.inf)
    best_from = np.zeros(n, np.int64)
    edges_a = np.empty(n - 1, np.int64)
    edges_b = np.empty(n - 1, np.int64)
    edges_w = np.empty(n - 1, np.float64)

    # Tree members get +inf here so the relax pass skips them branch-free.
    wdiag = diag.copy()
    cur = 0
    wdiag[0] = np.inf
    best[0] = np.inf
    for it in range(n - 1):
        dcur = diag[cur]
        ccur = core2[cur]
        pick = 0
        pick_w = np.inf
        for j in range(n):
            d2 = max(dcur + wdiag[j] - 2.0 * gram[cur, j], 0.0)
            m = max(max(d2, ccur), core2[j])
            bj = best[j]
            if m < bj:
                bj = m
                best[j] = m
                best_from[j] = cur
            if bj < pick_w:
                pick_w = bj
                pick = j
        edges_a[it] = best_from[pick]
        edges_b[it] = pick
        edges_w[it] = pick_w
        wdiag[pick] = np.inf
        best[pick] = np.inf
        cur = pick
    return edges_a, edges_b, edges_w


@njit(cache=True)
def single_linkage(
    sorted_a: np.ndarray, sorted_b: np.ndarray, sorted_w: np.ndarray, n: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Union-find pass over weight-sorted MST edges.

    Merge i creates cluster id n+i; rows are (left_id, right_id, weight,
    merged_size) in the usual linkage convention.
    """
    parent = np.full(2 * n - 1, -1, np.int64)
    size = np.ones(2 * n - 1, np.int64)
    out_l = np.empty(n - 1, np.int64)
    out_r = np.empty(n - 1, np.int64)
    out_w = np.empty(n - 1, np.float64)
    out_s = np.empty(n - 1, np.int64)

    for i in range(n - 1):
        ra = sorted_a[i]
        while parent[ra] != -1:
            ra = parent[ra]
        x = sorted_a[i]
        while parent[x] != -1:
            nxt = parent[x]
            parent[x] = ra
            x = nxt
        rb = sorted_b[i]
        while parent[rb] != -1:
            rb = parent[rb]
        x = sorted_b[i]
        while parent[x] != -1:
            nxt = parent[x]
            parent[x] = rb
            x = nxt

        new_id = n + i
        merged = size[ra] + size[rb]
        out_l[i] = ra
        out_r[i] = rb
        out_w[i] = sorted_w[i]
        out_s[i] = merged
        size[new_id] = merged
        parent[ra] = new_id
        parent[rb] = new_id
    return out_l, out_r, out_w, out_s


@njit(cache=True)
def _shed_points(
    start: int,
    n: int,
    left: np.ndarray,
    right: np.ndarray,
    ignore: np.ndarray,
    stack: np.ndarray,
    plabel: int,
    lam: float,
    out_parent: np.ndarray,
    out_child: np.ndarray,
    out_lambda: np.ndarray,
    out_size: np.ndarray,
    cnt: int,
) -> int:
    """Emit (plabel, point, lam, 1) for every leaf under `start`; mark the
    whole subtree ignored."""
    top = 0
    stack[top] = start
    top += 1
    while top > 0:
        top -= 1
        node = stack[top]
        ignore[node] = 1
        if node < n:
            out_parent[cnt] = plabel
            out_child[cnt] = node
            out_lambda[cnt] = lam
            out_size[cnt] = 1
            cnt += 1
        else:
            row = node - n
            stack[top] = left[row]
            top += 1
            stack[top] = right[row]
            top += 1
    return cnt


@njit(cache=True)
def condense(
    left: np.ndarray,
    right: np.ndarray,
    weight: np.ndarray,
    merged_size: np.ndarray,
    n: int,
    min_cluster_size: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Condense the single-linkage dendrogram.

    Splits where both sides have >= min_cluster_size points create new
    cluster ids (root is id n, children numbered breadth-first); smaller
    sides shed their points at the split's lambda = 1/weight. Rows are
    (parent, child, lambda, child_size); every point appears exactly once.
    """
    num_nodes = 2 * n - 1
    root = num_nodes - 1
    relabel = np.full(num_nodes, -1, np.int64)
    relabel[root] = n
    next_label = n + 1
    ignore = np.zeros(num_nodes, np.uint8)

    cap = 3 * n + 8
    out_parent = np.empty(cap, np.int64)
    out_child = np.empty(cap, np.int64)
    out_lambda = np.empty(cap, np.float64)
    out_size = np.empty(cap, np.int64)
    cnt = 0

    queue = np.empty(num_nodes, np.int64)
    qh = 0
    qt = 0
    queue[qt] = root
    qt += 1
    stack = np.empty(num_nodes, np.int64)

    while qh < qt:
        node = queue[qh]
        qh += 1
        if node < n or ignore[node]:
            continue
        row = node - n
        lnode = left[row]
        rnode = right[row]
        w = weight[row]
        lam = 1.0 / w if w > 0.0 else np.inf
        lcount = merged_size[lnode - n] if lnode >= n else 1
        rcount = merged_size[rnode - n] if rnode >= n else 1
        plabel = relabel[node]

        if lcount >= min_cluster_size and rcount >= min_cluster_size:
            relabel[lnode] = next_label
            out_parent[cnt] = plabel
            out_child[cnt] = next_label
            out_lambda[cnt] = lam
            out_size[cnt] = lcount
            cnt += 1
            next_label += 1

            relabel[rnode] = next_label
            out_parent[cnt] = plabel
            out_child[cnt] = next_label
            out_lambda[cnt] = lam
            out_size[cnt] = rcount
            cnt += 1
            next_label += 1

            queue[qt] = lnode
            qt += 1
            queue[qt] = rnode
            qt += 1
        elif lcount < min_cluster_size and rcount < min_cluster_size:
            cnt = _shed_points(
                lnode, n, left, right, ignore, stack, plabel, lam,
                out_parent, out_child, out_lambda, out_size, cnt,
            )
            cnt = _shed_points(
                rnode, n, left, right, ignore, stack, plabel, lam,
                out_parent, out_child, out_lambda, out_size, cnt,
            )
        elif lcount < min_cluster_size:
            relabel[rnode] = plabel
            queue[qt] = rnode
            qt += 1
            cnt = _shed_points(
                lnode, n, left, right, ignore, stack, plabel, lam,
                out_parent, out_child, out_lambda, out_size, cnt,
            )
        else:
            relabel[lnode] = plabel
            queue[qt] = lnode
            qt += 1
            cnt = _shed_points(
                rnode, n, left, right, ignore, stack, plabel, lam,
                out_parent, out_child, out_lambda, out_size, cnt,
            )

    return out_parent[:cnt], out_child[:cnt], out_lambda[:cnt], out_size[:cnt]
