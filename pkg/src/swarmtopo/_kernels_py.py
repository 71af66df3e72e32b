"""Pure-Python/numpy reference versions of the hot kernels.

Signatures match ``_kernels.pyx`` exactly; ``kernels.py`` picks one at import.
Node labels in the Prüfer kernels are 1-based; robot indices in the geometric
kernels are 0-based.
"""

import heapq

import numpy as np


def prufer_encode(n, edges):
    """Return ``(removed_leaves, attachments)`` for the tree on ``1..n``."""
    nbrs = [set() for _ in range(n + 1)]
    for u, v in edges:
        nbrs[u].add(v)
        nbrs[v].add(u)
    heap = [v for v in range(1, n + 1) if len(nbrs[v]) == 1]
    heapq.heapify(heap)
    removed = []
    attach = []
    for _ in range(n - 2):
        leaf = heapq.heappop(heap)
        (p,) = nbrs[leaf]
        removed.append(leaf)
        attach.append(p)
        nbrs[p].discard(leaf)
        nbrs[leaf].clear()
        if len(nbrs[p]) == 1:
            heapq.heappush(heap, p)
    return removed, attach


def prufer_decode(n, seq):
    deg = [1] * (n + 1)
    for s in seq:
        deg[s] += 1
    heap = [v for v in range(1, n + 1) if deg[v] == 1]
    heapq.heapify(heap)
    edges = []
    for s in seq:
        leaf = heapq.heappop(heap)
        edges.append((leaf, s))
        deg[s] -= 1
        if deg[s] == 1:
            heapq.heappush(heap, s)
    u = heapq.heappop(heap)
    v = heapq.heappop(heap)
    edges.append((u, v))
    return edges


def _edge_terms(pos, edges, targets, r_range):
    i = edges[:, 0]
    j = edges[:, 1]
    diff = pos[i] - pos[j]
    d = np.hypot(diff[:, 0], diff[:, 1])
    return i, j, diff, d


def edge_velocities(pos, edges, targets, r_range, k_att, k_bar, gain, v_max):
    """Clamped negative gradient of the pairwise tree potential.

    Each robot's gradient is divided by its degree so that hubs do not take
    outsized Euler steps. Edges at or beyond ``r_range`` pull their endpoints
    together at full speed.
    """
    n = pos.shape[0]
    vel = np.zeros((n, 2))
    if edges.shape[0] == 0:
        return vel
    i, j, diff, d = _edge_terms(pos, edges, targets, r_range)
    gap = np.maximum(r_range - d, 1e-12)
    tgap = r_range - targets
    g = k_att * (d - targets) + k_bar * (1.0 / gap**2 - 1.0 / tgap**2)
    g = np.where(d >= r_range, 1e12, g)
    safe = np.where(d > 0, d, 1.0)
    f = (g / safe)[:, None] * diff
    f[d == 0] = 0.0
    grad = np.zeros((n, 2))
    np.add.at(grad, i, f)
    np.subtract.at(grad, j, f)
    deg = np.bincount(edges.ravel(), minlength=n).astype(float)
    deg[deg == 0] = 1.0
    vel = -gain * grad / deg[:, None]
    speed = np.hypot(vel[:, 0], vel[:, 1])
    over = speed > v_max
    vel[over] *= (v_max / speed[over])[:, None]
    return vel


def potential_energy(pos, edges, targets, r_range, k_att, k_bar):
    if edges.shape[0] == 0:
        return 0.0
    _, _, _, d = _edge_terms(pos, edges, targets, r_range)
    if np.any(d >= r_range):
        return float("inf")
    tgap = r_range - targets
    u = 0.5 * k_att * (d - targets) ** 2 + k_bar * (
        1.0 / (r_range - d) - 1.0 / tgap - (d - targets) / tgap**2)
    return float(u.sum())


def disk_union_cells(pos, radius, x0, y0, h, nx, ny):
    """Count grid cells (centers at ``x0 + (i+0.5)h``) inside any disk."""
    grid = np.zeros((nx, ny), dtype=bool)
    r2 = radius * radius
    span = int(np.ceil(radius / h)) + 1
    for x, y in pos:
        ci = int((x - x0) / h)
        cj = int((y - y0) / h)
        i0, i1 = max(ci - span, 0), min(ci + span + 1, nx)
        j0, j1 = max(cj - span, 0), min(cj + span + 1, ny)
        if i0 >= i1 or j0 >= j1:
            continue
        cx = x0 + (np.arange(i0, i1) + 0.5) * h - x
        cy = y0 + (np.arange(j0, j1) + 0.5) * h - y
        grid[i0:i1, j0:j1] |= (cx[:, None] ** 2 + cy[None, :] ** 2) <= r2
    return int(grid.sum())
