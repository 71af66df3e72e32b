# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see _kernels_py.py for the reference semantics."""

from libc.math cimport sqrt, ceil
from libc.stdlib cimport malloc, calloc, free

import numpy as np


def prufer_encode(long n, edges):
    # linear-time elimination; each node keeps the XOR of its live neighbors
    cdef long *deg = <long *> calloc(n + 1, sizeof(long))
    cdef long *xr = <long *> calloc(n + 1, sizeof(long))
    cdef long u, v, i, ptr, leaf, p
    if deg == NULL or xr == NULL:
        free(deg); free(xr)
        raise MemoryError()
    try:
        for e in edges:
            u = e[0]; v = e[1]
            deg[u] += 1; deg[v] += 1
            xr[u] ^= v; xr[v] ^= u
        removed = [0] * (n - 2)
        attach = [0] * (n - 2)
        ptr = 1
        while ptr <= n and deg[ptr] != 1:
            ptr += 1
        leaf = ptr
        for i in range(n - 2):
            p = xr[leaf]
            removed[i] = leaf
            attach[i] = p
            xr[p] ^= leaf
            deg[p] -= 1
            deg[leaf] = 0
            if deg[p] == 1 and p < ptr:
                leaf = p
            else:
                ptr += 1
                while deg[ptr] != 1:
                    ptr += 1
                leaf = ptr
        return removed, attach
    finally:
        free(deg); free(xr)


def prufer_decode(long n, seq):
    cdef long *deg = <long *> malloc((n + 1) * sizeof(long))
    cdef long v, s, ptr, leaf
    if deg == NULL:
        raise MemoryError()
    try:
        for v in range(n + 1):
            deg[v] = 1
        for s in seq:
            deg[s] += 1
        edges = []
        ptr = 1
        while deg[ptr] != 1:
            ptr += 1
        leaf = ptr
        for s in seq:
            edges.append((leaf, s))
            deg[leaf] = 0
            deg[s] -= 1
            if deg[s] == 1 and s < ptr:
                leaf = s
            else:
                ptr += 1
                while deg[ptr] != 1:
                    ptr += 1
                leaf = ptr
        edges.append((leaf, n) if leaf < n else (n, leaf))
        return edges
    finally:
        free(deg)


def edge_velocities(double[:, ::1] pos, long[:, ::1] edges, double[::1] targets,
                    double r_range, double k_att, double k_bar, double gain,
                    double v_max):
    cdef Py_ssize_t n = pos.shape[0], m = edges.shape[0], e, a, b
    out = np.zeros((n, 2))
    cdef double[:, ::1] vel = out
    cdef double[::1] deg = np.zeros(n)
    cdef double dx, dy, d, g, gap, tgap, fx, fy, s
    for e in range(m):
        a = edges[e, 0]; b = edges[e, 1]
        deg[a] += 1.0; deg[b] += 1.0
        dx = pos[a, 0] - pos[b, 0]
        dy = pos[a, 1] - pos[b, 1]
        d = sqrt(dx * dx + dy * dy)
        if d == 0.0:
            continue
        if d >= r_range:
            g = 1e12
        else:
            gap = r_range - d
            tgap = r_range - targets[e]
            g = k_att * (d - targets[e]) + k_bar * (1.0 / (gap * gap) - 1.0 / (tgap * tgap))
        fx = g * dx / d
        fy = g * dy / d
        vel[a, 0] += fx; vel[a, 1] += fy
        vel[b, 0] -= fx; vel[b, 1] -= fy
    for a in range(n):
        s = deg[a] if deg[a] > 0 else 1.0
        vel[a, 0] *= -gain / s
        vel[a, 1] *= -gain / s
        d = sqrt(vel[a, 0] * vel[a, 0] + vel[a, 1] * vel[a, 1])
        if d > v_max:
            vel[a, 0] *= v_max / d
            vel[a, 1] *= v_max / d
    return out


def potential_energy(double[:, ::1] pos, long[:, ::1] edges, double[::1] targets,
                     double r_range, double k_att, double k_bar):
    cdef Py_ssize_t m = edges.shape[0], e, a, b
    cdef double dx, dy, d, t, tgap, total = 0.0
    for e in range(m):
        a = edges[e, 0]; b = edges[e, 1]
        dx = pos[a, 0] - pos[b, 0]
        dy = pos[a, 1] - pos[b, 1]
        d = sqrt(dx * dx + dy * dy)
        if d >= r_range:
            return float("inf")
        t = targets[e]
        tgap = r_range - t
        total += 0.5 * k_att * (d - t) * (d - t) + k_bar * (
            1.0 / (r_range - d) - 1.0 / tgap - (d - t) / (tgap * tgap))
    return total


def disk_union_cells(double[:, ::1] pos, double radius, double x0, double y0,
                     double h, long nx, long ny):
    cdef unsigned char *grid = <unsigned char *> calloc(nx * ny, 1)
    cdef Py_ssize_t k, i, j, i0, i1, j0, j1
    cdef long span = <long> ceil(radius / h) + 1, ci, cj, count = 0
    cdef double x, y, cx, cy, r2 = radius * radius
    if grid == NULL:
        raise MemoryError()
    try:
        for k in range(pos.shape[0]):
            x = pos[k, 0]; y = pos[k, 1]
            ci = <long> ((x - x0) / h)
            cj = <long> ((y - y0) / h)
            i0 = max(ci - span, 0); i1 = min(ci + span + 1, nx)
            j0 = max(cj - span, 0); j1 = min(cj + span + 1, ny)
            for i in range(i0, i1):
                cx = x0 + (i + 0.5) * h - x
                for j in range(j0, j1):
                    if grid[i * ny + j]:
                        continue
                    cy = y0 + (j + 0.5) * h - y
                    if cx * cx + cy * cy <= r2:
                        grid[i * ny + j] = 1
                        count += 1
        return count
    finally:
        free(grid)
