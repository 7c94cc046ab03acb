"""Union-find kernels shared by the random-cluster oracle and the samplers."""

import numba as nb
import numpy as np


@nb.njit(cache=True, nogil=True)
def find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@nb.njit(cache=True, nogil=True)
def union(parent, a, b):
    ra = find(parent, a)
    rb = find(parent, b)
    if ra == rb:
        return ra
    # smaller index becomes the root so labels are canonical
    if ra < rb:
        parent[rb] = ra
        return ra
    parent[ra] = rb
    return rb


@nb.njit(cache=True, nogil=True)
def _labels_for_masks(n_vertices, edges, start, stop, out):
    m = edges.shape[0]
    parent = np.empty(n_vertices, dtype=np.int64)
    for k in range(start, stop):
        for v in range(n_vertices):
            parent[v] = v
        for e in range(m):
            if (k >> e) & 1:
                union(parent, edges[e, 0], edges[e, 1])
        for v in range(n_vertices):
            out[k - start, v] = find(parent, v)


def edge_state_labels(n_vertices: int, edges: np.ndarray, start: int, stop: int) -> np.ndarray:
    """Cluster labels (smallest vertex of the cluster) for edge masks ``start..stop-1``.

    Bit ``e`` of the mask says whether edge ``e`` is open.
    """
    out = np.empty((stop - start, n_vertices), dtype=np.int16)
    _labels_for_masks(n_vertices, np.ascontiguousarray(edges, dtype=np.int64), start, stop, out)
    return out


def labels_from_open(n_vertices: int, edges: np.ndarray, open_mask: np.ndarray) -> np.ndarray:
    """Labels for explicit boolean edge configurations ``(N, m)``."""
    open_mask = np.atleast_2d(open_mask)
    out = np.empty((len(open_mask), n_vertices), dtype=np.int16)
    parent = np.empty(n_vertices, dtype=np.int64)
    _labels_explicit(n_vertices, np.ascontiguousarray(edges, dtype=np.int64), open_mask.astype(np.bool_), parent, out)
    return out


@nb.njit(cache=True, nogil=True)
def _labels_explicit(n_vertices, edges, open_mask, parent, out):
    for k in range(open_mask.shape[0]):
        for v in range(n_vertices):
            parent[v] = v
        for e in range(edges.shape[0]):
            if open_mask[k, e]:
                union(parent, edges[e, 0], edges[e, 1])
        for v in range(n_vertices):
            out[k, v] = find(parent, v)
