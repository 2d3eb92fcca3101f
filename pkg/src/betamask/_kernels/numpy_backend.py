"""Pure-numpy implementations of the edge aggregation kernels.

Mirrors the compiled extension operation for operation. Accumulation order
matches the Cython loops (edges visited in index order), so the two
backends agree bitwise on identical inputs.
"""

from __future__ import annotations

import numpy as np


def degrees(dst, weights, node_count):
    """Weighted in-degree plus the implicit unit self-loop, per node."""
    deg = np.bincount(dst, weights=weights, minlength=node_count)
    return deg + 1.0


def aggregate(src, dst, coef_self, coef_edge, feats):
    """out[v] = coef_self[v] * feats[v] + sum over edges e into v of
    coef_edge[e] * feats[src[e]]."""
    out = coef_self[:, None] * feats
    np.add.at(out, dst, coef_edge[:, None] * feats[src])
    return out


def aggregate_transpose(src, dst, coef_self, coef_edge, grads):
    """Adjoint of :func:`aggregate`: scatters back through edge sources."""
    out = coef_self[:, None] * grads
    np.add.at(out, src, coef_edge[:, None] * grads[dst])
    return out


def edge_dot(src, dst, rows_a, rows_b):
    """Per-edge inner product <rows_a[dst[e]], rows_b[src[e]]>."""
    return np.einsum("ij,ij->i", rows_a[dst], rows_b[src])
