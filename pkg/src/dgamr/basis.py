"""1D polynomial machinery for tensor-product quad elements.

Gauss-Lobatto solution nodes, Gauss-Legendre quadrature, Lagrange
evaluation/differentiation tables, and the 1D transfer operators (order
embedding/reduction, parent/child interval split and merge) from which all
2D element operators are assembled by tensor products.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre


def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [-1, 1]."""
    x, w = legendre.leggauss(n)
    return x, w


def gauss_lobatto_nodes(order: int) -> np.ndarray:
    """Gauss-Lobatto points for a degree-`order` nodal basis (order+1 nodes).

    Interior points are the roots of P'_order; the endpoints +-1 are always
    included, so element traces reduce to the boundary rows of the nodal
    coefficient array.
    """
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    if order == 1:
        return np.array([-1.0, 1.0])
    interior = legendre.Legendre.basis(order).deriv().roots()
    return np.concatenate(([-1.0], np.sort(np.real(interior)), [1.0]))


def lagrange_matrix(nodes: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Values L[i, j] = ell_j(pts[i]) of the Lagrange basis on `nodes`."""
    nodes = np.asarray(nodes, dtype=float)
    pts = np.atleast_1d(np.asarray(pts, dtype=float))
    n = nodes.size
    out = np.ones((pts.size, n))
    for j in range(n):
        for k in range(n):
            if k != j:
                out[:, j] *= (pts - nodes[k]) / (nodes[j] - nodes[k])
    return out


def lagrange_deriv_matrix(nodes: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Derivatives D[i, j] = ell'_j(pts[i]) of the Lagrange basis on `nodes`."""
    nodes = np.asarray(nodes, dtype=float)
    pts = np.atleast_1d(np.asarray(pts, dtype=float))
    n = nodes.size
    out = np.zeros((pts.size, n))
    for j in range(n):
        for m in range(n):
            if m == j:
                continue
            term = np.full(pts.size, 1.0 / (nodes[j] - nodes[m]))
            for k in range(n):
                if k != j and k != m:
                    term *= (pts - nodes[k]) / (nodes[j] - nodes[k])
            out[:, j] += term
    return out


# Reference sub-intervals of a split parent edge: child 0 = lower half.
HALF_SEGMENTS = ((-1.0, 0.0), (0.0, 1.0))
FULL_SEGMENT = (-1.0, 1.0)


def map_to_segment(seg: tuple[float, float], xi: np.ndarray) -> np.ndarray:
    """Affine map of reference points xi in [-1, 1] onto `seg`."""
    a, b = seg
    return a + (b - a) * (np.asarray(xi) + 1.0) / 2.0


class Basis1D:
    """Precomputed 1D tables for one polynomial order.

    Volume quadrature uses `order + 2` Gauss-Legendre points, which is exact
    for the mass matrix (degree 2p) and over-integrates the flux terms.
    """

    def __init__(self, order: int):
        self.order = order
        self.n_nodes = order + 1
        self.nodes = gauss_lobatto_nodes(order)
        self.nq = order + 2
        self.qx, self.qw = gauss_legendre(self.nq)
        self.V = lagrange_matrix(self.nodes, self.qx)        # (nq, p+1)
        self.D = lagrange_deriv_matrix(self.nodes, self.qx)  # (nq, p+1)
        self.M = self.V.T @ (self.qw[:, None] * self.V)      # (p+1, p+1)
        self.Minv = np.linalg.inv(self.M)
        # Row vector such that mean_1d = mvec @ coeffs (interval measure 2).
        self.mvec = (self.V.T @ self.qw) / 2.0


@lru_cache(maxsize=None)
def basis1d(order: int) -> Basis1D:
    return Basis1D(order)


@lru_cache(maxsize=None)
def embed_matrix(order_from: int, order_to: int) -> np.ndarray:
    """Nodal interpolation from a degree-`order_from` basis to a finer one.

    Exact whenever order_to >= order_from (polynomial embedding).
    """
    return lagrange_matrix(gauss_lobatto_nodes(order_from), gauss_lobatto_nodes(order_to))


@lru_cache(maxsize=None)
def reduce_matrix(order_from: int, order_to: int) -> np.ndarray:
    """1D L2 projection from degree `order_from` down to `order_to`."""
    if order_to > order_from:
        raise ValueError("reduce_matrix requires order_to <= order_from")
    bf = basis1d(order_from)
    bt = basis1d(order_to)
    # Quadrature exact for degree order_from + order_to.
    qx, qw = gauss_legendre(order_from + 2)
    Vt = lagrange_matrix(bt.nodes, qx)
    Vf = lagrange_matrix(bf.nodes, qx)
    B = Vt.T @ (qw[:, None] * Vf)
    return bt.Minv @ B


@lru_cache(maxsize=None)
def split_matrix(order: int, half: int) -> np.ndarray:
    """Parent nodal values -> child nodal values on half-interval `half`.

    Exact restriction of the parent polynomial, so splitting then merging is
    the identity up to rounding.
    """
    b = basis1d(order)
    return lagrange_matrix(b.nodes, map_to_segment(HALF_SEGMENTS[half], b.nodes))


@lru_cache(maxsize=None)
def gather_matrix(order: int, half: int) -> np.ndarray:
    """Per-axis contribution of one child to the L2-projected parent.

    parent = sum over halves of gather_matrix(order, half) @ child_coeffs
    reproduces any parent-representable function exactly.
    """
    b = basis1d(order)
    qx, qw = gauss_legendre(order + 2)
    Vp = lagrange_matrix(b.nodes, map_to_segment(HALF_SEGMENTS[half], qx))
    Vc = lagrange_matrix(b.nodes, qx)
    B = 0.5 * (Vp.T @ (qw[:, None] * Vc))
    return b.Minv @ B


@lru_cache(maxsize=None)
def face_quadrature(n: int, seg: tuple[float, float]) -> tuple[np.ndarray, np.ndarray]:
    """n-point Gauss-Legendre rule mapped onto a reference sub-segment."""
    xi, w = gauss_legendre(n)
    return map_to_segment(seg, xi), w


@lru_cache(maxsize=None)
def trace_matrix(order: int, n_q: int, seg: tuple[float, float]) -> np.ndarray:
    """Edge-node values -> face quadrature values on reference segment `seg`.

    `seg` is the quadrature segment expressed in this element's tangential
    reference coordinate: the full edge (-1, 1) or one half for a
    nonconforming sub-face seen from the coarse side.
    """
    pts, _ = face_quadrature(n_q, seg)
    return lagrange_matrix(gauss_lobatto_nodes(order), pts)
