"""Element error estimators, agent aggregation, and running maxima.

Two estimators are provided, each bound to a refinement mode: the order
projection residual (p mode) measures the L2 distance between an element
solution and its projection one degree lower; the jump reconstruction
estimator (h mode) fits, per interior edge, a single polynomial over the
bounding rectangle of the neighbor pair by least squares and accumulates the
per-element misfits. Both act on one chosen solution component.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from . import basis as bs
from . import dg as dgmod
from . import mesh as msh


def p_projection_estimate(state, component: int) -> np.ndarray:
    """Per-element L2 norm of u - Pi_{p-1} u for one solution component."""
    disc = state.disc
    out = np.empty(disc.n_elements)
    for ib, blk in enumerate(disc.blocks):
        if blk.order < 1:
            raise ValueError("projection estimator requires order >= 1")
        b = bs.basis1d(blk.order)
        u = state.U[ib][..., component]
        T = bs.embed_matrix(blk.order - 1, blk.order) @ bs.reduce_matrix(blk.order, blk.order - 1)
        resid = u - np.einsum("ik,jl,nkl->nij", T, T, u)
        w2 = b.qw[:, None] * b.qw[None, :]
        rq = np.einsum("qi,rj,nij->nqr", b.V, b.V, resid)
        out[blk.gids] = np.sqrt(np.einsum("qr,nqr->n", w2, rq**2) * blk.dx * blk.dy / 4.0)
    return out


def _monomial_design(X: np.ndarray, Y: np.ndarray, r: int, space: str) -> np.ndarray:
    """Design matrix of monomials in rectangle-scaled coordinates.

    `space` selects tensor-product degrees (<= r in each variable) or total
    degree <= r.
    """
    cols = []
    for a in range(r + 1):
        for b in range(r + 1):
            if space == "total" and a + b > r:
                continue
            cols.append((X**a) * (Y**b))
    return np.stack(cols, axis=-1)


@lru_cache(maxsize=None)
def _fit_operators(order_m, order_p, dx_m, dy_m, dx_p, dy_p, rel_x, rel_y, space):
    """Cached least-squares fit and misfit operators for one face class.

    Geometry is translation invariant: the minus element sits at the origin
    and the plus element at the unwrapped relative offset. Returns
    (pinv, Psi_m, Psi_p, w_m, w_p) with quadrature weights already carrying
    the area jacobians.
    """
    r = max(order_m, order_p)
    nq = r + 2
    qx, qw = bs.gauss_legendre(nq)
    xi = (qx + 1.0) / 2.0
    w2 = (qw[:, None] * qw[None, :]).ravel()

    def elem_quad(x0, y0, dx, dy):
        x = x0 + dx * xi
        y = y0 + dy * xi
        X, Y = np.meshgrid(x, y, indexing="ij")
        return X.ravel(), Y.ravel(), w2 * dx * dy / 4.0

    Xm, Ym, wm = elem_quad(0.0, 0.0, dx_m, dy_m)
    Xp, Yp, wp = elem_quad(rel_x, rel_y, dx_p, dy_p)
    # bounding rectangle of the pair, centered/scaled coordinates
    rx0, rx1 = min(0.0, rel_x), max(dx_m, rel_x + dx_p)
    ry0, ry1 = min(0.0, rel_y), max(dy_m, rel_y + dy_p)
    cx, cy = (rx0 + rx1) / 2.0, (ry0 + ry1) / 2.0
    sx, sy = (rx1 - rx0) / 2.0, (ry1 - ry0) / 2.0
    Psi_m = _monomial_design((Xm - cx) / sx, (Ym - cy) / sy, r, space)
    Psi_p = _monomial_design((Xp - cx) / sx, (Yp - cy) / sy, r, space)
    A = np.vstack((np.sqrt(wm)[:, None] * Psi_m, np.sqrt(wp)[:, None] * Psi_p))
    pinv = np.linalg.pinv(A)  # rank-revealing, minimum-norm solution
    return pinv, Psi_m, Psi_p, wm, wp


@lru_cache(maxsize=None)
def _quad_interp(order: int, nq: int) -> np.ndarray:
    """Nodal coefficients -> values on the nq x nq Gauss-Legendre grid,
    flattened in (x major, y minor) order."""
    qx, _ = bs.gauss_legendre(nq)
    V = bs.lagrange_matrix(bs.gauss_lobatto_nodes(order), qx)
    return np.einsum("qi,rj->qrij", V, V).reshape(nq * nq, (order + 1) ** 2)


def jump_reconstruction_estimate(state, component: int, space: str = "tensor") -> np.ndarray:
    """Edge-jump estimator via bulk least-squares reconstruction.

    For each interior edge (nonconforming sub-faces count individually) the
    neighbor pair is fit over its bounding rectangle; each element
    accumulates its squared misfit and the per-element estimate averages
    over the element's edge count.
    """
    disc = state.disc
    err_sq = np.zeros(disc.n_elements)
    n_edges = np.zeros(disc.n_elements)
    comp = [state.U[ib][..., component] for ib in range(len(disc.blocks))]

    for g in disc.face_groups:
        om = disc.blocks[g.bm].order
        op = disc.blocks[g.bp].order
        dx_m = disc.blocks[g.bm].dx[g.slots_m[0]]
        dy_m = disc.blocks[g.bm].dy[g.slots_m[0]]
        dx_p = disc.blocks[g.bp].dx[g.slots_p[0]]
        dy_p = disc.blocks[g.bp].dy[g.slots_p[0]]
        key = (
            om, op,
            round(float(dx_m), 12), round(float(dy_m), 12),
            round(float(dx_p), 12), round(float(dy_p), 12),
            round(float(g.rel_plus[0]), 12), round(float(g.rel_plus[1]), 12),
            space,
        )
        pinv, Psi_m, Psi_p, wm, wp = _fit_operators(*key)
        r = max(om, op)
        Qm = _quad_interp(om, r + 2)
        Qp = _quad_interp(op, r + 2)
        um = comp[g.bm][g.slots_m].reshape(g.slots_m.size, -1) @ Qm.T  # (nf, nq^2)
        up = comp[g.bp][g.slots_p].reshape(g.slots_p.size, -1) @ Qp.T
        rhs = np.hstack((np.sqrt(wm) * um, np.sqrt(wp) * up))
        coef = rhs @ pinv.T
        rm = um - coef @ Psi_m.T
        rp = up - coef @ Psi_p.T
        np.add.at(err_sq, g.gids_m, rm**2 @ wm)
        np.add.at(err_sq, g.gids_p, rp**2 @ wp)
        np.add.at(n_edges, g.gids_m, 1.0)
        np.add.at(n_edges, g.gids_p, 1.0)

    return np.sqrt(err_sq / np.maximum(n_edges, 1.0))


def estimate(state, component: int, mode: str, space: str = "tensor") -> np.ndarray:
    """Mode-bound estimator: order projection for p, edge jump for h."""
    if mode == msh.P_REFINE:
        return p_projection_estimate(state, component)
    return jump_reconstruction_estimate(state, component, space=space)


def aggregate_errors(values: np.ndarray, disc) -> np.ndarray:
    """Agent-level error field: sqrt of the sum of squared child values."""
    out = np.zeros(disc.mesh.n_agents)
    np.add.at(out, disc.agent_of, np.asarray(values) ** 2)
    return np.sqrt(out)


def aggregate_means(values: np.ndarray, disc) -> np.ndarray:
    """Agent-level area-weighted average of per-element values.

    `values` may have trailing axes (e.g. one column per channel).
    """
    values = np.asarray(values, dtype=float)
    w = disc.areas
    shape = (disc.mesh.n_agents,) + values.shape[1:]
    num = np.zeros(shape)
    den = np.zeros(disc.mesh.n_agents)
    wv = values * w.reshape((-1,) + (1,) * (values.ndim - 1))
    np.add.at(num, disc.agent_of, wv)
    np.add.at(den, disc.agent_of, w)
    return num / den.reshape((-1,) + (1,) * (values.ndim - 1))


def running_max_update(acc: np.ndarray, sample: np.ndarray) -> np.ndarray:
    """Elementwise maximum accumulator for per-agent errors."""
    acc = np.asarray(acc, dtype=float)
    sample = np.asarray(sample, dtype=float)
    if acc.shape != sample.shape:
        raise ValueError("accumulator and sample lengths differ")
    return np.maximum(acc, sample)
