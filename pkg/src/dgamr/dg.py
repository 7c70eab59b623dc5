"""Nodal DG discretization on the periodic agent mesh.

Elements use tensor-product Gauss-Lobatto nodes with Gauss-Legendre
over-integration (order + 2 points per direction for volume and face
integrals). Interface coupling is mortar-free: nonconforming h faces are
integrated on the fine sub-faces with the coarse trace evaluated at the same
physical quadrature points, and nonconforming p faces use the rule of the
higher-order side, which keeps the scheme conservative and free-stream
preserving on any admissible one-level refined mesh.

Time integration is the classical four-stage RK4 with a CFL time step
dt = cfl * min_e h_min / (lambda_e (2p+1)); the Barth-Jespersen limiter
(density-driven, applied to all components) runs after every stage when
enabled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import basis as bs
from . import equations as eq
from . import mesh as msh


class SolverFailure(RuntimeError):
    """Inadmissible state or non-finite data encountered during a solve."""

    def __init__(self, message, time=None, element=None):
        super().__init__(message)
        self.time = time
        self.element = element


@dataclass
class Block:
    """Elements of one polynomial order, stored contiguously."""

    order: int
    gids: np.ndarray
    agents: np.ndarray
    x0: np.ndarray
    y0: np.ndarray
    dx: np.ndarray
    dy: np.ndarray

    @property
    def n(self) -> int:
        return self.gids.size


@dataclass
class FaceGroup:
    """Faces sharing trace operators: same side orders, reference segments,
    physical jacobian and element sizes. Batched in the residual."""

    bm: int
    bp: int
    axis: int  # 0: vertical face, normal +x; 1: horizontal face, normal +y
    seg_m: tuple
    seg_p: tuple
    jac: float
    slots_m: np.ndarray
    slots_p: np.ndarray
    gids_m: np.ndarray
    gids_p: np.ndarray
    Vf_m: np.ndarray
    Vf_p: np.ndarray
    wq: np.ndarray
    rel_plus: tuple  # unwrapped (x0_p - x0_m, y0_p - y0_m), constant in group


class Discretization:
    """Precomputed element blocks, face groups and adjacency for one mesh."""

    def __init__(self, mesh: msh.Mesh, law: eq.ConservationLaw):
        self.mesh = mesh
        self.law = law
        self.elements = mesh.elements()
        n_elems = len(self.elements)
        self.n_elements = n_elems
        self.orders = np.array([e.order for e in self.elements])
        self.areas = np.array([e.area for e in self.elements])
        self.agent_of = np.array([e.agent for e in self.elements])
        self.centroids = np.array([e.centroid for e in self.elements])

        # Blocks by order; slots follow global element order.
        self.blocks: list[Block] = []
        self.block_of = np.empty(n_elems, dtype=np.int64)
        self.slot_of = np.empty(n_elems, dtype=np.int64)
        for order in sorted(set(self.orders.tolist())):
            sel = np.flatnonzero(self.orders == order)
            b = Block(
                order,
                sel,
                self.agent_of[sel],
                np.array([self.elements[g].x0 for g in sel]),
                np.array([self.elements[g].y0 for g in sel]),
                np.array([self.elements[g].dx for g in sel]),
                np.array([self.elements[g].dy for g in sel]),
            )
            self.block_of[sel] = len(self.blocks)
            self.slot_of[sel] = np.arange(sel.size)
            self.blocks.append(b)

        # Elements of each agent in z order (children contiguous by build).
        self.agent_elements: list[list[int]] = [[] for _ in range(mesh.n_agents)]
        for g, e in enumerate(self.elements):
            self.agent_elements[e.agent].append(g)

        self.face_groups = self._build_face_groups()
        pairs = [(g.gids_m, g.gids_p) for g in self.face_groups]
        self.pair_a = np.concatenate([p[0] for p in pairs]) if pairs else np.empty(0, int)
        self.pair_b = np.concatenate([p[1] for p in pairs]) if pairs else np.empty(0, int)

    # -- face construction -------------------------------------------------

    def _agent_edge_elements(self, agent: int, side: str) -> list[int]:
        """Element gids on one edge of an agent, ordered by tangential coord."""
        gids = self.agent_elements[agent]
        if len(gids) == 1:
            return gids
        sw, se, nw, ne = gids
        return {"W": [sw, nw], "E": [se, ne], "S": [sw, se], "N": [nw, ne]}[side]

    def _build_face_groups(self) -> list[FaceGroup]:
        mesh = self.mesh
        records = []  # (gid_m, gid_p, axis, unwrapped plus origin)

        def add_pair(gm, gp, axis, opx, opy):
            records.append((gm, gp, axis, opx, opy))

        for a in range(mesh.n_agents):
            ix, iy = mesh.agent_xy(a)
            for axis, nb in ((0, mesh.agent_id(ix + 1, iy)), (1, mesh.agent_id(ix, iy + 1))):
                side_m, side_p = ("E", "W") if axis == 0 else ("N", "S")
                ems = self._agent_edge_elements(a, side_m)
                eps = self._agent_edge_elements(nb, side_p)
                if len(ems) == len(eps):
                    pairs = list(zip(ems, eps))
                elif len(ems) == 2:  # fine minus, coarse plus
                    pairs = [(ems[0], eps[0]), (ems[1], eps[0])]
                else:  # coarse minus, fine plus
                    pairs = [(ems[0], eps[0]), (ems[0], eps[1])]
                for gm, gp in pairs:
                    em, ep = self.elements[gm], self.elements[gp]
                    # Unwrapped plus origin: adjacent along the face axis,
                    # actual coordinate along the tangential axis (agent
                    # pairs never wrap tangentially).
                    if axis == 0:
                        add_pair(gm, gp, axis, em.x0 + em.dx, ep.y0)
                    else:
                        add_pair(gm, gp, axis, ep.x0, em.y0 + em.dy)
            # sibling faces inside a split agent
            gids = self.agent_elements[a]
            if len(gids) == 4:
                sw, se, nw, ne = gids
                for gm, gp in ((sw, se), (nw, ne)):
                    em = self.elements[gm]
                    add_pair(gm, gp, 0, em.x0 + em.dx, em.y0)
                for gm, gp in ((sw, nw), (se, ne)):
                    em = self.elements[gm]
                    add_pair(gm, gp, 1, em.x0, em.y0 + em.dy)

        # Group records by trace-operator signature.
        buckets: dict[tuple, list] = {}
        for gm, gp, axis, opx, opy in records:
            em, ep = self.elements[gm], self.elements[gp]
            tm = (em.y0, em.dy) if axis == 0 else (em.x0, em.dx)
            tp = (opy, ep.dy) if axis == 0 else (opx, ep.dx)
            lo = max(tm[0], tp[0])
            hi = min(tm[0] + tm[1], tp[0] + tp[1])
            seg_m = _ref_segment(tm, lo, hi)
            seg_p = _ref_segment(tp, lo, hi)
            # Exact half-length of the face segment; sub-faces are exact
            # halves of the minus or plus edge, so derive from element sizes
            # rather than the subtraction lo/hi (keeps free streams at
            # machine precision).
            jac = min(tm[1], tp[1]) / 2.0
            key = (
                self.block_of[gm],
                self.block_of[gp],
                axis,
                seg_m,
                seg_p,
                round(jac, 12),
                round(em.dx, 12),
                round(em.dy, 12),
                round(ep.dx, 12),
                round(ep.dy, 12),
            )
            buckets.setdefault(key, []).append((gm, gp, opx - em.x0, opy - em.y0, jac))

        groups = []
        for key, recs in buckets.items():
            bm, bp, axis, seg_m, seg_p, _, *_ = key
            jac = recs[0][4]  # exact value; the key only carries a rounded copy
            om, op = self.blocks[bm].order, self.blocks[bp].order
            nq = max(om, op) + 2
            _, wq = bs.face_quadrature(nq, bs.FULL_SEGMENT)
            gm = np.array([r[0] for r in recs])
            gp = np.array([r[1] for r in recs])
            groups.append(
                FaceGroup(
                    bm,
                    bp,
                    axis,
                    seg_m,
                    seg_p,
                    jac,
                    self.slot_of[gm],
                    self.slot_of[gp],
                    gm,
                    gp,
                    bs.trace_matrix(om, nq, seg_m),
                    bs.trace_matrix(op, nq, seg_p),
                    wq,
                    (recs[0][2], recs[0][3]),
                )
            )
        return groups


def _ref_segment(extent: tuple[float, float], lo: float, hi: float) -> tuple:
    """Physical sub-interval [lo, hi] in the element's reference coordinate."""
    t0, dt = extent
    a = 2.0 * (lo - t0) / dt - 1.0
    b = 2.0 * (hi - t0) / dt - 1.0
    snap = lambda v: round(v * 2.0) / 2.0  # segments land on {-1, -.5, 0, .5, 1}
    return (snap(a), snap(b))


def _edge_values(U: np.ndarray, axis: int, is_minus: bool, slots: np.ndarray) -> np.ndarray:
    """Tangential edge nodal values (n_faces, p+1, m) for one face side."""
    if axis == 0:  # vertical face: minus side east edge, plus side west edge
        return U[slots, -1, :, :] if is_minus else U[slots, 0, :, :]
    return U[slots, :, -1, :] if is_minus else U[slots, :, 0, :]


def _scatter_edge(R: np.ndarray, axis: int, is_minus: bool, slots, vals) -> None:
    nt = vals.shape[1]
    tang = np.arange(nt)[None, :]
    fixed = np.full((1, 1), -1 if is_minus else 0)
    if axis == 0:
        np.add.at(R, (slots[:, None], fixed % R.shape[1], tang), vals)
    else:
        np.add.at(R, (slots[:, None], tang, fixed % R.shape[2]), vals)


class SolutionState:
    """Per-element nodal DG coefficients at one simulation time.

    Coefficients live in per-order blocks shaped (n_elems, p+1, p+1, m) with
    node indices ordered (x, y).
    """

    def __init__(self, disc: Discretization, U: list[np.ndarray], time: float = 0.0):
        self.disc = disc
        self.U = U
        self.time = time

    @property
    def mesh(self) -> msh.Mesh:
        return self.disc.mesh

    @property
    def law(self) -> eq.ConservationLaw:
        return self.disc.law

    def copy(self) -> "SolutionState":
        return SolutionState(self.disc, [u.copy() for u in self.U], self.time)

    def component(self, k: int) -> list[np.ndarray]:
        return [u[..., k] for u in self.U]


def build_discretization(mesh: msh.Mesh, law: eq.ConservationLaw) -> Discretization:
    return Discretization(mesh, law)


def node_points(block: Block) -> np.ndarray:
    """Physical solution-node coordinates, shape (n, p+1, p+1, 2)."""
    b = bs.basis1d(block.order)
    xi = (b.nodes + 1.0) / 2.0
    x = block.x0[:, None] + block.dx[:, None] * xi[None, :]
    y = block.y0[:, None] + block.dy[:, None] * xi[None, :]
    pts = np.empty((block.n, b.n_nodes, b.n_nodes, 2))
    pts[..., 0] = x[:, :, None]
    pts[..., 1] = y[:, None, :]
    return pts


def interpolate_ic(f, mesh: msh.Mesh, law: eq.ConservationLaw, disc=None) -> SolutionState:
    """Interpolate a pointwise IC f((..., 2) points) -> (..., m) to the nodes."""
    disc = disc or build_discretization(mesh, law)
    U = []
    for blk in disc.blocks:
        pts = node_points(blk)
        vals = np.asarray(f(pts.reshape(-1, 2)), dtype=float)
        U.append(vals.reshape(blk.n, blk.order + 1, blk.order + 1, law.m))
    return SolutionState(disc, U, 0.0)


def _rusanov_axis(law: eq.ConservationLaw, um: np.ndarray, up: np.ndarray, axis: int):
    Fm = eq.flux(law, um)[..., axis]
    Fp = eq.flux(law, up)[..., axis]
    if law.kind == "advection":
        lam = abs(law.velocity[axis])
        return 0.5 * (Fm + Fp) - 0.5 * lam * (up - um)
    am = eq.sound_speed(law, um)
    ap = eq.sound_speed(law, up)
    vnm = np.abs(um[..., 1 + axis] / um[..., 0]) + am
    vnp = np.abs(up[..., 1 + axis] / up[..., 0]) + ap
    lam = np.maximum(vnm, vnp)[..., None]
    return 0.5 * (Fm + Fp) - 0.5 * lam * (up - um)


def rusanov_flux(law: eq.ConservationLaw, u_minus, u_plus, n) -> np.ndarray:
    """Rusanov numerical flux 0.5 (F- + F+) . n - 0.5 lambda (u+ - u-)."""
    u_minus = np.asarray(u_minus, dtype=float)
    u_plus = np.asarray(u_plus, dtype=float)
    n = np.asarray(n, dtype=float)
    Fm = np.einsum("...md,...d->...m", eq.flux(law, u_minus), n)
    Fp = np.einsum("...md,...d->...m", eq.flux(law, u_plus), n)
    lam = eq.interface_wavespeed(law, u_minus, u_plus, n)
    return 0.5 * (Fm + Fp) - 0.5 * lam[..., None] * (u_plus - u_minus)


def residual(state: SolutionState) -> list[np.ndarray]:
    """Semi-discrete RHS du/dt solved against the element mass matrices."""
    disc = state.disc
    law = disc.law
    R = [np.zeros_like(u) for u in state.U]

    for ib, blk in enumerate(disc.blocks):
        b = bs.basis1d(blk.order)
        U = state.U[ib]
        Uq = np.einsum("qi,rj,nijm->nqrm", b.V, b.V, U)
        if law.kind == "euler":
            rho = Uq[..., 0]
            if np.any(rho <= 0.0) or not np.all(np.isfinite(Uq)):
                bad = np.argwhere(~((rho > 0.0).all(axis=(1, 2)) & np.isfinite(Uq).all(axis=(1, 2, 3))))
                gid = int(blk.gids[bad[0, 0]]) if bad.size else -1
                raise SolverFailure("inadmissible state in volume quadrature",
                                    time=state.time, element=gid)
        F = eq.flux(law, Uq)
        w2 = b.qw[:, None] * b.qw[None, :]
        R[ib] += np.einsum("qi,rj,qr,nqrm,n->nijm", b.D, b.V, w2, F[..., 0], blk.dy / 2.0)
        R[ib] += np.einsum("qi,rj,qr,nqrm,n->nijm", b.V, b.D, w2, F[..., 1], blk.dx / 2.0)

    for g in disc.face_groups:
        em = _edge_values(state.U[g.bm], g.axis, True, g.slots_m)
        ep = _edge_values(state.U[g.bp], g.axis, False, g.slots_p)
        um = np.einsum("qi,nim->nqm", g.Vf_m, em)
        up = np.einsum("qi,nim->nqm", g.Vf_p, ep)
        fh = _rusanov_axis(law, um, up, g.axis)
        cm = -np.einsum("qi,nqm->nim", g.Vf_m, g.wq[:, None] * fh) * g.jac
        cp = np.einsum("qi,nqm->nim", g.Vf_p, g.wq[:, None] * fh) * g.jac
        _scatter_edge(R[g.bm], g.axis, True, g.slots_m, cm)
        _scatter_edge(R[g.bp], g.axis, False, g.slots_p, cp)

    for ib, blk in enumerate(disc.blocks):
        b = bs.basis1d(blk.order)
        scale = 4.0 / (blk.dx * blk.dy)
        R[ib] = np.einsum("ik,jl,nklm,n->nijm", b.Minv, b.Minv, R[ib], scale)
    return R


def stable_dt(state: SolutionState, cfl: float, remaining: float | None = None) -> float:
    """CFL time step cfl * min_e h_min / (lambda_e (2p+1)).

    With zero wavespeed everywhere returns `remaining` (the time to the next
    remesh boundary) or +inf when no horizon is given.
    """
    dt = np.inf
    for ib, blk in enumerate(state.disc.blocks):
        lam = eq.max_wavespeed(state.law, state.U[ib])
        lam_e = lam.reshape(blk.n, -1).max(axis=1)
        h = np.minimum(blk.dx, blk.dy)
        with np.errstate(divide="ignore"):
            dte = np.where(lam_e > 0.0, h / (lam_e * (2 * blk.order + 1)), np.inf)
        dt = min(dt, dte.min())
    dt = cfl * dt
    if not np.isfinite(dt):
        return remaining if remaining is not None else np.inf
    if remaining is not None:
        dt = min(dt, remaining)
    return dt


def rk4_step(state: SolutionState, dt: float, limiter: bool = False) -> SolutionState:
    """Classical four-stage RK4 update (limiter per stage when enabled)."""
    if not dt > 0.0:
        raise ValueError("dt must be positive")

    def axpy(U, K, a):
        return [u + a * k for u, k in zip(U, K)]

    def limited(s):
        return limit_barth_jespersen(s) if limiter else s

    u0 = state.U
    k1 = residual(state)
    s2 = limited(SolutionState(state.disc, axpy(u0, k1, dt / 2.0), state.time + dt / 2.0))
    k2 = residual(s2)
    s3 = limited(SolutionState(state.disc, axpy(u0, k2, dt / 2.0), state.time + dt / 2.0))
    k3 = residual(s3)
    s4 = limited(SolutionState(state.disc, axpy(u0, k3, dt), state.time + dt))
    k4 = residual(s4)
    Un = [
        u + dt / 6.0 * (a + 2.0 * b + 2.0 * c + d)
        for u, a, b, c, d in zip(u0, k1, k2, k3, k4)
    ]
    return limited(SolutionState(state.disc, Un, state.time + dt))


def advance(state, duration: float, cfl: float = 0.5, limiter: bool = False,
            on_step=None) -> SolutionState:
    """Advance by `duration`, clipping the last step to land exactly.

    `on_step` is invoked with the state after every accepted step (used by
    the environment for running-max error estimates and cost tallies).
    """
    if not duration > 0.0:
        raise ValueError("duration must be positive")
    t_end = state.time + duration
    remaining = duration
    try:
        while remaining > 1e-14 * max(1.0, abs(t_end)):
            dt = stable_dt(state, cfl, remaining)
            if not np.isfinite(dt) or dt <= 0.0:
                raise SolverFailure("non-positive stable time step", time=state.time)
            if dt >= remaining * (1.0 - 1e-12):
                dt = remaining
            state = rk4_step(state, dt, limiter=limiter)
            remaining -= dt
            state.time = t_end - remaining
            if on_step is not None:
                on_step(state)
    except eq.AdmissibilityError as err:
        raise SolverFailure(str(err), time=state.time) from err
    state.time = t_end
    return state


# -- limiting ---------------------------------------------------------------


def cell_means(state: SolutionState) -> np.ndarray:
    """Per-element solution means in global element order, shape (n, m)."""
    out = np.empty((state.disc.n_elements, state.law.m))
    for ib, blk in enumerate(state.disc.blocks):
        b = bs.basis1d(blk.order)
        out[blk.gids] = np.einsum("i,j,nijm->nm", b.mvec, b.mvec, state.U[ib])
    return out


def limit_barth_jespersen(state: SolutionState) -> SolutionState:
    """Scale solution slopes so density stays within face-neighbor mean bounds.

    A single factor alpha in [0, 1] per element, computed from the density
    field, multiplies the deviation from the mean of every component, so
    cell means are preserved exactly.
    """
    disc = state.disc
    means = cell_means(state)
    rho = means[:, 0]
    lo = rho.copy()
    hi = rho.copy()
    np.minimum.at(lo, disc.pair_a, rho[disc.pair_b])
    np.minimum.at(lo, disc.pair_b, rho[disc.pair_a])
    np.maximum.at(hi, disc.pair_a, rho[disc.pair_b])
    np.maximum.at(hi, disc.pair_b, rho[disc.pair_a])

    U = []
    for ib, blk in enumerate(disc.blocks):
        u = state.U[ib]
        mean = means[blk.gids]
        d = u[..., 0] - mean[:, None, None, 0]
        room_hi = (hi[blk.gids] - mean[:, 0])[:, None, None]
        room_lo = (lo[blk.gids] - mean[:, 0])[:, None, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            a = np.where(
                d > 1e-14, room_hi / d, np.where(d < -1e-14, room_lo / d, 1.0)
            )
        alpha = np.clip(a, 0.0, 1.0).min(axis=(1, 2))
        U.append(mean[:, None, None, :] + alpha[:, None, None, None] * (u - mean[:, None, None, :]))
    return SolutionState(disc, U, state.time)


# -- projections and remeshing ----------------------------------------------


def project_order(coeffs: np.ndarray, p_from: int, p_to: int) -> np.ndarray:
    """L2 projection (or exact embedding) between element orders.

    `coeffs` has shape (..., p_from+1, p_from+1, m); axes -3/-2 are the x/y
    node indices.
    """
    if p_to >= p_from:
        T = bs.embed_matrix(p_from, p_to)
    else:
        T = bs.reduce_matrix(p_from, p_to)
    return np.einsum("ik,jl,...klm->...ijm", T, T, coeffs)


def split_to_children(coeffs: np.ndarray) -> list[np.ndarray]:
    """Restrict a parent element polynomial to its four z-ordered children."""
    p = coeffs.shape[-2] - 1
    out = []
    for cx, cy in msh.CHILD_OFFSETS:
        Sx = bs.split_matrix(p, cx)
        Sy = bs.split_matrix(p, cy)
        out.append(np.einsum("ik,jl,...klm->...ijm", Sx, Sy, coeffs))
    return out


def project_children_to_parent(children) -> np.ndarray:
    """L2 projection of four z-ordered child solutions onto the parent."""
    p = children[0].shape[-2] - 1
    out = None
    for (cx, cy), ch in zip(msh.CHILD_OFFSETS, children):
        Gx = bs.gather_matrix(p, cx)
        Gy = bs.gather_matrix(p, cy)
        term = np.einsum("ik,jl,...klm->...ijm", Gx, Gy, ch)
        out = term if out is None else out + term
    return out


def remesh_state(state: SolutionState, new_mesh: msh.Mesh,
                 new_disc: Discretization | None = None) -> SolutionState:
    """Transfer the solution onto a mesh with updated refinement flags."""
    old = state.disc
    mesh = state.mesh
    if new_disc is None:
        new_disc = build_discretization(new_mesh, old.law)
    U = [
        np.zeros((blk.n, blk.order + 1, blk.order + 1, old.law.m))
        for blk in new_disc.blocks
    ]
    for a in range(mesh.n_agents):
        fa, fb = mesh.flags[a], new_mesh.flags[a]
        og = old.agent_elements[a]
        ng = new_disc.agent_elements[a]
        ou = [(old.block_of[g], old.slot_of[g]) for g in og]
        nu = [(new_disc.block_of[g], new_disc.slot_of[g]) for g in ng]
        if fa == fb:
            for (ob, os), (nb, ns) in zip(ou, nu):
                U[nb][ns] = state.U[ob][os]
        elif mesh.mode == msh.P_REFINE:
            ob, os = ou[0]
            nb, ns = nu[0]
            U[nb][ns] = project_order(
                state.U[ob][os], old.blocks[ob].order, new_disc.blocks[nb].order
            )
        elif fb == msh.FINE:  # h split
            ob, os = ou[0]
            for child, (nb, ns) in zip(split_to_children(state.U[ob][os]), nu):
                U[nb][ns] = child
        else:  # h coarsen
            nb, ns = nu[0]
            U[nb][ns] = project_children_to_parent([state.U[ob][os] for ob, os in ou])
    return SolutionState(new_disc, U, state.time)


# -- integrals, errors, sampling ---------------------------------------------


def integrate(state: SolutionState) -> np.ndarray:
    """Domain integral of each conserved component."""
    out = np.zeros(state.law.m)
    for ib, blk in enumerate(state.disc.blocks):
        b = bs.basis1d(blk.order)
        Uq = np.einsum("qi,rj,nijm->nqrm", b.V, b.V, state.U[ib])
        w2 = b.qw[:, None] * b.qw[None, :]
        out += np.einsum("qr,nqrm,n->m", w2, Uq, blk.dx * blk.dy / 4.0)
    return out


def quadrature_points(blk: Block, n_q: int):
    """Physical tensor quadrature points/weights for every block element."""
    qx, qw = bs.gauss_legendre(n_q)
    xi = (qx + 1.0) / 2.0
    x = blk.x0[:, None] + blk.dx[:, None] * xi[None, :]
    y = blk.y0[:, None] + blk.dy[:, None] * xi[None, :]
    pts = np.empty((blk.n, n_q, n_q, 2))
    pts[..., 0] = x[:, :, None]
    pts[..., 1] = y[:, None, :]
    w2 = qw[:, None] * qw[None, :]
    return pts, w2


def l2_error(state: SolutionState, exact_fn, component: int | None = None) -> float:
    """L2 norm of (u_h - exact) over the domain with over-integration.

    `exact_fn` maps (..., 2) points to (..., m) values; `component` restricts
    the norm to one solution component.
    """
    total = 0.0
    for ib, blk in enumerate(state.disc.blocks):
        b = bs.basis1d(blk.order)
        n_q = blk.order + 3
        qx, _ = bs.gauss_legendre(n_q)
        V = bs.lagrange_matrix(b.nodes, qx)
        pts, w2 = quadrature_points(blk, n_q)
        Uq = np.einsum("qi,rj,nijm->nqrm", V, V, state.U[ib])
        Eq = np.asarray(exact_fn(pts.reshape(-1, 2))).reshape(Uq.shape)
        diff = Uq - Eq
        if component is not None:
            diff = diff[..., component : component + 1]
        total += np.einsum("qr,nqrm,n->", w2, diff**2, blk.dx * blk.dy / 4.0)
    return float(np.sqrt(total))


def locate_points(disc: Discretization, pts: np.ndarray) -> np.ndarray:
    """Global element id containing each point (periodic wrap applied)."""
    mesh = disc.mesh
    (x0, x1), (y0, y1) = mesh.bounds
    ex, ey = mesh.extent
    dx, dy = mesh.spacing
    px = (pts[:, 0] - x0) % ex
    py = (pts[:, 1] - y0) % ey
    ix = np.minimum((px / dx).astype(int), mesh.nx - 1)
    iy = np.minimum((py / dy).astype(int), mesh.ny - 1)
    agents = iy * mesh.nx + ix
    first = np.array([disc.agent_elements[a][0] for a in range(mesh.n_agents)])
    counts = np.array([len(disc.agent_elements[a]) for a in range(mesh.n_agents)])
    gids = first[agents]
    split = counts[agents] == 4
    if np.any(split):
        cx = (px[split] - ix[split] * dx) >= dx / 2.0
        cy = (py[split] - iy[split] * dy) >= dy / 2.0
        gids[split] = first[agents[split]] + cx.astype(int) + 2 * cy.astype(int)
    return gids


def evaluate_at_points(state: SolutionState, pts: np.ndarray,
                       chunk: int = 65536) -> np.ndarray:
    """Pointwise solution values u_h(pts), shape (n_pts, m)."""
    disc = state.disc
    pts = np.asarray(pts, dtype=float)
    gids = locate_points(disc, pts)
    out = np.empty((pts.shape[0], state.law.m))
    for ib, blk in enumerate(disc.blocks):
        sel = np.flatnonzero(disc.block_of[gids] == ib)
        if sel.size == 0:
            continue
        b = bs.basis1d(blk.order)
        slots = disc.slot_of[gids[sel]]
        for s in range(0, sel.size, chunk):
            idx = sel[s : s + chunk]
            sl = slots[s : s + chunk]
            mesh = disc.mesh
            (mx0, _), (my0, _) = mesh.bounds
            ex, ey = mesh.extent
            lx = ((pts[idx, 0] - mx0) % ex + mx0 - blk.x0[sl]) / blk.dx[sl] * 2.0 - 1.0
            ly = ((pts[idx, 1] - my0) % ey + my0 - blk.y0[sl]) / blk.dy[sl] * 2.0 - 1.0
            Lx = bs.lagrange_matrix(b.nodes, lx)
            Ly = bs.lagrange_matrix(b.nodes, ly)
            out[idx] = np.einsum("pi,pj,pijm->pm", Lx, Ly, state.U[ib][sl])
    return out


def solution_to_vtk(state: SolutionState, path) -> None:
    """Legacy-ASCII VTK dump with per-cell averaged fields.

    Writes every conserved component plus pressure for Euler runs; cell
    ordering matches the canonical element ordering.
    """
    mesh = state.mesh
    elems = state.disc.elements
    means = cell_means(state)
    names = ["u"] if state.law.kind == "advection" else ["rho", "mx", "my", "energy"]
    fields = {name: means[:, k] for k, name in enumerate(names)}
    if state.law.kind == "euler":
        fields["pressure"] = eq.pressure(state.law, means)
    lines = [
        "# vtk DataFile Version 3.0",
        f"dgamr solution t={state.time}",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {4 * len(elems)} double",
    ]
    for e in elems:
        lines.append(f"{e.x0} {e.y0} 0.0")
        lines.append(f"{e.x0 + e.dx} {e.y0} 0.0")
        lines.append(f"{e.x0 + e.dx} {e.y0 + e.dy} 0.0")
        lines.append(f"{e.x0} {e.y0 + e.dy} 0.0")
    lines.append(f"CELLS {len(elems)} {5 * len(elems)}")
    for k in range(len(elems)):
        b = 4 * k
        lines.append(f"4 {b} {b + 1} {b + 2} {b + 3}")
    lines.append(f"CELL_TYPES {len(elems)}")
    lines.extend(["9"] * len(elems))
    lines.append(f"CELL_DATA {len(elems)}")
    for name, vals in fields.items():
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines.extend(repr(float(v)) for v in vals)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
