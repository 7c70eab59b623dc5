"""Conservation-law definitions: fluxes, flux Jacobians, and wavespeeds.

Supports the 2D linear advection equation (m = 1) and the 2D compressible
Euler equations (m = 4, conserved ordering rho, mx, my, E). All functions
are vectorized over leading axes; the component axis is always last.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class AdmissibilityError(ValueError):
    """Raised when a state violates physical admissibility (rho <= 0)."""


@dataclass(frozen=True)
class ConservationLaw:
    """Hyperbolic conservation law u_t + div F(u) = 0 on a 2D domain.

    kind "advection": scalar transport with constant velocity `velocity`.
    kind "euler": compressible Euler with specific heat ratio `gamma`.
    """

    kind: str
    velocity: tuple[float, float] = (0.0, 0.0)
    gamma: float = 1.4

    def __post_init__(self):
        if self.kind not in ("advection", "euler"):
            raise ValueError(f"unknown law kind: {self.kind}")
        if self.kind == "euler" and not self.gamma > 1.0:
            raise ValueError("gamma must exceed 1")
        if self.kind == "advection" and not np.all(np.isfinite(self.velocity)):
            raise ValueError("advection velocity must be finite")

    @property
    def m(self) -> int:
        return 1 if self.kind == "advection" else 4


def advection(cx: float, cy: float) -> ConservationLaw:
    return ConservationLaw("advection", velocity=(float(cx), float(cy)))


def euler(gamma: float = 1.4) -> ConservationLaw:
    return ConservationLaw("euler", gamma=gamma)


def _check_density(rho: np.ndarray) -> None:
    if np.any(rho <= 0.0) or not np.all(np.isfinite(rho)):
        raise AdmissibilityError("non-positive density encountered")


def pressure(law: ConservationLaw, u: np.ndarray) -> np.ndarray:
    """Pressure P = (gamma - 1)(E - |m|^2 / (2 rho)) for Euler states."""
    u = np.asarray(u, dtype=float)
    rho = u[..., 0]
    _check_density(rho)
    ke = 0.5 * (u[..., 1] ** 2 + u[..., 2] ** 2) / rho
    return (law.gamma - 1.0) * (u[..., 3] - ke)


def conserved_to_primitive(law: ConservationLaw, u: np.ndarray):
    """(rho, v, P) from a conserved Euler state.

    Returns a tuple (rho, v, P, admissible) where `admissible` flags P > 0;
    non-positive pressure is diagnostic only, non-positive density raises.
    """
    u = np.asarray(u, dtype=float)
    rho = u[..., 0]
    _check_density(rho)
    v = u[..., 1:3] / rho[..., None]
    P = pressure(law, u)
    return rho, v, P, np.all(P > 0.0)


def primitive_to_conserved(law: ConservationLaw, rho, vx, vy, P) -> np.ndarray:
    """Conserved state from primitives; E = P/(gamma-1) + rho |v|^2 / 2."""
    rho = np.asarray(rho, dtype=float)
    e = np.asarray(P, dtype=float) / (law.gamma - 1.0) + 0.5 * rho * (
        np.asarray(vx) ** 2 + np.asarray(vy) ** 2
    )
    return np.stack(
        np.broadcast_arrays(rho, rho * vx, rho * vy, e), axis=-1
    ).astype(float)


def flux(law: ConservationLaw, u: np.ndarray) -> np.ndarray:
    """Analytic flux F(u), shape (..., m, 2)."""
    u = np.asarray(u, dtype=float)
    if law.kind == "advection":
        cx, cy = law.velocity
        out = np.empty(u.shape + (2,))
        out[..., 0] = u * cx
        out[..., 1] = u * cy
        return out
    rho = u[..., 0]
    _check_density(rho)
    mx, my, E = u[..., 1], u[..., 2], u[..., 3]
    P = pressure(law, u)
    vx, vy = mx / rho, my / rho
    out = np.empty(u.shape[:-1] + (4, 2))
    out[..., 0, 0] = mx
    out[..., 0, 1] = my
    out[..., 1, 0] = mx * vx + P
    out[..., 1, 1] = mx * vy
    out[..., 2, 0] = my * vx
    out[..., 2, 1] = my * vy + P
    out[..., 3, 0] = (E + P) * vx
    out[..., 3, 1] = (E + P) * vy
    return out


def flux_jacobian(law: ConservationLaw, u: np.ndarray) -> np.ndarray:
    """Flux Jacobian A = dF/du, shape (..., m, m, 2).

    For advection A is the constant velocity; for Euler the closed form uses
    dP/du = (gamma-1) [|m|^2/(2 rho^2), -m/rho, 1].
    """
    u = np.asarray(u, dtype=float)
    if law.kind == "advection":
        out = np.zeros(u.shape[:-1] + (1, 1, 2))
        out[..., 0, 0, 0] = law.velocity[0]
        out[..., 0, 0, 1] = law.velocity[1]
        return out
    g = law.gamma
    rho = u[..., 0]
    _check_density(rho)
    m = u[..., 1:3]
    E = u[..., 3]
    P = pressure(law, u)
    msq = m[..., 0] ** 2 + m[..., 1] ** 2
    A = np.zeros(u.shape[:-1] + (4, 4, 2))
    for i in range(2):  # spatial direction
        d = np.zeros(2)
        d[i] = 1.0
        mi = m[..., i]
        # mass row
        A[..., 0, 1 + i, i] = 1.0
        # momentum rows (j indexes the momentum component)
        for j in range(2):
            A[..., 1 + j, 0, i] = -mi * m[..., j] / rho**2 + 0.5 * msq / rho**2 * d[j]
            for k in range(2):
                A[..., 1 + j, 1 + k, i] = (
                    (mi * (j == k) + m[..., j] * d[k]) / rho
                    - (g - 1.0) / rho * d[j] * m[..., k]
                )
            A[..., 1 + j, 3, i] = (g - 1.0) * d[j]
        # energy row
        A[..., 3, 0, i] = -mi / rho**2 * (E + P) + (g - 1.0) * mi * msq / (2.0 * rho**3)
        for k in range(2):
            A[..., 3, 1 + k, i] = (E + P) / rho * d[k] - (g - 1.0) * mi * m[..., k] / rho**2
        A[..., 3, 3, i] = g * mi / rho
    return A


def sound_speed(law: ConservationLaw, u: np.ndarray) -> np.ndarray:
    """a = sqrt(gamma P / rho); negative pressure is floored at zero so the
    wavespeed bound stays finite while positivity diagnostics flag it."""
    rho = np.asarray(u, dtype=float)[..., 0]
    _check_density(rho)
    P = pressure(law, u)
    return np.sqrt(law.gamma * np.maximum(P, 0.0) / rho)


def max_wavespeed(law: ConservationLaw, u: np.ndarray) -> np.ndarray:
    """Direction-free pointwise wavespeed bound used by the CFL estimate."""
    u = np.asarray(u, dtype=float)
    if law.kind == "advection":
        c = np.hypot(*law.velocity)
        return np.full(u.shape[:-1], c)
    rho = u[..., 0]
    _check_density(rho)
    vmag = np.hypot(u[..., 1], u[..., 2]) / rho
    return vmag + sound_speed(law, u)


def interface_wavespeed(law: ConservationLaw, u_minus, u_plus, n) -> np.ndarray:
    """Maximum interface wavespeed along unit normal n.

    Advection: |c . n|. Euler: the Davis two-candidate estimate
    max(|v- . n| + a-, |v+ . n| + a+).
    """
    n = np.asarray(n, dtype=float)
    if law.kind == "advection":
        lam = abs(law.velocity[0] * n[..., 0] + law.velocity[1] * n[..., 1])
        shape = np.broadcast_shapes(np.asarray(u_minus).shape[:-1], n.shape[:-1])
        return np.broadcast_to(lam, shape).copy()

    def side(u):
        u = np.asarray(u, dtype=float)
        rho = u[..., 0]
        _check_density(rho)
        vn = (u[..., 1] * n[..., 0] + u[..., 2] * n[..., 1]) / rho
        return np.abs(vn) + sound_speed(law, u)

    return np.maximum(side(u_minus), side(u_plus))
