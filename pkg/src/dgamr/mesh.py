"""Periodic Cartesian agent mesh with one-level h/p refinement state.

Agents live on an nx-by-ny grid of congruent quads (agent id = iy*nx + ix).
In h mode a `fine` agent owns four congruent children in fixed z order
(SW, SE, NW, NE); in p mode every agent owns one element whose order is the
base order (`coarse`) or base order + 1 (`fine`). Meshes are immutable;
refinement changes produce a new mesh.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

COARSE = 0
FINE = 1

H_REFINE = "h"
P_REFINE = "p"

# Child offsets within a split agent, z order: SW, SE, NW, NE.
CHILD_OFFSETS = ((0, 0), (1, 0), (0, 1), (1, 1))


@dataclass(frozen=True)
class Element:
    """One DG element: owning agent, child slot (-1 if whole agent), order
    and physical bounding box."""

    agent: int
    child: int
    order: int
    x0: float
    y0: float
    dx: float
    dy: float

    @property
    def centroid(self) -> tuple[float, float]:
        return (self.x0 + 0.5 * self.dx, self.y0 + 0.5 * self.dy)

    @property
    def area(self) -> float:
        return self.dx * self.dy


@dataclass(frozen=True)
class Mesh:
    nx: int
    ny: int
    bounds: tuple[tuple[float, float], tuple[float, float]]  # ((xmin,xmax),(ymin,ymax))
    mode: str
    base_order: int
    flags: np.ndarray = field(compare=False)

    def __post_init__(self):
        self.flags.setflags(write=False)

    @property
    def n_agents(self) -> int:
        return self.nx * self.ny

    @property
    def extent(self) -> tuple[float, float]:
        (x0, x1), (y0, y1) = self.bounds
        return (x1 - x0, y1 - y0)

    @property
    def spacing(self) -> tuple[float, float]:
        ex, ey = self.extent
        return (ex / self.nx, ey / self.ny)

    def agent_xy(self, i: int) -> tuple[int, int]:
        return (i % self.nx, i // self.nx)

    def agent_id(self, ix: int, iy: int) -> int:
        return (iy % self.ny) * self.nx + (ix % self.nx)

    def agent_centroids(self) -> np.ndarray:
        dx, dy = self.spacing
        (x0, _), (y0, _) = self.bounds
        ids = np.arange(self.n_agents)
        return np.column_stack(
            (x0 + (ids % self.nx + 0.5) * dx, y0 + (ids // self.nx + 0.5) * dy)
        )

    def element_order(self, agent: int) -> int:
        if self.mode == P_REFINE and self.flags[agent] == FINE:
            return self.base_order + 1
        return self.base_order

    def elements(self) -> list[Element]:
        """Element table in canonical order: agents row-major, children z order."""
        dx, dy = self.spacing
        (x0, _), (y0, _) = self.bounds
        out: list[Element] = []
        for a in range(self.n_agents):
            ix, iy = self.agent_xy(a)
            ax, ay = x0 + ix * dx, y0 + iy * dy
            if self.mode == H_REFINE and self.flags[a] == FINE:
                hx, hy = dx / 2.0, dy / 2.0
                for c, (cx, cy) in enumerate(CHILD_OFFSETS):
                    out.append(
                        Element(a, c, self.base_order, ax + cx * hx, ay + cy * hy, hx, hy)
                    )
            else:
                out.append(Element(a, -1, self.element_order(a), ax, ay, dx, dy))
        return out


def build_cartesian_mesh(nx, ny, bounds, mode=P_REFINE, base_order=2) -> Mesh:
    """All-coarse periodic Cartesian agent mesh.

    `bounds` is ((xmin, xmax), (ymin, ymax)); both counts must be >= 1 and
    the box non-degenerate.
    """
    nx, ny = int(nx), int(ny)
    if nx < 1 or ny < 1:
        raise ValueError("agent counts must be >= 1")
    (x0, x1), (y0, y1) = bounds
    if not (x1 > x0 and y1 > y0):
        raise ValueError("degenerate domain bounds")
    if mode not in (H_REFINE, P_REFINE):
        raise ValueError(f"unknown refinement mode: {mode}")
    if base_order < 1:
        raise ValueError("base_order must be >= 1")
    flags = np.zeros(nx * ny, dtype=np.uint8)
    return Mesh(nx, ny, ((float(x0), float(x1)), (float(y0), float(y1))), mode, base_order, flags)


def apply_actions(mesh: Mesh, actions) -> Mesh:
    """Set every agent's refinement flag to its action (absolute semantics)."""
    actions = np.asarray(actions)
    if actions.shape != (mesh.n_agents,):
        raise ValueError(
            f"actions length {actions.shape} does not match agent count {mesh.n_agents}"
        )
    if not np.all((actions == COARSE) | (actions == FINE)):
        raise ValueError("actions must be 0 (coarse) or 1 (fine)")
    return replace(mesh, flags=actions.astype(np.uint8).copy())


def displacement_vector(mesh: Mesh, i: int, j: int) -> np.ndarray:
    """Minimal-image displacement r_ij = x_i - x_j between agent centroids."""
    c = mesh.agent_centroids()
    ex, ey = mesh.extent
    d = c[i] - c[j]
    L = np.array([ex, ey])
    return (d + L / 2.0) % L - L / 2.0


def observation_window(mesh: Mesh, i: int, n_x: int, n_y: int) -> np.ndarray:
    """Agent ids of the (2n_x+1) x (2n_y+1) window centered on agent i.

    Ordering is row-major over the (x offset, y offset) grid: index
    (a, b) -> offset (a - n_x, b - n_y), flattened with the y offset fastest.
    The center entry is agent i; wrap is applied per axis and may revisit
    agents when the window exceeds the mesh.
    """
    ix, iy = mesh.agent_xy(i)
    out = np.empty((2 * n_x + 1) * (2 * n_y + 1), dtype=np.int64)
    k = 0
    for dx in range(-n_x, n_x + 1):
        for dy in range(-n_y, n_y + 1):
            out[k] = mesh.agent_id(ix + dx, iy + dy)
            k += 1
    return out


def window_center_index(n_x: int, n_y: int) -> int:
    return n_x * (2 * n_y + 1) + n_y


def dof_count(mesh: Mesh, components: int) -> int:
    """Total degrees of freedom: sum over elements of (order+1)^2 * m."""
    return sum((e.order + 1) ** 2 * components for e in mesh.elements())


def mesh_to_vtk(mesh: Mesh, path) -> None:
    """Legacy-ASCII VTK unstructured grid of the element quads.

    Cells follow the canonical element ordering and carry the per-cell
    refinement flag of the owning agent.
    """
    elems = mesh.elements()
    lines = [
        "# vtk DataFile Version 3.0",
        "dgamr mesh",
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
    lines.append("SCALARS refinement_level int 1")
    lines.append("LOOKUP_TABLE default")
    for e in elems:
        lines.append(str(int(mesh.flags[e.agent])))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
