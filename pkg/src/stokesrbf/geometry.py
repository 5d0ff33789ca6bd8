"""Level point sets on the unit square and point-set quality metrics.

Level j uses the full tensor grid of spacing 2^-(j+1) as interior centres --
perimeter gridpoints included, which is what makes the counts come out as
(2^(j+1)+1)^2 interior and 4*2^(j+1) boundary -- and the perimeter gridpoints
again as boundary centres.  Boundary centres therefore coincide in location
with some interior centres; the attached functionals differ (momentum
operator vs velocity evaluation), so the collocation system stays
nonsingular.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

__all__ = [
    "EmptyPointSet",
    "SinglePoint",
    "LevelPointSet",
    "make_level_pointset",
    "mesh_norm",
    "separation_distance",
]


class EmptyPointSet(ValueError):
    """Operation requires at least one point."""


class SinglePoint(ValueError):
    """Operation requires at least two points."""


@dataclass(frozen=True)
class LevelPointSet:
    """Centres for one level plus measured quality metrics.

    ``nominal_h`` is the grid spacing (the quantity the scale schedule is
    calibrated against); ``measured_h`` is the fill distance estimated on a
    probe grid, which for these tensor grids is sqrt(2)/2 times the spacing.
    ``separation_q`` is computed over the distinct centre locations
    (boundary centres coincide with perimeter interior centres and are
    counted once).
    """

    interior: np.ndarray
    boundary: np.ndarray
    nominal_h: float
    measured_h: float
    separation_q: float

    @property
    def n_interior(self) -> int:
        return len(self.interior)

    @property
    def n_boundary(self) -> int:
        return len(self.boundary)

    @property
    def n_functionals(self) -> int:
        return 2 * (len(self.interior) + len(self.boundary))


def mesh_norm(points, probe_density: int) -> float:
    """Fill distance sup_x min_j ||x - x_j|| estimated on a probe grid.

    Brute force over a probe_density x probe_density grid covering the unit
    square.  The estimate approaches the true supremum from below as the
    probe grid refines (more probes can only raise the maximum).
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.size == 0:
        raise EmptyPointSet("mesh norm of an empty point set")
    if probe_density < 2:
        raise ValueError("probe_density must be >= 2")
    ticks = np.linspace(0.0, 1.0, probe_density)
    gx, gy = np.meshgrid(ticks, ticks, indexing="ij")
    probes = np.column_stack([gx.ravel(), gy.ravel()])
    dist, _ = cKDTree(points).query(probes, k=1)
    return float(dist.max())


def separation_distance(points) -> float:
    """Half the minimal pairwise distance."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.size == 0:
        raise EmptyPointSet("separation distance of an empty point set")
    if len(points) < 2:
        raise SinglePoint("separation distance needs at least two points")
    dist, _ = cKDTree(points).query(points, k=2)
    return float(dist[:, 1].min()) / 2.0


def make_level_pointset(level: int, probe_density: int | None = None) -> LevelPointSet:
    """Tensor-grid centres for one level of the refinement hierarchy.

    Interior: the (2^(level+1)+1)^2 gridpoints of spacing 2^-(level+1) over
    the closed unit square.  Boundary: the 4*2^(level+1) perimeter
    gridpoints of the same grid.
    """
    if level < 1:
        raise ValueError("level must be >= 1")
    n = 2 ** (level + 1)
    spacing = 1.0 / n
    ticks = np.arange(n + 1) * spacing
    gx, gy = np.meshgrid(ticks, ticks, indexing="ij")
    interior = np.column_stack([gx.ravel(), gy.ravel()])
    on_edge = (
        (interior[:, 0] == 0.0)
        | (interior[:, 0] == 1.0)
        | (interior[:, 1] == 0.0)
        | (interior[:, 1] == 1.0)
    )
    boundary = interior[on_edge]
    if probe_density is None:
        # aligned probe grid: a multiple of the cell count per side lands
        # probes exactly on the cell centres, so measured_h is exact
        probe_density = max(8 * n, 256) + 1
    measured = mesh_norm(interior, probe_density)
    # boundary centres duplicate perimeter interior locations; separation is
    # over distinct locations
    separation = separation_distance(interior)
    return LevelPointSet(
        interior=interior,
        boundary=boundary,
        nominal_h=spacing,
        measured_h=measured,
        separation_q=separation,
    )


def export_points_csv(pointset: LevelPointSet, path) -> None:
    """Write centres as ``x,y,kind`` rows (kind: interior / boundary)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("x,y,kind\n")
        for x, y in pointset.interior:
            fh.write(f"{float(x)!r},{float(y)!r},interior\n")
        for x, y in pointset.boundary:
            fh.write(f"{float(x)!r},{float(y)!r},boundary\n")
