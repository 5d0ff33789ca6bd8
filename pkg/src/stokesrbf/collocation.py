"""Assembly and solution of the single-level symmetric collocation system.

Row and column functionals are ordered component-major: momentum rows for
component 1 over all interior centres, then component 2, then velocity
(Dirichlet) rows for components 1 and 2 over the boundary centres.  The
matrix is symmetric positive definite by construction; the solver is a
Cholesky factorization without pivoting, and loss of definiteness is
surfaced as an error rather than regularized away -- it is a diagnostic,
not a nuisance.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .geometry import LevelPointSet
from .stokes_kernel import (
    DIRICHLET,
    PDE,
    CollocationFunctional,
    StokesKernelConfig,
    kernel_block,
)

__all__ = [
    "NotPositiveDefinite",
    "CollocationSystem",
    "LevelSolution",
    "assemble",
    "solve",
    "evaluate",
    "evaluate_fields",
    "functionals_for",
    "write_matrix",
]

_CHUNK = 1024  # row slab size keeping assembly temporaries ~tens of MB


class NotPositiveDefinite(ArithmeticError):
    """Cholesky factorization hit a nonpositive pivot.

    ``pivot`` is the 1-based index of the failing leading minor when the
    backend reports one.
    """

    def __init__(self, message: str, pivot: int | None = None):
        super().__init__(message)
        self.pivot = pivot


def _groups(pointset: LevelPointSet):
    """Homogeneous functional groups in system order: (kind, component, points)."""
    return (
        (PDE, 1, pointset.interior),
        (PDE, 2, pointset.interior),
        (DIRICHLET, 1, pointset.boundary),
        (DIRICHLET, 2, pointset.boundary),
    )


def functionals_for(pointset: LevelPointSet) -> list[CollocationFunctional]:
    """The ordered functional list backing the matrix rows/columns."""
    out = []
    for kind, comp, pts in _groups(pointset):
        out.extend(
            CollocationFunctional(kind, comp, (x, y)) for x, y in pts
        )
    return out


@dataclass
class CollocationSystem:
    """Symmetric collocation system A alpha = rhs for one level."""

    functionals: list[CollocationFunctional]
    matrix: np.ndarray
    rhs: np.ndarray
    pointset: LevelPointSet
    kernel: StokesKernelConfig

    @property
    def size(self) -> int:
        return len(self.rhs)


@dataclass
class LevelSolution:
    """Solved coefficients for one level, evaluable through this module."""

    coefficients: np.ndarray
    pointset: LevelPointSet
    kernel: StokesKernelConfig
    solve_residual: float = 0.0


def assemble(
    pointset: LevelPointSet,
    kernel: StokesKernelConfig,
    f_data,
    g_data,
) -> CollocationSystem:
    """Build the 2M x 2M system collocating f at interior and g at boundary
    centres.

    ``f_data`` and ``g_data`` map an (n, 2) array of points to an (n, 2)
    array of component values; at levels beyond the first they are residual
    evaluators closing over the previously solved levels.
    """
    groups = _groups(pointset)
    sizes = [len(pts) for _, _, pts in groups]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    total = int(offsets[-1])
    matrix = np.empty((total, total))
    for gi, (rkind, rcomp, rpts) in enumerate(groups):
        row = ("pde" if rkind == PDE else "velocity", rcomp)
        for gj, (ckind, ccomp, cpts) in enumerate(groups):
            block = matrix[
                offsets[gi]: offsets[gi + 1], offsets[gj]: offsets[gj + 1]
            ]
            for start in range(0, len(rpts), _CHUNK):
                stop = min(start + _CHUNK, len(rpts))
                block[start:stop] = kernel_block(
                    kernel, row, (ckind, ccomp), rpts[start:stop], cpts
                )
    fvals = np.asarray(f_data(pointset.interior), dtype=float)
    gvals = np.asarray(g_data(pointset.boundary), dtype=float)
    rhs = np.concatenate([fvals[:, 0], fvals[:, 1], gvals[:, 0], gvals[:, 1]])
    return CollocationSystem(
        functionals=functionals_for(pointset),
        matrix=matrix,
        rhs=rhs,
        pointset=pointset,
        kernel=kernel,
    )


def solve(system: CollocationSystem, refine_target: float = 1e-10) -> LevelSolution:
    """Cholesky solve with a few iterative-refinement sweeps.

    Residuals are accumulated in extended precision: at the finer levels the
    right-hand side is itself a small residual while the coefficient vector
    is large, so double-precision residuals would stall above the target.
    Raises NotPositiveDefinite if the factorization fails; that typically
    means the scale is far too large for the point density.
    """
    try:
        factor = cho_factor(system.matrix, lower=True, check_finite=False)
    except LinAlgError as exc:
        match = re.search(r"(\d+)", str(exc))
        pivot = int(match.group(1)) if match else None
        raise NotPositiveDefinite(str(exc), pivot=pivot) from exc
    matrix_ld = system.matrix.astype(np.longdouble)
    rhs_ld = system.rhs.astype(np.longdouble)

    def true_residual(vec):
        return np.asarray(rhs_ld - matrix_ld @ vec.astype(np.longdouble), dtype=float)

    rhs_norm = float(np.linalg.norm(system.rhs))
    coeffs = cho_solve(factor, system.rhs, check_finite=False)
    residual = true_residual(coeffs)
    res_norm = float(np.linalg.norm(residual))
    for _ in range(4):
        if rhs_norm == 0.0 or res_norm <= refine_target * rhs_norm:
            break
        candidate = coeffs + cho_solve(factor, residual, check_finite=False)
        cand_residual = true_residual(candidate)
        cand_norm = float(np.linalg.norm(cand_residual))
        if cand_norm >= res_norm:
            break
        coeffs, residual, res_norm = candidate, cand_residual, cand_norm
    return LevelSolution(
        coefficients=coeffs,
        pointset=system.pointset,
        kernel=system.kernel,
        solve_residual=res_norm / rhs_norm if rhs_norm else res_norm,
    )


def _apply_rows(solution: LevelSolution, rows, pts) -> np.ndarray:
    """Stack of (row functional applied to the approximant) over pts.

    Returns shape (len(pts), len(rows)); the approximant is the coefficient-
    weighted sum of the basis columns of this level.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    out = np.zeros((len(pts), len(rows)))
    groups = _groups(solution.pointset)
    offsets = np.concatenate(
        [[0], np.cumsum([len(p) for _, _, p in groups])]
    )
    for start in range(0, len(pts), _CHUNK):
        stop = min(start + _CHUNK, len(pts))
        chunk = pts[start:stop]
        for ri, row in enumerate(rows):
            acc = np.zeros(stop - start)
            for gj, (ckind, ccomp, cpts) in enumerate(groups):
                alpha = solution.coefficients[offsets[gj]: offsets[gj + 1]]
                acc += kernel_block(
                    solution.kernel, row, (ckind, ccomp), chunk, cpts
                ) @ alpha
            out[start:stop, ri] = acc
    return out


def evaluate(solution: LevelSolution, x):
    """Velocity (n, 2) and pressure (n,) of the approximant at x.

    The pressure is reported as-is; it is only determined up to a constant.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    vals = _apply_rows(
        solution, [("velocity", 1), ("velocity", 2), ("pressure", 0)], x
    )
    velocity, pressure = vals[:, :2], vals[:, 2]
    if single:
        return velocity[0], float(pressure[0])
    return velocity, pressure


_FIELD_ROWS = {
    "l-image": [("pde", 1), ("pde", 2)],
    "divergence": [("divergence", 0)],
    "pressure-gradient": [("pressure_grad", 1), ("pressure_grad", 2)],
}


def evaluate_fields(solution: LevelSolution, x, request: str):
    """Analytic derived fields of the approximant: momentum-operator image,
    velocity divergence, or pressure gradient."""
    if request not in _FIELD_ROWS:
        raise ValueError(f"unknown request {request!r}")
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    vals = _apply_rows(solution, _FIELD_ROWS[request], x)
    if request == "divergence":
        vals = vals[:, 0]
    return vals[0] if single else vals


def write_matrix(matrix: np.ndarray, path) -> None:
    """Dump a matrix as row-major float64 with a 16-byte header of two
    little-endian uint64 dimensions."""
    matrix = np.ascontiguousarray(matrix, dtype=float)
    with open(path, "wb") as fh:
        fh.write(np.array(matrix.shape, dtype="<u8").tobytes())
        fh.write(matrix.astype("<f8").tobytes())
