"""Scaled divergence-free matrix-valued Stokes kernel in two dimensions.

The (d+1) x (d+1) kernel is block diagonal: a velocity block
Psi = (-lap I + grad grad^T) psi_vel whose columns are solenoidal fields, and
a scalar pressure block psi_pre.  In 2-D the velocity block reads

    Psi_11 = -d22 psi,   Psi_22 = -d11 psi,   Psi_12 = Psi_21 = d12 psi.

Collocation functionals are either the momentum operator
(L v)_i = -nu lap v_i + d_i v_3 at an interior point or velocity evaluation
at a boundary point.  Applying a functional pair to the kernel (one per
argument) lands on a fixed catalogue of radial derivative combinations:
second derivatives of Psi and psi_pre, plus one and two Laplacians of Psi.
Those are generated mechanically from the term algebra in `radial` instead
of hand-derived entry formulas, and are checked against finite differences
in the tests.

Scaling: psi_delta(x) = delta^-d psi(||x||/delta), so an order-m derivative
evaluates as delta^-(d+m) times the unit-scale derivative at x/delta.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .radial import (
    RadialTermEvaluator,
    Terms,
    combine,
    diff_x,
    diff_y,
    laplacian,
    terms_from_profile,
)
from .wendland import WendlandPolynomial

__all__ = [
    "PDE",
    "DIRICHLET",
    "CollocationFunctional",
    "StokesKernelConfig",
    "pde_functional",
    "dirichlet_functional",
    "gram_entry",
    "velocity_kernel_entry",
    "eval_basis_column",
    "eval_basis_column_derivatives",
    "kernel_block",
]

DIM = 2

PDE = "pde"
DIRICHLET = "dirichlet"

# row kinds for evaluation functionals applied to the first kernel argument;
# "pde" and "velocity" double as the collocation rows
ROW_KINDS = ("pde", "velocity", "pressure", "pressure_grad", "divergence")


@dataclass(frozen=True)
class CollocationFunctional:
    """One row/column label of the symmetric system.

    kind "pde": the momentum operator applied at an interior point;
    kind "dirichlet": velocity evaluation at a boundary point.
    ``component`` indexes the velocity component (1 or 2).
    """

    kind: str
    component: int
    point: tuple[float, float]

    def __post_init__(self):
        if self.kind not in (PDE, DIRICHLET):
            raise ValueError(f"unknown functional kind {self.kind!r}")
        if self.component not in (1, 2):
            raise ValueError("component must be 1 or 2")
        object.__setattr__(
            self, "point", (float(self.point[0]), float(self.point[1]))
        )


def pde_functional(component: int, point) -> CollocationFunctional:
    return CollocationFunctional(PDE, component, tuple(point))


def dirichlet_functional(component: int, point) -> CollocationFunctional:
    return CollocationFunctional(DIRICHLET, component, tuple(point))


@dataclass(frozen=True)
class StokesKernelConfig:
    """Kernel data for one level: the two radial profiles, viscosity, scale.

    ``psi_vel`` feeds the velocity block, ``psi_pre`` the pressure block; the
    reproduction experiment uses the same C^8 function for both.  Immutable
    and safe to share across threads; the compiled derivative tables live in
    module-level caches keyed by the coefficient tuples.
    """

    psi_vel: WendlandPolynomial
    psi_pre: WendlandPolynomial
    nu: float = 1.0
    delta: float = 1.0

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not self.nu > 0:
            raise ValueError("nu must be positive")

    def rescaled(self, delta: float) -> "StokesKernelConfig":
        return StokesKernelConfig(self.psi_vel, self.psi_pre, self.nu, delta)


# --- compiled derivative tables -------------------------------------------

def _velocity_terms(coeffs: tuple, i: int, j: int) -> Terms:
    """Term dict of Psi_ij for the unit-scale profile."""
    profile = terms_from_profile(coeffs)
    if i == j:
        other = 3 - i
        t = profile
        for _ in range(2):
            t = diff_x(t) if other == 1 else diff_y(t)
        return combine((-1, t))
    return diff_y(diff_x(profile))


@lru_cache(maxsize=None)
def _vel_evaluator(coeffs: tuple, i: int, j: int, laps: int) -> RadialTermEvaluator:
    t = _velocity_terms(coeffs, i, j)
    for _ in range(laps):
        t = laplacian(t)
    return RadialTermEvaluator(t)


@lru_cache(maxsize=None)
def _vel_div_evaluator(coeffs: tuple, j: int, laps: int) -> RadialTermEvaluator:
    # divergence of column j of Psi: cancels to the empty term dict exactly
    t = combine(
        (1, diff_x(_velocity_terms(coeffs, 1, j))),
        (1, diff_y(_velocity_terms(coeffs, 2, j))),
    )
    for _ in range(laps):
        t = laplacian(t)
    return RadialTermEvaluator(t)


@lru_cache(maxsize=None)
def _pre_evaluator(coeffs: tuple, nx: int, ny: int) -> RadialTermEvaluator:
    t = terms_from_profile(coeffs)
    for _ in range(nx):
        t = diff_x(t)
    for _ in range(ny):
        t = diff_y(t)
    return RadialTermEvaluator(t)


def _pre_grad(coeffs, i):
    return _pre_evaluator(coeffs, 1 if i == 1 else 0, 1 if i == 2 else 0)


def _pre_hess(coeffs, i, j):
    nx = (i == 1) + (j == 1)
    return _pre_evaluator(coeffs, nx, 2 - nx)


def _entry_parts(cfg: StokesKernelConfig, row: tuple, col: tuple):
    """(factor, evaluator, derivative order) triples for a row/column pair.

    ``row`` is (kind, component) with kind from ROW_KINDS, ``col`` is
    (kind, component) with kind "pde" or "dirichlet".  The y-side functional
    is folded into the signs: odd-order derivatives acting on the second
    argument flip sign, which is how the -d_j psi_pre pressure columns and
    the nu^2 momentum-momentum entries below arise.
    """
    vel, pre = cfg.psi_vel.coeffs, cfg.psi_pre.coeffs
    nu = cfg.nu
    rk, ri = row
    ck, cj = col
    if ck == PDE:
        if rk == "velocity":
            return ((-nu, _vel_evaluator(vel, ri, cj, 1), 4),)
        if rk == "pde":
            return (
                (nu * nu, _vel_evaluator(vel, ri, cj, 2), 6),
                (-1.0, _pre_hess(pre, ri, cj), 2),
            )
        if rk == "pressure":
            return ((-1.0, _pre_grad(pre, cj), 1),)
        if rk == "pressure_grad":
            return ((-1.0, _pre_hess(pre, ri, cj), 2),)
        if rk == "divergence":
            return ((-nu, _vel_div_evaluator(vel, cj, 1), 5),)
    elif ck == DIRICHLET:
        if rk == "velocity":
            return ((1.0, _vel_evaluator(vel, ri, cj, 0), 2),)
        if rk == "pde":
            return ((-nu, _vel_evaluator(vel, ri, cj, 1), 4),)
        if rk in ("pressure", "pressure_grad"):
            return ()  # boundary columns have no pressure component
        if rk == "divergence":
            return ((1.0, _vel_div_evaluator(vel, cj, 0), 3),)
    raise ValueError(f"unsupported functional pair {row} x {col}")


def kernel_block(cfg: StokesKernelConfig, row: tuple, col: tuple, xa, xb) -> np.ndarray:
    """Pairwise entries (row functional at xa[p]) x (col functional at xb[q]).

    xa has shape (P, 2), xb has shape (Q, 2); returns (P, Q).  Entries with
    ||xa - xb|| >= delta vanish by compact support (the evaluators cut off
    at unit radius in scaled coordinates).
    """
    xa = np.atleast_2d(np.asarray(xa, dtype=float))
    xb = np.atleast_2d(np.asarray(xb, dtype=float))
    inv = 1.0 / cfg.delta
    dx = (xa[:, 0][:, None] - xb[None, :, 0]) * inv
    dy = (xa[:, 1][:, None] - xb[None, :, 1]) * inv
    out = np.zeros(dx.shape)
    for factor, evaluator, order in _entry_parts(cfg, row, col):
        out += (factor * inv ** (DIM + order)) * evaluator(dx, dy)
    return out


def _row_for(functional: CollocationFunctional) -> tuple:
    return (
        "pde" if functional.kind == PDE else "velocity",
        functional.component,
    )


def gram_entry(
    cfg: StokesKernelConfig,
    a: CollocationFunctional,
    b: CollocationFunctional,
) -> float:
    """Apply functional ``a`` in the first kernel argument and ``b`` in the
    second; the result is symmetric in (a, b)."""
    block = kernel_block(
        cfg, _row_for(a), (b.kind, b.component), [a.point], [b.point]
    )
    return float(block[0, 0])


def velocity_kernel_entry(cfg: StokesKernelConfig, i: int, j: int, diff) -> float:
    """Entry (i, j) of the scaled velocity block Psi_delta at displacement diff."""
    if i not in (1, 2) or j not in (1, 2):
        raise ValueError("velocity block indices must be 1 or 2")
    diff = np.asarray(diff, dtype=float)
    inv = 1.0 / cfg.delta
    value = _vel_evaluator(cfg.psi_vel.coeffs, i, j, 0)(diff[0] * inv, diff[1] * inv)
    return float(value) * inv ** (DIM + 2)


def _column_rows(request: str) -> list[tuple]:
    if request == "value":
        return [("velocity", 1), ("velocity", 2), ("pressure", 0)]
    if request == "l-image":
        return [("pde", 1), ("pde", 2)]
    if request == "divergence":
        return [("divergence", 0)]
    if request == "pressure-gradient":
        return [("pressure_grad", 1), ("pressure_grad", 2)]
    raise ValueError(f"unknown request {request!r}")


def eval_basis_column(cfg: StokesKernelConfig, src: CollocationFunctional, x):
    """(u1, u2, p) value at x of the basis function generated by ``src``."""
    col = (src.kind, src.component)
    return tuple(
        float(kernel_block(cfg, row, col, [tuple(x)], [src.point])[0, 0])
        for row in _column_rows("value")
    )


def eval_basis_column_derivatives(
    cfg: StokesKernelConfig, src: CollocationFunctional, x, request: str
):
    """Analytic derived fields of one basis column at x.

    request "l-image": the momentum operator applied to the column's
    velocity/pressure pair (two components); "divergence": the scalar
    velocity divergence (identically zero by construction -- the term
    algebra cancels exactly); "pressure-gradient": grad of the pressure
    component (two components, zero for boundary columns).
    """
    col = (src.kind, src.component)
    values = tuple(
        float(kernel_block(cfg, row, col, [tuple(x)], [src.point])[0, 0])
        for row in _column_rows(request)
    )
    return values[0] if len(values) == 1 else values
