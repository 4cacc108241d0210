"""Built-in test problems, projections, and error measurement.

The manufactured cases hardcode the source term xi obtained by substituting
the exact solution and velocity into d_t c + div(u c) = xi; the derivations
are recorded next to each closure.  All closures take (t, x) with x of
shape (..., 2) and broadcast over the leading axes; initial data takes x
only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .basis import eval_basis_2d_table, quad_rule_triangle
from .mesh import Mesh, elem_quad_points

__all__ = [
    "ProblemDefinition",
    "builtin_testcase",
    "project_initial",
    "eval_solution",
    "compute_l2_error",
    "compute_eoc",
    "cells_for_level",
    "TESTCASE_NAMES",
]

TESTCASE_NAMES = ("steady", "unsteady_ode", "unsteady_pde", "solid_body")


def cells_for_level(level: int) -> int:
    """Mesh size h_j = 1 / (3 * 2^j) means 3 * 2^j cells per side."""
    if level < 0:
        raise ValueError(f"refinement level must be >= 0, got {level}")
    return 3 * 2**level


@dataclass
class ProblemDefinition:
    """A complete problem setup: PDE data, exact solution (if any), and
    the discretization defaults the originating study used for it."""

    name: str
    u1: Callable
    u2: Callable
    c0: Callable
    c_d: Callable
    xi: Callable
    exact: Optional[Callable] = None
    alpha: Optional[float] = None           # None: max |u . nu| at t = 0
    t_end: float = 0.0
    steady: bool = False
    steady_velocity: bool = True
    default_cells: Optional[int] = None
    dt_rule: Optional[Callable] = field(default=None, repr=False)

    def default_dt(self, level: int, p: int) -> Optional[float]:
        if self.dt_rule is None:
            return None
        return self.dt_rule(level, p)


# --------------------------------------------------------------------------
# Manufactured solutions

def _cos_part(x):
    return np.cos(7.0 * x[..., 0]) * np.cos(7.0 * x[..., 1])


def _cos_part_dx(x):
    return -7.0 * np.sin(7.0 * x[..., 0]) * np.cos(7.0 * x[..., 1])


def _cos_part_dy(x):
    return -7.0 * np.cos(7.0 * x[..., 0]) * np.sin(7.0 * x[..., 1])


def _exp_velocity():
    """Velocity u = (exp((x1+x2)/2), exp((x1-x2)/2)) and its divergence.

    d_1 u1 = u1 / 2 and d_2 u2 = -u2 / 2, so div u = (u1 - u2) / 2.
    """

    def u1(t, x):
        return np.exp(0.5 * (x[..., 0] + x[..., 1]))

    def u2(t, x):
        return np.exp(0.5 * (x[..., 0] - x[..., 1]))

    def div_u(x):
        return 0.5 * (u1(0.0, x) - u2(0.0, x))

    return u1, u2, div_u


def _steady_problem() -> ProblemDefinition:
    """Stationary transport of c = cos(7 x1) cos(7 x2).

    xi = u . grad c + c div u with the exponential velocity field.  The
    flux penalty 1.05 is the study default for this velocity; pass an
    explicit alpha to override it.
    """
    u1, u2, div_u = _exp_velocity()

    def exact(t, x):
        return _cos_part(x)

    def xi(t, x):
        return (
            u1(t, x) * _cos_part_dx(x)
            + u2(t, x) * _cos_part_dy(x)
            + _cos_part(x) * div_u(x)
        )

    return ProblemDefinition(
        name="steady",
        u1=u1, u2=u2,
        c0=lambda x: _cos_part(x),
        c_d=exact,
        xi=xi,
        exact=exact,
        alpha=1.05,
        steady=True,
        steady_velocity=True,
    )


def _unsteady_ode_problem() -> ProblemDefinition:
    """Spatially constant decay c = exp(-t) with u = 0: a pure time
    integration test.  xi = d_t c = -exp(-t).  The automatic flux penalty
    would be zero for a vanishing velocity, so alpha is set explicitly."""

    def exact(t, x):
        return np.exp(-t) * np.ones(x.shape[:-1])

    def zero(t, x):
        return np.zeros(x.shape[:-1])

    return ProblemDefinition(
        name="unsteady_ode",
        u1=zero, u2=zero,
        c0=lambda x: np.ones(x.shape[:-1]),
        c_d=exact,
        xi=lambda t, x: -np.exp(-t) * np.ones(x.shape[:-1]),
        exact=exact,
        alpha=1.0,
        t_end=2.0,
        steady_velocity=True,
        dt_rule=lambda level, p: 1.0 / (5.0 * 2.0**level),
    )


def _unsteady_pde_problem() -> ProblemDefinition:
    """Combined space-time test: c = cos(7 x1) cos(7 x2) + exp(-t) with
    the exponential velocity field.

    xi = d_t c + u . grad c + c div u
       = -exp(-t) + u . grad(cos cos) + (cos cos + exp(-t)) div u.

    Shares the steady case's velocity and flux penalty.
    """
    u1, u2, div_u = _exp_velocity()

    def exact(t, x):
        return _cos_part(x) + np.exp(-t)

    def xi(t, x):
        return (
            -np.exp(-t) * np.ones(x.shape[:-1])
            + u1(t, x) * _cos_part_dx(x)
            + u2(t, x) * _cos_part_dy(x)
            + exact(t, x) * div_u(x)
        )

    return ProblemDefinition(
        name="unsteady_pde",
        u1=u1, u2=u2,
        c0=lambda x: _cos_part(x) + 1.0,
        c_d=exact,
        xi=xi,
        exact=exact,
        alpha=1.05,
        t_end=2.0,
        steady_velocity=True,
        dt_rule=lambda level, p: 1.0 / (5.0 * 2.0 ** (level + 2 if p >= 4 else level)),
    )


def _rotation_scene(x):
    """Slotted cylinder, sharp cone, and smooth hump, each of radius 0.15."""
    x1 = x[..., 0]
    x2 = x[..., 1]
    r_sq = 0.0225
    out = np.zeros(np.broadcast(x1, x2).shape)

    in_cyl = (x1 - 0.5) ** 2 + (x2 - 0.75) ** 2 <= r_sq
    slot = (x1 > 0.475) & (x1 < 0.525) & (x2 < 0.85)
    out = np.where(in_cyl & ~slot, 1.0, out)

    d_cone = (x1 - 0.5) ** 2 + (x2 - 0.25) ** 2
    g_cone = np.sqrt(d_cone) / 0.15
    out = np.where(d_cone <= r_sq, 1.0 - g_cone, out)

    d_hump = (x1 - 0.25) ** 2 + (x2 - 0.5) ** 2
    g_hump = np.sqrt(d_hump) / 0.15
    out = np.where(d_hump <= r_sq, 0.25 * (1.0 + np.cos(np.pi * g_hump)), out)
    return out


def _solid_body_problem() -> ProblemDefinition:
    """LeVeque's solid body rotation: one full counterclockwise turn of
    the three-body scene under u = (0.5 - x2, x1 - 0.5) over (0, 2 pi).

    After the full turn the solution coincides with the initial data, so
    the scene doubles as the exact solution at t_end for error reporting.
    """
    two_pi = 2.0 * np.pi
    return ProblemDefinition(
        name="solid_body",
        u1=lambda t, x: 0.5 - x[..., 1],
        u2=lambda t, x: x[..., 0] - 0.5,
        c0=_rotation_scene,
        c_d=lambda t, x: np.zeros(x.shape[:-1]),
        xi=lambda t, x: np.zeros(x.shape[:-1]),
        exact=lambda t, x: _rotation_scene(x),
        t_end=two_pi,
        steady_velocity=True,
        default_cells=64,
        dt_rule=lambda level, p: two_pi / 320.0,
    )


_BUILTINS = {
    "steady": _steady_problem,
    "unsteady_ode": _unsteady_ode_problem,
    "unsteady_pde": _unsteady_pde_problem,
    "solid_body": _solid_body_problem,
}


def builtin_testcase(name: str) -> ProblemDefinition:
    """One of the built-in problems: steady, unsteady_ode, unsteady_pde,
    or solid_body."""
    try:
        make = _BUILTINS[name]
    except KeyError:
        raise ValueError(
            f"unknown test case {name!r}; available: {', '.join(TESTCASE_NAMES)}"
        ) from None
    return make()


# --------------------------------------------------------------------------
# Projection and error measurement

def project_initial(mesh: Mesh, basis, c0) -> np.ndarray:
    """Element-wise L2 projection of initial data onto the modal basis.

    With an orthonormal basis the coefficients are plain quadrature
    moments: C[k, i] = sum_r w_r c0(F_k(q_r)) phi_i(q_r); the 2 |T_k|
    factors of mass matrix and integral cancel.
    """
    phys = elem_quad_points(mesh, basis.quad2d.points)
    values = np.broadcast_to(np.asarray(c0(phys), dtype=float), phys.shape[:2])
    coeffs = np.einsum("r,kr,ir->ki", basis.quad2d.weights, values, basis.phi2d)
    return coeffs.ravel()


def eval_solution(mesh: Mesh, p: int, coeffs: np.ndarray, points) -> np.ndarray:
    """Evaluate the discrete solution at reference points on every element;
    returns shape (K, R)."""
    phi, _ = eval_basis_2d_table(p, np.asarray(points, dtype=float))
    return coeffs.reshape(mesh.num_elements, -1) @ phi


def compute_l2_error(mesh: Mesh, basis, coeffs: np.ndarray, exact, t: float,
                     quad_order: int | None = None) -> float:
    """L2(Omega) distance between the discrete solution and a reference
    function at time t, integrated at order 2p + 3 by default so the
    measurement is finer than the discretization's own quadrature."""
    if quad_order is None:
        quad_order = 2 * basis.p + 3
    rule = quad_rule_triangle(quad_order)
    num = eval_solution(mesh, basis.p, coeffs, rule.points)
    phys = elem_quad_points(mesh, rule.points)
    ref = np.broadcast_to(np.asarray(exact(t, phys), dtype=float), phys.shape[:2])
    sq = np.einsum("k,r,kr->", 2.0 * mesh.area, rule.weights, (num - ref) ** 2)
    return float(np.sqrt(sq))


def compute_eoc(errors, mesh_sizes) -> np.ndarray:
    """Experimental orders of convergence of consecutive refinements:
    eoc_j = ln(e_{j-1} / e_j) / ln(h_{j-1} / h_j)."""
    errors = np.asarray(errors, dtype=float)
    sizes = np.asarray(mesh_sizes, dtype=float)
    if errors.shape != sizes.shape or errors.ndim != 1:
        raise ValueError("errors and mesh sizes must be 1D of equal length")
    if errors.size < 2:
        raise ValueError("need at least two refinement levels for an EOC")
    if np.any(errors <= 0.0) or np.any(sizes <= 0.0):
        raise ValueError("errors and mesh sizes must be positive")
    return np.log(errors[:-1] / errors[1:]) / np.log(sizes[:-1] / sizes[1:])
