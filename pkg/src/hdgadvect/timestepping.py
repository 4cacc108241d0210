"""Diagonally implicit Runge-Kutta (DIRK) integration of the semidiscrete
system M_phi dC/dt + Lbar C + Mbar Lambda = B_phi under the skeleton
constraint N C + P Lambda = B_mu.

Stage i solves

    (M_phi + a_ii dt Lbar) C_i + a_ii dt Mbar Lambda_i
        = M_phi C^n + a_ii dt B_phi(t_i) + dt sum_{j<i} a_ij r_j
    N C_i + P Lambda_i = B_mu(t_i)

with the stage residual r_j = B_phi(t_j) - Lbar C_j - Mbar Lambda_j.  All
supplied tableaus are stiffly accurate (b equals the last row of A), so
the step result is the last stage.  The diagonal is constant (SDIRK), so
a single factorization serves every stage; with a steady velocity it can
be reused across steps via a caller-owned solver cache.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import SystemBlocks
from .condensation import CondensedSolver, StageSystem, condense_and_solve

__all__ = ["DirkTableau", "dirk_tableau", "dirk_step", "solve_steady"]

# Root of x^3 - 3 x^2 + 3 x / 2 - 1/6 in (1/6, 1/2); puts the third-order
# two-parameter family in its L-stable configuration.
_GAMMA3 = 0.4358665215084590


@dataclass(frozen=True)
class DirkTableau:
    """Butcher tableau of a diagonally implicit Runge-Kutta scheme."""

    order: int
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    @property
    def num_stages(self) -> int:
        return self.a.shape[0]

    @property
    def stiffly_accurate(self) -> bool:
        return bool(np.array_equal(self.a[-1], self.b))


def dirk_tableau(order: int) -> DirkTableau:
    """L-stable stiffly accurate SDIRK tableau of the requested order.

    Orders 1 (implicit Euler), 2 and 3 (Alexander's schemes) and 4 (the
    five-stage scheme of Hairer and Wanner) are available.
    """
    if order == 1:
        a = [[1.0]]
    elif order == 2:
        g = 1.0 - np.sqrt(2.0) / 2.0
        a = [[g, 0.0], [1.0 - g, g]]
    elif order == 3:
        g = _GAMMA3
        b1 = (-6.0 * g * g + 16.0 * g - 1.0) / 4.0
        b2 = (6.0 * g * g - 20.0 * g + 5.0) / 4.0
        a = [[g, 0.0, 0.0], [(1.0 - g) / 2.0, g, 0.0], [b1, b2, g]]
    elif order == 4:
        a = [
            [1 / 4, 0.0, 0.0, 0.0, 0.0],
            [1 / 2, 1 / 4, 0.0, 0.0, 0.0],
            [17 / 50, -1 / 25, 1 / 4, 0.0, 0.0],
            [371 / 1360, -137 / 2720, 15 / 544, 1 / 4, 0.0],
            [25 / 24, -49 / 48, 125 / 16, -85 / 12, 1 / 4],
        ]
    else:
        raise ValueError(f"no DIRK tableau of order {order} (choose 1-4)")
    a = np.array(a, dtype=float)
    return DirkTableau(order=order, a=a, b=a[-1].copy(), c=a.sum(axis=1))


def _stage_solver(system: SystemBlocks, mats, gamma_dt: float,
                  block_size, cache) -> CondensedSolver:
    """Condensed factorization of one stage operator.

    Reused from the cache (keyed on a_ii dt) only when the velocity is
    steady, because only then are the stage matrices time-independent.
    """
    cacheable = cache is not None and getattr(
        system.problem, "steady_velocity", False
    )
    if cacheable and gamma_dt in cache:
        return cache[gamma_dt]
    solver = CondensedSolver(
        (system.mass_phi + gamma_dt * mats.lbar).tocsr(),
        (gamma_dt * mats.mbar).tocsr(),
        mats.n_mat,
        system.p_mat,
        system.num_elem_dofs,
        block_size,
    )
    if cacheable:
        cache[gamma_dt] = solver
    return solver


def dirk_step(system: SystemBlocks, tableau: DirkTableau, t: float,
              dt: float, coeffs: np.ndarray, block_size: int | None = None,
              solver_cache: dict | None = None) -> np.ndarray:
    """Advance the element coefficients by one step from t to t + dt."""
    mass_c = system.mass_phi @ coeffs
    residuals: list[np.ndarray] = []
    c_stage = coeffs
    for i in range(tableau.num_stages):
        gamma_dt = tableau.a[i, i] * dt
        t_i = t + tableau.c[i] * dt
        mats = system.stage_matrices(t_i)
        b_phi, b_mu = system.stage_vectors(t_i, mats)
        q = mass_c + gamma_dt * b_phi
        for j in range(i):
            q = q + dt * tableau.a[i, j] * residuals[j]
        solver = _stage_solver(system, mats, gamma_dt, block_size, solver_cache)
        c_stage, lam = solver.solve(q, b_mu)
        if i + 1 < tableau.num_stages:
            residuals.append(b_phi - mats.lbar @ c_stage - mats.mbar @ lam)
    return c_stage


def solve_steady(system: SystemBlocks, t: float = 0.0,
                 block_size: int | None = None):
    """Solve the stationary system Lbar C + Mbar Lambda = B_phi,
    N C + P Lambda = B_mu; returns (C, Lambda)."""
    mats = system.stage_matrices(t)
    b_phi, b_mu = system.stage_vectors(t, mats)
    stage = StageSystem(
        L=mats.lbar, M=mats.mbar, N=mats.n_mat, P=system.p_mat,
        Q=b_phi, b_mu=b_mu, n_loc=system.num_elem_dofs,
    )
    return condense_and_solve(stage, block_size)
