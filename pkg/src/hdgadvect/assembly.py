"""Global sparse block assembly for the hybridized DG advection system.

Element unknowns (K blocks of N coefficients) couple to skeleton unknowns
(Kbar blocks of Nbar coefficients) only through edge integrals.  Every
assembler combines pre-integrated reference tensors with per-element
geometry by accumulating coordinate triplets and converting once to
compressed sparse rows, so duplicate entries (e.g. the two element
contributions to an interior edge) sum automatically.

Composite stage blocks:
    lbar = -G1 - G2 + alpha * R_phi          (element operator)
    mbar = S + S_out - alpha * R_mu          (element <- skeleton coupling)
    n    = -alpha * T - K_mu_out             (skeleton <- element coupling)
    p    = alpha * Mbar_mu + Mtilde_mu       (skeleton operator)
    b_phi = H - F_phi_in
    b_mu  = K_mu_in
The sign of b_mu makes the pure-inflow rows read
|E| * Lambda_i = int(c_D * mu_i), i.e. lambda is the L2 projection of the
boundary datum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .basis import BasisSet, ReferenceBlocks, num_basis_2d
from .mesh import Mesh, edge_quad_points, elem_quad_points

__all__ = [
    "SystemBlocks",
    "StageMatrices",
    "build_system",
    "assemble_mass_phi",
    "assemble_advection_elem",
    "eval_normal_velocity",
    "assemble_mat_edge_phi_int_mu_val",
    "assemble_mat_edge_phi_int_mu",
    "assemble_mat_edge_mu_mu",
    "assemble_mat_edge_phi_phi_interior",
    "assemble_vec_edge_mu_func_cont",
    "assemble_vec_edge_phi_int_val",
    "assemble_vec_source",
    "default_alpha",
]


def _elem_block_diag(blocks: np.ndarray) -> sparse.csr_array:
    """Block-diagonal sparse matrix from stacked dense blocks (K, N, N)."""
    num_blocks, n, _ = blocks.shape
    mat = sparse.bsr_array(
        (blocks, np.arange(num_blocks), np.arange(num_blocks + 1)),
        shape=(num_blocks * n, num_blocks * blocks.shape[2]),
    )
    return mat.tocsr()


def _scatter(row_blocks, col_blocks, blocks, shape):
    """COO triplets for dense blocks placed at block coordinates."""
    _, n_row, n_col = blocks.shape
    rows = row_blocks[:, None, None] * n_row + np.arange(n_row)[None, :, None]
    cols = col_blocks[:, None, None] * n_col + np.arange(n_col)[None, None, :]
    rows = np.broadcast_to(rows, blocks.shape)
    cols = np.broadcast_to(cols, blocks.shape)
    return rows.ravel(), cols.ravel(), blocks.ravel()


def _coo_to_csr(parts, shape) -> sparse.csr_array:
    if not parts:
        return sparse.csr_array(shape)
    rows = np.concatenate([p[0] for p in parts])
    cols = np.concatenate([p[1] for p in parts])
    vals = np.concatenate([p[2] for p in parts])
    return sparse.coo_array((vals, (rows, cols)), shape=shape).tocsr()


# --------------------------------------------------------------------------
# Element (volume) blocks

def assemble_mass_phi(mesh: Mesh, p: int) -> sparse.csr_array:
    """Mass matrix: block k = 2|T_k| * identity (orthonormal basis)."""
    n = num_basis_2d(p)
    blocks = 2.0 * mesh.area[:, None, None] * np.eye(n)[None, :, :]
    return _elem_block_diag(blocks)


def assemble_advection_elem(mesh, gblock, points, u1, u2, t):
    """Advection volume matrices (G1, G2).

    gblock is the weighted reference tensor w_r dphi_i phi_j of shape
    (2, N, N, R); points the reference quadrature points.  The velocity is
    evaluated at the physical quadrature points, not projected.  The
    1/(2|T_k|) of the gradient transformation cancels against the 2|T_k|
    of the element integral, so only the Jacobian entries appear.
    """
    phys = elem_quad_points(mesh, points)               # (K, R, 2)
    uu1 = np.broadcast_to(np.asarray(u1(t, phys), dtype=float), phys.shape[:2])
    uu2 = np.broadcast_to(np.asarray(u2(t, phys), dtype=float), phys.shape[:2])
    jac = mesh.jacobian
    b11 = jac[:, 0, 0][:, None]
    b12 = jac[:, 0, 1][:, None]
    b21 = jac[:, 1, 0][:, None]
    b22 = jac[:, 1, 1][:, None]

    g1 = np.einsum("kr,ijr->kij", b22 * uu1, gblock[0]) - np.einsum(
        "kr,ijr->kij", b21 * uu1, gblock[1]
    )
    g2 = np.einsum("kr,ijr->kij", -b12 * uu2, gblock[0]) + np.einsum(
        "kr,ijr->kij", b11 * uu2, gblock[1]
    )
    return _elem_block_diag(g1), _elem_block_diag(g2)


def assemble_vec_source(mesh: Mesh, xi, t, basis: BasisSet) -> np.ndarray:
    """Source moments: entry (k, i) = 2|T_k| sum_r w_r xi(F_k(q_r)) phi_i."""
    phys = elem_quad_points(mesh, basis.quad2d.points)
    values = np.broadcast_to(np.asarray(xi(t, phys), dtype=float), phys.shape[:2])
    moments = np.einsum(
        "r,kr,ir->ki", basis.quad2d.weights, values, basis.phi2d
    )
    return (2.0 * mesh.area[:, None] * moments).ravel()


# --------------------------------------------------------------------------
# Edge blocks

def eval_normal_velocity(mesh: Mesh, u1, u2, t, s_points) -> np.ndarray:
    """u . nu at every edge quadrature point, shape (K, 3, R)."""
    phys = edge_quad_points(mesh, s_points)             # (K, 3, R, 2)
    shape = phys.shape[:3]
    uu1 = np.broadcast_to(np.asarray(u1(t, phys), dtype=float), shape)
    uu2 = np.broadcast_to(np.asarray(u2(t, phys), dtype=float), shape)
    return (
        uu1 * mesh.normals[..., 0:1] + uu2 * mesh.normals[..., 1:2]
    )


def _masked_edge_blocks(mesh, mask, block_of):
    """Iterate (elements, edges, per-side dense blocks) over a mask.

    block_of(sel, n, l) must return the dense blocks for the selected
    elements on local edge n with orientation side l (0-based).
    """
    for n in range(3):
        for l in range(2):
            sel = np.flatnonzero(mask[:, n] & (mesh.side_of_elem[:, n] == l + 1))
            if sel.size == 0:
                continue
            yield sel, mesh.edge_of_elem[sel, n], block_of(sel, n, l)


def assemble_mat_edge_phi_int_mu_val(
    mesh: Mesh, mask: np.ndarray, s_block: np.ndarray, u_nu: np.ndarray
) -> sparse.csr_array:
    """Flux coupling S (and S_out): |E_kn| sum_r Unu[k,n,r] S_hat[:,:,n,r,l].

    s_block is the per-quadrature reference tensor (N, Nbar, 3, R, 2);
    the result is KN x Kbar*Nbar.
    """
    n_loc, nbar = s_block.shape[:2]
    shape = (mesh.num_elements * n_loc, mesh.num_edges * nbar)

    def block_of(sel, n, l):
        length = mesh.edge_length[mesh.edge_of_elem[sel, n]]
        return length[:, None, None] * np.einsum(
            "kr,ijr->kij", u_nu[sel, n, :], s_block[:, :, n, :, l]
        )

    parts = [
        _scatter(sel, edges, blocks, shape)
        for sel, edges, blocks in _masked_edge_blocks(mesh, mask, block_of)
    ]
    return _coo_to_csr(parts, shape)


def assemble_mat_edge_phi_int_mu(
    mesh: Mesh, mask: np.ndarray, r_block: np.ndarray
) -> sparse.csr_array:
    """Trace coupling: block |E_kn| * R_hat[:,:,n,l] per masked (k, n).

    With the interior mask this is R_mu (transpose: T); with the outflow
    mask its transpose is K_mu_out.
    """
    n_loc, nbar = r_block.shape[:2]
    shape = (mesh.num_elements * n_loc, mesh.num_edges * nbar)

    def block_of(sel, n, l):
        length = mesh.edge_length[mesh.edge_of_elem[sel, n]]
        return length[:, None, None] * r_block[None, :, :, n, l]

    parts = [
        _scatter(sel, edges, blocks, shape)
        for sel, edges, blocks in _masked_edge_blocks(mesh, mask, block_of)
    ]
    return _coo_to_csr(parts, shape)


def assemble_mat_edge_mu_mu(
    mesh: Mesh, mask: np.ndarray, mass_mu: np.ndarray
) -> sparse.csr_array:
    """Edge-diagonal mass: block of edge = (sum of masked |E|) * mass_mu.

    Interior mask visits every edge twice (factor 2|E|), exterior once.
    """
    nbar = mass_mu.shape[0]
    factor = np.zeros(mesh.num_edges)
    masked_edges = mesh.edge_of_elem[mask]
    np.add.at(factor, masked_edges, mesh.edge_length[masked_edges])
    blocks = factor[:, None, None] * mass_mu[None, :, :]
    return _elem_block_diag(blocks)


def assemble_mat_edge_phi_phi_interior(
    mesh: Mesh, edge_phi_phi: np.ndarray
) -> sparse.csr_array:
    """Penalty block R_phi: block k = sum over interior edges of
    |E_kn| * (trace x trace reference block of side n)."""
    weights = mesh.interior_mask * mesh.edge_length[mesh.edge_of_elem]
    blocks = np.einsum("kn,ijn->kij", weights, edge_phi_phi)
    return _elem_block_diag(blocks)


def assemble_vec_edge_mu_func_cont(
    mesh: Mesh, mask: np.ndarray, values: np.ndarray, basis: BasisSet
) -> np.ndarray:
    """Boundary-data moments on the skeleton.

    values holds the datum at edge quadrature points, shape (K, 3, R).
    Only boundary edges may be masked, so the identity orientation applies
    and the edge entry is |E| sum_r w_r values[k,n,r] mu_i(q_r).
    """
    nbar = basis.num_edge_dofs
    out = np.zeros(mesh.num_edges * nbar)
    w = basis.quad1d.weights
    for n in range(3):
        sel = np.flatnonzero(mask[:, n])
        if sel.size == 0:
            continue
        edges = mesh.edge_of_elem[sel, n]
        moments = np.einsum(
            "r,kr,ir->ki", w, values[sel, n, :], basis.mu
        ) * mesh.edge_length[edges][:, None]
        np.add.at(
            out, edges[:, None] * nbar + np.arange(nbar)[None, :], moments
        )
    return out


def assemble_vec_edge_phi_int_val(
    mesh: Mesh, mask: np.ndarray, values: np.ndarray, basis: BasisSet
) -> np.ndarray:
    """Element moments of edge point values (e.g. (u . nu) * c_D).

    Entry (k, i) accumulates |E_kn| sum_r w_r values[k,n,r] phi_i(gamma_n).
    """
    n_loc = basis.num_elem_dofs
    out = np.zeros(mesh.num_elements * n_loc)
    w = basis.quad1d.weights
    for n in range(3):
        sel = np.flatnonzero(mask[:, n])
        if sel.size == 0:
            continue
        length = mesh.edge_length[mesh.edge_of_elem[sel, n]]
        moments = np.einsum(
            "r,kr,ir->ki", w, values[sel, n, :], basis.phi1d[n]
        ) * length[:, None]
        np.add.at(
            out, sel[:, None] * n_loc + np.arange(n_loc)[None, :], moments
        )
    return out


def default_alpha(mesh: Mesh, basis: BasisSet, u1, u2) -> float:
    """Flux penalty: largest |u . nu| over all edge quadrature points at
    t = 0.  For time-dependent velocities the user must override alpha."""
    u_nu = eval_normal_velocity(mesh, u1, u2, 0.0, basis.quad1d.points)
    return float(np.abs(u_nu).max())


# --------------------------------------------------------------------------
# Per-problem system container

@dataclass
class StageMatrices:
    """Velocity-dependent blocks of one implicit stage."""

    lbar: sparse.csr_array
    mbar: sparse.csr_array
    n_mat: sparse.csr_array
    inflow: np.ndarray
    outflow: np.ndarray
    u_nu: np.ndarray


class SystemBlocks:
    """All global blocks of one discretized problem.

    Time-independent parts (mass, trace couplings on the fixed interior
    skeleton, the skeleton operator P) are assembled once.  The
    velocity-dependent parts are rebuilt per stage time — or reused when
    the problem declares its velocity steady, in which case rebuilt blocks
    would be identical.
    """

    def __init__(self, mesh: Mesh, basis: BasisSet, ref: ReferenceBlocks,
                 problem, alpha: float | None = None):
        self.mesh = mesh
        self.basis = basis
        self.ref = ref
        self.problem = problem
        if alpha is None:
            alpha = problem.alpha
        if alpha is None:
            alpha = default_alpha(mesh, basis, problem.u1, problem.u2)
        if alpha <= 0:
            raise ValueError(f"flux penalty alpha must be positive, got {alpha}")
        self.alpha = float(alpha)

        self.mass_phi = assemble_mass_phi(mesh, basis.p)
        self.r_phi = assemble_mat_edge_phi_phi_interior(mesh, ref.edge_phi_phi)
        self.r_mu = assemble_mat_edge_phi_int_mu(
            mesh, mesh.interior_mask, ref.edge_phi_mu
        )
        self.t_mat = self.r_mu.T.tocsr()
        self.mbar_mu = assemble_mat_edge_mu_mu(
            mesh, mesh.interior_mask, ref.mass_mu
        )
        self.mtilde_mu = assemble_mat_edge_mu_mu(
            mesh, mesh.exterior_mask, ref.mass_mu
        )
        self.p_mat = (self.alpha * self.mbar_mu + self.mtilde_mu).tocsr()

        self._edge_points = edge_quad_points(mesh, basis.quad1d.points)
        self._stage_cache: StageMatrices | None = None

    @property
    def num_elem_dofs(self) -> int:
        return self.basis.num_elem_dofs

    def stage_matrices(self, t: float) -> StageMatrices:
        """Velocity blocks at stage time t (cached for steady velocity)."""
        if self._stage_cache is not None and getattr(
            self.problem, "steady_velocity", False
        ):
            return self._stage_cache

        mesh, basis, ref = self.mesh, self.basis, self.ref
        u_nu = eval_normal_velocity(
            mesh, self.problem.u1, self.problem.u2, t, basis.quad1d.points
        )
        mean = u_nu @ basis.quad1d.weights
        # balanced (tangential) edges classify as outflow even when
        # cancellation leaves the mean at roundoff level below zero
        tie = 1e-13 * np.max(np.abs(u_nu), axis=-1)
        inflow = mesh.exterior_mask & (mean < -tie)
        outflow = mesh.exterior_mask & ~(mean < -tie)

        g1, g2 = assemble_advection_elem(
            mesh, ref.elem_dphi_phi_quad, basis.quad2d.points,
            self.problem.u1, self.problem.u2, t,
        )
        s_mat = assemble_mat_edge_phi_int_mu_val(
            mesh, mesh.interior_mask | outflow, ref.edge_phi_mu_quad, u_nu
        )
        k_out = assemble_mat_edge_phi_int_mu(
            mesh, outflow, ref.edge_phi_mu
        ).T.tocsr()

        mats = StageMatrices(
            lbar=(-g1 - g2 + self.alpha * self.r_phi).tocsr(),
            mbar=(s_mat - self.alpha * self.r_mu).tocsr(),
            n_mat=(-self.alpha * self.t_mat - k_out).tocsr(),
            inflow=inflow,
            outflow=outflow,
            u_nu=u_nu,
        )
        if getattr(self.problem, "steady_velocity", False):
            self._stage_cache = mats
        return mats

    def stage_vectors(self, t: float, mats: StageMatrices):
        """Data-dependent right-hand sides (b_phi, b_mu) at stage time t."""
        mesh, basis = self.mesh, self.basis
        h_vec = assemble_vec_source(mesh, self.problem.xi, t, basis)
        if mats.inflow.any():
            cd_values = np.broadcast_to(
                np.asarray(self.problem.c_d(t, self._edge_points), dtype=float),
                self._edge_points.shape[:3],
            )
            f_in = assemble_vec_edge_phi_int_val(
                mesh, mats.inflow, mats.u_nu * cd_values, basis
            )
            k_in = assemble_vec_edge_mu_func_cont(
                mesh, mats.inflow, cd_values, basis
            )
        else:
            f_in = np.zeros(mesh.num_elements * basis.num_elem_dofs)
            k_in = np.zeros(mesh.num_edges * basis.num_edge_dofs)
        return h_vec - f_in, k_in


def build_system(mesh: Mesh, basis: BasisSet, ref: ReferenceBlocks, problem,
                 alpha: float | None = None) -> SystemBlocks:
    return SystemBlocks(mesh, basis, ref, problem, alpha)
