"""Static condensation of one implicit stage system.

The element operator L is block-diagonal (elements couple only through the
skeleton), so it is inverted block-wise and the globally coupled solve is
reduced to the much smaller Schur system on the skeleton:

    C      = L^-1 (Q - M Lambda)
    Schur  = P - N L^-1 M
    Lambda = Schur^-1 (B_mu - N L^-1 Q)
"""

from __future__ import annotations

import numpy as np
from dataclasses import dataclass

from scipy import sparse
from scipy.sparse.linalg import splu

__all__ = [
    "BlockInversionError",
    "SchurSolveError",
    "StageSystem",
    "default_block_size",
    "blkinv",
    "CondensedSolver",
    "condense_and_solve",
]


class BlockInversionError(RuntimeError):
    """A diagonal block of the element operator is singular."""

    def __init__(self, element: int):
        super().__init__(f"element operator block {element} is singular")
        self.element = element


class SchurSolveError(RuntimeError):
    """The condensed skeleton system could not be solved."""


@dataclass
class StageSystem:
    """One stage's linear system L C + M Lambda = Q, N C + P Lambda = b_mu."""

    L: sparse.sparray
    M: sparse.sparray
    N: sparse.sparray
    P: sparse.sparray
    Q: np.ndarray
    b_mu: np.ndarray
    n_loc: int       # element block size N


def default_block_size(p: int, n_loc: int) -> int:
    """Batch-size heuristic 32 * 2^-p * N, at least one block."""
    return max(n_loc, (32 >> min(p, 6)) * n_loc)


def _extract_blocks(L, n_loc: int) -> np.ndarray:
    """Dense (K, N, N) diagonal blocks of a block-diagonal sparse matrix.

    Rejects matrices with entries outside the block diagonal and treats
    entirely absent blocks as zero (hence singular) blocks.
    """
    size = L.shape[0]
    if L.shape[0] != L.shape[1] or size % n_loc:
        raise ValueError(f"operator shape {L.shape} is not K blocks of {n_loc}")
    num_blocks = size // n_loc
    bsr = sparse.csr_matrix(L).tobsr(blocksize=(n_loc, n_loc))
    blocks = np.zeros((num_blocks, n_loc, n_loc))
    indptr, indices = bsr.indptr, bsr.indices
    for k in range(num_blocks):
        for pos in range(indptr[k], indptr[k + 1]):
            j = indices[pos]
            if j != k:
                if np.any(bsr.data[pos]):
                    raise ValueError(
                        f"matrix has entries outside the block diagonal "
                        f"(block row {k}, column {j})"
                    )
                continue
            blocks[k] = bsr.data[pos]
    return blocks


def blkinv(L, n_loc: int, block_size: int | None = None) -> sparse.csr_array:
    """Exact block-diagonal inverse, factored in grouped dense batches.

    block_size is in scalar rows and is rounded down to whole blocks; the
    result does not depend on the grouping.  A singular block raises
    BlockInversionError carrying the element index.
    """
    blocks = _extract_blocks(L, n_loc)
    num_blocks = blocks.shape[0]
    if block_size is None:
        block_size = default_block_size(0, n_loc)
    group = max(1, int(block_size) // n_loc)

    inverses = np.empty_like(blocks)
    for start in range(0, num_blocks, group):
        batch = blocks[start : start + group]
        try:
            inverses[start : start + group] = np.linalg.inv(batch)
        except np.linalg.LinAlgError:
            for k in range(start, min(start + group, num_blocks)):
                try:
                    np.linalg.inv(blocks[k])
                except np.linalg.LinAlgError:
                    raise BlockInversionError(k) from None
            raise
    if not np.isfinite(inverses).all():
        bad = np.flatnonzero(~np.isfinite(inverses).reshape(num_blocks, -1).all(axis=1))
        raise BlockInversionError(int(bad[0]))

    mat = sparse.bsr_array(
        (inverses, np.arange(num_blocks), np.arange(num_blocks + 1)),
        shape=L.shape,
    )
    return mat.tocsr()


class CondensedSolver:
    """Factorization of one stage operator, reusable for many right-hand
    sides (the repeated solves of an SDIRK scheme with constant a_ii dt)."""

    def __init__(self, L, M, N, P, n_loc: int, block_size: int | None = None):
        self.n_mat = sparse.csr_array(N)
        self.l_inv = blkinv(L, n_loc, block_size)
        self.li_m = (self.l_inv @ M).tocsr()
        schur = (P - self.n_mat @ self.li_m).tocsc()
        try:
            self.schur_lu = splu(schur)
        except RuntimeError as exc:
            raise SchurSolveError(f"Schur factorization failed: {exc}") from exc

    def solve(self, q: np.ndarray, b_mu: np.ndarray):
        li_q = self.l_inv @ q
        lam = self.schur_lu.solve(b_mu - self.n_mat @ li_q)
        if not np.isfinite(lam).all():
            raise SchurSolveError("Schur solve produced non-finite skeleton values")
        c = li_q - self.li_m @ lam
        return c, lam


def condense_and_solve(sys: StageSystem, block_size: int | None = None):
    """Solve one stage system by static condensation; returns (C, Lambda)."""
    solver = CondensedSolver(sys.L, sys.M, sys.N, sys.P, sys.n_loc, block_size)
    return solver.solve(sys.Q, sys.b_mu)
