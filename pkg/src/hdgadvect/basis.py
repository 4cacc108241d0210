"""Orthonormal bases on the reference triangle and interval, quadrature
rules, reference-edge maps, and the pre-integrated reference blocks that
the global assembly combines with per-element geometry.

Conventions: the reference triangle is T = {x1 >= 0, x2 >= 0, x1+x2 <= 1},
the reference interval is [0, 1].  All arrays are 0-indexed; where the
discrete formulation numbers edges or orientation sides 1..3 / 1..2, the
docstrings say so explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import sqrt

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_jacobi

MAX_DEGREE = 4
MAX_QUAD_ORDER = 20

__all__ = [
    "MAX_DEGREE",
    "MAX_QUAD_ORDER",
    "QuadRule1D",
    "QuadRule2D",
    "BasisSet",
    "ReferenceBlocks",
    "num_basis_2d",
    "eval_basis_1d",
    "eval_basis_2d",
    "eval_basis_2d_table",
    "quad_rule_1d",
    "quad_rule_triangle",
    "map_ref_edge",
    "compute_bases_on_quad",
    "integrate_reference_blocks",
]


def num_basis_2d(p: int) -> int:
    """Dimension of the degree-p polynomial space on a triangle."""
    return (p + 1) * (p + 2) // 2


def _check_degree(p: int) -> None:
    if not 0 <= p <= MAX_DEGREE:
        raise ValueError(f"polynomial degree must be in 0..{MAX_DEGREE}, got {p}")


# --------------------------------------------------------------------------
# 1D orthonormal Legendre basis on [0, 1]

def eval_basis_1d(p: int, s) -> np.ndarray:
    """Evaluate the orthonormal 1D basis mu_1..mu_{p+1} at s in [0, 1].

    Accepts scalar or ndarray s; returns shape (p+1,) + shape(s).
    """
    _check_degree(p)
    s = np.asarray(s, dtype=float)
    table = [
        np.ones_like(s),
        sqrt(3.0) * (1.0 - 2.0 * s),
        sqrt(5.0) * (1.0 - 6.0 * s + 6.0 * s**2),
        sqrt(7.0) * (-1.0 + 12.0 * s - 30.0 * s**2 + 20.0 * s**3),
        3.0 * (1.0 - 20.0 * s + 90.0 * s**2 - 140.0 * s**3 + 70.0 * s**4),
    ]
    return np.stack(table[: p + 1])


# --------------------------------------------------------------------------
# 2D orthonormal hierarchical basis on the reference triangle
#
# Exact closed forms, obtained once by rational Gram-Schmidt over the graded
# monomial sequence 1, x1, x2, x1^2, x1*x2, x2^2, ... and frozen here as
# integer coefficient rows with rational squared norms.  Basis function i is
#     phi_i = (sum_m C[i][m] * x1^a_m * x2^b_m) / sqrt(NORM2[i]).
# Orthonormality of these exact coefficients was verified symbolically.

_MONO_EXPONENTS = [
    (0, 0),
    (1, 0), (0, 1),
    (2, 0), (1, 1), (0, 2),
    (3, 0), (2, 1), (1, 2), (0, 3),
    (4, 0), (3, 1), (2, 2), (1, 3), (0, 4),
]

_MONO_COEFFS = [
    ([1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0], Fraction(1, 2)),
    ([-1, 3, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0], Fraction(1, 4)),
    ([-1, 1, 2, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0], Fraction(1, 12)),
    ([1, -8, 0, 10, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0], Fraction(1, 6)),
    ([1, -6, -2, 5, 10, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0], Fraction(1, 18)),
    ([1, -2, -6, 1, 6, 6, 0, 0, 0, 0, 0, 0, 0, 0, 0], Fraction(1, 30)),
    ([-1, 15, 0, -45, 0, 0, 35, 0, 0, 0, 0, 0, 0, 0, 0], Fraction(1, 8)),
    ([-1, 13, 2, -33, -24, 0, 21, 42, 0, 0, 0, 0, 0, 0, 0], Fraction(1, 24)),
    ([-1, 9, 6, -15, -48, -6, 7, 42, 42, 0, 0, 0, 0, 0, 0], Fraction(1, 40)),
    ([-1, 3, 12, -3, -24, -30, 1, 12, 30, 20, 0, 0, 0, 0, 0], Fraction(1, 56)),
    ([1, -24, 0, 126, 0, 0, -224, 0, 0, 0, 126, 0, 0, 0, 0], Fraction(1, 10)),
    ([1, -22, -2, 105, 42, 0, -168, -168, 0, 0, 84, 168, 0, 0, 0],
     Fraction(1, 30)),
    ([1, -18, -6, 69, 102, 6, -88, -312, -96, 0, 36, 216, 216, 0, 0],
     Fraction(1, 50)),
    ([1, -12, -12, 30, 132, 30, -28, -228, -300, -20, 9, 108, 270, 180, 0],
     Fraction(1, 70)),
    ([1, -4, -20, 6, 60, 90, -4, -60, -180, -140, 1, 20, 90, 140, 70],
     Fraction(1, 90)),
]


def _normalized_coeff_matrix() -> np.ndarray:
    rows = []
    for ints, norm2 in _MONO_COEFFS:
        scale = 1.0 / sqrt(float(norm2))
        rows.append([c * scale for c in ints])
    return np.array(rows)


_COEF = _normalized_coeff_matrix()                    # (15, 15)

# Coefficient matrices of the partial derivatives over the same monomials:
# d/dx1 (x1^a x2^b) = a x1^(a-1) x2^b, mapped back onto the exponent list.
_MONO_INDEX = {e: m for m, e in enumerate(_MONO_EXPONENTS)}
_DCOEF = np.zeros((2, 15, 15))
for _m, (_a, _b) in enumerate(_MONO_EXPONENTS):
    if _a > 0:
        _DCOEF[0, :, _MONO_INDEX[(_a - 1, _b)]] += _a * _COEF[:, _m]
    if _b > 0:
        _DCOEF[1, :, _MONO_INDEX[(_a, _b - 1)]] += _b * _COEF[:, _m]


def _monomials(points: np.ndarray) -> np.ndarray:
    """Monomial matrix (..., 15) for points with trailing axis (x1, x2)."""
    x1 = points[..., 0]
    x2 = points[..., 1]
    cols = [x1**a * x2**b for (a, b) in _MONO_EXPONENTS]
    return np.stack(cols, axis=-1)


def eval_basis_2d(p: int, point) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate phi_1..phi_N and their gradients at one reference point.

    Returns (values, gradients) with shapes (N,) and (N, 2).
    """
    _check_degree(p)
    n = num_basis_2d(p)
    mono = _monomials(np.asarray(point, dtype=float))
    values = _COEF[:n] @ mono
    gradients = np.stack([_DCOEF[0, :n] @ mono, _DCOEF[1, :n] @ mono], axis=-1)
    return values, gradients


def eval_basis_2d_table(p: int, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized basis evaluation at many reference points.

    points: (R, 2).  Returns (values (N, R), gradients (2, N, R)).
    """
    _check_degree(p)
    n = num_basis_2d(p)
    mono = _monomials(np.asarray(points, dtype=float))      # (R, 15)
    values = _COEF[:n] @ mono.T
    gradients = np.stack([_DCOEF[0, :n] @ mono.T, _DCOEF[1, :n] @ mono.T])
    return values, gradients


# --------------------------------------------------------------------------
# Quadrature

@dataclass(frozen=True)
class QuadRule1D:
    """Gauss rule on [0, 1]; exact for polynomials up to `order`."""

    order: int
    points: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class QuadRule2D:
    """Rule on the reference triangle; exact to total degree `order`."""

    order: int
    points: np.ndarray   # (R, 2)
    weights: np.ndarray  # (R,), sums to 1/2


def quad_rule_1d(order: int) -> QuadRule1D:
    """Gauss-Legendre rule on [0, 1] exact for degree <= order."""
    if not 1 <= order <= MAX_QUAD_ORDER:
        raise ValueError(f"1D quadrature order must be in 1..{MAX_QUAD_ORDER}")
    n = (order + 2) // 2
    x, w = leggauss(n)
    return QuadRule1D(order, 0.5 * (x + 1.0), 0.5 * w)


def _orbit3(a: float) -> list[tuple[float, float]]:
    # symmetric orbit with barycentric coordinates (1-2a, a, a)
    return [(a, a), (1.0 - 2.0 * a, a), (a, 1.0 - 2.0 * a)]


def _orbit6(a: float, b: float) -> list[tuple[float, float]]:
    c = 1.0 - a - b
    return [(a, b), (b, a), (a, c), (c, a), (b, c), (c, b)]


def _dunavant_tables() -> dict[int, tuple[np.ndarray, np.ndarray]]:
    third = 1.0 / 3.0
    tables: dict[int, tuple[list, list]] = {}
    tables[1] = ([(third, third)], [1.0])
    tables[2] = (_orbit3(1.0 / 6.0), [third] * 3)
    tables[4] = (
        _orbit3(0.445948490915965) + _orbit3(0.091576213509771),
        [0.223381589678011] * 3 + [0.109951743655322] * 3,
    )
    tables[5] = (
        [(third, third)]
        + _orbit3(0.470142064105115)
        + _orbit3(0.101286507323456),
        [0.225]
        + [0.132394152788506] * 3
        + [0.125939180544827] * 3,
    )
    tables[6] = (
        _orbit3(0.249286745170910)
        + _orbit3(0.063089014491502)
        + _orbit6(0.310352451033785, 0.636502499121399),
        [0.116786275726379] * 3
        + [0.050844906370207] * 3
        + [0.082851075618374] * 6,
    )
    tables[8] = (
        [(third, third)]
        + _orbit3(0.459292588292723)
        + _orbit3(0.170569307751760)
        + _orbit3(0.050547228317031)
        + _orbit6(0.263112829634638, 0.728492392955404),
        [0.144315607677787]
        + [0.095091634267285] * 3
        + [0.103217370534718] * 3
        + [0.032458497623198] * 3
        + [0.027230314174435] * 6,
    )
    tables[9] = (
        [(third, third)]
        + _orbit3(0.489682519198738)
        + _orbit3(0.437089591492937)
        + _orbit3(0.188203535619033)
        + _orbit3(0.044729513394453)
        + _orbit6(0.221962989160766, 0.741198598784498),
        [0.097135796282799]
        + [0.031334700227139] * 3
        + [0.077827541004774] * 3
        + [0.079647738927210] * 3
        + [0.025577675658698] * 3
        + [0.043283539377289] * 6,
    )
    return {
        deg: (np.array(pts), 0.5 * np.array(wts)) for deg, (pts, wts) in tables.items()
    }


_DUNAVANT = _dunavant_tables()

# Degrees 3 and 7 fall back to the next higher symmetric rule: the
# classical 4-point/13-point rules of those degrees carry negative weights.
_SYMMETRIC_DEGREE = {1: 1, 2: 2, 3: 4, 4: 4, 5: 5, 6: 6, 7: 8, 8: 8, 9: 9}


def _collapsed_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Positive-weight product rule via the collapsed-square substitution
    x1 = a(1-b), x2 = b with Gauss-Legendre in a and Gauss-Jacobi (weight
    1-b) in b.  Exact for total degree <= order, used above the symmetric
    tables' range."""
    n = (order + 2) // 2
    xg, wg = leggauss(n)
    a = 0.5 * (xg + 1.0)
    wa = 0.5 * wg
    xj, wj = roots_jacobi(n, 1.0, 0.0)
    b = 0.5 * (xj + 1.0)
    wb = 0.25 * wj   # absorbs the Jacobi weight's [-1,1] -> [0,1] rescale
    pts = np.array([(ai * (1.0 - bi), bi) for bi in b for ai in a])
    wts = np.array([wai * wbi for wbi in wb for wai in wa])
    return pts, wts


def quad_rule_triangle(order: int) -> QuadRule2D:
    """Positive-weight rule on the reference triangle, exact to `order`."""
    if not 1 <= order <= MAX_QUAD_ORDER:
        raise ValueError(f"triangle quadrature order must be in 1..{MAX_QUAD_ORDER}")
    if order in _SYMMETRIC_DEGREE:
        pts, wts = _DUNAVANT[_SYMMETRIC_DEGREE[order]]
    else:
        pts, wts = _collapsed_rule(order)
    return QuadRule2D(order, pts, wts)


# --------------------------------------------------------------------------
# Reference-edge maps

def map_ref_edge(n: int, s) -> np.ndarray:
    """Parameterization gamma_n(s) of reference edge n in {1, 2, 3}.

    Edge n lies opposite reference vertex n: gamma_1 = (1-s, s),
    gamma_2 = (0, 1-s), gamma_3 = (s, 0).  Accepts scalar or array s and
    returns (..., 2).
    """
    s = np.asarray(s, dtype=float)
    if n == 1:
        return np.stack([1.0 - s, s], axis=-1)
    if n == 2:
        return np.stack([np.zeros_like(s), 1.0 - s], axis=-1)
    if n == 3:
        return np.stack([s, np.zeros_like(s)], axis=-1)
    raise ValueError(f"reference edge index must be 1, 2 or 3, got {n}")


# --------------------------------------------------------------------------
# Tabulated bases and reference blocks

@dataclass(frozen=True)
class BasisSet:
    """All basis tables on the quadrature points of one rule pair.

    phi2d[i, r]        element basis at triangle points
    grad_phi2d[m, i, r] reference derivative d/dx^(m+1)
    phi1d[n, i, r]     element-basis trace on reference edge n+1
    mu[i, r]           edge basis at interval points
    theta_mu[l, i, r]  mu composed with the orientation map; l=0 is the
                       identity side, l=1 the reversed side
    """

    p: int
    quad2d: QuadRule2D
    quad1d: QuadRule1D
    phi2d: np.ndarray
    grad_phi2d: np.ndarray
    phi1d: np.ndarray
    mu: np.ndarray
    theta_mu: np.ndarray

    @property
    def num_elem_dofs(self) -> int:
        return self.phi2d.shape[0]

    @property
    def num_edge_dofs(self) -> int:
        return self.mu.shape[0]


def compute_bases_on_quad(p: int, quad_order: int | None = None) -> BasisSet:
    """Tabulate all bases at quadrature points of order 2p+1 (default)."""
    _check_degree(p)
    order = 2 * p + 1 if quad_order is None else quad_order
    rule2d = quad_rule_triangle(order)
    rule1d = quad_rule_1d(order)

    phi2d, grad_phi2d = eval_basis_2d_table(p, rule2d.points)
    phi1d = np.stack(
        [eval_basis_2d_table(p, map_ref_edge(n, rule1d.points))[0] for n in (1, 2, 3)]
    )
    mu = eval_basis_1d(p, rule1d.points)
    # The reversed-orientation table is the point-reversed identity table;
    # Gauss points are symmetric about 1/2, so mu_i(1-q_r) = mu[i, R-1-r].
    theta_mu = np.stack([mu, mu[:, ::-1]])
    return BasisSet(p, rule2d, rule1d, phi2d, grad_phi2d, phi1d, mu, theta_mu)


@dataclass(frozen=True)
class ReferenceBlocks:
    """Pre-integrated reference tensors entering the global assembly.

    mass_mu[i, j]                       edge-basis mass (identity)
    edge_phi_mu[i, j, n, l]             int_0^1 phi_i(gamma_{n+1}) mu_j(beta_l)
    edge_phi_mu_quad[i, j, n, r, l]     the same integrand, per quadrature
                                        point and pre-weighted
    elem_dphi_phi_quad[m, i, j, r]      w_r dphi_i/dx^(m+1) phi_j at point r
    edge_phi_phi[i, j, n]               int_0^1 phi_i phi_j traces on edge n+1
    """

    mass_mu: np.ndarray
    edge_phi_mu: np.ndarray
    edge_phi_mu_quad: np.ndarray
    elem_dphi_phi_quad: np.ndarray
    edge_phi_phi: np.ndarray


def integrate_reference_blocks(basis: BasisSet) -> ReferenceBlocks:
    """Integrate all reference blocks with the BasisSet's own rules."""
    w1 = basis.quad1d.weights
    mass_mu = np.einsum("r,ir,jr->ij", w1, basis.mu, basis.mu)
    edge_phi_mu_quad = np.einsum(
        "r,nir,ljr->ijnrl", w1, basis.phi1d, basis.theta_mu
    )
    edge_phi_mu = edge_phi_mu_quad.sum(axis=3)
    elem_dphi_phi_quad = np.einsum(
        "r,mir,jr->mijr", basis.quad2d.weights, basis.grad_phi2d, basis.phi2d
    )
    edge_phi_phi = np.einsum("r,nir,njr->ijn", w1, basis.phi1d, basis.phi1d)
    return ReferenceBlocks(
        mass_mu, edge_phi_mu, edge_phi_mu_quad, elem_dphi_phi_quad, edge_phi_phi
    )
