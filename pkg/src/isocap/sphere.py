"""Quadrature and real spherical harmonics on the unit sphere.

Conventions used throughout the package:

* directions are unit vectors in R^N stored as rows of shape (..., N);
* surface integrals are with respect to the (N-1)-dimensional Hausdorff
  measure, so the weights of a quadrature rule sum to the full sphere
  area sigma_{N-1} = 2 pi^{N/2} / Gamma(N/2);
* spherical harmonics are real and orthonormal in L^2 of that measure
  (no 1/sigma normalisation), so the constant harmonic of degree zero
  equals sigma_{N-1}^{-1/2}.

Closed-form pieces (surface area, ball volume, Laplace-Beltrami
eigenvalues, harmonic space dimensions) work in any dimension N >= 3.
Node generation and harmonic evaluation are implemented for N = 3,
which is the dimension every solver in this package runs in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, lpmv

__all__ = [
    "sphere_area",
    "ball_volume",
    "lb_eigenvalue",
    "harmonic_space_dim",
    "direction",
    "SphereQuadrature",
    "build_quadrature",
    "HarmonicIndex",
    "HarmonicCoeffs",
    "eval_harmonic",
    "harmonic_basis",
    "expand",
    "synthesize",
]


def sphere_area(dimension: int) -> float:
    """Surface area of the unit sphere S^{N-1} in R^N."""
    if dimension < 2:
        raise ValueError(f"dimension must be >= 2, got {dimension}")
    return 2.0 * math.pi ** (dimension / 2.0) / math.gamma(dimension / 2.0)


def ball_volume(dimension: int, radius: float = 1.0) -> float:
    """Volume of the ball of given radius in R^N."""
    if dimension < 1:
        raise ValueError(f"dimension must be >= 1, got {dimension}")
    return math.pi ** (dimension / 2.0) / math.gamma(dimension / 2.0 + 1.0) * radius**dimension


def lb_eigenvalue(degree: int, dimension: int) -> float:
    """Laplace-Beltrami eigenvalue l(l+N-2) of degree-l harmonics on S^{N-1}."""
    if degree < 0:
        raise ValueError(f"degree must be >= 0, got {degree}")
    return float(degree * (degree + dimension - 2))


def harmonic_space_dim(degree: int, dimension: int) -> int:
    """Dimension of the space of degree-l spherical harmonics on S^{N-1}."""
    l, n = degree, dimension
    if l < 0:
        raise ValueError(f"degree must be >= 0, got {l}")
    if l < 2:
        return 1 if l == 0 else n
    return math.comb(n + l - 1, l) - math.comb(n + l - 3, l - 2)


def direction(v: np.ndarray) -> np.ndarray:
    """Validate a unit vector; raises if the norm is off by more than 1e-14."""
    v = np.asarray(v, dtype=float)
    nrm = np.linalg.norm(v, axis=-1)
    if np.any(np.abs(nrm - 1.0) > 1e-14):
        raise ValueError("direction is not normalised to unit length")
    return v


@dataclass(frozen=True)
class SphereQuadrature:
    """Nodes and weights integrating spherical polynomials exactly.

    A product rule: Gauss-Legendre in the polar cosine crossed with a
    uniform azimuthal grid.  Exact for polynomials on the sphere up to
    total degree `degree`; weights sum to the sphere area.
    """

    dimension: int
    degree: int
    nodes: np.ndarray  # (n, dimension), unit rows
    weights: np.ndarray  # (n,), positive

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]


def build_quadrature(dimension: int, degree: int) -> SphereQuadrature:
    """Product quadrature on S^{N-1} exact up to the requested degree.

    Parameters
    ----------
    dimension : int
        Ambient dimension N.  Node generation is implemented for N = 3.
    degree : int
        Polynomial exactness degree, >= 0.

    Notes
    -----
    For N = 3 the rule uses ceil((degree+1)/2) Gauss-Legendre nodes in
    cos(theta) and an even number >= degree+1 of uniform azimuth nodes,
    which makes the node set antipodally symmetric.
    """
    if degree < 0:
        raise ValueError(f"degree must be >= 0, got {degree}")
    if dimension < 3:
        raise ValueError(f"dimension must be >= 3, got {dimension}")
    if dimension != 3:
        raise NotImplementedError(
            "node generation is implemented for dimension 3 only; "
            "closed-form operations accept any dimension"
        )
    n_theta = (degree + 2) // 2
    n_theta = max(n_theta, 1)
    n_phi = degree + 1
    if n_phi % 2 == 1:
        n_phi += 1
    z, wz = np.polynomial.legendre.leggauss(n_theta)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    s = np.sqrt(1.0 - z**2)
    # outer products over (theta, phi)
    x = np.outer(s, np.cos(phi)).ravel()
    y = np.outer(s, np.sin(phi)).ravel()
    zz = np.outer(z, np.ones(n_phi)).ravel()
    nodes = np.column_stack([x, y, zz])
    weights = np.outer(wz, np.full(n_phi, 2.0 * np.pi / n_phi)).ravel()
    return SphereQuadrature(dimension=3, degree=degree, nodes=nodes, weights=weights)


@dataclass(frozen=True)
class HarmonicIndex:
    """Index (l, m) into the degree-l eigenspace, 0 <= m < dim of the space."""

    degree: int
    order: int
    dimension: int = 3

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError(f"degree must be >= 0, got {self.degree}")
        d = harmonic_space_dim(self.degree, self.dimension)
        if not 0 <= self.order < d:
            raise ValueError(
                f"order {self.order} outside eigenspace of dimension {d} "
                f"(degree {self.degree}, dimension {self.dimension})"
            )


def _n_coeffs(max_degree: int) -> int:
    # sum of (2l+1) for l = 0..L
    return (max_degree + 1) ** 2


@dataclass
class HarmonicCoeffs:
    """Coefficients of a real band-limited function on S^2.

    Layout: degrees stacked in increasing l; inside degree l the order
    index m runs 0..2l and maps to the signed azimuthal order m - l
    (negative orders are the sin(|m| phi) modes, positive the cos).
    """

    dimension: int
    max_degree: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = _n_coeffs(self.max_degree)
        if self.values.shape != (expected,):
            raise ValueError(
                f"expected {expected} coefficients for max_degree {self.max_degree}, "
                f"got shape {self.values.shape}"
            )

    @staticmethod
    def zeros(max_degree: int, dimension: int = 3) -> "HarmonicCoeffs":
        return HarmonicCoeffs(dimension, max_degree, np.zeros(_n_coeffs(max_degree)))

    @staticmethod
    def single(degree: int, order: int, amplitude: float = 1.0,
               max_degree: int | None = None) -> "HarmonicCoeffs":
        """Coefficients of amplitude * Y_{l,m}, padded to max_degree."""
        L = degree if max_degree is None else max_degree
        c = HarmonicCoeffs.zeros(L)
        c.values[flat_index(degree, order)] = amplitude
        return c

    def coefficient(self, degree: int, order: int) -> float:
        return float(self.values[flat_index(degree, order)])

    def degree_slice(self, degree: int) -> np.ndarray:
        i0 = degree**2
        return self.values[i0 : i0 + 2 * degree + 1]

    def l2_norm(self) -> float:
        """L^2(S^2) norm; the basis is orthonormal so this is the 2-norm."""
        return float(np.linalg.norm(self.values))

    def padded(self, max_degree: int) -> "HarmonicCoeffs":
        if max_degree < self.max_degree:
            raise ValueError("cannot pad to a smaller degree")
        out = HarmonicCoeffs.zeros(max_degree, self.dimension)
        out.values[: self.values.size] = self.values
        return out

    def copy(self) -> "HarmonicCoeffs":
        return HarmonicCoeffs(self.dimension, self.max_degree, self.values.copy())


def flat_index(degree: int, order: int) -> int:
    """Position of (l, m) in the flat coefficient layout."""
    if not 0 <= order <= 2 * degree:
        raise ValueError(f"order {order} outside 0..{2 * degree} for degree {degree}")
    return degree**2 + order


def _legendre_norm(l: int, m: int) -> float:
    # orthonormalisation constant for P_l^m on S^2
    return math.sqrt((2 * l + 1) / (4.0 * math.pi) * math.exp(gammaln(l - m + 1) - gammaln(l + m + 1)))


def harmonic_basis(max_degree: int, dirs: np.ndarray) -> np.ndarray:
    """Matrix of all real orthonormal harmonics through max_degree.

    Parameters
    ----------
    max_degree : int
        Largest degree L included.
    dirs : ndarray, shape (n, 3)
        Unit vectors.

    Returns
    -------
    ndarray, shape (n, (L+1)^2)
        Column j holds Y_{l,m} evaluated at the rows of `dirs`, in the
        flat layout of HarmonicCoeffs.
    """
    dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
    z = np.clip(dirs[:, 2], -1.0, 1.0)
    phi = np.arctan2(dirs[:, 1], dirs[:, 0])
    n = dirs.shape[0]
    out = np.empty((n, _n_coeffs(max_degree)))
    for l in range(max_degree + 1):
        for m in range(0, l + 1):
            p = lpmv(m, l, z)
            k = _legendre_norm(l, m)
            if m == 0:
                out[:, flat_index(l, l)] = k * p
            else:
                sq = math.sqrt(2.0) * k
                out[:, flat_index(l, l + m)] = sq * p * np.cos(m * phi)
                out[:, flat_index(l, l - m)] = sq * p * np.sin(m * phi)
    return out


def eval_harmonic(index: HarmonicIndex, d: np.ndarray) -> float:
    """Value of one real orthonormal harmonic at a unit vector."""
    if index.dimension != 3:
        raise NotImplementedError("harmonic evaluation is implemented for dimension 3")
    d = direction(d)
    B = harmonic_basis(index.degree, d.reshape(1, 3))
    return float(B[0, flat_index(index.degree, index.order)])


def expand(samples: np.ndarray, max_degree: int, quad: SphereQuadrature) -> HarmonicCoeffs:
    """Project sampled values onto harmonics through max_degree.

    The rule must integrate products of two degree-L harmonics exactly,
    so quad.degree >= 2 * max_degree is required.
    """
    if quad.degree < 2 * max_degree:
        raise ValueError(
            f"quadrature degree {quad.degree} too low for expansion through "
            f"degree {max_degree}; need >= {2 * max_degree}"
        )
    samples = np.asarray(samples, dtype=float)
    if samples.shape != (quad.n_nodes,):
        raise ValueError("samples must be given at the quadrature nodes")
    B = harmonic_basis(max_degree, quad.nodes)
    coeffs = B.T @ (quad.weights * samples)
    return HarmonicCoeffs(quad.dimension, max_degree, coeffs)


def synthesize(coeffs: HarmonicCoeffs, dirs: np.ndarray) -> np.ndarray:
    """Evaluate a band-limited function from its coefficients."""
    dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
    B = harmonic_basis(coeffs.max_degree, dirs)
    return B @ coeffs.values
