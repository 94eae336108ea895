"""Interior quadrature rules: chart boxes and the unit 3-sphere of directions.

All nodes are strictly interior, so chart boundaries (poles, seams) are never
evaluated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

S3_AREA = 2.0 * math.pi**2


def gauss_legendre(a, b, n):
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def periodic_midpoint(a, b, n):
    """Trapezoidal rule on a periodic interval, nodes shifted half a step off the seam."""
    h = (b - a) / n
    return a + h * (np.arange(n) + 0.5), np.full(n, h)


def axis_rule(lo, hi, periodic, n):
    return periodic_midpoint(lo, hi, n) if periodic else gauss_legendre(lo, hi, n)


def tensor_grid(lower, upper, periodic, nodes):
    """Tensor-product rule over a box; returns ``(points (N, d), weights (N,))`` in C order."""
    if np.isscalar(nodes):
        nodes = (int(nodes),) * len(lower)
    rules = [axis_rule(lo, hi, per, k) for lo, hi, per, k in zip(lower, upper, periodic, nodes)]
    pts = np.stack(np.meshgrid(*[r[0] for r in rules], indexing="ij"), axis=-1).reshape(-1, len(lower))
    wts = np.ones(1)
    for _, w in rules:
        wts = np.multiply.outer(wts, w).ravel()
    return pts, wts


@dataclass(frozen=True)
class SphereRule:
    """Directions on S^3 (unit vectors in R^4) with weights summing to 2 pi^2."""

    directions: np.ndarray
    weights: np.ndarray
    name: str
    sizes: tuple | None = None

    def __len__(self):
        return len(self.weights)

    def antipodal(self):
        return SphereRule(-self.directions, self.weights.copy(), self.name + "-antipodal", self.sizes)


def _hopf_to_r4(s, xi1, xi2):
    c, sn = np.sqrt(1.0 - s), np.sqrt(s)
    return np.stack([c * np.cos(xi1), c * np.sin(xi1), sn * np.cos(xi2), sn * np.sin(xi2)], axis=-1)


def s3_product_rule(n_s=8, n_xi1=8, n_xi2=16) -> SphereRule:
    """Product rule in Hopf coordinates.

    ``w = (sqrt(1-s) cos xi1, sqrt(1-s) sin xi1, sqrt(s) cos xi2, sqrt(s) sin xi2)``
    has surface measure ``1/2 ds dxi1 dxi2`` with ``s = sin^2(eta)``, so Gauss-Legendre
    in ``s`` and the periodic midpoint rule in both angles integrate polynomials in
    ``w`` exactly up to high degree, and the weights sum to 2 pi^2 to rounding.
    Even angle counts make the node set invariant under ``w -> -w``.
    """
    s, ws = gauss_legendre(0.0, 1.0, n_s)
    a, wa = periodic_midpoint(0.0, 2 * math.pi, n_xi1)
    b, wb = periodic_midpoint(0.0, 2 * math.pi, n_xi2)
    S, A, B = np.meshgrid(s, a, b, indexing="ij")
    W = 0.5 * np.einsum("i,j,k->ijk", ws, wa, wb)
    dirs = _hopf_to_r4(S.ravel(), A.ravel(), B.ravel())
    return SphereRule(dirs, W.ravel(), f"product{n_s}x{n_xi1}x{n_xi2}", (n_s, n_xi1, n_xi2))


def s3_sobol_rule(count=1024, seed=0) -> SphereRule:
    """Equal-weight scrambled Sobol directions (seeded fallback rule)."""
    u = qmc.Sobol(d=3, scramble=True, seed=seed).random(count)
    dirs = _hopf_to_r4(u[:, 0], 2 * math.pi * u[:, 1], 2 * math.pi * u[:, 2])
    return SphereRule(dirs, np.full(count, S3_AREA / count), f"sobol{count}-seed{seed}")


def coarse_companion(rule: SphereRule) -> SphereRule | None:
    """Half-resolution product rule used for the direction quadrature error estimate."""
    if rule.sizes is None:
        return None
    n_s, n1, n2 = rule.sizes
    return s3_product_rule(max(2, n_s // 2), max(2, n1 // 2), max(2, n2 // 2))
