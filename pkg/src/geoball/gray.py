"""Small geodesic ball volume expansion to order r^4.

    V(p, r) = lead_n(r) * (1 + a2 r^2 + a4 r^4 + O(r^6)),  lead_n(r) = (pi r^2)^(n/2) / (n/2)!

    a2 = -tau / (6 (n + 2))
    a4 = (-3|R|^2 + 8|rho|^2 + 5 tau^2 - 18 Delta tau) / (360 (n + 2)(n + 4))

Rewriting ``a4`` through the Weyl tensor and the traceless Ricci tensor gives

    a4 = (-3|W|^2 + (8 - 12/(n-2))|rho~|^2 + c_tau(n) tau^2 - 18 Delta tau) / (360 (n + 2)(n + 4))

with ``c_tau(n) = 5 + 6/((n-1)(n-2)) + 8/n - 12/(n(n-2))`` (13/2 for n = 4). The
coefficient ``2/(n(n-1))`` sometimes quoted for the tau^2 term is inconsistent with
the exact volume of the round sphere; it is only available through
``legacy=True`` for diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

from .curvature import CurvatureFrame
from .errors import DomainError, QuadratureError


def lead_factor(n, r):
    """Euclidean ball volume ``(pi r^2)^(n/2) / Gamma(n/2 + 1)``."""
    r = np.asarray(r, dtype=float)
    return (math.pi * r**2) ** (n / 2) / gamma_fn(n / 2 + 1)


def a4_prefactor(n):
    return 1.0 / (360.0 * (n + 2) * (n + 4))


def tau_coefficient(n):
    """tau^2 coefficient of the Weyl / traceless-Ricci form of ``a4``."""
    return 5.0 + 6.0 / ((n - 1) * (n - 2)) + 8.0 / n - 12.0 / (n * (n - 2))


def legacy_tau_coefficient(n):
    return 2.0 / (n * (n - 1))


@dataclass(frozen=True)
class GrayCoefficients:
    n: int
    a2: float
    a4_original: float
    a4_rewritten: float | None
    a4_legacy: float | None = None

    def lead(self, r):
        return lead_factor(self.n, r)

    @property
    def a4(self):
        return self.a4_original


@dataclass(frozen=True)
class BallVolumeSeries:
    coefficients: GrayCoefficients

    def eval(self, r):
        return eval_series(self, r)

    __call__ = eval


def gray_coefficients(frame: CurvatureFrame, legacy: bool = False) -> GrayCoefficients:
    n = frame.dim
    tau = frame.tau
    pref = a4_prefactor(n)
    a2 = -tau / (6.0 * (n + 2))
    a4 = pref * (-3 * frame.norm_R2 + 8 * frame.norm_rho2 + 5 * tau**2 - 18 * frame.laplacian_tau)
    rewritten = legacy_value = None
    if n >= 3:
        base = -3 * frame.norm_W2 + (8 - 12 / (n - 2)) * frame.norm_rhoTilde2 - 18 * frame.laplacian_tau
        rewritten = pref * (base + tau_coefficient(n) * tau**2)
        if legacy:
            legacy_value = pref * (base + legacy_tau_coefficient(n) * tau**2)
    return GrayCoefficients(n=n, a2=a2, a4_original=a4, a4_rewritten=rewritten, a4_legacy=legacy_value)


def eval_series(s, r):
    """Truncated series ``lead(r) (1 + a2 r^2 + a4 r^4)``.

    ``s`` may be a :class:`BallVolumeSeries` or bare :class:`GrayCoefficients`.
    """
    c = s.coefficients if isinstance(s, BallVolumeSeries) else s
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("radius must be positive")
    val = c.lead(r) * (1.0 + c.a2 * r**2 + c.a4_original * r**4)
    return float(val) if val.ndim == 0 else val


def model_invariants(c, n=4):
    """``(tau, |R|^2, |rho|^2)`` of a space of constant curvature ``c``."""
    return n * (n - 1) * c, 2.0 * n * (n - 1) * c**2, n * (n - 1) ** 2 * c**2


def model_coefficients(c, n=4) -> GrayCoefficients:
    tau, R2, rho2 = model_invariants(c, n)
    frame = CurvatureFrame.from_invariants(n, tau, R2, rho2, 0.0, 0.0, 0.0)
    return gray_coefficients(frame)


def model_ball_volume_exact(c: float, r, n: int = 4):
    """Exact geodesic ball volume in the 4-dimensional space form of curvature ``c``.

    Uses ``2/3 - cos r + cos^3 r / 3 = 4 sin^4(r/2) (2 + cos r) / 3`` (and the
    hyperbolic analogue) so small radii do not cancel catastrophically.
    """
    if n != 4:
        raise DomainError("exact model volumes are implemented for n = 4 only")
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("radius must be positive")
    if c == 0:
        val = 0.5 * math.pi**2 * r**4
    else:
        k = math.sqrt(abs(c))
        s = k * r
        if c > 0:
            if np.any(s >= math.pi):
                raise DomainError(f"radius beyond injectivity radius pi/sqrt(c) = {math.pi / k}")
            unit = 2 * math.pi**2 * 4 * np.sin(s / 2) ** 4 * (2 + np.cos(s)) / 3
        else:
            unit = 2 * math.pi**2 * 4 * np.sinh(s / 2) ** 4 * (2 + np.cosh(s)) / 3
        val = unit / c**2
    return float(val) if val.ndim == 0 else val


def volume_balance(frame: CurvatureFrame):
    """``-3|W|^2 + 2|rho~|^2``, the n = 4 curvature part of ``a4`` at fixed tau."""
    return -3.0 * frame.norm_W2 + 2.0 * frame.norm_rhoTilde2


def volumes_match_to_r4(frame: CurvatureFrame, c: float, tol: float = 1e-8) -> bool:
    """Does the ball volume at this point agree with the model of curvature ``c`` to order r^4?

    Both the ``r^2`` coefficient (tau) and the ``r^4`` coefficient must agree.
    The ``a4`` difference is compared after dividing out ``1/(360 (n+2)(n+4))``,
    i.e. as ``|-3|W|^2 + 2|rho~|^2 - 18 Delta tau| < tol (1 + |R|^2)`` once tau matches.
    """
    n = frame.dim
    if n != 4:
        raise DomainError("volumes_match_to_r4 is specialised to n = 4")
    bound = tol * frame.scale
    tau_model = n * (n - 1) * c
    if abs(frame.tau - tau_model) >= bound:
        return False
    diff = (gray_coefficients(frame).a4_original - model_coefficients(c, n).a4_original) / a4_prefactor(n)
    return abs(diff) < bound


@dataclass(frozen=True)
class SeriesFit:
    a2: float
    a4: float
    nuisance: tuple
    stderr: tuple
    condition: float
    rms_residual: float


def fit_series(radii, volumes, n: int = 4, nuisance_orders=(6,), max_condition: float = 1e10) -> SeriesFit:
    """Least-squares fit of ``a2, a4`` (plus nuisance terms) to measured volumes.

    Fits ``(V / lead - 1) / r^2 = a2 + a4 r^2 + sum_k b_k r^(k-2)``.
    """
    r = np.asarray(radii, dtype=float)
    V = np.asarray(volumes, dtype=float)
    orders = (2, 4) + tuple(nuisance_orders)
    if r.size < len(orders) + 1:
        raise QuadratureError(f"need more than {len(orders)} radii for the fit, got {r.size}")
    y = (V / lead_factor(n, r) - 1.0) / r**2
    X = np.stack([r ** (k - 2) for k in orders], axis=1)
    cond = float(np.linalg.cond(X))
    if cond > max_condition:
        raise QuadratureError(f"ill-conditioned expansion fit (condition number {cond:.3g})")
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    dof = max(1, r.size - len(orders))
    sigma2 = float(resid @ resid) / dof
    cov = sigma2 * np.linalg.inv(X.T @ X)
    return SeriesFit(
        a2=float(coef[0]),
        a4=float(coef[1]),
        nuisance=tuple(float(b) for b in coef[2:]),
        stderr=tuple(float(s) for s in np.sqrt(np.diag(cov))),
        condition=cond,
        rms_residual=float(np.sqrt(np.mean(resid**2))),
    )


def loglog_slope(x, y):
    """Slope of the least-squares line through ``(log x, log |y|)``."""
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])
