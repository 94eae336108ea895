"""Geodesic ball volumes from Jacobi fields.

For a unit direction ``u`` at ``p`` the geodesic ``x(t)``, a parallel orthonormal
frame ``E`` of ``u^perp`` and the Jacobi matrix ``A`` solve

    x'' = -Gamma(x', x'),   E' = -Gamma(x', E),   A'' = -R_u A,   A(0) = 0, A'(0) = I,

with ``(R_u)_ab = R(E_a, x', E_b, x')``. The polar volume density is
``theta(t, u) = det A(t)`` and

    V(p, r) = int_{S^3} int_0^r theta(t, u) dt du.

The radial integral rides along as one more ODE component. Directions are
integrated in fixed blocks of :data:`BLOCK` (one adaptive step sequence per
block) and summed with ``math.fsum`` in rule order, so results do not depend
on the worker count.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import jax
import jax.numpy as jnp
import numpy as np
from scipy.integrate import solve_ivp

from . import _batch
from .curvature import compiled
from .errors import ChartExitError, ConjugatePointError, DomainError, IntegrationError, QuadratureError
from .gray import SeriesFit, fit_series, gray_coefficients
from .metrics import MetricField
from .quadrature import SphereRule, coarse_companion, s3_product_rule

BLOCK = 128
DEFAULT_ODE_TOL = 1e-10
DEFAULT_QUAD_THRESHOLD = 1e-4
# A geodesic closer than this to the chart boundary (poles, ball rim) is a chart exit.
CHART_MARGIN = 1e-5


def _layout(n):
    m = n - 1
    sizes = [("x", n), ("v", n), ("E", n * m), ("A", m * m), ("Ad", m * m), ("vol", 1)]
    out, start = {}, 0
    for key, size in sizes:
        out[key] = slice(start, start + size)
        start += size
    return out, start


@functools.lru_cache(maxsize=64)
def _rhs_kernel(M: MetricField):
    n, m = M.dim, M.dim - 1
    sl, size = _layout(n)
    riemann = compiled(M)["geometry"]["riemann"]

    def rhs_one(y):
        x, v = y[sl["x"]], y[sl["v"]]
        E = y[sl["E"]].reshape(n, m)
        A = y[sl["A"]].reshape(m, m)
        Ad = y[sl["Ad"]].reshape(m, m)
        _, G, R = riemann(x)
        dv = -jnp.einsum("kij,i,j->k", G, v, v)
        dE = -jnp.einsum("kij,i,ja->ka", G, v, E)
        Ru = jnp.einsum("ijkl,ia,j,kb,l->ab", R, E, v, E, v, optimize="optimal")
        dAd = -Ru @ A
        dvol = jnp.linalg.det(A)
        return jnp.concatenate([v, dv, dE.ravel(), Ad.ravel(), dAd.ravel(), dvol[None]])

    batched = jax.jit(jax.vmap(rhs_one))
    return batched, size


def _orthonormal_frame(g):
    """Columns form a g-orthonormal basis: ``F.T @ g @ F = I``."""
    L = np.linalg.cholesky(g)
    return np.linalg.inv(L).T


def _complement(w):
    """Orthonormal basis (columns) of the Euclidean complement of unit ``w``, via Householder."""
    n = w.shape[0]
    sign = 1.0 if w[0] >= 0 else -1.0
    h = w.copy()
    h[0] += sign
    H = np.eye(n) - 2.0 * np.outer(h, h) / (h @ h)
    return H[:, 1:]


def _initial_states(M, p, w_dirs):
    """Initial ODE states for orthonormal-coordinate directions ``w_dirs`` (rows, unit in R^n)."""
    n, m = M.dim, M.dim - 1
    sl, size = _layout(n)
    F = _orthonormal_frame(M.components(p))
    Y = np.zeros((len(w_dirs), size))
    for b, w in enumerate(w_dirs):
        Y[b, sl["x"]] = p
        Y[b, sl["v"]] = F @ w
        Y[b, sl["E"]] = (F @ _complement(w)).ravel()
        Y[b, sl["Ad"]] = np.eye(m).ravel()
    return Y


def _atol(n, rtol):
    sl, size = _layout(n)
    atol = np.full(size, rtol * 1e-6)
    atol[sl["vol"]] = rtol * 1e-10
    return atol


def _check_block(M, Y, t, sl, m):
    for y in Y:
        if not np.all(np.isfinite(y)) or not M.contains(y[sl["x"]]):
            raise ChartExitError(f"geodesic left the chart of {M.label} before t = {t:.6g}")
        det = np.linalg.det(y[sl["A"]].reshape(m, m))
        if not det > 0:
            raise ConjugatePointError(f"conjugate point before t = {t:.6g} (det A = {det:.3g})", t=t)


def _raise_failure(M, Y, sl, t, message):
    for y in Y:
        if not np.all(np.isfinite(y)) or not M.contains(y[sl["x"]]):
            raise ChartExitError(f"geodesic left the chart of {M.label} near t = {t:.6g} ({message})")
    raise IntegrationError(f"ODE integration failed on {M.label} at t = {t:.6g}: {message}")


def _exit_event(M, B, size, sl):
    def event(t, y):
        return min(1.0, float(np.min(M.margin(y.reshape(B, size)[:, sl["x"]])))) - CHART_MARGIN

    event.terminal = True
    event.direction = -1
    return event


def _integrate_block(M, Y0, radii, rtol):
    """Integrate a block of directions, returning per-direction states at each radius."""
    rhs, size = _rhs_kernel(M)
    B = Y0.shape[0]
    n, m = M.dim, M.dim - 1
    sl, _ = _layout(n)

    def fun(t, y):
        return np.asarray(rhs(jnp.asarray(y.reshape(B, size)))).ravel()

    atol = np.tile(_atol(n, rtol), B)
    y = Y0.ravel()
    t0 = 0.0
    out = []
    for r in radii:
        sol = solve_ivp(fun, (t0, r), y, method="DOP853", rtol=rtol, atol=atol, events=_exit_event(M, B, size, sl))
        if sol.status == 1:
            raise ChartExitError(f"geodesic reached the chart boundary of {M.label} at t = {sol.t[-1]:.6g}")
        if sol.status != 0:
            _raise_failure(M, sol.y[:, -1].reshape(B, size), sl, sol.t[-1], sol.message)
        y = sol.y[:, -1]
        Y = y.reshape(B, size)
        _check_block(M, Y, r, sl, m)
        out.append(Y.copy())
        t0 = r
    return np.stack(out, axis=1)  # (B, K, size)


@dataclass(frozen=True)
class BallVolumeEstimate:
    radius: float
    value: float
    directions_used: int
    ode_tolerance: float
    quadrature_error_estimate: float


def _rule_volumes(M, p, rule, radii, rtol, workers):
    sl, size = _layout(M.dim)
    chunks, count = _batch.padded_chunks(rule.directions, BLOCK)
    results = _batch.run_ordered(
        lambda W: _integrate_block(M, _initial_states(M, p, W), radii, rtol),
        chunks,
        workers,
    )
    vols = np.concatenate([res[:, :, sl["vol"]][..., 0] for res in results])[:count]  # (N, K)
    return [math.fsum(float(w) * float(v) for w, v in zip(rule.weights, vols[:, k])) for k in range(len(radii))]


def ball_volumes(
    M: MetricField,
    p,
    radii,
    rule: SphereRule | None = None,
    ode_tol: float = DEFAULT_ODE_TOL,
    workers=None,
    quad_threshold: float = DEFAULT_QUAD_THRESHOLD,
) -> list[BallVolumeEstimate]:
    """Measured volumes ``V(p, r)`` for every radius in ``radii`` from one shot per direction.

    The quadrature error estimate is the change against the half-resolution
    product rule plus ``ode_tol * V``.
    """
    p = M.check_point(p)
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or radii.size == 0 or np.any(radii <= 0):
        raise DomainError("radii must be a non-empty list of positive numbers")
    order = np.argsort(radii, kind="stable")
    sorted_r = radii[order]
    rule = rule if rule is not None else s3_product_rule()
    fine = _rule_volumes(M, p, rule, sorted_r, ode_tol, workers)
    coarse_rule = coarse_companion(rule)
    coarse = _rule_volumes(M, p, coarse_rule, sorted_r, ode_tol, workers) if coarse_rule is not None else None
    est = [None] * len(radii)
    for k, idx in enumerate(order):
        v = fine[k]
        err = ode_tol * abs(v) + (abs(v - coarse[k]) if coarse is not None else 0.0)
        if err > quad_threshold * abs(v):
            raise QuadratureError(f"direction quadrature not converged at r = {sorted_r[k]:.6g}: error {err:.3g}, volume {v:.6g}")
        est[idx] = BallVolumeEstimate(
            radius=float(sorted_r[k]),
            value=float(v),
            directions_used=len(rule),
            ode_tolerance=float(ode_tol),
            quadrature_error_estimate=float(err),
        )
    return est


def ball_volume(M, p, r, rule=None, ode_tol=DEFAULT_ODE_TOL, workers=None, quad_threshold=DEFAULT_QUAD_THRESHOLD):
    return ball_volumes(M, p, [r], rule, ode_tol, workers, quad_threshold)[0]


@dataclass(frozen=True)
class GeodesicState:
    t: float
    position: np.ndarray
    velocity: np.ndarray
    frame: np.ndarray
    jacobi_matrix: np.ndarray
    jacobi_derivative: np.ndarray
    volume: float


class GeodesicTrajectory:
    """Dense-output solution of the geodesic / frame / Jacobi system for one direction."""

    def __init__(self, M, sol, t_end):
        self.M = M
        self._sol = sol
        self.t_end = t_end

    def state(self, t) -> GeodesicState:
        n, m = self.M.dim, self.M.dim - 1
        sl, _ = _layout(n)
        y = self._sol(float(t))
        return GeodesicState(
            t=float(t),
            position=y[sl["x"]],
            velocity=y[sl["v"]],
            frame=y[sl["E"]].reshape(n, m),
            jacobi_matrix=y[sl["A"]].reshape(m, m),
            jacobi_derivative=y[sl["Ad"]].reshape(m, m),
            volume=float(y[sl["vol"]][0]),
        )

    def __call__(self, t):
        return self.state(t)


def _unit_direction(M, p, u):
    g = M.components(p)
    u = np.asarray(u, dtype=float)
    norm2 = float(u @ g @ u)
    if abs(norm2 - 1.0) > 1e-8:
        raise DomainError(f"direction must have unit length in g, got g(u, u) = {norm2!r}")
    L = np.linalg.cholesky(g)
    w = L.T @ u
    return w / np.linalg.norm(w)


def shoot_geodesic(M: MetricField, p, u, r: float, ode_tol: float = DEFAULT_ODE_TOL) -> GeodesicTrajectory:
    """Integrate the unit-speed geodesic from ``p`` in direction ``u`` up to parameter ``r``."""
    p = M.check_point(p)
    w = _unit_direction(M, p, u)
    rhs, size = _rhs_kernel(M)
    Y0 = _initial_states(M, p, w[None, :])

    def fun(t, y):
        return np.asarray(rhs(jnp.asarray(y.reshape(1, size)))).ravel()

    sl, _ = _layout(M.dim)
    sol = solve_ivp(
        fun,
        (0.0, float(r)),
        Y0.ravel(),
        method="DOP853",
        rtol=ode_tol,
        atol=_atol(M.dim, ode_tol),
        dense_output=True,
        events=_exit_event(M, 1, size, sl),
    )
    if sol.status == 1:
        raise ChartExitError(f"geodesic reached the chart boundary of {M.label} at t = {sol.t[-1]:.6g}")
    if sol.status != 0:
        _raise_failure(M, sol.y[:, -1:].T, sl, sol.t[-1], sol.message)
    end = sol.y[:, -1]
    if not np.all(np.isfinite(end)) or not M.contains(end[sl["x"]]):
        raise ChartExitError(f"geodesic left the chart of {M.label} before t = {r}")
    return GeodesicTrajectory(M, sol.sol, float(r))


def volume_density(M: MetricField, p, u, t: float, ode_tol: float = DEFAULT_ODE_TOL) -> float:
    """Polar volume density ``det A(t, u)``; raises on a conjugate point."""
    p = M.check_point(p)
    w = _unit_direction(M, p, u)
    res = _integrate_block(M, _initial_states(M, p, w[None, :]), [float(t)], ode_tol)
    m = M.dim - 1
    sl, _ = _layout(M.dim)
    return float(np.linalg.det(res[0, 0, sl["A"]].reshape(m, m)))


@dataclass(frozen=True)
class ExpansionFit:
    a2: float
    a4: float
    fit: SeriesFit
    radii: tuple
    volumes: tuple
    estimates: tuple
    expected_a2: float
    expected_a4: float


def fit_expansion(
    M: MetricField,
    p,
    radii=None,
    rule: SphereRule | None = None,
    ode_tol: float = DEFAULT_ODE_TOL,
    nuisance_orders=(6,),
    workers=None,
    quad_threshold: float = DEFAULT_QUAD_THRESHOLD,
) -> ExpansionFit:
    """Recover ``(a2, a4)`` at ``p`` from measured volumes by least squares.

    Default radii are 10 log-spaced values in [0.05, 0.5]. If a conjugate point
    is met at ``t_c`` the radii at or above ``0.6 t_c`` are dropped and the
    measurement is repeated once.
    """
    from .curvature import curvature_frame

    radii = np.geomspace(0.05, 0.5, 10) if radii is None else np.asarray(radii, dtype=float)
    if radii.size < 8:
        raise DomainError("fit_expansion needs at least 8 radii")
    try:
        est = ball_volumes(M, p, radii, rule, ode_tol, workers, quad_threshold)
    except ConjugatePointError as exc:
        radii = radii[radii < 0.6 * exc.t]
        if radii.size < 8:
            raise
        est = ball_volumes(M, p, radii, rule, ode_tol, workers, quad_threshold)
    V = np.array([e.value for e in est])
    fit = fit_series(radii, V, M.dim, nuisance_orders)
    coeffs = gray_coefficients(curvature_frame(M, p))
    return ExpansionFit(
        a2=fit.a2,
        a4=fit.a4,
        fit=fit,
        radii=tuple(float(r) for r in radii),
        volumes=tuple(float(v) for v in V),
        estimates=tuple(est),
        expected_a2=coeffs.a2,
        expected_a4=coeffs.a4_original,
    )
