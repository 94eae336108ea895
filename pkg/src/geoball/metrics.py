"""Chart-based analytic metrics and their exact partial derivatives.

Every metric is a closed-form ``jax.numpy`` expression ``x -> g(x)``. Partial
derivatives of the components come from nested forward-mode differentiation
of that expression (``jax.jacfwd``), so fourth derivatives are exact up to
rounding. Finite differences only appear in the tests, as a cross-check.

Catalog charts and the measure-zero sets they leave out:

=================  =======================================  ==============================
metric             coordinates / domain                     excluded set
=================  =======================================  ==============================
round sphere S^4   (chi1, chi2, chi3) in (0, pi)^3,         sin(chi1) sin(chi2) sin(chi3) = 0
                   phi in (0, 2 pi) periodic                plus the phi = 0 half-space seam
flat torus T^4     x_i in (0, L_i), all periodic            none (seams only)
Poincare ball H^4  |x| < 1, box (-1, 1)^4                   chart is non-compact
S^2(a) x S^2(b)    (th1, ph1, th2, ph2), th in (0, pi),     poles of both factors
                   ph in (0, 2 pi) periodic
=================  =======================================  ==============================
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable

import jax
import jax.numpy as jnp
import numpy as np

from .errors import DomainError

MAX_DERIVATIVE_ORDER = 4
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True, eq=False)
class MetricField:
    """An analytic Riemannian metric on a single coordinate chart.

    ``component`` must be traceable by jax. Periodic axes are never checked
    against their interval; the interval then only fixes the period.
    """

    name: str
    dim: int
    lower: tuple
    upper: tuple
    periodic: tuple
    component: Callable
    covers_manifold: bool
    params: tuple = ()
    inner_margin: Callable | None = None
    sample_lower: tuple | None = None
    sample_upper: tuple | None = None
    excluded: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def label(self):
        args = ", ".join(format(p, ".17g") if isinstance(p, float) else str(p) for p in self.params)
        return f"{self.name}({args})"

    @property
    def periods(self):
        return tuple((hi - lo) if per else None for lo, hi, per in zip(self.lower, self.upper, self.periodic))

    def margin(self, X) -> np.ndarray:
        """Distance of each row of ``X`` to the chart boundary (positive inside, +inf if unbounded)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.full(X.shape[0], np.inf)
        for k, (lo, hi, per) in enumerate(zip(self.lower, self.upper, self.periodic)):
            if not per:
                out = np.minimum(out, np.minimum(X[:, k] - lo, hi - X[:, k]))
        if self.inner_margin is not None:
            out = np.minimum(out, self.inner_margin(X))
        out[~np.all(np.isfinite(X), axis=1)] = -np.inf
        return out

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            return False
        return bool(self.margin(x)[0] > 0)

    def check_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if not self.contains(x):
            raise DomainError(f"point {x.tolist()} is outside the open domain of {self.label}")
        return x

    def components(self, x) -> np.ndarray:
        x = self.check_point(x)
        return np.asarray(self._component_jit(jnp.asarray(x)))

    @functools.cached_property
    def _component_jit(self):
        return jax.jit(self.component)

    @functools.cached_property
    def _derivative_jits(self):
        fns = [self.component]
        for _ in range(MAX_DERIVATIVE_ORDER):
            fns.append(jax.jacfwd(fns[-1]))
        return [jax.jit(f) for f in fns]


def _check_positive(name, *values):
    for v in values:
        if not (np.isfinite(v) and v > 0):
            raise DomainError(f"{name} must be positive, got {v!r}")


def make_round_sphere(radius: float = 1.0) -> MetricField:
    """Round S^4 of the given radius in hyperspherical coordinates."""
    _check_positive("radius", radius)
    a2 = float(radius) ** 2

    def g(x):
        s1, s2, s3 = jnp.sin(x[0]), jnp.sin(x[1]), jnp.sin(x[2])
        d = jnp.stack([jnp.ones_like(s1), s1**2, (s1 * s2) ** 2, (s1 * s2 * s3) ** 2])
        return a2 * jnp.diag(d)

    pi = math.pi
    return MetricField(
        name="sphere",
        dim=4,
        lower=(0.0, 0.0, 0.0, 0.0),
        upper=(pi, pi, pi, TWO_PI),
        periodic=(False, False, False, True),
        component=g,
        covers_manifold=True,
        params=(float(radius),),
        sample_lower=(0.1, 0.1, 0.1, 0.0),
        sample_upper=(pi - 0.1, pi - 0.1, pi - 0.1, TWO_PI),
        excluded="sin(chi1) sin(chi2) sin(chi3) = 0",
        meta={"curvature": 1.0 / a2},
    )


def make_flat_torus(periods=(TWO_PI,) * 4) -> MetricField:
    periods = tuple(float(p) for p in periods)
    if len(periods) != 4:
        raise DomainError(f"flat torus needs 4 periods, got {len(periods)}")
    _check_positive("period", *periods)

    def g(x):
        return jnp.eye(4, dtype=x.dtype) + 0.0 * x[0]

    return MetricField(
        name="torus",
        dim=4,
        lower=(0.0,) * 4,
        upper=periods,
        periodic=(True,) * 4,
        component=g,
        covers_manifold=True,
        params=periods,
        excluded="none",
        meta={"curvature": 0.0},
    )


def make_hyperbolic(curvature_scale: float = 1.0) -> MetricField:
    """Poincare ball, g = 4 s^2 delta / (1 - |x|^2)^2, sectional curvature -1/s^2."""
    _check_positive("curvature_scale", curvature_scale)
    s2 = float(curvature_scale) ** 2

    def g(x):
        f = 2.0 / (1.0 - jnp.dot(x, x))
        return s2 * f**2 * jnp.eye(4, dtype=x.dtype)

    return MetricField(
        name="hyperbolic",
        dim=4,
        lower=(-1.0,) * 4,
        upper=(1.0,) * 4,
        periodic=(False,) * 4,
        component=g,
        covers_manifold=False,
        params=(float(curvature_scale),),
        inner_margin=lambda X: 1.0 - np.sqrt(np.sum(X * X, axis=1)),
        sample_lower=(-0.45,) * 4,
        sample_upper=(0.45,) * 4,
        excluded="chart is the whole (non-compact) space",
        meta={"curvature": -1.0 / s2},
    )


def make_product_spheres(a: float = 1.0, b: float = 1.0) -> MetricField:
    """S^2(a) x S^2(b) in coordinates (theta1, phi1, theta2, phi2)."""
    _check_positive("radius", a, b)
    a2, b2 = float(a) ** 2, float(b) ** 2

    def g(x):
        d = jnp.stack([a2 + 0.0 * x[0], a2 * jnp.sin(x[0]) ** 2, b2 + 0.0 * x[0], b2 * jnp.sin(x[2]) ** 2])
        return jnp.diag(d)

    pi = math.pi
    return MetricField(
        name="product_spheres",
        dim=4,
        lower=(0.0, 0.0, 0.0, 0.0),
        upper=(pi, TWO_PI, pi, TWO_PI),
        periodic=(False, True, False, True),
        component=g,
        covers_manifold=True,
        params=(float(a), float(b)),
        sample_lower=(0.1, 0.0, 0.1, 0.0),
        sample_upper=(pi - 0.1, TWO_PI, pi - 0.1, TWO_PI),
        excluded="sin(theta1) sin(theta2) = 0",
    )


# Profiles take chart-normalised coordinates s in (0, 1)^n and have sup-norm 1.
def _cos_sum(s):
    return jnp.mean(jnp.cos(TWO_PI * s))


def _sin_product(s):
    return jnp.prod(jnp.sin(TWO_PI * s))


def _gaussian(s):
    return jnp.exp(-jnp.sum((s - 0.5) ** 2) / (2 * 0.15**2))


PROFILES = {"cos_sum": _cos_sum, "sin_product": _sin_product, "gaussian": _gaussian}


def make_conformal_perturbation(base: MetricField, profile: str = "cos_sum", epsilon: float = 0.1) -> MetricField:
    """Return ``exp(2 * epsilon * phi(x)) * g_base(x)`` for a named profile ``phi``.

    ``cos_sum`` and ``sin_product`` are periodic in every axis, so they are smooth
    on tori; ``gaussian`` is a centred bump meant for non-periodic charts.
    """
    if profile not in PROFILES:
        raise DomainError(f"unknown profile {profile!r}; known: {sorted(PROFILES)}")
    if not (np.isfinite(epsilon) and epsilon >= 0):
        raise DomainError(f"epsilon must be >= 0, got {epsilon!r}")
    phi = PROFILES[profile]
    lo = np.asarray(base.lower, dtype=float)
    width = np.asarray(base.upper, dtype=float) - lo
    eps = float(epsilon)
    base_g = base.component

    def g(x):
        s = (x - lo) / width
        return jnp.exp(2.0 * eps * phi(s)) * base_g(x)

    return MetricField(
        name=f"conformal_{base.name}",
        dim=base.dim,
        lower=base.lower,
        upper=base.upper,
        periodic=base.periodic,
        component=g,
        covers_manifold=base.covers_manifold,
        params=base.params + (profile, eps),
        inner_margin=base.inner_margin,
        sample_lower=base.sample_lower,
        sample_upper=base.sample_upper,
        excluded=base.excluded,
        meta={"base": base, "profile": profile, "epsilon": eps},
    )


@functools.lru_cache(maxsize=None)
def _sorted_multi_index(n, order):
    """Flat index of the sorted representative of every multi-index of length ``order``."""
    if order == 0:
        return np.zeros(1, dtype=int)
    idx = np.indices((n,) * order).reshape(order, -1)
    rep = np.sort(idx, axis=0)
    return np.ravel_multi_index(tuple(rep), (n,) * order)


def metric_derivatives(M: MetricField, x, order: int) -> list[np.ndarray]:
    """All partial derivatives of ``g_ij`` at ``x`` up to ``order``.

    Returns ``[g, dg, d2g, ...]`` where ``d^k g`` has shape ``(n, n) + (n,) * k``
    and the trailing ``k`` axes are the differentiation indices. Mixed partials
    are copied from one canonical ordering, so they are exactly symmetric.
    """
    if not (0 <= int(order) <= MAX_DERIVATIVE_ORDER):
        raise DomainError(f"derivative order must be in 0..{MAX_DERIVATIVE_ORDER}, got {order}")
    x = M.check_point(x)
    xj = jnp.asarray(x)
    n = M.dim
    out = []
    for k in range(int(order) + 1):
        D = np.asarray(M._derivative_jits[k](xj))
        if k >= 2:
            flat = D.reshape(n, n, -1)[:, :, _sorted_multi_index(n, k)]
            D = flat.reshape(D.shape)
        out.append(D)
    return out


def sample_points(M: MetricField, count: int, seed: int = 0) -> np.ndarray:
    """Uniform random points in the metric's sampling box (rejection for non-box domains)."""
    rng = np.random.default_rng(seed)
    lo = np.asarray(M.sample_lower if M.sample_lower is not None else M.lower, dtype=float)
    hi = np.asarray(M.sample_upper if M.sample_upper is not None else M.upper, dtype=float)
    pts = []
    while len(pts) < count:
        x = lo + (hi - lo) * rng.random(M.dim)
        if M.contains(x):
            pts.append(x)
    return np.array(pts).reshape(count, M.dim)


CATALOG = {
    "sphere": (make_round_sphere, "sphere(radius)"),
    "torus": (make_flat_torus, "torus(L1, L2, L3, L4)"),
    "hyperbolic": (make_hyperbolic, "hyperbolic(scale)"),
    "product_spheres": (make_product_spheres, "product_spheres(a, b)"),
}


def make_metric(name: str, params=(), profile: str | None = None, epsilon: float | None = None) -> MetricField:
    """Build a catalog metric by name, optionally conformally perturbed."""
    if name not in CATALOG:
        raise DomainError(f"unknown manifold {name!r}; known: {sorted(CATALOG)}")
    factory = CATALOG[name][0]
    params = tuple(float(p) for p in params)
    if name == "torus":
        M = factory(params if params else (TWO_PI,) * 4)
    else:
        M = factory(*params)
    if profile is not None:
        M = make_conformal_perturbation(M, profile, 0.0 if epsilon is None else epsilon)
    return M
