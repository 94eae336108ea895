"""Pointwise curvature of a chart metric.

Index conventions (all arrays are in chart coordinates):

* ``gamma[k, i, j] = Gamma^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij)``
* ``R^i_jkl = d_k Gamma^i_lj - d_l Gamma^i_kj + Gamma^i_km Gamma^m_lj - Gamma^i_lm Gamma^m_kj``
* ``riemann_lower[i, j, k, l] = g_im R^m_jkl``, so a space of constant curvature K has
  ``R_ijkl = K (g_ik g_jl - g_il g_jk)`` and ``R_ijij`` is the sectional curvature.
* ``ricci[j, l] = R^i_jil``; ``tau = g^jl ricci[j, l]``.

With these choices the unit round S^4 has ``tau = +12`` (pinned by a test);
squared norms do not depend on the overall sign of R anyway.

The Laplacian is the trace of the Hessian, ``Delta f = g^ij (d_i d_j f - Gamma^k_ij d_k f)``,
which is negative semidefinite.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import jax
import jax.numpy as jnp
import numpy as np

from .errors import SingularMetricError
from .metrics import MetricField

MAX_CONDITION = 1e12


def _geometry(metric_fn, n):
    """Build the jax-traceable single-point geometry functions for ``metric_fn``."""
    dmetric = jax.jacfwd(metric_fn)

    def inverse(g):
        gi = jnp.linalg.inv(g)
        return 0.5 * (gi + gi.T)

    def gamma(x):
        g = metric_fn(x)
        dg = dmetric(x)  # dg[a, b, c] = d_c g_ab
        t = jnp.einsum("jli->lij", dg) + jnp.einsum("ilj->lij", dg) - jnp.einsum("ijl->lij", dg)
        return 0.5 * jnp.einsum("kl,lij->kij", inverse(g), t)

    dgamma = jax.jacfwd(gamma)  # dG[i, a, b, c] = d_c Gamma^i_ab

    def riemann(x):
        g = metric_fn(x)
        G = gamma(x)
        dG = dgamma(x)
        R_up = (
            jnp.einsum("iljk->ijkl", dG)
            - jnp.einsum("ikjl->ijkl", dG)
            + jnp.einsum("ikm,mlj->ijkl", G, G)
            - jnp.einsum("ilm,mkj->ijkl", G, G)
        )
        return g, G, jnp.einsum("im,mjkl->ijkl", g, R_up)

    def invariants(x):
        g, G, R = riemann(x)
        gi = inverse(g)
        ricci = jnp.einsum("ijkl,ik->jl", R, gi)
        ricci = 0.5 * (ricci + ricci.T)
        tau = jnp.einsum("jl,jl", gi, ricci)
        R_up = jnp.einsum("abcd,ai,bj,ck,dl->ijkl", R, gi, gi, gi, gi, optimize="optimal")
        ric_up = gi @ ricci @ gi
        norm_R2 = jnp.sum(R * R_up)
        norm_rho2 = jnp.sum(ricci * ric_up)
        traceless = ricci - tau / n * g
        norm_rt2 = jnp.sum(traceless * (gi @ traceless @ gi))
        if n >= 3:
            gg = jnp.einsum("ac,bd->abcd", g, g) - jnp.einsum("ad,bc->abcd", g, g)
            rg = (
                jnp.einsum("ac,bd->abcd", ricci, g)
                + jnp.einsum("bd,ac->abcd", ricci, g)
                - jnp.einsum("ad,bc->abcd", ricci, g)
                - jnp.einsum("bc,ad->abcd", ricci, g)
            )
            W = R - rg / (n - 2) + tau / ((n - 1) * (n - 2)) * gg
            W_up = jnp.einsum("abcd,ai,bj,ck,dl->ijkl", W, gi, gi, gi, gi, optimize="optimal")
            norm_W2 = jnp.sum(W * W_up)
        else:
            W = jnp.full_like(R, jnp.nan)
            norm_W2 = jnp.nan
        return {
            "g": g,
            "g_inv": gi,
            "gamma": G,
            "riemann_lower": R,
            "ricci": ricci,
            "tau": tau,
            "weyl_lower": W,
            "traceless_ricci": traceless,
            "norm_R2": norm_R2,
            "norm_rho2": norm_rho2,
            "norm_W2": norm_W2,
            "norm_rhoTilde2": norm_rt2,
        }

    def tau_fn(x):
        return invariants(x)["tau"]

    dtau = jax.jacfwd(tau_fn)
    ddtau = jax.jacfwd(dtau)

    def frame(x):
        out = invariants(x)
        hess = ddtau(x)
        grad = dtau(x)
        hess = 0.5 * (hess + hess.T)
        out["laplacian_tau"] = jnp.einsum("ij,ij", out["g_inv"], hess - jnp.einsum("kij,k->ij", out["gamma"], grad))
        return out

    def scalars(x):
        inv = invariants(x)
        ev = jnp.linalg.eigvalsh(inv["g"])
        return jnp.stack(
            [
                jnp.sqrt(jnp.linalg.det(inv["g"])),
                inv["tau"],
                inv["norm_R2"],
                inv["norm_rho2"],
                inv["norm_W2"],
                inv["norm_rhoTilde2"],
                ev[0],
                ev[-1],
            ]
        )

    return {
        "gamma": gamma,
        "riemann": riemann,
        "invariants": invariants,
        "frame": frame,
        "scalars": scalars,
    }


@functools.lru_cache(maxsize=64)
def compiled(M: MetricField):
    """Jitted geometry kernels for ``M`` (cached per metric object, read-only)."""
    fns = _geometry(M.component, M.dim)
    return {
        "geometry": fns,
        "gamma": jax.jit(fns["gamma"]),
        "frame": jax.jit(fns["frame"]),
        "invariants": jax.jit(fns["invariants"]),
        "scalars_batch": jax.jit(jax.vmap(fns["scalars"])),
    }


# Column order of the batched scalar kernel.
SCALAR_COLUMNS = ("sqrt_det_g", "tau", "norm_R2", "norm_rho2", "norm_W2", "norm_rhoTilde2", "eig_min", "eig_max")


def check_metric_matrix(g, where=""):
    ev = np.linalg.eigvalsh(np.asarray(g))
    if not ev[0] > 0 or ev[-1] / ev[0] > MAX_CONDITION:
        raise SingularMetricError(f"metric is singular or ill-conditioned{where}: eigenvalues {ev.tolist()}")


@dataclass(frozen=True)
class CurvatureFrame:
    """Curvature data at one chart point.

    Tensor fields are ``None`` for synthetic frames built from invariants only
    (see :meth:`from_invariants`).
    """

    point: np.ndarray | None
    dim: int
    g: np.ndarray | None
    g_inv: np.ndarray | None
    gamma: np.ndarray | None
    riemann_lower: np.ndarray | None
    ricci: np.ndarray | None
    tau: float
    weyl_lower: np.ndarray | None
    traceless_ricci: np.ndarray | None
    norm_R2: float
    norm_rho2: float
    norm_W2: float
    norm_rhoTilde2: float
    laplacian_tau: float

    @property
    def scale(self):
        """Reference magnitude ``1 + |R|^2`` for relative zero tests."""
        return 1.0 + abs(self.norm_R2)

    @classmethod
    def from_invariants(cls, dim, tau, norm_R2, norm_rho2, norm_W2, norm_rhoTilde2, laplacian_tau=0.0):
        return cls(
            point=None,
            dim=int(dim),
            g=None,
            g_inv=None,
            gamma=None,
            riemann_lower=None,
            ricci=None,
            tau=float(tau),
            weyl_lower=None,
            traceless_ricci=None,
            norm_R2=float(norm_R2),
            norm_rho2=float(norm_rho2),
            norm_W2=float(norm_W2),
            norm_rhoTilde2=float(norm_rhoTilde2),
            laplacian_tau=float(laplacian_tau),
        )


def christoffel(M: MetricField, x) -> np.ndarray:
    """Christoffel symbols ``gamma[k, i, j]`` of the Levi-Civita connection at ``x``."""
    x = M.check_point(x)
    check_metric_matrix(M.components(x), f" at {x.tolist()}")
    return np.asarray(compiled(M)["gamma"](jnp.asarray(x)))


def curvature_frame(M: MetricField, x) -> CurvatureFrame:
    x = M.check_point(x)
    check_metric_matrix(M.components(x), f" at {x.tolist()}")
    out = {k: np.asarray(v) for k, v in compiled(M)["frame"](jnp.asarray(x)).items()}
    scalars = {k: float(out[k]) for k in ("tau", "norm_R2", "norm_rho2", "norm_W2", "norm_rhoTilde2", "laplacian_tau")}
    return CurvatureFrame(
        point=x,
        dim=M.dim,
        g=out["g"],
        g_inv=out["g_inv"],
        gamma=out["gamma"],
        riemann_lower=out["riemann_lower"],
        ricci=out["ricci"],
        weyl_lower=out["weyl_lower"],
        traceless_ricci=out["traceless_ricci"],
        **scalars,
    )


def check_space_form_pointwise(frame: CurvatureFrame, tol: float = 1e-8):
    """Return ``(is_constant_curvature, K)``; ``K`` is ``None`` when the test fails.

    Constant curvature holds iff both ``|W|^2`` and ``|rho~|^2`` vanish relative
    to ``1 + |R|^2``.
    """
    n = frame.dim
    bound = tol * frame.scale
    ok = abs(frame.norm_W2) < bound and abs(frame.norm_rhoTilde2) < bound
    if not ok:
        return False, None
    return True, frame.tau / (n * (n - 1))
