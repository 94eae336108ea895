"""Space-form classification and the volume-determines-space-form decision procedure.

For a compact 4-manifold whose small-ball volumes agree with a model space
(flat, curvature +1 or curvature -1) to order r^4, the r^2 term forces
``tau = tau_model`` and the r^4 term forces ``-3|W|^2 + 2|rho~|^2 = 0``. Feeding
this into Gauss-Bonnet gives

    32 pi^2 chi = int (-4/3) |rho~|^2 dv + 24 vol        (tau = +-12)
    32 pi^2 chi = int (-4/3) |rho~|^2 dv                 (tau = 0)

so the Euler condition (``chi >= 0`` resp. ``32 pi^2 chi >= 24 vol``) forces
``rho~ = 0`` and then ``W = 0``: constant curvature.

"For all p" is checked on a finite sample of points only; the report records
that sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curvature import CurvatureFrame, check_space_form_pointwise, curvature_frame
from .errors import DomainError, NonCoveringChartError
from .gaussbonnet import DEFAULT_NODES, euler_characteristic, euler_inequality
from .gray import volume_balance, volumes_match_to_r4
from .metrics import MetricField

SPHERE4_VOLUME = 8.0 * math.pi**2 / 3.0

BRANCHES = {
    1: ("flat", 0.0),
    2: ("sphere", 1.0),
    3: ("hyperbolic", -1.0),
}
MODEL_BRANCH = {"flat": 1, "sphere": 2, "hyperbolic": 3}

CONCLUSIONS = {
    1: "M is flat",
    2: "(M, g) is a space of constant sectional curvature 1",
    3: "(M, g) is a space of constant sectional curvature -1, isometric to H^4/Gamma",
}

SAMPLE_CAVEAT = "volume hypothesis checked on a finite sample of points, not for all p"


@dataclass(frozen=True)
class SpaceFormVerdict:
    is_space_form: bool
    curvature: float | None
    model: str
    max_W2: float
    max_rhoTilde2: float
    tau_range: tuple
    tol: float
    samples: int


def classify_space_form(M: MetricField, sample_points, tol: float = 1e-8) -> SpaceFormVerdict:
    pts = np.atleast_2d(np.asarray(sample_points, dtype=float))
    if pts.shape[0] < 1:
        raise DomainError("need at least one sample point")
    frames = [curvature_frame(M, x) for x in pts]
    n = M.dim
    taus = np.array([f.tau for f in frames])
    scale = max(f.scale for f in frames)
    pointwise = [check_space_form_pointwise(f, tol) for f in frames]
    constant = all(ok for ok, _ in pointwise) and float(np.ptp(taus)) < tol * scale
    K = float(np.mean(taus)) / (n * (n - 1)) if constant else None
    if K is None:
        model = "none"
    elif abs(K) < tol * scale:
        model, K = "flat", 0.0
    else:
        model = "sphere-like" if K > 0 else "hyperbolic-like"
    return SpaceFormVerdict(
        is_space_form=constant,
        curvature=K,
        model=model,
        max_W2=float(max(abs(f.norm_W2) for f in frames)),
        max_rhoTilde2=float(max(abs(f.norm_rhoTilde2) for f in frames)),
        tau_range=(float(taus.min()), float(taus.max())),
        tol=tol,
        samples=len(frames),
    )


def hyperbolic_chi_formula(volume: float) -> float:
    """Euler characteristic of a compact quotient of curvature -1 with the given volume."""
    if not volume > 0:
        raise DomainError("volume must be positive")
    return 3.0 * volume / (4.0 * math.pi**2)


@dataclass(frozen=True)
class PointCheck:
    point: tuple
    tau: float
    balance: float
    laplacian_tau: float
    passed: bool


@dataclass(frozen=True)
class TheoremReport:
    """Outcome of :func:`run_theorem1`.

    ``eq9_slack`` is ``32 pi^2 chi - 24 vol`` (branches 2 and 3 only) and
    ``balance_residual`` is ``32 pi^2 chi - (int -4/3 |rho~|^2 dv + 24 vol)``
    on the Gauss-Bonnet grid, which vanishes when tau is identically the model
    value.
    """

    branch: int
    model: str
    hypothesis_volume_match: tuple
    volume_match_passed: bool
    hypothesis_euler: bool
    chi: float
    volume: float
    euler_slack: float
    eq9_slack: float | None
    balance_residual: float | None
    conclusion: str
    sphere_vs_projective: str | None
    failed_hypotheses: tuple
    synthetic_global_data: bool
    tolerances: dict
    notes: tuple = field(default_factory=tuple)

    @property
    def passed(self):
        return not self.failed_hypotheses


def run_theorem1(
    M: MetricField,
    branch,
    sample_points,
    gb_nodes=DEFAULT_NODES,
    tol: float = 1e-8,
    euler_tol: float = 1e-6,
    global_data=None,
    workers=None,
) -> TheoremReport:
    """Check the hypotheses for one model and report the conclusion.

    ``branch`` is 1 / 2 / 3 or ``"flat"`` / ``"sphere"`` / ``"hyperbolic"``.
    On charts that do not cover a compact manifold, ``(chi, volume)`` must come
    from ``global_data``; for branch 3 without it, the pair
    ``(hyperbolic_chi_formula(4 pi^2 / 3), 4 pi^2 / 3)`` is used and the report
    is marked synthetic.
    """
    branch = MODEL_BRANCH.get(branch, branch)
    if branch not in BRANCHES:
        raise DomainError(f"unknown branch {branch!r}")
    if M.dim != 4:
        raise DomainError("the decision procedure is specialised to n = 4")
    model, c = BRANCHES[branch]
    pts = np.atleast_2d(np.asarray(sample_points, dtype=float))
    if pts.shape[0] < 1:
        raise DomainError("need at least one sample point")
    notes = [SAMPLE_CAVEAT + f" ({pts.shape[0]} points)"]

    checks = []
    for x in pts:
        f: CurvatureFrame = curvature_frame(M, x)
        checks.append(
            PointCheck(
                point=tuple(float(v) for v in x),
                tau=f.tau,
                balance=volume_balance(f),
                laplacian_tau=f.laplacian_tau,
                passed=volumes_match_to_r4(f, c, tol),
            )
        )
    volume_ok = all(ch.passed for ch in checks)

    synthetic = False
    gb = None
    if global_data is not None:
        chi, volume = (float(v) for v in global_data)
        synthetic = True
        notes.append("chi and volume supplied externally (synthetic check)")
    elif M.covers_manifold:
        gb = euler_characteristic(M, gb_nodes, workers)
        chi, volume = gb.chi_form4, gb.volume
    elif branch == 3:
        volume = 4.0 * math.pi**2 / 3.0
        chi = hyperbolic_chi_formula(volume)
        synthetic = True
        notes.append("no compact quotient is constructed; chi and volume follow the chi = 3 vol / (4 pi^2) relation (synthetic check)")
    else:
        raise NonCoveringChartError(f"chart of {M.label} does not cover a compact manifold and no global data was given")

    if branch == 1:
        euler_ok = chi >= -euler_tol
        euler_slack = chi
        eq9_slack = None
    else:
        euler_ok, euler_slack = euler_inequality(chi, volume, euler_tol)
        eq9_slack = euler_slack

    balance_resid = None
    if gb is not None:
        expected = -4.0 / 3.0 * gb.integrals["rhoTilde2"] + (24.0 * volume if branch != 1 else 0.0)
        balance_resid = 32.0 * math.pi**2 * chi - expected

    failed = []
    if not volume_ok:
        failed.append("volume_match")
    if not euler_ok:
        failed.append("euler_inequality")

    sphere_vs_projective = None
    if failed:
        conclusion = "no conclusion: hypothesis failed (" + ", ".join(failed) + ")"
    else:
        conclusion = CONCLUSIONS[branch]
        if branch == 2:
            if volume >= SPHERE4_VOLUME * (1.0 - euler_tol):
                sphere_vs_projective = "S^4"
            else:
                sphere_vs_projective = "RP^4 (by elimination)"
                notes.append("RP^4 is inferred: volume below vol(S^4) leaves only the projective space")
        if branch == 3:
            notes.append("isometry to H^4/Gamma is the theorem's statement; no quotient is constructed")

    return TheoremReport(
        branch=branch,
        model=model,
        hypothesis_volume_match=tuple(checks),
        volume_match_passed=volume_ok,
        hypothesis_euler=bool(euler_ok),
        chi=float(chi),
        volume=float(volume),
        euler_slack=float(euler_slack),
        eq9_slack=None if eq9_slack is None else float(eq9_slack),
        balance_residual=None if balance_resid is None else float(balance_resid),
        conclusion=conclusion,
        sphere_vs_projective=sphere_vs_projective,
        failed_hypotheses=tuple(failed),
        synthetic_global_data=synthetic,
        tolerances={"tol": tol, "euler_tol": euler_tol, "gb_nodes": gb_nodes},
        notes=tuple(notes),
    )
