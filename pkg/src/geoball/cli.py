"""Manifest-driven command line front end.

Exit status: 0 all checks passed, 1 manifest error, 2 a theorem hypothesis
failed, 3 numerical or I/O failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .ballvol import ball_volumes
from .curvature import curvature_frame
from .errors import DomainError, GeometryError, ManifestError
from .gaussbonnet import euler_characteristic
from .gray import BallVolumeSeries, eval_series, fit_series, gray_coefficients
from .manifest import Manifest, load_manifest
from .metrics import CATALOG, PROFILES, make_metric, sample_points
from .quadrature import s3_product_rule
from .spaceform import classify_space_form, run_theorem1

EXIT_OK, EXIT_PARSE, EXIT_HYPOTHESIS, EXIT_NUMERIC = 0, 1, 2, 3

POINT_COLUMNS = ("tau", "norm_R2", "norm_rho2", "norm_W2", "norm_rhoTilde2", "laplacian_tau", "a2", "a4")
RADIUS_COLUMNS = ("r", "V_measured", "V_series", "residual")


def fmt(x) -> str:
    if x is None:
        return "NA"
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


@dataclass
class Report:
    summary: list = field(default_factory=list)
    point_rows: list = field(default_factory=list)
    point_header: tuple = ()
    radius_rows: list = field(default_factory=list)
    hypothesis_rows: list = field(default_factory=list)
    hypothesis_header: tuple = ()
    hypothesis_failed: bool = False

    def line(self, key, value):
        self.summary.append(f"{key} = {value if isinstance(value, str) else fmt(value)}")


def _points(man: Manifest, M):
    if man.point_coords is not None:
        pts = np.array(man.point_coords, dtype=float)
        if pts.shape[1] != M.dim:
            raise ManifestError(f"points must have {M.dim} coordinates", None, "points.coords")
        for x in pts:
            if not M.contains(x):
                raise ManifestError(f"point {x.tolist()} is outside the chart domain", None, "points.coords")
        return pts
    return sample_points(M, man.point_count, man.point_seed)


def _radii(man: Manifest):
    if man.radii_values is not None:
        return np.array(man.radii_values, dtype=float)
    if man.radii_log:
        return np.geomspace(man.radii_min, man.radii_max, man.radii_count)
    return np.linspace(man.radii_min, man.radii_max, man.radii_count)


def build_report(man: Manifest) -> Report:
    try:
        M = make_metric(man.manifold, man.manifold_params, man.profile, man.epsilon)
    except (DomainError, TypeError) as exc:
        raise ManifestError(str(exc), None, "manifold") from None
    pts = _points(man, M)
    radii = _radii(man)
    num = man.numeric
    rule = s3_product_rule(*num.sphere_rule)
    rep = Report()

    rep.summary.append("[provenance]")
    rep.line("tool", f"geoball {__version__}")
    rep.line("manifold", M.label)
    if man.point_coords is None:
        rep.line("points", f"{len(pts)} uniform samples, seed {man.point_seed}")
    else:
        rep.line("points", f"{len(pts)} explicit")
    for key, value in man.entries:
        rep.line("manifest." + key, value)

    volumes = None
    for analysis in man.analyses:
        rep.summary.append("")
        rep.summary.append(f"[{analysis}]")
        if analysis == "invariants":
            rep.point_header = tuple(f"x{i + 1}" for i in range(M.dim)) + POINT_COLUMNS
            for x in pts:
                f = curvature_frame(M, x)
                gc = gray_coefficients(f)
                vals = [f.tau, f.norm_R2, f.norm_rho2, f.norm_W2, f.norm_rhoTilde2, f.laplacian_tau, gc.a2, gc.a4_original]
                rep.point_rows.append([fmt(v) for v in list(x) + vals])
            rep.line("rows", len(pts))
        elif analysis in ("ball_volumes", "fit_expansion"):
            if volumes is None:
                est = ball_volumes(M, pts[0], radii, rule, num.ode_tol, quad_threshold=num.quad_threshold)
                volumes = np.array([e.value for e in est])
                series = BallVolumeSeries(gray_coefficients(curvature_frame(M, pts[0])))
                for r, e in zip(radii, est):
                    vs = eval_series(series, r)
                    rep.radius_rows.append([fmt(r), fmt(e.value), fmt(vs), fmt(e.value - vs)])
                rep.line("center", " ".join(fmt(v) for v in pts[0]))
                rep.line("directions", len(rule))
                rep.line("max_quadrature_error", max(e.quadrature_error_estimate for e in est))
            if analysis == "fit_expansion":
                fit = fit_series(radii, volumes, M.dim)
                gc = gray_coefficients(curvature_frame(M, pts[0]), legacy=True)
                rep.line("fitted_a2", fit.a2)
                rep.line("fitted_a4", fit.a4)
                rep.line("expected_a2", gc.a2)
                rep.line("expected_a4", gc.a4_original)
                rep.line("expected_a4_rewritten", gc.a4_rewritten)
                rep.line("fit_condition", fit.condition)
                rep.line("fit_stderr_a2", fit.stderr[0])
                rep.line("fit_stderr_a4", fit.stderr[1])
                # Diagnostic only: the tau^2 coefficient 2/(n(n-1)) in the Weyl form.
                rep.line("legacy_a4", gc.a4_legacy)
                rep.line("legacy_a4_minus_fitted", gc.a4_legacy - fit.a4)
                rep.line("original_a4_minus_fitted", gc.a4_original - fit.a4)
        elif analysis == "gauss_bonnet":
            gb = euler_characteristic(M, num.grid_nodes)
            rep.line("chi_form4", gb.chi_form4)
            rep.line("chi_form7", gb.chi_form7)
            rep.line("volume", gb.volume)
            rep.line("grid", "x".join(str(k) for k in gb.grid_spec))
            rep.line("error_estimate", gb.error_estimate)
            rep.line("saturation_slack", 32 * np.pi**2 * gb.chi_form4 - 24 * gb.volume)
        elif analysis == "classify":
            v = classify_space_form(M, pts, num.tol)
            rep.line("is_space_form", v.is_space_form)
            rep.line("curvature", v.curvature)
            rep.line("model", v.model)
            rep.line("max_W2", v.max_W2)
            rep.line("max_rhoTilde2", v.max_rhoTilde2)
            rep.line("tau_min", v.tau_range[0])
            rep.line("tau_max", v.tau_range[1])
        elif analysis == "theorem1":
            tr = run_theorem1(M, man.model, pts, num.grid_nodes, num.tol, num.euler_tol, man.global_data)
            rep.line("branch", tr.branch)
            rep.line("model", tr.model)
            rep.line("hypothesis.volume_match", "pass" if tr.volume_match_passed else "FAIL")
            rep.line("hypothesis.euler_inequality", "pass" if tr.hypothesis_euler else "FAIL")
            rep.line("chi", tr.chi)
            rep.line("volume", tr.volume)
            rep.line("euler_slack", tr.euler_slack)
            rep.line("saturation_slack", tr.eq9_slack)
            rep.line("balance_residual", tr.balance_residual)
            rep.line("synthetic_global_data", tr.synthetic_global_data)
            rep.line("failed_hypotheses", ", ".join(tr.failed_hypotheses) or "none")
            rep.line("conclusion", tr.conclusion)
            rep.line("sphere_vs_projective", tr.sphere_vs_projective or "NA")
            for note in tr.notes:
                rep.line("note", note)
            rep.hypothesis_header = tuple(f"x{i + 1}" for i in range(M.dim)) + ("tau", "balance", "laplacian_tau", "volume_match")
            for ch in tr.hypothesis_volume_match:
                rep.hypothesis_rows.append([fmt(v) for v in ch.point] + [fmt(ch.tau), fmt(ch.balance), fmt(ch.laplacian_tau), "pass" if ch.passed else "FAIL"])
            rep.hypothesis_failed = rep.hypothesis_failed or not tr.passed
    rep.summary.append("")
    rep.line("status", "hypothesis_failed" if rep.hypothesis_failed else "ok")
    return rep


def _write_tsv(path: Path, header, rows):
    lines = ["\t".join(header)] + ["\t".join(r) for r in rows]
    path.write_bytes(("\n".join(lines) + "\n").encode("utf-8"))


def emit_tables(report: Report, out_dir) -> list[Path]:
    """Write ``summary.txt`` plus one TSV per populated table; returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    summary = out / "summary.txt"
    summary.write_bytes(("\n".join(report.summary) + "\n").encode("utf-8"))
    written.append(summary)
    if report.point_rows:
        written.append(out / "points.tsv")
        _write_tsv(written[-1], report.point_header, report.point_rows)
    if report.radius_rows:
        written.append(out / "radii.tsv")
        _write_tsv(written[-1], RADIUS_COLUMNS, report.radius_rows)
    if report.hypothesis_rows:
        written.append(out / "hypotheses.tsv")
        _write_tsv(written[-1], report.hypothesis_header, report.hypothesis_rows)
    return written


def run_manifest(path, out=None) -> int:
    try:
        man = load_manifest(path)
    except ManifestError as exc:
        print(f"{path}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        report = build_report(man)
    except ManifestError as exc:
        print(f"{path}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except GeometryError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    try:
        emit_tables(report, out if out is not None else man.output_dir)
    except OSError as exc:
        print(f"cannot write report: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_HYPOTHESIS if report.hypothesis_failed else EXIT_OK


def list_manifolds() -> str:
    lines = ["manifolds:"]
    lines += [f"  {usage}" for _, usage in CATALOG.values()]
    lines.append("perturbation profiles (perturbation.profile / perturbation.epsilon):")
    lines += [f"  {name}" for name in PROFILES]
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="geoball", description="Run a geoball manifest.")
    parser.add_argument("manifest", nargs="?", help="path to the run manifest")
    parser.add_argument("--out", help="output directory (overrides output.dir)")
    parser.add_argument("--check", action="store_true", help="parse the manifest and exit")
    parser.add_argument("--list-manifolds", action="store_true", help="list catalog manifolds and exit")
    args = parser.parse_args(argv)
    if args.list_manifolds:
        print(list_manifolds())
        return EXIT_OK
    if args.manifest is None:
        parser.error("a manifest path is required")
    if args.check:
        try:
            load_manifest(args.manifest)
        except ManifestError as exc:
            print(f"{args.manifest}: {exc}", file=sys.stderr)
            return EXIT_PARSE
        print("ok")
        return EXIT_OK
    return run_manifest(args.manifest, args.out)


if __name__ == "__main__":
    sys.exit(main())
