"""Run manifests: a flat, line-oriented ``key = value`` format.

Grammar
-------
* One ``key = value`` pair per line; surrounding whitespace is ignored.
* Blank lines are skipped, as are comment lines: ``#`` followed by whitespace
  or the end of the line. ``#key = value`` is *not* a comment, so a stray
  ``#`` in a key is reported instead of silently dropping the setting.
* Keys are case-sensitive, must be listed in :data:`KEYS`, and may appear once.
* Lists are comma-separated; ``points.coords`` separates points with ``;``.

Example::

    manifold = sphere(1)
    analyses = invariants, theorem1
    model = sphere
    points.count = 8
    points.seed = 0
    numeric.grid_nodes = 16
    output.dir = out/sphere
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ManifestError
from .metrics import CATALOG, PROFILES

ANALYSES = ("invariants", "ball_volumes", "fit_expansion", "gauss_bonnet", "classify", "theorem1")
MODELS = ("flat", "sphere", "hyperbolic")

KEYS = (
    "manifold",
    "perturbation.profile",
    "perturbation.epsilon",
    "analyses",
    "model",
    "points.coords",
    "points.count",
    "points.seed",
    "radii.values",
    "radii.min",
    "radii.max",
    "radii.count",
    "radii.log",
    "numeric.ode_tol",
    "numeric.grid_nodes",
    "numeric.sphere_rule",
    "numeric.tol",
    "numeric.euler_tol",
    "numeric.quad_threshold",
    "global.chi",
    "global.volume",
    "output.dir",
)

_MANIFOLD_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*(?:\((.*)\))?$")


@dataclass
class Numeric:
    ode_tol: float = 1e-10
    grid_nodes: int = 16
    sphere_rule: tuple = (8, 8, 16)
    tol: float = 1e-8
    euler_tol: float = 1e-6
    quad_threshold: float = 1e-4


@dataclass
class Manifest:
    manifold: str
    manifold_params: tuple
    profile: str | None = None
    epsilon: float | None = None
    analyses: tuple = ()
    model: str | None = None
    point_coords: tuple | None = None
    point_count: int = 8
    point_seed: int = 0
    radii_values: tuple | None = None
    radii_min: float = 0.05
    radii_max: float = 0.5
    radii_count: int = 10
    radii_log: bool = True
    numeric: Numeric = field(default_factory=Numeric)
    global_data: tuple | None = None
    output_dir: str = "geoball-out"
    entries: tuple = ()


def _float(value, key, line, positive=False, nonneg=False):
    try:
        v = float(value)
    except ValueError:
        raise ManifestError(f"expected a number, got {value!r}", line, key) from None
    if v != v or v in (float("inf"), float("-inf")):
        raise ManifestError("number must be finite", line, key)
    if positive and not v > 0:
        raise ManifestError(f"must be positive, got {value}", line, key)
    if nonneg and v < 0:
        raise ManifestError(f"must be non-negative, got {value}", line, key)
    return v


def _int(value, key, line, positive=True):
    try:
        v = int(value)
    except ValueError:
        raise ManifestError(f"expected an integer, got {value!r}", line, key) from None
    if positive and v <= 0:
        raise ManifestError(f"must be positive, got {value}", line, key)
    if v < 0:
        raise ManifestError(f"must be non-negative, got {value}", line, key)
    return v


def _list(value):
    return [item.strip() for item in value.split(",") if item.strip()]


def _bool(value, key, line):
    if value in ("true", "yes", "1"):
        return True
    if value in ("false", "no", "0"):
        return False
    raise ManifestError(f"expected true/false, got {value!r}", line, key)


def parse_manifest(text: str) -> Manifest:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped == "#" or (stripped[0] == "#" and stripped[1].isspace()):
            continue
        if "=" not in stripped:
            raise ManifestError("expected 'key = value'", lineno)
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key not in KEYS:
            raise ManifestError("unknown key", lineno, key)
        if key in raw:
            raise ManifestError("duplicate key", lineno, key)
        raw[key] = (value, lineno)
    if "manifold" not in raw:
        raise ManifestError("missing required key", None, "manifold")

    value, line = raw["manifold"]
    match = _MANIFOLD_RE.match(value)
    if not match or match.group(1) not in CATALOG:
        raise ManifestError(f"unknown manifold {value!r}; known: {', '.join(sorted(CATALOG))}", line, "manifold")
    params = tuple(_float(p, "manifold", line, positive=True) for p in _list(match.group(2) or ""))
    m = Manifest(manifold=match.group(1), manifold_params=params)
    m.entries = tuple((k, raw[k][0]) for k in sorted(raw, key=lambda k: raw[k][1]))

    def get(key):
        return raw[key] if key in raw else (None, None)

    value, line = get("perturbation.profile")
    if value is not None:
        if value not in PROFILES:
            raise ManifestError(f"unknown profile {value!r}", line, "perturbation.profile")
        m.profile = value
    value, line = get("perturbation.epsilon")
    if value is not None:
        if m.profile is None:
            raise ManifestError("perturbation.epsilon needs perturbation.profile", line, "perturbation.epsilon")
        m.epsilon = _float(value, "perturbation.epsilon", line, nonneg=True)

    value, line = get("analyses")
    if value is not None:
        items = _list(value)
        for item in items:
            if item not in ANALYSES:
                raise ManifestError(f"unknown analysis {item!r}", line, "analyses")
        if len(set(items)) != len(items):
            raise ManifestError("analysis listed twice", line, "analyses")
        m.analyses = tuple(items)

    value, line = get("model")
    if value is not None:
        if value not in MODELS:
            raise ManifestError(f"model must be one of {MODELS}", line, "model")
        m.model = value
    if "theorem1" in m.analyses and m.model is None:
        raise ManifestError("theorem1 needs a model", None, "model")

    value, line = get("points.coords")
    if value is not None:
        if "points.count" in raw or "points.seed" in raw:
            raise ManifestError("give either points.coords or points.count/seed", line, "points.coords")
        pts = []
        for chunk in value.split(";"):
            coords = chunk.replace(",", " ").split()
            if coords:
                pts.append(tuple(_float(c, "points.coords", line) for c in coords))
        if not pts:
            raise ManifestError("no points given", line, "points.coords")
        m.point_coords = tuple(pts)
    value, line = get("points.count")
    if value is not None:
        m.point_count = _int(value, "points.count", line)
    value, line = get("points.seed")
    if value is not None:
        m.point_seed = _int(value, "points.seed", line, positive=False)

    value, line = get("radii.values")
    if value is not None:
        if any(k in raw for k in ("radii.min", "radii.max", "radii.count", "radii.log")):
            raise ManifestError("give either radii.values or radii.min/max/count/log", line, "radii.values")
        vals = tuple(_float(v, "radii.values", line, positive=True) for v in _list(value))
        if not vals:
            raise ManifestError("no radii given", line, "radii.values")
        m.radii_values = vals
    for key, attr in (("radii.min", "radii_min"), ("radii.max", "radii_max")):
        value, line = get(key)
        if value is not None:
            setattr(m, attr, _float(value, key, line, positive=True))
    value, line = get("radii.count")
    if value is not None:
        m.radii_count = _int(value, "radii.count", line)
    value, line = get("radii.log")
    if value is not None:
        m.radii_log = _bool(value, "radii.log", line)
    if m.radii_values is None and not m.radii_min < m.radii_max:
        raise ManifestError("radii.min must be below radii.max", None, "radii.min")

    num = m.numeric
    for key in ("ode_tol", "tol", "euler_tol", "quad_threshold"):
        value, line = get("numeric." + key)
        if value is not None:
            setattr(num, key, _float(value, "numeric." + key, line, positive=True))
    value, line = get("numeric.grid_nodes")
    if value is not None:
        num.grid_nodes = _int(value, "numeric.grid_nodes", line)
    value, line = get("numeric.sphere_rule")
    if value is not None:
        sizes = tuple(_int(v, "numeric.sphere_rule", line) for v in _list(value))
        if len(sizes) != 3:
            raise ManifestError("sphere_rule needs three sizes", line, "numeric.sphere_rule")
        num.sphere_rule = sizes

    chi, chi_line = get("global.chi")
    vol, vol_line = get("global.volume")
    if (chi is None) != (vol is None):
        raise ManifestError("global.chi and global.volume go together", chi_line or vol_line, "global.chi")
    if chi is not None:
        m.global_data = (_float(chi, "global.chi", chi_line), _float(vol, "global.volume", vol_line, positive=True))

    value, line = get("output.dir")
    if value is not None:
        if not value:
            raise ManifestError("empty output directory", line, "output.dir")
        m.output_dir = value
    return m


def load_manifest(path) -> Manifest:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ManifestError(f"cannot read manifest: {exc}") from None
    return parse_manifest(text)
