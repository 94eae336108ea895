"""Curvature invariants, small geodesic ball volumes and Gauss-Bonnet on 4-manifold charts."""

import jax

# Every geometric quantity downstream needs float64; fourth derivatives lose
# most of their digits in single precision.
jax.config.update("jax_enable_x64", True)

from .errors import (  # noqa: E402
    ChartExitError,
    ConjugatePointError,
    DomainError,
    GeometryError,
    IntegrationError,
    ManifestError,
    NonCoveringChartError,
    QuadratureError,
    SingularMetricError,
)
from .metrics import (  # noqa: E402
    MetricField,
    make_conformal_perturbation,
    make_flat_torus,
    make_hyperbolic,
    make_product_spheres,
    make_round_sphere,
    metric_derivatives,
    sample_points,
)
from .curvature import CurvatureFrame, check_space_form_pointwise, christoffel, curvature_frame  # noqa: E402
from .gray import (  # noqa: E402
    BallVolumeSeries,
    GrayCoefficients,
    eval_series,
    gray_coefficients,
    model_ball_volume_exact,
    volumes_match_to_r4,
)
from .ballvol import BallVolumeEstimate, ball_volume, ball_volumes, fit_expansion, shoot_geodesic, volume_density  # noqa: E402
from .gaussbonnet import GaussBonnetResult, euler_characteristic, euler_inequality, total_volume  # noqa: E402
from .spaceform import SpaceFormVerdict, TheoremReport, classify_space_form, hyperbolic_chi_formula, run_theorem1  # noqa: E402

__version__ = "0.1.0"
