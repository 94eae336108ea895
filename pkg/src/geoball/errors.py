"""Exception hierarchy.

``GeometryError`` subclasses are numerical or domain failures (CLI exit 3);
``ManifestError`` is an input problem (CLI exit 1).
"""


class GeometryError(RuntimeError):
    pass


class DomainError(GeometryError, ValueError):
    """Point outside the chart's open domain, or invalid metric parameters."""


class SingularMetricError(GeometryError):
    pass


class NonCoveringChartError(GeometryError):
    """A global integral was requested on a chart that does not cover a compact manifold."""


class ChartExitError(GeometryError):
    pass


class ConjugatePointError(GeometryError):
    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class IntegrationError(GeometryError):
    """The ODE integrator failed to complete a step."""


class QuadratureError(GeometryError):
    """Quadrature error estimate above the accepted threshold, or an ill-conditioned fit."""


class ManifestError(ValueError):
    def __init__(self, message, line=None, key=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.line = line
        self.key = key
