import math

import numpy as np
import pytest

import geoball as gb

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def sphere():
    return gb.make_round_sphere(1.0)


@pytest.fixture(scope="session")
def torus():
    return gb.make_flat_torus()


@pytest.fixture(scope="session")
def hyperbolic():
    return gb.make_hyperbolic(1.0)


@pytest.fixture(scope="session")
def product():
    return gb.make_product_spheres(1.0, 1.0)


@pytest.fixture(scope="session")
def perturbed_torus(torus):
    return gb.make_conformal_perturbation(torus, "cos_sum", 0.2)


@pytest.fixture(scope="session")
def catalog(sphere, torus, hyperbolic, product, perturbed_torus):
    return {
        "sphere": sphere,
        "sphere2": gb.make_round_sphere(2.0),
        "torus": torus,
        "hyperbolic": hyperbolic,
        "product": product,
        "product12": gb.make_product_spheres(1.0, 2.0),
        "perturbed_torus": perturbed_torus,
        "perturbed_sphere": gb.make_conformal_perturbation(sphere, "gaussian", 0.1),
    }


# Generic points at distance > 1.2 from every coordinate singularity.
SPHERE_EQUATOR = np.array([math.pi / 2, math.pi / 2, math.pi / 2, math.pi])
SPHERE_GENERIC = np.array([1.3, 1.7, 1.4, 2.0])
PRODUCT_GENERIC = np.array([1.2, 0.5, 1.9, 3.0])
TORUS_GENERIC = np.array([1.0, 2.0, 3.0, 4.0])
HYPERBOLIC_GENERIC = np.array([0.1, -0.2, 0.3, 0.05])

FIT_RADII = np.geomspace(0.05, 0.5, 10)
GENERIC_POINTS = {
    "sphere": SPHERE_GENERIC,
    "sphere2": SPHERE_GENERIC,
    "torus": TORUS_GENERIC,
    "hyperbolic": HYPERBOLIC_GENERIC,
    "product": PRODUCT_GENERIC,
    "product12": PRODUCT_GENERIC,
    "perturbed_torus": TORUS_GENERIC,
    "perturbed_sphere": SPHERE_GENERIC,
}


@pytest.fixture(scope="session")
def measured(catalog):
    """Lazily measured ball volumes on FIT_RADII at each catalog metric's generic point."""
    cache = {}

    def get(name):
        if name not in cache:
            M = catalog[name]
            p = GENERIC_POINTS[name]
            est = gb.ball_volumes(M, p, FIT_RADII)
            series = gb.BallVolumeSeries(gb.gray_coefficients(gb.curvature_frame(M, p)))
            cache[name] = (est, np.array([e.value for e in est]), series)
        return cache[name]

    return get
