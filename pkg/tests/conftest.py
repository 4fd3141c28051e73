"""Shared simulation fixtures.

The reference fan protocol is 256 detector samples x 256 views, source
radius 2, detector half-width tangent to the unit disk, a seeded 30-void
phantom, and a 10-pixel shift; the cone protocol is its 128^3 analogue with
a 1-degree detector rotation on top.  Both are session-scoped: every test
that needs realistic data reuses the same arrays.
"""

import math

import pytest

from ctalign import (
    ConeGeometry,
    FanGeometry,
    cone_project,
    fan_project,
    make_disk_phantom,
    make_sphere_phantom,
    unit_disk_half_width,
)

SOURCE_RADIUS = 2.0
H_TRUE = 10.0
ETA_TRUE = math.radians(1.0)


def fan_geometry(n):
    return FanGeometry(SOURCE_RADIUS, n, unit_disk_half_width(SOURCE_RADIUS), n)


def cone_geometry(n):
    width = unit_disk_half_width(SOURCE_RADIUS)
    return ConeGeometry(SOURCE_RADIUS, n, n, width, width, n)


@pytest.fixture(scope="session")
def ref_phantom():
    return make_disk_phantom(1, n_disks=30)


@pytest.fixture(scope="session")
def ref_geom():
    return fan_geometry(256)


@pytest.fixture(scope="session")
def ref_sino(ref_phantom, ref_geom):
    """Misaligned reference sinogram: h = 10 px, no instability."""
    return fan_project(ref_phantom, ref_geom, h=H_TRUE)


@pytest.fixture(scope="session")
def aligned_sino(ref_phantom, ref_geom):
    return fan_project(ref_phantom, ref_geom, h=0.0)


@pytest.fixture(scope="session")
def ref_stack():
    """Misaligned reference stack: h = 10 px, eta = 1 degree, 128^3."""
    phantom = make_sphere_phantom(1, n_spheres=20)
    return cone_project(phantom, cone_geometry(128), h=H_TRUE, eta=ETA_TRUE)
