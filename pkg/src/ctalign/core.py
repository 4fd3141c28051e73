"""Geometry and data containers shared by the simulator and the estimators.

Coordinate conventions used throughout the package:

* 2D (fan beam): the source travels the circle r*(cos b, sin b); the
  effective detector is the line through the origin spanned by
  e_s(b) = (sin b, -cos b), so the detector point of coordinate s at view
  angle b is s*e_s(b).  With this orientation every consistent sinogram
  satisfies g(s, b) = g(-s, b + pi + 2*atan(s/r)).
* 3D (cone beam): the rotation axis is y; the source is r*(cos b, 0, sin b),
  the detector plane through the origin is spanned by
  e_u(b) = (sin b, 0, -cos b) and e_v = (0, 1, 0); the v = 0 slice of a cone
  acquisition is exactly the 2D fan geometry in the (x, z) plane.
* Shifts h are expressed in effective-detector pixels; one pixel is
  2*s_max/(n_s - 1) on the endpoint-inclusive detector grid.  Conversion to
  physical units happens only at the CLI layer.
"""

import math

import numpy as np
from dataclasses import dataclass, field

TWO_PI = 2.0 * math.pi

FAN_METHODS = ("Yang", "LY", "2DR", "FP", "FP_K")
CONE_METHODS = ("VP-2DR", "VP-FP_K")


def wrap_angle(beta):
    """Reduce an angle (scalar or array, radians) to [0, 2*pi).

    Rejects non-finite input.  Idempotent: wrapping twice equals wrapping
    once.
    """
    beta = np.asarray(beta, dtype=float)
    if not np.all(np.isfinite(beta)):
        raise ValueError("wrap_angle requires finite angles")
    wrapped = np.remainder(beta, TWO_PI)
    # remainder can round back up to 2*pi for tiny negative inputs
    wrapped = np.where(wrapped >= TWO_PI, 0.0, wrapped)
    if wrapped.ndim == 0:
        return float(wrapped)
    return wrapped


def unit_disk_half_width(source_radius):
    """Detector half-width s_max = r / sqrt(r**2 - 1) tangent to the unit disk.

    This is the smallest effective detector that sees the entire unit-disk
    support; requires source_radius > 1.
    """
    r = float(source_radius)
    if not r > 1.0:
        raise ValueError("unit-disk coverage needs source_radius > 1")
    return r / math.sqrt(r * r - 1.0)


def _symmetric_axis(half_width, n):
    """Uniform endpoint-inclusive grid on [-half_width, half_width].

    Antisymmetrized so that axis[i] == -axis[n-1-i] bit-exactly; the
    estimators rely on exact reversal about the center.
    """
    axis = np.linspace(-half_width, half_width, n)
    axis = 0.5 * (axis - axis[::-1])
    axis.flags.writeable = False
    return axis


@dataclass(frozen=True)
class FanGeometry:
    """Fan-beam acquisition: source circle radius, detector and view grids.

    s samples are uniform endpoint-inclusive on [-s_max, s_max]; view angles
    are uniform on [0, 2*pi) with the endpoint excluded.
    """

    source_radius: float
    n_s: int
    s_max: float
    n_beta: int

    def __post_init__(self):
        if not (math.isfinite(self.source_radius) and self.source_radius > 0):
            raise ValueError("source_radius must be positive and finite")
        if not (math.isfinite(self.s_max) and self.s_max > 0):
            raise ValueError("s_max must be positive and finite")
        if self.n_s < 2 or self.n_beta < 2:
            raise ValueError("need at least 2 samples per axis")

    @property
    def beta_range(self):
        return (0.0, TWO_PI)

    @property
    def pixel_size(self):
        """Effective detector pixel, in s units."""
        return 2.0 * self.s_max / (self.n_s - 1)

    @property
    def beta_step(self):
        return TWO_PI / self.n_beta

    def s_axis(self):
        return _symmetric_axis(self.s_max, self.n_s)

    def beta_axis(self):
        return np.arange(self.n_beta) * self.beta_step

    def px_to_s(self, h_px):
        return h_px * self.pixel_size

    def s_to_px(self, h_s):
        return h_s / self.pixel_size


def effective_detector_axis(geom):
    """The n_s uniform s-coordinates, symmetric about 0 (s[i] == -s[n-1-i])."""
    return geom.s_axis()


@dataclass(frozen=True)
class ConeGeometry:
    """Cone-beam acquisition: flat detector (u columns, v rows) and view grid.

    u and v are sampled like the fan s-axis (endpoint-inclusive, symmetric);
    the detector center u = v = 0 is a grid point for odd counts and falls
    between the two middle samples for even counts.
    """

    source_radius: float
    n_u: int
    n_v: int
    u_max: float
    v_max: float
    n_beta: int

    def __post_init__(self):
        if not (math.isfinite(self.source_radius) and self.source_radius > 0):
            raise ValueError("source_radius must be positive and finite")
        if not (math.isfinite(self.u_max) and self.u_max > 0):
            raise ValueError("u_max must be positive and finite")
        if not (math.isfinite(self.v_max) and self.v_max > 0):
            raise ValueError("v_max must be positive and finite")
        if self.n_u < 2 or self.n_v < 2 or self.n_beta < 2:
            raise ValueError("need at least 2 samples per axis")

    @property
    def beta_range(self):
        return (0.0, TWO_PI)

    @property
    def pixel_size(self):
        """Detector pixel along u, the axis h is measured on."""
        return 2.0 * self.u_max / (self.n_u - 1)

    @property
    def pixel_size_v(self):
        return 2.0 * self.v_max / (self.n_v - 1)

    @property
    def beta_step(self):
        return TWO_PI / self.n_beta

    def u_axis(self):
        return _symmetric_axis(self.u_max, self.n_u)

    def v_axis(self):
        return _symmetric_axis(self.v_max, self.n_v)

    def beta_axis(self):
        return np.arange(self.n_beta) * self.beta_step

    def px_to_u(self, h_px):
        return h_px * self.pixel_size

    def u_to_px(self, h_u):
        return h_u / self.pixel_size

    def central_fan(self):
        """FanGeometry of the equatorial (v = 0) slice."""
        return FanGeometry(self.source_radius, self.n_u, self.u_max, self.n_beta)


def _frozen_values(values, shape, what):
    values = np.array(values, dtype=float)
    if values.shape != shape:
        raise ValueError(f"{what} values must have shape {shape}, got {values.shape}")
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{what} values must be finite")
    values.flags.writeable = False
    return values


@dataclass(frozen=True, eq=False)
class Sinogram:
    """Fan-beam line integrals on the (beta, s) grid; values[j, i] = g(s_i, b_j)."""

    geometry: FanGeometry
    values: np.ndarray

    def __post_init__(self):
        shape = (self.geometry.n_beta, self.geometry.n_s)
        object.__setattr__(self, "values", _frozen_values(self.values, shape, "Sinogram"))


@dataclass(frozen=True, eq=False)
class ProjectionStack:
    """Cone-beam projections; values[j, k, i] = g(u_i, v_k, b_j)."""

    geometry: ConeGeometry
    values: np.ndarray

    def __post_init__(self):
        shape = (self.geometry.n_beta, self.geometry.n_v, self.geometry.n_u)
        object.__setattr__(self, "values", _frozen_values(self.values, shape, "ProjectionStack"))


@dataclass(frozen=True)
class AlignmentResult:
    """Estimated misalignment and diagnostics of one estimator run.

    h is in effective pixels, eta in radians.  trace holds one
    (k, h_k, eta_k, loss_k) tuple per recorded step; for the fan estimators
    loss_k is the symmetry MSE at h_k, for variable projection it is the
    reduced loss.  converged is False when an iterative method exhausted its
    budget before meeting its tolerance.
    """

    h: float
    eta: float
    mse: float
    iterations: int
    method: str
    trace: tuple = field(default_factory=tuple)
    converged: bool = True

    def __post_init__(self):
        if self.method not in FAN_METHODS + CONE_METHODS:
            raise ValueError(f"unknown method tag {self.method!r}")
        if not self.mse >= 0.0:
            raise ValueError("mse must be nonnegative")
        if self.iterations < 0:
            raise ValueError("iterations must be nonnegative")
        if not -math.pi / 2 < self.eta < math.pi / 2:
            raise ValueError("eta must lie in (-pi/2, pi/2)")
