"""Geometry containers, angle wrapping, and detector-axis conventions."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ctalign import (
    AlignmentResult,
    ConeGeometry,
    FanGeometry,
    ProjectionStack,
    Sinogram,
    effective_detector_axis,
    unit_disk_half_width,
    wrap_angle,
)

TWO_PI = 2.0 * math.pi


class TestWrapAngle:
    def test_zero(self):
        assert wrap_angle(0.0) == 0.0

    def test_full_turn(self):
        assert wrap_angle(TWO_PI) == 0.0

    def test_negative_quarter(self):
        assert wrap_angle(-math.pi / 2) == pytest.approx(3 * math.pi / 2, abs=1e-15)

    def test_tiny_negative_stays_below_two_pi(self):
        # remainder(-1e-18, 2*pi) rounds up to 2*pi; the wrap must not leak it
        assert 0.0 <= wrap_angle(-1e-18) < TWO_PI

    def test_array_input(self):
        out = wrap_angle(np.array([0.0, TWO_PI, -math.pi]))
        assert np.allclose(out, [0.0, 0.0, math.pi])

    @pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
    def test_rejects_non_finite(self, bad):
        with pytest.raises(ValueError):
            wrap_angle(bad)

    @given(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False))
    def test_range_and_idempotence(self, beta):
        w = wrap_angle(beta)
        assert 0.0 <= w < TWO_PI
        assert wrap_angle(w) == w

    @given(st.floats(min_value=-100.0, max_value=100.0))
    def test_congruent_modulo_two_pi(self, beta):
        w = wrap_angle(beta)
        k = round((beta - w) / TWO_PI)
        assert beta - w == pytest.approx(k * TWO_PI, abs=1e-9)


class TestDetectorAxis:
    def test_three_samples(self):
        geom = FanGeometry(2.0, 3, 1.0, 4)
        assert np.array_equal(effective_detector_axis(geom), [-1.0, 0.0, 1.0])

    def test_four_samples(self):
        geom = FanGeometry(2.0, 4, 1.0, 4)
        assert np.allclose(effective_detector_axis(geom), [-1.0, -1 / 3, 1 / 3, 1.0])

    @pytest.mark.parametrize("n", [4, 5, 33, 256])
    def test_exact_antisymmetry(self, n):
        """s_i == -s_{n-1-i} bitwise, the property Yang's reversal relies on."""
        axis = effective_detector_axis(FanGeometry(2.0, n, 1.1547, 8))
        assert np.array_equal(axis, -axis[::-1])

    def test_unit_disk_half_width_r2(self):
        assert unit_disk_half_width(2.0) == pytest.approx(2.0 / math.sqrt(3.0), rel=1e-15)

    def test_unit_disk_half_width_needs_r_above_1(self):
        with pytest.raises(ValueError):
            unit_disk_half_width(1.0)

    def test_axis_is_read_only(self):
        axis = effective_detector_axis(FanGeometry(2.0, 8, 1.0, 8))
        with pytest.raises(ValueError):
            axis[0] = 99.0


class TestFanGeometry:
    def test_pixel_round_trip(self):
        geom = FanGeometry(2.0, 256, unit_disk_half_width(2.0), 256)
        for h in (-20.0, -0.5, 0.0, 13.25):
            assert geom.s_to_px(geom.px_to_s(h)) == pytest.approx(h, abs=1e-12)

    def test_beta_axis_excludes_endpoint(self):
        geom = FanGeometry(2.0, 4, 1.0, 8)
        beta = geom.beta_axis()
        assert beta[0] == 0.0
        assert beta[-1] < TWO_PI
        assert np.allclose(np.diff(beta), geom.beta_step)

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(source_radius=0.0, n_s=4, s_max=1.0, n_beta=4),
            dict(source_radius=2.0, n_s=1, s_max=1.0, n_beta=4),
            dict(source_radius=2.0, n_s=4, s_max=0.0, n_beta=4),
            dict(source_radius=2.0, n_s=4, s_max=1.0, n_beta=1),
            dict(source_radius=math.nan, n_s=4, s_max=1.0, n_beta=4),
        ],
    )
    def test_invalid_construction(self, kwargs):
        with pytest.raises(ValueError):
            FanGeometry(**kwargs)


class TestConeGeometry:
    def test_central_fan_matches_equatorial_grid(self):
        geom = ConeGeometry(2.0, 64, 32, 1.2, 0.9, 48)
        fan = geom.central_fan()
        assert fan.n_s == geom.n_u
        assert fan.n_beta == geom.n_beta
        assert fan.s_max == geom.u_max
        assert np.array_equal(fan.s_axis(), geom.u_axis())

    def test_separate_pixel_sizes(self):
        geom = ConeGeometry(2.0, 11, 5, 1.0, 1.0, 8)
        assert geom.pixel_size == pytest.approx(0.2)
        assert geom.pixel_size_v == pytest.approx(0.5)


class TestContainers:
    def test_sinogram_shape_enforced(self):
        geom = FanGeometry(2.0, 4, 1.0, 3)
        with pytest.raises(ValueError):
            Sinogram(geom, np.zeros((4, 3)))

    def test_sinogram_rejects_nan(self):
        geom = FanGeometry(2.0, 4, 1.0, 3)
        values = np.zeros((3, 4))
        values[1, 2] = math.nan
        with pytest.raises(ValueError):
            Sinogram(geom, values)

    def test_sinogram_values_frozen(self):
        geom = FanGeometry(2.0, 4, 1.0, 3)
        sino = Sinogram(geom, np.ones((3, 4)))
        with pytest.raises(ValueError):
            sino.values[0, 0] = 2.0

    def test_stack_shape_enforced(self):
        geom = ConeGeometry(2.0, 4, 3, 1.0, 1.0, 2)
        with pytest.raises(ValueError):
            ProjectionStack(geom, np.zeros((2, 4, 3)))
        ProjectionStack(geom, np.zeros((2, 3, 4)))  # (n_beta, n_v, n_u) is the contract


class TestAlignmentResult:
    def test_valid(self):
        r = AlignmentResult(h=10.0, eta=0.0, mse=1e-5, iterations=3, method="FP")
        assert r.converged

    def test_unknown_method_rejected(self):
        with pytest.raises(ValueError):
            AlignmentResult(h=0.0, eta=0.0, mse=0.0, iterations=0, method="simplex")

    def test_negative_mse_rejected(self):
        with pytest.raises(ValueError):
            AlignmentResult(h=0.0, eta=0.0, mse=-1.0, iterations=0, method="FP")

    def test_eta_domain(self):
        with pytest.raises(ValueError):
            AlignmentResult(h=0.0, eta=math.pi / 2, mse=0.0, iterations=0, method="VP-2DR")
