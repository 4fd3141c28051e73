"""Fan-beam center-of-rotation estimators built on the sinogram symmetry
condition g(s, b) = g(-s, b + pi + 2*atan(s/r)).

A detector shift h turns that identity into a translation between a
sinogram (or a profile of it) and its symmetry-reflected resampling; each
estimator recovers h as half of a cross-correlation shift:

* Yang: angular sum profile p against its reversal.
* LY:   p against the reflected profile w (linear interpolation in beta).
* 2DR:  the full sinogram against its reflected resampling, 2D correlation.
* FP:   fixed-point iteration on a single view, h_{k+1} = h_k + shift/2.
* FP_K: median of K FP runs started at views spread uniformly over beta.

All h values are in effective detector pixels.
"""

import math

import numpy as np
from dataclasses import dataclass

from .core import FAN_METHODS, AlignmentResult
from .registration import AmbiguousShiftError, sample_periodic, xcorr_shift_1d, xcorr_shift_s_2d


@dataclass(frozen=True)
class FanAlignConfig:
    """Knobs shared by the fan estimators.

    method: estimator selected by align_fan (the align_* functions themselves
    ignore it); K: number of FP starts for FP_K; max_iter/tol_h: FP iteration
    cap and convergence threshold in pixels; upsample: sub-pixel registration
    factor; beta_index: starting view of a single FP run.
    """

    method: str = "2DR"
    K: int = 10
    max_iter: int = 20
    tol_h: float = 0.01
    upsample: int = 20
    beta_index: int = 0

    def __post_init__(self):
        if self.method not in FAN_METHODS:
            raise ValueError(f"method must be one of {FAN_METHODS}")
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not self.tol_h > 0:
            raise ValueError("tol_h must be positive")
        if self.upsample < 1:
            raise ValueError("upsample must be at least 1")
        if self.beta_index < 0:
            raise ValueError("beta_index must be non-negative")


def reflected_resampling(sino, h_px=0.0):
    """The sinogram resampled through the symmetry map at candidate shift h.

    Returns the array z[j, i] = g(-s_i + 2h, b_j + pi + 2*atan((s_i - h)/r))
    with h in pixels (h = 0 gives the reflection the LY/2DR estimators
    correlate against).  Bilinear sampling, periodic in beta.
    """
    geom = sino.geometry
    h_s = geom.px_to_s(h_px)
    s = geom.s_axis()[None, :]
    beta = geom.beta_axis()[:, None]
    return sample_periodic(
        sino, -s + 2.0 * h_s, beta + math.pi + 2.0 * np.arctan((s - h_s) / geom.source_radius)
    )


def profile_p(sino):
    """Angular sum profile p_i = sum_j g(s_i, b_j); even in s for aligned data."""
    return sino.values.sum(axis=0)


def profile_w(sino):
    """Symmetry-reflected profile w_i = sum_j g(-s_i, b_j + pi + 2*atan(s_i/r)).

    For data shifted by h the profiles satisfy p(s) ~= w(s - 2h).
    """
    return reflected_resampling(sino, 0.0).sum(axis=0)


def symmetry_mse(sino, h):
    """Normalized symmetry error |g - g_reflected(h)|_F^2 / |g|_F^2.

    g_reflected is the sinogram resampled through the symmetry map at
    candidate shift h (pixels).  Zero only for perfectly consistent data;
    minimized near the true shift.
    """
    g = sino.values
    den = float(np.sum(g * g))
    if den == 0.0:
        raise ValueError("symmetry_mse undefined for an all-zero sinogram")
    ghat = reflected_resampling(sino, h)
    return float(np.sum((g - ghat) ** 2)) / den


def _result(sino, h, method, iterations, trace, converged=True, mse=None):
    if mse is None:
        mse = symmetry_mse(sino, h)
    return AlignmentResult(
        h=float(h),
        eta=0.0,
        mse=mse,
        iterations=iterations,
        method=method,
        trace=tuple(trace),
        converged=converged,
    )


def _single_shot(sino, h, method):
    mse = symmetry_mse(sino, h)
    return _result(sino, h, method, 0, [(0, float(h), 0.0, mse)], mse=mse)


def align_yang(sino, cfg=FanAlignConfig()):
    """Shift estimate from the angular sum profile against its reversal.

    The reversal is exact on the symmetric detector grid:
    reverse(p)[i] = p[n_s - 1 - i].
    """
    p = profile_p(sino)
    h = 0.5 * xcorr_shift_1d(p, p[::-1], cfg.upsample)
    return _single_shot(sino, h, "Yang")


def align_ly(sino, cfg=FanAlignConfig()):
    """Shift estimate from the angular sum profile against the reflected
    profile w, which is translated by 2h relative to p."""
    p = profile_p(sino)
    w = profile_w(sino)
    h = 0.5 * xcorr_shift_1d(p, w, cfg.upsample)
    return _single_shot(sino, h, "LY")


def align_2dr(sino, cfg=FanAlignConfig()):
    """Shift estimate from the 2D correlation of the sinogram with its
    symmetry-reflected resampling; only the s component of the peak is used,
    the beta component is discarded."""
    z = reflected_resampling(sino, 0.0)
    h = 0.5 * xcorr_shift_s_2d(sino.values, z, cfg.upsample)
    return _single_shot(sino, h, "2DR")


def fixed_point_shift(lam, make_pi, upsample, tol_h, max_iter):
    """Generic fixed-point driver h_{k+1} = h_k + shift(lam, pi(h_k)) / 2.

    lam is the reference view; make_pi(h_px) produces the symmetry-reflected
    view at candidate shift h.  Returns (h, iterations, history, converged)
    with history the list of successive h_k (pixels).  Convergence when the
    update magnitude drops below tol_h.
    """
    h = 0.0
    history = []
    converged = False
    iterations = 0
    for k in range(1, max_iter + 1):
        step = 0.5 * xcorr_shift_1d(lam, make_pi(h), upsample)
        h_new = h + step
        history.append(h_new)
        iterations = k
        if abs(h_new - h) < tol_h:
            h = h_new
            converged = True
            break
        h = h_new
    return h, iterations, history, converged


def _fan_pi_factory(sino, beta_index):
    geom = sino.geometry
    s = geom.s_axis()
    beta0 = beta_index * geom.beta_step

    def make_pi(h_px):
        h_s = geom.px_to_s(h_px)
        return sample_periodic(
            sino, -s + 2.0 * h_s, beta0 + math.pi + 2.0 * np.arctan((s - h_s) / geom.source_radius)
        )

    return make_pi


def align_fp(sino, cfg=FanAlignConfig()):
    """Fixed-point shift estimate from the single view at cfg.beta_index.

    The reference Lambda_i = g(s_i, b_0) is computed once; each iteration
    correlates it against Pi_k(s_i) = g(-s_i + 2h_k, b_0 + pi +
    2*atan((s_i - h_k)/r)) and advances h by half the measured shift.
    Non-convergence within max_iter is flagged on the result, not fatal.
    """
    if not 0 <= cfg.beta_index < sino.geometry.n_beta:
        raise ValueError("beta_index outside the view range")
    lam = sino.values[cfg.beta_index]
    make_pi = _fan_pi_factory(sino, cfg.beta_index)
    h, iterations, history, converged = fixed_point_shift(
        lam, make_pi, cfg.upsample, cfg.tol_h, cfg.max_iter
    )
    trace = [(k + 1, hk, 0.0, symmetry_mse(sino, hk)) for k, hk in enumerate(history)]
    return _result(sino, h, "FP", iterations, trace, converged, mse=trace[-1][3])


def fp_start_indices(n_beta, K):
    """The K FP starting views, uniformly spread: round(j*n_beta/K) mod n_beta."""
    return [int(round(j * n_beta / K)) % n_beta for j in range(K)]


def align_fp_k(sino, cfg=FanAlignConfig()):
    """Median of K fixed-point runs started at views spread uniformly in beta.

    A run that fails outright (zero correlation on a defective view) is
    excluded from the median; if every run fails the error propagates.  For
    even counts the lower-middle order statistic is taken, avoiding an
    average of two modes.  iterations reports the largest per-run count.
    """
    n_beta = sino.geometry.n_beta
    if cfg.K > n_beta:
        raise ValueError("K cannot exceed the number of views")
    estimates = []
    trace = []
    iterations = 0
    all_converged = True
    for j, idx in enumerate(fp_start_indices(n_beta, cfg.K)):
        lam = sino.values[idx]
        make_pi = _fan_pi_factory(sino, idx)
        try:
            h_j, iters, _, conv = fixed_point_shift(lam, make_pi, cfg.upsample, cfg.tol_h, cfg.max_iter)
        except AmbiguousShiftError:
            continue
        estimates.append(h_j)
        trace.append((j, h_j, 0.0, symmetry_mse(sino, h_j)))
        iterations = max(iterations, iters)
        all_converged = all_converged and conv
    if not estimates:
        raise AmbiguousShiftError("every fixed-point start failed")
    ordered = sorted(estimates)
    h = ordered[(len(ordered) - 1) // 2]
    mse = next(m for _, hj, _, m in trace if hj == h)
    return _result(sino, h, "FP_K", iterations, trace, all_converged, mse=mse)


_ESTIMATORS = {
    "Yang": align_yang,
    "LY": align_ly,
    "2DR": align_2dr,
    "FP": align_fp,
    "FP_K": align_fp_k,
}


def align_fan(sino, cfg=FanAlignConfig()):
    """Run the estimator selected by cfg.method."""
    return _ESTIMATORS[cfg.method](sino, cfg)
