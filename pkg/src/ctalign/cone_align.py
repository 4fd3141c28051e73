"""Cone-beam (h, eta) estimation by variable projection.

The in-plane rotation eta and shift h of the detector are recovered from the
least-squares mismatch of two resamplings of the projection stack along the
tilted detector axis:

    Lambda_eta g(q, b) = g(q cos(eta), -q sin(eta), b)
    Pi_h_eta  g(q, b) = g((-q + 2h)cos(eta), (q - 2h)sin(eta),
                          b + pi + 2*atan((q - h)/r))

At the true misalignment both agree (the fan symmetry condition along the
true horizontal axis), so L(h, eta) = |Lambda - Pi|^2 is minimized there.
The inner variable h is eliminated by a fan-type shift solve at fixed eta
(2DR or median-of-K fixed point on the tilted pair); the reduced loss
L(h(eta), eta) is descended in eta with finite-difference gradients and
Armijo backtracking (contraction 1/2).
"""

import math

import numpy as np
from dataclasses import dataclass, field

from .core import AlignmentResult, Sinogram
from .fan_align import FanAlignConfig, fixed_point_shift, fp_start_indices, symmetry_mse
from .registration import AmbiguousShiftError, sample_detector, xcorr_shift_s_2d

ETA_BOUND = math.radians(45.0)  # far beyond any physical detector mounting error

INNER_METHODS = ("2dr", "fp_k")


@dataclass(frozen=True)
class VPConfig:
    """Variable-projection knobs.

    inner_method selects the shift solver on the tilted fan pair; eta0 is
    the starting angle (radians); delta_eta the finite-difference step;
    gamma0/armijo_c/contraction control the backtracking line search
    (contraction is fixed at 1/2); max_outer/tol_eta bound the descent.
    inner carries the fan-solver configuration.
    """

    inner_method: str = "2dr"
    eta0: float = 0.0
    delta_eta: float = 0.001
    gamma0: float = 1.0
    armijo_c: float = 1e-4
    contraction: float = 0.5
    max_outer: int = 20
    tol_eta: float = 1e-4
    max_backtrack: int = 30
    inner: FanAlignConfig = field(default_factory=FanAlignConfig)

    def __post_init__(self):
        if self.inner_method not in INNER_METHODS:
            raise ValueError(f"inner_method must be one of {INNER_METHODS}")
        if not self.delta_eta > 0:
            raise ValueError("delta_eta must be positive")
        if not 0.0 < self.armijo_c < 1.0:
            raise ValueError("armijo_c must lie in (0, 1)")
        if self.contraction != 0.5:
            raise ValueError("contraction factor is fixed at 1/2")
        if self.max_outer < 1 or self.max_backtrack < 1:
            raise ValueError("iteration caps must be at least 1")
        if not self.tol_eta > 0:
            raise ValueError("tol_eta must be positive")
        if not -ETA_BOUND <= self.eta0 <= ETA_BOUND:
            raise ValueError("eta0 outside the search domain")


def lambda_eta(stack, h, eta):
    """Stack resampled along the tilted horizontal axis: (q_i, b_j) grid array
    of g(q cos(eta), -q sin(eta), b).  Free of h in this parameterization
    (the argument is accepted for signature symmetry with pi_h_eta).
    """
    geom = stack.geometry
    q = geom.u_axis()[None, :]
    beta = geom.beta_axis()[:, None]
    return sample_detector(stack, q * math.cos(eta), -q * math.sin(eta), beta)


def pi_h_eta(stack, h, eta):
    """Symmetry-reflected tilted resampling at candidate shift h (pixels):
    (q_i, b_j) grid array of g((-q + 2h)cos(eta), (q - 2h)sin(eta),
    b + pi + 2*atan((q - h)/r)).
    """
    geom = stack.geometry
    h_u = geom.px_to_u(h)
    q = geom.u_axis()[None, :]
    beta = geom.beta_axis()[:, None]
    x = -q + 2.0 * h_u
    angle = beta + math.pi + 2.0 * np.arctan((q - h_u) / geom.source_radius)
    return sample_detector(stack, x * math.cos(eta), -x * math.sin(eta), angle)


def loss_L(stack, h, eta):
    """Sum of squared differences of the two tilted resamplings at (h, eta)."""
    lam = lambda_eta(stack, h, eta)
    pi = pi_h_eta(stack, h, eta)
    return float(np.sum((lam - pi) ** 2))


def _cone_pi_factory(stack, eta, beta_index):
    geom = stack.geometry
    q = geom.u_axis()
    beta0 = beta_index * geom.beta_step
    cose, sine = math.cos(eta), math.sin(eta)

    def make_pi(h_px):
        h_u = geom.px_to_u(h_px)
        x = -q + 2.0 * h_u
        angle = beta0 + math.pi + 2.0 * np.arctan((q - h_u) / geom.source_radius)
        return sample_detector(stack, x * cose, -x * sine, angle)

    return make_pi


def inner_h(stack, eta, cfg=VPConfig()):
    """Shift (pixels) minimizing the tilted-pair mismatch at fixed eta.

    2DR correlates lambda_eta against pi_h_eta at h = 0 (their q-shift is
    2h); fp_k runs the fixed-point iteration on K single tilted views and
    takes the median.
    """
    geom = stack.geometry
    if cfg.inner_method == "2dr":
        a = lambda_eta(stack, 0.0, eta)
        b = pi_h_eta(stack, 0.0, eta)
        return 0.5 * xcorr_shift_s_2d(a, b, cfg.inner.upsample)
    q = geom.u_axis()
    estimates = []
    for idx in fp_start_indices(geom.n_beta, cfg.inner.K):
        lam = sample_detector(stack, q * math.cos(eta), -q * math.sin(eta), idx * geom.beta_step)
        make_pi = _cone_pi_factory(stack, eta, idx)
        try:
            h_j, _, _, _ = fixed_point_shift(
                lam, make_pi, cfg.inner.upsample, cfg.inner.tol_h, cfg.inner.max_iter
            )
        except AmbiguousShiftError:
            continue
        estimates.append(h_j)
    if not estimates:
        raise AmbiguousShiftError("every fixed-point start failed")
    ordered = sorted(estimates)
    return ordered[(len(ordered) - 1) // 2]


def _reduced_loss(stack, eta, cfg, cache):
    if eta not in cache:
        h = inner_h(stack, eta, cfg)
        cache[eta] = (h, loss_L(stack, h, eta))
    return cache[eta]


def _gradient(stack, eta, cfg, cache):
    """Finite-difference gradient of the reduced loss; central inside the
    search domain, one-sided at its edges."""
    d = cfg.delta_eta
    lo, hi = eta - d, eta + d
    if hi > ETA_BOUND:
        _, l0 = _reduced_loss(stack, eta, cfg, cache)
        _, ll = _reduced_loss(stack, lo, cfg, cache)
        return (l0 - ll) / d, "backward"
    if lo < -ETA_BOUND:
        _, l0 = _reduced_loss(stack, eta, cfg, cache)
        _, lh = _reduced_loss(stack, hi, cfg, cache)
        return (lh - l0) / d, "forward"
    _, ll = _reduced_loss(stack, lo, cfg, cache)
    _, lh = _reduced_loss(stack, hi, cfg, cache)
    return (lh - ll) / (2.0 * d), "central"


def reduced_gradient(stack, eta, cfg=VPConfig()):
    """d/d eta of the reduced loss L(h(eta), eta) by finite differences.

    Central stencil with step cfg.delta_eta; falls back to a one-sided
    stencil when eta sits within one step of the search-domain edge.
    """
    return _gradient(stack, eta, cfg, {})[0]


def variable_projection(stack, cfg=VPConfig()):
    """Joint (h, eta) estimate: gradient descent on the reduced loss.

    Each outer iteration re-solves the inner shift at the probed angles
    (results are cached per eta; the inner solve is deterministic), takes a
    finite-difference gradient step and backtracks with factor 1/2 until the
    Armijo sufficient-decrease test passes.  Descent stops when the eta
    update drops below tol_eta or the iteration cap is reached; backtracking
    exhaustion returns the best point seen, flagged non-converged.

    The result's mse is the fan symmetry MSE of the central tilted fan
    extracted at the final eta.
    """
    cache = {}
    eta = min(max(cfg.eta0, -ETA_BOUND), ETA_BOUND)
    h, current = _reduced_loss(stack, eta, cfg, cache)
    trace = [(0, h, eta, current)]
    gamma0 = cfg.gamma0
    converged = False
    iterations = 0
    for k in range(1, cfg.max_outer + 1):
        grad, _ = _gradient(stack, eta, cfg, cache)
        if grad == 0.0:
            converged = True
            break
        gamma = gamma0
        accepted = False
        for depth in range(cfg.max_backtrack):
            eta_new = min(max(eta - gamma * grad, -ETA_BOUND), ETA_BOUND)
            h_new, loss_new = _reduced_loss(stack, eta_new, cfg, cache)
            if loss_new <= current - cfg.armijo_c * gamma * grad * grad:
                accepted = True
                break
            gamma *= cfg.contraction
        if not accepted:
            break
        if depth > 10:
            gamma0 = gamma  # warm-start later searches once the scale is known
        step = abs(eta_new - eta)
        eta, h, current = eta_new, h_new, loss_new
        iterations = k
        trace.append((k, h, eta, current))
        if step < cfg.tol_eta:
            converged = True
            break
    method = "VP-2DR" if cfg.inner_method == "2dr" else "VP-FP_K"
    geom = stack.geometry
    fan = Sinogram(geom.central_fan(), lambda_eta(stack, 0.0, eta))
    return AlignmentResult(
        h=float(h),
        eta=float(eta),
        mse=symmetry_mse(fan, h),
        iterations=iterations,
        method=method,
        trace=tuple(trace),
        converged=converged,
    )
