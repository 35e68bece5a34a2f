"""Families of barrier-degenerate diffusion coefficients.

Every mode shares the polynomial profile g(x) = (1 - x^2)^m and carries an
amplitude sigma_k = sigma0 * (k+1)^(-gamma):

    h_k(x) = sigma_k * g(x),   k = 0 .. K-1.

With m = s0 + 2 the family vanishes at +-1 fast enough to dominate both the
curvature singularity of the potential and the barrier weights of order s0,
and all derivative sup-norms are computable from one polynomial.  Mode k is
driven by its own scalar Brownian motion; increments are sampled by the
caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import Polynomial

from .errors import NormOverflowError, ParameterError
from .potential import CheckResult, LogPotential, chebyshev_samples


@lru_cache(maxsize=None)
def _profile_derivative(m: int, order: int) -> Polynomial:
    poly = Polynomial([1.0])
    base = Polynomial([1.0, 0.0, -1.0])  # 1 - x^2
    for _ in range(m):
        poly = poly * base
    for _ in range(order):
        poly = poly.deriv()
    return poly


def _sup_abs_on_interval(fn, n_grid: int = 100_001) -> float:
    """sup |fn| on [-1, 1]: dense grid, then golden-section refinement around
    the grid argmax."""
    xs = np.linspace(-1.0, 1.0, n_grid)
    vals = np.abs(fn(xs))
    i = int(np.argmax(vals))
    best = float(vals[i])
    lo = xs[max(i - 1, 0)]
    hi = xs[min(i + 1, n_grid - 1)]
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = abs(float(fn(c))), abs(float(fn(d)))
    for _ in range(80):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = abs(float(fn(c)))
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = abs(float(fn(d)))
    return max(best, fc, fd)


@lru_cache(maxsize=None)
def _profile_sup(m: int, order: int) -> float:
    poly = _profile_derivative(m, order)
    return _sup_abs_on_interval(poly)


@dataclass(frozen=True, eq=False)
class NoiseFamily:
    """Truncated noise family with shared profile (1 - x^2)^vanish_order.

    ``vanish_order`` defaults to s0 + 2 in :func:`make_polynomial_family`;
    constructing it directly with a different order deliberately breaks the
    degeneracy contract (useful for falsification tests).
    """

    s0: int
    K: int
    sigma0: float
    gamma: float
    vanish_order: int
    sigmas: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.s0 < 1 or int(self.s0) != self.s0:
            raise ParameterError("s0 must be an integer >= 1")
        if self.K < 1:
            raise ParameterError("K must be >= 1")
        if self.sigma0 < 0.0:
            raise ParameterError("sigma0 must be nonnegative")
        if self.gamma <= 0.5:
            raise ParameterError("gamma must exceed 1/2 for square-summability")
        if self.vanish_order < 1:
            raise ParameterError("vanish_order must be >= 1")
        if len(self.sigmas) != self.K:
            raise ParameterError("sigmas must have length K")

    def profile(self, x):
        """g(x) = (1 - x^2)^m evaluated in factored form (no cancellation
        near the endpoints)."""
        x = np.asarray(x, dtype=float)
        return ((1.0 - x) * (1.0 + x)) ** self.vanish_order

    def h(self, k: int, x):
        if not 0 <= k < self.K:
            raise ParameterError(f"mode index {k} outside 0..{self.K - 1}")
        return self.sigmas[k] * self.profile(x)

    def h_derivative(self, k: int, order: int, x):
        if not 0 <= k < self.K:
            raise ParameterError(f"mode index {k} outside 0..{self.K - 1}")
        poly = _profile_derivative(self.vanish_order, order)
        return self.sigmas[k] * poly(np.asarray(x, dtype=float))

    def sigma_sq_sum(self) -> float:
        return float(np.sum(self.sigmas**2))


def make_polynomial_family(s0: int, K: int, sigma0: float, gamma: float) -> NoiseFamily:
    """Family h_k(x) = sigma0*(k+1)^(-gamma) * (1 - x^2)^(s0+2)."""
    if s0 < 1:
        raise ParameterError("s0 must be >= 1")
    if K < 1:
        raise ParameterError("K must be >= 1")
    if sigma0 < 0.0:
        raise ParameterError("sigma0 must be nonnegative")
    if gamma <= 0.5:
        raise ParameterError("gamma must exceed 1/2")
    k = np.arange(K, dtype=float)
    sigmas = sigma0 * (k + 1.0) ** (-gamma)
    return NoiseFamily(s0=int(s0), K=int(K), sigma0=float(sigma0), gamma=float(gamma),
                       vanish_order=int(s0) + 2, sigmas=sigmas)


@dataclass(frozen=True)
class NoiseConstants:
    c1: float
    c2: float


def constants(f: NoiseFamily, p: LogPotential) -> NoiseConstants:
    """Structural noise constants.

    c1^2 sums, over modes, the squared W^{1,inf} norm of h_k plus the sup of
    |F'' h_k^2|; c2^2 sums the squared W^{1+2*s0,inf} norms.  Sobolev sup
    norms take the max over derivative orders.  Since the profile is shared,
    per-mode norms are the profile norms scaled by sigma_k, so both sums
    factor through sum(sigma_k^2).
    """
    m = f.vanish_order
    s2 = f.sigma_sq_sum()
    w1 = max(_profile_sup(m, 0), _profile_sup(m, 1))

    def fpp_g2(x):
        t = (1.0 - np.asarray(x, dtype=float)) * (1.0 + np.asarray(x, dtype=float))
        return t ** (2 * m - 1) * (p.theta - p.theta0 * t)

    fgg = _sup_abs_on_interval(fpp_g2)
    w_high = max(_profile_sup(m, j) for j in range(0, 2 * f.s0 + 2))
    c1 = math.sqrt(s2 * (w1 * w1 + fgg))
    c2 = math.sqrt(s2) * w_high
    if not (math.isfinite(c1) and math.isfinite(c2)):
        raise NormOverflowError(f"non-finite noise constants c1={c1}, c2={c2}")
    return NoiseConstants(c1=c1, c2=c2)


def taylor_bound_check(f: NoiseFamily, k: int, n_samples: int = 4001) -> CheckResult:
    """Check |h_k(x)| <= M_k/(s0+2)! * min(|x-1|, |x+1|)^(s0+2) on a clustered
    sample, with M_k = sup |h_k^(s0+2)|.

    The bound encodes vanishing of order s0+2 at both endpoints; a family
    whose profile vanishes to lower order fails it near +-1.
    """
    if not 0 <= k < f.K:
        raise ParameterError(f"mode index {k} outside 0..{f.K - 1}")
    order = f.s0 + 2
    # Derivatives beyond the polynomial degree vanish identically.
    if order > 2 * f.vanish_order:
        m_k = 0.0
    else:
        m_k = f.sigmas[k] * _profile_sup(f.vanish_order, order)
    coeff = m_k / math.factorial(order)
    xs = chebyshev_samples(n_samples)
    hv = np.abs(f.h(k, xs))
    dist = np.minimum(np.abs(xs - 1.0), np.abs(xs + 1.0))
    bound = coeff * dist**order
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(bound > 0.0, hv / bound, np.where(hv > 0.0, np.inf, 0.0))
    max_ratio = float(np.max(ratios)) if len(ratios) else 0.0
    passed = max_ratio <= 1.0 + 1e-9
    return CheckResult(
        f"taylor_remainder_mode_{k}",
        passed,
        {"max_ratio": max_ratio, "sup_high_derivative": float(m_k), "order": order},
    )


def apply_noise_increment(f: NoiseFamily, u_values: np.ndarray, dW: np.ndarray) -> np.ndarray:
    """Pointwise increment sum_k h_k(u(x)) * dW_k on the grid values of u.

    dW holds one Brownian increment per mode.  Because all modes share the
    profile, the sum collapses to profile(u) * <sigma, dW>.
    """
    dW = np.asarray(dW, dtype=float)
    if dW.shape != (f.K,):
        raise ParameterError(f"dW must have shape ({f.K},), got {dW.shape}")
    return f.profile(u_values) * float(np.dot(f.sigmas, dW))


def tail_increment(f: NoiseFamily, factor: int = 10) -> float:
    """Increase of sum(sigma_k^2) if the truncation were extended to
    factor*K modes; a smallness surrogate for square-summability."""
    k = np.arange(f.K, factor * f.K, dtype=float)
    return float(np.sum((f.sigma0 * (k + 1.0) ** (-f.gamma)) ** 2))
