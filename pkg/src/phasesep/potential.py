"""Logarithmic double-well potential, barrier weights, and resolvent machinery.

The potential is the Flory-Huggins form

    F(r) = (theta/2)*((1+r)*log(1+r) + (1-r)*log(1-r)) - (theta0/2)*r**2 + shift

on (-1, 1) with 0 < theta < theta0, so the two wells sit strictly inside the
interval and F' blows up at the endpoints.  The additive shift is chosen at
construction so that min F = 0.

Barrier weights G_s(x) = (1 - x^2)^(-s) measure accumulation of a state near
the endpoints.  The resolvent J_lam inverts y + lam*(F'(y) + C_F*y) = x; it is
solved in the transformed variable z = atanh(y), where the defining equation
becomes a*tanh(z) + b*z = x with a = 1 + lam*(C_F - theta0) and b = lam*theta.
This form stays exact in double precision even when 1 - |y| underflows, which
happens already for moderate x / small lam.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DomainError, ParameterError

# Inputs closer to the endpoints than this are rejected rather than evaluated.
ENDPOINT_GUARD = 1e-14


def _check_inside(r):
    r = np.asarray(r, dtype=float)
    if np.any(1.0 - np.abs(r) < ENDPOINT_GUARD):
        raise DomainError(f"argument within {ENDPOINT_GUARD} of the barriers +-1")
    return r


def _maybe_scalar(x, out):
    return float(out) if np.isscalar(x) or np.ndim(x) == 0 else out


@dataclass(frozen=True)
class LogPotential:
    """Shifted Flory-Huggins potential with temperatures 0 < theta < theta0."""

    theta: float
    theta0: float
    well: float = field(init=False, repr=False, compare=False)
    shift: float = field(init=False, compare=False)

    def __post_init__(self):
        if not (0.0 < self.theta < self.theta0):
            raise ParameterError(
                f"need 0 < theta < theta0, got theta={self.theta}, theta0={self.theta0}"
            )
        well = self._locate_well()
        object.__setattr__(self, "well", well)
        object.__setattr__(self, "shift", -self._f_raw(well))

    def _f_raw(self, r):
        return (
            0.5 * self.theta * ((1.0 + r) * np.log1p(r) + (1.0 - r) * np.log1p(-r))
            - 0.5 * self.theta0 * r * r
        )

    def _locate_well(self) -> float:
        # F' has a single root in (0, 1); F' < 0 just right of 0 because
        # F''(0) = theta - theta0 < 0, and F' -> +inf at 1.
        lo, hi = 1e-12, 1.0 - 1e-15
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.df(mid) < 0.0:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def f(self, r):
        r = _check_inside(r)
        return _maybe_scalar(r, self._f_raw(r) + self.shift)

    def df(self, r):
        r = _check_inside(r)
        out = 0.5 * self.theta * (np.log1p(r) - np.log1p(-r)) - self.theta0 * r
        return _maybe_scalar(r, out)

    def d2f(self, r):
        r = _check_inside(r)
        out = self.theta / ((1.0 - r) * (1.0 + r)) - self.theta0
        return _maybe_scalar(r, out)

    def default_curvature(self) -> float:
        """Sharpest constant with F'' >= -C_F everywhere: C_F = theta0 - theta."""
        return self.theta0 - self.theta


def eval_potential(p: LogPotential, r):
    """Return (F(r), F'(r), F''(r)) for |r| < 1."""
    return p.f(r), p.df(r), p.d2f(r)


@dataclass(frozen=True)
class PotentialConstants:
    """Curvature constant c_f and blow-up exponent s_f of the two-sided bound
    -c_f <= F'' <= c_f*(1 + G_{s_f})."""

    c_f: float
    s_f: float = 1.0

    def __post_init__(self):
        if self.c_f <= 0.0:
            raise ParameterError("c_f must be positive")
        if self.s_f < 1.0:
            raise ParameterError("s_f must be >= 1")

    @classmethod
    def for_potential(cls, p: LogPotential, s_f: float = 1.0) -> "PotentialConstants":
        return cls(c_f=p.default_curvature(), s_f=s_f)


def barrier_g(x, s):
    """G_s(x) = (1 - x^2)^(-s), evaluated in factored form."""
    x = _check_inside(x)
    out = ((1.0 - x) * (1.0 + x)) ** (-s)
    return _maybe_scalar(x, out)


def barrier_dg(x, s):
    """G_s'(x) = 2*s*x*(1 - x^2)^(-(s+1))."""
    x = _check_inside(x)
    out = 2.0 * s * x * ((1.0 - x) * (1.0 + x)) ** (-(s + 1.0))
    return _maybe_scalar(x, out)


@dataclass(frozen=True)
class BarrierWeight:
    s: float

    def __post_init__(self):
        if self.s < 1.0:
            raise ParameterError("barrier weight exponent s must be >= 1")

    def g(self, x):
        return barrier_g(x, self.s)

    def dg(self, x):
        return barrier_dg(x, self.s)


def eval_barrier(w: BarrierWeight, x):
    """Return (G_s(x), G_s'(x))."""
    return w.g(x), w.dg(x)


@dataclass(frozen=True)
class ResolventConfig:
    tol: float = 1e-12
    max_iter: int = 200

    def __post_init__(self):
        if not (0.0 < self.tol <= 1e-10):
            raise ParameterError("tol must lie in (0, 1e-10]")
        if self.max_iter < 100:
            raise ParameterError("max_iter must be >= 100")


def solve_scaled_tanh(a: float, b: float, x, tol: float, max_iter: int):
    """Solve a*tanh(z) + b*z = x for z, vectorized over x.

    Requires b > 0 and a + b >= some positive margin so the left-hand side is
    strictly increasing; both hold for every caller in this package.  Uses
    Newton steps confined to the bracket |b*z - x| <= |a| with bisection
    fallback, so convergence is unconditional.
    """
    if b <= 0.0:
        raise ParameterError("tanh solve needs b > 0")
    xs = np.asarray(x, dtype=float)
    z = np.atleast_1d(xs / (a + b)).astype(float).copy()
    xv = np.atleast_1d(xs).astype(float)
    lo = (xv - abs(a)) / b
    hi = (xv + abs(a)) / b
    np.clip(z, lo, hi, out=z)
    done = np.zeros(z.shape, dtype=bool)
    for _ in range(max_iter):
        t = np.tanh(z)
        res = a * t + b * z - xv
        done |= np.abs(res) <= tol
        if done.all():
            break
        above = (res > 0.0) & ~done
        below = (res < 0.0) & ~done
        hi = np.where(above, z, hi)
        lo = np.where(below, z, lo)
        deriv = a * (1.0 - t * t) + b
        step = np.where(done, 0.0, res / deriv)
        cand = z - step
        inside = (cand > lo) & (cand < hi)
        cand = np.where(inside, cand, 0.5 * (lo + hi))
        z = np.where(done, z, cand)
    else:
        worst = float(np.max(np.abs(a * np.tanh(z) + b * z - xv)))
        raise ConvergenceError(
            f"tanh solve: residual {worst:g} > tol {tol:g} after {max_iter} iterations"
        )
    if np.ndim(x) == 0:
        return float(z[0])
    return z.reshape(np.shape(x))


def _resolvent_coeffs(p: LogPotential, c: PotentialConstants, lam: float):
    if lam <= 0.0:
        raise ParameterError("lambda must be positive")
    if c.c_f < p.theta0 - p.theta - 1e-12:
        raise ParameterError(
            "resolvent needs c_f >= theta0 - theta so F' + c_f*id is nondecreasing"
        )
    return 1.0 + lam * (c.c_f - p.theta0), lam * p.theta


def resolvent_z(p: LogPotential, c: PotentialConstants, lam: float, x,
                cfg: ResolventConfig = ResolventConfig()):
    """atanh of the resolvent: z with tanh(z) the unique solution in (-1, 1)
    of y + lam*(F'(y) + c_f*y) = x."""
    a, b = _resolvent_coeffs(p, c, lam)
    return solve_scaled_tanh(a, b, x, cfg.tol, cfg.max_iter)


def resolvent(p: LogPotential, c: PotentialConstants, lam: float, x,
              cfg: ResolventConfig = ResolventConfig()):
    """Resolvent J_lam(x) of F' + c_f*id, pinned strictly inside (-1, 1).

    The returned double is the correctly rounded tanh of the transformed
    solution; when that rounds to +-1.0 it is nudged one ulp inward so the
    contract |J_lam(x)| < 1 survives finite precision.
    """
    z = resolvent_z(p, c, lam, x, cfg)
    y = np.tanh(z)
    y = np.clip(y, np.nextafter(-1.0, 0.0), np.nextafter(1.0, 0.0))
    return _maybe_scalar(x, y)


def resolvent_residual(p: LogPotential, c: PotentialConstants, lam: float, z, x):
    """Residual y + lam*(F'(y) + c_f*y) - x at y = tanh(z).

    Evaluated through the tanh parameterization, which is exact algebra for
    the logarithmic potential and stays accurate where 1 - |y| underflows.
    """
    a, b = _resolvent_coeffs(p, c, lam)
    out = a * np.tanh(z) + b * np.asarray(z, dtype=float) - np.asarray(x, dtype=float)
    return _maybe_scalar(x, out)


def yosida_df(p: LogPotential, c: PotentialConstants, lam: float, x,
              cfg: ResolventConfig = ResolventConfig()):
    """Lipschitz regularization F'_lam(x) = F'(J_lam(x)).

    Computed as theta*z - theta0*tanh(z) with z = atanh(J_lam(x)), i.e. F'
    composed with the resolvent without ever forming 1 - |y|.
    """
    z = resolvent_z(p, c, lam, x, cfg)
    out = p.theta * np.asarray(z, dtype=float) - p.theta0 * np.tanh(z)
    return _maybe_scalar(x, out)


@dataclass
class CheckResult:
    """Outcome of one hypothesis check: a name, a verdict, and the numbers
    that were actually measured."""

    name: str
    passed: bool
    measured: dict

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "measured": self.measured}


def chebyshev_samples(n: int) -> np.ndarray:
    """n sample points in (-1, 1) clustered at the endpoints."""
    i = np.arange(n)
    return np.cos(np.pi * (2.0 * i + 1.0) / (2.0 * n))


def check_potential_hypotheses(p: LogPotential, c: PotentialConstants, n_samples: int = 4096):
    """Check the structural potential hypotheses on a clustered sample.

    Covers nonnegativity, the critical point at the origin, the sign blow-up
    of F' at the barriers, and the two-sided curvature bound with constants
    (c_f, s_f).  Failures are reported, never raised.
    """
    if n_samples < 1000:
        raise ParameterError("n_samples must be >= 1000")
    xs = chebyshev_samples(n_samples)
    results = []

    fmin = float(np.min(p.f(xs)))
    results.append(CheckResult("F_nonnegative", fmin >= -1e-12, {"min_F": fmin}))

    df0 = p.df(0.0)
    results.append(CheckResult("F_prime_zero_at_origin", abs(df0) <= 1e-14, {"F_prime_0": df0}))

    # Divergence probe: |F'| must grow along r = 1 - 10^-k and clear +-10 at
    # the deepest probe inside the endpoint guard.
    probes = 1.0 - 10.0 ** -np.arange(6, 14)
    up = p.df(probes)
    down = p.df(-probes)
    blow = bool(np.all(np.diff(up) > 0) and up[-1] > 10.0
                and np.all(np.diff(down) < 0) and down[-1] < -10.0)
    results.append(CheckResult(
        "F_prime_blowup",
        blow,
        {"F_prime_near_plus1": float(up[-1]), "F_prime_near_minus1": float(down[-1])},
    ))

    d2 = p.d2f(xs)
    lower_margin = float(np.min(d2 + c.c_f))
    upper_margin = float(np.min(c.c_f * (1.0 + barrier_g(xs, c.s_f)) - d2))
    results.append(CheckResult(
        "curvature_bounds",
        lower_margin >= -1e-12 and upper_margin >= -1e-12,
        {"lower_margin": lower_margin, "upper_margin": upper_margin,
         "c_f": c.c_f, "s_f": c.s_f},
    ))
    return results
