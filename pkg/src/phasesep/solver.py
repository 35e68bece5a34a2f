"""Time integration of the stochastic reaction-diffusion dynamics.

Two schemes:

* ``split_implicit``: Lie splitting noise -> implicit diffusion -> implicit
  reaction.  The reaction substep solves, per node,
  y + dt*F'_cvx(y) = u + dt*theta0*u with the singular convex part
  F'_cvx(r) = theta*atanh(r) implicit and the concave quadratic part
  explicit.  Since the reaction map is a bijection of (-1, 1), the state
  stays strictly inside the barriers by construction, and with the noise off
  the scheme is a convex splitting whose free energy decays.

* ``yosida_galerkin``: implicit diffusion, explicit Lipschitz-regularized
  drift F'_lam = F' o J_lam, spectral cut P_n on drift and noise.  The state
  is not confined to (-1, 1); excursions are recorded, not clamped.

Brownian increments come from counter-derived per-(trajectory, mode) Philox
streams, pregenerated on the finest time grid so that coarse increments are
exact ordered sums of fine ones (refinement coupling), and so that results
never depend on scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .diagnostics import TrajectoryRecord, snapshot_row
from .errors import BarrierError, ParameterError
from .grids import Field, Grid, heat_implicit_solve, integrate
from .noise import NoiseFamily, apply_noise_increment
from .potential import (
    LogPotential,
    PotentialConstants,
    barrier_g,
    solve_scaled_tanh,
)

SCHEMES = ("split_implicit", "yosida_galerkin")

# Clamp guard for the explicit noise substep; firing is recorded and expected
# never, given the degeneracy order of the noise.
NOISE_CLAMP = 1e-12

# Nodes this close to +-1 make barrier-weight and potential integrands
# unevaluable; diagnostics turn into NaN there instead of raising.
DIAG_GUARD = 1e-13


@dataclass(frozen=True)
class SchemeConfig:
    dt: float
    scheme: str = "split_implicit"
    lam: float = 1e-3
    n_modes: int | None = None
    newton_tol: float = 1e-12
    max_newton: int = 100

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ParameterError("dt must be positive")
        if self.scheme not in SCHEMES:
            raise ParameterError(f"scheme must be one of {SCHEMES}")
        if not (0.0 < self.newton_tol <= 1e-10):
            raise ParameterError("newton_tol must lie in (0, 1e-10]")
        if self.max_newton < 10:
            raise ParameterError("max_newton must be >= 10")
        if self.scheme == "yosida_galerkin" and self.lam <= 0.0:
            raise ParameterError("yosida_galerkin needs lam > 0")


class WienerStream:
    """Pregenerated Brownian increments for one trajectory, one column per
    noise mode.

    Column k comes from a Philox generator keyed by
    SeedSequence(master_seed, spawn_key=(trajectory_id, k)), so trajectories
    and modes are statistically isolated and reproducible independently of
    execution order.  With substeps > 1 each call to next() returns ordered
    sums of consecutive fine increments, coupling runs across dt levels.
    """

    def __init__(self, increments: np.ndarray, substeps: int = 1):
        if increments.ndim != 2:
            raise ParameterError("increments must be 2-d (n_fine, K)")
        if substeps < 1 or increments.shape[0] % substeps != 0:
            raise ParameterError("substeps must divide the number of fine steps")
        self.increments = increments
        self.substeps = substeps
        self.cursor = 0

    @classmethod
    def for_trajectory(cls, master_seed: int, traj_id: int, K: int,
                       n_steps: int, dt: float, substeps: int = 1) -> "WienerStream":
        n_fine = n_steps * substeps
        dt_fine = dt / substeps
        cols = []
        for k in range(K):
            ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(traj_id, k))
            gen = np.random.Generator(np.random.Philox(ss))
            cols.append(gen.standard_normal(n_fine))
        out = np.stack(cols, axis=1) * math.sqrt(dt_fine)
        return cls(out, substeps=substeps)

    def next(self) -> np.ndarray:
        r = self.substeps
        lo = self.cursor * r
        if lo + r > self.increments.shape[0]:
            raise ParameterError("Wiener stream exhausted")
        out = self.increments[lo].copy()
        for i in range(1, r):
            out += self.increments[lo + i]
        self.cursor += 1
        return out


@dataclass(eq=False)
class SolverState:
    t: float
    u: Field
    stream: WienerStream | None = None
    clamp_events: int = 0
    excursion_max: float = 0.0


def _noise_active(noise: NoiseFamily | None) -> bool:
    return noise is not None and bool(np.any(noise.sigmas != 0.0))


def _pin_open_interval(values: np.ndarray) -> np.ndarray:
    return np.clip(values, np.nextafter(-1.0, 0.0), np.nextafter(1.0, 0.0))


def step_split_implicit(state: SolverState, cfg: SchemeConfig,
                        potential: LogPotential | None,
                        noise: NoiseFamily | None,
                        dW: np.ndarray | None = None) -> SolverState:
    """One step of the barrier-preserving splitting scheme."""
    u = state.u.values
    clamps = state.clamp_events
    if _noise_active(noise):
        if dW is None:
            if state.stream is None:
                raise ParameterError("noise is active but the state has no stream")
            dW = state.stream.next()
        u = u + apply_noise_increment(noise, u, dW)
        clipped = np.clip(u, -1.0 + NOISE_CLAMP, 1.0 - NOISE_CLAMP)
        clamps += int(np.count_nonzero(clipped != u))
        u = clipped
    v = heat_implicit_solve(Field(state.u.grid, u), cfg.dt)
    if potential is not None:
        rhs = v.values * (1.0 + cfg.dt * potential.theta0)
        z = solve_scaled_tanh(1.0, cfg.dt * potential.theta, rhs,
                              cfg.newton_tol, cfg.max_newton)
        w = _pin_open_interval(np.tanh(z))
        if np.max(np.abs(w)) >= 1.0:
            raise BarrierError("split_implicit state touched a barrier")
    else:
        w = v.values
    return SolverState(t=state.t + cfg.dt, u=Field(state.u.grid, w),
                       stream=state.stream, clamp_events=clamps,
                       excursion_max=state.excursion_max)


@lru_cache(maxsize=None)
def _projection_mask(grid: Grid, n_modes: int) -> np.ndarray:
    from .grids import dirichlet_spectrum

    return dirichlet_spectrum(grid).mask(n_modes)


def _project_values(grid: Grid, values: np.ndarray, n_modes: int | None) -> np.ndarray:
    from scipy.fft import dstn

    if n_modes is None or n_modes >= grid.n_total:
        return values
    mask = _projection_mask(grid, n_modes)
    coeffs = dstn(values, type=1, norm="ortho")
    return dstn(np.where(mask, coeffs, 0.0), type=1, norm="ortho")


def step_yosida_galerkin(state: SolverState, cfg: SchemeConfig,
                         potential: LogPotential,
                         noise: NoiseFamily | None,
                         constants: PotentialConstants | None = None,
                         dW: np.ndarray | None = None) -> SolverState:
    """One step of the regularized spectral scheme: implicit diffusion,
    explicit Yosida drift, projected noise; the state may leave (-1, 1)."""
    if constants is None:
        constants = PotentialConstants.for_potential(potential)
    if cfg.dt * (constants.c_f + 1.0 / cfg.lam) >= 1.0:
        raise ParameterError(
            f"stability guard violated: dt*(c_f + 1/lam) = "
            f"{cfg.dt * (constants.c_f + 1.0 / cfg.lam):g} >= 1"
        )
    grid = state.u.grid
    u = state.u.values
    a = 1.0 + cfg.lam * (constants.c_f - potential.theta0)
    b = cfg.lam * potential.theta
    z = solve_scaled_tanh(a, b, u, cfg.newton_tol, cfg.max_newton)
    j_u = _pin_open_interval(np.tanh(z))
    f_lam = potential.theta * z - potential.theta0 * np.tanh(z)
    rhs = u - cfg.dt * _project_values(grid, f_lam, cfg.n_modes)
    if _noise_active(noise):
        if dW is None:
            if state.stream is None:
                raise ParameterError("noise is active but the state has no stream")
            dW = state.stream.next()
        incr = apply_noise_increment(noise, j_u, dW)
        rhs = rhs + _project_values(grid, incr, cfg.n_modes)
    v = heat_implicit_solve(Field(grid, rhs), cfg.dt)
    sup = float(np.max(np.abs(v.values)))
    return SolverState(t=state.t + cfg.dt, u=v, stream=state.stream,
                       clamp_events=state.clamp_events,
                       excursion_max=max(state.excursion_max, sup - 1.0, 0.0))


def _g_mass(u: Field, s: int) -> float:
    if float(np.max(np.abs(u.values))) >= 1.0 - DIAG_GUARD:
        return math.nan
    return integrate(u, lambda x: barrier_g(x, s))


def run_trajectory(u0: Field, T: float, cfg: SchemeConfig,
                   potential: LogPotential | None,
                   noise: NoiseFamily | None, *,
                   master_seed: int = 0, traj_id: int = 0, substeps: int = 1,
                   stride: int = 1, alpha: float = 0.45,
                   delta0: float | None = None,
                   constants: PotentialConstants | None = None,
                   s0: int | None = None,
                   fingerprint: str = "",
                   meta_extra: dict | None = None) -> TrajectoryRecord:
    """Integrate one sample path and collect its diagnostic record.

    Parameters
    ----------
    u0 : Field
        Initial state; must satisfy sup|u0| <= 1 - delta0 when delta0 is
        given.
    T : float
        Final time, an integer multiple of cfg.dt.
    substeps : int
        Brownian increments are generated on the grid dt/substeps and summed;
        runs with the same master_seed/traj_id but different (dt, substeps)
        products share the same underlying path.
    stride : int
        Snapshots (full diagnostics) are stored every `stride` steps.  The
        separation minimum and the time integral of the order-(s0+1) barrier
        mass are tracked at every step regardless.

    Determinism: the record is a pure function of the arguments; identical
    calls yield bitwise-identical arrays.
    """
    nsteps = int(round(T / cfg.dt))
    if nsteps < 1 or abs(nsteps * cfg.dt - T) > 1e-9 * max(1.0, abs(T)):
        raise ParameterError("T must be a positive integer multiple of dt")
    if stride < 1:
        raise ParameterError("stride must be >= 1")
    sup0 = float(np.max(np.abs(u0.values)))
    if delta0 is not None:
        if not 0.0 < delta0 < 1.0:
            raise ParameterError("delta0 must lie in (0, 1)")
        if sup0 > 1.0 - delta0 + 1e-12:
            raise ParameterError(
                f"sup|u0| = {sup0:g} exceeds 1 - delta0 = {1.0 - delta0:g}"
            )
    if s0 is None and noise is not None:
        s0 = noise.s0
    if constants is None and potential is not None:
        constants = PotentialConstants.for_potential(potential)

    stream = None
    if _noise_active(noise):
        stream = WienerStream.for_trajectory(master_seed, traj_id, noise.K,
                                             nsteps, cfg.dt, substeps)
    state = SolverState(t=0.0, u=u0.copy(), stream=stream)

    times, rows = [], []
    delta_min = math.inf
    mass_integral = 0.0

    def observe(step_idx: int, final: bool):
        nonlocal delta_min, mass_integral
        sup = float(np.max(np.abs(state.u.values)))
        delta_min = min(delta_min, 1.0 - sup)
        if not final and s0 is not None:
            mass_integral += cfg.dt * _g_mass(state.u, s0 + 1)
        if step_idx % stride == 0 or (final and step_idx % stride != 0):
            times.append(step_idx * cfg.dt)
            rows.append(snapshot_row(state.u, potential, s0, alpha))

    for m in range(nsteps):
        observe(m, final=False)
        if cfg.scheme == "split_implicit":
            state = step_split_implicit(state, cfg, potential, noise)
        else:
            state = step_yosida_galerkin(state, cfg, potential, noise, constants)
    observe(nsteps, final=True)

    meta = {
        "d": u0.grid.d, "n": u0.grid.n, "L": u0.grid.L,
        "s0": s0, "alpha": alpha, "dt": cfg.dt, "T": T,
        "scheme": cfg.scheme, "stride": stride, "substeps": substeps,
        "master_seed": master_seed, "traj_id": traj_id,
        "delta0": delta0,
    }
    if potential is not None:
        meta["theta"] = potential.theta
        meta["theta0"] = potential.theta0
    if noise is not None:
        meta["sigma0"] = noise.sigma0
        meta["K"] = noise.K
        meta["gamma"] = noise.gamma
    if meta_extra:
        meta.update(meta_extra)

    def col(name):
        return np.array([r[name] for r in rows])

    if cfg.scheme == "split_implicit" and delta_min <= 0.0:
        raise BarrierError(f"trajectory {traj_id}: separation minimum hit 0")

    return TrajectoryRecord(
        trajectory_id=traj_id,
        fingerprint=fingerprint,
        meta=meta,
        times=np.asarray(times),
        delta=col("delta"),
        energy=col("energy"),
        g_mass_s0=col("g_mass_s0"),
        g_mass_s0p1=col("g_mass_s0p1"),
        l2=col("l2"),
        h1=col("h1"),
        h2_proxy=col("h2_proxy"),
        sup_u=col("sup_u"),
        holder_alpha=col("holder_alpha"),
        delta_min=delta_min,
        g_mass_s0p1_time_integral=mass_integral,
        clamp_events=state.clamp_events,
        excursion_max=state.excursion_max,
        final_values=state.u.values.copy(),
    )
