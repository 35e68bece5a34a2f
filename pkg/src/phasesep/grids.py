"""Homogeneous-Dirichlet finite differences on the box (0, L)^d, d in {1,2,3}.

Interior nodes only; the zero boundary enters through ghost values.  The
discrete Laplacian is the (2d+1)-point stencil, diagonalized exactly by the
tensor discrete sine basis, which gives a fast implicit heat solve and exact
spectral projections.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.fft import dstn

from .errors import ParameterError


@dataclass(frozen=True)
class Grid:
    """d-dimensional grid with n interior nodes per axis and spacing
    h = L/(n+1)."""

    d: int
    n: int
    L: float

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ParameterError("d must be 1, 2 or 3")
        if self.n < 3:
            raise ParameterError("n must be >= 3")
        if self.L <= 0.0:
            raise ParameterError("L must be positive")

    @property
    def h(self) -> float:
        return self.L / (self.n + 1)

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.d

    @property
    def n_total(self) -> int:
        return self.n**self.d

    def axis_coords(self) -> np.ndarray:
        return self.h * np.arange(1, self.n + 1)


@dataclass(eq=False)
class Field:
    """Real values on the interior nodes of a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ParameterError(
                f"values shape {self.values.shape} != grid shape {self.grid.shape}"
            )

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())


def constant_field(grid: Grid, c: float) -> Field:
    return Field(grid, np.full(grid.shape, float(c)))


def laplacian_apply(u: Field) -> Field:
    """Discrete Laplacian with zero Dirichlet ghosts."""
    v = u.values
    h2 = u.grid.h**2
    out = np.zeros_like(v)
    for axis in range(u.grid.d):
        pad = [(0, 0)] * u.grid.d
        pad[axis] = (1, 1)
        p = np.pad(v, pad)
        sl_lo = [slice(None)] * u.grid.d
        sl_hi = [slice(None)] * u.grid.d
        sl_mid = [slice(None)] * u.grid.d
        sl_lo[axis] = slice(0, -2)
        sl_hi[axis] = slice(2, None)
        sl_mid[axis] = slice(1, -1)
        out += p[tuple(sl_hi)] - 2.0 * p[tuple(sl_mid)] + p[tuple(sl_lo)]
    return Field(u.grid, out / h2)


@lru_cache(maxsize=None)
def _axis_eigenvalues(n: int, h: float) -> np.ndarray:
    j = np.arange(1, n + 1)
    return (4.0 / h**2) * np.sin(j * np.pi / (2.0 * (n + 1))) ** 2


@lru_cache(maxsize=None)
def tensor_eigenvalues(grid: Grid) -> np.ndarray:
    """Eigenvalues of -Laplacian on the tensor sine basis, in coefficient
    layout (index (k1..kd) holds mode (k1+1, .., kd+1))."""
    lam1 = _axis_eigenvalues(grid.n, grid.h)
    out = np.zeros(grid.shape)
    for axis in range(grid.d):
        shape = [1] * grid.d
        shape[axis] = grid.n
        out = out + lam1.reshape(shape)
    return out


def dst_coefficients(u: Field) -> np.ndarray:
    """Orthonormal sine coefficients of the field (self-inverse transform)."""
    return dstn(u.values, type=1, norm="ortho")


def dst_synthesis(grid: Grid, coeffs: np.ndarray) -> Field:
    return Field(grid, dstn(coeffs, type=1, norm="ortho"))


def heat_implicit_solve(u: Field, dt: float) -> Field:
    """Solve (I - dt*Laplacian) v = u by sine diagonalization."""
    lam = tensor_eigenvalues(u.grid)
    coeffs = dstn(u.values, type=1, norm="ortho")
    return Field(u.grid, dstn(coeffs / (1.0 + dt * lam), type=1, norm="ortho"))


@dataclass(eq=False)
class Spectrum:
    """Sorted eigenpairs of the discrete Dirichlet Laplacian."""

    grid: Grid
    n_modes: int
    eigenvalues: np.ndarray = field(repr=False)
    order: np.ndarray = field(repr=False)  # flat coefficient indices, ascending eigenvalue

    def eigenvector(self, rank: int) -> Field:
        """Orthonormal (under the h^d-weighted inner product) eigenvector of
        the given rank."""
        if not 0 <= rank < self.n_modes:
            raise ParameterError(f"rank {rank} outside 0..{self.n_modes - 1}")
        g = self.grid
        multi = np.unravel_index(self.order[rank], g.shape)
        x = g.axis_coords()
        vec = np.ones(g.shape)
        for axis in range(g.d):
            j = multi[axis] + 1
            prof = math.sqrt(2.0 / g.L) * np.sin(j * np.pi * x / g.L)
            shape = [1] * g.d
            shape[axis] = g.n
            vec = vec * prof.reshape(shape)
        return Field(g, vec)

    def mask(self, n_modes: int | None = None) -> np.ndarray:
        """Boolean coefficient mask keeping the n_modes lowest modes."""
        n_modes = self.n_modes if n_modes is None else n_modes
        if not 1 <= n_modes <= self.grid.n_total:
            raise ParameterError(f"n_modes {n_modes} outside 1..{self.grid.n_total}")
        keep = np.zeros(self.grid.n_total, dtype=bool)
        keep[self.order[:n_modes]] = True
        return keep.reshape(self.grid.shape)


def dirichlet_spectrum(grid: Grid, n_modes: int | None = None) -> Spectrum:
    """First n_modes tensor sine eigenpairs, sorted by eigenvalue (stable in
    the flat coefficient index on ties)."""
    n_modes = grid.n_total if n_modes is None else n_modes
    if not 1 <= n_modes <= grid.n_total:
        raise ParameterError(f"n_modes must lie in 1..{grid.n_total}")
    lam = tensor_eigenvalues(grid).ravel()
    order = np.argsort(lam, kind="stable")
    return Spectrum(grid=grid, n_modes=n_modes, eigenvalues=lam[order[:n_modes]].copy(),
                    order=order)


def project(spectrum: Spectrum, u: Field, n_modes: int | None = None) -> Field:
    """Orthogonal projection onto the span of the lowest n_modes
    eigenvectors."""
    mask = spectrum.mask(n_modes)
    coeffs = dstn(u.values, type=1, norm="ortho")
    coeffs = np.where(mask, coeffs, 0.0)
    return Field(u.grid, dstn(coeffs, type=1, norm="ortho"))


def dirichlet_gradient_energy(u: Field) -> float:
    """||grad u||^2 from forward differences, boundary faces against the zero
    ghosts included (this makes <-Lap u, u> = ||grad u||^2 an identity)."""
    v = u.values
    g = u.grid
    total = 0.0
    for axis in range(g.d):
        pad = [(0, 0)] * g.d
        pad[axis] = (1, 1)
        p = np.pad(v, pad)
        total += float(np.sum(np.diff(p, axis=axis) ** 2))
    return total * g.h ** (g.d - 2)


def l2_norm(u: Field) -> float:
    return u.grid.h ** (u.grid.d / 2.0) * float(np.linalg.norm(u.values.ravel()))


def holder_seminorm(u: Field, alpha: float, max_range: float | None = None,
                    exact: bool = False) -> float:
    """Largest |u(x)-u(y)| / |x-y|^alpha over interior node pairs.

    Pairs are restricted to |x-y| <= max_range (default L/4); exact=True
    scans every pair, which is affordable for small grids and validates the
    truncation.
    """
    if not 0.0 < alpha <= 1.0:
        raise ParameterError("alpha must lie in (0, 1]")
    g = u.grid
    v = u.values
    h = g.h
    if exact:
        limit = g.n - 1
    else:
        rng = g.L / 4.0 if max_range is None else max_range
        limit = int(math.floor(rng / h + 1e-12))
    limit = max(1, min(limit, g.n - 1))
    best = 0.0
    offsets = range(-limit, limit + 1)
    for off in itertools.product(*([offsets] * g.d)):
        # half-space: first nonzero component positive, so each pair once
        nz = next((o for o in off if o != 0), 0)
        if nz <= 0:
            continue
        dist = h * math.sqrt(sum(o * o for o in off))
        if not exact and dist > (g.L / 4.0 if max_range is None else max_range) + 1e-12:
            continue
        sl_a, sl_b = [], []
        for o in off:
            if o >= 0:
                sl_a.append(slice(o, None))
                sl_b.append(slice(None, g.n - o))
            else:
                sl_a.append(slice(None, g.n + o))
                sl_b.append(slice(-o, None))
        diff = np.max(np.abs(v[tuple(sl_a)] - v[tuple(sl_b)]))
        best = max(best, float(diff) / dist**alpha)
    return best


class FieldNorms(NamedTuple):
    l2: float
    h1: float
    h2_proxy: float
    sup: float
    holder: float


def norms(u: Field, alpha: float = 0.45, holder_exact: bool = False) -> FieldNorms:
    """Discrete L2, H1, an H2 proxy (L2 norm of the discrete Laplacian), sup,
    and the Holder(alpha) seminorm estimate."""
    l2 = l2_norm(u)
    h1 = math.sqrt(l2 * l2 + dirichlet_gradient_energy(u))
    h2 = l2_norm(laplacian_apply(u))
    sup = float(np.max(np.abs(u.values))) if u.values.size else 0.0
    hold = holder_seminorm(u, alpha, exact=holder_exact)
    return FieldNorms(l2=l2, h1=h1, h2_proxy=h2, sup=sup, holder=hold)


def integrate(u: Field, phi) -> float:
    """Rectangle-rule integral h^d * sum phi(u(x)) over interior nodes; phi
    must accept arrays."""
    return u.grid.h**u.grid.d * float(np.sum(phi(u.values)))
