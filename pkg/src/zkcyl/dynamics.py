"""Time evolution of ``u_t + d_x Lap u + u u_x = 0`` on the truncated cylinder.

The linear part is diagonal in Fourier space with symbol ``i sigma(xi, q)``;
the quadratic term is written as ``-1/2 d_x(u^2)`` and evaluated with a
3/2-padded product followed by the 2/3 mask, so the scheme is a Galerkin
truncation that conserves mass and energy up to time-discretisation error.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as cheb

from .spectral_core import GridSpec, SpectralField, hs_norm, padded_product
from .symbols import sigma

log = logging.getLogger(__name__)

SCHEMES = ("strang", "etdrk4")


class NumericalBlowup(FloatingPointError):
    """A non-finite value appeared during time stepping."""


@dataclass(frozen=True)
class IntegratorConfig:
    scheme: str = "etdrk4"
    dt: float = 1e-3
    Tend: float = 1.0
    dealias: bool = True
    save_every: int = 1

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if not (self.dt > 0 and self.Tend > 0):
            raise ValueError("dt and Tend must be positive")
        if int(self.save_every) != self.save_every or self.save_every < 1:
            raise ValueError("save_every must be a positive integer")

    @property
    def nsteps(self):
        n = int(round(self.Tend / self.dt))
        if n < 1 or abs(n * self.dt - self.Tend) > 1e-9 * max(self.Tend, 1.0):
            raise ValueError(f"Tend={self.Tend} is not an integer multiple of dt={self.dt}")
        return n


@dataclass(frozen=True)
class Trajectory:
    grid: GridSpec
    times: np.ndarray
    states: tuple = field(repr=False)

    def __post_init__(self):
        t = np.asarray(self.times, float)
        if len(t) != len(self.states):
            raise ValueError("times and states differ in length")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if any(s.grid != self.grid for s in self.states):
            raise ValueError("all states must share the trajectory grid")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "states", tuple(self.states))

    def __len__(self):
        return len(self.states)

    @property
    def final(self):
        return self.states[-1]

    def every(self, k):
        """Sub-trajectory keeping every ``k``-th snapshot."""
        return Trajectory(self.grid, self.times[::k], self.states[::k])


def linear_symbol(grid: GridSpec):
    xi, q = grid.wavenumbers()
    return sigma(xi, q)


def propagate_linear(F: SpectralField, t: float) -> SpectralField:
    """Free evolution: multiply by ``exp(i t sigma)``."""
    return F.replace(F.coeffs * np.exp(1j * t * linear_symbol(F.grid)))


def _nonlinear(coeffs, grid, mask):
    out = -0.5j * grid.xi[:, None] * padded_product(coeffs, coeffs, grid)
    if mask is not None:
        out *= mask
    return out


def nonlinear_rhs(F: SpectralField, dealias=True) -> SpectralField:
    """Spectral coefficients of ``-1/2 d_x(u^2)``."""
    if not np.all(np.isfinite(F.coeffs)):
        raise NumericalBlowup("non-finite coefficients passed to nonlinear_rhs")
    mask = F.grid.dealias_mask() if dealias else None
    return F.replace(_nonlinear(F.coeffs, F.grid, mask))


@lru_cache(maxsize=16)
def _etd_coefficients(grid: GridSpec, dt: float, ncirc=32, radius=1.0):
    z = dt * 1j * linear_symbol(grid)
    roots = radius * np.exp(2j * np.pi * (np.arange(1, ncirc + 1) - 0.5) / ncirc)
    zc = z[..., None] + roots
    ez = np.exp(zc)
    ez2 = np.exp(zc / 2)
    # contour means avoid cancellation near z = 0
    half = dt * np.mean((ez2 - 1) / zc, axis=-1)
    f1 = dt * np.mean((-4 - zc + ez * (4 - 3 * zc + zc**2)) / zc**3, axis=-1)
    f2 = dt * np.mean((2 + zc + ez * (zc - 2)) / zc**3, axis=-1)
    f3 = dt * np.mean((-4 - 3 * zc - zc**2 + ez * (4 - zc)) / zc**3, axis=-1)
    return np.exp(z), np.exp(z / 2), half, f1, f2, f3


def _etdrk4_step(c, grid, dt, mask):
    E, E2, half, f1, f2, f3 = _etd_coefficients(grid, dt)
    Nu = _nonlinear(c, grid, mask)
    a = E2 * c + half * Nu
    Na = _nonlinear(a, grid, mask)
    b = E2 * c + half * Na
    Nb = _nonlinear(b, grid, mask)
    cc = E2 * a + half * (2 * Nb - Nu)
    Nc = _nonlinear(cc, grid, mask)
    return E * c + f1 * Nu + 2 * f2 * (Na + Nb) + f3 * Nc


def _strang_step(c, grid, dt, mask):
    E2 = np.exp(0.5j * dt * linear_symbol(grid))
    c = E2 * c
    k1 = _nonlinear(c, grid, mask)
    k2 = _nonlinear(c + 0.5 * dt * k1, grid, mask)
    k3 = _nonlinear(c + 0.5 * dt * k2, grid, mask)
    k4 = _nonlinear(c + dt * k3, grid, mask)
    c = c + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return E2 * c


def _step_coeffs(c, grid, cfg):
    mask = grid.dealias_mask() if cfg.dealias else None
    if cfg.scheme == "strang":
        return _strang_step(c, grid, cfg.dt, mask)
    return _etdrk4_step(c, grid, cfg.dt, mask)


def step(F: SpectralField, cfg: IntegratorConfig) -> SpectralField:
    return F.replace(_step_coeffs(F.coeffs, F.grid, cfg))


def evolve(F0: SpectralField, cfg: IntegratorConfig, callback=None) -> Trajectory:
    """Integrate to ``cfg.Tend``, storing every ``cfg.save_every``-th state.

    ``callback(t, state)`` runs on each stored snapshot.  A non-finite state
    raises :class:`NumericalBlowup` naming the failing time.
    """
    grid = F0.grid
    c = F0.coeffs * grid.dealias_mask() if cfg.dealias else np.array(F0.coeffs)
    n = cfg.nsteps
    times, states = [0.0], [F0.replace(c)]
    if callback:
        callback(0.0, states[0])
    for k in range(1, n + 1):
        c = _step_coeffs(c, grid, cfg)
        if k % cfg.save_every == 0 or k == n:
            if not np.all(np.isfinite(c)):
                raise NumericalBlowup(f"non-finite state at t={k * cfg.dt:.6g} (step {k})")
            t = k * cfg.dt
            state = F0.replace(c)
            times.append(t)
            states.append(state)
            if callback:
                callback(t, state)
    log.debug("evolved %d steps with %s", n, cfg.scheme)
    return Trajectory(grid, np.array(times), states)


@dataclass
class PicardResult:
    """Picard iterates of the Duhamel map sampled on Chebyshev nodes in ``[0, delta]``."""

    grid: GridSpec
    times: np.ndarray
    iterates: list
    distances: list
    diverged: bool

    def trajectory(self, k=-1):
        data = self.iterates[k]
        return Trajectory(self.grid, self.times, [SpectralField(self.grid, d) for d in data])

    @property
    def ratios(self):
        d = np.asarray(self.distances)
        with np.errstate(divide="ignore", invalid="ignore"):
            return d[1:] / d[:-1]


def duhamel_picard(u0: SpectralField, delta: float, iterations: int, nodes=33, dealias=True):
    """Iterate ``u -> S(t) u0 - 1/2 int_0^t S(t - t') d_x(u(t')^2) dt'``.

    ``S`` is the free propagator.  The integral is done in the interaction
    picture with Chebyshev interpolation, so it is spectrally accurate in
    time.  Iterate 0 is the zero function, so iterate 1 is the free solution.
    ``distances[k]`` is the sup over nodes of the H^1 distance between
    iterates ``k+1`` and ``k``.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if not delta > 0:
        raise ValueError("delta must be positive")
    grid = u0.grid
    mask = grid.dealias_mask() if dealias else None
    c0 = u0.coeffs * mask if dealias else np.array(u0.coeffs)
    x = -np.cos(np.pi * np.arange(nodes) / (nodes - 1))
    t = 0.5 * delta * (x + 1)
    phase = np.exp(1j * t[:, None, None] * linear_symbol(grid)[None])
    current = np.zeros((nodes,) + grid.shape, complex)
    iterates, distances = [], []
    diverged = False
    for k in range(iterations):
        g = np.stack([np.conj(phase[j]) * _nonlinear(current[j], grid, mask) for j in range(nodes)])
        coef = cheb.chebfit(x, g.reshape(nodes, -1), nodes - 1)
        integral = cheb.chebval(x, cheb.chebint(coef, lbnd=-1)).T * (0.5 * delta)
        new = phase * (c0[None] + integral.reshape(g.shape))
        if not np.all(np.isfinite(new)):
            raise NumericalBlowup(f"non-finite Picard iterate {k + 1}")
        dist = max(hs_norm(SpectralField(grid, new[j] - current[j]), 1.0) for j in range(nodes))
        if distances and dist > distances[-1] and k >= 2:
            diverged = True
            log.warning("Picard iteration %d: distance grew from %.3e to %.3e", k + 1, distances[-1], dist)
        distances.append(dist)
        iterates.append(new)
        current = new
    return PicardResult(grid, t, iterates, distances, diverged)
