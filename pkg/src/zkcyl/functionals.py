"""Mass, energy, the modified energy ``E[Iu]`` and its increment.

Products inside the increment integrand are taken with the same 2/3 mask as
the time stepper, so along a Galerkin trajectory the chain rule
``d/dt E[Iu] = inc3 + inc4`` holds to time-discretisation accuracy.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft
from scipy.integrate import cumulative_simpson

from .multipliers import IMultiplier, apply_I
from .spectral_core import SpaceTimeField, SpectralField, padded_product, resize


class QuadratureError(ArithmeticError):
    """Time quadrature did not improve under snapshot refinement."""


def mass(F: SpectralField) -> float:
    """``int u^2`` via Parseval."""
    return float(np.sum(np.abs(F.coeffs) ** 2) / F.grid.area)


def gradient_sq(F: SpectralField) -> float:
    """``||grad u||^2`` with the Euclidean symbol ``xi^2 + q^2``."""
    xi, q = F.grid.wavenumbers()
    return float(np.sum((xi**2 + q**2) * np.abs(F.coeffs) ** 2) / F.grid.area)


def cubic_integral(F: SpectralField) -> float:
    """``int u^3``, exact for any trigonometric polynomial on the grid (2x padding)."""
    g = F.grid
    shape = (2 * g.Mx, 2 * g.My)
    cell = g.area / (shape[0] * shape[1])
    u = np.real(sfft.ifft2(resize(F.coeffs, shape))) / cell
    return float(np.sum(u**3) * cell)


def energy(F: SpectralField) -> float:
    """``1/2 int |grad u|^2 - 1/6 int u^3``."""
    return 0.5 * gradient_sq(F) - cubic_integral(F) / 6.0


def modified_energy(F: SpectralField, Imul: IMultiplier) -> float:
    return energy(apply_I(F, Imul))


def _masked_square(c, grid, mask):
    return padded_product(c, c, grid) * mask


def increment_parts(F: SpectralField, Imul: IMultiplier):
    """Return ``(inc3, inc4)`` with

    ``inc3 = -1/2 int I Lap u  d_x((Iu)^2 - I(u^2))``
    ``inc4 = -1/4 int I(u^2)   d_x((Iu)^2 - I(u^2))``.
    """
    g = F.grid
    mask = g.dealias_mask()
    xi, q = g.wavenumbers()
    m = Imul.of(xi, q)
    c = F.coeffs * mask
    Iu = m * c
    Iu2 = m * _masked_square(c, g, mask)
    dcomm = 1j * xi * (_masked_square(Iu, g, mask) - Iu2)
    lap_Iu = -(xi**2 + q**2) * Iu
    inc3 = -0.5 * np.real(np.sum(lap_Iu * np.conj(dcomm))) / g.area
    inc4 = -0.25 * np.real(np.sum(Iu2 * np.conj(dcomm))) / g.area
    return float(inc3), float(inc4)


def increment_integrand(F: SpectralField, Imul: IMultiplier) -> float:
    """Instantaneous ``d/dt E[Iu]`` from the commutator form."""
    return sum(increment_parts(F, Imul))


@dataclass
class EnergyLedger:
    times: np.ndarray
    M: np.ndarray
    E: np.ndarray
    EI: np.ndarray
    inc3: np.ndarray
    inc4: np.ndarray
    cumulative_quadrature: np.ndarray

    COLUMNS = ("t", "M", "E", "EI", "inc3", "inc4", "cumulative_quadrature", "mismatch")

    def __post_init__(self):
        n = len(self.times)
        for name in ("M", "E", "EI", "inc3", "inc4", "cumulative_quadrature"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"series {name} has length {len(getattr(self, name))}, expected {n}")

    @property
    def mismatch(self):
        return (self.EI - self.EI[0]) - self.cumulative_quadrature

    @property
    def final_mismatch(self):
        return float(abs(self.mismatch[-1]))

    def drift(self, name):
        """Largest ``|X(t) - X(0)|`` for series ``name``."""
        x = getattr(self, name)
        return float(np.max(np.abs(x - x[0])))

    def rows(self):
        cols = [self.times, self.M, self.E, self.EI, self.inc3, self.inc4, self.cumulative_quadrature, self.mismatch]
        return list(zip(*(c.tolist() for c in cols)))

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.COLUMNS)
            for row in self.rows():
                w.writerow([repr(v) for v in row])


def _simpson(times, values):
    if len(times) < 3:
        raise QuadratureError("need at least three snapshots for Simpson quadrature")
    return cumulative_simpson(values, x=times, initial=0.0)


def increment_check(traj, Imul: IMultiplier, refine=True, floor=1e-11) -> EnergyLedger:
    """Tabulate ``M, E, E[Iu]`` and compare ``E[Iu](t) - E[Iu](0)`` with
    the composite-Simpson integral of the increment integrand.

    With ``refine`` the same check on every other snapshot must not beat the
    full-resolution one (above ``floor``); otherwise :class:`QuadratureError`.
    """
    states = traj.states
    parts = np.array([increment_parts(F, Imul) for F in states])
    led = EnergyLedger(
        times=np.asarray(traj.times, float),
        M=np.array([mass(F) for F in states]),
        E=np.array([energy(F) for F in states]),
        EI=np.array([modified_energy(F, Imul) for F in states]),
        inc3=parts[:, 0],
        inc4=parts[:, 1],
        cumulative_quadrature=_simpson(traj.times, parts.sum(axis=1)),
    )
    if refine and len(states) >= 5 and len(states) % 2 == 1:
        coarse_q = _simpson(led.times[::2], parts[::2].sum(axis=1))[-1]
        coarse = abs(led.EI[-1] - led.EI[0] - coarse_q)
        if led.final_mismatch > max(coarse, floor):
            raise QuadratureError(
                f"mismatch {led.final_mismatch:.3e} did not improve on coarse spacing ({coarse:.3e})"
            )
    return led


def xsb_norm(U: SpaceTimeField, s: float, b: float) -> float:
    """``(1/V sum <tau - sigma>^{2b} <|zeta|>^{2s} |U|^2)^{1/2}`` with ``<x> = 1 + |x|``."""
    if not -2 <= s <= 3:
        raise ValueError(f"s={s} outside [-2, 3]")
    if not -1 <= b <= 1:
        raise ValueError(f"b={b} outside [-1, 1]")
    xi, q = U.xi, U.q
    mod = 1.0 + np.abs(U.tau - (xi**3 + xi * q**2))
    w = mod ** (2 * b) * (1.0 + U.weighted_modulus) ** (2 * s)
    return float(np.sqrt(np.sum(w * np.abs(U.coeffs) ** 2) / U.volume))


@dataclass(frozen=True)
class GNFit:
    """Constants in ``||grad Iu||^2 <= C1 ||u0||^4 + C2 E[Iu]``.

    ``C2 = 4`` comes from Young's inequality; ``C1 = K^2 / 9`` where ``K`` is
    the largest observed ``int (Iu)^3 / (||Iu||^2 ||grad Iu||)``.
    """

    C1: float
    C2: float
    K: float
    margin: float

    @property
    def holds(self):
        return self.margin >= 0


def gn_surrogate(traj, Imul: IMultiplier) -> GNFit:
    m0 = mass(traj.states[0])
    K, margin = 0.0, np.inf
    records = []
    for F in traj.states:
        v = apply_I(F, Imul)
        g2, cub = gradient_sq(v), cubic_integral(v)
        denom = mass(v) * np.sqrt(g2)
        if denom > 0:
            K = max(K, cub / denom)
        records.append((g2, energy(v)))
    C1 = K**2 / 9.0
    for g2, e in records:
        margin = min(margin, C1 * m0**2 + 4.0 * e - g2)
    return GNFit(C1=float(C1), C2=4.0, K=float(K), margin=float(margin))
