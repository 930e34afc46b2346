"""Smooth cutoffs, dyadic projections and the I-operator.

All operators here are Fourier multipliers, so they act on
:class:`SpectralField` and :class:`SpaceTimeField` coefficients pointwise and
commute with each other.  ``P_N`` are not orthogonal projections: neighbouring
dyadic bands overlap on purpose.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .spectral_core import SpaceTimeField, SpectralField
from .symbols import sigma


def eta(x):
    """Raised-cosine plateau: 1 on ``|x| <= 1``, 0 on ``|x| >= 2``, C^1 in between."""
    r = np.abs(np.asarray(x, dtype=float))
    ramp = np.cos(0.5 * np.pi * (np.clip(r, 1.0, 2.0) - 1.0)) ** 2
    return np.where(r <= 1.0, 1.0, np.where(r >= 2.0, 0.0, ramp))


def phi(x):
    """Dyadic bump ``eta(x) - eta(2x)``, supported in ``1/2 <= |x| <= 2``."""
    return eta(x) - eta(2 * np.asarray(x, dtype=float))


def window_transform(omega, half_plateau, center=0.0):
    """Closed-form ``int eta((t - center)/h) exp(-i omega t) dt``.

    The derivative of the window is a pair of half-cosine pulses, which gives
    ``2 sin(3 omega h/2) / omega * a^2 cos(omega h/2) / (a^2 - omega^2)``
    with ``a = pi/h``.
    """
    h = float(half_plateau)
    w = np.asarray(omega, dtype=float)
    a = np.pi / h
    with np.errstate(divide="ignore", invalid="ignore"):
        pulse = np.where(np.isclose(np.abs(w), a, rtol=0, atol=1e-12 * a), np.pi / 4,
                         a * a * np.cos(0.5 * w * h) / (a * a - w * w))
        ramp = np.where(w == 0, 3 * h, 2 * np.sin(1.5 * w * h) / np.where(w == 0, 1.0, w))
    return ramp * pulse * np.exp(-1j * w * center)


def _apply(F, weights):
    return F.replace(F.coeffs * weights)


def _spatial(F):
    if isinstance(F, SpaceTimeField):
        return F.xi, F.q
    return F.grid.wavenumbers()


def project_PN(F, N):
    """Multiply by ``phi(|zeta|/N)`` in the weighted modulus."""
    if N <= 0:
        raise ValueError("N must be positive")
    xi, q = _spatial(F)
    return _apply(F, phi(np.sqrt(3 * xi**2 + q**2) / N))


def low_pass(F, N=1):
    """Block ``eta(2|zeta|/N)`` completing the dyadic sum below ``N``."""
    xi, q = _spatial(F)
    return _apply(F, eta(2 * np.sqrt(3 * xi**2 + q**2) / N))


def project_QL(U: SpaceTimeField, L):
    """Multiply by ``phi((tau - sigma(zeta))/L)``."""
    if L <= 0:
        raise ValueError("L must be positive")
    return _apply(U, phi((U.tau - sigma(U.xi, U.q)) / L))


def restrict_RK(F, K):
    """Multiply by ``phi(xi/K)`` (x-frequency only)."""
    if K <= 0:
        raise ValueError("K must be positive")
    xi, _ = _spatial(F)
    w = phi(xi / K)
    if not isinstance(F, SpaceTimeField):
        w = np.broadcast_to(w, F.grid.shape)
    return _apply(F, w)


@dataclass(frozen=True)
class IMultiplier:
    """Radial symbol ``m = min(1, (|zeta|/N)^(s-1))`` in the weighted modulus.

    Between ``N`` and ``2N`` this is the log-linear bridge between the two
    prescribed regimes, so ``m(N) = 1`` and ``m(2N) = 2^(s-1)``.
    """

    N: float
    s: float

    def __post_init__(self):
        if not self.N >= 2:
            raise ValueError(f"N must be >= 2, got {self.N}")
        if not 0 < self.s < 1:
            raise ValueError(f"s must lie in (0, 1), got {self.s}")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(r <= self.N, 1.0, (r / self.N) ** (self.s - 1.0))

    def of(self, xi, q):
        return self(np.sqrt(3 * np.square(xi) + np.square(q)))

    def table(self, rmax, n=512):
        r = np.linspace(0.0, rmax, n)
        return r, self(r)

    def write_csv(self, path, rmax, n=512):
        r, m = self.table(rmax, n)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["abs_zeta", "m"])
            w.writerows(zip(map(repr, r.tolist()), map(repr, m.tolist())))


def apply_I(F, Imul: IMultiplier):
    xi, q = _spatial(F)
    return _apply(F, Imul.of(xi, q))


def dyadic_reconstruction(F: SpectralField, Nmax):
    """``low_pass(F) + sum_{N=1..Nmax} P_N F``."""
    out = low_pass(F, 1).coeffs.copy()
    N = 1
    while N <= Nmax:
        out += project_PN(F, N).coeffs
        N *= 2
    return F.replace(out)
