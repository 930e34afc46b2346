"""Randomized probes of the bilinear, commutator and quartic estimates,
the rescaling identities, and the global-iteration exponent arithmetic.

Probes never assert implicit constants.  They report ``lhs / envelope``
ratios; the checks are finiteness, stability under lattice refinement, exact
vanishing cases and the direction of ``N``-dependence.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, fields
from fractions import Fraction

import numpy as np

from .functionals import xsb_norm
from .multipliers import IMultiplier, eta, phi
from .spectral_core import GridSpec, ProductPlan, SpaceTimeField, SpectralField, hs_norm, l2_norm
from .symbols import sigma

EPS = 0.05
BILINEAR_IDS = ("b1", "b2", "b3", "b4")


# --- band-limited random samples -------------------------------------------


@dataclass(frozen=True)
class DyadicSample:
    N: float
    L: float
    K: float | None
    seed: int
    field: SpaceTimeField


def required_Mt(Tspan, N, L):
    """Smallest even ``Mt`` whose time lattice holds the modulation band ``(N, L)``."""
    # sigma on |zeta|_w = r peaks at xi = r/sqrt(6): 2 r^3 / (3 sqrt 6)
    smax = 2 * (2 * N) ** 3 / (3 * math.sqrt(6)) + 2 * L
    kt = int(math.ceil(smax * Tspan / (2 * math.pi))) + 2
    return max(8, 2 * kt + 2)


def band_index(grid: GridSpec, Tspan, Mt, N, L, K=None):
    """Signed lattice indices inside the closed bands of ``(N, L, K)``."""
    if 2 * N / math.sqrt(3) * grid.Lx >= grid.Mx // 2 or 2 * N * grid.lam >= grid.My // 2:
        raise ValueError(f"band N={N} is not representable on a {grid.Mx}x{grid.My} grid")
    kxm = int(2 * N / math.sqrt(3) * grid.Lx) + 1
    kym = int(2 * N * grid.lam) + 1
    kx, ky = np.meshgrid(np.arange(-kxm, kxm + 1), np.arange(-kym, kym + 1), indexing="ij")
    kx, ky = kx.ravel(), ky.ravel()
    xi, q = kx / grid.Lx, ky / grid.lam
    r = np.sqrt(3 * xi**2 + q**2)
    keep = (r >= N / 2) & (r <= 2 * N)
    if K is not None:
        keep &= (np.abs(xi) >= K / 2) & (np.abs(xi) <= 2 * K)
    kx, ky, xi, q = kx[keep], ky[keep], xi[keep], q[keep]
    s = sigma(xi, q)
    dtau = 2 * np.pi / Tspan
    lo = np.ceil((s - 2 * L) / dtau).astype(np.int64)
    hi = np.floor((s + 2 * L) / dtau).astype(np.int64)
    width = int((hi - lo).max(initial=-1)) + 1
    rows = []
    for off in range(max(width, 0)):
        kt = lo + off
        ok = kt <= hi
        mod = np.abs(kt * dtau - s)
        ok &= mod >= L / 2
        rows.append(np.stack([kx[ok], ky[ok], kt[ok]], axis=1))
    index = np.concatenate(rows) if rows else np.zeros((0, 3), np.int64)
    if index.size and np.abs(index[:, 2]).max() >= Mt // 2:
        raise ValueError(f"modulation band L={L} at N={N} needs Mt > {2 * np.abs(index[:, 2]).max()}")
    return index


def _packets(index, grid, Tspan, rng, count, spread):
    """Transform of ``count`` real point masses at random positions (lattice independent)."""
    pos = rng.uniform(-spread, spread, size=(count, 3))
    amp = rng.standard_normal(count)
    xi = index[:, 0] / grid.Lx
    q = index[:, 1] / grid.lam
    tau = index[:, 2] * (2 * np.pi / Tspan)
    phase = np.outer(xi, pos[:, 0]) + np.outer(q, pos[:, 1]) + np.outer(tau, pos[:, 2])
    return np.exp(-1j * phase) @ amp


def make_dyadic(N, L, K=None, seed=0, grid=None, Tspan=2 * np.pi, Mt=None, packets=8, spread=np.pi / 2):
    """Unit-norm real sample ``P_N Q_L (R_K) g`` with ``g`` a random packet sum.

    ``g`` is the transform of a few point masses placed by ``seed`` in a fixed
    physical box, so refining the lattice samples the same continuum object.
    """
    grid = grid or GridSpec(Lx=1.0, lam=1.0, Mx=64, My=64)
    Mt = Mt or required_Mt(Tspan, N, L)
    index = band_index(grid, Tspan, Mt, N, L, K)
    xi = index[:, 0] / grid.Lx
    q = index[:, 1] / grid.lam
    tau = index[:, 2] * (2 * np.pi / Tspan)
    w = phi(np.sqrt(3 * xi**2 + q**2) / N) * phi((tau - sigma(xi, q)) / L)
    if K is not None:
        w = w * phi(xi / K)
    rng = np.random.default_rng(seed)
    c = w * _packets(index, grid, Tspan, rng, packets, spread)
    keep = w > 0
    if not np.any(keep):
        raise ValueError(f"band (N={N}, L={L}, K={K}) is empty on this lattice")
    U = SpaceTimeField(grid, Mt, Tspan, index[keep], c[keep])
    norm = U.l2_norm()
    if norm == 0:
        raise ValueError("sample vanished identically")
    return DyadicSample(N, L, K, int(seed), U.replace(U.coeffs / norm))


def make_rough(grid, Tspan, Mt, shells=8, per_shell=24, taus=(-1, 0, 1), decay=2.0, seed=0):
    """Sparse random real field with ``per_shell`` modes in each dyadic shell
    ``[2^j, 2^(j+1))`` of the weighted modulus and amplitude ``r^-decay``.

    Each spatial mode sits on ``kt = round(sigma / dtau) + d`` for ``d`` in
    ``taus`` so the field is close to a free wave.
    """
    rng = np.random.default_rng(seed)
    dtau = 2 * np.pi / Tspan
    picked = set()
    for j in range(shells):
        lo, hi = 2.0**j, 2.0 ** (j + 1)
        kxm = int(hi / math.sqrt(3) * grid.Lx) + 1
        kym = int(hi * grid.lam) + 1
        kx, ky = np.meshgrid(np.arange(0, kxm + 1), np.arange(-kym, kym + 1), indexing="ij")
        kx, ky = kx.ravel(), ky.ravel()
        r = np.sqrt(3 * (kx / grid.Lx) ** 2 + (ky / grid.lam) ** 2)
        ok = (r >= lo) & (r < hi) & ((kx > 0) | (ky > 0))
        cand = np.flatnonzero(ok)
        for i in rng.choice(cand, size=min(per_shell, cand.size), replace=False):
            picked.add((int(kx[i]), int(ky[i])))
    rows, vals = [], []
    for kx, ky in sorted(picked):
        xi, q = kx / grid.Lx, ky / grid.lam
        r = math.sqrt(3 * xi * xi + q * q)
        base = int(round(sigma(xi, q) / dtau))
        for d in taus:
            c = (rng.standard_normal() + 1j * rng.standard_normal()) * r**-decay
            rows += [(kx, ky, base + d), (-kx, -ky, -base - d)]
            vals += [c, np.conj(c)]
    index = np.array(rows, np.int64)
    if np.abs(index[:, 0]).max() >= grid.Mx // 2 or np.abs(index[:, 1]).max() >= grid.My // 2:
        raise ValueError("shells exceed the grid")
    if np.abs(index[:, 2]).max() >= Mt // 2:
        raise ValueError(f"time lattice too coarse: need Mt > {2 * np.abs(index[:, 2]).max()}")
    return SpaceTimeField(grid, Mt, Tspan, index, np.array(vals))


# --- reports ----------------------------------------------------------------


@dataclass
class RatioReport:
    estimate_id: str
    N1: float
    N2: float
    L1: float
    L2: float
    K: float | None
    theta: float | None
    eps: float
    seed: int
    lhs: float
    rhs: float
    ratio: float
    converged: bool | None = None

    def __post_init__(self):
        if not (self.lhs >= 0 and self.rhs > 0 and math.isfinite(self.ratio)):
            raise ValueError(f"degenerate report: lhs={self.lhs}, rhs={self.rhs}")

    @classmethod
    def columns(cls):
        return [f.name for f in fields(cls)]

    def row(self):
        return ["" if v is None else (repr(v) if isinstance(v, float) else v) for v in asdict(self).values()]


def write_reports(path, reports):
    """Write reports sorted by ``(estimate_id, N1, N2, L1, L2, K, seed)``."""
    key = lambda r: (r.estimate_id, r.N1, r.N2, r.L1, r.L2, r.K or 0, r.theta or 0, r.seed)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RatioReport.columns())
        for r in sorted(reports, key=key):
            w.writerow(r.row())


# --- bilinear ---------------------------------------------------------------


def bilinear_envelope(estimate_id, N1, N2, L1, L2, K=None, theta=None):
    nlo, nhi = min(N1, N2), max(N1, N2)
    llo, lhi = min(L1, L2), max(L1, L2)
    if estimate_id == "b1":
        return nlo * llo**0.5
    if estimate_id == "b3":
        if K is None:
            raise ValueError("b3 needs K")
        return nlo**0.5 / K**0.25 * llo**0.5 * lhi**0.25
    if nhi < 4 * nlo:
        raise ValueError(f"{estimate_id} needs N1 v N2 >= 4 (N1 ^ N2), got {N1}, {N2}")
    if estimate_id == "b2":
        return nlo**0.5 / nhi * (llo * lhi) ** 0.5
    if estimate_id == "b4":
        if theta is None or not 0 < theta < 1:
            raise ValueError(f"b4 needs theta in (0, 1), got {theta}")
        return nlo ** ((1 + theta) / 2) / nhi ** (1 - theta) * llo**0.5 * lhi ** (theta / 2)
    raise ValueError(f"unknown estimate {estimate_id!r}")


def restricted_l2(P: SpaceTimeField, K=None):
    c = P.coeffs if K is None else P.coeffs * phi(P.xi / K)
    return float(np.sqrt(np.sum(np.abs(c) ** 2) / P.volume))


def probe_bilinear(u: DyadicSample, v: DyadicSample, estimate_id, theta=None, K=None, plan=None, eps=EPS):
    """``||(P Q u)(P Q v)||`` (with ``R_K`` for b3) over the cited envelope."""
    env = bilinear_envelope(estimate_id, u.N, v.N, u.L, v.L, K, theta)
    plan = plan or ProductPlan(u.field, v.field)
    lhs = restricted_l2(plan.apply(u.field.coeffs, v.field.coeffs), K if estimate_id == "b3" else None)
    rhs = env * u.field.l2_norm() * v.field.l2_norm()
    return RatioReport(estimate_id, u.N, v.N, u.L, v.L, K, theta, eps, u.seed, lhs, rhs, lhs / rhs)


def refine_lattice(grid: GridSpec, Tspan):
    """Halve every lattice spacing while keeping the frequency range."""
    return grid.with_(Lx=2 * grid.Lx, lam=2 * grid.lam, Mx=2 * grid.Mx, My=2 * grid.My), 2 * Tspan


def bilinear_suite(N1, L1, N2, L2, seeds, grid, Tspan=2 * np.pi, K=1.0, theta=0.5, ids=BILINEAR_IDS, refine=True):
    """Run each estimate over ``seeds``; with ``refine`` repeat on a refined
    lattice and mark each estimate converged when its max ratio moves < 2x.

    Returns ``(base_reports, refined_reports)``.
    """
    ids = [i for i in ids if i in ("b1", "b3") or max(N1, N2) >= 4 * min(N1, N2)]
    levels = [(grid, Tspan)] + ([refine_lattice(grid, Tspan)] if refine else [])
    out = []
    for g, T in levels:
        Mt = required_Mt(T, max(N1, N2), max(L1, L2))
        reps, plan = [], None
        for seed in seeds:
            u = make_dyadic(N1, L1, None, seed, g, T, Mt)
            v = make_dyadic(N2, L2, None, seed + 7919, g, T, Mt)
            plan = plan or ProductPlan(u.field, v.field)
            P = plan.apply(u.field.coeffs, v.field.coeffs)
            for eid in ids:
                env = bilinear_envelope(eid, N1, N2, L1, L2, K, theta)
                lhs = restricted_l2(P, K if eid == "b3" else None)
                reps.append(RatioReport(eid, N1, N2, L1, L2, K if eid == "b3" else None,
                                        theta if eid == "b4" else None, EPS, seed, lhs, env, lhs / env))
        out.append(reps)
    if refine:
        for eid in ids:
            a = max(r.ratio for r in out[0] if r.estimate_id == eid)
            b = max(r.ratio for r in out[1] if r.estimate_id == eid)
            ok = bool(a > 0 and b > 0 and 0.5 < b / a < 2.0)
            for reps in out:
                for r in reps:
                    if r.estimate_id == eid:
                        r.converged = ok
    return out[0], (out[1] if refine else [])


# --- commutator and quartic ---------------------------------------------------


def _mult(U: SpaceTimeField, Imul):
    return Imul.of(U.xi, U.q)


def commutator_field(u: SpaceTimeField, v: SpaceTimeField, Imul: IMultiplier, plan=None):
    """Coefficients of ``d_x((Iu)(Iv) - I(uv))`` via an exact pair weight."""
    plan = plan or ProductPlan(u, v)
    mu, mv = _mult(u, Imul), _mult(v, Imul)
    ux, uq, vx, vq = u.xi, u.q, v.xi, v.q

    def weight(i, j):
        xi, q = ux[i] + vx[j], uq[i] + vq[j]
        return (mu[i] * mv[j] - Imul.of(xi, q)) * 1j * xi

    return plan.apply(u.coeffs, v.coeffs, plan.pair_values(weight))


def _I(U, Imul):
    return U.replace(U.coeffs * _mult(U, Imul))


def probe_commutator(u: SpaceTimeField, v: SpaceTimeField, Imul: IMultiplier, eps=EPS, seed=0, plan=None):
    """Return ``(report, baseline)``.

    ``report`` uses the envelope ``N^(-1/10+eps) ||Iu||_X ||Iv||_X`` with
    ``X = X^{1, 1/2+eps}``; ``baseline`` drops the ``N`` factor.
    """
    if not 0 < eps < 0.25:
        raise ValueError("eps must lie in (0, 1/4)")
    C = commutator_field(u, v, Imul, plan)
    lhs = xsb_norm(C, 1.0, -0.5 + eps)
    base = xsb_norm(_I(u, Imul), 1.0, 0.5 + eps) * xsb_norm(_I(v, Imul), 1.0, 0.5 + eps)
    gain = Imul.N ** (-0.1 + eps)
    N = Imul.N
    rep = RatioReport("ibilinear", N, N, 0, 0, None, None, eps, seed, lhs, gain * base, lhs / (gain * base))
    ref = RatioReport("I-b", N, N, 0, 0, None, None, eps, seed, lhs, base, lhs / base)
    return rep, ref


def quartic_integral(u: SpaceTimeField, Imul: IMultiplier, plan=None):
    """``int I(u^2) d_x((Iu)^2 - I(u^2))`` over space-time, plus the sum of
    absolute terms (the scale for judging the imaginary rounding residue)."""
    plan = plan or ProductPlan(u, u)
    m = _mult(u, Imul)
    x, q = u.xi, u.q
    sq = plan.apply(u.coeffs, u.coeffs)
    Iu_sq = plan.apply(u.coeffs * m, u.coeffs * m)
    m_out = Imul.of(sq.xi, sq.q)
    A = m_out * sq.coeffs
    B = 1j * sq.xi * (Iu_sq.coeffs - A)
    terms = A * np.conj(B) / sq.volume
    return complex(np.sum(terms)), float(np.sum(np.abs(terms)))


def probe_quartic(u: SpaceTimeField, Imul: IMultiplier, eps=EPS, seed=0, plan=None):
    """Return ``(report, baseline, imaginary_residue)`` for the quartic term."""
    val, scale = quartic_integral(u, Imul, plan)
    lhs = abs(val.real)
    base = xsb_norm(_I(u, Imul), 1.0, 0.5 + eps) ** 4
    gain = Imul.N ** (-0.1 + eps)
    N = Imul.N
    rep = RatioReport("quartic", N, N, 0, 0, None, None, eps, seed, lhs, gain * base, lhs / (gain * base))
    ref = RatioReport("quartic-base", N, N, 0, 0, None, None, eps, seed, lhs, base, lhs / base)
    return rep, ref, abs(val.imag) / max(scale, 1e-300)


def loglog_slope(x, y):
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


# --- scaling ------------------------------------------------------------------


def rescale(u0: SpectralField, lam) -> SpectralField:
    """Data of ``lam^-2 u(x/lam, y/lam)`` on the ``lam``-dilated box.

    With the quadrature-weighted transform the coefficient array is unchanged;
    only the lattice spacing shrinks by ``lam``.
    """
    lam_int = int(lam)
    if lam_int != lam or lam_int < 1 or lam_int & (lam_int - 1):
        raise ValueError(f"lambda must be a power of two, got {lam}")
    g = u0.grid
    return SpectralField(g.with_(Lx=g.Lx * lam_int, lam=g.lam * lam_int), u0.coeffs)


def weighted_l2(F: SpectralField) -> float:
    """L^2 norm with the ``1/(2 pi lam)`` circle weight on the Fourier side."""
    return math.sqrt(2 * math.pi) * l2_norm(F)


def nabla_I(F: SpectralField, Imul: IMultiplier) -> float:
    xi, q = F.grid.wavenumbers()
    w = (xi**2 + q**2) * Imul.of(xi, q) ** 2
    return float(np.sqrt(np.sum(w * np.abs(F.coeffs) ** 2) / F.grid.area))


@dataclass
class ScalingReport:
    lams: list
    l2_ratio: list
    l2_ratio_weighted: list
    nabla_constant: list

    @property
    def l2_error(self):
        return max(abs(r * l - 1.0) for r, l in zip(self.l2_ratio, self.lams))

    @property
    def nabla_spread(self):
        c = np.array(self.nabla_constant)
        return float(np.max(np.abs(c / c.mean() - 1.0)))


def scaling_suite(u0: SpectralField, Imul: IMultiplier, lams=(2, 4, 8)) -> ScalingReport:
    """L^2 identity and the fitted constant of
    ``||grad I u0^lam|| <= C N^(1-s) lam^-(1+s) ||u0||_{H^s}``."""
    s, N = Imul.s, Imul.N
    l2_0, w_0 = l2_norm(u0), weighted_l2(u0)
    hs = hs_norm(u0, s)
    rep = ScalingReport(list(lams), [], [], [])
    for lam in lams:
        ul = rescale(u0, lam)
        rep.l2_ratio.append(l2_norm(ul) / l2_0)
        rep.l2_ratio_weighted.append(weighted_l2(ul) / w_0)
        rep.nabla_constant.append(nabla_I(ul, Imul) * lam ** (1 + s) / (N ** (1 - s) * hs))
    return rep


# --- global iteration arithmetic -----------------------------------------------


THRESHOLD = Fraction(29, 31)


@dataclass(frozen=True)
class GWPRecord:
    s: Fraction
    feasible: bool
    lambda_exponent: Fraction | None
    N_exponent: Fraction | None
    growth_exponent: Fraction | None
    N_of_T: float | None = None


def _as_fraction(s):
    if isinstance(s, float):
        return Fraction(repr(s))
    return Fraction(s)


def gwp_arithmetic(s, T=None) -> GWPRecord:
    """Exponents of the iteration: ``lam ~ N^a``, ``N ~ T^b``, ``||u(T)||_{H^s} <~ T^c``.

    ``a = (1-s)/(1+s)``, ``b = 10(1+s)/(31s-29)``, ``c = 10(1-s)/(31s-29)``.
    The iteration closes only when ``1/10 > 3(1-s)/(1+s)``, i.e. ``s > 29/31``.
    """
    s = _as_fraction(s)
    if not 0 < s < 1:
        raise ValueError(f"s must lie in (0, 1), got {s}")
    a = (1 - s) / (1 + s)
    if not Fraction(1, 10) > 3 * a:
        return GWPRecord(s, False, a, None, None)
    b = 10 * (1 + s) / (31 * s - 29)
    c = 10 * (1 - s) / (31 * s - 29)
    NT = None if T is None else float(T) ** float(b)
    return GWPRecord(s, True, a, b, c, NT)
