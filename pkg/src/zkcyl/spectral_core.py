"""Grids, transforms and Sobolev norms on the truncated cylinder.

The line direction is modelled as a periodic box ``x in [0, 2*pi*Lx)`` and the
circle as ``y in [0, 2*pi*lam)``.  Spectral coefficients are quadrature
approximations of the continuum transform

    F(xi, q) = int int exp(-i (x xi + y q)) f(x, y) dy dx,

so they do not depend on the mode counts.  Every other constant follows from
the table in :data:`NORMALIZATION`:

* inverse:   f = (1 / area) * sum_k F(k) exp(i k.x)
* Parseval:  int f conj(g) = (1 / area) * sum_k F(k) conj(G(k))
* products:  F(fg)(k) = (1 / area) * sum_j F(j) G(k - j)

with ``area = 4 pi^2 Lx lam``.  Coefficient arrays are kept in natural FFT
order; :func:`signed_order` gives the shifted view.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import fft as sfft

NORMALIZATION = {
    "forward_prefactor": "dx*dy (quadrature weight)",
    "inverse_prefactor": "1/area, area = 4*pi**2*Lx*lam",
    "parseval_prefactor": "1/area",
    "convolution_prefactor": "1/area",
    "spacetime_volume": "area*Tspan",
}


@dataclass(frozen=True)
class GridSpec:
    """Collocation lattice on ``[0, 2 pi Lx) x [0, 2 pi lam)`` plus a time step."""

    Lx: float = 8.0
    lam: float = 1.0
    Mx: int = 256
    My: int = 32
    dt: float = 1e-3

    def __post_init__(self):
        for name in ("Mx", "My"):
            m = getattr(self, name)
            if int(m) != m or m < 8 or m % 2:
                raise ValueError(f"{name} must be an even integer >= 8, got {m}")
        if not (self.lam >= 1 and self.Lx >= self.lam):
            raise ValueError(f"need Lx >= lam >= 1, got Lx={self.Lx}, lam={self.lam}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")

    @property
    def shape(self):
        return (self.Mx, self.My)

    @property
    def area(self):
        return 4 * np.pi**2 * self.Lx * self.lam

    @property
    def cell(self):
        return self.area / (self.Mx * self.My)

    @property
    def kx(self):
        """Signed integer x-mode indices in natural FFT order."""
        return np.rint(sfft.fftfreq(self.Mx, 1.0 / self.Mx)).astype(np.int64)

    @property
    def ky(self):
        return np.rint(sfft.fftfreq(self.My, 1.0 / self.My)).astype(np.int64)

    @property
    def xi(self):
        return self.kx / self.Lx

    @property
    def q(self):
        return self.ky / self.lam

    def wavenumbers(self):
        """Broadcastable ``(xi, q)`` pair of shape ``(Mx, 1)`` and ``(1, My)``."""
        return self.xi[:, None], self.q[None, :]

    def weighted_modulus(self):
        xi, q = self.wavenumbers()
        return np.sqrt(3 * xi**2 + q**2)

    def points(self):
        x = 2 * np.pi * self.Lx * np.arange(self.Mx) / self.Mx
        y = 2 * np.pi * self.lam * np.arange(self.My) / self.My
        return np.meshgrid(x, y, indexing="ij")

    def dealias_mask(self):
        """2/3-rule mask: keep ``|k| < M/3`` in both directions."""
        return (np.abs(self.kx)[:, None] < self.Mx / 3) & (np.abs(self.ky)[None, :] < self.My / 3)

    def max_weighted_modulus(self, dealiased=True):
        kxm = self.Mx // 3 if dealiased else self.Mx // 2
        kym = self.My // 3 if dealiased else self.My // 2
        return float(np.sqrt(3 * (kxm / self.Lx) ** 2 + (kym / self.lam) ** 2))

    def with_(self, **changes):
        params = dict(Lx=self.Lx, lam=self.lam, Mx=self.Mx, My=self.My, dt=self.dt)
        params.update(changes)
        return GridSpec(**params)

    def to_dict(self):
        return dict(Lx=self.Lx, lam=self.lam, Mx=self.Mx, My=self.My, dt=self.dt)


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PhysicalField:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values, np.float64)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("physical field has non-finite samples")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class SpectralField:
    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        c = _frozen(self.coeffs, np.complex128)
        if c.shape != self.grid.shape:
            raise ValueError(f"coeffs shape {c.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "coeffs", c)

    def replace(self, coeffs):
        return SpectralField(self.grid, coeffs)

    def __add__(self, other):
        _same_grid(self, other)
        return self.replace(self.coeffs + other.coeffs)

    def __sub__(self, other):
        _same_grid(self, other)
        return self.replace(self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return self.replace(self.coeffs * scalar)

    __rmul__ = __mul__

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.shape, complex))


def _same_grid(a, b):
    if a.grid != b.grid:
        raise ValueError(f"grid mismatch: {a.grid} vs {b.grid}")


def hermitian_defect(coeffs):
    """Max of ``|F(k) - conj(F(-k))|`` relative to ``max |F|``."""
    mx, my = coeffs.shape
    ix = (-np.arange(mx)) % mx
    iy = (-np.arange(my)) % my
    mirrored = np.conj(coeffs[np.ix_(ix, iy)])
    scale = np.max(np.abs(coeffs))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(coeffs - mirrored)) / scale)


def hermitian_part(coeffs):
    """Project coefficients onto the transforms of real fields."""
    mx, my = coeffs.shape
    ix = (-np.arange(mx)) % mx
    iy = (-np.arange(my)) % my
    return 0.5 * (coeffs + np.conj(coeffs[np.ix_(ix, iy)]))


def forward(f: PhysicalField) -> SpectralField:
    g = f.grid
    return SpectralField(g, g.cell * sfft.fft2(f.values))


def _to_physical_complex(F: SpectralField):
    return sfft.ifft2(F.coeffs) / F.grid.cell


def inverse(F: SpectralField, check=True, tol=1e-9) -> PhysicalField:
    """Physical samples of ``F``; rejects coefficients of non-real fields."""
    if check:
        defect = hermitian_defect(F.coeffs)
        if defect > tol:
            raise ValueError(f"coefficients are not Hermitian (relative defect {defect:.2e})")
    return PhysicalField(F.grid, np.real(_to_physical_complex(F)))


def from_function(grid: GridSpec, func) -> SpectralField:
    X, Y = grid.points()
    return forward(PhysicalField(grid, func(X, Y)))


def signed_order(coeffs):
    """Coefficients reordered so index 0 is the most negative mode."""
    return sfft.fftshift(coeffs)


def natural_order(coeffs):
    return sfft.ifftshift(coeffs)


def l2_norm(F: SpectralField) -> float:
    return hs_norm(F, 0.0)


def hs_norm(F: SpectralField, s: float) -> float:
    """``(1/area * sum <|zeta|>^{2s} |F|^2)^{1/2}`` with ``<r> = 1 + r``."""
    if not -2 <= s <= 3:
        raise ValueError(f"s={s} outside supported range [-2, 3]")
    w = (1.0 + F.grid.weighted_modulus()) ** (2 * s)
    return float(np.sqrt(np.sum(w * np.abs(F.coeffs) ** 2) / F.grid.area))


def inner(F: SpectralField, G: SpectralField) -> complex:
    """Spectral side of ``int f conj(g) dx dy``."""
    _same_grid(F, G)
    return complex(np.sum(F.coeffs * np.conj(G.coeffs)) / F.grid.area)


def physical_inner(f: PhysicalField, g: PhysicalField) -> float:
    """Trapezoid (spectrally exact) quadrature of ``int f g dx dy``."""
    return float(np.sum(f.values * g.values) * f.grid.cell)


def resize(coeffs, shape):
    """Copy coefficients between lattices of different mode counts.

    Modes with ``|k| < M/2`` of both shapes are carried over; Nyquist modes are
    dropped so real fields stay real.
    """
    out = np.zeros(shape, dtype=coeffs.dtype)
    idx = []
    for m_old, m_new in zip(coeffs.shape, shape):
        kmax = min(m_old, m_new) // 2 - 1
        k = np.arange(-kmax, kmax + 1)
        idx.append((k % m_old, k % m_new))
    out[np.ix_(idx[0][1], idx[1][1])] = coeffs[np.ix_(idx[0][0], idx[1][0])]
    return out


def padded_product(Fc, Gc, grid: GridSpec, factor=1.5):
    """Coefficients of ``f*g`` on ``grid`` computed on a ``factor``-padded lattice.

    With ``factor >= 1.5`` the result equals the exact convolution truncated to
    ``|k| < M/2`` (no aliasing).
    """
    mx = int(np.ceil(grid.Mx * factor / 2)) * 2
    my = int(np.ceil(grid.My * factor / 2)) * 2
    cell = grid.area / (mx * my)
    f = sfft.ifft2(resize(Fc, (mx, my))) / cell
    g = f if Gc is Fc else sfft.ifft2(resize(Gc, (mx, my))) / cell
    fg = sfft.fft2(f * g) * cell
    return resize(fg, grid.shape)


def convolve(F: SpectralField, G: SpectralField) -> SpectralField:
    """Transform of the pointwise product, i.e. ``(1/area) F * G`` on the lattice."""
    _same_grid(F, G)
    return F.replace(padded_product(F.coeffs, G.coeffs, F.grid))


def dealias(F: SpectralField) -> SpectralField:
    return F.replace(F.coeffs * F.grid.dealias_mask())


# --- snapshot files -------------------------------------------------------


def save_snapshot(path, field_, t=0.0, extra=None):
    """Write a JSON header line followed by little-endian float64 samples.

    Physical fields store ``Mx*My`` values; spectral fields store interleaved
    (real, imag) pairs.  Both are row-major with x outer, y inner.
    """
    if isinstance(field_, PhysicalField):
        kind, data = "physical", field_.values
    elif isinstance(field_, SpectralField):
        kind = "spectral"
        data = np.stack([field_.coeffs.real, field_.coeffs.imag], axis=-1)
    else:
        raise TypeError(f"cannot snapshot {type(field_).__name__}")
    header = {
        "format": "zkcyl-snapshot/1",
        "kind": kind,
        "grid": field_.grid.to_dict(),
        "t": float(t),
        "endianness": "little",
        "dtype": "float64",
        "order": "row-major, x outer, y inner",
    }
    if extra:
        header.update(extra)
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        fh.write(np.ascontiguousarray(data, dtype="<f8").tobytes())
    return Path(path)


def load_snapshot(path):
    """Inverse of :func:`save_snapshot`; returns ``(field, header)``."""
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        raw = np.frombuffer(fh.read(), dtype="<f8")
    grid = GridSpec(**header["grid"])
    if header["kind"] == "physical":
        return PhysicalField(grid, raw.reshape(grid.shape)), header
    if header["kind"] == "spectral":
        pairs = raw.reshape(grid.shape + (2,))
        return SpectralField(grid, pairs[..., 0] + 1j * pairs[..., 1]), header
    raise ValueError(f"unknown snapshot kind {header['kind']!r}")



# --- space-time fields -----------------------------------------------------


@dataclass(frozen=True)
class SpaceTimeField:
    """Sparse space-time coefficients on the lattice ``(k/Lx, j/lam, 2 pi n/Tspan)``.

    Only nonzero entries are stored: ``index`` holds signed integer lattice
    indices ``(kx, ky, kt)`` and ``coeffs`` the matching values of
    ``int exp(-i(t tau + x xi + y q)) u dx dy dt`` over one period.
    """

    grid: GridSpec
    Mt: int
    Tspan: float
    index: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        if int(self.Mt) != self.Mt or self.Mt < 8 or self.Mt % 2:
            raise ValueError(f"Mt must be an even integer >= 8, got {self.Mt}")
        if not self.Tspan > 0:
            raise ValueError("Tspan must be positive")
        idx = _frozen(np.reshape(self.index, (-1, 3)), np.int64)
        c = _frozen(np.reshape(self.coeffs, (-1,)), np.complex128)
        if idx.shape[0] != c.shape[0]:
            raise ValueError("index and coeffs lengths differ")
        lim = np.array([self.grid.Mx, self.grid.My, self.Mt]) // 2
        if idx.size and np.any(np.abs(idx) >= lim):
            raise ValueError("lattice index outside the representable band")
        object.__setattr__(self, "index", idx)
        object.__setattr__(self, "coeffs", c)

    @property
    def volume(self):
        return self.grid.area * self.Tspan

    @property
    def xi(self):
        return self.index[:, 0] / self.grid.Lx

    @property
    def q(self):
        return self.index[:, 1] / self.grid.lam

    @property
    def tau(self):
        return self.index[:, 2] * (2 * np.pi / self.Tspan)

    @property
    def weighted_modulus(self):
        return np.sqrt(3 * self.xi**2 + self.q**2)

    @property
    def dtau(self):
        return 2 * np.pi / self.Tspan

    def replace(self, coeffs):
        return SpaceTimeField(self.grid, self.Mt, self.Tspan, self.index, coeffs)

    def l2_norm(self):
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2) / self.volume))

    def hermitian_defect(self):
        """Max mismatch between ``c(k)`` and ``conj(c(-k))`` (missing partners count as 0)."""
        if not self.coeffs.size:
            return 0.0
        lookup = dict(zip(map(tuple, self.index.tolist()), self.coeffs))
        mirrored = np.array([lookup.get((-a, -b, -c), 0.0) for a, b, c in self.index.tolist()])
        return float(np.max(np.abs(self.coeffs - np.conj(mirrored))) / np.max(np.abs(self.coeffs)))

    def to_dense(self):
        """Dense ``(Mx, My, Mt)`` array in natural FFT order."""
        out = np.zeros((self.grid.Mx, self.grid.My, self.Mt), complex)
        kx, ky, kt = self.index.T
        out[kx % self.grid.Mx, ky % self.grid.My, kt % self.Mt] = self.coeffs
        return out

    @classmethod
    def from_dense(cls, grid, Tspan, dense, atol=0.0):
        mx, my, mt = dense.shape
        nz = np.nonzero(np.abs(dense) > atol)
        signed = [np.where(i >= m // 2, i - m, i) for i, m in zip(nz, (mx, my, mt))]
        keep = (np.abs(signed[0]) < mx // 2) & (np.abs(signed[1]) < my // 2) & (np.abs(signed[2]) < mt // 2)
        index = np.stack([s[keep] for s in signed], axis=1)
        return cls(grid, mt, Tspan, index, dense[nz][keep])

    def to_physical(self):
        """Real samples on the ``Mx x My x Mt`` space-time collocation lattice."""
        cell = self.volume / (self.grid.Mx * self.grid.My * self.Mt)
        return np.real(sfft.ifftn(self.to_dense())) / cell

    @classmethod
    def from_physical(cls, grid, Tspan, values, atol=0.0):
        cell = grid.area * Tspan / values.size
        return cls.from_dense(grid, Tspan, sfft.fftn(values) * cell, atol=atol)


def _encode(index, offset, extent):
    return ((index[..., 0] + offset[0]) * extent[1] + (index[..., 1] + offset[1])) * extent[2] + (
        index[..., 2] + offset[2]
    )


class ProductPlan:
    """Pair structure of ``u v`` for fixed supports, reusable across coefficient draws.

    Building the plan sorts every pair key once; :meth:`apply` is then a
    weighted histogram.  ``pair_weight(i, j)`` (optional) returns a factor per
    pair of entries ``(U.index[i], V.index[j])``, turning the plain product
    into any bilinear Fourier-multiplier form.  The output lattice has doubled
    bounds so nothing aliases.
    """

    def __init__(self, U: SpaceTimeField, V: SpaceTimeField, pair_weight=None, chunk=1 << 21):
        if U.grid != V.grid or U.Mt != V.Mt or U.Tspan != V.Tspan:
            raise ValueError("space-time fields live on different lattices")
        self.shape = (U.coeffs.size, V.coeffs.size)
        self.grid = U.grid.with_(Mx=2 * U.grid.Mx, My=2 * U.grid.My)
        self.Mt = 2 * U.Mt
        self.Tspan = U.Tspan
        self.volume = U.volume
        extent = np.array([self.grid.Mx, self.grid.My, self.Mt], np.int64)
        offset = extent // 2
        if not all(self.shape):
            self.index, self.inverse, self.weight = np.zeros((0, 3), np.int64), None, None
            return
        keys = np.empty(self.shape[0] * self.shape[1], np.int64)
        rows = max(1, chunk // self.shape[1])
        for start in range(0, self.shape[0], rows):
            block = U.index[start:start + rows, None, :] + V.index[None, :, :]
            keys[start * self.shape[1]:(start + len(block)) * self.shape[1]] = _encode(block, offset, extent).ravel()
        uniq, self.inverse = np.unique(keys, return_inverse=True)
        del keys
        kt = uniq % extent[2] - offset[2]
        rest = uniq // extent[2]
        ky = rest % extent[1] - offset[1]
        kx = rest // extent[1] - offset[0]
        self.index = np.stack([kx, ky, kt], axis=1)
        self.weight = None if pair_weight is None else self.pair_values(pair_weight)

    def pair_values(self, func):
        """Evaluate ``func(i, j)`` on every pair, in the plan's flat order."""
        ii, jj = np.indices(self.shape).reshape(2, -1)
        return np.asarray(func(ii, jj), complex)

    def apply(self, cu, cv, weight=None) -> SpaceTimeField:
        """Product coefficients; ``weight`` (flat, from :meth:`pair_values`) overrides the plan's own."""
        if (len(cu), len(cv)) != self.shape:
            raise ValueError("coefficient lengths do not match the plan")
        if self.inverse is None:
            return SpaceTimeField(self.grid, self.Mt, self.Tspan, self.index, np.zeros(0, complex))
        w = np.multiply.outer(cu, cv).ravel()
        weight = self.weight if weight is None else weight
        if weight is not None:
            w *= weight
        acc = np.bincount(self.inverse, weights=w.real) + 1j * np.bincount(self.inverse, weights=w.imag)
        return SpaceTimeField(self.grid, self.Mt, self.Tspan, self.index, acc / self.volume)


def spacetime_product(U: SpaceTimeField, V: SpaceTimeField, pair_weight=None) -> SpaceTimeField:
    """Exact coefficients of ``u v`` by direct sparse convolution (see :class:`ProductPlan`)."""
    return ProductPlan(U, V, pair_weight).apply(U.coeffs, V.coeffs)
