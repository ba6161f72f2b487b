"""Fourier-side infrastructure on the periodic square torus.

Conventions used throughout the package:

* grid points are x_i = i*L/n, wavenumbers k = (2*pi/L)*m with integer
  mode numbers m in [-n/2, n/2),
* the forward transform carries 1/n**2, so a constant field maps to a
  single spectral coefficient,
* homogeneous symbols with a negative power (|k|^s, s<0, and the
  homogeneous Riesz transform) send the zero mode to 0; with strict=True
  a significant nonzero mean raises SingularZeroMode instead,
* the low/high frequency projections split at |k| = cutoff in physical
  wavenumber units (cutoff 1 by default).
"""

from dataclasses import dataclass, replace
from functools import cached_property
import struct

import numpy as np

from .errors import NonFiniteField, SingularZeroMode

ZERO_MODE_TOL = 1e-10

PHYSICAL = "physical"
SPECTRAL = "spectral"


@dataclass(frozen=True)
class Grid:
    """Periodic n x n grid of physical side length `length`.

    The metric signature is fixed to diag(1,-1,-1); spatial indices are
    raised and lowered with a sign flip.
    """

    n: int
    length: float

    def __post_init__(self):
        if self.n <= 0 or self.n % 2 != 0:
            raise ValueError(f"grid n must be even and positive, got {self.n}")
        if self.length <= 0:
            raise ValueError(f"grid length must be positive, got {self.length}")

    @cached_property
    def x(self):
        """Coordinate arrays (x1, x2), each of shape (n, n), 'ij' indexed."""
        s = np.arange(self.n) * (self.length / self.n)
        return np.meshgrid(s, s, indexing="ij")

    @cached_property
    def modes(self):
        """Integer mode numbers (m1, m2) in fft ordering."""
        m = np.fft.fftfreq(self.n, d=1.0 / self.n)
        return np.meshgrid(m, m, indexing="ij")

    @cached_property
    def k(self):
        """Physical wavenumbers (k1, k2) = (2*pi/L)*(m1, m2)."""
        scale = 2.0 * np.pi / self.length
        m1, m2 = self.modes
        return scale * m1, scale * m2

    @cached_property
    def k_abs(self):
        k1, k2 = self.k
        return np.sqrt(k1**2 + k2**2)

    @cached_property
    def k_ang(self):
        """Japanese bracket <k> = sqrt(1 + |k|^2)."""
        return np.sqrt(1.0 + self.k_abs**2)

    @cached_property
    def dealias_mask(self):
        """2/3-rule mask: keep modes with max(|m1|, |m2|) <= n/3."""
        m1, m2 = self.modes
        return np.maximum(np.abs(m1), np.abs(m2)) <= self.n / 3.0

    @property
    def cell_area(self):
        return (self.length / self.n) ** 2


@dataclass
class ScalarField:
    """One scalar function on a Grid, in physical or spectral representation.

    Values are always stored complex; `is_real` marks fields that represent
    real data (the imaginary part is then numerical noise). Fields are
    treated as immutable values: operations return new fields.
    """

    grid: Grid
    values: np.ndarray
    representation: str = PHYSICAL
    is_real: bool = False

    def __post_init__(self):
        if self.representation not in (PHYSICAL, SPECTRAL):
            raise ValueError(f"unknown representation {self.representation!r}")
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != (self.grid.n, self.grid.n):
            raise ValueError("field shape does not match grid")

    def spectrum(self):
        """Spectral coefficients (forward transform carries 1/n^2)."""
        if self.representation == SPECTRAL:
            return self.values
        return np.fft.fft2(self.values) / self.grid.n**2

    def physical(self):
        if self.representation == PHYSICAL:
            return self.values
        vals = np.fft.ifft2(self.values) * self.grid.n**2
        return vals

    def in_physical(self):
        if self.representation == PHYSICAL:
            return self
        vals = self.physical()
        return ScalarField(self.grid, vals, PHYSICAL, self.is_real)

    def in_spectral(self):
        if self.representation == SPECTRAL:
            return self
        return ScalarField(self.grid, self.spectrum(), SPECTRAL, self.is_real)

    def real_part(self):
        return ScalarField(self.grid, self.physical().real.astype(np.complex128),
                           PHYSICAL, True)

    def l2(self):
        """Grid-weighted L^2 norm (agrees between representations: Parseval)."""
        if self.representation == PHYSICAL:
            return float(np.sqrt(self.grid.cell_area * np.sum(np.abs(self.values) ** 2)))
        return float(self.grid.length * np.sqrt(np.sum(np.abs(self.values) ** 2)))

    def __add__(self, other):
        a, b = _align(self, other)
        return ScalarField(a.grid, a.values + b.values, a.representation,
                           a.is_real and b.is_real)

    def __sub__(self, other):
        a, b = _align(self, other)
        return ScalarField(a.grid, a.values - b.values, a.representation,
                           a.is_real and b.is_real)

    def __mul__(self, c):
        if isinstance(c, ScalarField):
            # pointwise product, physical side
            a, b = self.in_physical(), c.in_physical()
            return ScalarField(a.grid, a.values * b.values, PHYSICAL,
                               a.is_real and b.is_real)
        return ScalarField(self.grid, self.values * c, self.representation,
                           self.is_real and not np.iscomplexobj(c))

    __rmul__ = __mul__


def _align(a, b):
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")
    if a.representation != b.representation:
        return a.in_spectral(), b.in_spectral()
    return a, b


def field_from_physical(grid, values, is_real=None):
    values = np.asarray(values)
    if is_real is None:
        is_real = np.isrealobj(values)
    return ScalarField(grid, values.astype(np.complex128), PHYSICAL, bool(is_real))


def field_from_spectral(grid, coeffs, is_real=False):
    return ScalarField(grid, np.asarray(coeffs, dtype=np.complex128), SPECTRAL, bool(is_real))


def zero_field(grid, is_real=True):
    return ScalarField(grid, np.zeros((grid.n, grid.n), dtype=np.complex128),
                       PHYSICAL, is_real)


# ---------------------------------------------------------------------------
# Multipliers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FracLapHom:
    """|k|^s, the homogeneous fractional Laplacian |nabla|^s."""
    s: float

    def symbol(self, grid):
        ka = grid.k_abs
        with np.errstate(divide="ignore", invalid="ignore"):
            sym = np.where(ka > 0, ka**self.s, 0.0)
        if self.s == 0:
            sym = np.ones_like(ka)
        return sym

    @property
    def zero_mode_singular(self):
        return self.s < 0


@dataclass(frozen=True)
class FracLapInhom:
    """<k>^s, the inhomogeneous Bessel potential <nabla>^s."""
    s: float

    def symbol(self, grid):
        return grid.k_ang**self.s

    zero_mode_singular = False


@dataclass(frozen=True)
class RieszHom:
    """Homogeneous Riesz transform (-Delta)^{-1/2} d_j, symbol i k_j / |k|."""
    j: int

    def symbol(self, grid):
        kj = grid.k[self.j - 1]
        ka = grid.k_abs
        with np.errstate(divide="ignore", invalid="ignore"):
            sym = np.where(ka > 0, 1j * kj / ka, 0.0)
        return sym

    zero_mode_singular = True


@dataclass(frozen=True)
class RieszInhom:
    """Inhomogeneous Riesz transform (1-Delta)^{-1/2} d_j, symbol i k_j / <k>."""
    j: int

    def symbol(self, grid):
        return 1j * grid.k[self.j - 1] / grid.k_ang

    zero_mode_singular = False


@dataclass(frozen=True)
class ProjLow:
    """Sharp projection onto |k| < cutoff (physical wavenumber units)."""
    cutoff: float = 1.0

    def symbol(self, grid):
        return (grid.k_abs < self.cutoff).astype(float)

    zero_mode_singular = False


@dataclass(frozen=True)
class ProjHigh:
    """Sharp projection onto |k| >= cutoff; exact complement of ProjLow."""
    cutoff: float = 1.0

    def symbol(self, grid):
        return 1.0 - (grid.k_abs < self.cutoff).astype(float)

    zero_mode_singular = False


@dataclass(frozen=True)
class Partial:
    """Spectral partial derivative d_j, symbol i k_j."""
    j: int

    def symbol(self, grid):
        return 1j * grid.k[self.j - 1]

    zero_mode_singular = False


def check_finite(f):
    if not np.all(np.isfinite(f.values)):
        raise NonFiniteField("field contains non-finite samples")


def guard_zero_mode(spec, strict):
    """Zero-mode policy for singular homogeneous symbols.

    Returns nothing; raises SingularZeroMode when strict and the mean mode
    carries more than ZERO_MODE_TOL of the field's spectral mass.
    """
    if not strict:
        return
    total = np.sqrt(np.sum(np.abs(spec) ** 2))
    if total > 0 and np.abs(spec[0, 0]) > ZERO_MODE_TOL * total:
        raise SingularZeroMode(
            f"zero mode carries {np.abs(spec[0, 0]) / total:.3e} of the field norm")


def apply_multiplier(f, m, strict=False):
    """Apply a Fourier multiplier to a field.

    The representation tag of the input is preserved (a physical field
    round-trips through spectral space internally).
    """
    check_finite(f)
    spec = f.spectrum()
    if getattr(m, "zero_mode_singular", False):
        guard_zero_mode(spec, strict)
    out = spec * m.symbol(f.grid)
    g = ScalarField(f.grid, out, SPECTRAL, f.is_real)
    if f.representation == PHYSICAL:
        return g.in_physical()
    return g


def partial_x(f, j):
    return apply_multiplier(f, Partial(j))


def riesz_identity_residual(f, kind, strict=False):
    """Residual of the Riesz identity R1^2 + R2^2 = -1 (mod smoothing).

    hom:   ||(R1^2+R2^2)f + f||_2 / ||f||_2            (f mean-zero)
    inhom: ||(R1^2+R2^2)f + f - (1-Delta)^{-1} f||_2 / ||f||_2
    """
    check_finite(f)
    spec = f.spectrum()
    grid = f.grid
    if kind == "hom":
        guard_zero_mode(spec, strict)
        r1 = RieszHom(1).symbol(grid)
        r2 = RieszHom(2).symbol(grid)
        res = (r1**2 + r2**2) * spec + spec
        res[0, 0] = 0.0  # legislated zero mode
    elif kind == "inhom":
        r1 = RieszInhom(1).symbol(grid)
        r2 = RieszInhom(2).symbol(grid)
        res = (r1**2 + r2**2) * spec + spec - spec / grid.k_ang**2
    else:
        raise ValueError(f"kind must be 'hom' or 'inhom', got {kind!r}")
    denom = np.sqrt(np.sum(np.abs(spec) ** 2))
    if denom == 0:
        return 0.0
    return float(np.sqrt(np.sum(np.abs(res) ** 2)) / denom)


def dealias(f):
    """Zero all modes with max(|m1|, |m2|) > n/3 (2/3 rule)."""
    spec = f.spectrum() * f.grid.dealias_mask
    g = ScalarField(f.grid, spec, SPECTRAL, f.is_real)
    if f.representation == PHYSICAL:
        return g.in_physical()
    return g


# ---------------------------------------------------------------------------
# Field snapshot file format
# ---------------------------------------------------------------------------
#
# Little-endian binary: magic "CSHF", u32 n, f64 L, u8 is_complex,
# u8 representation (0 physical / 1 spectral), then row-major f64 pairs
# (re, im) for complex fields or f64 singletons for real ones.

_MAGIC = b"CSHF"
_HEADER = struct.Struct("<4sIdBB")


def write_field(path, f):
    is_complex = not f.is_real
    rep = 0 if f.representation == PHYSICAL else 1
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, f.grid.n, f.grid.length, int(is_complex), rep))
        vals = f.values
        if is_complex:
            buf = np.empty((f.grid.n, f.grid.n, 2), dtype="<f8")
            buf[..., 0] = vals.real
            buf[..., 1] = vals.imag
            fh.write(buf.tobytes())
        else:
            fh.write(vals.real.astype("<f8").tobytes())


def read_field(path):
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        magic, n, length, is_complex, rep = _HEADER.unpack(head)
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a CSHF field snapshot")
        count = n * n * (2 if is_complex else 1)
        raw = np.frombuffer(fh.read(count * 8), dtype="<f8")
    grid = Grid(n, length)
    if is_complex:
        vals = raw.reshape(n, n, 2)
        values = vals[..., 0] + 1j * vals[..., 1]
    else:
        values = raw.reshape(n, n).astype(np.complex128)
    representation = PHYSICAL if rep == 0 else SPECTRAL
    return ScalarField(grid, values, representation, not bool(is_complex))
