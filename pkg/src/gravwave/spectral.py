"""Fourier collocation core: grid, transforms, multipliers, projections, norms.

The periodic grid x_j = -L/2 + j L/n approximates the real line.  Spectra use
the continuum normalization

    fhat(xi) = int e^{-i x xi} f(x) dx,
    f(x)     = (1/2pi) int e^{i x xi} fhat(xi) dxi,

realized discretely as fhat(xi_k) = (L/n) (-1)^k FFT_k(f) on the frequencies
xi_k = 2 pi k / L with k in [-n/2, n/2).  This normalization is pinned by the
bilinear convention used throughout the package: applying a bilinear multiplier

    F[M(f,g)](xi) = (1/2pi) int m(xi,eta) fhat(xi-eta) ghat(eta) deta

with m == 1 must reproduce the (dealiased) pointwise product exactly, and with
the scaling above the discrete sum (1/L) sum_eta fhat(xi-eta) ghat(eta) does.

Products are dealiased by computing every pairwise product on a 2x zero-padded
grid and truncating back, which makes each product an exact linear convolution
of the retained modes: chains of products are then alias-free, only spectrally
truncated.  Data is expected to keep the unpaired Nyquist mode (k = -n/2)
negligible; d_x zeroes it explicitly.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np


class SpectralError(Exception):
    """Base error for grid/transform misuse."""


class ZeroModeError(SpectralError):
    """Raised when inverting |xi|^{1/2} against data with a live zero mode."""


class BoundaryGuardError(SpectralError):
    """Raised when data is not negligible at the box edge (wrap-around)."""


class SnapshotFormatError(SpectralError):
    """Raised for malformed snapshot files."""


MULTIPLIERS = ("lambda", "abs_d", "d_x", "sgn", "lambda_inv", "half_wave")

# multipliers whose symbol s satisfies s(-xi) = conj(s(xi)), i.e. map real
# fields to real fields; sgn is real-odd (real -> imaginary) and half_wave
# genuinely complexifies
_REAL_PRESERVING = {"lambda", "abs_d", "d_x", "lambda_inv"}


@dataclass(frozen=True)
class FourierGrid:
    n: int
    period: float
    xs: np.ndarray = field(repr=False)
    freqs: np.ndarray = field(repr=False)
    modes: np.ndarray = field(repr=False)

    @property
    def dx(self) -> float:
        return self.period / self.n

    @property
    def xi_max(self) -> float:
        return np.pi * self.n / self.period


def make_grid(n: int, period: float) -> FourierGrid:
    """Build the collocation grid. n must be a power of two, at least 8."""
    if n < 8 or (n & (n - 1)) != 0:
        raise SpectralError(f"grid size must be a power of two >= 8, got {n}")
    if not (period > 0):
        raise SpectralError(f"period must be positive, got {period}")
    period = float(period)
    j = np.arange(n)
    xs = -period / 2 + j * (period / n)
    modes = np.rint(np.fft.fftfreq(n) * n).astype(np.int64)
    freqs = 2 * np.pi * modes / period
    return FourierGrid(n=n, period=period, xs=xs, freqs=freqs, modes=modes)


@dataclass(frozen=True)
class Field:
    """Real-space samples on a grid. values may be float64 or complex128."""

    grid: FourierGrid
    values: np.ndarray

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.values)

    def __add__(self, other: "Field") -> "Field":
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        return Field(self.grid, self.values - other.values)

    def __mul__(self, scalar) -> "Field":
        return Field(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.values)


@dataclass(frozen=True)
class Spectrum:
    """Continuum-normalized Fourier coefficients in FFT index order."""

    grid: FourierGrid
    coeffs: np.ndarray

    def __add__(self, other: "Spectrum") -> "Spectrum":
        return Spectrum(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "Spectrum") -> "Spectrum":
        return Spectrum(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar) -> "Spectrum":
        return Spectrum(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "Spectrum":
        return Spectrum(self.grid, -self.coeffs)


def _phase(grid: FourierGrid) -> np.ndarray:
    # (-1)^k accounts for the grid starting at -L/2 rather than 0
    return np.where(grid.modes % 2 == 0, 1.0, -1.0)


def to_spectrum(f: Field) -> Spectrum:
    g = f.grid
    coeffs = (g.period / g.n) * _phase(g) * np.fft.fft(f.values)
    return Spectrum(g, coeffs)


def to_field(spec: Spectrum, real: bool = False) -> Field:
    g = spec.grid
    values = np.fft.ifft(_phase(g) * spec.coeffs) * (g.n / g.period)
    if real:
        values = values.real
    return Field(g, values)


def field_from_function(grid: FourierGrid, fn) -> Field:
    return Field(grid, np.asarray(fn(grid.xs)))


# ---------------------------------------------------------------------------
# multipliers

def multiplier_symbol(grid: FourierGrid, name: str, t: float | None = None) -> np.ndarray:
    xi = grid.freqs
    if name == "lambda":
        return np.sqrt(np.abs(xi))
    if name == "abs_d":
        return np.abs(xi)
    if name == "d_x":
        sym = 1j * xi
        sym[grid.modes == -grid.n // 2] = 0.0  # unpaired mode has no odd partner
        return sym
    if name == "sgn":
        return np.sign(xi)  # sgn(0) := 0
    if name == "lambda_inv":
        sym = np.zeros_like(xi)
        nz = xi != 0
        sym[nz] = 1.0 / np.sqrt(np.abs(xi[nz]))
        return sym
    if name == "half_wave":
        if t is None:
            raise SpectralError("half_wave multiplier needs a time t")
        return np.exp(-1j * t * np.sqrt(np.abs(xi)))
    raise SpectralError(f"unknown multiplier {name!r}; one of {MULTIPLIERS}")


def apply_multiplier(obj, name: str, t: float | None = None):
    """Apply a named Fourier multiplier to a Field or Spectrum."""
    if isinstance(obj, Spectrum):
        if name == "lambda_inv":
            _check_zero_mode(obj)
        return Spectrum(obj.grid, multiplier_symbol(obj.grid, name, t) * obj.coeffs)
    if isinstance(obj, Field):
        spec = to_spectrum(obj)
        out = apply_multiplier(spec, name, t)
        return to_field(out, real=obj.is_real and name in _REAL_PRESERVING)
    raise SpectralError(f"expected Field or Spectrum, got {type(obj)!r}")


def _check_zero_mode(spec: Spectrum) -> None:
    g = spec.grid
    l2 = np.sqrt(np.sum(np.abs(spec.coeffs) ** 2) / g.period)
    if np.abs(spec.coeffs[0]) > 1e-8 * max(l2, np.finfo(float).tiny):
        raise ZeroModeError(
            "lambda_inv applied to data with a non-negligible zero mode "
            f"(|fhat(0)| = {np.abs(spec.coeffs[0]):.3e}, ||f||_2 = {l2:.3e})"
        )


# ---------------------------------------------------------------------------
# dealiased products

def _pad_modes(F: np.ndarray) -> np.ndarray:
    n = F.shape[0]
    big = np.zeros(2 * n, dtype=complex)
    big[: n // 2] = F[: n // 2]
    big[2 * n - n // 2 :] = F[n // 2 :]
    return big


def _truncate_modes(big: np.ndarray) -> np.ndarray:
    m = big.shape[0]
    n = m // 2
    out = np.empty(n, dtype=complex)
    out[: n // 2] = big[: n // 2]
    out[n // 2 :] = big[m - n // 2 :]
    return out


def dealiased_product_values(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pointwise product with 2x zero padding: exact for all retained modes."""
    both_real = not (np.iscomplexobj(a) or np.iscomplexobj(b))
    fa = 2.0 * np.fft.ifft(_pad_modes(np.fft.fft(a)))
    fb = 2.0 * np.fft.ifft(_pad_modes(np.fft.fft(b)))
    out = np.fft.ifft(0.5 * _truncate_modes(np.fft.fft(fa * fb)))
    return out.real if both_real else out


def product(f: Field, g: Field, dealias: bool = True) -> Field:
    if f.grid is not g.grid and (f.grid.n != g.grid.n or f.grid.period != g.grid.period):
        raise SpectralError("product of fields on different grids")
    if not dealias:
        return Field(f.grid, f.values * g.values)
    return Field(f.grid, dealiased_product_values(f.values, g.values))


# ---------------------------------------------------------------------------
# Littlewood-Paley projections

def _smoothstep(u: np.ndarray) -> np.ndarray:
    # C-infinity step: 0 for u <= 0, 1 for u >= 1
    u = np.clip(u, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(u > 0, np.exp(-1.0 / np.maximum(u, 1e-300)), 0.0)
        b = np.where(u < 1, np.exp(-1.0 / np.maximum(1.0 - u, 1e-300)), 0.0)
    return a / (a + b)


def lp_bump(x) -> np.ndarray:
    """Even C-infinity bump: 1 on [-5/4, 5/4], 0 outside (-8/5, 8/5)."""
    ax = np.abs(np.asarray(x, dtype=float))
    return 1.0 - _smoothstep((ax - 1.25) / (1.6 - 1.25))


def lp_symbol(grid: FourierGrid, k: int) -> np.ndarray:
    return lp_bump(grid.freqs / 2.0**k) - lp_bump(grid.freqs / 2.0 ** (k - 1))


def lp_range(grid: FourierGrid) -> range:
    """Dyadic indices whose blocks can intersect the nonzero lattice frequencies."""
    xi_min = 2 * np.pi / grid.period
    xi_max = grid.xi_max
    k_lo = int(np.floor(np.log2(xi_min * 5.0 / 8.0)))
    k_hi = int(np.ceil(np.log2(xi_max * 4.0 / 5.0))) + 1
    return range(k_lo, k_hi + 1)


def lp_project(f: Field, k: int) -> Field:
    spec = to_spectrum(f)
    out = Spectrum(f.grid, lp_symbol(f.grid, k) * spec.coeffs)
    return to_field(out, real=f.is_real)


# ---------------------------------------------------------------------------
# norms

@dataclass(frozen=True)
class NormConfig:
    sobolev_index: float = 8.0
    z_beta: float = 0.01
    z_weight: float = 10.0
    zprime_index: int = 6


def l2_norm(f: Field) -> float:
    return float(np.sqrt(f.grid.dx * np.sum(np.abs(f.values) ** 2)))


def linf_norm(f: Field) -> float:
    return float(np.max(np.abs(f.values)))


def sobolev_norm(f: Field, s: float) -> float:
    spec = to_spectrum(f)
    w = (1.0 + spec.grid.freqs**2) ** s
    return float(np.sqrt(np.sum(w * np.abs(spec.coeffs) ** 2) / spec.grid.period))


def z_norm(spec: Spectrum, beta: float = 0.01, weight: float = 10.0) -> float:
    xi = np.abs(spec.grid.freqs)
    return float(np.max((xi**beta + xi**weight) * np.abs(spec.coeffs)))


def wkinf_norm(f: Field, k: int) -> float:
    spec = to_spectrum(f)
    dsym = multiplier_symbol(f.grid, "d_x")
    worst = linf_norm(f)
    coeffs = spec.coeffs
    for _ in range(k):
        coeffs = dsym * coeffs
        worst = max(worst, linf_norm(to_field(Spectrum(f.grid, coeffs), real=f.is_real)))
    return worst


def zprime_norm(h: Field, phi: Field, k: int = 6) -> float:
    return wkinf_norm(h, k) + wkinf_norm(apply_multiplier(phi, "lambda"), k)


def weighted_norm(profile: Spectrum, s: float) -> float:
    """|| x d_x f ||_{H^s} for the real-space representative of a profile.

    The x-weight is the centered grid coordinate; this is the conjugate-transform
    realization of d_xi on the spectrum and assumes data away from the box edge.
    """
    f = to_field(profile)
    fx = apply_multiplier(f, "d_x")
    return sobolev_norm(Field(f.grid, f.grid.xs * fx.values), s)


def norms(cfg: NormConfig, h: Field | None = None, phi: Field | None = None,
          profile: Spectrum | None = None) -> dict:
    """Named norm report used by the diagnostics writer."""
    out: dict[str, float] = {}
    if h is not None:
        out["sobolev"] = sobolev_norm(h, cfg.sobolev_index)
        if phi is not None:
            out["zprime"] = zprime_norm(h, phi, cfg.zprime_index)
    if profile is not None:
        out["z"] = z_norm(profile, cfg.z_beta, cfg.z_weight)
        out["weighted"] = weighted_norm(profile, cfg.sobolev_index)
    return out


# ---------------------------------------------------------------------------
# wrap-around guard

def boundary_ratio(h: Field) -> float:
    peak = linf_norm(h)
    if peak == 0.0:
        return 0.0
    edge = max(abs(complex(h.values[0])), abs(complex(h.values[-1])))
    return edge / peak


def check_wraparound(h: Field, tol: float = 1e-8) -> None:
    r = boundary_ratio(h)
    if r > tol:
        raise BoundaryGuardError(
            f"boundary-to-peak ratio {r:.3e} exceeds {tol:.1e}; "
            "data is not negligible at the box edge"
        )


# ---------------------------------------------------------------------------
# snapshot files

_MAGIC = b"GWSPEC1\x00"
_HEADER = struct.Struct("<8sqdd")


def snapshot_bytes(spec: Spectrum, t: float) -> bytes:
    g = spec.grid
    head = _HEADER.pack(_MAGIC, g.n, g.period, float(t))
    body = np.ascontiguousarray(spec.coeffs, dtype="<c16").tobytes()
    return head + body


def save_snapshot(path, spec: Spectrum, t: float) -> None:
    """Binary spectrum snapshot; a JSON mirror is written for grids n <= 64."""
    path = str(path)
    with open(path, "wb") as fh:
        fh.write(snapshot_bytes(spec, t))
    if spec.grid.n <= 64:
        mirror = {
            "magic": "GWSPEC1",
            "n": spec.grid.n,
            "period": spec.grid.period,
            "t": float(t),
            "coeffs": [[float(c.real), float(c.imag)] for c in spec.coeffs],
        }
        with open(path + ".json", "w") as fh:
            json.dump(mirror, fh)


def load_snapshot(path) -> tuple[Spectrum, float]:
    with open(str(path), "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise SnapshotFormatError(f"{path}: truncated header")
    magic, n, period, t = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise SnapshotFormatError(f"{path}: bad magic {magic!r}")
    expect = _HEADER.size + 16 * n
    if len(raw) != expect:
        raise SnapshotFormatError(f"{path}: expected {expect} bytes, got {len(raw)}")
    coeffs = np.frombuffer(raw, dtype="<c16", offset=_HEADER.size).copy()
    return Spectrum(make_grid(int(n), float(period)), coeffs.astype(complex)), float(t)
