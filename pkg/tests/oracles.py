"""Slow reference implementations used only by the test suite.

Everything here is deliberately written along a different route than the
package: direct O(n^2) mode sums for bilinear multipliers, periodized
principal-value kernel quadrature for the commutator integrals, dense
quadrature for norms.  Agreement between these and the fast paths is the
point of the tests, so nothing below may import from the production modules
except the basic grid/transform containers.
"""

import numpy as np

from gravwave.spectral import Field, FourierGrid, Spectrum, to_field


def random_band_limited(grid: FourierGrid, rng, frac: int = 4, real: bool = True) -> Field:
    """Random field with spectrum supported on |mode| < n/frac (hermitized if real)."""
    coeffs = np.zeros(grid.n, dtype=complex)
    keep = np.abs(grid.modes) < grid.n // frac
    coeffs[keep] = rng.standard_normal(keep.sum()) + 1j * rng.standard_normal(keep.sum())
    if real:
        for i, k in enumerate(grid.modes):
            j = np.where(grid.modes == -k)[0]
            if j.size:
                coeffs[i] = (coeffs[i] + np.conj(coeffs[j[0]])) / 2
                coeffs[j[0]] = np.conj(coeffs[i])
        coeffs[0] = coeffs[0].real
    return to_field(Spectrum(grid, coeffs), real=real)


def bilinear_direct(sym, f: Spectrum, g: Spectrum) -> Spectrum:
    """Apply F[M(f,g)](xi) = (1/2pi) int m(xi,eta) fhat(xi-eta) ghat(eta) deta.

    Discrete linear-convolution sum: output mode k collects pairs (k-l, l)
    with both modes on the lattice; sym(xi, eta) is called with frequency
    arguments.  O(n^2), small grids only.
    """
    grid = f.grid
    n = grid.n
    fs = np.fft.fftshift(f.coeffs)
    gs = np.fft.fftshift(g.coeffs)
    modes = np.fft.fftshift(grid.modes)
    m0 = modes[0]
    scale = 2 * np.pi / grid.period
    out = np.zeros(n, dtype=complex)
    for i_out, k in enumerate(modes):
        idx = k - modes - m0  # lattice index of mode (k - l)
        ok = (idx >= 0) & (idx < n)
        xi = scale * k
        etas = scale * modes[ok]
        vals = np.asarray(sym(xi, etas), dtype=complex)
        out[i_out] = np.sum(vals * fs[idx[ok]] * gs[ok]) / grid.period
    return Spectrum(grid, np.fft.ifftshift(out))


def trilinear_direct(sym_by_iota, v: Spectrum) -> Spectrum:
    """F[N](xi) = (i/4pi^2) sum_iota int c^iota Vhat^{i1}(xi-eta) Vhat^{i2}(eta-sigma) Vhat^{i3}(sigma).

    sym_by_iota maps "++-" etc. to c(xi, eta, sigma).  V^- is the conjugate
    spectrum.  O(n^3); keep n tiny and the data band-limited so intermediate
    modes stay on the lattice.
    """
    grid = v.grid
    n = grid.n
    modes = np.fft.fftshift(grid.modes)
    m0 = modes[0]
    scale = 2 * np.pi / grid.period
    plus = np.fft.fftshift(v.coeffs)
    # conjugate field: conj(V)^hat(xi) = conj(Vhat(-xi))
    minus = np.empty_like(plus)
    for i, k in enumerate(modes):
        j = -k - m0
        minus[i] = np.conj(plus[j]) if 0 <= j < n else 0.0
    pick = {"+": plus, "-": minus}
    out = np.zeros(n, dtype=complex)
    for i_out, k in enumerate(modes):
        xi = scale * k
        acc = 0.0 + 0.0j
        for i_eta, ke in enumerate(modes):
            idx1 = k - ke - m0
            if not (0 <= idx1 < n):
                continue
            eta = scale * ke
            for i_sig, ks in enumerate(modes):
                idx2 = ke - ks - m0
                if not (0 <= idx2 < n):
                    continue
                sigma = scale * ks
                for iota, sym in sym_by_iota.items():
                    c = sym(xi, eta, sigma)
                    if c == 0.0:
                        continue
                    acc += (
                        c
                        * pick[iota[0]][idx1]
                        * pick[iota[1]][idx2]
                        * pick[iota[2]][i_sig]
                    )
        out[i_out] = acc
    out *= 1j / grid.period**2
    return Spectrum(grid, np.fft.ifftshift(out))


# ---------------------------------------------------------------------------
# periodized principal-value quadrature for the commutator integrals

def _kernel(m: int, u: np.ndarray, period: float) -> np.ndarray:
    """K_{m+1}(u) = sum_j (u + j L)^{-(m+1)} in closed form."""
    z = np.pi * u / period
    c = np.pi / period
    s, co = np.sin(z), np.cos(z)
    if m == 0:
        return c * co / s
    if m == 1:
        return c**2 / s**2
    if m == 2:
        return c**3 * co / s**3
    if m == 3:
        return c**4 * (3.0 - 2.0 * s**2) / (3.0 * s**4)
    if m == 4:
        return c**5 * co * (3.0 - s**2) / (3.0 * s**5)
    raise NotImplementedError(m)


def _deriv(values: np.ndarray, grid: FourierGrid, order: int = 1) -> np.ndarray:
    spec = np.fft.fft(values)
    ik = 1j * grid.freqs
    ik[grid.modes == -grid.n // 2] = 0.0
    return np.fft.ifft(spec * ik**order).real


def calderon_direct(m: int, h: Field, g: Field) -> np.ndarray:
    """C_m(g)(x) = pv int (h(x)-h(y))^m / (x-y)^{m+1} g(y) dy by quadrature.

    Skip-diagonal trapezoid over the periodized kernel plus the analytic
    diagonal correction E_m = -(m/2) h'^{m-1} h'' g - h'^m g', which restores
    spectral accuracy (the odd singular part cancels on the symmetric grid).
    """
    grid = h.grid
    xs = grid.xs
    hv = h.values
    gv = g.values
    hp = _deriv(hv, grid, 1)
    hpp = _deriv(hv, grid, 2)
    gp = _deriv(gv, grid, 1)
    n = grid.n
    out = np.empty(n, dtype=float)
    for i in range(n):
        u = xs[i] - xs
        u[i] = 1.0  # dummy, excluded below
        ker = _kernel(m, u, grid.period)
        integ = (hv[i] - hv) ** m * ker * gv
        integ[i] = 0.0
        if m == 0:
            corr = -gp[i]
        else:
            corr = -(m / 2.0) * hp[i] ** (m - 1) * hpp[i] * gv[i] - hp[i] ** m * gp[i]
        out[i] = grid.dx * (np.sum(integ) + corr)
    return out


def hilbert_direct(g: Field) -> np.ndarray:
    """H0 g = (1/pi) pv int g(y)/(x-y) dy by the same corrected quadrature."""
    return calderon_direct(0, Field(g.grid, np.zeros(g.grid.n)), g) / np.pi


# ---------------------------------------------------------------------------
# dense-quadrature norm oracles

def gaussian_hs_exact(amp: float, width: float, s: float) -> float:
    """H^s norm of amp*exp(-x^2/(2 width^2)) on the line, dense quadrature."""
    xi = np.linspace(0, 80.0 / width, 400001)
    fhat2 = (amp * np.sqrt(2 * np.pi) * width) ** 2 * np.exp(-(xi**2) * width**2)
    integrand = (1 + xi**2) ** s * fhat2
    val = 2 * np.trapezoid(integrand, xi) / (2 * np.pi)  # even integrand
    return float(np.sqrt(val))
