"""Dirichlet-Neumann operator G(h) as a truncated homogeneous series.

Two structurally independent realizations are provided.  The production path
inverts the boundary-integral density equation: the singular layer kernels are
expanded into Calderon commutators

    C_m(h; g) = sum_s binom(m,s) (-1)^s h^{m-s} T_m[h^s g],

where T_m is the Fourier multiplier with symbol
J_m(w) = ((-1)^m / m!) (i w)^m (-i pi sgn w), so that C_m carries the kernel
(h(x)-h(y))^m / (x-y)^{m+1} exactly for polynomial kernels.  The density
rho = sum_d rho_d (even degrees d in h) solves a Neumann series

    rho_0 = |d_x| f,      rho_d = - sum_{n=1}^{d//2} Q_{2n} rho_{d-2n},

and the operator assembles as G_d = rho_d (d even), G_d = sum_n R_{2n+1}
rho_{d-2n-1} (d odd).  The degree-0 density is pinned to |d_x| f, which fixes
the layer-potential normalization so that the order-1 truncation is the flat
half-space operator.

The oracle path Taylor-expands the harmonic potential vertically off the rest
line: mu_0 = f, mu_j = -sum_{k=1}^{j} (h^k/k!) |D|^k mu_{j-k}, and reads the
normal derivative degree by degree.  The two recursions share only the spectral
core; their agreement is the module's cross-validation.

All products are dealiased; "order" always means the number of retained
multilinear terms, i.e. homogeneity degrees 0 .. order-1 in h.
"""

from __future__ import annotations

import math

import numpy as np

from .spectral import (
    Field,
    SpectralError,
    apply_multiplier,
    dealiased_product_values,
    l2_norm,
    multiplier_symbol,
    to_field,
    to_spectrum,
    Spectrum,
)


class DnoSeriesError(SpectralError):
    """Raised when the density series is outside its convergence regime."""


def tm_symbol(grid, m: int) -> np.ndarray:
    """Symbol of T_m: ((-1)^m / m!) (i xi)^m (-i pi sgn xi)."""
    xi = grid.freqs
    return ((-1.0) ** m / math.factorial(m)) * (1j * xi) ** m * (-1j * np.pi * np.sign(xi))


def apply_tm(f: Field, m: int) -> Field:
    spec = to_spectrum(f)
    out = Spectrum(f.grid, tm_symbol(f.grid, m) * spec.coeffs)
    # J_m(-w) = conj(J_m(w)) for every m, so T_m preserves realness
    return to_field(out, real=f.is_real)


def hilbert_transform(f: Field) -> Field:
    """Principal-value convolution with 1/(x-y); symbol -i pi sgn xi."""
    return apply_tm(f, 0)


def _h_powers(h: Field, top: int) -> list[np.ndarray]:
    """[1, h, h^2, ..., h^top] as value arrays, each power dealiased."""
    powers = [np.ones(h.grid.n), h.values]
    for _ in range(top - 1):
        powers.append(dealiased_product_values(powers[-1], h.values))
    return powers[: top + 1]


def calderon_apply(m: int, h: Field, g: Field, h_powers=None) -> Field:
    """C_m(h; g): the commutator expansion of (h(x)-h(y))^m/(x-y)^{m+1}."""
    if h_powers is None:
        h_powers = _h_powers(h, m)
    acc = np.zeros(h.grid.n, dtype=float if g.is_real else complex)
    for s in range(m + 1):
        inner = apply_tm(Field(h.grid, dealiased_product_values(h_powers[s], g.values)), m)
        term = dealiased_product_values(h_powers[m - s], inner.values)
        acc = acc + math.comb(m, s) * (-1.0) ** s * term
    return Field(h.grid, acc)


def _check_regime(h: Field) -> Field:
    if not h.is_real:
        raise DnoSeriesError("surface elevation must be real")
    hx = apply_multiplier(h, "d_x")
    steep = float(np.max(np.abs(hx.values)))
    if steep >= 1.0:
        raise DnoSeriesError(f"max |h'| = {steep:.3f} >= 1; series expansion invalid")
    return hx


def _q_apply(n: int, h: Field, hx: Field, rho: Field, h_powers) -> Field:
    # Q_{2n} = (1/pi^2) (-1)^{n+1} T_0 [ C_{2n} - h' C_{2n-1} . ]
    c_even = calderon_apply(2 * n, h, rho, h_powers)
    c_odd = calderon_apply(2 * n - 1, h, rho, h_powers)
    inner = Field(h.grid, c_even.values - dealiased_product_values(hx.values, c_odd.values))
    return ((-1.0) ** (n + 1) / np.pi**2) * hilbert_transform(inner)


def _r_apply(n: int, h: Field, hx: Field, rho: Field, h_powers) -> Field:
    # R_{2n+1} = -(1/pi) (-1)^n [ C_{2n+1} - h' C_{2n} ]
    c_odd = calderon_apply(2 * n + 1, h, rho, h_powers)
    c_even = calderon_apply(2 * n, h, rho, h_powers)
    vals = c_odd.values - dealiased_product_values(hx.values, c_even.values)
    return Field(h.grid, (-((-1.0) ** n) / np.pi) * vals)


def density_terms(h: Field, f: Field, order: int) -> list[Field]:
    """Homogeneous density corrections rho_d, d = 0 .. order-1 (odd d vanish)."""
    if order < 1:
        raise DnoSeriesError(f"order must be >= 1, got {order}")
    hx = _check_regime(h)
    h_powers = _h_powers(h, max(2 * ((order - 1) // 2) + 1, 1))
    zero = Field(h.grid, np.zeros(h.grid.n))
    terms = [apply_multiplier(f, "abs_d")]
    prev_norm = l2_norm(terms[0])
    # corrections at roundoff scale (sign-degenerate data) are exempt from the
    # contraction check and do not reset the comparison point
    floor = 1e-12 * prev_norm
    for d in range(1, order):
        if d % 2 == 1:
            terms.append(zero)
            continue
        acc = np.zeros(h.grid.n)
        for n in range(1, d // 2 + 1):
            acc = acc - _q_apply(n, h, hx, terms[d - 2 * n], h_powers).values
        term = Field(h.grid, acc)
        cur = l2_norm(term)
        if prev_norm > floor and cur > max(0.5 * prev_norm, floor):
            raise DnoSeriesError(
                f"density correction at degree {d} is {cur:.3e} vs {prev_norm:.3e} "
                "at the previous degree; series is not contracting"
            )
        if cur > floor:
            prev_norm = cur
        terms.append(term)
    return terms


def density_solve(h: Field, f: Field, order: int) -> Field:
    total = np.zeros(h.grid.n)
    for term in density_terms(h, f, order):
        total = total + term.values
    return Field(h.grid, total)


def dno_terms(h: Field, f: Field, order: int) -> list[Field]:
    """Homogeneous terms G_d f of the operator series, d = 0 .. order-1."""
    rho = density_terms(h, f, order)
    hx = _check_regime(h)
    h_powers = _h_powers(h, max(order, 1))
    out = []
    for d in range(order):
        if d % 2 == 0:
            out.append(rho[d])
        else:
            acc = np.zeros(h.grid.n)
            for n in range((d - 1) // 2 + 1):
                acc = acc + _r_apply(n, h, hx, rho[d - 2 * n - 1], h_powers).values
            out.append(Field(h.grid, acc))
    return out


def dno_apply(h: Field, f: Field, order: int) -> Field:
    total = np.zeros(h.grid.n)
    for term in dno_terms(h, f, order):
        total = total + term.values
    return Field(h.grid, total)


def dno_oracle_terms(h: Field, f: Field, order: int) -> list[Field]:
    """Vertical-Taylor recursion for the same series; independent of the density path."""
    if order < 1:
        raise DnoSeriesError(f"order must be >= 1, got {order}")
    hx = _check_regime(h)
    g = h.grid
    h_powers = _h_powers(h, max(order, 1))
    absd = np.abs(g.freqs)

    def absd_pow(values: np.ndarray, k: int) -> np.ndarray:
        spec = to_spectrum(Field(g, values))
        return to_field(Spectrum(g, absd**k * spec.coeffs), real=True).values

    def dx(values: np.ndarray) -> np.ndarray:
        spec = to_spectrum(Field(g, values))
        return to_field(Spectrum(g, multiplier_symbol(g, "d_x") * spec.coeffs), real=True).values

    mu = [np.asarray(f.values, dtype=float)]
    for j in range(1, order):
        acc = np.zeros(g.n)
        for k in range(1, j + 1):
            acc = acc - dealiased_product_values(
                h_powers[k] / math.factorial(k), absd_pow(mu[j - k], k)
            )
        mu.append(acc)

    out = []
    for n in range(order):
        acc = np.zeros(g.n)
        for k in range(n + 1):
            acc = acc + dealiased_product_values(
                h_powers[k] / math.factorial(k), absd_pow(mu[n - k], k + 1)
            )
        tang = np.zeros(g.n)
        for k in range(n):
            tang = tang + dealiased_product_values(
                h_powers[k] / math.factorial(k), absd_pow(dx(mu[n - 1 - k]), k)
            )
        acc = acc - dealiased_product_values(hx.values, tang)
        out.append(Field(g, acc))
    return out


def dno_oracle(h: Field, f: Field, order: int) -> Field:
    total = np.zeros(h.grid.n)
    for term in dno_oracle_terms(h, f, order):
        total = total + term.values
    return Field(h.grid, total)


def remainder_r1(h: Field, phi: Field, order: int) -> Field:
    """Series tail of degrees >= 3 in h (total homogeneity >= 4)."""
    if order <= 3:
        return Field(h.grid, np.zeros(h.grid.n))
    terms = dno_terms(h, phi, order)
    total = np.zeros(h.grid.n)
    for term in terms[3:]:
        total = total + term.values
    return Field(h.grid, total)
