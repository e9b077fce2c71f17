"""Quadratic normal form of the surface system and its cubic interaction symbols.

The unknown u = h + i Lambda phi satisfies a dispersive equation whose
quadratic nonlinearity is non-resonant: the dressed variable

    V = h + A(h,h) + i Lambda (phi + B(h,phi))

evolves with no quadratic terms at all.  The bilinear corrections A and B have
separable symbols

    a(xi,eta) = -(|xi|/2) sgn(eta) sgn(xi-eta)
    b(xi,eta) = -|eta| sgn(xi-eta) sgn(xi)

so both operators factor into one-variable multipliers and a single pointwise
product; no double frequency sum is ever needed in production.  sgn(0) := 0
throughout, which extends every symbol to the degenerate lines {xi = 0},
{eta = 0}, {xi = eta} without spoiling the cancellation identities.

The remaining cubic terms N3 (and the quartic tail N4) are assembled from the
same building blocks.  Their frequency-space kernels c^{iota}(xi,eta,sigma)
are evaluated here as well: the stationary-phase value c_star(xi,0,0)
= -|xi|^{5/2}/2 drives the long-time phase correction, and the full kernels
feed an O(n^3) diagnostic application that field-level code is checked
against on tiny grids.
"""

from __future__ import annotations

import numpy as np

from . import dno
from . import nonlinearity as nonlin
from .spectral import (
    Field,
    SpectralError,
    Spectrum,
    apply_multiplier,
    product,
    to_spectrum,
)

_SYMBOLS = ("a", "b", "m2", "q2", "a2", "D")


def _sgn(x):
    return np.sign(x)


def eval_symbol(name: str, xi, eta):
    """Closed-form quadratic symbols; accepts scalars or broadcastable arrays."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if name == "a":
        return -(np.abs(xi) / 2.0) * _sgn(eta) * _sgn(xi - eta)
    if name == "b":
        return -np.abs(eta) * _sgn(xi - eta) * _sgn(xi)
    if name == "m2":
        return xi * eta - np.abs(xi) * np.abs(eta)
    if name == "q2":
        return 0.5 * (xi - eta) * eta + 0.5 * np.abs(xi - eta) * np.abs(eta)
    if name == "a2":
        return 0.5 * (eval_symbol("b", xi, eta) + eval_symbol("b", xi, xi - eta))
    if name == "D":
        axi, aeta, adf = np.abs(xi), np.abs(eta), np.abs(xi - eta)
        return (
            -(axi**2)
            - adf**2
            - aeta**2
            + 2.0 * axi * adf
            + 2.0 * axi * aeta
            + 2.0 * aeta * adf
        )
    raise SpectralError(f"unknown symbol {name!r}; expected one of {_SYMBOLS}")


def degenerate_mask(xi, eta):
    """Frequency pairs where some sgn argument vanishes (sgn-0 convention used)."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    return (xi == 0.0) | (eta == 0.0) | (xi == eta)


def b_general(xi, eta):
    """b recovered by solving the cancellation system; valid where D != 0."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    axi, aeta, adf = np.abs(xi), np.abs(eta), np.abs(xi - eta)
    num = (
        -2.0 * (axi + aeta - adf) * eval_symbol("q2", xi, eta)
        + (aeta + adf - axi) * eval_symbol("m2", xi, eta)
        - 2.0 * aeta * eval_symbol("m2", xi, xi - eta)
    )
    return num / eval_symbol("D", xi, eta)


def homological_residual(xi, eta):
    """The three symbol identities behind the quadratic cancellation.

    r1 pairs h-h cross terms in the elevation channel, r2 the phi-phi terms
    and r3 the h-h terms in the potential channel.  All vanish identically,
    including on the degenerate lines under sgn(0) := 0.
    """
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    b_here = eval_symbol("b", xi, eta)
    b_swap = eval_symbol("b", xi, xi - eta)
    r1 = (
        -np.abs(xi) * b_here
        + eval_symbol("m2", xi, eta)
        + 2.0 * eval_symbol("a", xi, xi - eta) * np.abs(eta)
    )
    r2 = eval_symbol("q2", xi, eta) + 0.5 * (b_here * np.abs(xi - eta) + b_swap * np.abs(eta))
    r3 = eval_symbol("a", xi, eta) - 0.5 * (b_here + b_swap)
    return r1, r2, r3


# ---------------------------------------------------------------------------
# bilinear operators

def apply_A(f: Field, g: Field) -> Field:
    """A(f,g) with symbol a(xi,eta): -1/2 |d_x| [(sgn(D) f)(sgn(D) g)]."""
    sf = apply_multiplier(f, "sgn")
    sg = apply_multiplier(g, "sgn")
    return -0.5 * apply_multiplier(product(sf, sg), "abs_d")


def apply_B(f: Field, g: Field) -> Field:
    """B(f,g) with symbol b(xi,eta): -sgn(D) [(sgn(D) f)(|d_x| g)]."""
    sf = apply_multiplier(f, "sgn")
    dg = apply_multiplier(g, "abs_d")
    return -apply_multiplier(product(sf, dg), "sgn")


def _i_lambda(f: Field) -> Field:
    lam = apply_multiplier(f, "lambda")
    return Field(f.grid, 1j * lam.values)


def to_normal_form(state: nonlin.SurfaceState) -> tuple[Field, Field, Field]:
    """Dressed variables (H, Psi, V) with V = H + i Lambda Psi complex."""
    h, phi = state.h, state.phi
    big_h = h + apply_A(h, h)
    psi = phi + apply_B(h, phi)
    v = Field(h.grid, big_h.values + 1j * apply_multiplier(psi, "lambda").values)
    return big_h, psi, v


def cubic_rhs_n3(state: nonlin.SurfaceState) -> Field:
    """Cubic terms left in the V equation after the quadratic cancellation."""
    h, phi = state.h, state.phi
    m2 = nonlin.m2_term(h, phi)
    real = nonlin.m3_term(h, phi) + 2.0 * apply_A(m2, h)
    bracket = nonlin.q3_term(h, phi) + apply_B(m2, phi) + apply_B(h, nonlin.q2_term(phi))
    return real + _i_lambda(bracket)


def quartic_rhs_n4(state: nonlin.SurfaceState, order: int = 4) -> Field:
    """Quartic (and dressed higher) terms; order sets the remainder truncation."""
    h, phi = state.h, state.phi
    r1 = dno.remainder_r1(h, phi, order)
    r2 = nonlin.remainder_r2(h, phi, order)
    m3r1 = nonlin.m3_term(h, phi) + r1
    real = r1 + 2.0 * apply_A(m3r1, h)
    bracket = r2 + apply_B(h, nonlin.q3_term(h, phi) + r2) + apply_B(m3r1, phi)
    return real + _i_lambda(bracket)


def time_derivative_v(state: nonlin.SurfaceState, dh: Field, dphi: Field) -> Field:
    """Chain rule through the dressing: d_t V for given (d_t h, d_t phi)."""
    h, phi = state.h, state.phi
    real = dh + 2.0 * apply_A(dh, h)
    bracket = dphi + apply_B(dh, phi) + apply_B(h, dphi)
    return real + _i_lambda(bracket)


def v_equation_residual(
    state: nonlin.SurfaceState,
    order: int,
    dno_order: int = 4,
    subtract: str = "n3n4",
) -> Field:
    """d_t V + i Lambda V minus the chosen cubic/quartic terms.

    With order-4 dynamics and subtract="n3n4" the residual is zero to
    roundoff; with lower-order dynamics the leftover measures exactly the
    terms the truncation dropped.
    """
    if subtract not in ("none", "n3", "n3n4"):
        raise SpectralError(f"unknown subtraction {subtract!r}")
    dh, dphi = nonlin.rhs(state, order, dno_order)
    _, _, v = to_normal_form(state)
    res = time_derivative_v(state, dh, dphi) + _i_lambda(v)
    if subtract in ("n3", "n3n4"):
        res = res - cubic_rhs_n3(state)
    if subtract == "n3n4":
        res = res - quartic_rhs_n4(state, dno_order)
    return res


# ---------------------------------------------------------------------------
# cubic interaction symbols
#
# F[N3](xi) = (i/L^2) sum_{eta,sigma} sum_iota c^iota(xi,eta,sigma)
#                     Vhat^{i1}(xi-eta) Vhat^{i2}(eta-sigma) Vhat^{i3}(sigma)
# with V^+ = V, V^- = conj(V).  The five summands follow the five field-level
# pieces of N3: l=1 elevation cubic, l=2 potential cubic, l=3 the A-dressing,
# l=4 and l=5 the two B-dressings.

def _m2_tilde(xi, eta):
    # m2(xi,eta)/sqrt|eta| without the 0/0: |xi| sqrt|eta| (sgn xi sgn eta - 1)
    return np.abs(xi) * np.sqrt(np.abs(eta)) * (_sgn(xi) * _sgn(eta) - 1.0)


def _q2_tilde(xi, eta):
    # q2(xi,eta)/(sqrt|xi-eta| sqrt|eta|), again in product form
    return (
        0.5
        * np.sqrt(np.abs(xi - eta))
        * np.sqrt(np.abs(eta))
        * (_sgn(xi - eta) * _sgn(eta) + 1.0)
    )


def _b_scaled(xi, eta):
    # b(xi,eta)/sqrt|eta| = -sqrt|eta| sgn(xi-eta) sgn(xi)
    return -np.sqrt(np.abs(eta)) * _sgn(xi - eta) * _sgn(xi)


def _c_plus_plus_minus(l, xi, eta, sigma):
    axi = np.abs(xi)
    if l == 1:
        return (
            2.0 * axi * np.abs(eta - sigma) ** 1.5
            - axi * np.abs(sigma) ** 1.5
            + 2.0 * axi**2 * np.abs(eta - sigma) ** 0.5
            - axi**2 * np.abs(sigma) ** 0.5
        ) / 16.0 + (
            -axi * np.abs(xi - sigma) * np.abs(eta - sigma) ** 0.5
            - axi * np.abs(eta) * np.abs(eta - sigma) ** 0.5
            + axi * np.abs(eta) * np.abs(sigma) ** 0.5
        ) / 8.0
    if l == 2:
        rxi = np.sqrt(axi)
        rdf = np.sqrt(np.abs(xi - eta))
        return (
            rxi * np.abs(xi - eta) ** 1.5 * np.abs(sigma) ** 0.5
            + rxi * rdf * np.abs(sigma) ** 1.5
            - rxi * rdf * np.abs(eta - sigma) ** 1.5
            - rxi * np.abs(xi - sigma) * np.abs(eta - sigma) ** 0.5 * np.abs(sigma) ** 0.5
            - rxi * rdf * np.abs(eta) * np.abs(sigma) ** 0.5
            + rxi * rdf * np.abs(eta) * np.abs(eta - sigma) ** 0.5
        ) / 8.0
    if l == 3:
        return (
            eval_symbol("a", xi, eta) * _m2_tilde(eta, sigma)
            - eval_symbol("a", xi, eta) * _m2_tilde(eta, eta - sigma)
            - eval_symbol("a", xi, xi - sigma) * _m2_tilde(xi - sigma, xi - eta)
        ) / 4.0
    if l == 4:
        rxi = np.sqrt(axi)
        return (
            rxi * _b_scaled(xi, xi - eta) * _m2_tilde(eta, sigma)
            - rxi * _b_scaled(xi, xi - eta) * _m2_tilde(eta, eta - sigma)
            + rxi * _b_scaled(xi, sigma) * _m2_tilde(xi - sigma, xi - eta)
        ) / 8.0
    if l == 5:
        rxi = np.sqrt(axi)
        return (
            2.0 * rxi * eval_symbol("b", xi, eta) * _q2_tilde(eta, sigma)
            - rxi * eval_symbol("b", xi, xi - sigma) * _q2_tilde(xi - sigma, xi - eta)
        ) / 8.0
    raise SpectralError(f"cubic symbol index {l} out of range 1..5")


def _c_plus_plus_plus(l, xi, eta, sigma):
    axi = np.abs(xi)
    if l == 1:
        return (
            axi * np.abs(sigma) ** 1.5
            + axi**2 * np.abs(sigma) ** 0.5
            - 2.0 * axi * np.abs(eta) * np.abs(sigma) ** 0.5
        ) / 16.0
    if l == 2:
        rxi = np.sqrt(axi)
        rdf = np.sqrt(np.abs(xi - eta))
        return (
            -rxi * rdf * np.abs(eta - sigma) ** 1.5
            + rxi * rdf * np.abs(eta) * np.abs(sigma) ** 0.5
        ) / 8.0
    if l == 3:
        return -eval_symbol("a", xi, eta) * _m2_tilde(eta, sigma) / 4.0
    if l == 4:
        return -np.sqrt(axi) * _b_scaled(xi, xi - eta) * _m2_tilde(eta, sigma) / 8.0
    if l == 5:
        return -np.sqrt(axi) * eval_symbol("b", xi, eta) * _q2_tilde(eta, sigma) / 8.0
    raise SpectralError(f"cubic symbol index {l} out of range 1..5")


# conjugating every slot flips the sign of the odd-parity summands only
_CONJ_SIGN = {1: -1.0, 2: 1.0, 3: -1.0, 4: 1.0, 5: 1.0}
_TRIPLES = ("++-", "+++", "--+", "---")


def eval_cubic_symbol(triple: str, xi, eta, sigma, l: int | None = None):
    """Kernel c^{iota}(xi,eta,sigma); l picks one summand, default sums all five."""
    if triple not in _TRIPLES:
        raise SpectralError(f"unknown interaction triple {triple!r}")
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    ls = range(1, 6) if l is None else (l,)
    total = 0.0
    for li in ls:
        if triple == "++-":
            total = total + _c_plus_plus_minus(li, xi, eta, sigma)
        elif triple == "+++":
            total = total + _c_plus_plus_plus(li, xi, eta, sigma)
        elif triple == "--+":
            total = total + _CONJ_SIGN[li] * _c_plus_plus_minus(li, xi, eta, sigma)
        else:
            total = total + _CONJ_SIGN[li] * _c_plus_plus_plus(li, xi, eta, sigma)
    return total


def c_star(xi: float, x, y, l: int | None = None):
    """Stationary-phase kernel c*_xi(x,y) = c^{++-}(xi, -x, -xi-x-y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return eval_cubic_symbol("++-", xi, -x, -xi - x - y, l=l)


def c_star_terms(xi: float, x, y):
    """The five expanded summands of c*; an independent route for cross-checks."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    axi = np.abs(xi)
    rxi = np.sqrt(axi)
    p = np.abs(xi + x)
    q = np.abs(xi + y)
    r = np.abs(xi + x + y)
    s = np.abs(2.0 * xi + x + y)
    ip = _sgn(xi + x)
    iq = _sgn(xi + y)
    ir = _sgn(xi + x + y)
    ix = _sgn(xi)
    c1 = (
        axi * q**1.5 / 8.0
        - axi * r**1.5 / 16.0
        + axi**2 * q**0.5 / 8.0
        - axi**2 * r**0.5 / 16.0
        - axi * s * q**0.5 / 8.0
        - axi * np.abs(x) * q**0.5 / 8.0
        + axi * np.abs(x) * r**0.5 / 8.0
    )
    c2 = (
        rxi * p**1.5 * r**0.5 / 8.0
        + rxi * p**0.5 * r**1.5 / 8.0
        - rxi * p**0.5 * q**1.5 / 8.0
        - rxi * s * q**0.5 * r**0.5 / 8.0
        - rxi * p**0.5 * np.abs(x) * r**0.5 / 8.0
        + rxi * p**0.5 * np.abs(x) * q**0.5 / 8.0
    )
    c3 = (
        axi * r**0.5 * ip * (np.abs(x) * ir - x) / 8.0
        + axi * q**0.5 * ip * (np.abs(x) * iq + x) / 8.0
        - axi * p**0.5 * ir * (s * ip - (2.0 * xi + x + y)) / 8.0
    )
    c4 = (
        rxi * p**0.5 * r**0.5 * ix * (np.abs(x) * ir - x) / 8.0
        + rxi * p**0.5 * q**0.5 * ix * (np.abs(x) * iq + x) / 8.0
        - rxi * p**0.5 * r**0.5 * ix * (s * ip - (2.0 * xi + x + y)) / 8.0
    )
    c5 = (
        -rxi * q**0.5 * r**0.5 * ix * ip * np.abs(x) * (1.0 - iq * ir) / 8.0
        - rxi * q**0.5 * p**0.5 * ix * ir * s * (1.0 + iq * ip) / 16.0
    )
    return [c1, c2, c3, c4, c5]


def c_tilde(xi: float) -> float:
    """Phase-correction constant -8 pi |xi|^{3/2} c*_xi(0,0) = 4 pi |xi|^4."""
    return float(-8.0 * np.pi * np.abs(xi) ** 1.5 * c_star(xi, 0.0, 0.0))


def apply_cubic_diagnostic(v: Spectrum, diagnostic: bool = False) -> Spectrum:
    """Apply the cubic kernels to Vhat by direct triple summation.

    O(n^3) and gated: pass diagnostic=True and keep n <= 64.  Production code
    never calls this; it exists so the field-level assembly of N3 can be
    checked against the printed kernels.
    """
    if not diagnostic:
        raise SpectralError("cubic kernel application is a diagnostic; pass diagnostic=True")
    grid = v.grid
    if grid.n > 64:
        raise SpectralError(f"diagnostic cubic application limited to n <= 64, got {grid.n}")
    modes = np.fft.fftshift(grid.modes)
    m0 = int(modes[0])
    scale = 2.0 * np.pi / grid.period
    plus = np.fft.fftshift(v.coeffs)
    minus = np.zeros_like(plus)
    for i, k in enumerate(modes):
        j = -int(k) - m0
        if 0 <= j < grid.n:
            minus[i] = np.conj(plus[j])
    pick = {"+": plus, "-": minus}
    eta_g, sig_g = np.meshgrid(modes, modes, indexing="ij")
    out = np.zeros(grid.n, dtype=complex)
    for i_out, k in enumerate(modes):
        idx1 = k - eta_g - m0  # mode xi - eta
        idx2 = eta_g - sig_g - m0  # mode eta - sigma
        idx3 = sig_g - m0
        ok = (idx1 >= 0) & (idx1 < grid.n) & (idx2 >= 0) & (idx2 < grid.n)
        acc = 0.0 + 0.0j
        for triple in _TRIPLES:
            c = eval_cubic_symbol(triple, scale * k, scale * eta_g, scale * sig_g)
            f1 = np.where(ok, pick[triple[0]][np.clip(idx1, 0, grid.n - 1)], 0.0)
            f2 = np.where(ok, pick[triple[1]][np.clip(idx2, 0, grid.n - 1)], 0.0)
            f3 = pick[triple[2]][idx3]
            acc += np.sum(np.where(ok, c, 0.0) * f1 * f2 * f3)
        out[i_out] = 1j * acc / grid.period**2
    return Spectrum(grid, np.fft.ifftshift(out))
