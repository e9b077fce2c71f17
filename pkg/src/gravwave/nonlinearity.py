"""Right-hand side of the expanded surface system, and the conserved energy.

The evolution unknowns are the surface elevation h and the trace potential
phi.  At truncation order N the system is

    d_t h   = |d_x| phi + M2(h,phi) + M3(h,h,phi) + R1(h,phi)
    d_t phi = -h + Q2(phi,phi) + Q3(phi,h,phi) + R2(h,phi)

with R1 the Dirichlet-Neumann series tail and R2 the degree >= 4 part of the
Bernoulli quotient (G(h)phi + h_x phi_x)^2 / (2 (1 + h_x^2)).  Truncating the
energy E0 = 1/2 int phi G(h) phi + 1/2 int h^2 at the same operator order
makes the truncated system an exact Hamiltonian flow, so energy drift measures
integrator error alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dno
from .spectral import (
    Field,
    SpectralError,
    apply_multiplier,
    check_wraparound,
    product,
    to_field,
    to_spectrum,
)


class NonFiniteError(SpectralError):
    """Raised when a right-hand side evaluation produces NaN or Inf."""


@dataclass(frozen=True)
class SurfaceState:
    t: float
    h: Field
    phi: Field


def pin_zero_mode(f: Field) -> Field:
    return Field(f.grid, f.values - f.values.mean())


def validate_state(state: SurfaceState, wrap_tol: float = 1e-8) -> None:
    if not (state.h.is_real and state.phi.is_real):
        raise SpectralError("surface state must be real")
    if state.h.grid.n != state.phi.grid.n or state.h.grid.period != state.phi.grid.period:
        raise SpectralError("h and phi live on different grids")
    if abs(to_spectrum(state.phi).coeffs[0]) > 1e-10:
        raise SpectralError("phi carries a non-negligible zero mode")
    check_wraparound(state.h, wrap_tol)
    check_wraparound(apply_multiplier(state.phi, "lambda"), wrap_tol)


def _absd(f: Field) -> Field:
    return apply_multiplier(f, "abs_d")


def _dx(f: Field) -> Field:
    return apply_multiplier(f, "d_x")


def m2_term(h: Field, phi: Field) -> Field:
    return -_dx(product(h, _dx(phi))) - _absd(product(h, _absd(phi)))


def m3_term(h: Field, phi: Field) -> Field:
    h2 = product(h, h)
    inner = (
        product(h2, _absd(_absd(phi)))
        + _absd(product(h2, _absd(phi)))
        - 2.0 * product(h, _absd(product(h, _absd(phi))))
    )
    return -0.5 * _absd(inner)


def q2_term(phi: Field) -> Field:
    phix = _dx(phi)
    lphi = _absd(phi)
    return 0.5 * (product(lphi, lphi) - product(phix, phix))


def q3_term(h: Field, phi: Field) -> Field:
    lphi = _absd(phi)
    bracket = product(h, _absd(lphi)) - _absd(product(h, lphi))
    return product(lphi, bracket)


def remainder_r2(h: Field, phi: Field, order: int, g_terms=None) -> Field:
    """Degrees 4..order of (G(h)phi + h_x phi_x)^2 / (2 (1 + h_x^2))."""
    grid = h.grid
    if order <= 3:
        return Field(grid, np.zeros(grid.n))
    hx = _dx(h)
    # P_k: total-degree-k pieces of G(h)phi + h_x phi_x, k = 1..order-1
    if g_terms is None:
        g_terms = dno.dno_terms(h, phi, order - 1)
    p = {k + 1: g_terms[k].values.copy() for k in range(order - 1)}
    p[2] = p.get(2, np.zeros(grid.n)) + product(hx, _dx(phi)).values
    # W_i: degree-i pieces of 1 / (2 (1 + h_x^2))
    hx2 = product(hx, hx).values
    w = {0: 0.5 * np.ones(grid.n)}
    i = 2
    while i <= order - 2:
        w[i] = -product(Field(grid, w[i - 2]), Field(grid, hx2)).values
        i += 2
    total = np.zeros(grid.n)
    for k in range(4, order + 1):
        for i in w:
            for j in p:
                l = k - i - j
                if l in p and l >= j:
                    sym = 1.0 if l == j else 2.0
                    pj_pl = product(Field(grid, p[j]), Field(grid, p[l]))
                    total = total + sym * product(Field(grid, w[i]), pj_pl).values
    return Field(grid, total)


def dno_truncation(order: int, dno_order: int) -> int:
    """Operator truncation implied by the rhs order (shared with the energy)."""
    return order if order <= 3 else dno_order


def rhs(state: SurfaceState, order: int, dno_order: int = 4) -> tuple[Field, Field]:
    """Nonlinear system right-hand side (d_t h, d_t phi) at the given order."""
    if order < 1:
        raise SpectralError(f"rhs order must be >= 1, got {order}")
    h, phi = state.h, state.phi
    dh = _absd(phi)
    dphi = -h
    if order >= 2:
        dh = dh + m2_term(h, phi)
        dphi = dphi + q2_term(phi)
    if order >= 3:
        dh = dh + m3_term(h, phi)
        dphi = dphi + q3_term(h, phi)
    if order >= 4:
        g_terms = dno.dno_terms(h, phi, dno_order)
        for tail in g_terms[3:]:
            dh = dh + tail
        dphi = dphi + remainder_r2(h, phi, dno_order, g_terms=g_terms)
    if not (np.all(np.isfinite(dh.values)) and np.all(np.isfinite(dphi.values))):
        raise NonFiniteError(f"non-finite right-hand side at t = {state.t}")
    return dh, dphi


def rhs_nonlinear(state: SurfaceState, order: int, dno_order: int = 4) -> tuple[Field, Field]:
    """rhs minus its linear part (|d_x| phi, -h); zero at order 1."""
    dh, dphi = rhs(state, order, dno_order)
    return dh - _absd(state.phi), dphi + state.h


def energy_e0(state: SurfaceState, order: int, dno_order: int = 4) -> float:
    """E0 = 1/2 int phi G(h) phi + 1/2 int h^2 with G at the matching order."""
    g_order = dno_truncation(order, dno_order)
    h, phi = state.h, state.phi
    gphi = dno.dno_apply(h, phi, g_order)
    dx_w = h.grid.dx
    kinetic = 0.5 * dx_w * np.sum(product(phi, gphi).values)
    potential = 0.5 * dx_w * np.sum(product(h, h).values)
    return float(kinetic + potential)
