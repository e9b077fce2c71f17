import numpy as np
import numpy.testing as npt
import pytest

from gravwave import dno
from gravwave import spectral as sp

from oracles import calderon_direct, hilbert_direct


def grid2pi(n=128):
    return sp.make_grid(n, 2 * np.pi)


def absd(f):
    return sp.apply_multiplier(f, "abs_d")


def dx(f):
    return sp.apply_multiplier(f, "d_x")


def m2_direct(h, f):
    # -d_x(h d_x f) - |d_x|(h |d_x| f)
    return -dx(sp.product(h, dx(f))) - absd(sp.product(h, absd(f)))


def m3_direct(h, f):
    # -1/2 |d_x|[ h^2 |d_x|^2 f + |d_x|(h^2 |d_x| f) - 2 h |d_x|(h |d_x| f) ]
    h2 = sp.product(h, h)
    inner = (
        sp.product(h2, absd(absd(f)))
        + absd(sp.product(h2, absd(f)))
        - 2.0 * sp.product(h, absd(sp.product(h, absd(f))))
    )
    return -0.5 * absd(inner)


def rel_err(a, b):
    denom = np.max(np.abs(b.values))
    return np.max(np.abs(a.values - b.values)) / denom


# ---------------------------------------------------------------------------
# commutator building blocks against principal-value quadrature

def test_hilbert_transform_matches_quadrature():
    g = grid2pi(128)
    f = sp.field_from_function(g, lambda x: np.cos(3 * x) + 0.4 * np.sin(x))
    got = dno.hilbert_transform(f)
    npt.assert_allclose(got.values, np.pi * hilbert_direct(f), atol=1e-10)


def test_hilbert_symbol():
    g = grid2pi(64)
    f = sp.field_from_function(g, lambda x: np.cos(5 * x))
    out = dno.hilbert_transform(f)
    # symbol -i pi sgn: cos -> pi sin
    npt.assert_allclose(out.values, np.pi * np.sin(5 * g.xs), atol=1e-11)


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_calderon_matches_quadrature(m):
    g = grid2pi(256)
    h = sp.field_from_function(g, lambda x: 0.25 * np.cos(x) + 0.1 * np.sin(2 * x))
    f = sp.field_from_function(g, lambda x: np.cos(2 * x) - 0.3 * np.sin(3 * x))
    got = dno.calderon_apply(m, h, f)
    want = calderon_direct(m, h, f)
    scale = max(np.max(np.abs(want)), 1e-30)
    npt.assert_allclose(got.values, want, atol=1e-8 * scale)


def test_calderon_c1_identity():
    # C_1 g = pi [ |d_x|(h g) - h |d_x| g ]
    g = grid2pi(128)
    h = sp.field_from_function(g, lambda x: 0.2 * np.cos(x))
    f = sp.field_from_function(g, lambda x: np.sin(2 * x))
    got = dno.calderon_apply(1, h, f)
    want = np.pi * (absd(sp.product(h, f)) - sp.product(h, absd(f)))
    npt.assert_allclose(got.values, want.values, atol=1e-12)


# ---------------------------------------------------------------------------
# density recursion

def test_density_flat_surface():
    g = grid2pi(64)
    h = sp.Field(g, np.zeros(g.n))
    f = sp.field_from_function(g, lambda x: np.cos(2 * x) + np.sin(5 * x))
    rho = dno.density_solve(h, f, order=4)
    npt.assert_array_equal(rho.values, absd(f).values)


def test_density_first_correction_vs_quadrature():
    # rho_2 = -(1/pi^2) T_0 [ C_2 rho_0 - h' C_1 rho_0 ], everything on the
    # right evaluated by O(n^2) principal-value quadrature
    g = grid2pi(256)
    eps = 0.05
    h = sp.field_from_function(g, lambda x: eps * np.cos(x))
    f = sp.field_from_function(g, lambda x: np.cos(x))
    rho0 = absd(f)
    got = dno.density_solve(h, f, order=3) - rho0
    hx = dx(h)
    inner = calderon_direct(2, h, rho0) - hx.values * calderon_direct(1, h, rho0)
    want = -hilbert_direct(sp.Field(g, inner)) / np.pi
    scale = np.max(np.abs(want))
    npt.assert_allclose(got.values, want, atol=1e-7 * scale)


def test_density_order_two_has_no_correction():
    # corrections enter at even degree 2, so orders 1 and 2 coincide
    g = grid2pi(64)
    h = sp.field_from_function(g, lambda x: 0.1 * np.cos(x))
    f = sp.field_from_function(g, lambda x: np.sin(2 * x))
    r1 = dno.density_solve(h, f, order=1)
    r2 = dno.density_solve(h, f, order=2)
    npt.assert_array_equal(r1.values, r2.values)


def test_density_rejects_steep_surface():
    g = grid2pi(64)
    h = sp.field_from_function(g, lambda x: 1.3 * np.sin(x))
    f = sp.field_from_function(g, lambda x: np.cos(x))
    with pytest.raises(dno.DnoSeriesError):
        dno.density_solve(h, f, order=2)


def test_density_noncontracting_series_flagged():
    g = grid2pi(128)
    h = sp.field_from_function(g, lambda x: 0.95 * np.sin(x))
    f = sp.field_from_function(g, lambda x: np.cos(x))
    with pytest.raises(dno.DnoSeriesError):
        dno.density_solve(h, f, order=9)


def test_degenerate_first_correction_not_flagged():
    # the degree-2 correction vanishes by sign structure for this datum; the
    # contraction guard must not compare the genuine degree-4 term against it
    g = grid2pi(128)
    h = sp.field_from_function(g, lambda x: 0.01 * np.sin(2 * x))
    f = sp.field_from_function(g, lambda x: np.cos(6 * x))
    terms = dno.density_terms(h, f, order=7)
    assert sp.l2_norm(terms[2]) < 1e-10 * sp.l2_norm(terms[0])
    assert sp.l2_norm(terms[4]) > 0


# ---------------------------------------------------------------------------
# operator series: anchors and printed formulas

def test_flat_operator_all_orders():
    g = grid2pi(64)
    h = sp.Field(g, np.zeros(g.n))
    f = sp.field_from_function(g, lambda x: np.cos(3 * x))
    for order in (1, 2, 3, 4):
        out = dno.dno_apply(h, f, order)
        npt.assert_allclose(out.values, 3 * np.cos(3 * g.xs), atol=1e-12)


def test_order_one_is_flat_for_any_surface():
    g = grid2pi(64)
    h = sp.field_from_function(g, lambda x: 0.3 * np.cos(x))
    f = sp.field_from_function(g, lambda x: np.sin(2 * x))
    out = dno.dno_apply(h, f, order=1)
    npt.assert_array_equal(out.values, absd(f).values)


def test_quadratic_term_is_m2():
    g = grid2pi(256)
    h = sp.field_from_function(g, lambda x: 0.01 * np.cos(3 * x))
    f = sp.field_from_function(g, lambda x: np.sin(2 * x))
    got = dno.dno_terms(h, f, order=2)[1]
    want = m2_direct(h, f)
    assert rel_err(got, want) < 1e-10


def test_quadratic_term_sign_degenerate_datum():
    # the symbol of the quadratic term kills same-sign frequency pairs, so
    # this datum (modes 1 and 2 only) gives an identically zero term
    g = grid2pi(256)
    h = sp.field_from_function(g, lambda x: 0.01 * np.cos(x))
    f = sp.field_from_function(g, lambda x: np.sin(2 * x))
    got = dno.dno_terms(h, f, order=2)[1]
    assert np.max(np.abs(got.values)) < 1e-14
    assert np.max(np.abs(m2_direct(h, f).values)) < 1e-14


def test_cubic_term_is_m3():
    g = grid2pi(256)
    h = sp.field_from_function(g, lambda x: 0.01 * np.cos(3 * x))
    f = sp.field_from_function(g, lambda x: np.sin(2 * x))
    got = dno.dno_terms(h, f, order=3)[2]
    want = m3_direct(h, f)
    assert rel_err(got, want) < 1e-8


def test_invalid_order():
    g = grid2pi(64)
    z = sp.Field(g, np.zeros(g.n))
    with pytest.raises(dno.DnoSeriesError):
        dno.dno_apply(z, z, order=0)


# ---------------------------------------------------------------------------
# cross-validation of the two recursions

def multi_mode_data(n=256):
    g = grid2pi(n)
    h = sp.field_from_function(
        g, lambda x: 0.02 * np.cos(x) + 0.01 * np.sin(2 * x) + 0.005 * np.cos(3 * x)
    )
    f = sp.field_from_function(g, lambda x: np.sin(x) + 0.5 * np.cos(2 * x))
    return g, h, f


@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_cross_validation_low_orders(order):
    _, h, f = multi_mode_data()
    a = dno.dno_apply(h, f, order)
    b = dno.dno_oracle(h, f, order)
    assert rel_err(a, b) < 1e-8


def test_cross_validation_termwise():
    _, h, f = multi_mode_data()
    ta = dno.dno_terms(h, f, 5)
    tb = dno.dno_oracle_terms(h, f, 5)
    base = np.max(np.abs(ta[0].values))
    for d in range(5):
        scale = max(np.max(np.abs(ta[d].values)), 1e-12 * base)
        assert np.max(np.abs(ta[d].values - tb[d].values)) < 1e-7 * scale


def test_oracle_flat_surface():
    g = grid2pi(64)
    h = sp.Field(g, np.zeros(g.n))
    f = sp.field_from_function(g, lambda x: np.sin(4 * x))
    out = dno.dno_oracle(h, f, 4)
    npt.assert_allclose(out.values, absd(f).values, atol=1e-12)


# ---------------------------------------------------------------------------
# structural properties

def test_translation_equivariance():
    g, h, f = multi_mode_data()
    shift = 37
    out = dno.dno_apply(h, f, 4)
    hs = sp.Field(g, np.roll(h.values, shift))
    fs = sp.Field(g, np.roll(f.values, shift))
    outs = dno.dno_apply(hs, fs, 4)
    npt.assert_allclose(outs.values, np.roll(out.values, shift), atol=1e-10)


@pytest.mark.parametrize("degree", [1, 2])
def test_derivative_identity(degree):
    # d_x G_d(h; f) = [slot derivatives in h] + G_d(h; d_x f); the h-slot sum
    # is the directional derivative of the degree-d homogeneous map along h_x,
    # computed exactly by central differencing (degree <= 2)
    g, h, f = multi_mode_data()
    hx, fx = dx(h), dx(f)
    lhs = dx(dno.dno_terms(h, f, degree + 1)[degree])
    delta = 0.5
    plus = dno.dno_terms(h + delta * hx, f, degree + 1)[degree]
    minus = dno.dno_terms(h - delta * hx, f, degree + 1)[degree]
    slot_h = (1.0 / (2 * delta)) * (plus - minus)
    slot_f = dno.dno_terms(h, fx, degree + 1)[degree]
    rhs = slot_h + slot_f
    scale = max(np.max(np.abs(lhs.values)), 1e-14)
    npt.assert_allclose(lhs.values, rhs.values, atol=1e-8 * scale)


def test_self_adjointness():
    g = grid2pi(256)
    h = sp.field_from_function(g, lambda x: 0.05 * np.cos(x) + 0.02 * np.sin(3 * x))
    f = sp.field_from_function(g, lambda x: np.sin(x) + 0.3 * np.cos(4 * x))
    w = sp.field_from_function(g, lambda x: np.cos(2 * x) - 0.2 * np.sin(5 * x))
    for order in (1, 2, 3):
        gf = dno.dno_apply(h, f, order)
        gw = dno.dno_apply(h, w, order)
        left = g.dx * np.sum(gf.values * w.values)
        right = g.dx * np.sum(f.values * gw.values)
        bound = 1e-8 * sp.l2_norm(f) * sp.l2_norm(w)
        assert abs(left - right) <= bound


def test_size_bound_constant_reported(capsys):
    # ||G_n f||_2 <= C0^n ||h'||_inf^n ||f'||_2: fit C0 and report it
    g, h, f = multi_mode_data()
    hx_sup = sp.linf_norm(dx(h))
    fp_l2 = sp.l2_norm(dx(f))
    terms = dno.dno_terms(h, f, 5)
    c0 = 0.0
    for n in range(1, 5):
        ratio = sp.l2_norm(terms[n]) / (hx_sup**n * fp_l2)
        c0 = max(c0, ratio ** (1.0 / n))
    assert np.isfinite(c0) and c0 > 0
    print(f"fitted series constant C0 = {c0:.3f}")


# ---------------------------------------------------------------------------
# series tail

def test_remainder_zero_cases():
    g = grid2pi(64)
    z = sp.Field(g, np.zeros(g.n))
    f = sp.field_from_function(g, lambda x: np.sin(x))
    h = sp.field_from_function(g, lambda x: 0.1 * np.cos(x))
    assert np.all(dno.remainder_r1(z, f, 4).values == 0)
    assert np.all(dno.remainder_r1(h, f, 3).values == 0)


def test_remainder_quartic_scaling():
    g = grid2pi(256)
    h = sp.field_from_function(g, lambda x: 0.02 * np.cos(x) + 0.01 * np.sin(2 * x))
    f = sp.field_from_function(g, lambda x: np.sin(x))
    r_full = dno.remainder_r1(h, f, 4)
    r_half = dno.remainder_r1(0.5 * h, 0.5 * f, 4)
    ratio = sp.l2_norm(r_full) / sp.l2_norm(r_half)
    assert ratio == pytest.approx(16.0, rel=0.10)
