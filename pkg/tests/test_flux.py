"""Flux fields: model example, references, mollification, divergence envelope."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sclnoise.errors import InvalidParameterError
from sclnoise.flux import (
    DivergenceSup,
    MollifierSpec,
    bump_kernel,
    bump_kernel_prime,
    burgers_flux,
    constant_flux,
    divergence_sup,
    flux_from_spec,
    flux_from_table,
    model_flux,
    mollify_flux,
    reference_edges,
    reference_gap_l1,
    reference_solution,
)
from sclnoise.io import emit_csv


# ---------------------------------------------------------------------------
# kernel


def test_bump_kernel_mass_is_one():
    z = np.linspace(-1.0, 1.0, 20001)
    mass = np.trapezoid(bump_kernel(z), z)
    assert abs(mass - 1.0) < 1e-10


def test_bump_kernel_compact_support_and_symmetry():
    z = np.linspace(-2.0, 2.0, 101)
    k = bump_kernel(z)
    assert np.all(k[np.abs(z) >= 1.0] == 0.0)
    assert np.allclose(k, k[::-1])
    kp = bump_kernel_prime(z)
    assert np.allclose(kp, -kp[::-1], atol=1e-14)


def test_bump_kernel_prime_is_derivative():
    z = np.linspace(-0.95, 0.95, 101)
    h = 1e-6
    fd = (bump_kernel(z + h) - bump_kernel(z - h)) / (2.0 * h)
    assert np.allclose(fd, bump_kernel_prime(z), atol=1e-6)


# ---------------------------------------------------------------------------
# model flux


def test_model_flux_values():
    b = model_flux(2.0)
    assert b.eval(1.0, 1.0) == pytest.approx(2.0)
    assert b.eval(4.0, 1.0) == pytest.approx(4.0)
    # cap active beyond |x| = K^2
    assert b.eval(9.0, 1.0) == pytest.approx(4.0)
    assert b.eval(-9.0, 1.0) == pytest.approx(-4.0)
    assert b.eval(0.0, 0.7) == pytest.approx(0.0)


def test_model_flux_divergence_values():
    b = model_flux(2.0)
    assert b.div_x(0.25, 1.0) == pytest.approx(2.0)
    assert b.div_x(1.0, 0.5) == pytest.approx(0.5)
    # zero beyond the cap
    assert b.div_x(5.0, 1.0) == pytest.approx(0.0)


def test_model_flux_rejects_nonpositive_cap():
    with pytest.raises(InvalidParameterError):
        model_flux(0.0)
    with pytest.raises(InvalidParameterError):
        model_flux(-1.0)


@given(x=st.floats(min_value=-10.0, max_value=10.0),
       xi=st.floats(min_value=-1.0, max_value=1.0))
def test_model_flux_odd_in_x(x, xi):
    b = model_flux(2.0)
    assert b.eval(-x, xi) == pytest.approx(-b.eval(x, xi), abs=1e-14)


def test_metadata():
    b = model_flux(2.0, R=1.0)
    assert b.p_exponent == pytest.approx(1.5)
    assert b.linf_bound == pytest.approx(4.0)
    assert set(b.kinks_x) == {0.0, 4.0, -4.0}


def test_smooth_field_divergence_matches_fd_at_second_order():
    b = burgers_flux()

    def smooth_eval(x, xi):
        return np.sin(x) * (1.0 + np.asarray(xi))

    def smooth_div(x, xi):
        return np.cos(x) * (1.0 + np.asarray(xi))

    from sclnoise.flux import FluxField
    f = FluxField(eval=smooth_eval, div_x=smooth_div,
                  support_radius_R=1.0, linf_bound=2.0, p_exponent=2.0)
    xs = np.linspace(-2.0, 2.0, 17)
    errs = []
    for h in (1e-2, 5e-3, 2.5e-3):
        fd = (f.eval(xs + h, 0.3) - f.eval(xs - h, 0.3)) / (2.0 * h)
        errs.append(np.max(np.abs(fd - f.div_x(xs, 0.3))))
    # halving h divides the error by about 4 (second order)
    assert errs[1] < 0.35 * errs[0]
    assert errs[2] < 0.35 * errs[1]


# ---------------------------------------------------------------------------
# reference solutions


@given(t=st.floats(min_value=0.0, max_value=2.0))
@settings(max_examples=40)
def test_reference_values_are_indicator(t):
    x = np.linspace(-3.0, 7.0, 401)
    for variant in (1, 2):
        u = reference_solution(variant, t, x, K=2.5, T_max=2.0)
        assert set(np.unique(u)) <= {0.0, 1.0}


@given(t=st.floats(min_value=0.0, max_value=2.0))
@settings(max_examples=40)
def test_reference_support_inclusion(t):
    x = np.linspace(-3.0, 7.0, 801)
    u1 = reference_solution(1, t, x, K=2.5, T_max=2.0)
    u2 = reference_solution(2, t, x, K=2.5, T_max=2.0)
    assert np.all(u2 >= u1)


@given(t=st.floats(min_value=0.0, max_value=2.0))
@settings(max_examples=40)
def test_reference_gap_closed_form(t):
    lo1, hi1 = reference_edges(1, t)
    lo2, hi2 = reference_edges(2, t)
    assert hi1 == pytest.approx(hi2)
    gap = float(lo1 - lo2)
    assert gap == pytest.approx((t / 2.0) ** 2, abs=1e-14)
    assert reference_gap_l1(t) == pytest.approx((t / 2.0) ** 2, abs=1e-14)


def test_reference_validation():
    x = np.linspace(-1, 5, 10)
    with pytest.raises(InvalidParameterError):
        reference_solution(1, 3.0, x, K=2.5, T_max=2.0)   # t beyond horizon
    with pytest.raises(InvalidParameterError):
        reference_solution(1, 1.0, x, K=1.2, T_max=2.0)   # cap too small
    with pytest.raises(InvalidParameterError):
        reference_solution(3, 1.0, x, K=2.5, T_max=2.0)   # unknown variant


# ---------------------------------------------------------------------------
# mollification


def test_mollified_model_flux_is_odd_and_vanishes_at_origin():
    b = mollify_flux(model_flux(2.0), MollifierSpec(0.1, 0.05))
    xs = np.linspace(0.05, 3.0, 7)
    for x in xs:
        assert b.eval(x, 0.8) == pytest.approx(-b.eval(-x, 0.8), abs=1e-12)
    assert abs(b.eval(0.0, 0.8)) < 1e-12


def test_mollified_divergence_matches_fine_quadrature_oracle():
    # Frozen oracle: central finite differences of the x-mollified field,
    # computed with a dense trapezoid convolution (20001 nodes), K = 2,
    # eps = 0.1, xi = 1.
    b = mollify_flux(model_flux(2.0), MollifierSpec(0.1, 0.05))
    assert b.div_x(0.0, 1.0) == pytest.approx(9.0814127, abs=5e-5)
    assert b.div_x(0.15, 1.0) == pytest.approx(2.6347631, abs=5e-5)
    assert b.div_x(0.5, 1.0) == pytest.approx(1.4165896, abs=5e-5)


def test_mollify_commutes_with_translation():
    shift = 0.8
    base = model_flux(2.0)
    from sclnoise.flux import FluxField

    def b_eval(x, xi):
        return base.eval(np.asarray(x) - shift, xi)

    def b_div(x, xi):
        return base.div_x(np.asarray(x) - shift, xi)

    shifted = FluxField(eval=b_eval, div_x=b_div, support_radius_R=1.0,
                        linf_bound=4.0, p_exponent=1.5)
    m_shifted = mollify_flux(shifted, MollifierSpec(0.1, 0.05))
    m_base = mollify_flux(base, MollifierSpec(0.1, 0.05))
    # the two fields take different quadrature paths (tensor vs separable),
    # so agreement is up to panel-quadrature error at the kink
    xs = np.linspace(-2.0, 3.0, 23)
    assert np.allclose(m_shifted.eval(xs, 0.7), m_base.eval(xs - shift, 0.7),
                       atol=5e-4)


def test_mollify_scale_must_fit_window():
    with pytest.raises(InvalidParameterError):
        mollify_flux(model_flux(2.0), MollifierSpec(3.0, 0.05),
                     window=(-2.0, 2.0))


def test_mollifier_spec_validation():
    with pytest.raises(InvalidParameterError):
        MollifierSpec(0.0, 0.1)
    with pytest.raises(InvalidParameterError):
        MollifierSpec(0.1, -0.1)


def test_tabulated_mollification_matches_direct():
    b = model_flux(2.0)
    direct = mollify_flux(b, MollifierSpec(0.1, 0.05))
    tab = mollify_flux(b, MollifierSpec(0.1, 0.05), window=(-6.0, 6.0),
                       table_n=1 << 14)
    xs = np.linspace(-5.0, 5.0, 101)
    assert np.allclose(direct.eval(xs, 0.9), tab.eval(xs, 0.9), atol=5e-7)
    # the divergence table interpolates a near-singular profile: tight
    # agreement away from the kink, loose right at it
    away = np.abs(xs) > 0.05
    assert np.allclose(direct.div_x(xs[away], 0.9), tab.div_x(xs[away], 0.9),
                       atol=5e-5)
    assert np.allclose(direct.div_x(xs, 0.9), tab.div_x(xs, 0.9), atol=5e-4)


# ---------------------------------------------------------------------------
# state primitive


def test_state_primitive_of_model_flux_is_half_slope_w_squared():
    b = model_flux(2.0)
    for x, w in [(0.5, 1.0), (2.0, -0.7), (-1.0, 0.3)]:
        slope = 2.0 * np.sign(x) * min(np.sqrt(abs(x)), 2.0)
        assert b.state_primitive(x, w) == pytest.approx(0.5 * slope * w * w,
                                                        abs=1e-12)


def test_state_primitive_quadrature_matches_fast_path():
    # a field without the state-linear marker exercises the quadrature path
    from sclnoise.flux import FluxField

    def ev(x, xi):
        return np.sin(np.asarray(x)) * np.asarray(xi) ** 2

    f = FluxField(eval=ev, div_x=lambda x, xi: np.cos(np.asarray(x)) * np.asarray(xi) ** 2,
                  support_radius_R=1.0, linf_bound=1.0, p_exponent=2.0)
    # primitive of sin(x) xi^2 in xi from 0 to w is sin(x) w^3 / 3
    assert f.state_primitive(0.7, 0.9) == pytest.approx(
        np.sin(0.7) * 0.9 ** 3 / 3.0, abs=1e-10)


# ---------------------------------------------------------------------------
# divergence envelope


def test_divergence_sup_matches_analytic_lp_norm():
    # For the model field, sup_xi |div b| = R / sqrt|x| inside the cap, so
    # F^p = |x|^{-3/4} for p = 1.5.  The envelope skips a half-cell around
    # each kink; the analytic value integrates |x|^{-3/4} over
    # [x0, K^2] on both sides with x0 = half the lattice spacing.
    K, R, p = 2.0, 1.0, 1.5
    b = model_flux(K, R)
    x = np.linspace(-6.0, 6.0, 6001)
    dx = x[1] - x[0]
    env = divergence_sup(b, R, x, p=p)
    x0 = 0.5 * dx
    analytic = (2.0 * 4.0 * ((K * K) ** 0.25 - x0 ** 0.25)) ** (1.0 / p)
    assert env.lp_norm == pytest.approx(analytic, rel=2e-2)
    assert env.skipped.size >= 1  # kink cells recorded


def test_divergence_sup_rejects_oversized_state_window():
    b = model_flux(2.0, R=1.0)
    with pytest.raises(InvalidParameterError):
        divergence_sup(b, 2.0, np.linspace(-1, 1, 11))


def test_divergence_sup_interpolant_zero_outside():
    b = model_flux(2.0)
    env = divergence_sup(b, 1.0, np.linspace(-5.0, 5.0, 501))
    fn = env.as_function()
    assert fn(np.array([100.0]))[0] == 0.0


# ---------------------------------------------------------------------------
# table round trip and registry


def test_flux_from_table_round_trip(tmp_path):
    b = model_flux(2.0)
    xs = np.linspace(-5.0, 5.0, 201)
    xis = np.linspace(-1.0, 1.0, 41)
    rows = []
    for x in xs:
        for xi in xis:
            rows.append((x, xi, float(b.eval(x, xi)), float(b.div_x(x, xi))))
    path = str(tmp_path / "flux.csv")
    emit_csv(path, ("x", "xi", "b", "div_b"), rows)
    bt = flux_from_table(path)
    assert bt.eval(0.5, 0.5) == pytest.approx(b.eval(0.5, 0.5), abs=1e-3)
    assert bt.div_x(1.0, 0.5) == pytest.approx(b.div_x(1.0, 0.5), abs=1e-2)


def test_flux_registry():
    assert flux_from_spec("model", {"K": 2.0}).name == "model"
    assert flux_from_spec("constant", {"c": 1.0}).name == "constant"
    with pytest.raises(InvalidParameterError):
        flux_from_spec("no-such-flux")
