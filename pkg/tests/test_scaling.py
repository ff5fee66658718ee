import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from lrquench.errors import DomainError, FitError
from lrquench.scaling import (
    CollapseExponentSearch,
    CriticalExponents,
    ExponentSource,
    FiniteSizeScaling,
    PowerLawFit,
    collapse_score,
    crossover_velocity_fit,
    kz_exponents,
    kz_scales,
    margin_from_epsilon,
    powerlaw_fit,
    shortcut_plan,
    shortcut_total_time,
)

fractions = st.builds(Fraction, st.integers(1, 500), st.integers(1, 300))


@settings(max_examples=100)
@given(fractions, fractions)
def test_exponent_identities_exact(z, nu):
    e = kz_exponents(z, nu)
    assert e["xi_hat"] == nu / (1 + z * nu)
    assert e["t_hat"] == z * e["xi_hat"]
    assert e["v_hat"] == e["xi_hat"] - e["t_hat"] == (1 - z) * nu / (1 + z * nu)
    assert e["xi_tilde"] == -nu / (1 + nu)
    assert e["delta_tilde"] == -z * e["xi_tilde"]
    assert e["v_tilde"] == e["delta_tilde"] + e["xi_tilde"]
    # theta = 1/(v tau_Q) inside v = theta**x solves to v = tau_Q**(-x/(1+x))
    assert -e["v_tilde"] / (1 + e["v_tilde"]) == e["v_hat"]


def test_extended_specializations():
    for a in (Fraction(5, 4), Fraction(3, 2), Fraction(7, 4), Fraction(5, 2)):
        e = kz_exponents(a - 1, 1 / (a - 1))
        assert e["xi_tilde"] == -1 / a
        assert e["delta_tilde"] == (a - 1) / a
        assert e["v_tilde"] == -(2 - a) / a
    assert kz_exponents(Fraction(1, 2), Fraction(2))["v_tilde"] == Fraction(-1, 3)
    assert kz_exponents(Fraction(1, 2), Fraction(2))["xi_hat"] == 1


def test_marginal_and_lri_examples():
    assert kz_exponents(1, Fraction(7, 3))["v_hat"] == 0
    assert kz_exponents(0.48, 1.3)["v_tilde"] == pytest.approx(-0.29, abs=5e-3)


def test_kz_scales_numeric():
    exp = CriticalExponents.extended(1.5)
    s = kz_scales(exp, tau_Q=16.0, theta=1 / 8)
    assert s.xi_hat == pytest.approx(16.0)
    assert s.t_hat == pytest.approx(4.0)
    assert s.xi_tilde == pytest.approx(4.0)
    assert s.v_tilde == pytest.approx(2.0, rel=1e-12)
    assert s.delta_tilde == pytest.approx(0.5, rel=1e-12)
    assert s.flags == []
    flagged = kz_scales(CriticalExponents(z=1.2, nu=1.0), theta=0.1)
    assert flagged.flags
    assert kz_scales(CriticalExponents(z=1.2, nu=1.0), theta=0.2).v_tilde > flagged.v_tilde
    with pytest.raises(DomainError):
        kz_scales(exp)
    with pytest.raises(DomainError):
        kz_scales(exp, tau_Q=-1.0)


def test_critical_exponent_validation():
    assert CriticalExponents.extended(1.5).source is ExponentSource.EXACT_EXTENDED
    with pytest.raises(DomainError):
        CriticalExponents.extended(3.0)
    with pytest.raises(DomainError):
        CriticalExponents(z=0.5, nu=1.0, alpha=1.5, source="exact_extended")
    with pytest.raises(DomainError):
        CriticalExponents(z=0.0, nu=1.0)
    assert CriticalExponents(z=0.48, nu=1.3, source="fitted_ed").source is ExponentSource.FITTED_ED


def test_powerlaw_exact():
    x = np.arange(1.0, 11.0)
    fit = powerlaw_fit(list(zip(x, 3 * x**2)))
    assert fit.exponent == pytest.approx(2.0, abs=1e-12)
    assert fit.prefactor == pytest.approx(3.0, abs=1e-12)
    assert fit.residual < 1e-12 and fit.n_points == 10
    assert fit.to_dict()["window"] == [1.0, 10.0]


@given(st.floats(-3, 3), st.floats(0.1, 10), st.floats(0.2, 5), st.floats(0.2, 5))
def test_powerlaw_equivariance(p, c, sx, sy):
    x = np.geomspace(1, 100, 12)
    y = c * x**p * (1 + 0.05 * np.sin(x))
    a = powerlaw_fit(list(zip(x, y)))
    b = powerlaw_fit(list(zip(sx * x, sy * y)))
    assert b.exponent == pytest.approx(a.exponent, abs=1e-9)
    assert b.prefactor == pytest.approx(a.prefactor * sy / sx**a.exponent, rel=1e-8)


def test_powerlaw_window_and_errors():
    x = np.geomspace(1, 1000, 30)
    y = np.where(x < 50, x**-1.0, 50.0**-1 * (x / 50) ** -3)
    assert powerlaw_fit(list(zip(x, y)), window=(1, 40)).exponent == pytest.approx(-1.0, abs=1e-12)
    with pytest.raises(FitError):
        powerlaw_fit(list(zip(x, y)), window=(2, 2.5))
    with pytest.raises(DomainError):
        powerlaw_fit([(1, 1), (2, -1), (3, 2)])
    with pytest.raises(DomainError):
        powerlaw_fit([(0, 1), (2, 1), (3, 2)])


def test_powerlaw_estimator_protocol():
    est = PowerLawFit(window=(1, 5))
    assert est.get_params() == {"window": (1, 5)}
    twin = clone(est)
    assert twin.window == (1, 5) and twin is not est
    with pytest.raises(NotFittedError):
        est.predict([1.0])
    x = np.arange(1.0, 6.0)
    est.fit(x, 2 * x**-0.5)
    assert est.predict([4.0]) == pytest.approx([1.0])
    assert est.score(x, 2 * x**-0.5) == pytest.approx(1.0)


def test_collapse_identical_and_shifted():
    x = np.geomspace(0.1, 10, 20)
    y = np.exp(-x)
    assert collapse_score([(x, y), (x, y), (x, y)]) == pytest.approx(0.0, abs=1e-15)
    assert collapse_score([(x, y), (x, 1.2 * y)]) > 0.05
    # interpolation onto the overlap only
    assert collapse_score([(x, x), (x[5:], x[5:])]) == pytest.approx(0.0, abs=1e-15)


def test_collapse_errors():
    x = np.linspace(1, 2, 5)
    with pytest.raises(DomainError):
        collapse_score([(x, x)])
    with pytest.raises(DomainError):
        collapse_score([(x, x), (x + 5, x)])
    with pytest.raises(DomainError):
        collapse_score([(x - 1, x), (x, x)])
    assert collapse_score([(x - 0.5, x), (x, x)], log_x=False) > 0


def synthetic_fronts(s_true, alpha=1.5, thetas=(1 / 2, 1 / 4, 1 / 8, 1 / 16, 1 / 32)):
    rows = []
    for th in thetas:
        v_tilde = th**-s_true
        for u in np.geomspace(1 / 8, 16, 15):
            rows.append({"theta": th, "v": u * v_tilde, "d_ex": th ** (1 / alpha) * u**2 / (1 + u)})
    return rows


@pytest.mark.parametrize("s_true", [0.2, 1 / 3, 0.407, 0.6])
def test_crossover_fit_recovers_generating_exponent(s_true):
    fit = crossover_velocity_fit(synthetic_fronts(s_true), alpha=1.5)
    assert fit.exponent == pytest.approx(s_true, abs=1e-3)
    assert fit.theory_exponent == pytest.approx(1 / 3)
    assert fit.residual < 1e-3


def test_crossover_fit_needs_four_slopes():
    rows = synthetic_fronts(0.4, thetas=(1 / 2, 1 / 4, 1 / 8))
    with pytest.raises(DomainError):
        crossover_velocity_fit(rows, alpha=1.5)


def test_flat_landscape_is_inconclusive():
    # d_ex independent of v: every trial exponent collapses equally well
    rows = [{"theta": th, "v": v, "d_ex": th ** (2 / 3)}
            for th in (1 / 2, 1 / 4, 1 / 8, 1 / 16) for v in np.geomspace(0.5, 8, 9)]
    with pytest.raises(FitError):
        crossover_velocity_fit(rows, alpha=1.5)


def test_boundary_minimum_rejected():
    with pytest.raises(FitError):
        crossover_velocity_fit(synthetic_fronts(0.9), alpha=1.5, s_bounds=(0.0, 0.5))


def test_collapse_search_is_an_estimator():
    est = CollapseExponentSearch(y_exponent=0.5)
    assert clone(est).get_params()["y_exponent"] == 0.5


def test_finite_size_scaling_estimator():
    N = np.arange(8, 30, dtype=float)
    est = FiniteSizeScaling().fit(N, 2.5 + N ** (-1 / 1.3))
    assert (est.h_inf_, est.c_, est.nu_) == pytest.approx((2.5, 1.0, 1.3), abs=1e-6)
    assert est.predict([1e12]) == pytest.approx([2.5], abs=1e-4)
    assert np.isfinite(est.condition_)
    with pytest.raises(DomainError):
        FiniteSizeScaling().fit([8, 8, 9], [1.0, 1.0, 1.1])


def test_shortcut_extended_closed_form():
    for a in (Fraction(5, 4), Fraction(3, 2), Fraction(7, 4)):
        plan = shortcut_plan(CriticalExponents.extended(a), 1, Fraction(1))
        assert plan.slope_coefficient == 2 * (a - 1) / (2 - a)
        assert plan.speedup_exponent == -2 * (a - 1) ** 2 / a
    plan = shortcut_plan(CriticalExponents.extended(1.5), 256, 3.0)
    assert 256 * plan.theta_opt == pytest.approx(6.0)


def test_shortcut_lri_values():
    plan = shortcut_plan(CriticalExponents(z=Fraction(48, 100), nu=Fraction(13, 10)), 100, 1.0)
    assert float(plan.slope_coefficient) == pytest.approx(2.40237, abs=1e-5)
    assert round(float(plan.speedup_exponent), 2) == -0.54
    assert plan.T_opt / plan.tau_Q_adiab > 0


def test_shortcut_optimum_is_minimum_of_total_time():
    exp = CriticalExponents.extended(1.5)
    plan = shortcut_plan(exp, 200, 2.0)
    th = np.geomspace(plan.theta_opt / 20, plan.theta_opt * 20, 2001)
    T = shortcut_total_time(th, 200, 2.0, exp)
    assert th[np.argmin(T)] == pytest.approx(plan.theta_opt, rel=5e-3)
    assert plan.T_opt == pytest.approx(T.min(), rel=1e-6)
    # convex in log theta around the optimum
    assert np.all(np.diff(np.log(T), 2) > 0)


def test_shortcut_advantage_vanishes_as_alpha_to_one():
    ex = [float(shortcut_plan(CriticalExponents.extended(1 + d), 64, 1.0).speedup_exponent)
          for d in (0.3, 0.1, 0.01, 0.001)]
    assert np.all(np.diff(ex) > 0) and ex[-1] > -1e-5


def test_shortcut_errors():
    with pytest.raises(DomainError):
        shortcut_plan(CriticalExponents(z=1.0, nu=1.0), 10, 1.0)
    with pytest.raises(DomainError):
        shortcut_plan(CriticalExponents.extended(1.5), 10, -1.0)


def test_margin_from_epsilon():
    assert margin_from_epsilon(math.tanh(1.5)) == pytest.approx(3.0)
    with pytest.raises(DomainError):
        margin_from_epsilon(1.0)
