import math

import numpy as np
import pytest
from scipy.optimize import brentq

from darkqubit import analysis as an


def secular_dark(omega1, delta):
    """Dark eigenvalue (relative to -delta) and D-overlap from the 3x3 secular equation."""
    c2 = omega1**2 / 8

    def f(lam):
        return lam - c2 / (lam - omega1 - delta) - c2 / (lam - delta + omega1)

    guess = omega1**2 / (4 * delta)
    lam = brentq(f, -3 * guess, 3 * guess, xtol=1e-300, rtol=1e-15)
    c = math.sqrt(c2)
    comps = np.array([1.0, c / (lam - omega1 - delta), c / (lam - delta + omega1)])
    comps /= np.linalg.norm(comps)
    return lam, comps


@pytest.mark.parametrize("x", np.logspace(-4, -1, 7))
def test_shift_formula_accuracy(x):
    delta = 1.0
    omega1 = x * delta
    formula, _ = an.second_order_shift(omega1, delta, 0.0)
    lam, _ = secular_dark(omega1, delta)
    exact = an.exact_dark(omega1, delta)
    assert exact.shift == pytest.approx(abs(lam), rel=1e-12)
    assert abs(formula - abs(lam)) / abs(lam) <= x**2


def test_exact_leakage_lives_in_p_and_is_half_epsilon():
    omega1, delta = 0.01, 1.0
    _, comps = secular_dark(omega1, delta)
    ex = an.exact_dark(omega1, delta)
    assert ex.leakage == pytest.approx(1 - comps[0] ** 2, rel=1e-8)
    assert ex.leakage == pytest.approx(an.admixture(omega1, delta) / 2, rel=1e-3)
    assert ex.p_population == pytest.approx(ex.leakage, rel=1e-3)


def test_fluctuation_coefficients():
    omega1, omega = 1e5, 1e9
    s1, f1 = an.second_order_shift(omega1, omega, 0.01, 0.01, omega)
    s2, f2 = an.second_order_shift(omega1, omega, 0.01)
    assert f1 / s1 == pytest.approx(0.03, abs=1e-15)
    assert f2 / s2 == pytest.approx(0.02, abs=1e-15)


def test_fluctuation_matches_exact_shift_variation():
    omega1, delta = 1e-3, 1.0
    base = an.exact_dark(omega1, delta).shift
    up = an.exact_dark(omega1, delta, fluct=0.01).shift
    _, fl = an.second_order_shift(omega1, delta, 0.01)
    assert up - base == pytest.approx(fl, rel=0.01)


def test_regime_guard():
    with pytest.raises(ValueError):
        an.second_order_shift(1.0, 0.0)
    with pytest.warns(UserWarning):
        an.second_order_shift(1.0, 2.0)


def test_t1_and_t2_nominal():
    est = an.coherence_estimate()
    assert 0.9 <= est.t1 <= 1.0
    assert est.t2_bound == pytest.approx(10.0, rel=0.2)
    assert est.t2_rel_bound == pytest.approx(10.0)
    # detunings taken equal to the dressing frequency reproduce 0.94 s
    eps = an.admixture(1e5, 1e9)
    assert an.t1_estimate([eps, eps], 2.3e7, 1.0) == pytest.approx(0.9456, abs=1e-4)


def test_t1_limits():
    assert an.t1_estimate([0.0], 0.0, 0.0) == math.inf
    assert an.t1_estimate([0.0], 10.0, 2.0) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        an.t1_estimate([1.0], 1.0, 1.0)
    assert an.t2_bound(0.0) == math.inf


def test_scaled_lindblad_decay_rate():
    chk = an.admixture_decay_check()
    assert chk.relative_error < 0.05


def test_polarization_shift_is_quadratic():
    a = an.polarization_budget(0.01)
    b = an.polarization_budget(0.02)
    assert a.min_gap_ok
    ratio = abs(b.shifts[0]) / abs(a.shifts[0])
    assert ratio == pytest.approx(4.0, rel=1e-3)


def test_gradient_budget():
    rep = an.bfield_gradient_budget()
    assert max(abs(x) for x in rep.dark_first_order) < 1e-9 * rep.bright_shift
    assert rep.passed
    assert abs(rep.bright_shift) > 1e3 * max(abs(x) for x in rep.dark_shifts)
