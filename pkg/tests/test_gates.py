import math

import numpy as np
import pytest

from darkqubit import gates, system


def test_sigma_y_rate_and_fidelity():
    rep = gates.sigma_y_gate(0.01, omega1=1.0)
    assert rep.rate == pytest.approx(1.5 * 0.01, rel=1e-6)
    assert rep.fidelity > 0.9999
    assert rep.leakage < 1e-6


def test_effective_generator_acts_within_dark_block():
    rep = gates.sigma_y_gate(0.01, omega1=1.0)
    gen = rep.effective_generator
    np.testing.assert_allclose(gen, gen.conj().T, atol=1e-8)
    # off-diagonal, purely imaginary: a sigma_y rotation
    assert abs(gen[0, 0]) + abs(gen[1, 1]) < 1e-6
    assert abs(gen[1, 0].real) < 1e-6 * abs(gen[1, 0])
    assert abs(gen[1, 0]) == pytest.approx(0.015, rel=1e-6)


def test_microwave_coupling_structure():
    sc = system.build_ca40()
    jy = gates.microwave_jy(sc, 1.0, imbalance=0.0)
    d1, d2 = gates.dark_basis(sc).T
    # J_y maps D1 to a multiple of D2 with strength 3/2
    assert abs(np.vdot(d2, jy @ d1)) == pytest.approx(1.5)
    np.testing.assert_allclose(jy, jy.conj().T)


def test_sigma_y_leakage_exponent():
    slope = gates.leakage_exponent(np.geomspace(0.0025, 0.04, 5), omega1=1.0, imbalance=0.05)
    assert slope == pytest.approx(2.0, abs=0.2)


def test_raman_rate_and_leakage_scaling():
    rep = gates.raman_sigma_x(1.0, 100.0)
    assert rep.rate == pytest.approx(gates.raman_rate(1.0, 100.0), rel=0.02)
    assert rep.fidelity > 0.999
    # virtual p1 population of order 4 c^2 (Omega/delta)^2 with c = sqrt3/2
    assert rep.series["intermediate_max"] == pytest.approx(3e-4, rel=0.2)


@pytest.mark.filterwarnings("ignore:Omega_cont/delta")
def test_raman_leakage_exponent():
    slope = gates.raman_leakage_exponent([0.5, 1.0, 2.0])
    assert slope == pytest.approx(2.0, abs=0.2)


def test_target_and_fidelity_helpers():
    u = gates.sigma_y_target(math.pi)
    assert gates.gate_fidelity(u, u) == pytest.approx((1.0, 0.0), abs=1e-12)
    f, leak = gates.gate_fidelity(0.9 * u, u)
    assert leak == pytest.approx(1 - 0.81)
    np.testing.assert_allclose(gates.berry_gate(math.pi / 4), np.diag([1j, 1]), atol=1e-15)


def test_contours_close():
    gates.rectangle_contour().check_closed()
    gates.fourier_contour(np.random.default_rng(0)).check_closed()
    open_path = gates.polygon_contour([(0, 0.3), (1.0, 0.3)])
    with pytest.raises(ValueError):
        open_path.check_closed()


@pytest.mark.parametrize("lo,hi,width", [(0.2, 1.1, 2.0), (0.5, 0.9, 4.0)])
def test_berry_oracles_on_rectangles(lo, hi, width):
    mid = 0.5 * (lo + hi)
    c = gates.polygon_contour([(0, mid), (0, lo), (width, lo), (width, hi), (0, hi), (0, mid)])
    analytic = 0.5 * width * (math.sin(hi) ** 2 - math.sin(lo) ** 2)
    assert gates.berry_line_integral(c) == pytest.approx(analytic, abs=1e-9)
    assert gates.berry_quadrature(c) == pytest.approx(analytic, abs=1e-6)


def test_berry_rectangle_gives_pi():
    res = gates.berry_sigma_z(gates.rectangle_contour())
    assert res.phase == pytest.approx(math.pi, abs=1e-3)
    assert res.adiabaticity_error < 1e-3


def test_berry_random_contour_matches_quadrature():
    c = gates.fourier_contour(np.random.default_rng(12))
    res = gates.berry_sigma_z(c)
    assert res.phase == pytest.approx(gates.berry_quadrature(c), abs=1e-3)
    assert gates.berry_line_integral(c) == pytest.approx(gates.berry_quadrature(c), abs=1e-6)
