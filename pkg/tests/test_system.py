import numpy as np
import pytest
from fractions import Fraction

from darkqubit import system


def test_ca40_order_and_lande_factors():
    sc = system.build_ca40()
    assert sc.labels == ["s0", "s1", "p0", "p1", "d0", "d1", "d2", "d3"]
    assert sc.level("d3").lande_g == pytest.approx(0.8)
    assert sc.level("s1").lande_g == pytest.approx(2.0)
    assert sc.level("p0").lande_g == pytest.approx(2 / 3)
    assert [sc.level(f"d{k}").m for k in range(4)] == [-1.5, -0.5, 0.5, 1.5]


def test_lande_formula():
    assert system.lande_g(Fraction(3, 2), 2, Fraction(1, 2)) == pytest.approx(4 / 5)


def test_unknown_label_and_bad_rates():
    sc = system.build_ca40()
    with pytest.raises(system.UnknownLevelError):
        sc.index("x9")
    with pytest.raises(ValueError):
        system.build_ca40(gamma_p=-1)


def test_zeeman_shift_is_g_m_B():
    sc = system.build_ca40()
    h = system.zeeman_hamiltonian(sc, 2.0)
    assert h[sc.index("d3"), sc.index("d3")] == pytest.approx(0.8 * 1.5 * 2.0)
    assert h[sc.index("s0"), sc.index("s0")] == pytest.approx(-2.0 * 0.5 * 2.0)


def test_decay_rates_sum_to_linewidth_and_branching():
    sc = system.build_ca40(gamma_p=1.0, gamma_d=0.5)
    ch = system.decay_channels(sc)
    out = {}
    to_s = 0.0
    for jump, rate in ch:
        lo, up = np.argwhere(jump)[0]
        out[up] = out.get(up, 0.0) + rate
        if up == sc.index("p1") and lo in sc.indices("S1/2"):
            to_s += rate
    assert out[sc.index("p1")] == pytest.approx(1.0)
    assert out[sc.index("d2")] == pytest.approx(0.5)
    assert to_s == pytest.approx(14.4 / 15.4)


def test_p1_to_d_clebsch_gordan_weights():
    # dipole weights from P1/2 m=+1/2 into D3/2: m=-1/2 : +1/2 : +3/2 = 1 : 2 : 3
    sc = system.build_ca40(gamma_p=1.0, gamma_d=0.0, branching_sd=0.0)
    w = {}
    for jump, rate in system.decay_channels(sc):
        lo, up = np.argwhere(jump)[0]
        if up == sc.index("p1"):
            w[sc.labels[lo]] = rate
    assert set(w) == {"d1", "d2", "d3"}
    np.testing.assert_allclose([w["d1"], w["d2"], w["d3"]], np.array([1, 2, 3]) / 6)
