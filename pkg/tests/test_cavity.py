import math

import numpy as np
import pytest
import scipy.linalg

from darkqubit import cavity as cv, qcore

P = cv.CouplingParams(g=1.0, omega_c_drive=10.0, delta=1000.0)


def test_fock_operators():
    f = cv.FockSpace(5)
    a = f.annihilation()
    np.testing.assert_allclose(a.conj().T @ a, f.number())
    comm = a @ a.conj().T - a.conj().T @ a
    # truncation only spoils the last diagonal entry
    np.testing.assert_allclose(np.diag(comm)[:-1], 1.0)
    with pytest.raises(ValueError):
        f.ket(6)
    with pytest.raises(ValueError):
        cv.FockSpace(0)


def test_parameter_validation():
    with pytest.raises(ValueError):
        cv.CouplingParams(g=-1, omega_c_drive=1, delta=1)
    with pytest.raises(ValueError):
        cv.CouplingParams(g=1, omega_c_drive=1, delta=1, n_ions=0)


def test_dark_to_bare_ratio():
    bs = cv.effective_beamsplitter(P)
    assert bs.dark_coefficient / bs.bare_coefficient == 0.75
    assert bs.bare_coefficient == pytest.approx(-P.g * P.omega_c_drive / (2 * P.delta))
    assert bs.regime_ok
    with pytest.warns(UserWarning):
        cv.effective_beamsplitter(cv.CouplingParams(1.0, 10.0, 100.0))


def test_single_swap_against_exact_exponential():
    fock = cv.FockSpace(2)
    h = cv.raman_cavity_hamiltonian(P, fock)
    rate = abs(cv.effective_beamsplitter(P).bare_coefficient)
    psi0 = np.kron(qcore.basis_vector(3, 0), fock.ket(1))
    target = np.kron(qcore.basis_vector(3, 1), fock.ket(0))
    psi = scipy.linalg.expm(-1j * h * math.pi / (2 * rate)) @ psi0
    assert abs(np.vdot(target, psi)) ** 2 > 0.999
    fit = cv.single_ion_swap(P)
    assert fit.relative_error < 0.03


@pytest.mark.parametrize("n", [2, 3])
def test_collective_sqrt_n(n):
    single = cv.single_ion_swap(P)
    coll = cv.collective_swap(cv.with_ions(P, n))
    assert coll.rate / single.rate == pytest.approx(math.sqrt(n), rel=0.03)
    assert coll.transferred.max() > 0.99


def test_excitation_number_is_conserved():
    h = cv.collective_hamiltonian(cv.with_ions(P, 2), cv.FockSpace(2))
    fock = cv.FockSpace(2)
    # excitations: photons plus ions in d2 or p1
    ion = np.diag([0.0, 1.0, 1.0])
    nexc = np.kron(np.kron(ion, np.eye(3)) + np.kron(np.eye(3), ion), fock.identity()) \
        + np.kron(np.eye(9), fock.number())
    np.testing.assert_allclose(qcore.commutator(h, nexc), 0, atol=1e-12)
    assert cv.excitation_drift(P, cv.FockSpace(6), 50.0) < 1e-9


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_qnd_phase(n):
    q = cv.CouplingParams(g=1.0, omega_c_drive=0.0, delta=100.0)
    t = 100.0
    expected = 3 * q.g**2 * t * n / (4 * q.delta)
    eff = cv.qnd_ramsey(q, n, t, "effective")
    full = cv.qnd_ramsey(q, n, t, "full")
    if n == 0:
        assert abs(eff) < 1e-12 and abs(full) < 1e-6
    else:
        assert eff == pytest.approx(expected, rel=0.01)
        assert full == pytest.approx(expected, rel=0.03)


def test_phase_gate_and_timing():
    q = cv.CouplingParams(g=1.0, omega_c_drive=0.0, delta=100.0)
    t = cv.phase_time(q, 2, math.pi)
    rep = cv.cavity_phase_gate(q, 2, t)
    assert rep.series["phase"] == pytest.approx(math.pi)
    np.testing.assert_allclose(rep.dark_block, np.diag([-1.0, 1.0]), atol=1e-12)


def test_strong_coupling_thresholds():
    g = 2 * math.pi * 0.5e6
    gamma = 2 * math.pi * 23e6
    p = cv.CouplingParams(g=g, omega_c_drive=0.01, delta=1.0, gamma_p=gamma, n_ions=100)
    rep = cv.collective_rate(p)
    # drive ratio below which scattering loses to the enhanced exchange
    assert rep.max_drive_ratio == pytest.approx(15 / 184)
    assert rep.max_drive_ratio < 0.1
    # kappa scale for N = 100 and Omega_c/delta = 1/100 is pi x 0.1 MHz
    assert rep.kappa_scale == pytest.approx(math.pi * 1e5)
    assert rep.enhanced_rate == pytest.approx(10 * 3 * g * 0.01 / 8)


def test_cavity_decay():
    res = cv.cavity_decay(0.5, 3, 4.0)
    np.testing.assert_allclose(res.observables["n"], 3 * np.exp(-0.5 * res.times), atol=1e-8)
