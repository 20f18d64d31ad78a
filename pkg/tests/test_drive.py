import numpy as np
import pytest

from darkqubit import drive, qcore, system

SQ3 = np.sqrt(3)


def test_dark_state_coefficients():
    sc = system.build_ca40()
    d1 = drive.reference_state(sc, "D1")
    d2 = drive.reference_state(sc, "D2")
    assert d1[sc.index("d1")] == pytest.approx(SQ3 / 2)
    assert d1[sc.index("d3")] == pytest.approx(-0.5)
    assert d2[sc.index("d0")] == pytest.approx(0.5)
    assert d2[sc.index("d2")] == pytest.approx(-SQ3 / 2)


@pytest.mark.parametrize("omega1", [1e-3, 1.0, 1e5])
def test_dressed_spectrum_and_vectors(omega1):
    sc = system.build_ca40()
    h = drive.ca40_drive_hamiltonian(sc, omega1)
    ds = drive.dressed_structure(h, omega1, sc)
    np.testing.assert_allclose(ds.eigenvalues, omega1 * np.array([-1, -1, 0, 0, 1, 1]),
                               atol=1e-10 * omega1)
    for name, vec in zip(("D1", "D2", "B1", "B2", "C1", "C2"),
                         (*ds.dark, *ds.bright_plus, *ds.bright_minus)):
        np.testing.assert_allclose(vec, drive.reference_state(sc, name), atol=1e-10)
        np.testing.assert_allclose(h @ vec, qcore.expectation(vec, h) * vec, atol=1e-10 * omega1)


def test_rwa_from_lab_frame_fields_recovers_drive():
    sc = system.build_ca40()
    B, delta, gap, omega1 = 100.0, 1e4, 1e3, 1.0
    drives = drive.ca40_drives(omega1, B, delta, gap)
    frame = drive.ca40_frame(B, delta, gap)
    h = drive.rwa_hamiltonian(sc, drives, frame, cutoff=0.5 * B, B=B,
                              offsets=drive.ca40_offsets(sc, B, delta, gap))
    idx = [sc.index(x) for x in drive.DRIVEN_LEVELS]
    ref = drive.ca40_drive_hamiltonian(sc, omega1)
    np.testing.assert_allclose(h[np.ix_(idx, idx)], ref[np.ix_(idx, idx)], atol=1e-12)


def test_detuned_frame_static_block():
    h = drive.detuned_frame_hamiltonian(1.0, 10.0)
    assert qcore.is_hermitian(h)
    w = np.linalg.eigvalsh(h)
    # one level pushed to about -Delta, dark level shifted by about Omega1^2/(4 Delta)
    assert np.min(np.abs(w + 10.0)) < 1.0
