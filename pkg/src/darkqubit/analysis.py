"""Perturbative shifts, lifetimes and error budgets, each with an exact check.

Conventions: all rates in rad/s (or s^-1 for decay). ``delta`` arguments are
cross-drive detunings of a dark state from the foreign beams, ``omega_gap``
is the S-P dressing gap that separates the two P sublevels.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import mpmath
import numpy as np

from darkqubit import drive, dynamics, qcore, system

SQ2 = math.sqrt(2.0)
REGIME_RATIO = 0.1
GAP_CRITERION_HZ = 1e6


@dataclass(frozen=True)
class ShiftBudget:
    delta_e1: float
    delta_e2: float
    fluct_e1: float
    fluct_e2: float
    epsilon1: float
    epsilon2: float


@dataclass(frozen=True)
class CoherenceEstimate:
    t1: float
    t2_bound: float
    t2_rel_bound: float

    @property
    def t2_unbounded(self) -> bool:
        return math.isinf(self.t2_bound)


def _regime(omega1, delta_det):
    if delta_det == 0:
        raise ValueError("detuning must be nonzero")
    if abs(omega1 / delta_det) > REGIME_RATIO:
        warnings.warn(f"Omega1/Delta = {abs(omega1 / delta_det):.3g} is not small; "
                      "second-order formulas are unreliable", stacklevel=3)


def second_order_shift(omega1: float, delta_det: float, fluct_fraction: float = 0.01,
                       dressing_fluct_fraction: float = 0.0,
                       omega_gap: float = 0.0) -> tuple[float, float]:
    """Dark-state shift Omega1^2/(4|Delta|) and its worst-case fluctuation.

    Foreign-beam amplitude offsets ``fluct_fraction`` enter twice (the
    coupling is squared). A fractional offset of the dressing gap adds the
    term shift * dressing_fluct * omega_gap / |Delta|.
    """
    _regime(omega1, delta_det)
    shift = omega1**2 / (4 * abs(delta_det))
    fluct = shift * 2 * abs(fluct_fraction) \
        + shift * abs(dressing_fluct_fraction) * abs(omega_gap) / abs(delta_det)
    return shift, fluct


def admixture(omega1: float, delta_det: float) -> float:
    """epsilon = (Omega1/Delta)^2 / 2."""
    if delta_det == 0:
        raise ValueError("detuning must be nonzero")
    return 0.5 * (omega1 / delta_det) ** 2


def crosstalk_detunings(B: float, omega_gap: float) -> tuple[float, float]:
    """|Delta1|, |Delta2| for the Ca+ preset: both equal omega_gap + 4B/5."""
    d = omega_gap + 0.8 * B
    return d, d


def shift_budget(omega1: float, omega_gap: float, B: float,
                 fluct: float = 0.01) -> ShiftBudget:
    d1, d2 = crosstalk_detunings(B, omega_gap)
    s1, f1 = second_order_shift(omega1, d1, fluct, fluct, omega_gap)
    s2, f2 = second_order_shift(omega1, d2, fluct)
    return ShiftBudget(s1, s2, f1, f2, admixture(omega1, d1), admixture(omega1, d2))


# --- exact oracle -----------------------------------------------------------------

@dataclass(frozen=True)
class ExactDark:
    shift: float        # |E_dark + Delta|, computed without cancellation
    leakage: float      # 1 - |<D|dark>|^2
    p_population: float  # weight on the P level


def exact_dark(omega1: float, delta_det: float, block: int = 1, fluct: float = 0.0,
               omega_gap: float = 0.0, dressing_fluct: float = 0.0,
               dps: int = 60) -> ExactDark:
    """Diagonalize the static cross-talk Hamiltonian in (D, B, C) at high precision.

    The matrix is shifted by +Delta before diagonalizing so the dark eigenvalue
    sits near zero and is resolved to full relative accuracy.
    """
    with mpmath.workdps(dps):
        o1 = mpmath.mpf(omega1)
        dl = mpmath.mpf(delta_det)
        c = o1 * (1 + mpmath.mpf(fluct)) / (2 * mpmath.sqrt(2))
        if block == 2:
            c, g = -c, mpmath.mpf(0)
        else:
            g = mpmath.mpf(omega_gap) * mpmath.mpf(dressing_fluct) / 2
        m = mpmath.matrix([[0, c, c],
                           [c, o1 + g + dl, g],
                           [c, g, -(o1 - g) + dl]])
        w, v = mpmath.eigsy(m)
        k = min(range(3), key=lambda i: abs(w[i]))
        dark = [v[i, k] for i in range(3)]
        overlap = dark[0] ** 2
        p_amp = (dark[1] + dark[2]) / mpmath.sqrt(2)
        return ExactDark(float(abs(w[k])), float(1 - overlap), float(p_amp**2))


# --- lifetimes --------------------------------------------------------------------

def t1_estimate(epsilons, gamma_p: float, gamma_d: float,
                p_excited_fraction: float = 0.5) -> float:
    """T1 = 1/(P(p) Gamma_P + P(d) Gamma_D) with P(p) = fraction * max(eps).

    The worst of the given admixtures sets the P population.
    """
    eps = np.atleast_1d(np.asarray(epsilons, dtype=float))
    if np.any(eps < 0) or np.any(eps >= 1):
        raise ValueError("admixtures must lie in [0, 1)")
    if gamma_p < 0 or gamma_d < 0:
        raise ValueError("decay rates must be >= 0")
    p_p = p_excited_fraction * float(eps.max())
    rate = p_p * gamma_p + (1 - p_p) * gamma_d
    return math.inf if rate == 0 else 1.0 / rate


def t2_bound(fluct_e1: float, fluct_e2: float = 0.0) -> float:
    """1 / (worst-case fluctuation of the shift difference); inf if none."""
    total = abs(fluct_e1) + abs(fluct_e2)
    return math.inf if total == 0 else 1.0 / total


def t2_relative(eta: float, t2_star: float) -> float:
    """Coherence bound T2* / eta^2 from relative amplitude/phase fluctuations."""
    if eta == 0:
        return math.inf
    return t2_star / eta**2


@dataclass(frozen=True)
class NominalParameters:
    omega1: float = 1e5
    omega_gap: float = 1e9
    B: float = 2 * math.pi * 1e7 / 0.8     # adjacent D3/2 sublevels 2pi x 10 MHz apart
    gamma_p: float = 2.3e7
    gamma_d: float = 1.0
    fluct: float = 0.01
    eta: float = 1e-2
    t2_star: float = 1e-3


def coherence_estimate(p: NominalParameters = NominalParameters()) -> CoherenceEstimate:
    b = shift_budget(p.omega1, p.omega_gap, p.B, p.fluct)
    return CoherenceEstimate(
        t1=t1_estimate((b.epsilon1, b.epsilon2), p.gamma_p, p.gamma_d),
        t2_bound=t2_bound(b.fluct_e1, b.fluct_e2),
        t2_rel_bound=t2_relative(p.eta, p.t2_star),
    )


@dataclass(frozen=True)
class DecayCheck:
    simulated_rate: float
    formula_rate: float
    fit_residual: float

    @property
    def relative_error(self) -> float:
        return abs(self.simulated_rate - self.formula_rate) / self.formula_rate


def admixture_decay_check(omega1: float = 1.0, delta_det: float = 10.0,
                          gamma_p: float = 0.5, decay_times: float = 0.5) -> DecayCheck:
    """Lindblad decay of the dressed dark state through its P admixture.

    Levels: (D, B, C) of one block plus a sink fed from p = (B + C)/sqrt(2).
    The starting state is the exact dressed dark eigenvector. The fitted decay
    rate is compared with (eps/2) Gamma_P.
    """
    h3 = drive.detuned_frame_hamiltonian(omega1, delta_det)
    h = np.zeros((4, 4), dtype=complex)
    h[:3, :3] = h3
    jump = np.zeros((4, 4), dtype=complex)
    jump[3, 1] = jump[3, 2] = 1 / SQ2
    w, v = qcore.eigh(h3)
    k = int(np.argmax(np.abs(v[0, :])))
    psi = np.zeros(4, dtype=complex)
    psi[:3] = v[:, k]
    formula = 0.5 * admixture(omega1, delta_det) * gamma_p
    T = decay_times / formula
    ch = [dynamics.LindbladChannel(jump, gamma_p)]
    dt = dynamics.suggest_dt(dynamics.lindblad_frequency(h, ch), T)
    n = int(round(T / dt))
    res = dynamics.evolve_lindblad(h, ch, psi, dt, T,
                                   {"survival": np.diag([1, 1, 1, 0]).astype(complex)},
                                   sample_every=max(1, n // 200))
    fit = dynamics.fit_exponential(res.times, res.observables["survival"])
    return DecayCheck(fit.rate, formula, fit.residual)


# --- budgets ------------------------------------------------------------------------

def floquet_matrix(components: dict, omega0: float, n_max: int) -> np.ndarray:
    """Sambe-space matrix for H(t) = sum_k H_k exp(i k omega0 t), harmonics |n| <= n_max.

    Block (n, n) is H_0 + n omega0 and block (n, n-k) is H_k. Quasi-energies
    of the n = 0 sector are the eigenvalues nearest the unperturbed levels.
    """
    dim = len(components[0])
    nb = 2 * n_max + 1
    out = np.zeros((dim * nb, dim * nb), dtype=complex)
    for a in range(nb):
        n = a - n_max
        for k, hk in components.items():
            b = a - k
            if 0 <= b < nb:
                out[a * dim:(a + 1) * dim, b * dim:(b + 1) * dim] += hk
        out[a * dim:(a + 1) * dim, a * dim:(a + 1) * dim] += n * omega0 * np.eye(dim)
    return out


def harmonic_components(scheme, drives, frame, cutoff: float, omega0: float,
                        B: float = 0.0, offsets=None) -> dict:
    """Split the RWA Hamiltonian into Fourier components at multiples of omega0."""
    h0 = drive.rwa_hamiltonian(scheme, [], frame, cutoff, B, offsets)
    comps = {0: h0}
    for term in drive.rwa_terms(scheme, drives, frame, cutoff):
        k = term.detuning / omega0
        kr = int(round(k))
        if abs(k - kr) > 1e-9:
            raise ValueError(f"residual frequency {term.detuning:.6g} is not a multiple "
                             f"of {omega0:.6g}")
        for kk, r, c, a in ((kr, term.row, term.col, term.amplitude),
                            (-kr, term.col, term.row, np.conj(term.amplitude))):
            comps.setdefault(kk, np.zeros_like(h0))
            comps[kk][r, c] += a
    return comps


@dataclass(frozen=True)
class DarkQuasiState:
    shift: float
    admixture: float


def dark_quasi_state(comps: dict, omega0: float, dark, n_max: int = 4) -> DarkQuasiState:
    """Quasi-energy and admixture of the Floquet state connected to ``dark``.

    Restrict ``comps`` to one driven block first: exactly degenerate,
    uncoupled levels would otherwise mix arbitrarily with the dark state.
    """
    if set(comps) == {0}:
        n_max = 0
    hf = floquet_matrix(comps, omega0, n_max)
    w, v = np.linalg.eigh(hf)
    dim = len(comps[0])
    big = np.zeros(len(hf), dtype=complex)
    big[n_max * dim:(n_max + 1) * dim] = dark
    ov = np.abs(big.conj() @ v) ** 2
    k = int(np.argmax(ov))
    return DarkQuasiState(float(w[k]), float(max(0.0, 1 - ov[k])))


def _restrict(comps: dict, idx) -> dict:
    return {k: h[np.ix_(idx, idx)] for k, h in comps.items()}


@dataclass(frozen=True)
class PolarizationReport:
    pol_error: float
    shifts: tuple[float, float]
    admixtures: tuple[float, float]
    gap_hz: float
    min_gap_ok: bool


def polarization_budget(pol_error: float = 0.01, omega1: float = 1e5,
                        B: float = NominalParameters.B, omega_gap: float = 1e9,
                        delta: float = 1e12, n_max: int = 4) -> PolarizationReport:
    """Dark-state quasi-energy shifts with a fraction of each beam in the wrong
    polarization. The wrong-polarization components rotate at +-8B/5 in the
    drive frame and are handled by exact Floquet (Sambe) diagonalization."""
    scheme = system.build_ca40()
    drives = drive.ca40_drives(omega1, B, delta, omega_gap, pol_error=pol_error)
    frame = drive.ca40_frame(B, delta, omega_gap)
    offsets = drive.ca40_offsets(scheme, B, delta, omega_gap)
    omega0 = 1.6 * B
    comps = harmonic_components(scheme, drives, frame, 10 * B, omega0, B, offsets)
    qs = []
    for name, labels in (("D1", ("d1", "d3", "p1")), ("D2", ("d0", "d2", "p0"))):
        idx = [scheme.index(x) for x in labels]
        dark = drive.reference_state(scheme, name)[idx]
        qs.append(dark_quasi_state(_restrict(comps, idx), omega0, dark, n_max))
    gap_hz = 0.8 * B / (2 * math.pi)
    return PolarizationReport(pol_error, (qs[0].shift, qs[1].shift),
                              (qs[0].admixture, qs[1].admixture), gap_hz,
                              gap_hz >= GAP_CRITERION_HZ)


@dataclass(frozen=True)
class GradientReport:
    delta_b: float
    dark_first_order: tuple[float, float]
    dark_shifts: tuple[float, float]
    bright_shift: float
    passed: bool


def _gradient_perturbation(scheme, delta_b: float) -> np.ndarray:
    """Zeeman shift g_J m dB on the driven D and P levels (drive frequencies fixed)."""
    diag = [lv.lande_g * lv.m * delta_b if lv.term in ("D3/2", "P1/2") else 0.0
            for lv in scheme.levels]
    return np.diag(diag).astype(complex)


def bfield_gradient_budget(delta_b_fraction: float = 1e-5, B: float = NominalParameters.B,
                           omega1: float = 1e5, dark_tolerance: float = 0.1) -> GradientReport:
    """Dark and bright energy shifts when the local field is B + dB.

    ``passed`` requires dB << Omega1 (ratio below 0.1) and an exact dark shift
    below ``dark_tolerance`` rad/s.
    """
    scheme = system.build_ca40()
    delta_b = delta_b_fraction * B
    h = drive.ca40_drive_hamiltonian(scheme, omega1)
    v = _gradient_perturbation(scheme, delta_b)
    darks = [drive.reference_state(scheme, "D1"), drive.reference_state(scheme, "D2")]
    first = tuple(float(qcore.expectation(d, v).real) for d in darks)
    driven = [scheme.index(x) for x in ("d0", "d1", "d2", "d3", "p0", "p1")]
    sub = (h + v)[np.ix_(driven, driven)]
    w, vec = np.linalg.eigh(sub)
    shifts = []
    for d in darks:
        k = int(np.argmax(np.abs(d[driven].conj() @ vec)))
        shifts.append(float(w[k]))
    w0 = np.linalg.eigvalsh(h[np.ix_(driven, driven)])
    bright = float(np.max(np.abs(np.sort(w)[[0, 1, 4, 5]] - np.sort(w0)[[0, 1, 4, 5]])))
    ok = abs(delta_b) <= REGIME_RATIO * omega1 and max(map(abs, shifts)) <= dark_tolerance
    return GradientReport(delta_b, first, tuple(shifts), bright, ok)


def dark_shift_exponent(omega1: float = 1.0, fractions=(1e-3, 2e-3, 4e-3, 8e-3, 1.6e-2),
                        B: float = 1.0) -> float:
    """Log-log slope of |dark shift| against dB (exact eigensolve, D1)."""
    xs, ys = [], []
    for f in fractions:
        r = bfield_gradient_budget(f * omega1 / B, B, omega1)
        xs.append(r.delta_b)
        ys.append(abs(r.dark_shifts[0]))
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])
