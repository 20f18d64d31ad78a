"""Ion-cavity coupling of the protected qubit.

The full models are written in frames where they are static. For the
Raman-type couplings the frame rotates p1 at the common detuning ``delta``;
for the QND model it rotates the photon number. Both frame changes are
exact, so long evolutions reduce to powers of a fixed RK4 step.

Parameter names: ``omega_c_drive`` is the control-field Rabi frequency
Omega_c = 2 Omega_cont, ``delta`` the common detuning from p1.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from darkqubit import drive, dynamics, gates, qcore, system

REGIME_RATIO = 100.0


@dataclass(frozen=True)
class FockSpace:
    n_max: int = 20

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")

    @property
    def dim(self) -> int:
        return self.n_max + 1

    def annihilation(self) -> np.ndarray:
        return np.diag(np.sqrt(np.arange(1, self.dim)), k=1).astype(complex)

    def number(self) -> np.ndarray:
        return np.diag(np.arange(self.dim)).astype(complex)

    def identity(self) -> np.ndarray:
        return np.eye(self.dim, dtype=complex)

    def ket(self, n: int) -> np.ndarray:
        if not 0 <= n <= self.n_max:
            raise ValueError(f"photon number {n} outside truncation {self.n_max}")
        return qcore.basis_vector(self.dim, n)


@dataclass(frozen=True)
class CouplingParams:
    g: float
    omega_c_drive: float
    delta: float
    kappa: float = 0.0
    gamma_p: float = 0.0
    n_ions: int = 1

    def __post_init__(self):
        for name in ("g", "omega_c_drive", "delta", "kappa", "gamma_p"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.n_ions < 1:
            raise ValueError("n_ions must be >= 1")

    @property
    def omega_cont(self) -> float:
        return 0.5 * self.omega_c_drive


# --- effective beam splitter ----------------------------------------------------

@dataclass(frozen=True)
class BeamSplitter:
    bare_coefficient: float
    dark_coefficient: float
    bare: np.ndarray     # on (d1, d2) x Fock
    dark: np.ndarray     # on (D1, D2) x Fock
    regime_ok: bool


def _two_level_swap(coeff: float, fock: FockSpace) -> np.ndarray:
    """coeff (|1><0| a + h.c.) on a two-level system (index 0, 1) times Fock."""
    lower_to_upper = np.zeros((2, 2), dtype=complex)
    lower_to_upper[1, 0] = 1.0
    x = coeff * np.kron(lower_to_upper, fock.annihilation())
    return x + qcore.dagger(x)


def effective_beamsplitter(params: CouplingParams, fock: FockSpace = FockSpace()) -> BeamSplitter:
    """-(g Omega_c / 2 delta)(|d2><d1| a + h.c.) and its dark-qubit form with 3/4 of it."""
    regime = params.delta >= REGIME_RATIO * params.omega_c_drive
    if not regime:
        warnings.warn("delta < 100 Omega_c: effective beam splitter not certified", stacklevel=2)
    bare = -params.g * params.omega_c_drive / (2 * params.delta) if params.delta else 0.0
    dark = 0.75 * bare
    return BeamSplitter(bare, dark, _two_level_swap(bare, fock), _two_level_swap(dark, fock),
                        regime)


def raman_cavity_hamiltonian(params: CouplingParams, fock: FockSpace,
                             stark_compensation: bool = True,
                             photons: int = 1) -> np.ndarray:
    """Full (d1, d2, p1) x Fock model in the frame where p1 sits at +delta.

    ``stark_compensation`` adds (Omega_cont^2 - photons g^2)/delta on d2, which
    makes |d1, photons> and |d2, photons-1> degenerate at second order.
    """
    d1, d2, p1 = (qcore.basis_vector(3, k) for k in range(3))
    a = fock.annihilation()
    eye_f = fock.identity()
    h = params.delta * np.kron(np.outer(p1, p1), eye_f)
    x = params.omega_cont * np.kron(np.outer(p1, d2), eye_f) \
        + params.g * np.kron(np.outer(p1, d1), a)
    h = h + x + qcore.dagger(x)
    if stark_compensation:
        comp = (params.omega_cont**2 - photons * params.g**2) / params.delta
        h = h + comp * np.kron(np.outer(d2, d2), eye_f)
    return h


@dataclass(frozen=True)
class SwapFit:
    rate: float
    expected: float
    times: np.ndarray
    transferred: np.ndarray

    @property
    def relative_error(self) -> float:
        return abs(self.rate - self.expected) / self.expected


def _swap_run(h, psi0, target_proj, expected, cycles=1.0, samples=400):
    T = cycles * math.pi / expected
    dt = dynamics.suggest_dt(dynamics.spectral_radius(h), T)
    n = int(round(T / dt))
    res = dynamics.evolve_schrodinger(h, psi0, dt, T, {"target": target_proj},
                                      sample_every=max(1, n // samples))
    rate = dynamics.fit_rabi(res.times, res.observables["target"], guess=expected)
    return rate, res


def single_ion_swap(params: CouplingParams, fock: FockSpace = FockSpace(2)) -> SwapFit:
    """|d1, 1> -> |d2, 0> transfer rate in the full model vs g Omega_c/(2 delta)."""
    h = raman_cavity_hamiltonian(params, fock)
    psi0 = np.kron(qcore.basis_vector(3, 0), fock.ket(1))
    target = qcore.projector(np.kron(qcore.basis_vector(3, 1), fock.ket(0)))
    expected = abs(effective_beamsplitter(params, fock).bare_coefficient)
    rate, res = _swap_run(h, psi0, target, expected)
    return SwapFit(rate, expected, res.times, res.observables["target"])


def collective_hamiltonian(params: CouplingParams, fock: FockSpace) -> np.ndarray:
    """N ions, each (d1, d2, p1), sharing one mode; p1 at +delta.

    The d2 compensation (Omega_cont^2 - N g^2)/delta makes |d1...d1, 1> and
    the one-d2 symmetric state with no photon degenerate at second order.
    """
    n = params.n_ions
    d1, d2, p1 = (np.outer(qcore.basis_vector(3, i), qcore.basis_vector(3, j))
                  for i, j in ((0, 0), (1, 1), (2, 2)))
    p1d2 = np.outer(qcore.basis_vector(3, 2), qcore.basis_vector(3, 1))
    p1d1 = np.outer(qcore.basis_vector(3, 2), qcore.basis_vector(3, 0))
    eye3 = np.eye(3)
    a = fock.annihilation()
    comp = (params.omega_cont**2 - n * params.g**2) / params.delta

    def on_ion(op, k):
        mats = [eye3] * n
        mats[k] = op
        return qcore.kron(*mats)

    dim_ions = 3**n
    h = np.zeros((dim_ions * fock.dim,) * 2, dtype=complex)
    for k in range(n):
        h += np.kron(on_ion(params.delta * p1 + comp * d2, k), fock.identity())
        x = params.omega_cont * np.kron(on_ion(p1d2, k), fock.identity()) \
            + params.g * np.kron(on_ion(p1d1, k), a)
        h += x + qcore.dagger(x)
    return h


def _kron_vec(vecs) -> np.ndarray:
    return functools.reduce(np.kron, vecs)


def collective_swap(params: CouplingParams, fock: FockSpace = FockSpace(2)) -> SwapFit:
    """Transfer of one photon into the symmetric one-d2 state of N ions."""
    n = params.n_ions
    h = collective_hamiltonian(params, fock)
    ions0 = _kron_vec([qcore.basis_vector(3, 0)] * n)
    psi0 = np.kron(ions0, fock.ket(1))
    w = np.zeros(3**n, dtype=complex)
    for k in range(n):
        vecs = [qcore.basis_vector(3, 0)] * n
        vecs[k] = qcore.basis_vector(3, 1)
        w += _kron_vec(vecs)
    w /= np.linalg.norm(w)
    target = qcore.projector(np.kron(w, fock.ket(0)))
    single = abs(effective_beamsplitter(params, fock).bare_coefficient)
    expected = math.sqrt(n) * single
    rate, res = _swap_run(h, psi0, target, expected)
    return SwapFit(rate, expected, res.times, res.observables["target"])


# --- collective strong coupling -----------------------------------------------------

@dataclass(frozen=True)
class CollectiveReport:
    enhanced_rate: float
    gamma: float
    strong_coupling: bool
    max_drive_ratio: float       # Omega_c/delta below which gamma < enhanced rate
    kappa_scale: float           # sqrt(N) g Omega_c/delta
    kappa_limit: float           # enhanced_rate / threshold


def collective_rate(params: CouplingParams, threshold: float = 10.0) -> CollectiveReport:
    """sqrt(N) 3 g Omega_c/(8 delta) against kappa and (Omega_c/delta)^2 Gamma_p.

    Strong coupling holds when both damping rates are below the enhanced
    rate divided by ``threshold``.
    """
    sqn = math.sqrt(params.n_ions)
    ratio = params.omega_c_drive / params.delta
    enhanced = sqn * 3 * params.g * ratio / 8
    gamma = ratio**2 * params.gamma_p
    limit = enhanced / threshold
    strong = params.kappa < limit and gamma < limit
    max_ratio = 3 * params.g * sqn / (8 * params.gamma_p) if params.gamma_p else math.inf
    return CollectiveReport(enhanced, gamma, strong, max_ratio, sqn * params.g * ratio, limit)


# --- QND and phase gate -----------------------------------------------------------------

def qnd_effective_hamiltonian(params: CouplingParams, fock: FockSpace) -> np.ndarray:
    """-(3 g^2 / 4 delta)|D1><D1| a^dag a on (D1, D2) x Fock."""
    p = np.diag([1.0, 0.0]).astype(complex)
    return -(3 * params.g**2 / (4 * params.delta)) * np.kron(p, fock.number())


def qnd_hamiltonian(params: CouplingParams, fock: FockSpace, omega1: float) -> np.ndarray:
    """Dressed ion plus the detuned cavity on p1-d1, in the frame rotating the
    photon number at delta (exact): H_d + g(|p1><d1| a + h.c.) - delta a^dag a."""
    if params.delta < REGIME_RATIO * params.g:
        warnings.warn("delta < 100 g: Stark-shift picture not certified", stacklevel=2)
    scheme = system.build_ca40(0.0, 0.0)
    h = np.kron(drive.ca40_drive_hamiltonian(scheme, omega1), fock.identity())
    x = params.g * np.kron(scheme.op("p1", "d1"), fock.annihilation())
    h = h + x + qcore.dagger(x)
    return h - params.delta * np.kron(np.eye(scheme.dim), fock.number())


def qnd_phase_rate(params: CouplingParams, n_photons: int) -> float:
    return 3 * params.g**2 * n_photons / (4 * params.delta)


def qnd_ramsey(params: CouplingParams, n_photons: int, t: float, model: str = "effective",
               omega1: float = 2.0, fock: FockSpace | None = None) -> float:
    """Relative phase arg(c_D1) - arg(c_D2) after preparing (D1 + D2)/sqrt2 x |n>.

    ``model`` is ``effective`` (two-level dark qubit) or ``full`` (dressed
    eight-level ion times Fock space). The phase is unwrapped along the run.
    """
    fock = fock or FockSpace(max(2, n_photons + 1))
    if model == "effective":
        h = qnd_effective_hamiltonian(params, fock)
        d1 = np.kron([1.0, 0.0], fock.ket(n_photons))
        d2 = np.kron([0.0, 1.0], fock.ket(n_photons))
    elif model == "full":
        h = qnd_hamiltonian(params, fock, omega1)
        scheme = system.build_ca40(0.0, 0.0)
        d1 = np.kron(drive.reference_state(scheme, "D1"), fock.ket(n_photons))
        d2 = np.kron(drive.reference_state(scheme, "D2"), fock.ket(n_photons))
    else:
        raise ValueError(f"unknown model {model!r}")
    psi0 = (d1 + d2) / math.sqrt(2)
    if t == 0:
        return 0.0
    dt = dynamics.suggest_dt(dynamics.spectral_radius(h), t)
    n = int(round(t / dt))
    res = dynamics.evolve_schrodinger(
        h, psi0, dt, t, {"coh": lambda s: np.vdot(d1, s) * np.conj(np.vdot(d2, s))},
        sample_every=max(1, n // 200))
    return float(np.unwrap(np.angle(res.observables["coh"]))[-1])


def phase_time(params: CouplingParams, n_photons: int, phi: float) -> float:
    """Interaction time giving relative phase ``phi`` with ``n_photons``."""
    return phi / qnd_phase_rate(params, n_photons)


def cavity_phase_gate(params: CouplingParams, n_photons: int, t: float) -> gates.GateReport:
    """Relative phase phi = 3 g^2 t n / (4 delta): diag(e^{i phi}, 1) on (D1, D2)."""
    rate = qnd_phase_rate(params, n_photons)
    phi = rate * t
    m = np.diag([np.exp(1j * phi), 1.0])
    gen = np.diag([-rate, 0.0]).astype(complex)
    return gates.GateReport(gen, rate, 0.0, 1.0, m, {"phase": phi})


def cavity_decay(kappa: float, n0: int, T: float, fock: FockSpace = FockSpace(),
                 samples: int = 100) -> dynamics.EvolutionResult:
    """Photon number under cavity loss alone (ions decoupled)."""
    a = fock.annihilation()
    ch = [dynamics.LindbladChannel(a, kappa)]
    h = np.zeros((fock.dim, fock.dim), dtype=complex)
    dt = dynamics.suggest_dt(dynamics.lindblad_frequency(h, ch), T)
    n = int(round(T / dt))
    return dynamics.evolve_lindblad(h, ch, fock.ket(n0), dt, T, {"n": fock.number()},
                                    sample_every=max(1, n // samples))


def excitation_drift(params: CouplingParams, fock: FockSpace, T: float,
                     n_photons: int = 3) -> float:
    """Largest change of <a^dag a> + P(D2) under the effective beam splitter from |D1, n>."""
    bs = effective_beamsplitter(params, fock)
    nexc = np.kron(np.eye(2), fock.number()) + np.kron(np.diag([0.0, 1.0]), fock.identity())
    psi0 = np.kron([1.0, 0.0], fock.ket(n_photons))
    dt = dynamics.suggest_dt(dynamics.spectral_radius(bs.dark), T)
    res = dynamics.evolve_schrodinger(bs.dark, psi0, dt, T, {"nexc": nexc}, sample_every=10)
    return float(np.max(np.abs(res.observables["nexc"] - res.observables["nexc"][0])))


def with_ions(params: CouplingParams, n: int) -> CouplingParams:
    return replace(params, n_ions=n)
