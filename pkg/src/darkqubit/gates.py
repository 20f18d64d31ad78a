"""Single-qubit gates on the {D1, D2} qubit.

* ``sigma_y_gate``: a microwave J_y drive on D3/2 on top of the dressing.
* ``raman_sigma_x``: two far-detuned control fields via p1.
* ``berry_sigma_z``: adiabatic loop in a (p1, d1, d3) system.

Qubit matrices are written in the ordered basis (D1, D2).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.integrate
import scipy.linalg

from darkqubit import drive, dynamics, qcore, system

SQ3 = math.sqrt(3.0)


@dataclass
class GateReport:
    effective_generator: np.ndarray   # 2x2 on (D1, D2)
    rate: float
    leakage: float
    fidelity: float
    dark_block: np.ndarray
    series: dict = field(default_factory=dict)


def gate_fidelity(actual, target) -> tuple[float, float]:
    """(|tr(target^H M)|/2, 1 - smallest singular value of M squared)."""
    m = np.asarray(actual, dtype=complex)
    u = np.asarray(target, dtype=complex)
    fid = abs(np.trace(qcore.dagger(u) @ m)) / 2
    smin = float(np.linalg.svd(m, compute_uv=False).min())
    return float(min(fid, 1.0)), float(min(max(1 - smin**2, 0.0), 1.0))


def dark_basis(scheme) -> np.ndarray:
    return np.stack([drive.reference_state(scheme, "D1"),
                     drive.reference_state(scheme, "D2")], axis=1)


def _generator(m: np.ndarray, duration: float) -> np.ndarray:
    """Hermitian G with M ~ exp(-i G duration), from the unitary part of M."""
    u, _, vh = np.linalg.svd(m)
    g = 1j * scipy.linalg.logm(u @ vh) / duration
    return 0.5 * (g + qcore.dagger(g))


def _quarter_block(step, dt, v, expected, duration):
    """Dark block after about a quarter cycle, where the generator is unambiguous."""
    t_q = min(duration, math.pi / (4 * expected)) if expected else duration
    k = max(1, int(round(t_q / dt)))
    u = np.linalg.matrix_power(step, k)
    return qcore.dagger(v) @ u @ v, k * dt


# --- sigma_y ---------------------------------------------------------------------

def microwave_jy(scheme, omega_g: float, imbalance: float = 0.0) -> np.ndarray:
    """Post-RWA microwave term i Omega_g (sqrt3/2 |d1><d0| + |d2><d1| + sqrt3/2 |d3><d2|) + h.c.

    ``imbalance`` scales the two outer (sqrt 3) legs by (1 + imbalance); at
    zero the term equals -Omega_g J_y on D3/2 and never leaves span{D1, D2}.
    """
    outer = SQ3 / 2 * (1 + imbalance)
    x = 1j * omega_g * (outer * scheme.op("d1", "d0") + scheme.op("d2", "d1")
                        + outer * scheme.op("d3", "d2"))
    return x + qcore.dagger(x)


def sigma_y_target(angle: float) -> np.ndarray:
    """exp(-i angle/2 * Y) with Y = -i|D2><D1| + i|D1><D2|."""
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def sigma_y_gate(omega_g: float, omega1: float = 1.0, duration: float | None = None,
                 imbalance: float = 0.0, samples: int = 400) -> GateReport:
    """Simulate the J_y gate starting from D1.

    The default duration covers two full D1 -> D2 -> D1 cycles at the expected
    rate 3 Omega_g/2. The fitted rate comes from P(D2) = sin^2(rate t).
    """
    if omega_g > 0.1 * omega1:
        warnings.warn("Omega_g/Omega1 > 0.1: protection is not guaranteed", stacklevel=2)
    scheme = system.build_ca40(0.0, 0.0)
    h = drive.ca40_drive_hamiltonian(scheme, omega1) + microwave_jy(scheme, omega_g, imbalance)
    expected = 1.5 * omega_g
    if duration is None:
        duration = 2 * 2 * math.pi / (2 * expected) if omega_g else 10.0 / omega1
    v = dark_basis(scheme)
    dt = dynamics.suggest_dt(dynamics.max_frequency(h), duration)
    n = int(round(duration / dt))
    step = dynamics.rk4_step_matrix(-1j * h, dt)
    every = max(1, n // samples)
    u = np.eye(scheme.dim, dtype=complex)
    times, pops, leaks = [0.0], [0.0], [0.0]
    pj = qcore.projector(v)
    stride = np.linalg.matrix_power(step, every)
    quarter = _quarter_block(step, dt, v, expected, duration)
    done = 0
    while done < n:
        k = min(every, n - done)
        u = (stride if k == every else np.linalg.matrix_power(step, k)) @ u
        done += k
        psi = u @ v[:, 0]
        times.append(done * dt)
        pops.append(abs(np.vdot(v[:, 1], psi)) ** 2)
        leaks.append(1 - qcore.expectation(psi, pj).real)
    m = qcore.dagger(v) @ u @ v
    gen = _generator(*quarter)
    rate = dynamics.fit_rabi(times, pops, guess=expected) if omega_g else 0.0
    target = sigma_y_target(2 * expected * duration)
    fid, _ = gate_fidelity(m, target)
    leak = max(max(leaks), gate_fidelity(m, target)[1])
    return GateReport(gen, rate, float(leak), fid, m,
                      {"time_s": np.array(times), "pop_D2": np.array(pops),
                       "leakage": np.array(leaks)})


def sigma_y_propagator(omega_g: float, omega1: float, duration: float, dt: float) -> np.ndarray:
    """Dark block of the J_y gate propagator at a fixed step."""
    scheme = system.build_ca40(0.0, 0.0)
    h = drive.ca40_drive_hamiltonian(scheme, omega1) + microwave_jy(scheme, omega_g)
    u = dynamics.propagator(h, dt, duration)
    v = dark_basis(scheme)
    return qcore.dagger(v) @ u @ v


def leakage_exponent(omega_gs, omega1: float = 1.0, imbalance: float = 0.05) -> float:
    """Slope of log(max leakage) against log(Omega_g/Omega1)."""
    leaks = [sigma_y_gate(g, omega1, imbalance=imbalance, samples=2000).leakage
             for g in omega_gs]
    return float(np.polyfit(np.log(np.asarray(omega_gs) / omega1), np.log(leaks), 1)[0])


# --- sigma_x (Raman) ------------------------------------------------------------------

def raman_hamiltonian(scheme, omega_cont: float, delta: float,
                      omega1: float) -> dynamics.RotatingHamiltonian:
    """Dressing plus Omega_cont (e^{i delta t}|p1><d1| + e^{i delta t}|p1><d2| + h.c.)."""
    ops = ((omega_cont * scheme.op("p1", "d1"), delta),
           (omega_cont * scheme.op("p1", "d2"), delta))
    return dynamics.RotatingHamiltonian(drive.ca40_drive_hamiltonian(scheme, omega1), ops)


def raman_rate(omega_cont: float, delta: float) -> float:
    return 3 * omega_cont**2 / (4 * delta)


def raman_sigma_x(omega_cont: float, delta: float, duration: float | None = None,
                  omega1: float = 2.0, samples: int = 400,
                  check_periods: int = 20) -> GateReport:
    """Full periodic simulation of the Raman gate from D1 (stroboscopic samples).

    ``series['intermediate_max']`` is the largest p1 population seen over the
    first ``check_periods`` drive periods, sampled at every RK4 step. The
    reported leakage is the larger of that fine-sampled population outside
    span{D1, D2} and the stroboscopic maximum over the whole gate.
    """
    if omega_cont and abs(omega_cont / delta) > 1e-2:
        warnings.warn("Omega_cont/delta > 1e-2: effective model not certified", stacklevel=2)
    scheme = system.build_ca40(0.0, 0.0)
    v = dark_basis(scheme)
    if omega_cont == 0:
        return GateReport(np.zeros((2, 2), complex), 0.0, 0.0, 1.0, np.eye(2, dtype=complex))
    h = raman_hamiltonian(scheme, omega_cont, delta, omega1)
    expected = raman_rate(omega_cont, delta)
    u_period, period = dynamics.floquet_propagator(h)
    if duration is None:
        duration = 2 * math.pi / expected
    n_periods = max(1, int(round(duration / period)))
    every = max(1, n_periods // samples)
    stride = np.linalg.matrix_power(u_period, every)
    u = np.eye(scheme.dim, dtype=complex)
    pj = qcore.projector(v)
    times, pops, leaks = [0.0], [0.0], [0.0]
    done = 0
    while done < n_periods:
        k = min(every, n_periods - done)
        u = (stride if k == every else np.linalg.matrix_power(u_period, k)) @ u
        done += k
        psi = u @ v[:, 0]
        times.append(done * period)
        pops.append(abs(np.vdot(v[:, 1], psi)) ** 2)
        leaks.append(1 - qcore.expectation(psi, pj).real)
    m = qcore.dagger(v) @ u @ v
    T = n_periods * period
    rate = dynamics.fit_rabi(times, pops, guess=expected)
    gen = _generator(*_quarter_block(u_period, period, v, expected, T))
    c, s = math.cos(expected * T), math.sin(expected * T)
    target = np.array([[c, 1j * s], [1j * s, c]])
    fid, _ = gate_fidelity(m, target)
    p1 = qcore.projector(scheme.ket("p1"))
    outside = np.eye(scheme.dim) - pj
    fine = dynamics.evolve_schrodinger(h, v[:, 0], period / math.ceil(
        period * dynamics.STEPS_PER_PERIOD * h.max_frequency), check_periods * period,
        {"p1": p1, "outside": outside})
    leak = max(max(leaks), float(np.max(fine.observables["outside"])))
    return GateReport(gen, rate, leak, fid, m,
                      {"time_s": np.array(times), "pop_D2": np.array(pops),
                       "leakage": np.array(leaks),
                       "intermediate_max": float(np.max(fine.observables["p1"]))})


def raman_leakage_exponent(omega_conts, delta: float = 100.0, omega1: float = 2.0) -> float:
    """Slope of log(max leakage) against log(Omega_cont/delta)."""
    leaks = [raman_sigma_x(c, delta, omega1=omega1).leakage for c in omega_conts]
    return float(np.polyfit(np.log(np.asarray(omega_conts) / delta), np.log(leaks), 1)[0])


# --- sigma_z (Berry phase) -------------------------------------------------------------

@dataclass(frozen=True)
class ContourSpec:
    """Closed loop (R1(s), R2(s)) for s in [0, 1]; r1 and r2 accept arrays."""
    r1: Callable[[float], float]
    r2: Callable[[float], float]
    closed: bool = True

    def point(self, s):
        return float(self.r1(s)), float(self.r2(s))

    def check_closed(self, tol: float = 1e-9) -> None:
        a, b = self.point(0.0), self.point(1.0)
        if not self.closed or math.dist(a, b) > tol:
            raise ValueError(f"contour is open: starts at {a}, ends at {b}")


def _smoothstep(x):
    """0 -> 1 with zero slope at both ends."""
    return x - np.sin(2 * np.pi * x) / (2 * np.pi)


def polygon_contour(vertices) -> ContourSpec:
    """Straight segments through ``vertices``, each traversed with a smooth
    ramp so the velocity vanishes at every corner."""
    pts = np.asarray(vertices, dtype=float)
    nseg = len(pts) - 1

    def at(s, axis):
        x = np.clip(np.asarray(s, dtype=float), 0.0, 1.0) * nseg
        k = np.minimum(x.astype(int), nseg - 1)
        f = _smoothstep(x - k)
        return pts[k, axis] + f * (pts[k + 1, axis] - pts[k, axis])

    return ContourSpec(lambda s: at(s, 0), lambda s: at(s, 1),
                       closed=bool(np.allclose(pts[0], pts[-1])))


def rectangle_contour() -> ContourSpec:
    """R1 sweeps 0 -> 2pi along R2 = 0 and back along R2 = pi/2, starting and
    ending at (0, pi/4)."""
    q = math.pi / 4
    return polygon_contour([(0, q), (0, 0), (2 * math.pi, 0), (2 * math.pi, 2 * q),
                            (0, 2 * q), (0, q)])


def fourier_contour(rng: np.random.Generator, harmonics: int = 3,
                    amplitude: float = 0.4) -> ContourSpec:
    """Random smooth loop through (0, pi/4) that stays inside 0 < R2 < pi/2."""
    a = rng.normal(size=(2, harmonics)) * amplitude / np.arange(1, harmonics + 1)
    b = rng.normal(size=(2, harmonics)) * amplitude / np.arange(1, harmonics + 1)
    scale = 0.95 * (math.pi / 4) / max(1e-12, 2 * np.abs(a[1]).sum() + np.abs(b[1]).sum())
    a[1] *= min(1.0, scale)
    b[1] *= min(1.0, scale)
    ks = np.arange(1, harmonics + 1)

    def make(axis, base):
        def f(s):
            ph = 2 * np.pi * np.multiply.outer(np.asarray(s, dtype=float), ks)
            return base + (a[axis] * (np.cos(ph) - 1) + b[axis] * np.sin(ph)).sum(axis=-1)
        return f
    return ContourSpec(make(0, 0.0), make(1, math.pi / 4))


def adiabatic_hamiltonian(r1: float, r2: float, omega0: float) -> np.ndarray:
    """H_ad in the basis (p1, d1, d3) with theta+ = R1, theta- = 0."""
    om_minus = 2 * omega0 * math.sin(r2)
    om_plus = 2 * omega0 * math.cos(r2)
    h = np.zeros((3, 3), dtype=complex)
    h[0, 1] = 0.5 * om_minus
    h[0, 2] = 0.5 * np.exp(-1j * r1) * om_plus
    return h + qcore.dagger(h)


def zero_state(r1: float, r2: float) -> np.ndarray:
    return np.array([0.0, math.cos(r2), -np.exp(1j * r1) * math.sin(r2)])


@dataclass(frozen=True)
class BerryResult:
    phase: float                 # Phi = (accumulated geometric phase) / 2
    geometric_phase: float       # continuous phase picked up by the zero state
    adiabaticity_error: float    # 1 - |<zero state|psi(T)>|
    gate: np.ndarray             # diag(e^{2i Phi}, 1) on (D1, D2)


def berry_gate(phi: float) -> np.ndarray:
    return np.diag([np.exp(2j * phi), 1.0])


def berry_sigma_z(contour: ContourSpec, omega0: float = 1.0, ramp_time: float | None = None,
                  time_map: Callable[[float], float] | None = None) -> BerryResult:
    """Drive the loop adiabatically and read the geometric phase of the zero state.

    ``time_map`` sends t/T in [0, 1] to the contour parameter s (identity by
    default). The phase is unwrapped step by step so whole turns are kept.
    """
    contour.check_closed()
    if ramp_time is None:
        ramp_time = 2000.0 / omega0
    if ramp_time < 100.0 / omega0:
        raise ValueError("ramp_time must be at least 100/omega0")
    tmap = time_map or (lambda x: x)
    # H_ad has eigenvalues 0 and +-omega0
    dt = dynamics.suggest_dt(omega0, ramp_time)
    n = int(round(ramp_time / dt))
    dynamics.check_step(dt, omega0)
    s = tmap(np.linspace(0.0, 1.0, 2 * n + 1))
    r1 = np.asarray(contour.r1(s), dtype=float)
    r2 = np.asarray(contour.r2(s), dtype=float)
    # only the p1 row and column of H_ad are nonzero
    h01 = omega0 * np.sin(r2)
    h02 = omega0 * np.exp(-1j * r1) * np.cos(r2)
    zero = np.stack([np.zeros_like(r1), np.cos(r2), -np.exp(1j * r1) * np.sin(r2)], axis=1)

    def f(i, y):
        return -1j * np.array([h01[i] * y[1] + h02[i] * y[2],
                               np.conj(h01[i]) * y[0], np.conj(h02[i]) * y[0]])

    psi = zero[0].astype(complex)
    gamma, last = 0.0, 0.0
    for k in range(n):
        i = 2 * k
        k1 = f(i, psi)
        k2 = f(i + 1, psi + dt / 2 * k1)
        k3 = f(i + 1, psi + dt / 2 * k2)
        k4 = f(i + 2, psi + dt * k3)
        psi = psi + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        ang = float(np.angle(np.vdot(zero[i + 2], psi)))
        gamma += (ang - last + math.pi) % (2 * math.pi) - math.pi
        last = ang
    final = abs(np.vdot(zero[-1], psi))
    phi = gamma / 2
    return BerryResult(phi, gamma, float(1 - final), berry_gate(phi))


def berry_line_integral(contour: ContourSpec) -> float:
    """Phi via Green's theorem: -1/2 of the loop integral of sin^2(R2) dR1."""
    def integrand(s, h=1e-6):
        r1p = (contour.r1(min(s + h, 1.0)) - contour.r1(max(s - h, 0.0))) / \
              (min(s + h, 1.0) - max(s - h, 0.0))
        return -0.5 * math.sin(contour.r2(s)) ** 2 * r1p
    val, _ = scipy.integrate.quad(integrand, 0.0, 1.0, limit=400, epsabs=1e-12)
    return val


def berry_quadrature(contour: ContourSpec, n_boundary: int = 20000,
                     n_levels: int = 400) -> float:
    """Phi = 1/2 * surface integral of sin(2 R2) over the enclosed region.

    The loop is sampled as a dense polygon. For each level of R2 the signed
    length of enclosed R1 (winding-weighted) is found from the polygon's
    crossings of that horizontal line; the R2 integral follows. Levels are
    split into panels at every turning value of R2, where that length has a
    square-root edge, and each panel uses Gauss-Legendre nodes in the
    variable theta with R2 = lo + (hi - lo)(1 - cos theta)/2.
    """
    s = np.linspace(0.0, 1.0, n_boundary + 1)
    pts = np.array([contour.point(x) for x in s])
    lo, hi = pts[:, 1].min(), pts[:, 1].max()
    if hi - lo < 1e-14:
        return 0.0
    y = pts[:, 1]
    dy = np.diff(y)
    turns = [lo, hi]
    nz = np.flatnonzero(np.abs(dy) > 1e-14 * (hi - lo))
    flips = nz[1:][np.sign(dy[nz[1:]]) != np.sign(dy[nz[:-1]])]
    turns += list(y[flips])
    edges = np.unique(np.round(turns, 13))
    x, w = np.polynomial.legendre.leggauss(max(8, n_levels // max(1, len(edges) - 1)))
    theta = math.pi * (x + 1) / 2
    levels, weights = [], []
    for p0, p1 in zip(edges[:-1], edges[1:]):
        levels.append(p0 + (p1 - p0) * (1 - np.cos(theta)) / 2)
        weights.append(w * (math.pi / 2) * (p1 - p0) / 2 * np.sin(theta))
    levels, weights = np.concatenate(levels), np.concatenate(weights)
    a, b = pts[:-1], pts[1:]
    total = 0.0
    for y, wt in zip(levels, weights):
        up = (a[:, 1] <= y) & (b[:, 1] > y)
        down = (a[:, 1] > y) & (b[:, 1] <= y)
        cross = up | down
        f = (y - a[cross, 1]) / (b[cross, 1] - a[cross, 1])
        xr = a[cross, 0] + f * (b[cross, 0] - a[cross, 0])
        sign = np.where(up[cross], 1.0, -1.0)
        # counter-clockwise loops cross upward on the right: length = sum(sign * x)
        total += wt * math.sin(2 * y) * float(np.sum(sign * xr))
    return 0.5 * total
