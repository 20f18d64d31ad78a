"""Time evolution, noise, and decay fitting.

All integrators are fixed-step classical Runge-Kutta (RK4). For a static
generator the four stages collapse into the matrix polynomial
``I + hA + (hA)^2/2 + (hA)^3/6 + (hA)^4/24``, which is applied directly; this
is the same update as stage-by-stage RK4, only cheaper.

Random numbers come from Philox4x64 (counter-based). Trajectory ``k`` of a
run with master seed ``s`` uses the key ``(s, k)``, so trajectories are
independent of each other and of the order they run in.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import curve_fit

from darkqubit import qcore

STEPS_PER_PERIOD = 50.0


class StepSizeError(ValueError):
    def __init__(self, dt, required):
        super().__init__(f"dt = {dt:.6g} s is too large; need dt <= {required:.6g} s")
        self.dt = dt
        self.required = required


@dataclass(frozen=True)
class RotatingHamiltonian:
    """H(t) = static + sum_k (op_k exp(i nu_k t) + h.c.)."""
    static: np.ndarray
    terms: tuple = ()

    def __call__(self, t: float) -> np.ndarray:
        h = np.array(self.static, dtype=complex)
        for op, nu in self.terms:
            x = op * np.exp(1j * nu * t)
            h = h + x + qcore.dagger(x)
        return h

    @property
    def max_frequency(self) -> float:
        f = spectral_radius(self.static)
        for op, nu in self.terms:
            f += 2 * np.linalg.norm(op, 2) + abs(nu)
        return f

    @property
    def period(self) -> float | None:
        nus = [abs(nu) for _, nu in self.terms if nu != 0]
        if not nus:
            return None
        base = min(nus)
        if all(abs(n / base - round(n / base)) < 1e-9 for n in nus):
            return 2 * np.pi / base
        return None


@dataclass(frozen=True)
class TimeDependent:
    """Arbitrary H(t) with a user-declared frequency bound (rad/s)."""
    func: Callable[[float], np.ndarray]
    max_frequency: float

    def __call__(self, t):
        return self.func(t)


def spectral_radius(h) -> float:
    h = qcore._as_operator(h)
    if not h.any():
        return 0.0
    if qcore.is_hermitian(h, rtol=1e-9):
        w = np.linalg.eigvalsh(0.5 * (h + qcore.dagger(h)))
        return float(np.max(np.abs(w)))
    return float(np.max(np.abs(np.linalg.eigvals(h))))


def max_frequency(h) -> float:
    if isinstance(h, (RotatingHamiltonian, TimeDependent)):
        return float(h.max_frequency)
    return spectral_radius(h)


def check_step(dt: float, freq: float) -> None:
    if dt <= 0:
        raise ValueError("dt must be positive")
    if freq > 0 and dt > 1.0 / (STEPS_PER_PERIOD * freq) * (1 + 1e-12):
        raise StepSizeError(dt, 1.0 / (STEPS_PER_PERIOD * freq))


def suggest_dt(freq: float, T: float) -> float:
    """Largest dt obeying the step rule that divides T into whole steps."""
    if freq <= 0:
        return T / 10
    n = math.ceil(T * STEPS_PER_PERIOD * freq)
    return T / max(n, 1)


def rk4_step_matrix(a: np.ndarray, dt: float) -> np.ndarray:
    x = dt * np.asarray(a, dtype=complex)
    eye = np.eye(len(x), dtype=complex)
    return eye + x @ (eye + x @ (eye / 2 + x @ (eye / 6 + x / 24)))


def _rk4(f, y, t, dt):
    k1 = f(t, y)
    k2 = f(t + dt / 2, y + dt / 2 * k1)
    k3 = f(t + dt / 2, y + dt / 2 * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


@dataclass
class EvolutionResult:
    times: np.ndarray
    observables: dict
    final_state: np.ndarray
    seed_used: int | None = None
    diagnostics: dict = field(default_factory=dict)
    stderr: dict = field(default_factory=dict)

    def to_csv(self, path) -> None:
        """Time column plus one column per observable, 17 significant digits."""
        names = list(self.observables)
        rows = [[f"{t:.17g}", *(f"{float(np.real(self.observables[n][k])):.17g}" for n in names)]
                for k, t in enumerate(self.times)]
        _write_csv(path, ["time_s", *names], rows)


def _observe(observables, state):
    out = {}
    for name, obs in observables.items():
        out[name] = obs(state) if callable(obs) else qcore.expectation(state, obs).real
    return out


def _write_csv(target, header, rows) -> None:
    """RFC 4180 CSV (CRLF line ends) to a path or an open text stream."""
    if hasattr(target, "write"):
        w = csv.writer(target, lineterminator="\r\n")
        w.writerow(header)
        w.writerows(rows)
        return
    with open(target, "w", newline="") as fh:
        _write_csv(fh, header, rows)


def _n_steps(dt, T):
    n = int(round(T / dt))
    if n < 1 or abs(n * dt - T) > 1e-9 * max(T, dt):
        raise ValueError(f"T = {T} is not a whole number of steps dt = {dt}")
    return n


def _collect(samples, names):
    return {n: np.array([s[n] for s in samples]) for n in names}


def evolve_schrodinger(h, psi0, dt: float, T: float, observables: dict | None = None,
                       sample_every: int = 1, renormalize: bool = False) -> EvolutionResult:
    """Integrate i d|psi>/dt = H(t)|psi> with RK4.

    ``h`` is a static matrix, a ``RotatingHamiltonian`` or a ``TimeDependent``.
    Observables are operators (real expectation value recorded) or callables
    of the state. The norm drift is reported in ``diagnostics``.
    """
    observables = observables or {}
    check_step(dt, max_frequency(h))
    n = _n_steps(dt, T)
    psi = np.array(psi0, dtype=complex)
    norm0 = np.linalg.norm(psi)
    static = not isinstance(h, (RotatingHamiltonian, TimeDependent))
    if static:
        step = rk4_step_matrix(-1j * qcore._as_operator(h), dt)
    else:
        def rhs(t, y):
            return -1j * (h(t) @ y)
    times, samples = [0.0], [_observe(observables, psi)]
    if static and not renormalize:
        # whole sampling intervals at once: the same RK4 map, raised to a power
        stride = np.linalg.matrix_power(step, sample_every)
        done = 0
        while done < n:
            k = min(sample_every, n - done)
            psi = (stride if k == sample_every else np.linalg.matrix_power(step, k)) @ psi
            done += k
            times.append(done * dt)
            samples.append(_observe(observables, psi))
        n = 0
    for k in range(n):
        psi = step @ psi if static else _rk4(rhs, psi, k * dt, dt)
        if renormalize:
            psi = psi / np.linalg.norm(psi) * norm0
        if (k + 1) % sample_every == 0 or k + 1 == n:
            times.append((k + 1) * dt)
            samples.append(_observe(observables, psi))
    drift = abs(np.linalg.norm(psi) - norm0)
    return EvolutionResult(np.array(times), _collect(samples, observables), psi,
                           diagnostics={"norm_drift": drift, "steps": _n_steps(dt, T)})


def propagator(h, dt: float, T: float) -> np.ndarray:
    """RK4 propagator U(T, 0) acting on the full space (matrix ODE)."""
    check_step(dt, max_frequency(h))
    n = _n_steps(dt, T)
    dim = len(h.static) if isinstance(h, RotatingHamiltonian) else len(h(0.0)) \
        if isinstance(h, TimeDependent) else len(h)
    u = np.eye(dim, dtype=complex)
    if not isinstance(h, (RotatingHamiltonian, TimeDependent)):
        return np.linalg.matrix_power(rk4_step_matrix(-1j * qcore._as_operator(h), dt), n)

    def rhs(t, y):
        return -1j * (h(t) @ y)
    for k in range(n):
        u = _rk4(rhs, u, k * dt, dt)
    return u


def floquet_propagator(h: RotatingHamiltonian, steps_per_period: int | None = None) -> tuple:
    """One-period RK4 propagator of a periodic Hamiltonian, and the period."""
    period = h.period
    if period is None:
        raise ValueError("Hamiltonian is not periodic")
    if steps_per_period is None:
        steps_per_period = math.ceil(period * STEPS_PER_PERIOD * h.max_frequency)
    dt = period / steps_per_period
    return propagator(h, dt, period), period


def evolve_periodic(h: RotatingHamiltonian, psi0, n_periods: int, observables=None,
                    sample_every: int = 1, steps_per_period: int | None = None
                    ) -> EvolutionResult:
    """Stroboscopic evolution: repeated application of the one-period propagator."""
    observables = observables or {}
    u, period = floquet_propagator(h, steps_per_period)
    psi = np.array(psi0, dtype=complex)
    times, samples = [0.0], [_observe(observables, psi)]
    stride = np.linalg.matrix_power(u, sample_every)
    done = 0
    while done < n_periods:
        k = min(sample_every, n_periods - done)
        psi = (stride if k == sample_every else np.linalg.matrix_power(u, k)) @ psi
        done += k
        times.append(done * period)
        samples.append(_observe(observables, psi))
    return EvolutionResult(np.array(times), _collect(samples, observables), psi,
                           diagnostics={"period": period, "floquet": u})


# --- Lindblad -----------------------------------------------------------------

@dataclass(frozen=True)
class LindbladChannel:
    jump: np.ndarray
    rate: float

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("rate must be >= 0")


def _channels(channels):
    return [c if isinstance(c, LindbladChannel) else LindbladChannel(*c) for c in channels]


def liouvillian(h, channels) -> np.ndarray:
    """Superoperator acting on row-major vec(rho)."""
    h = qcore._as_operator(h)
    n = len(h)
    eye = np.eye(n)
    lv = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for ch in _channels(channels):
        if ch.rate == 0:
            continue
        l = qcore._as_operator(ch.jump)
        ldl = qcore.dagger(l) @ l
        lv += ch.rate * (np.kron(l, l.conj()) - 0.5 * np.kron(ldl, eye) - 0.5 * np.kron(eye, ldl.T))
    return lv


def lindblad_rhs(h, channels):
    chans = [(qcore._as_operator(c.jump), c.rate) for c in _channels(channels) if c.rate]

    def rhs(t, rho):
        hh = h(t) if callable(h) else h
        out = -1j * (hh @ rho - rho @ hh)
        for l, g in chans:
            ld = qcore.dagger(l)
            ldl = ld @ l
            out += g * (l @ rho @ ld - 0.5 * (ldl @ rho + rho @ ldl))
        return out
    return rhs


def lindblad_frequency(h, channels) -> float:
    f = max_frequency(h)
    for ch in _channels(channels):
        f += ch.rate * np.linalg.norm(qcore._as_operator(ch.jump), 2) ** 2
    return f


def evolve_lindblad(h, channels, rho0, dt: float, T: float, observables: dict | None = None,
                    sample_every: int = 1) -> EvolutionResult:
    """RK4 on the master equation. Trace drift and minimum eigenvalue are
    tracked at every sample and reported in ``diagnostics``."""
    observables = observables or {}
    channels = _channels(channels)
    check_step(dt, lindblad_frequency(h, channels))
    n = _n_steps(dt, T)
    rho = np.array(rho0, dtype=complex)
    if rho.ndim == 1:
        rho = qcore.density_matrix(rho)
    dim = len(rho)
    static = not isinstance(h, (RotatingHamiltonian, TimeDependent))
    if static:
        step = rk4_step_matrix(liouvillian(h, channels), dt)
        vec = rho.reshape(-1)
    else:
        rhs = lindblad_rhs(h, channels)
    tr0 = np.trace(rho).real
    min_eig = float(np.linalg.eigvalsh(0.5 * (rho + qcore.dagger(rho)))[0])
    times, samples = [0.0], [_observe(observables, rho)]

    def record(t, r):
        nonlocal min_eig
        times.append(t)
        samples.append(_observe(observables, r))
        min_eig = min(min_eig, float(np.linalg.eigvalsh(0.5 * (r + qcore.dagger(r)))[0]))

    if static:
        stride = np.linalg.matrix_power(step, sample_every)
        done = 0
        while done < n:
            k = min(sample_every, n - done)
            vec = (stride if k == sample_every else np.linalg.matrix_power(step, k)) @ vec
            done += k
            record(done * dt, vec.reshape(dim, dim))
        rho = vec.reshape(dim, dim)
    else:
        for k in range(n):
            rho = _rk4(rhs, rho, k * dt, dt)
            if (k + 1) % sample_every == 0 or k + 1 == n:
                record((k + 1) * dt, rho)
    return EvolutionResult(np.array(times), _collect(samples, observables), rho,
                           diagnostics={"trace_drift": abs(np.trace(rho).real - tr0),
                                        "min_eigenvalue": min_eig, "steps": n})


# --- noise --------------------------------------------------------------------

@dataclass(frozen=True)
class NoiseModel:
    """Stationary Ornstein-Uhlenbeck process f(t) with std ``sigma`` (rad/s)."""
    sigma: float
    tau_c: float
    seed: int = 0
    kind: str = "ornstein_uhlenbeck"

    def __post_init__(self):
        if self.sigma < 0 or self.tau_c <= 0:
            raise ValueError("need sigma >= 0 and tau_c > 0")
        if self.kind != "ornstein_uhlenbeck":
            raise ValueError(f"unsupported noise kind {self.kind!r}")


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed % 2**64, index]))


class _OUStream:
    """Exact OU updates for a batch of trajectories, drawn in fixed chunks."""

    CHUNK = 2048

    def __init__(self, model: NoiseModel, h: float, n_traj: int, first_index: int = 0):
        self.decay = math.exp(-h / model.tau_c)
        self.kick = model.sigma * math.sqrt(-math.expm1(-2 * h / model.tau_c))
        self.rngs = [trajectory_rng(model.seed, first_index + k) for k in range(n_traj)]
        self.sigma = model.sigma
        start = np.array([g.standard_normal() for g in self.rngs])
        self.x = model.sigma * start
        self._buf = np.empty((n_traj, 0))
        self._pos = 0

    def advance(self) -> np.ndarray:
        if self._pos == self._buf.shape[1]:
            self._buf = np.stack([g.standard_normal(self.CHUNK) for g in self.rngs])
            self._pos = 0
        xi = self._buf[:, self._pos]
        self._pos += 1
        self.x = self.x * self.decay + self.kick * xi
        return self.x


def sample_noise_path(model: NoiseModel, dt: float, T: float, index: int = 0) -> np.ndarray:
    """OU path on the grid 0, dt, ..., T (stationary start)."""
    if dt >= model.tau_c / 10:
        raise StepSizeError(dt, model.tau_c / 10)
    n = _n_steps(dt, T)
    stream = _OUStream(model, dt, 1, index)
    out = np.empty(n + 1)
    out[0] = stream.x[0]
    for k in range(n):
        out[k + 1] = stream.advance()[0]
    return out


def sample_noise_paths(model: NoiseModel, dt: float, T: float, n_paths: int) -> np.ndarray:
    """Independent OU paths, shape (n_paths, n_steps + 1)."""
    if dt >= model.tau_c / 10:
        raise StepSizeError(dt, model.tau_c / 10)
    n = _n_steps(dt, T)
    stream = _OUStream(model, dt, n_paths)
    out = np.empty((n_paths, n + 1))
    out[:, 0] = stream.x
    for k in range(n):
        out[:, k + 1] = stream.advance()
    return out


def ou_phase_variance(sigma: float, tau_c: float, t):
    """Variance of int_0^t f(s) ds for a stationary OU process."""
    t = np.asarray(t, dtype=float)
    return 2 * sigma**2 * tau_c**2 * (t / tau_c - 1 + np.exp(-t / tau_c))


@dataclass
class EnsembleResult:
    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    seed_used: int
    n_traj: int

    def to_csv(self, path):
        rows = [[f"{t:.17g}", f"{m.real:.17g}", f"{m.imag:.17g}", f"{abs(m):.17g}", f"{s:.17g}"]
                for t, m, s in zip(self.times, self.mean, self.stderr)]
        _write_csv(path, ["time_s", "mean_re", "mean_im", "abs_mean", "stderr"], rows)


def monte_carlo_dephasing(h_static, noise_op, noise: NoiseModel, psi0,
                          observable: Callable[[np.ndarray], np.ndarray], n_traj: int,
                          dt: float, T: float, sample_every: int = 1) -> EnsembleResult:
    """Average of ``observable`` over trajectories of H = H_static + f(t) noise_op.

    ``noise_op`` must be diagonal. ``observable`` maps a batch of states with
    shape (n_traj, dim) to one complex number per trajectory. All trajectories
    are stepped together; the noise sees exact OU updates at half steps.
    """
    if n_traj < 2:
        raise ValueError("need at least two trajectories")
    h_static = qcore._as_operator(h_static)
    diag = np.real(np.diag(qcore._as_operator(noise_op)))
    if np.max(np.abs(qcore._as_operator(noise_op) - np.diag(diag))) > 0:
        raise ValueError("noise operator must be diagonal")
    freq = spectral_radius(h_static) + 4 * noise.sigma * float(np.max(np.abs(diag), initial=0))
    check_step(dt, freq)
    if dt / 2 >= noise.tau_c / 10:
        raise StepSizeError(dt, noise.tau_c / 5)
    n = _n_steps(dt, T)
    stream = _OUStream(noise, dt / 2, n_traj)
    psi = np.tile(np.asarray(psi0, dtype=complex), (n_traj, 1))
    ht = h_static.T

    def rhs(y, f):
        return -1j * (y @ ht + (f[:, None] * diag[None, :]) * y)

    f0 = stream.x.copy()
    times, means, errs = [0.0], [], []

    def record(y):
        vals = np.asarray(observable(y))
        means.append(vals.mean())
        errs.append(float(np.std(vals, ddof=1) / np.sqrt(n_traj)))

    record(psi)
    for k in range(n):
        fh = stream.advance().copy()
        f1 = stream.advance().copy()
        k1 = rhs(psi, f0)
        k2 = rhs(psi + dt / 2 * k1, fh)
        k3 = rhs(psi + dt / 2 * k2, fh)
        k4 = rhs(psi + dt * k3, f1)
        psi = psi + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        f0 = f1
        if (k + 1) % sample_every == 0 or k + 1 == n:
            times.append((k + 1) * dt)
            record(psi)
    return EnsembleResult(np.array(times), np.array(means), np.array(errs), noise.seed, n_traj)


# --- fitting --------------------------------------------------------------------

@dataclass(frozen=True)
class ExpFit:
    rate: float
    amplitude: float
    residual: float
    ok: bool


def fit_exponential(times, values, offset: bool = False) -> ExpFit:
    """Least-squares fit of A exp(-rate t) (+ c when ``offset``).

    A log-linear fit seeds a nonlinear refinement. ``residual`` is the RMS
    misfit relative to the data's RMS; ``ok`` is False when it exceeds 5%.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if len(t) < 10:
        raise ValueError("need at least 10 samples")
    pos = y > 0
    if pos.sum() >= 2:
        slope, icpt = np.polyfit(t[pos], np.log(y[pos]), 1)
        p0 = [math.exp(icpt), -slope]
    else:
        p0 = [float(y[0]) or 1.0, 1.0 / max(t[-1] - t[0], 1e-300)]

    def model(tt, a, r, c=0.0):
        return a * np.exp(-r * tt) + c

    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            if offset:
                popt, _ = curve_fit(model, t, y, p0=[*p0, 0.0], maxfev=20000)
            else:
                popt, _ = curve_fit(lambda tt, a, r: model(tt, a, r), t, y, p0=p0,
                                    maxfev=20000)
    except (RuntimeError, ValueError):
        popt = np.array(p0)
    fitted = model(t, *popt)
    scale = max(float(np.sqrt(np.mean(y**2))), 1e-300)
    resid = float(np.sqrt(np.mean((fitted - y) ** 2)) / scale)
    return ExpFit(float(popt[1]), float(popt[0]), resid, resid <= 0.05)


def decay_time(times, values) -> float:
    """Exponential decay time from the fitted rate; inf when nothing decays."""
    fit = fit_exponential(times, values)
    return math.inf if fit.rate <= 0 else 1.0 / fit.rate


def one_over_e_time(times, values) -> float:
    """First time ``values`` falls to values[0]/e, linearly interpolated."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float) / values[0]
    below = np.flatnonzero(y <= math.exp(-1))
    if below.size == 0:
        return math.inf
    k = below[0]
    y0, y1 = y[k - 1], y[k]
    return float(t[k - 1] + (math.exp(-1) - y0) * (t[k] - t[k - 1]) / (y1 - y0))


@dataclass(frozen=True)
class RamseyResult:
    contrast: np.ndarray
    phase: np.ndarray
    phase_slope: float
    phase_intercept: float


def ramsey(times, coherence) -> RamseyResult:
    """Contrast |c(t)| and unwrapped phase arg c(t) of a complex coherence,
    with a least-squares line through the phase."""
    t = np.asarray(times, dtype=float)
    c = np.asarray(coherence, dtype=complex)
    contrast = np.abs(c) / abs(c[0])
    phase = np.unwrap(np.angle(c))
    slope, icpt = np.polyfit(t, phase, 1)
    return RamseyResult(contrast, phase, float(slope), float(icpt))


def fit_rabi(times, population, guess: float | None = None) -> float:
    """Angular rate r of a population following A sin^2(r t)."""
    t = np.asarray(times, dtype=float)
    p = np.asarray(population, dtype=float)
    if guess is None:
        spec = np.abs(np.fft.rfft(p - p.mean()))
        freqs = np.fft.rfftfreq(len(p), t[1] - t[0]) * 2 * np.pi
        guess = freqs[1 + int(np.argmax(spec[1:]))] / 2
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        popt, _ = curve_fit(lambda tt, a, r: a * np.sin(r * tt) ** 2, t, p,
                            p0=[max(p.max(), 1e-12), guess], maxfev=20000)
    return abs(float(popt[1]))


def convergence_order(values: tuple[float, float, float]) -> float:
    """Observed order from results at dt, dt/2, dt/4."""
    a, b, c = values
    e1, e2 = abs(a - b), abs(b - c)
    if e2 == 0:
        return math.inf
    return math.log2(e1 / e2)


# --- optical pumping ------------------------------------------------------------

@dataclass(frozen=True)
class PumpSettings:
    """Rotating-frame pumping configuration for the Ca+ preset (scaled units).

    The dressing field keeps its usual form. Extra beams drive d2 -> p1,
    s1 -> p1 and s0 -> p1. Block two (d0, d2, p0) and each S level sit at
    their own two-photon detuning. Without these offsets, superpositions
    that are dark to every coupling would also be stationary, and they
    would trap population. S and d2 detunings inside the Autler-Townes gap
    of the dressed p1 line make the beams transparent, so the defaults put
    them near the dressed resonances. Units: Gamma_P = 1.
    """
    omega1: float = 0.5
    pump_d2: float = 1.0
    pump_s1: float = 1.0
    pump_s0: float = 1.5
    detuning_block2: float = 0.5
    detuning_s0: float = -1.0
    detuning_s1: float = 1.3

    def beams_off(self) -> "PumpSettings":
        return PumpSettings(self.omega1, 0.0, 0.0, 0.0, self.detuning_block2,
                            self.detuning_s0, self.detuning_s1)


def pumping_hamiltonian(scheme, settings: PumpSettings) -> np.ndarray:
    from darkqubit.drive import ca40_drive_hamiltonian

    h = ca40_drive_hamiltonian(scheme, settings.omega1)
    for lower, rabi in (("d2", settings.pump_d2), ("s1", settings.pump_s1),
                        ("s0", settings.pump_s0)):
        x = 0.5 * rabi * scheme.op("p1", lower)
        h = h + x + qcore.dagger(x)
    for label, e in (("d0", settings.detuning_block2), ("d2", settings.detuning_block2),
                     ("p0", settings.detuning_block2), ("s0", settings.detuning_s0),
                     ("s1", settings.detuning_s1)):
        i = scheme.index(label)
        h[i, i] += e
    return h


def optical_pumping(scheme, settings: PumpSettings, channels, rho0, T: float,
                    dt: float | None = None, sample_every: int = 100,
                    observables: dict | None = None) -> EvolutionResult:
    """Lindblad evolution under the pumping beams.

    The reported series always include ``pop_D1``, ``pop_D2`` and ``pop_P``.
    """
    from darkqubit.drive import reference_state

    h = pumping_hamiltonian(scheme, settings)
    d1 = qcore.projector(reference_state(scheme, "D1"))
    d2 = qcore.projector(reference_state(scheme, "D2"))
    pp = sum(qcore.projector(scheme.ket(x)) for x in ("p0", "p1"))
    obs = {"pop_D1": d1, "pop_D2": d2, "pop_P": pp}
    obs.update(observables or {})
    if dt is None:
        dt = suggest_dt(lindblad_frequency(h, channels), T)
    return evolve_lindblad(h, channels, rho0, dt, T, obs, sample_every)


# --- paired protection experiment ------------------------------------------------

def calibrated_sigma(t2_star: float, tau_c: float) -> float:
    """OU strength for which the bare (d1, d3) pair loses coherence to 1/e at ``t2_star``.

    The pair differs by 2 in J_z, so the coherence is exp(-2 Var phi) with
    phi the integrated noise.
    """
    if t2_star <= 0 or tau_c <= 0:
        raise ValueError("t2_star and tau_c must be positive")
    x = t2_star / tau_c
    return math.sqrt(0.5 / (2 * tau_c**2 * (x - 1 + math.exp(-x))))


@dataclass(frozen=True)
class ProtectionResult:
    bare: EnsembleResult
    protected: EnsembleResult
    bare_t2: float
    protected_rate: float
    dt: float

    @property
    def protected_time(self) -> float:
        return math.inf if self.protected_rate <= 0 else 1.0 / self.protected_rate

    @property
    def ratio(self) -> float:
        return self.protected_time / self.bare_t2


def noise_protection(omega1: float, noise: NoiseModel, n_traj: int, T: float,
                     dt: float | None = None, samples: int = 300) -> ProtectionResult:
    """Bare (d1 + d3) coherence vs the dark-qubit (D1 + D2) coherence.

    Both ensembles use the same noise model, seed, step and trajectory
    count, so trajectory k sees the same f(t) in both runs. The field couples
    through J_z on the D and P manifolds; the dark qubit is driven by the
    static dressing Hamiltonian at ``omega1``.
    """
    from darkqubit import drive, system

    scheme = system.build_ca40(0.0, 0.0)
    jz = system.jz_blocks(scheme, ("D3/2", "P1/2"))
    h = drive.ca40_drive_hamiltonian(scheme, omega1)
    diag = np.abs(np.diag(jz).real).max()
    if dt is None:
        dt = min(suggest_dt(spectral_radius(h) + 4 * noise.sigma * diag, T), noise.tau_c / 40)
    every = max(1, _n_steps(dt, T) // samples)
    i1, i3 = scheme.index("d1"), scheme.index("d3")
    bare0 = (scheme.ket("d1") + scheme.ket("d3")) / math.sqrt(2)
    bare = monte_carlo_dephasing(np.zeros_like(h), jz, noise, bare0,
                                 lambda y: 2 * np.conj(y[:, i1]) * y[:, i3], n_traj, dt, T, every)
    d1 = drive.reference_state(scheme, "D1")
    d2 = drive.reference_state(scheme, "D2")
    prot = monte_carlo_dephasing(h, jz, noise, (d1 + d2) / math.sqrt(2),
                                 lambda y: 2 * (y @ d1.conj()) * np.conj(y @ d2.conj()),
                                 n_traj, dt, T, every)
    t2 = one_over_e_time(bare.times, np.abs(bare.mean))
    fit = fit_exponential(prot.times, np.abs(prot.mean))
    return ProtectionResult(bare, prot, t2, max(fit.rate, 0.0), dt)
