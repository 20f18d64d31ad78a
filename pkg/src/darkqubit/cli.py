"""Batch runner: ``darkqubit --scenario NAME [--config PATH] [--set k=v ...] --out DIR``.

A run writes ``summary.txt`` (key=value), one CSV per time series and
``manifest.txt`` (resolved configuration, seed and library versions). Files
are written only after the whole scenario has finished, so a failed run
leaves no artifacts behind.

Exit codes: 0 success, 2 configuration error, 3 numerical-contract violation.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import math
import platform
import re
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np
import scipy

import darkqubit
from darkqubit import analysis, cavity, drive, dynamics, gates, qcore, system

SCENARIOS = ("darkstates", "spectrum", "t1", "t2", "noise", "pump", "gate", "cavity", "qnd",
             "budget")

UNITS = {
    "rad_s": 1.0,
    "hz": 2 * math.pi,
    "khz": 2 * math.pi * 1e3,
    "mhz": 2 * math.pi * 1e6,
    "ghz": 2 * math.pi * 1e9,
}


class ConfigError(ValueError):
    pass


@dataclass
class ScenarioConfig:
    scenario: str = "darkstates"
    kind: str = "y"                  # gate scenario: y, x or z
    # rates, rad/s unless a unit suffix is given
    omega1: float = 1.0
    omega: float = 1e9
    B: float = analysis.NominalParameters.B
    omega_g: float = 0.01
    omega_cont: float = 1.0
    delta: float = 100.0
    g: float = 1.0
    omega_c: float = 10.0
    kappa: float = 0.0
    gamma_p: float = 1.0
    gamma_d: float = 0.0
    sigma: float = 0.0
    tau_c: float = 1.0
    # dimensionless
    n_ions: int = 1
    n_photons: int = 3
    fluct: float = 0.01
    pol_error: float = 0.01
    delta_b_fraction: float = 1e-5
    eta: float = 1e-2
    t2_star: float = 1e-3
    phase: float = math.pi
    # numerics
    dt: float = 0.0                  # 0 selects the largest admissible step
    T: float = 0.0                   # 0 selects the scenario default
    n_traj: int = 1000
    seed: int = 0
    n_max: int = 4
    tol: float = 1e-10
    scale_factor: float = 1.0

    def validate(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        if self.scenario == "gate" and self.kind not in ("x", "y", "z"):
            raise ConfigError(f"gate kind must be x, y or z, not {self.kind!r}")
        for name in RATE_FIELDS + ("fluct", "pol_error", "delta_b_fraction", "eta", "t2_star",
                                   "dt", "T", "tol", "scale_factor"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.tau_c <= 0:
            raise ConfigError("tau_c must be > 0")
        if self.n_ions < 1 or self.n_max < 1 or self.n_traj < 2 or self.n_photons < 0:
            raise ConfigError("n_ions, n_max >= 1, n_traj >= 2 and n_photons >= 0 required")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.dt and self.T and abs(round(self.T / self.dt) * self.dt - self.T) > 1e-9 * self.T:
            raise ConfigError("T must be a whole number of steps dt")


RATE_FIELDS = ("omega1", "omega", "B", "omega_g", "omega_cont", "delta", "g", "omega_c", "kappa",
               "gamma_p", "gamma_d", "sigma")

# Scenario-specific defaults applied before the config file.
SCENARIO_DEFAULTS = {
    "t1": {"omega1": 1e5, "gamma_p": 2.3e7, "gamma_d": 1.0},
    "t2": {"omega1": 1e5, "gamma_p": 2.3e7, "gamma_d": 1.0},
    "budget": {"omega1": 1e5},
    "noise": {"omega1": 100.0, "T": 3.0, "sigma": dynamics.calibrated_sigma(1.0, 1.0)},
    "pump": {"omega1": 0.5, "T": 2000.0},
    "cavity": {"omega_c": 10.0, "delta": 1000.0, "n_max": 2},
    "qnd": {"omega1": 2.0, "delta": 100.0, "T": 100.0},
    "gate": {"omega1": 2.0},
}

_FIELD_TYPES = {f.name: f.type for f in fields(ScenarioConfig)}
_QUANTITY = re.compile(r"^\s*([-+0-9.eE]+)\s*([a-zA-Z_]*)\s*$")


def parse_value(name: str, text: str):
    if name not in _FIELD_TYPES:
        raise ConfigError(f"unknown key {name!r}")
    kind = _FIELD_TYPES[name]
    text = text.strip()
    if kind == "str":
        return text.lower()
    if kind == "int":
        try:
            return int(text)
        except ValueError:
            raise ConfigError(f"{name}: expected an integer, got {text!r}") from None
    m = _QUANTITY.match(text)
    if not m:
        raise ConfigError(f"{name}: cannot parse {text!r}")
    try:
        value = float(m.group(1))
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {text!r}") from None
    unit = m.group(2).lower()
    if unit:
        if name not in RATE_FIELDS:
            raise ConfigError(f"{name} takes no unit")
        if unit not in UNITS:
            raise ConfigError(f"{name}: unknown unit {unit!r}")
        value *= UNITS[unit]
    if not math.isfinite(value):
        raise ConfigError(f"{name} must be finite")
    return value


def load_config(path: str | None, overrides: list[str], scenario: str | None = None,
                seed: int | None = None) -> ScenarioConfig:
    values: dict[str, str] = {}
    if path:
        parser = configparser.ConfigParser()
        parser.optionxform = str
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        for section in parser.sections():
            for key, val in parser.items(section):
                values[key] = val
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, val = item.split("=", 1)
        values[key.strip().split(".")[-1]] = val
    if scenario is not None:
        values["scenario"] = scenario
    if seed is not None:
        values["seed"] = str(seed)

    name = values.get("scenario", ScenarioConfig.scenario).strip().lower()
    cfg = replace(ScenarioConfig(), scenario=name, **SCENARIO_DEFAULTS.get(name, {}))
    parsed = {k: parse_value(k, v) for k, v in values.items()}
    cfg = replace(cfg, **parsed)
    cfg.validate()
    return cfg


# --- output helpers ----------------------------------------------------------------

class Artifacts:
    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.summary: list[tuple[str, str]] = []
        self.files: dict[str, str] = {}

    def put(self, key: str, value):
        if isinstance(value, tuple):
            text = " ".join(f"{float(x):.17g}" for x in value)
            self.summary.append((key, text))
            return
        if isinstance(value, (bool, np.bool_)):
            text = str(bool(value)).lower()
        elif isinstance(value, (int, np.integer)):
            text = str(int(value))
        elif isinstance(value, (float, np.floating)):
            text = f"{float(value):.17g}"
        else:
            text = str(value)
        self.summary.append((key, text))

    def rate(self, key: str, value: float):
        """A rate in rad/s plus its Hz convenience value."""
        self.put(f"{key}_rad_s", value)
        self.put(f"{key}_hz", value / (2 * math.pi))

    def table(self, name: str, header: list[str], columns: list):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(header)
        cols = [np.asarray(c) for c in columns]
        for row in zip(*cols):
            w.writerow([f"{float(x):.17g}" for x in row])
        self.files[name] = buf.getvalue()

    def series(self, name: str, result):
        """Time series from an EvolutionResult or EnsembleResult."""
        buf = io.StringIO()
        result.to_csv(buf)
        self.files[name] = buf.getvalue()

    def write(self, out: Path):
        out.mkdir(parents=True, exist_ok=True)
        self.put("scale_factor", self.cfg.scale_factor)
        text = "".join(f"{k}={v}\n" for k, v in self.summary)
        files = dict(self.files)
        files["summary.txt"] = text
        files["manifest.txt"] = manifest(self.cfg, sorted(files))
        for name, body in files.items():
            (out / name).write_text(body, newline="")


def manifest(cfg: ScenarioConfig, files: list[str]) -> str:
    lines = ["[config]"]
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        lines.append(f"{f.name}={v:.17g}" if isinstance(v, float) else f"{f.name}={v}")
    lines += ["", "[run]", f"seed={cfg.seed}", f"files={','.join(files)}", "",
              "[versions]", f"darkqubit={darkqubit.__version__}", f"numpy={np.__version__}",
              f"scipy={scipy.__version__}", f"python={platform.python_version()}"]
    return "\n".join(lines) + "\n"


def _steps(cfg: ScenarioConfig, freq: float, T: float) -> float:
    if cfg.dt:
        dynamics.check_step(cfg.dt, freq)
        return cfg.dt
    return dynamics.suggest_dt(freq, T)


# --- scenarios -----------------------------------------------------------------------

def run_darkstates(cfg, art):
    scheme = system.build_ca40()
    sub = drive.ca40_protected(scheme, cfg.omega1)
    art.put("protected_dim", sub.dim)
    art.put("residual_hd", sub.residual_hd)
    art.put("residual_jz", sub.residual_jz)
    art.rate("gap", sub.gap)
    for vec in sub.dark_basis:
        name = "D1" if abs(vec[scheme.index("d1")]) > 0.1 else "D2"
        for label in scheme.labels:
            c = vec[scheme.index(label)]
            if abs(c) > cfg.tol:
                art.put(f"{name}_{label}", c.real if abs(c.imag) <= cfg.tol else c)


def run_spectrum(cfg, art):
    scheme = system.build_ca40()
    h = drive.ca40_drive_hamiltonian(scheme, cfg.omega1)
    ds = drive.dressed_structure(h, cfg.omega1, scheme)
    w = ds.eigenvalues
    art.table("spectrum.csv", ["eigenvalue_rad_s", "eigenvalue_hz"], [w, w / (2 * math.pi)])
    art.put("eigenvalues_rad_s", " ".join(f"{x:.17g}" for x in w))
    for name, vec in zip(("D1", "D2", "B1", "B2", "C1", "C2"),
                         (*ds.dark, *ds.bright_plus, *ds.bright_minus)):
        ref = drive.reference_state(scheme, name)
        art.put(f"{name}_error", float(np.linalg.norm(vec - ref)))


def _nominal(cfg) -> analysis.NominalParameters:
    return analysis.NominalParameters(omega1=cfg.omega1, omega_gap=cfg.omega, B=cfg.B,
                                      gamma_p=cfg.gamma_p, gamma_d=cfg.gamma_d, fluct=cfg.fluct,
                                      eta=cfg.eta, t2_star=cfg.t2_star)


def run_t1(cfg, art):
    p = _nominal(cfg)
    b = analysis.shift_budget(p.omega1, p.omega_gap, p.B, p.fluct)
    est = analysis.coherence_estimate(p)
    art.put("epsilon1", b.epsilon1)
    art.put("epsilon2", b.epsilon2)
    art.put("t1_s", est.t1)
    chk = analysis.admixture_decay_check()
    art.put("scaled_decay_rate_simulated", chk.simulated_rate)
    art.put("scaled_decay_rate_formula", chk.formula_rate)
    art.put("scaled_decay_relative_error", chk.relative_error)


def run_t2(cfg, art):
    p = _nominal(cfg)
    b = analysis.shift_budget(p.omega1, p.omega_gap, p.B, p.fluct)
    est = analysis.coherence_estimate(p)
    art.rate("shift1", b.delta_e1)
    art.rate("shift2", b.delta_e2)
    art.rate("fluct1", b.fluct_e1)
    art.rate("fluct2", b.fluct_e2)
    art.put("t2_bound_s", est.t2_bound)
    art.put("t2_relative_bound_s", est.t2_rel_bound)


def run_noise(cfg, art):
    model = dynamics.NoiseModel(cfg.sigma, cfg.tau_c, seed=cfg.seed)
    dt = cfg.dt or None
    res = dynamics.noise_protection(cfg.omega1, model, cfg.n_traj, cfg.T, dt)
    art.put("n_traj", cfg.n_traj)
    art.put("dt_s", res.dt)
    art.put("bare_t2_s", res.bare_t2)
    art.rate("protected_rate", res.protected_rate)
    art.put("protected_time_s", res.protected_time)
    art.put("protection_ratio", res.ratio)
    art.series("bare.csv", res.bare)
    art.series("protected.csv", res.protected)


def run_pump(cfg, art):
    scheme = system.build_ca40(cfg.gamma_p, cfg.gamma_d)
    ch = system.decay_channels(scheme)
    settings = replace(dynamics.PumpSettings(), omega1=cfg.omega1)
    for start in ("D2", "D1"):
        res = dynamics.optical_pumping(scheme, settings, ch, drive.reference_state(scheme, start),
                                       cfg.T, cfg.dt or None)
        art.put(f"from_{start}_final_pop_D1", res.observables["pop_D1"][-1])
        art.put(f"from_{start}_min_pop_D1", float(np.min(res.observables["pop_D1"])))
        art.series(f"pump_from_{start}.csv", res)


def run_gate(cfg, art):
    if cfg.kind == "y":
        rep = gates.sigma_y_gate(cfg.omega_g, cfg.omega1)
        art.rate("rate", rep.rate)
        art.rate("expected_rate", 1.5 * cfg.omega_g)
    elif cfg.kind == "x":
        rep = gates.raman_sigma_x(cfg.omega_cont, cfg.delta, omega1=cfg.omega1)
        art.rate("rate", rep.rate)
        art.rate("expected_rate", gates.raman_rate(cfg.omega_cont, cfg.delta))
    else:
        res = gates.berry_sigma_z(gates.rectangle_contour())
        art.put("berry_phase", res.phase)
        art.put("geometric_phase", res.geometric_phase)
        art.put("adiabaticity_error", res.adiabaticity_error)
        art.put("line_integral_phase", gates.berry_line_integral(gates.rectangle_contour()))
        return
    art.put("leakage", rep.leakage)
    art.put("fidelity", rep.fidelity)
    cols = [k for k in rep.series if k != "time_s"]
    art.table("gate.csv", ["time_s", *cols], [rep.series["time_s"], *(rep.series[k] for k in cols)])


def run_cavity(cfg, art):
    p = cavity.CouplingParams(g=cfg.g, omega_c_drive=cfg.omega_c, delta=cfg.delta,
                              kappa=cfg.kappa, gamma_p=cfg.gamma_p, n_ions=cfg.n_ions)
    fock = cavity.FockSpace(cfg.n_max)
    bs = cavity.effective_beamsplitter(p, fock)
    art.rate("bare_coupling", bs.bare_coefficient)
    art.rate("dark_coupling", bs.dark_coefficient)
    art.put("dark_to_bare", bs.dark_coefficient / bs.bare_coefficient)
    swap = cavity.collective_swap(p, fock) if p.n_ions > 1 else cavity.single_ion_swap(p, fock)
    art.rate("swap_rate", swap.rate)
    art.rate("swap_expected", swap.expected)
    art.table("swap.csv", ["time_s", "transferred"], [swap.times, swap.transferred])
    rep = cavity.collective_rate(p)
    art.rate("enhanced_rate", rep.enhanced_rate)
    art.rate("scattering_rate", rep.gamma)
    art.rate("kappa_scale", rep.kappa_scale)
    art.rate("kappa_limit", rep.kappa_limit)
    art.put("max_drive_ratio", rep.max_drive_ratio)
    art.put("strong_coupling", rep.strong_coupling)


def run_qnd(cfg, art):
    p = cavity.CouplingParams(g=cfg.g, omega_c_drive=0.0, delta=cfg.delta)
    rows = []
    for n in range(cfg.n_photons + 1):
        eff = cavity.qnd_ramsey(p, n, cfg.T, "effective")
        full = cavity.qnd_ramsey(p, n, cfg.T, "full", omega1=cfg.omega1)
        expected = cavity.qnd_phase_rate(p, n) * cfg.T
        rows.append((n, expected, eff, full))
        art.put(f"phase_n{n}_expected", expected)
        art.put(f"phase_n{n}_effective", eff)
        art.put(f"phase_n{n}_full", full)
    art.table("qnd.csv", ["n", "expected", "effective", "full"], list(zip(*rows)))
    art.put("time_for_phase_s", cavity.phase_time(p, max(1, cfg.n_photons), cfg.phase))


def run_budget(cfg, art):
    b = analysis.shift_budget(cfg.omega1, cfg.omega, cfg.B, cfg.fluct)
    art.rate("shift1", b.delta_e1)
    art.rate("shift2", b.delta_e2)
    pol = analysis.polarization_budget(cfg.pol_error, cfg.omega1, cfg.B, cfg.omega)
    for k, v in vars(pol).items():
        art.put(f"polarization_{k}", v)
    grad = analysis.bfield_gradient_budget(cfg.delta_b_fraction, cfg.B, cfg.omega1)
    for k, v in vars(grad).items():
        art.put(f"gradient_{k}", v)


RUNNERS = {name: globals()[f"run_{name}"] for name in SCENARIOS}

NUMERICAL_ERRORS = (dynamics.StepSizeError, drive.SpectrumError, qcore.NotHermitianError,
                    qcore.DimensionError, FloatingPointError, np.linalg.LinAlgError)


def run(config_path: str | None, overrides: list[str], out: str, scenario: str | None = None,
        seed: int | None = None) -> int:
    try:
        cfg = load_config(config_path, overrides, scenario, seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    art = Artifacts(cfg)
    art.put("scenario", cfg.scenario)
    try:
        with np.errstate(over="raise", invalid="raise"):
            RUNNERS[cfg.scenario](cfg, art)
    except NUMERICAL_ERRORS as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"invalid parameters: {exc}", file=sys.stderr)
        return 2
    art.write(Path(out))
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="darkqubit", description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="INI file with key = value entries")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override one entry (repeatable)")
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--scenario", choices=SCENARIOS)
    args = ap.parse_args(argv)
    return run(args.config, args.set, args.out, args.scenario, args.seed)


if __name__ == "__main__":
    sys.exit(main())
