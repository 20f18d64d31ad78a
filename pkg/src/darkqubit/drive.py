"""Drive fields, rotating frames and the dressed structure of the Ca+ scheme.

A drive with Rabi rate ``rabi``, frequency ``w`` and phase ``phi`` contributes

    rabi * cos(w t) * (exp(i phi) |upper><lower| + h.c.)

to the lab-frame Hamiltonian. In the interaction picture of a diagonal frame
``F`` this splits into a co-rotating part ``rabi/2 exp(i phi)`` at residual
frequency ``F_u - F_l - w`` and a counter-rotating part at ``F_u - F_l + w``.
The rotating-wave approximation keeps a part iff its residual frequency is
below the cutoff.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from darkqubit import qcore
from darkqubit.system import LevelScheme, zeeman_hamiltonian

SQ3 = np.sqrt(3.0)
SQ2 = np.sqrt(2.0)


class AmbiguousFrameError(ValueError):
    """Kept RWA terms are not static in the chosen frame."""


class SpectrumError(RuntimeError):
    pass


@dataclass(frozen=True)
class DriveField:
    lower: str
    upper: str
    rabi: float
    frequency: float
    phase: float = 0.0
    polarization: str = "pi"

    def __post_init__(self):
        if self.rabi < 0:
            raise ValueError("rabi must be >= 0")
        if self.lower == self.upper:
            raise ValueError("a drive needs two distinct levels")


@dataclass(frozen=True)
class FrameSpec:
    """Diagonal reference Hamiltonian of a rotating frame, by level label."""
    energies: dict

    def diag(self, scheme: LevelScheme) -> np.ndarray:
        return np.array([self.energies.get(lab, 0.0) for lab in scheme.labels], dtype=float)

    @property
    def h0(self):
        return self.energies


@dataclass(frozen=True)
class RWATerm:
    row: int
    col: int
    amplitude: complex
    detuning: float


def bare_energies(scheme: LevelScheme, B: float, offsets: dict | None = None) -> np.ndarray:
    e = np.real(np.diag(zeeman_hamiltonian(scheme, B))).copy()
    for label, off in (offsets or {}).items():
        e[scheme.index(label)] += off
    return e


def lab_hamiltonian(scheme: LevelScheme, drives, B: float, t: float,
                    offsets: dict | None = None) -> np.ndarray:
    """Lab-frame Hamiltonian at time ``t``: bare diagonal plus every drive."""
    h = np.diag(bare_energies(scheme, B, offsets)).astype(complex)
    for d in drives:
        u, l = scheme.index(d.upper), scheme.index(d.lower)
        c = d.rabi * np.cos(d.frequency * t) * np.exp(1j * d.phase)
        h[u, l] += c
        h[l, u] += np.conj(c)
    return h


def rwa_terms(scheme: LevelScheme, drives, frame: FrameSpec, cutoff: float) -> list[RWATerm]:
    """Rotating components that survive the RWA, as upper-triangle-agnostic
    ``(row=upper, col=lower)`` entries; the Hermitian conjugate is implied."""
    if cutoff <= 0:
        raise ValueError("cutoff must be positive")
    f = frame.diag(scheme)
    kept = []
    for d in drives:
        u, l = scheme.index(d.upper), scheme.index(d.lower)
        gap = f[u] - f[l]
        for nu, amp in ((gap - d.frequency, 0.5 * d.rabi * np.exp(1j * d.phase)),
                        (gap + d.frequency, 0.5 * d.rabi * np.exp(-1j * d.phase))):
            if abs(nu) < cutoff and amp != 0:
                kept.append(RWATerm(u, l, complex(amp), float(nu)))
    return kept


def _static(nu: float, scale: float) -> bool:
    return abs(nu) <= 1e-9 * max(1.0, scale)


def rwa_hamiltonian(scheme: LevelScheme, drives, frame: FrameSpec, cutoff: float,
                    B: float = 0.0, offsets: dict | None = None,
                    t: float | None = None) -> np.ndarray:
    """Interaction-picture Hamiltonian after the rotating-wave approximation.

    Residual diagonal energies (bare minus frame) are included. Kept terms with
    nonzero residual frequency need an explicit time ``t``; without it an
    ``AmbiguousFrameError`` asks for a frame in which they are static.
    """
    diag = bare_energies(scheme, B, offsets) - frame.diag(scheme)
    h = np.diag(diag).astype(complex)
    terms = rwa_terms(scheme, drives, frame, cutoff)
    scale = max([abs(d.frequency) for d in drives] + [1.0])
    if t is None:
        seen = {}
        for term in terms:
            key = (min(term.row, term.col), max(term.row, term.col))
            nu = term.detuning if term.row >= term.col else -term.detuning
            if key in seen and not _static(seen[key] - nu, scale):
                raise AmbiguousFrameError(
                    f"element {key} carries residual frequencies {seen[key]:.6g} and {nu:.6g}; "
                    "use a finer frame or pass t")
            seen.setdefault(key, nu)
            if not _static(term.detuning, scale):
                raise AmbiguousFrameError(
                    f"kept term on {key} rotates at {term.detuning:.6g} rad/s; "
                    "choose a frame that makes it static or pass t")
    for term in terms:
        c = term.amplitude
        if t is not None and not _static(term.detuning, scale):
            c = c * np.exp(1j * term.detuning * t)
        h[term.row, term.col] += c
        h[term.col, term.row] += np.conj(c)
    return h


# --- 40Ca+ preset -----------------------------------------------------------

def ca40_energies(B: float, delta: float, omega_gap: float) -> dict:
    """Bare energies in the reference used for the drive derivation.

    d3 sits at zero, D sublevels are (4/5)(m - 3/2) B below it, p1 is at
    ``delta`` and p0 a further ``omega_gap`` above (the gap opened by the
    S-P dressing field). S levels carry only their Zeeman shift.
    """
    e = {f"d{k}": 0.8 * (m - 1.5) * B for k, m in enumerate((-1.5, -0.5, 0.5, 1.5))}
    e.update({"p1": delta, "p0": delta + omega_gap, "s0": -B, "s1": B})
    return e


def ca40_offsets(scheme: LevelScheme, B: float, delta: float, omega_gap: float) -> dict:
    """Offsets on top of the Zeeman diagonal that reproduce ``ca40_energies``."""
    target = ca40_energies(B, delta, omega_gap)
    zee = np.real(np.diag(zeeman_hamiltonian(scheme, B)))
    return {lab: target[lab] - zee[scheme.index(lab)] for lab in scheme.labels}


def ca40_frame(B: float, delta: float, omega_gap: float) -> FrameSpec:
    return FrameSpec(ca40_energies(B, delta, omega_gap))


def ca40_drives(omega1: float, B: float, delta: float, omega_gap: float,
                pol_error: float = 0.0, crosstalk: bool = False,
                fluct: tuple[float, float] = (0.0, 0.0)) -> list[DriveField]:
    """The four dark-state drives, optionally with polarization admixture.

    ``pol_error`` moves that fraction of each beam's amplitude onto the other
    leg of the same Lambda system (sigma+ <-> sigma-). ``crosstalk`` adds each
    beam acting on the other Lambda system's sublevels, with ``fluct`` the
    fractional amplitude offsets of the block-1 and block-2 beams.
    """
    w11 = delta + 1.6 * B           # d1 -> p1, sigma+
    w13 = delta                     # d3 -> p1, sigma-
    w22 = delta + omega_gap + 0.8 * B   # d2 -> p0, sigma-
    w20 = delta + omega_gap + 2.4 * B   # d0 -> p0, sigma+
    a = 1.0 - pol_error
    drives = [
        DriveField("d1", "p1", a * omega1, w11, polarization="sigma+"),
        DriveField("d3", "p1", a * SQ3 * omega1, w13, polarization="sigma-"),
        DriveField("d2", "p0", a * omega1, w22, polarization="sigma-"),
        DriveField("d0", "p0", a * SQ3 * omega1, w20, polarization="sigma+"),
    ]
    if pol_error:
        e = pol_error
        drives += [
            DriveField("d1", "p1", e * SQ3 * omega1, w13, polarization="sigma-"),
            DriveField("d3", "p1", e * omega1, w11, polarization="sigma+"),
            DriveField("d2", "p0", e * SQ3 * omega1, w20, polarization="sigma+"),
            DriveField("d0", "p0", e * omega1, w22, polarization="sigma-"),
        ]
    if crosstalk:
        f1, f2 = fluct
        drives += [
            # block-2 beams on block-1 sublevels
            DriveField("d1", "p1", (1 + f2) * SQ3 * omega1, w20, polarization="sigma+"),
            DriveField("d3", "p1", (1 + f2) * omega1, w22, polarization="sigma-"),
            # block-1 beams on block-2 sublevels
            DriveField("d0", "p0", (1 + f1) * omega1, w11, polarization="sigma+"),
            DriveField("d2", "p0", (1 + f1) * SQ3 * omega1, w13, polarization="sigma-"),
        ]
    return drives


def ca40_dressing_drive(omega: float, delta_sp: float) -> DriveField:
    """Explicit s0 <-> p1 dressing field (Rabi ``omega``, resonant)."""
    return DriveField("s0", "p1", omega, delta_sp, polarization="sigma+")


def ca40_drive_hamiltonian(scheme: LevelScheme, omega1: float) -> np.ndarray:
    """The static drive Hamiltonian with the dark-state amplitude ratios."""
    h = np.zeros((scheme.dim, scheme.dim), dtype=complex)
    for up, low, amp in (("p1", "d1", 0.5), ("p1", "d3", SQ3 / 2),
                         ("p0", "d2", 0.5), ("p0", "d0", SQ3 / 2)):
        h += amp * omega1 * (scheme.op(up, low) + scheme.op(low, up))
    return h


DARK_COEFFS = {
    "D1": {"d1": SQ3 / 2, "d3": -0.5},
    "D2": {"d0": 0.5, "d2": -SQ3 / 2},
}
BRIGHT_COEFFS = {
    "B1": {"d1": 1 / (2 * SQ2), "d3": SQ3 / (2 * SQ2), "p1": 1 / SQ2},
    "C1": {"d1": -1 / (2 * SQ2), "d3": -SQ3 / (2 * SQ2), "p1": 1 / SQ2},
    "B2": {"d0": SQ3 / (2 * SQ2), "d2": 1 / (2 * SQ2), "p0": 1 / SQ2},
    "C2": {"d0": -SQ3 / (2 * SQ2), "d2": -1 / (2 * SQ2), "p0": 1 / SQ2},
}


def reference_state(scheme: LevelScheme, name: str) -> np.ndarray:
    """Closed-form dressed state ``D1``, ``D2``, ``B1``, ``C1``, ``B2`` or ``C2``."""
    coeffs = DARK_COEFFS.get(name) or BRIGHT_COEFFS.get(name)
    if coeffs is None:
        raise KeyError(name)
    return scheme.state(coeffs)


@dataclass(frozen=True)
class DressedStructure:
    dark: tuple[np.ndarray, np.ndarray]
    bright_plus: tuple[np.ndarray, np.ndarray]
    bright_minus: tuple[np.ndarray, np.ndarray]
    eigenvalues: np.ndarray  # driven-block spectrum, ascending

    def vectors(self) -> list[np.ndarray]:
        return [*self.dark, *self.bright_plus, *self.bright_minus]


def _split_blocks(vecs: np.ndarray, block1: list[int]) -> list[np.ndarray]:
    """Resolve a degenerate eigenspace into vectors living on block 1 / block 2."""
    p1 = np.zeros(vecs.shape[0])
    p1[block1] = 1.0
    m = qcore.dagger(vecs) @ (p1[:, None] * vecs)
    _, u = qcore.eigh(m)
    # descending block-1 weight: block-1 vector first
    return [vecs @ u[:, k] for k in range(u.shape[1] - 1, -1, -1)]


def _phase_on(vec: np.ndarray, idx: int) -> np.ndarray:
    c = vec[idx]
    return vec * np.conj(c) / abs(c)


def dressed_structure(h_rwa, omega1: float, scheme: LevelScheme,
                      tol: float = 1e-9) -> DressedStructure:
    """Dark and bright eigenvectors of the static drive Hamiltonian.

    Eigenvectors of eigenvalue 0 (restricted to the driven D/P levels),
    +omega1 and -omega1 are sorted into the D1/B1/C1 and D2/B2/C2 blocks.
    Dark states take their first nonzero component real positive, bright
    states their P component.
    """
    h = qcore._as_operator(h_rwa)
    driven = [scheme.index(x) for x in ("d0", "d1", "d2", "d3", "p0", "p1")]
    block1 = [scheme.index(x) for x in ("d1", "d3", "p1")]
    sub = h[np.ix_(driven, driven)]
    w, v = qcore.eigh(sub)
    groups = {}
    for target, name in ((0.0, "dark"), (omega1, "plus"), (-omega1, "minus")):
        sel = np.abs(w - target) <= tol * max(1.0, abs(omega1))
        if sel.sum() != 2:
            raise SpectrumError(
                f"expected two eigenvalues at {target:.6g}, found {int(sel.sum())}: {w}")
        full = np.zeros((scheme.dim, 2), dtype=complex)
        full[driven] = v[:, sel]
        groups[name] = _split_blocks(full, block1)
    dark = []
    for vec in groups["dark"]:
        lead = int(np.flatnonzero(np.abs(vec) > 1e-12)[0])
        dark.append(_phase_on(vec, lead))
    p1, p0 = scheme.index("p1"), scheme.index("p0")
    plus = [_phase_on(groups["plus"][0], p1), _phase_on(groups["plus"][1], p0)]
    minus = [_phase_on(groups["minus"][0], p1), _phase_on(groups["minus"][1], p0)]
    return DressedStructure(tuple(dark), tuple(plus), tuple(minus), w)


def basis_change_matrices(ds: DressedStructure, scheme: LevelScheme):
    """Rows (D, B, C) in the bases (d1, d3, p1) and (d0, d2, p0)."""
    i1 = [scheme.index(x) for x in ("d1", "d3", "p1")]
    i2 = [scheme.index(x) for x in ("d0", "d2", "p0")]
    u1 = np.array([ds.dark[0][i1], ds.bright_plus[0][i1], ds.bright_minus[0][i1]])
    u2 = np.array([ds.dark[1][i2], ds.bright_plus[1][i2], ds.bright_minus[1][i2]])
    return u1, u2


def detuned_frame_hamiltonian(omega1: float, delta: float, block: int = 1,
                              fluct: float = 0.0, omega_gap: float = 0.0,
                              dressing_fluct: float = 0.0,
                              t: float | None = None) -> np.ndarray:
    """Cross-talk Hamiltonian of one dark state in the basis (D, B, C).

    ``delta`` is that dark state's cross-drive detuning (Delta1 for block 1,
    Delta2 for block 2). ``fluct`` is the signed fractional amplitude offset of
    the foreign beams; ``dressing_fluct`` the signed fractional offset of the
    dressing gap ``omega_gap`` (block 1 only).

    With ``t`` given the first-frame form with exp(-i delta t) couplings is
    returned; otherwise the static form after moving to the frame rotating at
    ``delta`` on D, which puts ``-delta`` on the D diagonal.
    """
    c = omega1 * (1.0 + fluct) / (2.0 * SQ2)
    if block == 2:
        c = -c
        g = 0.0
    elif block == 1:
        g = 0.5 * omega_gap * dressing_fluct
    else:
        raise ValueError("block must be 1 or 2")
    h = np.zeros((3, 3), dtype=complex)
    h[1, 1] = omega1 + g
    h[2, 2] = -(omega1 - g)
    h[1, 2] = h[2, 1] = g
    if t is None:
        h[0, 0] = -delta
        cc = c
    else:
        cc = c * np.exp(-1j * delta * t)
    h[1, 0] = h[2, 0] = cc
    h[0, 1] = h[0, 2] = np.conj(cc)
    return h


def with_phase(drive: DriveField, dphi: float) -> DriveField:
    return replace(drive, phase=drive.phase + dphi)


DRIVEN_LEVELS = ("d0", "d1", "d2", "d3", "p0", "p1")


def ca40_protected(scheme: LevelScheme, omega1: float, tol: float = 1e-9):
    """Protected subspace of the drive on the D3/2 and P1/2 levels, embedded back
    into the full scheme. The S levels are left out: they are untouched by the
    drive and would otherwise count as trivially dark."""
    from darkqubit import subspace, system

    idx = [scheme.index(x) for x in DRIVEN_LEVELS]
    h = ca40_drive_hamiltonian(scheme, omega1)[np.ix_(idx, idx)]
    jz = system.jz_blocks(scheme, ("D3/2", "P1/2"))[np.ix_(idx, idx)]
    sub = subspace.find_protected(h, jz, tol)
    full = np.zeros((scheme.dim, sub.dim), dtype=complex)
    full[idx] = sub.basis
    return subspace.ProtectedSubspace(full, sub.residual_hd, sub.residual_jz, sub.gap)
