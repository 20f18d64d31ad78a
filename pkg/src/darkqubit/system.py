"""Atomic level schemes, Zeeman structure and basis bookkeeping.

Labels follow the ``s{j+m}``/``p{j+m}``/``d{j+m}`` convention: ``d0`` is
D3/2 with m = -3/2 and ``d3`` is m = +3/2. The magnetic field ``B`` is given
directly as an angular frequency (the Zeeman shift of a level is g_J m B).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from sympy import Rational
from sympy.physics.wigner import clebsch_gordan

from darkqubit import qcore

TWO_PI = 2.0 * np.pi

# Total decay rate of Ca+ P1/2 (2pi x 23 MHz).
CA40_GAMMA_P = TWO_PI * 23e6
# D3/2 lifetime ~ 1 s.
CA40_GAMMA_D = 1.0
# P1/2 -> S1/2 : P1/2 -> D3/2 branching.
CA40_BRANCHING_SD = 14.4

# (j, L, S) for the terms used here
TERMS = {
    "S1/2": (Fraction(1, 2), 0, Fraction(1, 2)),
    "P1/2": (Fraction(1, 2), 1, Fraction(1, 2)),
    "P3/2": (Fraction(3, 2), 1, Fraction(1, 2)),
    "D3/2": (Fraction(3, 2), 2, Fraction(1, 2)),
    "D5/2": (Fraction(5, 2), 2, Fraction(1, 2)),
}


def lande_g(j, l, s) -> float:
    """g_J = 3/2 + (S(S+1) - L(L+1)) / (2 J(J+1)), taking g_s = 2."""
    j, l, s = Fraction(j), Fraction(l), Fraction(s)
    return float(Fraction(3, 2) + (s * (s + 1) - l * (l + 1)) / (2 * j * (j + 1)))


class UnknownLevelError(KeyError):
    pass


@dataclass(frozen=True)
class Level:
    label: str
    term: str
    m: float
    lande_g: float
    linewidth: float = 0.0
    j: float | None = None

    def __post_init__(self):
        j = self.j if self.j is not None else float(TERMS[self.term][0])
        object.__setattr__(self, "j", j)
        if abs(self.m) > j + 1e-12:
            raise ValueError(f"|m| = {abs(self.m)} exceeds j = {j} for {self.label}")
        if self.linewidth < 0:
            raise ValueError("linewidth must be >= 0")


@dataclass(frozen=True)
class LevelScheme:
    levels: tuple[Level, ...]
    # overall S:D branching of P1/2 decay, used by ``decay_channels``
    branching_sd: float = CA40_BRANCHING_SD
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        labels = [lv.label for lv in self.levels]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate level labels in {labels}")
        object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(labels)})

    @property
    def dim(self) -> int:
        return len(self.levels)

    @property
    def labels(self) -> list[str]:
        return [lv.label for lv in self.levels]

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise UnknownLevelError(f"unknown level label {label!r}") from None

    def ket(self, label: str) -> np.ndarray:
        return qcore.basis_vector(self.dim, self.index(label))

    def level(self, label: str) -> Level:
        return self.levels[self.index(label)]

    def indices(self, term: str) -> list[int]:
        return [i for i, lv in enumerate(self.levels) if lv.term == term]

    def op(self, upper: str, lower: str) -> np.ndarray:
        """|upper><lower|"""
        out = np.zeros((self.dim, self.dim), dtype=complex)
        out[self.index(upper), self.index(lower)] = 1.0
        return out

    def state(self, coeffs: dict[str, complex]) -> np.ndarray:
        psi = np.zeros(self.dim, dtype=complex)
        for label, c in coeffs.items():
            psi[self.index(label)] += c
        return psi


def _term_levels(prefix: str, term: str, linewidth: float) -> list[Level]:
    j, l, s = TERMS[term]
    g = lande_g(j, l, s)
    ms = qcore.magnetic_numbers(j)
    return [Level(f"{prefix}{k}", term, float(m), g, linewidth) for k, m in enumerate(ms)]


def build_ca40(gamma_p: float = CA40_GAMMA_P, gamma_d: float = CA40_GAMMA_D,
               branching_sd: float = CA40_BRANCHING_SD) -> LevelScheme:
    """Eight-level 40Ca+ scheme ordered s0, s1, p0, p1, d0, d1, d2, d3."""
    if gamma_p < 0 or gamma_d < 0:
        raise ValueError("decay rates must be >= 0")
    levels = (_term_levels("s", "S1/2", 0.0) + _term_levels("p", "P1/2", gamma_p)
              + _term_levels("d", "D3/2", gamma_d))
    return LevelScheme(tuple(levels), branching_sd=branching_sd)


def build_term(prefix: str, term: str, linewidth: float = 0.0) -> LevelScheme:
    return LevelScheme(tuple(_term_levels(prefix, term, linewidth)))


def zeeman_hamiltonian(scheme: LevelScheme, B: float) -> np.ndarray:
    """Diagonal g_J m B on every level."""
    return np.diag([lv.lande_g * lv.m * B for lv in scheme.levels]).astype(complex)


def jz_blocks(scheme: LevelScheme, terms: tuple[str, ...] | None = None) -> np.ndarray:
    """Block-diagonal J_z (unweighted by g_J), optionally restricted to ``terms``."""
    return np.diag([lv.m if terms is None or lv.term in terms else 0.0
                    for lv in scheme.levels]).astype(complex)


def j_operator(scheme: LevelScheme, term: str, axis: str) -> np.ndarray:
    """Angular momentum of one term embedded in the full scheme."""
    idx = scheme.indices(term)
    j = scheme.levels[idx[0]].j
    return qcore.embed(qcore.angular_momentum(j, axis), idx, scheme.dim)


def _cg_strength(j_up, m_up, j_low, m_low) -> float:
    """|<j_low m_low; 1 q | j_up m_up>|^2 for the dipole step m_up -> m_low."""
    q = m_up - m_low
    if abs(q) > 1:
        return 0.0
    val = clebsch_gordan(Rational(j_low), Rational(1), Rational(j_up),
                         Rational(m_low), Rational(q), Rational(m_up))
    return float(val) ** 2


def _quadrupole_strength(j_up, m_up, j_low, m_low) -> float:
    q = m_up - m_low
    if abs(q) > 2:
        return 0.0
    val = clebsch_gordan(Rational(j_low), Rational(2), Rational(j_up),
                         Rational(m_low), Rational(q), Rational(m_up))
    return float(val) ** 2


def _rat(x: float):
    return Rational(Fraction(x).limit_denominator(4))


def decay_channels(scheme: LevelScheme) -> list[tuple[np.ndarray, float]]:
    """Lindblad jump operators ``(|low><up|, rate)`` for spontaneous decay.

    P1/2 decays to S1/2 and D3/2 with overall ratio ``branching_sd``; D3/2
    decays to S1/2 (electric quadrupole). Within each final term the Zeeman
    branching is set by squared Clebsch-Gordan coefficients normalized so each
    upper sublevel's branches sum to one.
    """
    channels = []
    s_idx = scheme.indices("S1/2")
    p_idx = scheme.indices("P1/2")
    d_idx = scheme.indices("D3/2")
    frac_s = scheme.branching_sd / (1.0 + scheme.branching_sd)
    routes = [(p_idx, s_idx, frac_s, _cg_strength),
              (p_idx, d_idx, 1.0 - frac_s, _cg_strength),
              (d_idx, s_idx, 1.0, _quadrupole_strength)]
    for ups, lows, frac, strength in routes:
        for u in ups:
            up = scheme.levels[u]
            if up.linewidth * frac == 0 or not lows:
                continue
            w = np.array([strength(_rat(up.j), _rat(up.m), _rat(scheme.levels[lo].j),
                                   _rat(scheme.levels[lo].m)) for lo in lows])
            if w.sum() == 0:
                continue
            w = w / w.sum()
            for lo, wk in zip(lows, w):
                if wk > 0:
                    jump = np.zeros((scheme.dim, scheme.dim), dtype=complex)
                    jump[lo, u] = 1.0
                    channels.append((jump, up.linewidth * frac * wk))
    return channels
