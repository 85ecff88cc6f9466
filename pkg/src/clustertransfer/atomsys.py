"""Level schemes, the single-site Hilbert space and its Hamiltonians.

A site is one atom in a two-mode cavity, laid out as atom (x) left mode (x)
right mode. Units: hbar = 1, rates in units of the right-mode coupling h,
times in units of 1/h.

Conventions fixed here and used throughout:

* a laser pulse on ``lower <-> upper`` with Rabi frequency ``rabi`` and phase
  ``phase`` generates ``(rabi/2) (e^{-i phase}|upper><lower| + h.c.)``, so a
  pulse of area ``rabi*duration/2 = theta`` sends
  ``|lower> -> cos(theta)|lower> - i e^{-i phase} sin(theta)|upper>`` and
  ``|upper> -> cos(theta)|upper> - i e^{+i phase} sin(theta)|lower>``;
* a cavity coupling on ``lower <-> upper`` reads
  ``strength (a |upper><lower| + a^dagger |lower><upper|)``, so decaying
  from ``upper`` to ``lower`` emits a photon into the mode.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import hilbert


@dataclass(frozen=True)
class LevelScheme:
    """Atomic levels with their laser-driven and cavity-coupled transitions.

    ``cavity`` maps each mode (``'L'``, ``'R'``) to the level pair it couples.
    """

    name: str
    levels: tuple[str, ...]
    laser: frozenset[frozenset[str]]
    cavity: tuple[tuple[str, frozenset[str]], ...]

    def __post_init__(self):
        if len(set(self.levels)) != len(self.levels):
            raise ValueError(f"duplicate level labels in {self.levels}")
        for t in list(self.laser) + [t for _, t in self.cavity]:
            if len(t) != 2 or not t <= set(self.levels):
                raise ValueError(f"transition {sorted(t)} not between two levels of {self.name}")

    @property
    def dim(self) -> int:
        return len(self.levels)

    def level_index(self, label: str) -> int:
        try:
            return self.levels.index(label)
        except ValueError:
            raise KeyError(f"level {label!r} not in scheme {self.name}") from None

    def check_transition(self, lower: str, upper: str, mode: str | None = None) -> None:
        """Raise unless ``lower <-> upper`` is laser driven (``mode=None``) or coupled to ``mode``."""
        if lower == upper:
            raise ValueError(f"transition needs two distinct levels, got {lower!r} twice")
        self.level_index(lower)
        self.level_index(upper)
        pair = frozenset((lower, upper))
        allowed = self.laser if mode is None else {t for m, t in self.cavity if m == mode}
        if pair not in allowed:
            kind = "laser" if mode is None else f"cavity mode {mode}"
            raise KeyError(f"{lower}<->{upper} is not a {kind} transition of {self.name}")


def _pairs(*pairs):
    return frozenset(frozenset(p) for p in pairs)


FIVE_LEVEL = LevelScheme(
    "FiveLevel",
    ("g", "g'", "r", "e", "f"),
    laser=_pairs(("g'", "f"), ("g", "e"), ("g'", "r"), ("g", "g'")),
    cavity=(("L", frozenset(("r", "f"))), ("R", frozenset(("g'", "e")))),
)

FOUR_LEVEL = LevelScheme(
    "FourLevel",
    ("g", "g'", "r", "f"),
    laser=_pairs(("r", "f")),
    cavity=(("L", frozenset(("g", "r"))), ("R", frozenset(("g'", "f")))),
)


@dataclass(frozen=True)
class SiteSpace:
    scheme: LevelScheme
    fock_cutoff: int = 1

    def __post_init__(self):
        if int(self.fock_cutoff) != self.fock_cutoff or self.fock_cutoff < 1:
            raise ValueError(f"fock_cutoff must be an integer >= 1, got {self.fock_cutoff}")

    @property
    def modes(self) -> int:
        return self.fock_cutoff + 1

    @property
    def dim(self) -> int:
        return self.scheme.dim * self.modes**2

    @property
    def dims(self) -> tuple[int, int, int]:
        """Subsystem dims (atom, left mode, right mode)."""
        return (self.scheme.dim, self.modes, self.modes)

    def index(self, level: str, n_left: int, n_right: int) -> int:
        m = self.modes
        for n in (n_left, n_right):
            if not 0 <= n < m:
                raise ValueError(f"photon number {n} outside [0, {self.fock_cutoff}]")
        return (self.scheme.level_index(level) * m + n_left) * m + n_right

    def label(self, index: int) -> tuple[str, int, int]:
        if not 0 <= index < self.dim:
            raise ValueError(f"basis index {index} outside [0, {self.dim})")
        m = self.modes
        a, rest = divmod(index, m * m)
        n_left, n_right = divmod(rest, m)
        return self.scheme.levels[a], n_left, n_right

    def ket(self, level: str, n_left: int = 0, n_right: int = 0) -> np.ndarray:
        return hilbert.basis(self.dim, self.index(level, n_left, n_right))

    def state(self, amplitudes: dict) -> np.ndarray:
        """Superposition from ``{(level, n_left, n_right): amplitude}``."""
        psi = np.zeros(self.dim, dtype=complex)
        for key, amp in amplitudes.items():
            psi[self.index(*key)] += amp
        return psi

    def format_label(self, index: int) -> str:
        level, nl, nr = self.label(index)
        return f"|{level},{nl}L,{nr}R>"

    @cached_property
    def annihilation(self) -> np.ndarray:
        return np.diag(np.sqrt(np.arange(1, self.modes)), k=1).astype(complex)

    def mode_operator(self, mode: str) -> np.ndarray:
        """Annihilation operator of mode ``'L'`` or ``'R'`` on the full site."""
        a = self.annihilation
        eye_a, eye_m = np.eye(self.scheme.dim), np.eye(self.modes)
        if mode == "L":
            return hilbert.tensor(eye_a, a, eye_m)
        if mode == "R":
            return hilbert.tensor(eye_a, eye_m, a)
        raise ValueError(f"mode must be 'L' or 'R', got {mode!r}")

    def atom_operator(self, atomic: np.ndarray) -> np.ndarray:
        eye_m = np.eye(self.modes)
        return hilbert.tensor(atomic, eye_m, eye_m)

    def transition(self, upper: str, lower: str) -> np.ndarray:
        """``|upper><lower|`` on the atom, identity on both modes."""
        s = np.zeros((self.scheme.dim, self.scheme.dim), dtype=complex)
        s[self.scheme.level_index(upper), self.scheme.level_index(lower)] = 1.0
        return self.atom_operator(s)


@dataclass(frozen=True)
class PulseSpec:
    lower: str
    upper: str
    rabi: float
    phase: float
    duration: float

    def __post_init__(self):
        if self.lower == self.upper:
            raise ValueError("pulse lower and upper levels must differ")
        area = self.area
        if not np.isfinite(area) or area < 0:
            raise ValueError(f"pulse area must be finite and >= 0, got {area}")

    @property
    def area(self) -> float:
        return self.rabi * self.duration / 2

    @classmethod
    def with_area(cls, lower, upper, area, phase, rabi=1.0):
        return cls(lower, upper, rabi, phase, 2 * area / rabi)


@dataclass(frozen=True)
class CouplingSpec:
    mode: str
    lower: str
    upper: str
    strength: float
    duration: float

    def __post_init__(self):
        if self.mode not in ("L", "R"):
            raise ValueError(f"mode must be 'L' or 'R', got {self.mode!r}")
        if self.lower == self.upper:
            raise ValueError("coupling lower and upper levels must differ")
        if self.duration < 0:
            raise ValueError("wait duration must be >= 0")


@dataclass(frozen=True)
class DissipationParams:
    """Atomic decay ``gamma``, cavity decay ``kappa`` and coupling ratio ``s = h_L/h_R``."""

    gamma: float = 0.0
    kappa: float = 0.0
    s: float = 1.2

    def __post_init__(self):
        if not (self.gamma >= 0 and self.kappa >= 0):
            raise ValueError(f"decay rates must be >= 0, got gamma={self.gamma}, kappa={self.kappa}")
        if not self.s > 0:
            raise ValueError(f"coupling ratio s must be > 0, got {self.s}")


def pulse_hamiltonian(space: SiteSpace, p: PulseSpec) -> np.ndarray:
    space.scheme.check_transition(p.lower, p.upper)
    raising = space.transition(p.upper, p.lower)
    return (p.rabi / 2) * (np.exp(-1j * p.phase) * raising + np.exp(1j * p.phase) * hilbert.dag(raising))


def coupling_hamiltonian(space: SiteSpace, c: CouplingSpec) -> np.ndarray:
    space.scheme.check_transition(c.lower, c.upper, c.mode)
    a = space.mode_operator(c.mode)
    term = a @ space.transition(c.upper, c.lower)
    return c.strength * (term + hilbert.dag(term))


def dissipative_hamiltonian(space: SiteSpace, c: CouplingSpec, d: DissipationParams) -> np.ndarray:
    """No-jump generator: the coupling minus ``i gamma`` on the upper level and ``i kappa n`` on the mode."""
    if d.gamma < 0 or d.kappa < 0:
        raise ValueError("decay rates must be >= 0")
    h = coupling_hamiltonian(space, c)
    a = space.mode_operator(c.mode)
    excited = space.transition(c.upper, c.upper)
    return h - 1j * d.gamma * excited - 1j * d.kappa * (hilbert.dag(a) @ a)


def excitation_number(space: SiteSpace, c: CouplingSpec) -> np.ndarray:
    """``a^dagger a + |upper><upper|``, conserved by the matching coupling."""
    a = space.mode_operator(c.mode)
    return hilbert.dag(a) @ a + space.transition(c.upper, c.upper)
