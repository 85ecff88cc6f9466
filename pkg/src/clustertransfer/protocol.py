"""Pulse and cavity-wait sequences that move an atomic qubit into a cavity photon.

Two protocols are provided:

``five_level_transfer_protocol``
    four stages on a five-level atom, ``|g,0,0> -> |g,0_L,1_R>`` and
    ``|g',0,0> -> |g,1_L,0_R>``, starting from the empty cavity.
``four_level_swap_protocol``
    three stages on a four-level atom that swaps the atomic qubit with a
    cavity prepared in ``|0_L,1_R>``.

Pulses and cavity waits act strictly one after the other: during a pulse
the cavity coupling is off, and during a wait no laser is on. With
dissipation the pulses stay ideal and only the waits are evolved under the
no-jump generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from . import hilbert
from .atomsys import (
    FIVE_LEVEL,
    FOUR_LEVEL,
    CouplingSpec,
    DissipationParams,
    LevelScheme,
    PulseSpec,
    SiteSpace,
    coupling_hamiltonian,
    dissipative_hamiltonian,
    pulse_hamiltonian,
)

FIVE_LEVEL_TRANSFER = "FiveLevelTransfer"
FOUR_LEVEL_SWAP = "FourLevelSwap"

MAX_REGISTER_DIM = 200_000
REGISTER_TOL = 1e-9


class TransferError(RuntimeError):
    """Raised when a register transfer misses its target state."""


@dataclass(frozen=True)
class ProtocolStep:
    stage: str
    action: PulseSpec | CouplingSpec

    @property
    def kind(self) -> str:
        return "pulse" if isinstance(self.action, PulseSpec) else "wait"

    def describe(self) -> str:
        a = self.action
        if isinstance(a, PulseSpec):
            return (f"{a.lower}<->{a.upper} rabi={a.rabi:.12g} phase={a.phase:.12g} "
                    f"duration={a.duration:.12g} area={a.area:.12g}")
        return (f"mode={a.mode} {a.lower}<->{a.upper} strength={a.strength:.12g} "
                f"duration={a.duration:.12g}")


@dataclass(frozen=True)
class Protocol:
    label: str
    scheme: LevelScheme
    steps: tuple[ProtocolStep, ...]
    cavity_init: tuple[int, int]

    def __post_init__(self):
        for step in self.steps:
            a = step.action
            self.scheme.check_transition(a.lower, a.upper, getattr(a, "mode", None))
        expected = {FIVE_LEVEL_TRANSFER: (4, 4, 2), FOUR_LEVEL_SWAP: (3, 1, 2)}.get(self.label)
        if expected is not None:
            kinds = [s.kind for s in self.steps]
            got = (len(self.stages), kinds.count("pulse"), kinds.count("wait"))
            if got != expected:
                raise ValueError(f"{self.label} needs (stages, pulses, waits) = {expected}, got {got}")

    @property
    def stages(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(s.stage for s in self.steps))

    def space(self, fock_cutoff: int = 1) -> SiteSpace:
        return SiteSpace(self.scheme, fock_cutoff)


def _check_rates(h_left, h_right):
    if not (h_left > 0 and h_right > 0):
        raise ValueError(f"coupling strengths must be positive, got h_L={h_left}, h_R={h_right}")


def five_level_transfer_protocol(h_left: float, h_right: float, rabi: float = 1.0) -> Protocol:
    _check_rates(h_left, h_right)
    half = math.pi / 2

    def pulse(lower, upper, phase):
        return PulseSpec.with_area(lower, upper, half, phase, rabi)

    steps = (
        ProtocolStep("i", pulse("g'", "f", -math.pi / 2)),
        ProtocolStep("i", CouplingSpec("L", "r", "f", h_left, half / h_left)),
        ProtocolStep("ii", pulse("g'", "r", math.pi)),
        ProtocolStep("iii", pulse("g", "e", math.pi)),
        ProtocolStep("iii", CouplingSpec("R", "g'", "e", h_right, half / h_right)),
        ProtocolStep("iv", pulse("g", "g'", math.pi / 2)),
    )
    return Protocol(FIVE_LEVEL_TRANSFER, FIVE_LEVEL, steps, (0, 0))


def four_level_swap_protocol(h_left: float, h_right: float, rabi: float = 1.0) -> Protocol:
    _check_rates(h_left, h_right)
    half = math.pi / 2
    steps = (
        ProtocolStep("i", CouplingSpec("R", "g'", "f", h_right, half / h_right)),
        # |f> -> -i e^{i phase}|r> needs f as the upper level of the pulse
        ProtocolStep("ii", PulseSpec.with_area("r", "f", half, 3 * math.pi / 2, rabi)),
        ProtocolStep("iii", CouplingSpec("L", "g", "r", h_left, half / h_left)),
    )
    return Protocol(FOUR_LEVEL_SWAP, FOUR_LEVEL, steps, (0, 1))


def step_count(p: Protocol, n: int) -> int:
    """Number of protocol stages needed to transfer ``n`` qubits."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return len(p.stages) * n


def step_generator(space: SiteSpace, step: ProtocolStep, dissipation: DissipationParams | None = None):
    """Return ``(H, duration)`` for one step."""
    a = step.action
    if isinstance(a, PulseSpec):
        return pulse_hamiltonian(space, a), a.duration
    if dissipation is None:
        return coupling_hamiltonian(space, a), a.duration
    return dissipative_hamiltonian(space, a, dissipation), a.duration


def step_propagators(p: Protocol, space: SiteSpace, dissipation: DissipationParams | None = None):
    if dissipation is not None and p.label == FOUR_LEVEL_SWAP:
        raise ValueError("dissipative runs are only modelled for the five-level transfer")
    return [hilbert.propagator(*step_generator(space, s, dissipation)) for s in p.steps]


def protocol_propagator(p: Protocol, space: SiteSpace, dissipation: DissipationParams | None = None):
    u = np.eye(space.dim, dtype=complex)
    for step_u in step_propagators(p, space, dissipation):
        u = step_u @ u
    return u


def _infer_space(p: Protocol, dim: int) -> SiteSpace:
    m = math.isqrt(dim // p.scheme.dim) if dim % p.scheme.dim == 0 else 0
    if m < 2 or p.scheme.dim * m * m != dim:
        raise ValueError(f"state of dimension {dim} does not fit a {p.scheme.name} site")
    return SiteSpace(p.scheme, m - 1)


def _snap(x: float) -> float:
    # keeps round-off like 6e-17 out of the printed trace; 0.0 also drops the sign of -0.0
    return 0.0 if abs(x) < 1e-14 else x


@dataclass(frozen=True)
class TraceEntry:
    index: int
    stage: str
    kind: str
    params: str
    norm: float
    amplitudes: tuple[tuple[str, complex], ...]

    def format(self) -> str:
        amps = " ".join(f"{lbl}:{_snap(a.real):+.12g}{_snap(a.imag):+.12g}j" for lbl, a in self.amplitudes)
        return f"{self.index} {self.stage} {self.kind} {self.params} norm={self.norm:.12g} {amps}"


def _iter_steps(psi0, p, dissipation, space) -> Iterator[tuple[ProtocolStep, np.ndarray]]:
    psi = hilbert.ket(psi0)
    space = space or _infer_space(p, psi.size)
    if space.scheme != p.scheme or psi.size != space.dim:
        raise ValueError(f"state of dimension {psi.size} does not live in the protocol's site space")
    for step, u in zip(p.steps, step_propagators(p, space, dissipation)):
        psi = u @ psi
        yield step, psi


def run_protocol(psi0, p: Protocol, dissipation: DissipationParams | None = None,
                 space: SiteSpace | None = None) -> np.ndarray:
    """Evolve a single-site state through every step of ``p``.

    Parameters
    ----------
    psi0 : array_like
        Site state (atom, left mode, right mode).
    p : Protocol
    dissipation : DissipationParams, optional
        ``None`` runs the ideal unitary protocol. Otherwise cavity waits use
        the no-jump generator and the returned state is sub-normalized.
    space : SiteSpace, optional
        Inferred from the state dimension when omitted.
    """
    psi = hilbert.ket(psi0)
    for _, psi in _iter_steps(psi0, p, dissipation, space):
        pass
    return psi


def protocol_trace(psi0, p: Protocol, dissipation: DissipationParams | None = None,
                   space: SiteSpace | None = None, threshold: float = 1e-6) -> list[TraceEntry]:
    """Per-step record of the evolving state, keeping amplitudes above ``threshold``."""
    space = space or _infer_space(p, len(psi0))
    entries = []
    for i, (step, psi) in enumerate(_iter_steps(psi0, p, dissipation, space)):
        big = np.flatnonzero(np.abs(psi) > threshold)
        entries.append(TraceEntry(
            i, step.stage, step.kind, step.describe(), float(np.linalg.norm(psi)),
            tuple((space.format_label(k), complex(psi[k])) for k in big),
        ))
    return entries


def format_trace(entries: Sequence[TraceEntry]) -> str:
    return "".join(e.format() + "\n" for e in entries)


def qubit_to_site(p: Protocol, space: SiteSpace) -> np.ndarray:
    """Isometry (site_dim x 2) loading atomic qubit ``|0>=|g>, |1>=|g'>`` with the initial cavity."""
    nl, nr = p.cavity_init
    return np.stack([space.ket("g", nl, nr), space.ket("g'", nl, nr)], axis=1)


def site_target(space: SiteSpace) -> np.ndarray:
    """Isometry (site_dim x 2) onto ``|g>`` times the dual-rail photonic qubit."""
    return np.stack([space.ket("g", 0, 1), space.ket("g", 1, 0)], axis=1)


def _apply_isometry_all(w: np.ndarray, state: np.ndarray, n: int) -> np.ndarray:
    dims = [w.shape[1]] * n
    out = state
    for k in range(n):
        out = out.reshape(dims)
        out = np.moveaxis(np.tensordot(w, out, axes=([1], [k])), 0, k)
        dims[k] = w.shape[0]
    return out.reshape(-1)


def _atomic_qubits(atomic_state, n: int, scheme: LevelScheme) -> np.ndarray:
    psi = hilbert.ket(atomic_state)
    if psi.size == 2**n:
        return psi
    if psi.size != scheme.dim**n:
        raise ValueError(f"atomic state of dimension {psi.size} fits neither 2^{n} nor {scheme.dim}^{n}")
    t = psi.reshape([scheme.dim] * n)
    qubit = tuple([slice(0, 2)] * n)  # g, g' are the first two levels of every scheme
    inside = t[qubit]
    leak = np.linalg.norm(psi) ** 2 - np.linalg.norm(inside) ** 2
    if leak > 1e-12:
        raise ValueError(f"atomic state has weight {leak:.3e} outside the {{g, g'}} qubit subspace")
    return inside.reshape(-1).copy()


def register_initial_state(atomic_state, n: int, p: Protocol, fock_cutoff: int = 1) -> np.ndarray:
    space = p.space(fock_cutoff)
    return _apply_isometry_all(qubit_to_site(p, space), _atomic_qubits(atomic_state, n, p.scheme), n)


def register_target(atomic_state, n: int, p: Protocol, fock_cutoff: int = 1) -> np.ndarray:
    """``|g>^n`` times the dual-rail encoding of the input, in site-interleaved order."""
    space = p.space(fock_cutoff)
    return _apply_isometry_all(site_target(space), _atomic_qubits(atomic_state, n, p.scheme), n)


def transfer_register(atomic_state, n: int, p: Protocol, fock_cutoff: int = 1,
                      dissipation: DissipationParams | None = None, order: Sequence[int] | None = None,
                      max_dim: int = MAX_REGISTER_DIM, check: bool = True) -> np.ndarray:
    """Transfer an ``n``-qubit atomic state into ``n`` cavities, one site after another.

    The register is ordered site 0 (atom, L, R), site 1, ... with site 0 most
    significant. ``atomic_state`` is either a ``2**n`` qubit vector
    (``|0>=|g>``, ``|1>=|g'>``) or a full ``d**n`` atomic vector supported on
    the qubit levels. ``order`` permutes the sequence in which sites are
    processed. With ``check`` on, an ideal run raises ``TransferError`` unless
    the output matches ``|g>^n`` times the encoded input to 1e-9.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    space = p.space(fock_cutoff)
    total = space.dim**n
    if total > max_dim:
        raise MemoryError(f"register dimension {space.dim}^{n} = {total} exceeds budget {max_dim}")
    qubits = _atomic_qubits(atomic_state, n, p.scheme)
    order = list(range(n)) if order is None else [int(k) for k in order]
    if sorted(order) != list(range(n)):
        raise ValueError(f"order {order} is not a permutation of range({n})")

    psi = _apply_isometry_all(qubit_to_site(p, space), qubits, n)
    u = protocol_propagator(p, space, dissipation)
    dims = [space.dim] * n
    for k in order:
        psi = hilbert.apply_local(u, psi, dims, k)

    if check and dissipation is None:
        target = _apply_isometry_all(site_target(space), qubits, n)
        f = hilbert.overlap_fidelity(target, psi) / (np.linalg.norm(qubits) ** 2)
        if f < 1 - REGISTER_TOL:
            raise TransferError(f"register transfer fidelity {f:.12g} below 1 - {REGISTER_TOL}")
    return psi


def atom_photon_dims(space: SiteSpace, n: int) -> list[int]:
    return list(space.dims) * n


def reduced_atoms(state: np.ndarray, space: SiteSpace, n: int) -> np.ndarray:
    return hilbert.partial_trace(state, atom_photon_dims(space, n), [3 * k for k in range(n)])


def reduced_photons(state: np.ndarray, space: SiteSpace, n: int) -> np.ndarray:
    keep = [3 * k + j for k in range(n) for j in (1, 2)]
    return hilbert.partial_trace(state, atom_photon_dims(space, n), keep)
