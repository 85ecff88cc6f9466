"""Transfer fidelity under atomic and cavity decay, and grid sweeps over it.

The photonic state after a dissipative run is the reduced density matrix of
the cavity modes with the atom traced out. It is left sub-normalized by
default, so photon loss counts against the fidelity. The reference is the
reduced state of the same input under the ideal protocol.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np

from . import hilbert
from .atomsys import DissipationParams
from .protocol import five_level_transfer_protocol, qubit_to_site, run_protocol

FIXED_SUPERPOSITION = "FixedSuperposition"
CARDINAL_AVERAGE = "CardinalAverage"

HEADER = ("gamma_over_h", "kappa_over_h", "s", "fidelity")

_S = 1 / math.sqrt(2)
CARDINAL_STATES = (
    np.array([1, 0], dtype=complex),
    np.array([0, 1], dtype=complex),
    np.array([_S, _S], dtype=complex),
    np.array([_S, -_S], dtype=complex),
    np.array([_S, 1j * _S], dtype=complex),
    np.array([_S, -1j * _S], dtype=complex),
)
PLUS = CARDINAL_STATES[2]


def photonic_state(site_state: np.ndarray, space) -> np.ndarray:
    """Reduced density matrix of the two cavity modes (atom traced out)."""
    return hilbert.partial_trace(site_state, space.dims, [1, 2])


def transfer_fidelity(qubit, d: DissipationParams, renormalize: bool = False,
                      fock_cutoff: int = 1) -> float:
    """Fidelity of the dissipative five-level transfer against the ideal one.

    ``qubit`` is the atomic input ``a|g> + b|g'>`` given as ``(a, b)``. The
    protocol uses ``h_R = 1`` and ``h_L = d.s``.
    """
    qubit = hilbert.ket(qubit, normalize=True)
    if qubit.size != 2:
        raise ValueError("input must be a single atomic qubit (a, b) on {|g>, |g'>}")
    p = five_level_transfer_protocol(d.s, 1.0)
    space = p.space(fock_cutoff)
    psi0 = qubit_to_site(p, space) @ qubit
    ideal = photonic_state(run_protocol(psi0, p, space=space), space)
    rho = photonic_state(run_protocol(psi0, p, d, space=space), space)
    if renormalize:
        rho = rho / np.trace(rho).real
    return hilbert.uhlmann_fidelity(rho, ideal)


@dataclass(frozen=True)
class SweepConfig:
    gamma_grid: tuple[float, ...]
    kappa_values: tuple[float, ...]
    s: float = 1.2
    input_state_policy: str = FIXED_SUPERPOSITION
    renormalize: bool = False
    fock_cutoff: int = 1

    def __post_init__(self):
        object.__setattr__(self, "gamma_grid", tuple(float(g) for g in self.gamma_grid))
        object.__setattr__(self, "kappa_values", tuple(float(k) for k in self.kappa_values))
        if not self.gamma_grid or not self.kappa_values:
            raise ValueError("gamma and kappa grids must be nonempty")
        if min(self.gamma_grid + self.kappa_values) < 0:
            raise ValueError("decay rates must be >= 0")
        if not self.s > 0:
            raise ValueError("s must be > 0")
        if self.input_state_policy not in (FIXED_SUPERPOSITION, CARDINAL_AVERAGE):
            raise ValueError(f"unknown input state policy {self.input_state_policy!r}")


@dataclass(frozen=True)
class SweepRow:
    gamma_over_h: float
    kappa_over_h: float
    s: float
    fidelity: float

    def __post_init__(self):
        if not -1e-12 <= self.fidelity <= 1 + 1e-9:
            raise ValueError(f"fidelity {self.fidelity} outside [0, 1]")


def _point(c: SweepConfig, gamma: float, kappa: float) -> SweepRow:
    d = DissipationParams(gamma, kappa, c.s)
    inputs = (PLUS,) if c.input_state_policy == FIXED_SUPERPOSITION else CARDINAL_STATES
    f = float(np.mean([transfer_fidelity(q, d, c.renormalize, c.fock_cutoff) for q in inputs]))
    return SweepRow(gamma, kappa, c.s, f)


def run_sweep(c: SweepConfig, workers: int = 1) -> list[SweepRow]:
    """One row per ``(gamma, kappa)`` pair, sorted by ``(kappa, gamma)``."""
    grid = [(g, k) for k in c.kappa_values for g in c.gamma_grid]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(lambda gk: _point(c, *gk), grid))
    else:
        rows = [_point(c, g, k) for g, k in grid]
    return sorted(rows, key=_row_key)


def _row_key(row: SweepRow):
    return row.kappa_over_h, row.gamma_over_h


def format_number(x: float) -> str:
    """Shortest round-tripping decimal, without a trailing ``.0``."""
    text = repr(float(x))
    return text[:-2] if text.endswith(".0") else text


def format_row(row: SweepRow) -> str:
    return ",".join([format_number(row.gamma_over_h), format_number(row.kappa_over_h),
                     format_number(row.s), f"{row.fidelity:.12f}"])


def emit_table(rows: Iterable[SweepRow], destination: TextIO | str) -> None:
    """Write rows as CSV; ``destination`` is an open text stream or a path."""
    text = ",".join(HEADER) + "\n" + "".join(format_row(r) + "\n" for r in rows)
    if isinstance(destination, str):
        with open(destination, "w", newline="") as fh:
            fh.write(text)
    else:
        destination.write(text)


def read_table(source: TextIO | str) -> list[SweepRow]:
    if isinstance(source, str):
        with open(source, newline="") as fh:
            return read_table(io.StringIO(fh.read()))
    reader = csv.reader(source)
    header = next(reader)
    if tuple(header) != HEADER:
        raise ValueError(f"unexpected header {header}")
    return [SweepRow(*(float(v) for v in line)) for line in reader]


def curves(rows: Sequence[SweepRow]) -> dict[float, list[SweepRow]]:
    """Group rows by kappa, each curve in ascending gamma."""
    out: dict[float, list[SweepRow]] = {}
    for r in sorted(rows, key=_row_key):
        out.setdefault(r.kappa_over_h, []).append(r)
    return out
