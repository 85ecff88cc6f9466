"""Graph states, dual-rail photonic qubits and a small one-way computation.

Atomic qubits use ``|0> = |g>``, ``|1> = |g'>``. Each photonic qubit lives in
one two-mode cavity with ``|0>_p = |0_L 1_R>`` and ``|1>_p = |1_L 0_R>``.

Measurement-based rotation
--------------------------
``mbqc_rotation_demo`` runs the textbook linear-cluster pattern. An input
qubit plus four ``|+>`` qubits are joined by CZ along a chain. The first
four qubits are measured one after another in the X-Y plane. Measuring a
qubit that carries ``X^x Z^z V|psi>`` in the basis
``(|0> +- e^{i a}|1>)/sqrt(2)`` with outcome ``s`` leaves
``X^s H D(-a) X^x Z^z V|psi>`` on its neighbour, with ``D(b) = diag(1, e^{ib})``.
Choosing ``a = -(-1)^x theta`` absorbs the X byproduct. The next frame is
``x' = s ^ z``, ``z' = x``. With angles ``(0, xi, eta, zeta)`` the output
carries ``X^x Z^z Rx(zeta) Rz(eta) Rx(xi)|psi>`` up to global phase.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import hilbert
from .protocol import TransferError, five_level_transfer_protocol, protocol_propagator, qubit_to_site

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)

LEAKAGE_TOL = 1e-6


class LeakageError(ValueError):
    """Photonic state has weight outside the dual-rail logical subspace."""

    def __init__(self, weight: float):
        super().__init__(f"leakage weight {weight:.6g} outside the dual-rail subspace")
        self.weight = weight


def rx(a: float) -> np.ndarray:
    return math.cos(a / 2) * I2 - 1j * math.sin(a / 2) * X


def rz(a: float) -> np.ndarray:
    return math.cos(a / 2) * I2 - 1j * math.sin(a / 2) * Z


def phase_gate(b: float) -> np.ndarray:
    return np.diag([1.0, np.exp(1j * b)])


def euler_rotation(angles: Sequence[float]) -> np.ndarray:
    """``Rx(zeta) Rz(eta) Rx(xi)`` for ``angles = (xi, eta, zeta)``."""
    xi, eta, zeta = angles
    return rx(zeta) @ rz(eta) @ rx(xi)


@dataclass(frozen=True)
class Graph:
    n: int
    edges: frozenset[tuple[int, int]] = frozenset()

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("graph needs at least one vertex")
        normal = set()
        for edge in self.edges:
            u, v = sorted(int(x) for x in edge)
            if u == v:
                raise ValueError(f"self-loop on vertex {u}")
            if u < 0 or v >= self.n:
                raise ValueError(f"edge ({u}, {v}) outside vertices [0, {self.n})")
            normal.add((u, v))
        if len(normal) != len(self.edges):
            raise ValueError("duplicate edges")
        object.__setattr__(self, "edges", frozenset(normal))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> Graph:
        edges = [tuple(sorted(e)) for e in edges]
        if len(set(edges)) != len(edges):
            raise ValueError("duplicate edges")
        return cls(n, frozenset(edges))

    @classmethod
    def chain(cls, n: int) -> Graph:
        return cls.from_edges(n, [(k, k + 1) for k in range(n - 1)])

    def neighbors(self, a: int) -> list[int]:
        return sorted({v for e in self.edges if a in e for v in e} - {a})


def parse_graph(text: str) -> Graph:
    """Read an edge list: first line ``n``, then one ``u v`` pair per line.

    Blank lines and ``#`` comments are skipped.
    """
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ValueError("empty graph description")
    n = int(lines[0])
    edges = []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise ValueError(f"bad edge line {ln!r}")
        edges.append((int(parts[0]), int(parts[1])))
    return Graph.from_edges(n, edges)


def format_graph(g: Graph) -> str:
    return f"{g.n}\n" + "".join(f"{u} {v}\n" for u, v in sorted(g.edges))


def apply_cz(state: np.ndarray, n: int, edges: Iterable[tuple[int, int]]) -> np.ndarray:
    """Controlled-Z on every edge of an ``n``-qubit state (qubit 0 most significant)."""
    bits = (np.arange(2**n)[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    sign = np.ones(2**n)
    for u, v in edges:
        sign = sign * np.where(bits[:, u] & bits[:, v], -1.0, 1.0)
    return np.asarray(state, dtype=complex) * sign


def graph_cluster_state(g: Graph) -> np.ndarray:
    plus = np.full(2**g.n, 2 ** (-g.n / 2), dtype=complex)
    return apply_cz(plus, g.n, g.edges)


def stabilizer(g: Graph, a: int) -> np.ndarray:
    """``K_a = X_a prod_{b in N(a)} Z_b`` as a dense ``2^n`` operator."""
    nbrs = set(g.neighbors(a))
    ops = [X if k == a else Z if k in nbrs else I2 for k in range(g.n)]
    return hilbert.tensor(*ops)


def dual_rail_isometry(fock_cutoff: int = 1) -> np.ndarray:
    """Columns are ``|0>_p = |0_L 1_R>`` and ``|1>_p = |1_L 0_R>`` in a cavity of ``(n_max+1)^2`` dims."""
    m = fock_cutoff + 1
    w = np.zeros((m * m, 2), dtype=complex)
    w[0 * m + 1, 0] = 1.0
    w[1 * m + 0, 1] = 1.0
    return w


@dataclass(frozen=True)
class PhotonicRegister:
    """State of ``n`` two-mode cavities, optionally behind an untouched leading subsystem.

    The state is ordered ``env (x) cavity_0 (x) ... (x) cavity_{n-1}``. The
    environment (``env_dim > 1``) holds whatever has not been transferred
    yet, e.g. the atoms storing the rest of a cluster.
    """

    n: int
    state: np.ndarray = field(repr=False)
    fock_cutoff: int = 1
    leaky: bool = False
    env_dim: int = 1

    def __post_init__(self):
        psi = hilbert.ket(self.state)
        if psi.size != self.env_dim * self.site_dim**self.n:
            raise ValueError(f"state dimension {psi.size} does not match {self.n} cavities")
        psi.setflags(write=False)
        object.__setattr__(self, "state", psi)
        if not self.leaky:
            weight = self.leakage()
            if weight > 1e-10:
                raise LeakageError(weight)

    @property
    def site_dim(self) -> int:
        return (self.fock_cutoff + 1) ** 2

    @property
    def dims(self) -> list[int]:
        return [self.env_dim] + [self.site_dim] * self.n

    def logical_part(self) -> np.ndarray:
        """Projection onto the dual-rail subspace, as a vector over ``env (x) qubits``."""
        w = hilbert.dag(dual_rail_isometry(self.fock_cutoff))
        dims = self.dims
        t = self.state
        for k in range(1, self.n + 1):
            t = hilbert.apply_local(w, t, dims, k)
            dims[k] = 2
        return t

    def leakage(self) -> float:
        return float(max(np.linalg.norm(self.state) ** 2 - np.linalg.norm(self.logical_part()) ** 2, 0.0))

    def _check_site(self, site: int):
        if not 0 <= site < self.n:
            raise IndexError(f"site {site} outside [0, {self.n})")


def encode_photonic(qubit_state, fock_cutoff: int = 1, env_dim: int = 1) -> PhotonicRegister:
    """Embed an ``env (x) n``-qubit state into the dual-rail cavities."""
    psi = hilbert.ket(qubit_state)
    n = round(math.log2(psi.size // env_dim)) if psi.size % env_dim == 0 else -1
    if n < 1 or env_dim * 2**n != psi.size:
        raise ValueError(f"state of dimension {psi.size} is not env_dim={env_dim} times n qubits")
    w = dual_rail_isometry(fock_cutoff)
    dims = [env_dim] + [2] * n
    for k in range(1, n + 1):
        psi = hilbert.apply_local(w, psi, dims, k)
        dims[k] = w.shape[0]
    return PhotonicRegister(n, psi, fock_cutoff, env_dim=env_dim)


def decode_photonic(r: PhotonicRegister, tol: float = LEAKAGE_TOL) -> np.ndarray:
    """Inverse of ``encode_photonic``; raises ``LeakageError`` above ``tol``."""
    weight = r.leakage()
    if weight > tol:
        raise LeakageError(weight)
    return r.logical_part()


def _site_operator(u: np.ndarray, fock_cutoff: int) -> np.ndarray:
    w = dual_rail_isometry(fock_cutoff)
    return np.eye(w.shape[0], dtype=complex) - w @ hilbert.dag(w) + w @ u @ hilbert.dag(w)


def photonic_rotation(r: PhotonicRegister, site: int, u) -> PhotonicRegister:
    """Apply a single-qubit unitary on the logical subspace of one cavity (polarization rotator)."""
    r._check_site(site)
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or not hilbert.is_unitary(u):
        raise ValueError("rotation must be a 2x2 unitary")
    psi = hilbert.apply_local(_site_operator(u, r.fock_cutoff), r.state, r.dims, site + 1)
    return PhotonicRegister(r.n, psi, r.fock_cutoff, r.leaky, r.env_dim)


@dataclass(frozen=True)
class MeasurementBasis:
    """Outcome 0 is ``cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>``, outcome 1 its complement."""

    theta: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.isfinite(self.phi)):
            raise ValueError("basis angles must be finite")

    def vectors(self) -> tuple[np.ndarray, np.ndarray]:
        c, s = math.cos(self.theta / 2), math.sin(self.theta / 2)
        e = np.exp(1j * self.phi)
        return np.array([c, e * s]), np.array([-np.conj(e) * s, c])

    @classmethod
    def xy(cls, angle: float) -> MeasurementBasis:
        """``(|0> +- e^{i angle}|1>)/sqrt(2)``."""
        return cls(math.pi / 2, angle)


@dataclass(frozen=True)
class MeasurementRecord:
    site: int
    theta: float
    phi: float
    outcome: int
    probability: float

    def format(self) -> str:
        return f"{self.site} {self.theta:.12g} {self.phi:.12g} {self.outcome} {self.probability:.12f}"


def format_records(records: Iterable[MeasurementRecord]) -> str:
    return "".join(r.format() + "\n" for r in records)


def measure_photonic(r: PhotonicRegister, site: int, b: MeasurementBasis, rng=0,
                     outcome: int | None = None):
    """Projectively measure one photonic qubit.

    Parameters
    ----------
    rng : numpy Generator or int seed
        Source of the Born-rule sample; an int is turned into a fresh
        ``default_rng``.
    outcome : {0, 1}, optional
        Post-select this outcome instead of sampling.

    Returns
    -------
    outcome, collapsed register, Born probability of that outcome
    """
    r._check_site(site)
    w = dual_rail_isometry(r.fock_cutoff)
    probs, branches = [], []
    for v in b.vectors():
        p_site = np.outer(w @ v, np.conj(w @ v))
        branch = hilbert.apply_local(p_site, r.state, r.dims, site + 1)
        branches.append(branch)
        probs.append(float(np.vdot(branch, branch).real))
    total = probs[0] + probs[1]
    if total < 1e-9:
        raise ValueError(f"logical weight {total:.3e} on site {site} is too small to measure")
    probs = [p / total for p in probs]
    if outcome is None:
        rng = np.random.default_rng(rng)
        outcome = 0 if rng.random() < probs[0] else 1
    elif outcome not in (0, 1):
        raise ValueError("outcome must be 0 or 1")
    if probs[outcome] == 0:
        raise ValueError(f"outcome {outcome} has zero probability")
    collapsed = branches[outcome] / np.linalg.norm(branches[outcome])
    return outcome, PhotonicRegister(r.n, collapsed, r.fock_cutoff, r.leaky, r.env_dim), probs[outcome]


def _pauli_frame(x: int, z: int) -> np.ndarray:
    return np.linalg.matrix_power(X, x) @ np.linalg.matrix_power(Z, z)


def align_phase(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``a`` times the global phase that best matches it to ``b``."""
    ip = np.vdot(a.reshape(-1), b.reshape(-1))
    return a * (ip / abs(ip)) if abs(ip) > 0 else a


@dataclass(frozen=True)
class MbqcResult:
    angles: tuple[float, float, float]
    effective_map: np.ndarray = field(repr=False)
    raw_map: np.ndarray = field(repr=False)
    target: np.ndarray = field(repr=False)
    byproduct: tuple[int, int]
    records: tuple[MeasurementRecord, ...]

    @property
    def error(self) -> float:
        """Max-norm distance between corrected map and target after phase alignment."""
        return float(np.max(np.abs(align_phase(self.effective_map, self.target) - self.target)))


def mbqc_rotation_demo(angles: Sequence[float], seed: int = 0,
                       outcomes: Sequence[int] | None = None, h_left: float = 1.2,
                       h_right: float = 1.0) -> MbqcResult:
    """Arbitrary single-qubit rotation on a five-qubit atomic chain via photonic readout.

    The input qubit is held maximally entangled with a reference, so the
    output carries the whole 2x2 map. Qubits are moved into cavities one at a
    time with the five-level protocol, rotated onto the adaptive measurement
    axis and measured. The last qubit is transferred and decoded as output.
    ``outcomes`` post-selects the four results instead of sampling with
    ``seed``.
    """
    xi, eta, zeta = (float(a) for a in angles)
    thetas = (0.0, xi, eta, zeta)
    if outcomes is not None and len(outcomes) != len(thetas):
        raise ValueError("need one forced outcome per measured qubit")
    n = len(thetas) + 1
    p = five_level_transfer_protocol(h_left, h_right)
    space = p.space()
    u_site = protocol_propagator(p, space)
    load = qubit_to_site(p, space)
    w = dual_rail_isometry()
    rng = np.random.default_rng(seed)

    # reference (x) qubits 0..n-1, input on qubit 0 entangled with the reference
    bell = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)
    state = np.kron(bell, np.full(2 ** (n - 1), 2 ** (-(n - 1) / 2)))
    state = apply_cz(state, n + 1, [(k, k + 1) for k in range(1, n)])

    x = z = 0
    records = []
    for k, theta in enumerate(thetas):
        register = _transfer_front_qubit(state, n - k, u_site, load, space)
        a = -((-1) ** x) * theta
        register = photonic_rotation(register, 0, H @ phase_gate(-a))
        forced = None if outcomes is None else outcomes[k]
        s, register, prob = measure_photonic(register, 0, MeasurementBasis(), rng, forced)
        records.append(MeasurementRecord(k, math.pi / 2, a, s, prob))
        state = decode_photonic(register).reshape(-1, 2)[:, s]
        state = state / np.linalg.norm(state)
        x, z = s ^ z, x

    out = decode_photonic(_transfer_front_qubit(state, 1, u_site, load, space)).reshape(2, 2)
    raw = out.T * math.sqrt(2)
    corrected = _pauli_frame(x, z).conj().T @ raw
    return MbqcResult((xi, eta, zeta), corrected, raw, euler_rotation((xi, eta, zeta)), (x, z), tuple(records))


def _transfer_front_qubit(state, n_left, u_site, load, space) -> PhotonicRegister:
    """Move atomic qubit 1 of ``ref (x) qubits`` into a cavity placed last.

    Returns a one-cavity register whose environment is the reference and
    the remaining atoms.
    """
    dims = [2] * (n_left + 1)
    site = hilbert.apply_local(load, state, dims, 1)
    dims[1] = space.dim
    site = hilbert.apply_local(u_site, site, dims, 1)
    t = site.reshape([2, space.scheme.dim, space.modes**2] + [2] * (n_left - 1))
    atom_g = space.scheme.level_index("g")
    stray = np.linalg.norm(t) ** 2 - np.linalg.norm(t[:, atom_g]) ** 2
    if stray > 1e-10:
        raise TransferError(f"atom not returned to |g> after transfer (weight {stray:.3e})")
    photons = np.moveaxis(t[:, atom_g], 1, -1)
    return PhotonicRegister(1, photons.reshape(-1), env_dim=2**n_left)


def postselected_maps(angles: Sequence[float], **kwargs) -> dict[tuple[int, ...], MbqcResult]:
    """Run the demo on every one of the 16 measurement branches."""
    return {o: mbqc_rotation_demo(angles, outcomes=o, **kwargs) for o in itertools.product((0, 1), repeat=4)}
