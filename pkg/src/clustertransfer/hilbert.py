"""Dense linear algebra on kets and operators.

Kets are 1-d complex numpy arrays, operators and density matrices are 2-d
square complex arrays. In every tensor product the leftmost factor is the
most significant index, i.e. ``tensor(a, b)[i * len(b) + j] == a[i] * b[j]``.
This convention is relied on by every basis-state lookup in the package.
"""

from __future__ import annotations

from functools import reduce

import numpy as np
import scipy.linalg

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10
PSD_TOL = 1e-10


def ket(amplitudes, normalize: bool = False) -> np.ndarray:
    """Return a validated complex state vector.

    Raises ``ValueError`` on empty, non 1-d or non-finite input.
    """
    psi = np.array(amplitudes, dtype=complex)
    if psi.ndim != 1 or psi.size == 0:
        raise ValueError(f"state vector must be 1-d and nonempty, got shape {psi.shape}")
    if not np.all(np.isfinite(psi)):
        raise ValueError("state vector has non-finite entries")
    if normalize:
        norm = np.linalg.norm(psi)
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        psi = psi / norm
    return psi


def basis(dim: int, index: int) -> np.ndarray:
    psi = np.zeros(dim, dtype=complex)
    psi[index] = 1.0
    return psi


def operator(entries) -> np.ndarray:
    a = np.array(entries, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"operator must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("operator has non-finite entries")
    return a


def dag(a: np.ndarray) -> np.ndarray:
    return np.conj(a).T


def is_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return bool(np.max(np.abs(a - dag(a)), initial=0.0) < tol)


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.max(np.abs(dag(u) @ u - np.eye(len(u)))) < tol)


def tensor(*factors: np.ndarray) -> np.ndarray:
    """Kronecker product of kets or of operators, left factor most significant.

    Mixing kets and operators raises ``TypeError``.
    """
    if not factors:
        raise ValueError("tensor needs at least one factor")
    arrays = [np.asarray(f) for f in factors]
    kinds = {a.ndim for a in arrays}
    if len(kinds) != 1 or kinds - {1, 2}:
        raise TypeError("tensor operands must all be kets or all be operators")
    return reduce(np.kron, arrays)


def apply(u: np.ndarray, psi: np.ndarray) -> np.ndarray:
    u = np.asarray(u)
    psi = np.asarray(psi)
    if u.ndim != 2 or psi.ndim != 1 or u.shape[1] != psi.shape[0]:
        raise ValueError(f"cannot apply operator of shape {u.shape} to vector of shape {psi.shape}")
    return u @ psi


def apply_local(op: np.ndarray, psi: np.ndarray, dims, axis: int) -> np.ndarray:
    """Apply ``op`` to subsystem ``axis`` of a ket over ``dims`` without forming the full operator.

    ``op`` may be rectangular (an isometry), which changes that subsystem's dimension.
    """
    dims = tuple(int(d) for d in dims)
    if op.ndim != 2 or op.shape[1] != dims[axis]:
        raise ValueError(f"operator shape {op.shape} does not match subsystem dim {dims[axis]}")
    t = np.asarray(psi).reshape(dims)
    t = np.tensordot(op, t, axes=([1], [axis]))
    return np.moveaxis(t, 0, axis).reshape(-1)


def propagator(h: np.ndarray, t: float) -> np.ndarray:
    """Return ``exp(-i H t)``.

    Hermitian generators go through an eigendecomposition, which keeps the
    result unitary to round-off. Anything else (the non-Hermitian no-jump
    generators) uses Pade scaling and squaring, and requires ``t >= 0`` with
    a dissipative anti-Hermitian part.
    """
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"generator must be square, got shape {h.shape}")
    if is_hermitian(h):
        herm = (h + dag(h)) / 2
        evals, evecs = np.linalg.eigh(herm)
        return (evecs * np.exp(-1j * evals * t)) @ dag(evecs)
    if t < 0:
        raise ValueError("non-Hermitian generator can only be propagated forward in time")
    anti = (h - dag(h)) / 2j
    if np.max(np.linalg.eigvalsh(anti)) > PSD_TOL:
        raise ValueError("anti-Hermitian part of the generator is not dissipative")
    return scipy.linalg.expm(-1j * t * h)


def projector(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi)
    return np.outer(psi, np.conj(psi))


def partial_trace(rho: np.ndarray, dims, keep) -> np.ndarray:
    """Reduced density matrix over the subsystems in ``keep``.

    Kept subsystems appear in ascending index order. A 1-d ``rho`` is taken
    as a ket and traced without forming the full density matrix.
    """
    dims = [int(d) for d in dims]
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep must name at least one subsystem")
    if keep[0] < 0 or keep[-1] >= len(dims):
        raise ValueError(f"keep indices {keep} out of range for {len(dims)} subsystems")
    total = int(np.prod(dims))
    rho = np.asarray(rho)
    if rho.shape[0] != total:
        raise ValueError(f"subsystem dims {dims} inconsistent with dimension {rho.shape[0]}")
    traced = [i for i in range(len(dims)) if i not in keep]
    dk = int(np.prod([dims[i] for i in keep]))
    dt = int(np.prod([dims[i] for i in traced])) if traced else 1
    if rho.ndim == 1:
        m = np.transpose(rho.reshape(dims), keep + traced).reshape(dk, dt)
        return m @ dag(m)
    n = len(dims)
    t = rho.reshape(dims + dims)
    order = keep + traced + [n + i for i in keep] + [n + i for i in traced]
    t = np.transpose(t, order).reshape(dk, dt, dk, dt)
    return np.einsum("ajbj->ab", t)


def check_density(rho: np.ndarray, tol: float = PSD_TOL) -> np.ndarray:
    """Validate Hermiticity, positivity and trace <= 1; returns the Hermitian part."""
    rho = operator(rho)
    if np.max(np.abs(rho - dag(rho))) > tol:
        raise ValueError("density matrix is not Hermitian")
    rho = (rho + dag(rho)) / 2
    evals = np.linalg.eigvalsh(rho)
    if evals[0] < -tol:
        raise ValueError(f"density matrix has negative eigenvalue {evals[0]:.3e}")
    if np.trace(rho).real > 1 + tol:
        raise ValueError(f"density matrix trace {np.trace(rho).real:.12g} exceeds 1")
    return rho


def _noise_floor(evals: np.ndarray) -> float:
    return len(evals) * np.finfo(float).eps * max(1.0, float(np.max(np.abs(evals))))


def sqrtm_psd(a: np.ndarray, tol: float = PSD_TOL) -> np.ndarray:
    """Square root of a positive semidefinite matrix; round-off negatives clamp to 0."""
    evals, evecs = np.linalg.eigh((a + dag(a)) / 2)
    if evals[0] < -tol:
        raise ValueError(f"matrix is not positive semidefinite (eigenvalue {evals[0]:.3e})")
    evals = np.where(evals > _noise_floor(evals), evals, 0.0)
    return (evecs * np.sqrt(evals)) @ dag(evecs)


def pure_state_fidelity(rho: np.ndarray, psi: np.ndarray) -> float:
    """Fidelity of ``rho`` with the pure state ``psi``: ``sqrt(<psi|rho|psi>)``."""
    rho = check_density(rho)
    psi = np.asarray(psi)
    value = np.real(np.vdot(psi, rho @ psi))
    return float(np.sqrt(max(value, 0.0)))


def as_pure(rho: np.ndarray, tol: float = 1e-12):
    """Return ``psi`` with ``rho = |psi><psi|`` if ``rho`` has rank one, else ``None``."""
    evals, evecs = np.linalg.eigh(rho)
    if evals[-1] <= 0 or np.all(np.abs(evals[:-1]) <= tol):
        return evecs[:, -1] * np.sqrt(max(evals[-1], 0.0))
    return None


def uhlmann_fidelity(rho: np.ndarray, sigma: np.ndarray, method: str = "auto") -> float:
    """Uhlmann fidelity ``Tr sqrt(sqrt(sigma) rho sqrt(sigma))``.

    ``sigma`` may be given as a ket. With ``method="auto"`` a rank-one
    argument is detected and the pure-state formula used, which avoids the
    square-root amplification of round-off eigenvalues (1e-17 -> 3e-9) in
    the matrix path. ``method="general"`` forces the matrix path.
    Sub-normalized arguments are accepted; their lost weight shows up as
    reduced fidelity.
    """
    sigma = np.asarray(sigma)
    if sigma.ndim == 1:
        return pure_state_fidelity(rho, sigma)
    rho = check_density(rho)
    sigma = check_density(sigma)
    if rho.shape != sigma.shape:
        raise ValueError(f"dimension mismatch {rho.shape} vs {sigma.shape}")
    if method == "auto":
        for a, b in ((rho, sigma), (sigma, rho)):
            psi = as_pure(b)
            if psi is not None:
                return pure_state_fidelity(a, psi)
    elif method != "general":
        raise ValueError(f"unknown method {method!r}")
    root = sqrtm_psd(sigma)
    inner = root @ rho @ root
    evals = np.linalg.eigvalsh((inner + dag(inner)) / 2)
    evals = np.where(evals > _noise_floor(evals), evals, 0.0)
    return float(np.sum(np.sqrt(evals)))


def overlap_fidelity(psi: np.ndarray, chi: np.ndarray) -> float:
    """Global-phase-insensitive overlap ``|<psi|chi>|``."""
    return float(abs(np.vdot(psi, chi)))


def same_state(psi: np.ndarray, chi: np.ndarray, tol: float = 1e-10) -> bool:
    return overlap_fidelity(psi, chi) >= 1 - tol
