"""Pure and mixed quantum states, data encodings and fidelity.

Pure states are 1-D complex arrays of unit norm; density matrices are 2-D
complex arrays that are Hermitian, unit trace and positive semidefinite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import clinalg
from .clinalg import DEFAULT_TOL, Tolerance
from .errors import DomainError, ShapeError

X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
I2 = np.eye(2, dtype=np.complex128)
H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2.0)


def ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def as_pure(psi, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    v = np.asarray(psi, dtype=np.complex128).ravel()
    if v.size < 1 or not np.all(np.isfinite(v)):
        raise DomainError("state vector must be non-empty and finite")
    if abs(np.linalg.norm(v) - 1) > tol.eps_structural:
        raise DomainError(f"state vector has norm {np.linalg.norm(v):.12f}, expected 1")
    return v


def as_density(rho, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    m = clinalg.as_matrix(rho)
    if not clinalg.is_density(m, tol):
        raise DomainError("matrix is not a valid density matrix")
    return m


def zero_state(n_qubits: int) -> np.ndarray:
    return clinalg.basis_ket(0, 2 ** n_qubits)


def n_qubits_of(dim: int) -> int:
    t = int(round(np.log2(dim)))
    if 2 ** t != dim:
        raise ShapeError(f"dimension {dim} is not a power of two")
    return t


# -- encoders ---------------------------------------------------------------


def _cnot(control: int, target: int, n: int) -> np.ndarray:
    dim = 2 ** n
    u = np.zeros((dim, dim), dtype=np.complex128)
    for idx in range(dim):
        bits = [(idx >> (n - 1 - q)) & 1 for q in range(n)]
        if bits[control]:
            bits[target] ^= 1
        out = 0
        for b in bits:
            out = (out << 1) | b
        u[out, idx] = 1.0
    return u


@dataclass(frozen=True)
class AngleEncoder:
    """One qubit per feature: ``R_y(x_j)`` on qubit ``j``, then a CNOT ring.

    The ring is ``CNOT(j, j+1 mod t)`` for every ``j`` when ``t > 2``, a
    single ``CNOT(0, 1)`` when ``t == 2`` and empty for one qubit.
    """

    n_qubits: int

    def __post_init__(self):
        if self.n_qubits < 1:
            raise DomainError("n_qubits must be positive")

    def entangler(self) -> np.ndarray:
        n = self.n_qubits
        u = np.eye(2 ** n, dtype=np.complex128)
        if n == 2:
            edges = [(0, 1)]
        elif n > 2:
            edges = [(j, (j + 1) % n) for j in range(n)]
        else:
            edges = []
        for c, t in edges:
            u = _cnot(c, t, n) @ u
        return u

    def unitary(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.n_qubits:
            raise ShapeError(f"expected {self.n_qubits} features, got {x.size}")
        return self.entangler() @ clinalg.tensor_all(*[ry(v) for v in x])


@dataclass(frozen=True)
class GivenUnitaryEncoder:
    """Encoder backed by a user-supplied ``x -> U_x`` map."""

    unitary_fn: Callable[[np.ndarray], np.ndarray]
    tol: Tolerance = field(default=DEFAULT_TOL)

    def unitary(self, x) -> np.ndarray:
        u = clinalg.as_matrix(self.unitary_fn(np.asarray(x, dtype=float)))
        if not clinalg.is_unitary(u, self.tol):
            raise DomainError("encoder returned a non-unitary matrix")
        return u


def encode(encoder, x) -> np.ndarray:
    """Return ``U_x |0_t>``."""
    u = encoder.unitary(x)
    return u[:, 0].copy()


# -- states ------------------------------------------------------------------


def to_density(psi) -> np.ndarray:
    v = as_pure(psi)
    return np.outer(v, v.conj())


def fidelity_pure(psi_x, psi_z) -> float:
    """``|<psi_x|psi_z>|^2``."""
    a, b = as_pure(psi_x), as_pure(psi_z)
    if a.size != b.size:
        raise ShapeError(f"state dimensions differ: {a.size} vs {b.size}")
    return float(min(1.0, abs(np.vdot(a, b)) ** 2))


def purity(rho) -> float:
    m = clinalg.as_matrix(rho)
    return float(np.real(np.trace(m @ m)))


def random_pure_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def random_density(dim: int, rank: int, rng: np.random.Generator) -> np.ndarray:
    """Hilbert-Schmidt style random state ``G G^† / Tr`` from a ``dim x rank`` Ginibre ``G``."""
    if not 1 <= rank <= dim:
        raise DomainError(f"rank must lie in [1, {dim}], got {rank}")
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    rho = rho / np.trace(rho).real
    return (rho + rho.conj().T) / 2


def state_to_json(state) -> dict:
    arr = np.asarray(state, dtype=np.complex128)
    if arr.ndim == 1:
        return {"kind": "pure", **clinalg.matrix_to_json(arr.reshape(-1, 1))}
    return {"kind": "density", **clinalg.matrix_to_json(arr)}


def state_from_json(obj: dict) -> np.ndarray:
    kind = obj.get("kind", "density")
    m = clinalg.matrix_from_json(obj)
    if kind == "pure":
        return as_pure(m.ravel())
    if kind == "density":
        return as_density(m)
    raise DomainError(f"unknown state kind {kind!r}")


def densities(states: Sequence) -> list[np.ndarray]:
    """Promote a mix of pure vectors and density matrices to densities."""
    out = []
    for s in states:
        arr = np.asarray(s, dtype=np.complex128)
        out.append(to_density(arr) if arr.ndim == 1 else clinalg.as_matrix(arr))
    return out
