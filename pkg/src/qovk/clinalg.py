"""Dense complex linear algebra used throughout the package.

Matrices are plain 2-D ``numpy`` arrays of dtype ``complex128``.  Tensor
products follow the usual Kronecker convention: the leftmost factor owns the
most significant block of the row/column index, so for registers listed
top-to-bottom ``a, Z, X, Y`` the index of ``|i>_a|j>_Z|k>_X|l>_Y`` is
``((i*dZ + j)*dX + k)*dY + l``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError, ShapeError, SingularityError, SizeError

MAX_DIM = 4096


@dataclass(frozen=True)
class Tolerance:
    """Numerical slack for structural checks.

    ``eps_structural`` bounds Hermiticity, unitarity and trace deviations;
    ``eps_psd`` is how far below zero the smallest eigenvalue may sit.
    """

    eps_structural: float = 1e-9
    eps_psd: float = 1e-8

    def __post_init__(self):
        if not (self.eps_structural > 0 and self.eps_psd > 0):
            raise DomainError("tolerances must be strictly positive")


DEFAULT_TOL = Tolerance()


class Keep(Enum):
    FIRST = "first"
    SECOND = "second"


def as_matrix(a) -> np.ndarray:
    """Coerce ``a`` to a finite 2-D complex array."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ShapeError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError("matrix has non-finite entries")
    return m


def _square(a, what="matrix") -> np.ndarray:
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise ShapeError(f"{what} must be square, got {m.shape}")
    return m


def tensor(a, b, max_dim: int = MAX_DIM) -> np.ndarray:
    """Kronecker product ``a ⊗ b``."""
    a, b = as_matrix(a), as_matrix(b)
    rows, cols = a.shape[0] * b.shape[0], a.shape[1] * b.shape[1]
    if max(rows, cols) > max_dim:
        raise SizeError(f"tensor product {rows}x{cols} exceeds max dimension {max_dim}")
    return np.kron(a, b)


def tensor_all(*factors, max_dim: int = MAX_DIM) -> np.ndarray:
    out = as_matrix(factors[0])
    for f in factors[1:]:
        out = tensor(out, f, max_dim=max_dim)
    return out


def dagger(a) -> np.ndarray:
    return as_matrix(a).conj().T


def partial_trace(m, dims: tuple[int, int], keep: Keep | str = Keep.FIRST) -> np.ndarray:
    """Trace out one factor of a bipartite operator on ``C^dA ⊗ C^dB``.

    ``keep="first"`` returns ``Tr_B[m]`` (dA x dA), ``keep="second"`` returns
    ``Tr_A[m]`` (dB x dB).
    """
    keep = Keep(keep)
    da, db = (int(d) for d in dims)
    m = _square(m)
    if da < 1 or db < 1 or m.shape[0] != da * db:
        raise ShapeError(f"side {m.shape[0]} does not equal {da}*{db}")
    t = m.reshape(da, db, da, db)
    if keep is Keep.FIRST:
        return np.einsum("ikjk->ij", t)
    return np.einsum("kikj->ij", t)


def haar_random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed ``dim x dim`` unitary.

    QR of a complex Ginibre matrix, with the phases of ``diag(R)`` pushed into
    ``Q`` so the distribution is exactly Haar (Mezzadri's correction).
    """
    if dim < 1:
        raise DomainError("dim must be >= 1")
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    ph = d / np.abs(d)
    return q * ph[np.newaxis, :]


def eigh_hermitian(a, tol: Tolerance = DEFAULT_TOL):
    a = _square(a)
    if not is_hermitian(a, tol):
        raise DomainError("matrix is not Hermitian within tolerance")
    return np.linalg.eigh((a + a.conj().T) / 2)


def min_eigenvalue_hermitian(a, tol: Tolerance = DEFAULT_TOL) -> float:
    w, _ = eigh_hermitian(a, tol)
    return float(w[0])


def solve_hermitian(a, b, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Solve ``a x = b`` for Hermitian positive-definite ``a``.

    Uses a Cholesky factorisation; on failure the minimum eigenvalue is
    computed and reported through :class:`SingularityError`.
    """
    a = _square(a)
    b_arr = np.asarray(b, dtype=np.complex128)
    vector_rhs = b_arr.ndim == 1
    b2 = b_arr.reshape(-1, 1) if vector_rhs else as_matrix(b_arr)
    if b2.shape[0] != a.shape[0]:
        raise ShapeError(f"rhs has {b2.shape[0]} rows, system has {a.shape[0]}")
    if not is_hermitian(a, tol):
        raise DomainError("system matrix is not Hermitian within tolerance")
    h = (a + a.conj().T) / 2
    try:
        low = np.linalg.cholesky(h)
    except np.linalg.LinAlgError:
        raise SingularityError("system matrix is not positive definite",
                               np.linalg.eigvalsh(h)[0]) from None
    y = np.linalg.solve(low, b2)
    x = np.linalg.solve(low.conj().T, y)
    return x.ravel() if vector_rhs else x


def frobenius_norm(a) -> float:
    return float(np.linalg.norm(as_matrix(a), "fro"))


def max_abs(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def is_hermitian(a, tol: Tolerance = DEFAULT_TOL) -> bool:
    a = as_matrix(a)
    return a.shape[0] == a.shape[1] and max_abs(a - a.conj().T) <= tol.eps_structural


def is_unitary(a, tol: Tolerance = DEFAULT_TOL) -> bool:
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        return False
    return max_abs(a.conj().T @ a - np.eye(a.shape[0])) <= tol.eps_structural


def is_density(a, tol: Tolerance = DEFAULT_TOL) -> bool:
    a = as_matrix(a)
    if not is_hermitian(a, tol):
        return False
    if abs(np.trace(a) - 1) > tol.eps_structural:
        return False
    return min_eigenvalue_hermitian(a, tol) >= -tol.eps_psd


def basis_ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=np.complex128)
    v[index] = 1.0
    return v


def matrix_to_json(a) -> dict:
    """``{"rows", "cols", "re", "im"}`` with row-major entries."""
    a = as_matrix(a)
    flat = a.ravel(order="C")
    return {
        "rows": int(a.shape[0]),
        "cols": int(a.shape[1]),
        "re": [float(v) for v in flat.real],
        "im": [float(v) for v in flat.imag],
    }


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        rows, cols = int(obj["rows"]), int(obj["cols"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj["im"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise ShapeError(f"malformed matrix JSON: {exc}") from None
    if rows < 1 or cols < 1 or re.size != rows * cols or im.size != rows * cols:
        raise ShapeError("matrix JSON entry count does not match rows*cols")
    return as_matrix((re + 1j * im).reshape(rows, cols))
