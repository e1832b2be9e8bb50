"""Quantum channels in Kraus and Choi form, noise, and channel recovery.

Choi convention: ``J(Phi) = sum_ij |i><j| ⊗ Phi(|i><j|)``, input factor
first, unnormalised.  With it ``Phi(rho) = Tr_in[J (rho^T ⊗ I_b)]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import clinalg
from .clinalg import DEFAULT_TOL, Keep, Tolerance
from .errors import DomainError, ReconstructionError, ShapeError, ValidityError
from .kernels import pauli_strings
from .qstates import n_qubits_of


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """CPTP map from ``a x a`` to ``b x b`` matrices.

    Exactly one of ``kraus`` (operators of shape ``b x a``) or ``choi``
    (``ab x ab``) is set.
    """

    in_dim: int
    out_dim: int
    kraus: tuple | None = None
    choi: np.ndarray | None = None

    def __post_init__(self):
        if (self.kraus is None) == (self.choi is None):
            raise DomainError("give exactly one of kraus or choi")
        if self.kraus is not None:
            for op in self.kraus:
                if np.shape(op) != (self.out_dim, self.in_dim):
                    raise ShapeError(f"Kraus operators must be {self.out_dim}x{self.in_dim}")
        elif np.shape(self.choi) != (self.in_dim * self.out_dim,) * 2:
            raise ShapeError("Choi matrix has the wrong size")

    @property
    def rep(self) -> str:
        return "kraus" if self.kraus is not None else "choi"


def kraus_channel(ops: Sequence) -> QuantumChannel:
    ops = tuple(clinalg.as_matrix(o) for o in ops)
    b, a = ops[0].shape
    return QuantumChannel(a, b, kraus=ops)


def identity_channel(dim: int) -> QuantumChannel:
    return kraus_channel([np.eye(dim)])


def tp_deviation(ch: QuantumChannel) -> float:
    """``max |sum A^† A - I|`` (or the Choi equivalent)."""
    if ch.kraus is not None:
        s = sum(op.conj().T @ op for op in ch.kraus)
        return clinalg.max_abs(s - np.eye(ch.in_dim))
    red = clinalg.partial_trace(ch.choi, (ch.in_dim, ch.out_dim), keep=Keep.FIRST)
    return clinalg.max_abs(red - np.eye(ch.in_dim))


def apply(ch: QuantumChannel, rho) -> np.ndarray:
    rho = clinalg.as_matrix(rho)
    if rho.shape != (ch.in_dim, ch.in_dim):
        raise ShapeError(f"channel expects {ch.in_dim}x{ch.in_dim} input, got {rho.shape}")
    if ch.kraus is not None:
        return sum(op @ rho @ op.conj().T for op in ch.kraus)
    a, b = ch.in_dim, ch.out_dim
    joint = ch.choi @ np.kron(rho.T, np.eye(b))
    return clinalg.partial_trace(joint, (a, b), keep=Keep.SECOND)


def to_choi(ch: QuantumChannel) -> np.ndarray:
    if ch.choi is not None:
        return ch.choi.copy()
    # sum_ij |i><j| ⊗ A|i><j|A^† = sum_k vec_row(A_k^T) vec_row(A_k^T)^†
    a, b = ch.in_dim, ch.out_dim
    j = np.zeros((a * b, a * b), dtype=np.complex128)
    for op in ch.kraus:
        v = op.T.reshape(-1)
        j += np.outer(v, v.conj())
    return j


def choi_diagnostics(m, a: int, b: int, tol: Tolerance = DEFAULT_TOL) -> dict:
    m = clinalg.as_matrix(m)
    herm = clinalg.max_abs(m - m.conj().T)
    min_eig = float(np.linalg.eigvalsh((m + m.conj().T) / 2)[0])
    red = clinalg.partial_trace(m, (a, b), keep=Keep.FIRST)
    tp = clinalg.max_abs(red - np.eye(a))
    return {
        "hermitian_deviation": herm,
        "min_eigenvalue": min_eig,
        "tp_deviation": tp,
        "valid": bool(herm <= tol.eps_structural and min_eig >= -tol.eps_psd
                      and tp <= tol.eps_structural),
    }


def from_choi(m, a: int, b: int, tol: Tolerance = DEFAULT_TOL) -> QuantumChannel:
    m = clinalg.as_matrix(m)
    if m.shape != (a * b, a * b):
        raise ShapeError(f"Choi matrix must be {a * b}x{a * b}")
    diag = choi_diagnostics(m, a, b, tol)
    if not diag["valid"]:
        raise ValidityError("matrix is not the Choi matrix of a CPTP map", diag)
    return QuantumChannel(a, b, choi=(m + m.conj().T) / 2)


def to_kraus(ch: QuantumChannel, cutoff: float = 1e-12) -> QuantumChannel:
    if ch.kraus is not None:
        return ch
    a, b = ch.in_dim, ch.out_dim
    w, v = np.linalg.eigh(ch.choi)
    ops = [np.sqrt(lam) * v[:, k].reshape(a, b).T for k, lam in enumerate(w) if lam > cutoff]
    return QuantumChannel(a, b, kraus=tuple(ops))


def pauli_channel(probs) -> QuantumChannel:
    """``rho -> sum_k p_k P_k rho P_k`` over all Pauli strings."""
    probs = np.asarray(probs, dtype=float)
    n = {4: 1, 16: 2}.get(probs.size)
    if n is None:
        raise DomainError("Pauli channel needs 4 or 16 probabilities")
    if np.any(probs < -1e-12) or abs(probs.sum() - 1) > 1e-12:
        raise DomainError("Pauli probabilities must lie on the simplex")
    probs = np.clip(probs, 0.0, None)
    return kraus_channel([np.sqrt(p) * s for p, s in zip(probs, pauli_strings(n))])


def random_pauli_channel(dim: int, rng: np.random.Generator) -> QuantumChannel:
    """Pauli channel with probabilities drawn from a flat Dirichlet."""
    if dim not in (2, 4):
        raise DomainError(f"Pauli channels supported for dim 2 or 4, got {dim}")
    k = dim * dim
    return pauli_channel(rng.dirichlet(np.ones(k)))


def depolarize(rho, lam: float) -> np.ndarray:
    """``(1 - lam) rho + lam I / p``."""
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"depolarizing strength must be in [0, 1], got {lam}")
    rho = clinalg.as_matrix(rho)
    p = rho.shape[0]
    return (1.0 - lam) * rho + (lam / p) * np.eye(p)


def depolarizing_channel(dim: int, lam: float) -> QuantumChannel:
    """Kraus form of :func:`depolarize` on qubit registers."""
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"depolarizing strength must be in [0, 1], got {lam}")
    n = n_qubits_of(dim)
    k = 4 ** n
    probs = np.full(k, lam / k)
    probs[0] += 1.0 - lam
    return pauli_channel(probs)


# -- reconstruction ------------------------------------------------------------

_QUBIT_PROBES = (
    np.array([[1, 0], [0, 0]], dtype=complex),
    np.array([[0, 0], [0, 1]], dtype=complex),
    np.array([[1, 1], [1, 1]], dtype=complex) / 2,
    np.array([[1, -1j], [1j, 1]], dtype=complex) / 2,
)


def probe_states(dim: int) -> list[np.ndarray]:
    """Tomographically complete product probes ``{|0>,|1>,|+>,|+i>}^{⊗n}``."""
    n = n_qubits_of(dim)
    out = [np.eye(1, dtype=complex)]
    for _ in range(n):
        out = [np.kron(a, p) for a in out for p in _QUBIT_PROBES]
    return out


@dataclass(eq=False)
class ChannelCandidate:
    """Raw reconstructed Choi matrix plus its validity report (no CPTP projection)."""

    choi: np.ndarray
    in_dim: int
    out_dim: int
    report: dict = field(default_factory=dict)


def reconstruct_channel(predictor: Callable[[np.ndarray], np.ndarray], a: int,
                        tol: Tolerance = DEFAULT_TOL) -> ChannelCandidate:
    """Linear tomography of ``predictor`` on the canonical probe set.

    Each matrix unit ``|i><j|`` is written as a combination of probe
    densities; linearity then gives ``Phi(|i><j|)`` from the probe outputs.
    """
    probes = probe_states(a)
    basis = np.stack([p.reshape(-1) for p in probes], axis=1)  # a^2 x a^2
    cond = np.linalg.cond(basis)
    if not np.isfinite(cond) or cond > 1e12:
        raise ReconstructionError(f"probe system is singular (condition {cond:.3e})")
    outputs = [clinalg.as_matrix(predictor(p)) for p in probes]
    b = outputs[0].shape[0]
    if any(o.shape != (b, b) for o in outputs):
        raise ShapeError("predictor outputs must be square and equal-sized")
    coeffs = np.linalg.solve(basis, np.eye(a * a, dtype=complex))  # column (i*a+j) -> E_ij
    out_stack = np.stack(outputs)
    choi = np.zeros((a * b, a * b), dtype=np.complex128)
    for i in range(a):
        for j in range(a):
            phi_ij = np.tensordot(coeffs[:, i * a + j], out_stack, axes=1)
            choi[i * b:(i + 1) * b, j * b:(j + 1) * b] = phi_ij
    report = choi_diagnostics(choi, a, b, tol)
    report["probe_condition"] = float(cond)
    return ChannelCandidate(choi, a, b, report)


def recovery_error(true_ch, learned) -> float:
    """Frobenius distance between Choi matrices."""
    def choi_of(c):
        if isinstance(c, QuantumChannel):
            return to_choi(c)
        if isinstance(c, ChannelCandidate):
            return c.choi
        return clinalg.as_matrix(c)

    ja, jb = choi_of(true_ch), choi_of(learned)
    if ja.shape != jb.shape:
        raise ShapeError(f"Choi shapes differ: {ja.shape} vs {jb.shape}")
    return clinalg.frobenius_norm(ja - jb)


# -- serialisation ---------------------------------------------------------------


def channel_to_json(ch: QuantumChannel) -> dict:
    out = {"in_dim": ch.in_dim, "out_dim": ch.out_dim, "rep": ch.rep}
    if ch.kraus is not None:
        out["ops"] = [clinalg.matrix_to_json(o) for o in ch.kraus]
    else:
        out["choi"] = clinalg.matrix_to_json(ch.choi)
    return out


def channel_from_json(obj: dict) -> QuantumChannel:
    a, b = int(obj["in_dim"]), int(obj["out_dim"])
    if obj.get("rep") == "kraus":
        return QuantumChannel(a, b, kraus=tuple(clinalg.matrix_from_json(o) for o in obj["ops"]))
    if obj.get("rep") == "choi":
        return QuantumChannel(a, b, choi=clinalg.matrix_from_json(obj["choi"]))
    raise DomainError(f"unknown channel rep {obj.get('rep')!r}")
