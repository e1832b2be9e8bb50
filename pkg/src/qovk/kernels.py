"""Quantum scalar- and operator-valued kernels.

The operator-valued kernel maps a pair of input states to a ``p x p`` matrix

    K(x, z) = Tr_X[ U (rho_Y ⊗ sigma_X^{x,z}) U^† ]     (unitary dilation)
    K(x, z) = sum_i M_i sigma_X^{x,z} M_i^†             (Kraus form)

with the output register ``Y`` as the first tensor factor and the input
register ``X`` as the second.  ``sigma_X^{x,z}`` is produced by a
:class:`FeatureRule`.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Union

import numpy as np

from . import clinalg
from .clinalg import DEFAULT_TOL, Keep, Tolerance
from .errors import DomainError, ShapeError
from .qstates import I2, X, Y, Z

PAULIS = (I2, X, Y, Z)
PURITY_TOL = 1e-8


class FeatureRule(str, Enum):
    """How the input feature matrix ``sigma^{x,z}`` is built from two states.

    ``PRODUCT``      ``rho_x rho_z`` (m = input dim).
    ``SYMMETRIZED``  the normalised matrix left on register X by the swap-test
                     circuit after post-selection; pure inputs only.
    ``VECTORIZED``   ``vec(rho_x) vec(rho_z)^†`` with column-major ``vec``
                     (m = input dim squared); linear in each argument.
    """

    PRODUCT = "product"
    SYMMETRIZED = "symmetrized"
    VECTORIZED = "vectorized"


def vec(m) -> np.ndarray:
    """Column-major vectorisation."""
    return clinalg.as_matrix(m).reshape(-1, order="F")


def feature_dim(rule: FeatureRule, input_dim: int) -> int:
    return input_dim ** 2 if FeatureRule(rule) is FeatureRule.VECTORIZED else input_dim


def leading_vector(rho, tol: float = PURITY_TOL) -> np.ndarray:
    """Unit vector ``psi`` with ``rho = |psi><psi|``; raises if ``rho`` is mixed."""
    arr = np.asarray(rho, dtype=np.complex128)
    if arr.ndim == 1:
        return arr / np.linalg.norm(arr)
    w, v = clinalg.eigh_hermitian(arr)
    if (w.size > 1 and w[-2] > tol) or abs(w[-1] - 1) > tol:
        raise DomainError("symmetrized feature rule requires pure (rank-1) inputs")
    return v[:, -1]


def symmetrized_feature(psi_x, psi_z) -> np.ndarray:
    """Register-X state after the post-selected swap test.

    ``[rho_x + rho_z + <x|z>|x><z| + <z|x>|z><x|] / (2 (1 + |<z|x>|^2))``
    """
    px, pz = np.asarray(psi_x), np.asarray(psi_z)
    ov = np.vdot(px, pz)  # <x|z>
    num = (np.outer(px, px.conj()) + np.outer(pz, pz.conj())
           + ov * np.outer(px, pz.conj()) + ov.conjugate() * np.outer(pz, px.conj()))
    return num / (2.0 * (1.0 + abs(ov) ** 2))


def feature_matrix(rule: FeatureRule | str, rho_x, rho_z) -> np.ndarray:
    rule = FeatureRule(rule)
    if rule is FeatureRule.SYMMETRIZED:
        px, pz = leading_vector(rho_x), leading_vector(rho_z)
        if px.size != pz.size:
            raise ShapeError("input states have different dimensions")
        return symmetrized_feature(px, pz)
    a, b = clinalg.as_matrix(rho_x), clinalg.as_matrix(rho_z)
    if a.shape != b.shape or a.shape[0] != a.shape[1]:
        raise ShapeError(f"input states must be square and equal-sized: {a.shape} vs {b.shape}")
    if rule is FeatureRule.PRODUCT:
        return a @ b
    return np.outer(vec(a), vec(b).conj())


def scalar_kernel(rho_x, rho_z) -> float:
    """Fidelity-type kernel ``Tr[rho_x rho_z]``."""
    a, b = clinalg.as_matrix(rho_x), clinalg.as_matrix(rho_z)
    if a.shape != b.shape:
        raise ShapeError(f"dimension mismatch {a.shape} vs {b.shape}")
    # Tr[AB] without forming AB
    return float(np.real(np.sum(a * b.T)))


# -- kernel specifications --------------------------------------------------


@dataclass(frozen=True, eq=False)
class UnitaryDilation:
    unitary: np.ndarray
    rho_y: np.ndarray


@dataclass(frozen=True, eq=False)
class KrausForm:
    ops: tuple


@dataclass(frozen=True)
class ScalarKernel:
    """Marker for the scalar kernel ``Tr[rho_x rho_z]`` (blocks of size 1)."""

    p: int = 1


SCALAR = ScalarKernel()


@dataclass(frozen=True, eq=False)
class OVKernelSpec:
    feature_rule: FeatureRule
    coupling: Union[UnitaryDilation, KrausForm]
    p: int
    m: int
    tol: Tolerance = DEFAULT_TOL

    def __post_init__(self):
        object.__setattr__(self, "feature_rule", FeatureRule(self.feature_rule))
        if self.p < 1 or self.m < 1:
            raise DomainError("p and m must be positive")
        c = self.coupling
        if isinstance(c, UnitaryDilation):
            u = clinalg.as_matrix(c.unitary)
            if u.shape != (self.p * self.m, self.p * self.m):
                raise ShapeError(f"U must be {self.p * self.m}x{self.p * self.m}, got {u.shape}")
            if not clinalg.is_unitary(u, self.tol):
                raise DomainError("coupling U is not unitary")
            ry_ = clinalg.as_matrix(c.rho_y)
            if ry_.shape != (self.p, self.p):
                raise ShapeError(f"rho_Y must be {self.p}x{self.p}")
            if not clinalg.is_density(ry_, self.tol):
                raise DomainError("rho_Y is not a density matrix")
        elif isinstance(c, KrausForm):
            if not c.ops:
                raise DomainError("Kraus form needs at least one operator")
            for op in c.ops:
                if clinalg.as_matrix(op).shape != (self.p, self.m):
                    raise ShapeError(f"Kraus operators must be {self.p}x{self.m}")
        else:
            raise DomainError(f"unknown coupling {type(c).__name__}")


def unitary_kernel(u, rho_y, rule=FeatureRule.SYMMETRIZED, m: int | None = None) -> OVKernelSpec:
    rho_y = clinalg.as_matrix(rho_y)
    p = rho_y.shape[0]
    u = clinalg.as_matrix(u)
    return OVKernelSpec(rule, UnitaryDilation(u, rho_y), p=p, m=m or u.shape[0] // p)


def kraus_kernel(ops: Sequence, rule=FeatureRule.PRODUCT) -> OVKernelSpec:
    ops = tuple(clinalg.as_matrix(o) for o in ops)
    p, m = ops[0].shape
    return OVKernelSpec(rule, KrausForm(ops), p=p, m=m)


def eval_ovk(spec: OVKernelSpec, rho_x, rho_z) -> np.ndarray:
    sigma = feature_matrix(spec.feature_rule, rho_x, rho_z)
    if sigma.shape != (spec.m, spec.m):
        raise ShapeError(f"feature matrix is {sigma.shape}, kernel expects {spec.m}x{spec.m}")
    c = spec.coupling
    if isinstance(c, UnitaryDilation):
        u = c.unitary
        joint = u @ np.kron(c.rho_y, sigma) @ u.conj().T
        return clinalg.partial_trace(joint, (spec.p, spec.m), keep=Keep.FIRST)
    return sum(op @ sigma @ op.conj().T for op in c.ops)


def evaluate(kernel, rho_x, rho_z) -> np.ndarray:
    """Kernel value as a ``p x p`` matrix for either kernel kind."""
    if isinstance(kernel, ScalarKernel):
        return np.array([[scalar_kernel(rho_x, rho_z)]], dtype=np.complex128)
    return eval_ovk(kernel, rho_x, rho_z)


def pauli_strings(n_qubits: int) -> list[np.ndarray]:
    out = [np.eye(1, dtype=np.complex128)]
    for _ in range(n_qubits):
        out = [np.kron(a, s) for a in out for s in PAULIS]
    return out


def pauli_kraus_set(p: int) -> list[np.ndarray]:
    """All Pauli strings on ``log2 p`` qubits, scaled so ``sum M^† M = I``."""
    if p not in (2, 4):
        raise DomainError(f"Pauli Kraus set defined for p in {{2, 4}}, got {p}")
    ops = pauli_strings(1 if p == 2 else 2)
    return [op / np.sqrt(len(ops)) for op in ops]


def pauli_superoperator_kraus_set(n_qubits: int = 1) -> list[np.ndarray]:
    """Column-major superoperators ``conj(P) ⊗ P`` of the Pauli conjugations.

    ``vec(P rho P^†) = (conj(P) ⊗ P) vec(rho)``, so with the vectorized
    feature rule these Kraus operators span exactly the Pauli-diagonal maps.
    Scaled so that ``sum M^† M = I``.
    """
    strings = pauli_strings(n_qubits)
    scale = 1.0 / np.sqrt(len(strings))
    return [np.kron(s.conj(), s) * scale for s in strings]


def operator_schmidt_values(u, p: int, m: int) -> np.ndarray:
    """Singular values of the realigned ``U``; one nonzero value iff ``U = A ⊗ B``."""
    u = clinalg.as_matrix(u)
    r = u.reshape(p, m, p, m).transpose(0, 2, 1, 3).reshape(p * p, m * m)
    return np.linalg.svd(r, compute_uv=False)


def is_separable_unitary(u, p: int, m: int, tol: float = 1e-6) -> bool:
    s = operator_schmidt_values(u, p, m)
    return s.size < 2 or s[1] <= tol * s[0]


def entangled_unitary(p: int, m: int, rng: np.random.Generator, tol: float = 1e-6,
                      max_tries: int = 100) -> np.ndarray:
    """Haar unitary on ``C^p ⊗ C^m``, resampled while it is (nearly) a product."""
    for _ in range(max_tries):
        u = clinalg.haar_random_unitary(p * m, rng)
        if not is_separable_unitary(u, p, m, tol):
            return u
    raise DomainError("could not draw a non-separable unitary")


# -- Gram matrices -----------------------------------------------------------


@dataclass(eq=False)
class BlockGram:
    """``n x n`` grid of ``p x p`` blocks, stored as an ``(n, n, p, p)`` array."""

    blocks: np.ndarray

    @property
    def n(self) -> int:
        return self.blocks.shape[0]

    @property
    def p(self) -> int:
        return self.blocks.shape[2]

    def flatten(self) -> np.ndarray:
        n, p = self.n, self.p
        return self.blocks.transpose(0, 2, 1, 3).reshape(n * p, n * p)

    @classmethod
    def from_flat(cls, g, p: int) -> "BlockGram":
        g = clinalg.as_matrix(g)
        n = g.shape[0] // p
        return cls(g.reshape(n, p, n, p).transpose(0, 2, 1, 3).copy())

    def hermitian_deviation(self) -> float:
        b = self.blocks
        return clinalg.max_abs(b - b.transpose(1, 0, 3, 2).conj())


def gram(kernel, data: Sequence) -> BlockGram:
    """Block Gram matrix ``G[i, j] = K(x_i, x_j)``.

    Each pair is independent, so evaluation order has no effect on the result.
    """
    if len(data) == 0:
        raise DomainError("gram needs at least one sample")
    data = [np.asarray(d, dtype=np.complex128) for d in data]
    if len({d.shape for d in data}) != 1:
        raise ShapeError("all samples must share one shape")
    n, p = len(data), kernel.p
    blocks = np.empty((n, n, p, p), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            blocks[i, j] = evaluate(kernel, data[i], data[j])
    return BlockGram(blocks)


@dataclass
class PsdReport:
    min_eigenvalue: float
    min_quadratic_form: float | None
    hermitian_deviation: float
    violation: bool


def validate_psd(g: BlockGram, probes=None, tol: Tolerance = DEFAULT_TOL) -> PsdReport:
    """Diagnose the two positive-semidefiniteness axioms of an OVK Gram.

    ``probes`` is an array of shape ``(k, n, p)`` (or ``(n, p)``): each probe
    assigns one output vector ``y_i`` per sample and contributes the value
    ``sum_ij <y_i, G[i, j] y_j>``.
    """
    flat = g.flatten()
    herm_dev = g.hermitian_deviation()
    min_eig = float(np.linalg.eigvalsh((flat + flat.conj().T) / 2)[0])
    min_q = None
    if probes is not None:
        pr = np.asarray(probes, dtype=np.complex128)
        if pr.ndim == 2:
            pr = pr[np.newaxis]
        if pr.shape[1:] != (g.n, g.p):
            raise ShapeError(f"probes must have shape (k, {g.n}, {g.p})")
        ys = pr.reshape(pr.shape[0], -1)
        q = np.einsum("ki,ij,kj->k", ys.conj(), flat, ys)
        min_q = float(np.min(q.real))
    violation = (herm_dev > tol.eps_structural or min_eig < -tol.eps_psd
                 or (min_q is not None and min_q < -tol.eps_psd))
    return PsdReport(min_eig, min_q, herm_dev, bool(violation))


# -- serialisation -------------------------------------------------------------


def kernel_to_json(kernel) -> dict:
    if isinstance(kernel, ScalarKernel):
        return {"feature_rule": "scalar", "coupling": {"type": "scalar"}, "p": 1, "m": None}
    c = kernel.coupling
    if isinstance(c, UnitaryDilation):
        coupling = {"type": "unitary", "U": clinalg.matrix_to_json(c.unitary),
                    "rho_Y": clinalg.matrix_to_json(c.rho_y)}
    else:
        coupling = {"type": "kraus", "ops": [clinalg.matrix_to_json(o) for o in c.ops]}
    return {"feature_rule": kernel.feature_rule.value, "coupling": coupling,
            "p": kernel.p, "m": kernel.m}


def kernel_from_json(obj: dict):
    c = obj["coupling"]
    kind = c.get("type")
    if kind == "scalar":
        return SCALAR
    if kind == "unitary":
        coupling = UnitaryDilation(clinalg.matrix_from_json(c["U"]),
                                   clinalg.matrix_from_json(c["rho_Y"]))
    elif kind == "kraus":
        coupling = KrausForm(tuple(clinalg.matrix_from_json(o) for o in c["ops"]))
    else:
        raise DomainError(f"unknown coupling type {kind!r}")
    return OVKernelSpec(FeatureRule(obj["feature_rule"]), coupling, int(obj["p"]), int(obj["m"]))
