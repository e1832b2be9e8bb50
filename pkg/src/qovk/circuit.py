"""Exact density-matrix simulation of the swap-test kernel circuits.

Registers are laid out top-to-bottom as ``a, Z, X, Y`` (ancilla, two input
registers of ``t`` qubits, output register of ``s`` qubits).  Qubit 0 is the
most significant bit of the flattened index.  The coupling unitary of the
operator-valued circuit acts on ``Y ⊗ X`` in that order, matching
:func:`qovk.kernels.eval_ovk`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import clinalg
from .clinalg import DEFAULT_TOL, Tolerance
from .errors import DomainError, PostSelectionError, ShapeError
from .qstates import H, as_pure, n_qubits_of

MAX_QUBITS = 12
MIN_PROBABILITY = 1e-12


@dataclass(frozen=True)
class Register:
    name: str
    qubits: int


@dataclass(eq=False)
class CircuitState:
    rho: np.ndarray
    layout: tuple[Register, ...]

    def __post_init__(self):
        total = sum(r.qubits for r in self.layout)
        if any(r.qubits < 1 for r in self.layout):
            raise DomainError("register sizes must be positive")
        if total > MAX_QUBITS:
            raise DomainError(f"{total} qubits exceeds the {MAX_QUBITS}-qubit cap")
        if self.rho.shape != (2 ** total, 2 ** total):
            raise ShapeError(f"state of shape {self.rho.shape} does not fit layout ({total} qubits)")

    @property
    def n_qubits(self) -> int:
        return sum(r.qubits for r in self.layout)

    def qubits(self, name: str) -> list[int]:
        start = 0
        for r in self.layout:
            if r.name == name:
                return list(range(start, start + r.qubits))
            start += r.qubits
        raise ShapeError(f"no register named {name!r}")

    def register(self, name: str) -> Register:
        for r in self.layout:
            if r.name == name:
                return r
        raise ShapeError(f"no register named {name!r}")

    def reduced(self, names: Sequence[str]) -> np.ndarray:
        """Reduced density matrix of ``names``, tensor-ordered as given."""
        n = self.n_qubits
        keep = [q for name in names for q in self.qubits(name)]
        drop = [q for q in range(n) if q not in keep]
        t = self.rho.reshape([2] * (2 * n))
        t = t.transpose(keep + drop + [n + q for q in keep] + [n + q for q in drop])
        dk, dd = 2 ** len(keep), 2 ** len(drop)
        return np.einsum("idjd->ij", t.reshape(dk, dd, dk, dd))


def product_state(layout: Sequence[Register], kets: Sequence) -> CircuitState:
    """Pure product state ``|k_1>|k_2>...`` over ``layout``."""
    psi = np.ones(1, dtype=np.complex128)
    for reg, k in zip(layout, kets, strict=True):
        k = as_pure(k)
        if k.size != 2 ** reg.qubits:
            raise ShapeError(f"register {reg.name} needs a {2 ** reg.qubits}-dim ket")
        psi = np.kron(psi, k)
    return CircuitState(np.outer(psi, psi.conj()), tuple(layout))


def _resolve(state: CircuitState, targets) -> list[int]:
    if isinstance(targets, str):
        targets = [targets]
    out: list[int] = []
    for t in targets:
        out.extend(state.qubits(t) if isinstance(t, str) else [int(t)])
    if len(set(out)) != len(out) or any(q < 0 or q >= state.n_qubits for q in out):
        raise ShapeError(f"invalid target selection {targets!r}")
    return out


def _apply_left(t: np.ndarray, gate: np.ndarray, axes: list[int]) -> np.ndarray:
    k = len(axes)
    moved = np.moveaxis(t, axes, range(k))
    shape = moved.shape
    out = (gate @ moved.reshape(2 ** k, -1)).reshape(shape)
    return np.moveaxis(out, range(k), axes)


def apply_gate(state: CircuitState, gate, targets, tol: Tolerance = DEFAULT_TOL) -> CircuitState:
    """``rho -> G rho G^†`` with ``G`` acting on ``targets``.

    ``targets`` is a register name, or a list of register names and/or qubit
    indices; the gate's tensor factors follow that order.
    """
    g = clinalg.as_matrix(gate)
    if not clinalg.is_unitary(g, tol):
        raise DomainError("gate is not unitary")
    qs = _resolve(state, targets)
    if g.shape[0] != 2 ** len(qs):
        raise ShapeError(f"gate of size {g.shape[0]} does not fit {len(qs)} target qubits")
    n = state.n_qubits
    t = state.rho.reshape([2] * (2 * n))
    t = _apply_left(t, g, qs)
    t = _apply_left(t, g.conj(), [n + q for q in qs])
    return CircuitState(t.reshape(2 ** n, 2 ** n), state.layout)


@dataclass(eq=False)
class MeasurementOutcome:
    probability: float
    post_state: CircuitState


def measure_postselect(state: CircuitState, register: str = "a", outcome: int = 0) -> MeasurementOutcome:
    """Project ``register`` on ``|outcome>``, discard it and renormalise."""
    qs = state.qubits(register)
    n, k = state.n_qubits, len(qs)
    if not 0 <= outcome < 2 ** k:
        raise DomainError(f"outcome {outcome} out of range for register {register}")
    rest = [q for q in range(n) if q not in qs]
    t = state.rho.reshape([2] * (2 * n))
    t = t.transpose(qs + rest + [n + q for q in qs] + [n + q for q in rest])
    dr = 2 ** len(rest)
    block = t.reshape(2 ** k, dr, 2 ** k, dr)[outcome, :, outcome, :]
    prob = float(np.real(np.trace(block)))
    if prob < MIN_PROBABILITY:
        raise PostSelectionError(f"outcome {outcome} on {register} has probability {prob:.3e}")
    layout = tuple(r for r in state.layout if r.name != register)
    return MeasurementOutcome(min(prob, 1.0), CircuitState(block / prob, layout))


def outcome_probability(state: CircuitState, register: str = "a", outcome: int = 0) -> float:
    diag = np.real(np.diag(state.reduced([register])))
    return float(diag[outcome])


def trace_out(state: CircuitState, register: str) -> CircuitState:
    names = [r.name for r in state.layout if r.name != register]
    state.register(register)
    layout = tuple(r for r in state.layout if r.name != register)
    return CircuitState(state.reduced(names), layout)


def sample_shots(state: CircuitState, register: str, shots: int, rng: np.random.Generator,
                 outcome: int = 0) -> float:
    """Empirical frequency of ``outcome`` over ``shots`` simulated measurements."""
    if shots < 1:
        raise DomainError("shots must be >= 1")
    p = outcome_probability(state, register, outcome)
    return rng.binomial(shots, min(max(p, 0.0), 1.0)) / shots


def cswap(t: int) -> np.ndarray:
    """Controlled swap of two ``t``-qubit registers; control is the first qubit."""
    d = 2 ** t
    swap = np.zeros((d * d, d * d), dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            swap[j * d + i, i * d + j] = 1.0
    out = np.zeros((2 * d * d, 2 * d * d), dtype=np.complex128)
    out[: d * d, : d * d] = np.eye(d * d)
    out[d * d:, d * d:] = swap
    return out


# -- swap-test circuits ---------------------------------------------------------


def _swap_test_layout(t: int, s: int | None = None) -> tuple[Register, ...]:
    regs = [Register("a", 1), Register("Z", t), Register("X", t)]
    if s is not None:
        regs.append(Register("Y", s))
    return tuple(regs)


def swap_test_state(psi_x, psi_z) -> CircuitState:
    """``H CSWAP H |0>_a |psi_z>_Z |psi_x>_X`` before measurement."""
    px, pz = as_pure(psi_x), as_pure(psi_z)
    if px.size != pz.size:
        raise ShapeError("swap test needs equally sized states")
    t = n_qubits_of(px.size)
    st = product_state(_swap_test_layout(t), [np.array([1, 0]), pz, px])
    st = apply_gate(st, H, "a")
    st = apply_gate(st, cswap(t), ["a", "Z", "X"])
    return apply_gate(st, H, "a")


def run_scalar_swap_test(psi_x, psi_z, shots: int | None = None,
                         rng: np.random.Generator | None = None) -> float:
    """Fidelity estimate ``2 P(|0>_a) - 1``; exact unless ``shots`` is given."""
    st = swap_test_state(psi_x, psi_z)
    if shots is None:
        p0 = measure_postselect(st, "a", 0).probability
    else:
        p0 = sample_shots(st, "a", shots, rng if rng is not None else np.random.default_rng())
    return 2.0 * p0 - 1.0


@dataclass(eq=False)
class OVKCircuitRun:
    """Every intermediate of the operator-valued swap-test circuit.

    ``psi1``..``psi4`` are full-register density matrices (layout a, Z, X, Y),
    ``eta1`` lives on (Z, X, Y), ``sigma`` on X, ``eta2`` is ordered (Y, X)
    and ``kernel`` is the ``2^s x 2^s`` value on Y.
    """

    psi1: np.ndarray
    psi2: np.ndarray
    psi3: np.ndarray
    psi4: np.ndarray
    p0: float
    eta1: np.ndarray
    sigma: np.ndarray
    eta2: np.ndarray
    kernel: np.ndarray
    states: dict = field(default_factory=dict)


def run_ovk_circuit(psi_x, psi_z, phi, u, tol: Tolerance = DEFAULT_TOL) -> OVKCircuitRun:
    px, pz, ph = as_pure(psi_x), as_pure(psi_z), as_pure(phi)
    if px.size != pz.size:
        raise ShapeError("input states must have equal dimension")
    t, s = n_qubits_of(px.size), n_qubits_of(ph.size)
    u = clinalg.as_matrix(u)
    if u.shape != (2 ** (t + s), 2 ** (t + s)):
        raise ShapeError(f"U must act on Y ⊗ X ({2 ** (t + s)}-dim), got {u.shape}")
    layout = _swap_test_layout(t, s)
    st1 = product_state(layout, [np.array([1, 0]), pz, px, ph])
    st2 = apply_gate(st1, H, "a", tol)
    st3 = apply_gate(st2, cswap(t), ["a", "Z", "X"], tol)
    st4 = apply_gate(st3, H, "a", tol)
    meas = measure_postselect(st4, "a", 0)
    eta1 = meas.post_state
    after_z = trace_out(eta1, "Z")
    sigma = after_z.reduced(["X"])
    st_eta2 = apply_gate(after_z, u, ["Y", "X"], tol)
    eta2 = st_eta2.reduced(["Y", "X"])
    kernel = st_eta2.reduced(["Y"])
    states = {"psi1": st1, "psi2": st2, "psi3": st3, "psi4": st4, "eta1": eta1,
              "sigma_xy": after_z, "eta2": st_eta2}
    return OVKCircuitRun(st1.rho, st2.rho, st3.rho, st4.rho, meas.probability,
                         eta1.rho, sigma, eta2, kernel, states)


# -- closed-form expressions ------------------------------------------------------


def closed_form_intermediates(psi_x, psi_z, phi, u) -> dict[str, np.ndarray]:
    """Analytic values of each circuit stage, written out term by term."""
    px, pz, ph = (np.asarray(v, dtype=np.complex128) for v in (psi_x, psi_z, phi))
    k0, k1 = np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)
    kron = lambda *vs: clinalg.tensor_all(*[np.asarray(v).reshape(-1, 1) for v in vs]).ravel()
    dm = lambda v: np.outer(v, v.conj())
    outer = lambda a, b: np.outer(a, b.conj())

    psi1 = kron(k0, pz, px, ph)
    psi2 = kron((k0 + k1) / np.sqrt(2), pz, px, ph)
    psi3 = (kron(k0, pz, px, ph) + kron(k1, px, pz, ph)) / np.sqrt(2)
    psi4 = 0.5 * (kron(k0, kron(pz, px) + kron(px, pz), ph)
                  + kron(k1, kron(pz, px) - kron(px, pz), ph))

    rx, rz = dm(px), dm(pz)
    zx, xz = outer(pz, px), outer(px, pz)
    a_ = np.kron(rz, rx)
    b_ = np.kron(rx, rz)
    c_ = np.kron(zx, xz)
    d_ = np.kron(xz, zx)
    e00, e01, e10, e11 = (np.outer(i, j) for i in (k0, k1) for j in (k0, k1))
    sigma_psi4 = 0.25 * (np.kron(e00, a_ + b_ + c_ + d_) + np.kron(e01, a_ - b_ - c_ + d_)
                         + np.kron(e10, a_ - b_ + c_ - d_) + np.kron(e11, a_ + b_ - c_ - d_))
    rho_psi4 = np.kron(sigma_psi4, dm(ph))

    overlap = np.vdot(pz, px)  # <psi_z|psi_x>
    norm = 2.0 * (1.0 + abs(overlap) ** 2)
    eta1 = np.kron((a_ + b_ + c_ + d_) / norm, dm(ph))
    sigma = (rx + rz + np.vdot(px, pz) * outer(px, pz) + np.vdot(pz, px) * outer(pz, px)) / norm
    eta2 = u @ np.kron(dm(ph), sigma) @ u.conj().T
    p_out = ph.size
    kernel = clinalg.partial_trace(eta2, (p_out, px.size), keep="first")
    return {
        "psi1": dm(psi1), "psi2": dm(psi2), "psi3": dm(psi3), "psi4": dm(psi4),
        "rho_psi4": rho_psi4, "p0": np.array(0.5 + 0.5 * abs(overlap) ** 2),
        "eta1": eta1, "sigma": sigma, "eta2": eta2, "kernel": kernel,
    }


EQUATIONS = ("psi1", "psi2", "psi3", "psi4", "rho_psi4", "p0", "eta1", "sigma", "eta2", "kernel")


def verify_instance(psi_x, psi_z, phi, u) -> dict[str, float]:
    """Max elementwise deviation between simulation and closed form, per stage."""
    run = run_ovk_circuit(psi_x, psi_z, phi, u)
    ref = closed_form_intermediates(psi_x, psi_z, phi, u)
    sim = {"psi1": run.psi1, "psi2": run.psi2, "psi3": run.psi3, "psi4": run.psi4,
           "rho_psi4": run.psi4, "p0": np.array(run.p0), "eta1": run.eta1,
           "sigma": run.sigma, "eta2": run.eta2, "kernel": run.kernel}
    return {k: clinalg.max_abs(sim[k] - ref[k]) for k in EQUATIONS}


def verify_circuit(n_instances: int = 50, seed: int = 0, t: int = 1, s: int = 1) -> dict:
    """Random-instance check of the full circuit against its closed forms."""
    from .qstates import random_pure_state

    rng = np.random.default_rng(seed)
    worst = {k: 0.0 for k in EQUATIONS}
    for _ in range(n_instances):
        px = random_pure_state(2 ** t, rng)
        pz = random_pure_state(2 ** t, rng)
        ph = random_pure_state(2 ** s, rng)
        u = clinalg.haar_random_unitary(2 ** (t + s), rng)
        for k, v in verify_instance(px, pz, ph, u).items():
            worst[k] = max(worst[k], v)
    return {"instances": n_instances, "seed": seed, "t": t, "s": s, "max_deviation": worst}
