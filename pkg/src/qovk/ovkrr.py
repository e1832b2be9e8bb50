"""Kernel ridge regression with operator-valued (and scalar) kernels over C.

The fitted function is ``f(x) = sum_i K(x, x_i) c_i`` with coefficients
solving ``(G + ridge I) c = y`` on the flattened block Gram matrix.  For the
scalar kernel the same ``n x n`` system is solved once per output coordinate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import clinalg, kernels
from .clinalg import DEFAULT_TOL, Tolerance
from .errors import DomainError, ShapeError
from .kernels import ScalarKernel


def vectorize(m) -> np.ndarray:
    """Column-major ``vec``."""
    return clinalg.as_matrix(m).reshape(-1, order="F")


def unvectorize(v, b: int) -> np.ndarray:
    v = np.asarray(v, dtype=np.complex128).ravel()
    if v.size != b * b:
        raise ShapeError(f"vector of length {v.size} cannot form a {b}x{b} matrix")
    return v.reshape(b, b, order="F")


@dataclass(eq=False)
class TrainingSet:
    inputs: list
    labels: np.ndarray  # (n, p)

    def __post_init__(self):
        self.inputs = [clinalg.as_matrix(x) for x in self.inputs]
        self.labels = np.atleast_2d(np.asarray(self.labels, dtype=np.complex128))
        if len(self.inputs) == 0:
            raise DomainError("training set is empty")
        if len(self.inputs) != self.labels.shape[0]:
            raise ShapeError("inputs and labels differ in length")
        if len({x.shape for x in self.inputs}) != 1:
            raise ShapeError("inputs must share one shape")

    @property
    def n(self) -> int:
        return len(self.inputs)

    @property
    def p(self) -> int:
        return self.labels.shape[1]

    @classmethod
    def from_matrices(cls, inputs: Sequence, outputs: Sequence) -> "TrainingSet":
        return cls(list(inputs), np.stack([vectorize(o) for o in outputs]))


@dataclass(eq=False)
class RegressionModel:
    kernel: object
    coefficients: np.ndarray  # (n, p)
    ridge: float
    inputs: list
    residual: float = 0.0

    @property
    def p(self) -> int:
        return self.coefficients.shape[1]


def _symmetrize(g: np.ndarray, tol: Tolerance) -> np.ndarray:
    dev = clinalg.max_abs(g - g.conj().T)
    if dev > tol.eps_structural * max(1.0, clinalg.max_abs(g)):
        raise DomainError(f"Gram matrix is not Hermitian (deviation {dev:.3e})")
    return (g + g.conj().T) / 2


def fit(ts: TrainingSet, kernel, ridge: float = 1e-3, tol: Tolerance = DEFAULT_TOL) -> RegressionModel:
    if not ridge > 0:
        raise DomainError("ridge must be strictly positive")
    n, p = ts.n, ts.p
    if isinstance(kernel, ScalarKernel):
        g = _symmetrize(kernels.gram(kernel, ts.inputs).flatten(), tol)
        system = g + ridge * np.eye(n)
        coef = clinalg.solve_hermitian(system, ts.labels, tol)
        resid = clinalg.frobenius_norm(system @ coef - ts.labels)
    else:
        if kernel.p != p:
            raise ShapeError(f"kernel output dim {kernel.p} does not match label length {p}")
        g = _symmetrize(kernels.gram(kernel, ts.inputs).flatten(), tol)
        system = g + ridge * np.eye(n * p)
        y = ts.labels.reshape(-1)
        c = clinalg.solve_hermitian(system, y, tol)
        resid = float(np.linalg.norm(system @ c - y))
        coef = c.reshape(n, p)
    ynorm = float(np.linalg.norm(ts.labels))
    return RegressionModel(kernel, coef, float(ridge), list(ts.inputs),
                           resid / ynorm if ynorm > 0 else resid)


def predict(model: RegressionModel, x) -> np.ndarray:
    x = clinalg.as_matrix(x)
    if x.shape != model.inputs[0].shape:
        raise ShapeError(f"input shape {x.shape} does not match training shape {model.inputs[0].shape}")
    if isinstance(model.kernel, ScalarKernel):
        k = np.array([kernels.scalar_kernel(x, xi) for xi in model.inputs])
        return k @ model.coefficients
    out = np.zeros(model.p, dtype=np.complex128)
    for xi, ci in zip(model.inputs, model.coefficients):
        out += kernels.eval_ovk(model.kernel, x, xi) @ ci
    return out


def predict_matrix(model: RegressionModel, x) -> np.ndarray:
    b = int(round(np.sqrt(model.p)))
    return unvectorize(predict(model, x), b)


def model_to_json(model: RegressionModel) -> dict:
    return {
        "kernel": kernels.kernel_to_json(model.kernel),
        "ridge": model.ridge,
        "coefficients": clinalg.matrix_to_json(model.coefficients),
        "inputs": [clinalg.matrix_to_json(x) for x in model.inputs],
        "residual": model.residual,
    }


def model_from_json(obj: dict) -> RegressionModel:
    return RegressionModel(
        kernels.kernel_from_json(obj["kernel"]),
        clinalg.matrix_from_json(obj["coefficients"]),
        float(obj["ridge"]),
        [clinalg.matrix_from_json(x) for x in obj["inputs"]],
        float(obj.get("residual", 0.0)),
    )
