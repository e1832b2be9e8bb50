"""Channel-estimation experiment: scalar vs operator-valued kernel ridge regression.

For each random Pauli channel, ``n_train`` random full-rank densities are sent
through the channel, the outputs are depolarized and vectorized, and every
kernel variant is fit with each ridge value of the grid.  The ridge with the
lowest error on a noiseless probe set is kept, the fitted regressor is turned
into a Choi matrix by linear tomography, and the Frobenius distance to the
true Choi matrix is recorded.
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import channels, kernels, ovkrr
from .errors import DomainError, QovkError
from .qstates import random_density

log = logging.getLogger(__name__)

SCALAR_BASELINE = "scalar_baseline"
SEPARABLE_OVK = "separable_ovk"
ENTANGLED_UNITARY = "entangled_unitary"
ENTANGLED_KRAUS_PAULI = "entangled_kraus_pauli"
VARIANTS = (SCALAR_BASELINE, SEPARABLE_OVK, ENTANGLED_UNITARY, ENTANGLED_KRAUS_PAULI)

DECISIONS = [
    "training inputs: Hilbert-Schmidt random full-rank densities",
    "Pauli probabilities: flat Dirichlet",
    "label noise: fixed-strength depolarizing channel on every channel output",
    "vectorization: column-major, complex-valued regression",
    "ridge: chosen per variant from the grid by mean squared error on a noiseless probe set",
    "learned channel: linear tomography of the regressor on {|0>,|1>,|+>,|+i>} probes, no CPTP projection",
    "Choi convention: input factor first, unnormalised",
    "separable_ovk: U = I, rho_Y = I/p, product feature rho_x rho_z",
    "entangled_unitary: non-separable Haar U on Y(x)X, rho_Y = I/p, product feature",
    "entangled_kraus_pauli: Kraus ops conj(P)(x)P over Pauli strings P, feature vec(rho_x) vec(rho_z)^dagger",
    "std: sample standard deviation (ddof=1); reported as 0 when only one channel",
]


class TrialError(QovkError):
    """Failure inside a trial, tagged with the stage where it happened."""

    def __init__(self, stage: str, detail: str):
        super().__init__(f"[{stage}] {detail}")
        self.stage = stage


@dataclass
class ExperimentConfig:
    channel_kind: str = "pauli"
    qubit_dim: int = 2
    n_train: int = 10
    n_channels: int = 10
    noise_lambda: float = 0.1
    ridge_grid: list = field(default_factory=lambda: [1e-4, 1e-3, 1e-2])
    kernel_variants: list = field(default_factory=lambda: list(VARIANTS))
    seed: int = 0
    n_probe: int = 20
    n_seeds: int = 1

    def validate(self) -> "ExperimentConfig":
        if self.channel_kind != "pauli":
            raise DomainError(f"unsupported channel kind {self.channel_kind!r}")
        if self.qubit_dim not in (2, 4):
            raise DomainError("qubit_dim must be 2 or 4")
        for name in ("n_train", "n_channels", "n_probe", "n_seeds"):
            if int(getattr(self, name)) < 1:
                raise DomainError(f"{name} must be positive")
        if not 0.0 <= float(self.noise_lambda) <= 1.0:
            raise DomainError(f"noise_lambda must be in [0, 1], got {self.noise_lambda}")
        if not self.ridge_grid or any(float(r) <= 0 for r in self.ridge_grid):
            raise DomainError("ridge_grid must hold positive values")
        unknown = set(self.kernel_variants) - set(VARIANTS)
        if unknown or not self.kernel_variants:
            raise DomainError(f"unknown kernel variants {sorted(unknown)}")
        return self

    def to_dict(self) -> dict:
        return asdict(self)


def build_kernel(variant: str, in_dim: int, out_dim: int, rng: np.random.Generator):
    """Kernel used by ``variant`` for ``in_dim x in_dim`` inputs and vectorized ``out_dim x out_dim`` labels."""
    p = out_dim * out_dim
    if variant == SCALAR_BASELINE:
        return kernels.SCALAR
    if variant == SEPARABLE_OVK:
        u = np.eye(p * in_dim, dtype=np.complex128)
        return kernels.unitary_kernel(u, np.eye(p) / p, kernels.FeatureRule.PRODUCT)
    if variant == ENTANGLED_UNITARY:
        u = kernels.entangled_unitary(p, in_dim, rng)
        return kernels.unitary_kernel(u, np.eye(p) / p, kernels.FeatureRule.PRODUCT)
    if variant == ENTANGLED_KRAUS_PAULI:
        if in_dim != out_dim:
            raise DomainError("Pauli superoperator kernel needs equal input and output dims")
        n = int(round(np.log2(in_dim)))
        return kernels.kraus_kernel(kernels.pauli_superoperator_kraus_set(n),
                                    kernels.FeatureRule.VECTORIZED)
    raise DomainError(f"unknown variant {variant!r}")


def generate_dataset(cfg: ExperimentConfig, channel: channels.QuantumChannel,
                     rng: np.random.Generator) -> ovkrr.TrainingSet:
    a = channel.in_dim
    inputs = [random_density(a, a, rng) for _ in range(cfg.n_train)]
    outputs = [channels.depolarize(channels.apply(channel, r), cfg.noise_lambda) for r in inputs]
    return ovkrr.TrainingSet.from_matrices(inputs, outputs)


def noisy_choi(choi, lam: float, b: int) -> np.ndarray:
    """Choi of ``depolarize(Phi(.), lam)`` for a trace-preserving ``Phi`` with output dim ``b``."""
    choi = np.asarray(choi)
    return (1.0 - lam) * choi + lam * np.eye(choi.shape[0]) / b


def _fit_best(ts, kernel, ridge_grid, probes, targets):
    best = None
    for ridge in ridge_grid:
        model = ovkrr.fit(ts, kernel, float(ridge))
        err = float(np.mean([np.linalg.norm(ovkrr.predict_matrix(model, x) - y) ** 2
                             for x, y in zip(probes, targets)]))
        if best is None or err < best[1]:
            best = (model, err)
    return best


def _run_channel(cfg: ExperimentConfig, idx: int, seq: np.random.SeedSequence, kernel_map: dict) -> dict:
    rng = np.random.default_rng(seq)
    a = cfg.qubit_dim
    try:
        channel = channels.random_pauli_channel(a, rng)
    except QovkError as exc:
        raise TrialError("channel", str(exc)) from exc
    try:
        ts = generate_dataset(cfg, channel, rng)
        probes = [random_density(a, a, rng) for _ in range(cfg.n_probe)]
        targets = [channels.apply(channel, x) for x in probes]
    except QovkError as exc:
        raise TrialError("dataset", str(exc)) from exc
    true_choi = channels.to_choi(channel)
    # error of any estimator that reproduces the depolarized labels exactly
    floor = channels.recovery_error(true_choi, noisy_choi(true_choi, cfg.noise_lambda, a))
    rec = {"channel": idx, "true_choi": true_choi, "noise_floor": floor, "variants": {}}
    for variant in cfg.kernel_variants:
        try:
            model, probe_err = _fit_best(ts, kernel_map[variant], cfg.ridge_grid, probes, targets)
        except QovkError as exc:
            raise TrialError(f"fit:{variant}", str(exc)) from exc
        try:
            cand = channels.reconstruct_channel(lambda r: ovkrr.predict_matrix(model, r), a)
        except QovkError as exc:
            raise TrialError(f"reconstruct:{variant}", str(exc)) from exc
        err = channels.recovery_error(true_choi, cand)
        rec["variants"][variant] = {"error": err, "ridge": model.ridge,
                                    "probe_mse": probe_err, "choi": cand.choi}
        log.debug("channel %d %s: error %.4f ridge %g", idx, variant, err, model.ridge)
    return rec


def _summary(errors: list[float]) -> dict:
    arr = np.asarray(errors, dtype=float)
    degenerate = arr.size < 2
    return {
        "errors": [float(e) for e in arr],
        "mean": float(arr.mean()),
        "std": 0.0 if degenerate else float(arr.std(ddof=1)),
        "std_degenerate": degenerate,
    }


@dataclass
class TrialResult:
    seed: int
    variants: dict  # name -> summary dict (errors, mean, std, ridges)
    records: list = field(default_factory=list, repr=False)

    def mean(self, variant: str) -> float:
        return self.variants[variant]["mean"]


def run_trial(cfg: ExperimentConfig, seed: int | None = None, threads: int = 1) -> TrialResult:
    cfg.validate()
    seed = cfg.seed if seed is None else seed
    root = np.random.SeedSequence(seed)
    kernel_seq, *channel_seqs = root.spawn(cfg.n_channels + 1)
    krng = np.random.default_rng(kernel_seq)
    try:
        kernel_map = {v: build_kernel(v, cfg.qubit_dim, cfg.qubit_dim, krng) for v in cfg.kernel_variants}
    except QovkError as exc:
        raise TrialError("kernel", str(exc)) from exc

    def task(i):
        return _run_channel(cfg, i, channel_seqs[i], kernel_map)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(task, range(cfg.n_channels)))
    else:
        records = [task(i) for i in range(cfg.n_channels)]

    summaries = {"noise_floor": _summary([r["noise_floor"] for r in records])}
    for v in cfg.kernel_variants:
        s = _summary([r["variants"][v]["error"] for r in records])
        s["ridges"] = [r["variants"][v]["ridge"] for r in records]
        summaries[v] = s
    return TrialResult(seed, summaries, records)


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> dict:
    """Run ``cfg.n_seeds`` trials (seeds ``cfg.seed, cfg.seed + 1, ...``) and pool the errors."""
    cfg.validate()
    trials = [run_trial(cfg, cfg.seed + k, threads) for k in range(cfg.n_seeds)]
    pooled = {}
    floors = [e for t in trials for e in t.variants["noise_floor"]["errors"]]
    for v in cfg.kernel_variants:
        errs = [e for t in trials for e in t.variants[v]["errors"]]
        s = _summary(errs)
        s["seed_means"] = [t.variants[v]["mean"] for t in trials]
        s["ridges"] = [r for t in trials for r in t.variants[v]["ridges"]]
        pooled[v] = s
    return {"trials": trials, "variants": pooled, "noise_floor": _summary(floors)}


def ordering_summary(variants: dict) -> dict:
    """Entangled-vs-scalar comparison on pooled means."""
    out = {}
    if SCALAR_BASELINE not in variants:
        return out
    base = variants[SCALAR_BASELINE]["mean"]
    for v in (ENTANGLED_KRAUS_PAULI, ENTANGLED_UNITARY, SEPARABLE_OVK):
        if v in variants:
            m = variants[v]["mean"]
            out[v] = {"mean": m, "scalar_mean": base, "ratio": m / base if base > 0 else float("inf"),
                      "strictly_lower": bool(m < base)}
    return out


def results_document(cfg: ExperimentConfig, pooled: dict) -> dict:
    doc = {v: {k: s[k] for k in ("errors", "mean", "std", "std_degenerate", "ridges", "seed_means")}
           for v, s in pooled["variants"].items()}
    doc["config"] = cfg.to_dict()
    doc["decisions"] = list(DECISIONS)
    doc["summary"] = ordering_summary(pooled["variants"])
    doc["summary"]["noise_floor"] = pooled["noise_floor"]
    return doc


def write_results(cfg: ExperimentConfig, pooled: dict, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = results_document(cfg, pooled)
    (out / "results.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    with open(out / "results.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["seed", "channel", "variant", "error", "ridge", "probe_mse"])
        for t in pooled["trials"]:
            for r in t.records:
                for v, d in r["variants"].items():
                    w.writerow([t.seed, r["channel"], v, repr(d["error"]), repr(d["ridge"]),
                                repr(d["probe_mse"])])
    return doc


# -- heatmaps -----------------------------------------------------------------------


def _write_csv_grid(path: Path, grid: np.ndarray):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in grid:
            w.writerow([repr(float(v)) for v in row])


def _write_pgm(path: Path, grid: np.ndarray, lo: float, hi: float, cell: int):
    span = hi - lo
    scaled = np.zeros_like(grid) if span <= 0 else (grid - lo) / span
    pix = np.clip(np.rint(scaled * 255), 0, 255).astype(int)
    pix = np.kron(pix, np.ones((cell, cell), dtype=int))
    lines = ["P2", f"{pix.shape[1]} {pix.shape[0]}", "255"]
    lines += [" ".join(str(v) for v in row) for row in pix]
    path.write_text("\n".join(lines) + "\n")


def emit_heatmaps(true_choi, learned: dict, out_dir, cell: int = 8) -> list[Path]:
    """Write real part and magnitude of each Choi matrix as CSV and PGM.

    All PGM files of one call share a single min/max intensity scale, so the
    overall maximum maps to 255 and equal values get equal pixels everywhere.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    mats = {"true": np.asarray(true_choi)}
    mats.update({k: np.asarray(v) for k, v in learned.items()})
    grids = {}
    for name, m in mats.items():
        grids[f"{name}_real"] = m.real
        grids[f"{name}_abs"] = np.abs(m)
    lo = min(float(g.min()) for g in grids.values())
    hi = max(float(g.max()) for g in grids.values())
    written = []
    for key, g in grids.items():
        csv_path, pgm_path = out / f"heatmap_{key}.csv", out / f"heatmap_{key}.pgm"
        _write_csv_grid(csv_path, g)
        _write_pgm(pgm_path, g, lo, hi, cell)
        written += [csv_path, pgm_path]
    return written


def read_pgm(path) -> tuple[str, int, int, int, np.ndarray]:
    tokens = Path(path).read_text().split()
    magic, w, h, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    pix = np.array([int(t) for t in tokens[4:]]).reshape(h, w)
    return magic, w, h, maxval, pix
