import numpy as np
import pytest

from qovk import channels, clinalg, experiment, ovkrr
from qovk.errors import DomainError
from qovk.experiment import ExperimentConfig


def small_cfg(**kw):
    base = dict(n_train=8, n_channels=2, n_probe=8, ridge_grid=[1e-3])
    base.update(kw)
    return ExperimentConfig(**base)


def test_dataset_noiseless_labels_are_channel_outputs(rng):
    ch = channels.random_pauli_channel(2, rng)
    ts = experiment.generate_dataset(small_cfg(noise_lambda=0.0), ch, rng)
    for x, y in zip(ts.inputs, ts.labels):
        np.testing.assert_allclose(ovkrr.unvectorize(y, 2), channels.apply(ch, x), atol=1e-14)
        assert clinalg.is_density(x) and np.linalg.matrix_rank(x) == 2


def test_dataset_full_noise_labels_are_maximally_mixed(rng):
    ch = channels.random_pauli_channel(2, rng)
    ts = experiment.generate_dataset(small_cfg(noise_lambda=1.0), ch, rng)
    for y in ts.labels:
        np.testing.assert_allclose(y, ovkrr.vectorize(np.eye(2) / 2), atol=1e-15)


def test_dataset_deterministic():
    ch = channels.random_pauli_channel(2, np.random.default_rng(0))
    a = experiment.generate_dataset(small_cfg(), ch, np.random.default_rng(5))
    b = experiment.generate_dataset(small_cfg(), ch, np.random.default_rng(5))
    np.testing.assert_array_equal(a.labels, b.labels)


def test_noisy_choi_matches_composed_channel(rng):
    ch = channels.random_pauli_channel(2, rng)
    cand = channels.reconstruct_channel(lambda r: channels.depolarize(channels.apply(ch, r), 0.3), 2)
    np.testing.assert_allclose(experiment.noisy_choi(channels.to_choi(ch), 0.3, 2), cand.choi, atol=1e-13)


def test_config_validation():
    with pytest.raises(DomainError):
        small_cfg(noise_lambda=2.0).validate()
    with pytest.raises(DomainError):
        small_cfg(n_train=0).validate()
    with pytest.raises(DomainError):
        small_cfg(kernel_variants=["nope"]).validate()


def test_run_trial_deterministic_and_thread_independent():
    cfg = small_cfg()
    a = experiment.run_trial(cfg, seed=3, threads=1)
    b = experiment.run_trial(cfg, seed=3, threads=2)
    for v in experiment.VARIANTS:
        assert a.variants[v]["errors"] == b.variants[v]["errors"]
        assert all(e >= 0 for e in a.variants[v]["errors"])


def test_single_channel_std_is_zero():
    t = experiment.run_trial(small_cfg(n_channels=1), seed=1)
    for v in experiment.VARIANTS:
        assert t.variants[v]["std"] == 0.0 and t.variants[v]["std_degenerate"]


def test_sample_std():
    s = experiment._summary([1.0, 2.0, 3.0])
    assert s["std"] == pytest.approx(1.0)


def test_errors_grow_with_noise():
    means = []
    for lam in (0.0, 0.5, 1.0):
        cfg = small_cfg(noise_lambda=lam, n_channels=5, kernel_variants=[experiment.ENTANGLED_KRAUS_PAULI])
        means.append(np.mean([experiment.run_trial(cfg, seed=s).mean(experiment.ENTANGLED_KRAUS_PAULI)
                              for s in range(5)]))
    assert means[0] < means[1] < means[2]


def test_results_files(tmp_path):
    cfg = small_cfg()
    pooled = experiment.run_experiment(cfg)
    doc = experiment.write_results(cfg, pooled, tmp_path)
    assert set(experiment.VARIANTS) <= set(doc)
    assert {"config", "decisions", "summary"} <= set(doc)
    rows = (tmp_path / "results.csv").read_text().strip().splitlines()
    assert len(rows) == 1 + cfg.n_channels * len(experiment.VARIANTS)


def test_heatmaps_share_one_scale(tmp_path, rng):
    true = channels.to_choi(channels.identity_channel(2))
    files = experiment.emit_heatmaps(true, {"copy": true.copy(), "half": true / 2}, tmp_path, cell=2)
    assert len(files) == 12
    magic, w, h, maxval, pix_true = experiment.read_pgm(tmp_path / "heatmap_true_real.pgm")
    assert (magic, w, h, maxval) == ("P2", 8, 8, 255)
    assert pix_true.max() == 255
    _, _, _, _, pix_copy = experiment.read_pgm(tmp_path / "heatmap_copy_real.pgm")
    np.testing.assert_array_equal(pix_true, pix_copy)
    _, _, _, _, pix_half = experiment.read_pgm(tmp_path / "heatmap_half_real.pgm")
    assert pix_half.max() == 128
    grid = np.loadtxt(tmp_path / "heatmap_true_abs.csv", delimiter=",")
    np.testing.assert_array_equal(grid, np.abs(true))
