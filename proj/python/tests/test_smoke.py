"""Smoke tests for the python bindings: graph math sanity, the preprocessing
pipeline on a synthetic dataset, and a miniature train/evaluate/finetune loop.
"""

import math

import numpy as np
import pytest

import stann


def test_ring_montage_and_graph():
    labels, positions = stann.ring_montage(8)
    assert len(labels) == 8
    assert positions.shape == (8, 3)
    norms = np.linalg.norm(positions, axis=1)
    assert np.allclose(norms, 1.0)

    g = stann.knn_graph(positions, 3)
    a = g["adjacency"]
    assert a.shape == (8, 8)
    assert np.allclose(a, a.T)
    assert np.all(np.diag(a) == 0.0)
    # Laplacian rows sum to zero and the spectrum starts at zero.
    assert np.allclose(g["laplacian"].sum(axis=1), 0.0, atol=1e-12)
    assert abs(g["eigenvalues"][0]) < 1e-10
    assert np.all(np.diff(g["eigenvalues"]) >= -1e-12)
    v = g["eigenvectors"]
    assert np.allclose(v.T @ v, np.eye(8), atol=1e-10)


def test_lowpass_smooth_reduces_roughness():
    _, positions = stann.ring_montage(8)
    rng = np.random.default_rng(7)
    x = rng.normal(size=(8, 64))
    g = stann.knn_graph(positions, 4)
    xs = stann.lowpass_smooth(x, positions, k=4, bandwidth=4)
    rough = np.trace(x.T @ g["laplacian"] @ x)
    rough_s = np.trace(xs.T @ g["laplacian"] @ xs)
    assert rough_s <= rough + 1e-9
    # Full bandwidth keeps the signal untouched.
    assert np.allclose(stann.lowpass_smooth(x, positions, k=4, bandwidth=8), x, atol=1e-10)


def test_bandpass_keeps_in_band_tone():
    fs = 128.0
    t = np.arange(int(fs * 8)) / fs
    tone = np.sin(2 * math.pi * 6.0 * t)  # inside theta (4-8 Hz)
    hum = np.sin(2 * math.pi * 40.0 * t)  # outside theta
    x = np.vstack([tone + hum, hum])
    y = stann.bandpass(x, "theta", fs)
    mid = slice(256, -256)  # judge away from the edges
    tone_power = np.mean(y[0, mid] ** 2)
    hum_power = np.mean(y[1, mid] ** 2)
    assert tone_power > 0.3
    assert hum_power < 0.01


def test_pipeline_windows(tmp_path):
    out = tmp_path / "ds"
    n_trials = stann.generate_synthetic(str(out), channels=8, trials=6, fs=32.0,
                                        trial_seconds=4.0, pretrial_seconds=2.0,
                                        effect=2.0, seed=11)
    assert n_trials == 6
    x, y, meta = stann.make_windows(str(out), band="theta", knn=4)
    assert x.dtype == np.float32
    assert x.shape == (24, 8, 32)  # 6 trials x 4 one-second windows
    assert meta["window_samples"] == 32
    assert meta["threshold_used"] == 5.0
    assert meta["bandwidth_used"] == 4
    assert sorted(set(y.tolist())) == [0, 1]
    assert int((y == 1).sum()) == 12

    with pytest.raises(RuntimeError):
        stann.make_windows(str(tmp_path / "missing"))
    with pytest.raises(ValueError):
        stann.make_windows(str(out), dimension="charisma")


def test_train_evaluate_finetune(tmp_path):
    out = tmp_path / "ds"
    stann.generate_synthetic(str(out), channels=8, trials=6, fs=32.0,
                             trial_seconds=4.0, pretrial_seconds=2.0,
                             effect=2.0, seed=3)
    x, y, _ = stann.make_windows(str(out), band="theta", knn=4)

    result = stann.fit_cv(x, y, epochs=2, batch=12, lr=2e-3, folds=3, seed=5)
    assert 0.0 <= result["mean_accuracy"] <= 1.0
    assert len(result["folds"]) == 3

    ckpt = str(tmp_path / "model.ckpt")
    loss = stann.train_full(x, y, ckpt, epochs=2, batch=12, lr=2e-3, seed=5)
    assert math.isfinite(loss)

    metrics = stann.evaluate(ckpt, x, y)
    assert metrics["tp"] + metrics["fp"] + metrics["tn"] + metrics["fn"] == len(y)
    assert metrics["accuracy"] > 0.5  # trained on these very windows

    tuned = stann.finetune(ckpt, x, y, scheme="e", budget="10pct", seed=2,
                           save_path=str(tmp_path / "tuned.ckpt"))
    assert tuned["epochs_run"] >= 1
    assert tuned["retrainable_params"] > 0
    assert (tmp_path / "tuned.ckpt").exists()

    with pytest.raises(ValueError):
        stann.finetune(ckpt, x, y, budget="33pct")


def test_parameter_table_full_size():
    rows = stann.parameter_table(32, 128)
    by_name = {r["name"]: r for r in rows}
    assert by_name["C1_1"]["params"] == 750
    assert by_name["RAN2"]["params"] == 154240
    assert by_name["FC2"]["output_shape"] == [2, 0, 0]
    total = sum(r["params"] for r in rows)
    assert total > 300_000
