"""Smoke tests for the python bindings against numpy oracles."""

import json
import math
import os
import tempfile

import numpy as np
import pytest

import topkboot


def test_version():
    assert topkboot.__version__


def test_order_statistics_against_numpy():
    rng = np.random.default_rng(7)
    for _ in range(20):
        p = int(rng.integers(3, 30))
        x = rng.normal(size=p)
        xs = np.sort(x)[::-1]
        for k in (1, 2, p):
            assert topkboot.kth_largest(list(x), k) == pytest.approx(xs[k - 1])
            assert topkboot.top_k_sum(list(x), k) == pytest.approx(xs[:k].sum())
        d = min(p, 4)
        sq = np.sort(x**2)[::-1]
        assert topkboot.square_sum_top_d(list(x), d) == pytest.approx(sq[:d].sum())


def test_domain_errors_are_value_errors():
    with pytest.raises(ValueError):
        topkboot.kth_largest([1.0, 2.0], 3)
    with pytest.raises(ValueError):
        topkboot.smooth_top_k_sum([1.0, 2.0, 3.0], 1, -1.0)


def test_ks_distance_hand_value():
    assert topkboot.ks_distance([1.0, 2.0], [2.0, 3.0]) == pytest.approx(0.5)
    assert topkboot.ks_distance([0.0] * 3, [1.0] * 3) == 1.0


def test_ks_distance_against_scipy():
    scipy_stats = pytest.importorskip("scipy.stats")
    rng = np.random.default_rng(23)
    for _ in range(10):
        a = rng.normal(size=int(rng.integers(5, 200)))
        b = rng.normal(loc=0.3, size=int(rng.integers(5, 200)))
        ours = topkboot.ks_distance(list(a), list(b))
        ref = scipy_stats.ks_2samp(a, b, method="asymp").statistic
        assert ours == pytest.approx(ref, abs=1e-12)


def test_student_t_family_moments_against_scipy():
    scipy_stats = pytest.importorskip("scipy.stats")
    df = 8
    data = topkboot.sample_data(
        "student_t", "identity", 3, 0.0, 200000, seed=31, student_df=df
    )
    flat = data.ravel()
    # Standardized to unit variance; excess kurtosis of t_df is 6/(df-4).
    assert flat.var() == pytest.approx(1.0, rel=0.05)
    expected_kurtosis = float(scipy_stats.t(df).stats(moments="k"))
    sample_kurtosis = flat.std() ** -4 * ((flat - flat.mean()) ** 4).mean() - 3
    assert sample_kurtosis == pytest.approx(expected_kurtosis, abs=0.4)


def test_smooth_sandwich_and_gradient():
    rng = np.random.default_rng(11)
    x = rng.normal(size=12)
    beta = 25.0
    for s in (1, 3, 6):
        res = topkboot.smooth_top_k_sum(list(x), s, beta)
        exact = np.sort(x)[::-1][:s].sum()
        budget = topkboot.capacity(12, s)[0] / beta
        assert exact - budget - 1e-9 <= res.value <= exact + 1e-9
        assert abs(sum(res.weights) - s) < 1e-9

    # Gradient against numpy central differences.
    s = 4
    grad = np.array(topkboot.grad_smooth_top_k_sum(list(x), s, beta))
    h = 1e-6
    fd = np.zeros_like(grad)
    for j in range(len(x)):
        up = list(x)
        dn = list(x)
        up[j] += h
        dn[j] -= h
        fd[j] = (
            topkboot.smooth_top_k_sum(up, s, beta).value
            - topkboot.smooth_top_k_sum(dn, s, beta).value
        ) / (2 * h)
    assert np.max(np.abs(fd - grad)) / np.max(np.abs(grad)) < 1e-4

    pi = np.array(topkboot.grad_smooth_kth(list(x), 3, beta))
    assert pi.sum() == pytest.approx(1.0, abs=1e-8)
    assert pi.min() >= -1e-12


def test_smooth_kth_tracks_exact():
    rng = np.random.default_rng(13)
    x = rng.normal(size=20)
    exact = np.sort(x)[::-1][2]
    approx = topkboot.smooth_kth(list(x), 3, 500.0)
    budget = topkboot.capacity(20, 3)[0] / 500.0
    assert abs(approx - exact) <= budget + 1e-9


def test_sample_data_determinism_and_moments():
    a = topkboot.sample_data("rademacher", "identity", 5, 0.0, 50, seed=3)
    b = topkboot.sample_data("rademacher", "identity", 5, 0.0, 50, seed=3)
    assert np.array_equal(a, b)
    assert set(np.unique(a)) <= {-1.0, 1.0}

    big = topkboot.sample_data("gaussian", "equicorrelated", 4, 0.5, 50000, seed=5)
    emp = big.T @ big / big.shape[0]
    target = np.full((4, 4), 0.5) + 0.5 * np.eye(4)
    assert np.max(np.abs(emp - target)) < 0.05


def test_rescaled_sum_matches_numpy():
    data = topkboot.sample_data("uniform", "identity", 6, 0.0, 250, seed=9)
    x = topkboot.rescaled_sum(data)
    assert np.allclose(x, data.sum(axis=0) / math.sqrt(data.shape[0]))


def test_bootstrap_quantile_convention():
    assert topkboot.conditional_quantile([3.0, 1.0, 4.0, 2.0], 0.5) == 2.0
    assert topkboot.conditional_quantile([3.0, 1.0, 4.0, 2.0], 0.95) == 4.0

    data = topkboot.sample_data("gaussian", "identity", 10, 0.0, 100, seed=21)
    reps = topkboot.multiplier_replicates(data, kappa=2, B=64, seed=33)
    reps2 = topkboot.multiplier_replicates(data, kappa=2, B=64, seed=33)
    assert reps == reps2
    assert len(reps) == 64


def test_gaussian_quantile_scalar_normal():
    q = topkboot.gaussian_quantile("identity", 1, 0.0, 1, 0.975, 200000, seed=41)
    assert q == pytest.approx(1.96, abs=0.02)


def test_run_config_json_end_to_end():
    with tempfile.TemporaryDirectory() as tmp:
        config = {
            "experiment": "audit_smooth",
            "seed": 17,
            "out_dir": os.path.join(tmp, "audit"),
            "covariance": {"kind": "identity", "p": 5},
            "kappa": 2,
            "audit_points": 4,
        }
        summary = json.loads(topkboot.run_config_json(json.dumps(config)))
        assert summary["experiment"] == "audit_smooth"
        assert summary["results"]["all_ok"] is True
        assert os.path.exists(os.path.join(tmp, "audit", "cells.csv"))
        assert os.path.exists(os.path.join(tmp, "audit", "manifest.json"))


def test_experiment_catalog():
    catalog = dict(topkboot.list_experiments())
    assert len(catalog) == 9
    assert "coverage" in catalog
    assert "Validity of Multiplier Bootstrap" in catalog["coverage"]


def test_cli_roundtrip():
    cli = os.environ.get("TOPKBOOT_CLI")
    if not cli:
        pytest.skip("CLI path not provided")
    import subprocess

    listing = subprocess.run([cli, "list"], capture_output=True, text=True)
    assert listing.returncode == 0
    assert "coverage" in listing.stdout

    with tempfile.TemporaryDirectory() as tmp:
        cfg_path = os.path.join(tmp, "cfg.json")
        with open(cfg_path, "w") as fh:
            json.dump(
                {
                    "experiment": "audit_smooth",
                    "seed": 3,
                    "out_dir": os.path.join(tmp, "out"),
                    "covariance": {"kind": "identity", "p": 5},
                    "kappa": 2,
                    "audit_points": 3,
                },
                fh,
            )
        ok = subprocess.run([cli, "run", cfg_path], capture_output=True, text=True)
        assert ok.returncode == 0, ok.stderr
        assert os.path.exists(os.path.join(tmp, "out", "summary.json"))

        bad = subprocess.run([cli, "validate", os.devnull], capture_output=True)
        assert bad.returncode == 2
