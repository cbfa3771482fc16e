"""Acceptance criteria, one test each.

Every test records a ``PASS``/``FAIL`` line (shown in the terminal summary)
before asserting, so a failing run still lists the measured values.
Tolerances and sizes are fixed here and never adapted to results.
"""

import json
import os
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, ar_seasonal, corr, random_walk
from hhtlab.ceemd import EnsembleConfig, ceemd, characterize_end_effect
from hhtlab.cli import main
from hhtlab.features import FeatureMatrix, FeatureSetSelector
from hhtlab.filters import high_pass, low_pass
from hhtlab.forecast import fit_ridge, naive_benchmark, walk_forward
from hhtlab.hsa import analytic_mode, hilbert_spectrum, mode_spectrum_means
from hhtlab.series import TimeSeries, interior, load_csv, to_csv
from test_forecast import normal_equations


def verdict(number, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def two_tone_signal():
    t = np.arange(1, 1001, dtype=float)
    fast = np.sin(2 * np.pi * 0.2 * t)
    slow = 0.8 * np.sin(2 * np.pi * 0.02 * t)
    return fast, slow


def test_01_reconstruction_identity():
    start = time.perf_counter()
    worst = 0.0
    for seed in range(20):
        x = random_walk(1000 + seed, 256)
        for n in (1, 5, 20):
            d = ceemd(x, EnsembleConfig(seed=seed, trials=n))
            err = np.max(np.abs(x - d.reconstruct())) / np.max(np.abs(x))
            worst = max(worst, err)
    secs = time.perf_counter() - start
    verdict(1, worst < 1e-8 and secs < 10,
            f"max relative error {worst:.2e} (< 1e-8), {secs:.1f}s (< 10s)")


def test_02_two_tone_separation():
    fast, slow = two_tone_signal()
    x = fast + slow
    s = interior(x.size)
    start = time.perf_counter()
    d = ceemd(x, EnsembleConfig(seed=42, trials=50, noise_sigma=0.2))
    secs = time.perf_counter() - start
    c1 = corr(d.imfs[0, s], fast[s])
    c2 = corr(d.imfs[1, s], slow[s])
    # seed sensitivity is reported alongside, never used to choose the seed
    spread = [corr(ceemd(x, EnsembleConfig(seed=k, trials=50)).imfs[1, s], slow[s])
              for k in range(8)]
    ACCEPTANCE_LINES.append(
        f"[INFO] criterion  2: IMF2/slow correlation for seeds 0..7: "
        f"min {min(spread):.3f}, median {np.median(spread):.3f}, "
        f"max {max(spread):.3f}")
    verdict(2, c1 >= 0.95 and c2 >= 0.95 and secs < 30,
            f"seed 42: corr(IMF1, fast) {c1:.4f}, corr(IMF2, slow) {c2:.4f} "
            f"(both >= 0.95), {secs:.1f}s (< 30s)")


def test_03_pure_tone():
    t = np.arange(2000, dtype=float)
    start = time.perf_counter()
    m = analytic_mode(2 * np.cos(2 * np.pi * 0.05 * t))
    secs = time.perf_counter() - start
    s = interior(t.size)
    amp = float(np.median(m.amplitude[s]))
    freq = float(np.median(m.frequency[s]))
    ok = abs(amp - 2) <= 0.02 * 2 and abs(freq - 0.05) <= 0.02 * 0.05 and secs < 5
    verdict(3, ok, f"median amplitude {amp:.5f}, median frequency {freq:.6f} "
                   f"(within 2%), {secs:.2f}s (< 5s)")


def test_04_mean_frequency_ordering():
    bad = []
    for seed in range(10):
        x = random_walk(2000 + seed, 512)
        d = ceemd(x, EnsembleConfig(seed=seed, trials=20))
        f = [m[0] for m in mode_spectrum_means(hilbert_spectrum(d))]
        if not all(a > b for a, b in zip(f, f[1:])):
            bad.append((seed, f))
    verdict(4, not bad, f"{10 - len(bad)}/10 random walks with strictly "
                        f"decreasing mean frequencies")


@pytest.mark.skipif(not os.environ.get("HHTLAB_INDEX_CSV"),
                    reason="set HHTLAB_INDEX_CSV to a daily index CSV "
                           "(column 'close' or HHTLAB_INDEX_COLUMN)")
def test_04_optional_index_data():
    series = load_csv(os.environ["HHTLAB_INDEX_CSV"],
                      os.environ.get("HHTLAB_INDEX_COLUMN", "close"))
    assert len(series) >= 2000
    x = np.log(series.values)
    d = ceemd(x, EnsembleConfig(seed=0, trials=100))
    f = [m[0] for m in mode_spectrum_means(hilbert_spectrum(d))]
    ok = len(f) >= 6 and 0.1 <= f[0] <= 0.35 and 5e-4 <= f[5] <= 5e-3
    verdict(4, ok, f"index data mode-1 {f[0]:.4f} in [0.1, 0.35], mode-6 "
                   f"{f[5] if len(f) >= 6 else float('nan'):.2e} in [5e-4, 5e-3]")


def test_05_end_effect_growth():
    fast, slow = two_tone_signal()
    start = time.perf_counter()
    rep = characterize_end_effect([fast, slow],
                                  EnsembleConfig(seed=5, trials=10), 20)
    secs = time.perf_counter() - start
    top, bottom = rep.rmse[0, -1], rep.rmse[0, 0]
    err_sum = float(np.max(rep.error_sum_max))
    ok = top > bottom and err_sum < 1e-8 and secs < 60
    verdict(5, ok, f"mode-1 RMSE top |lambda| decile {top:.4f} > bottom "
                   f"{bottom:.4f}; max |sum of errors| {err_sum:.1e} (< 1e-8); "
                   f"{secs:.1f}s (< 60s)")


def test_06_filter_partition():
    worst = 0.0
    for seed in range(10):
        x = random_walk(3000 + seed, 400)
        d = ceemd(x, EnsembleConfig(seed=seed, trials=5))
        for m in range(1, d.n_modes):
            y = high_pass(d, m) + low_pass(d, m + 1)
            worst = max(worst, np.max(np.abs(y - x)) / np.max(np.abs(x)))
    verdict(6, worst < 1e-8, f"max relative partition error {worst:.2e} (< 1e-8)")


def test_07_ridge_oracle():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(50):
        n, p = int(rng.integers(3, 51)), int(rng.integers(1, 21))
        reg = float(10 ** rng.uniform(-4, 2))
        X = rng.standard_normal((n, p))
        y = rng.standard_normal(n)
        model = fit_ridge(FeatureMatrix.from_arrays(X, y), reg)
        w, b = normal_equations(X, y, reg)
        scale = 1 + np.max(np.abs(np.r_[w, b]))
        err = np.max(np.abs(np.r_[model.weights - w, model.intercept - b])) / scale
        worst = max(worst, err)
    verdict(7, worst < 1e-8, f"max weight deviation {worst:.2e} (< 1e-8) "
                             f"over 50 datasets up to 50x20")


LEAK_SELECTOR = FeatureSetSelector.parse("c,ch", "all", lam=True)
LEAK_ENSEMBLE = EnsembleConfig(seed=8, trials=10)


def test_08_leakage_freedom():
    x = ar_seasonal(300, seed=0)
    base = walk_forward(x, 250, 50, 200, 5, LEAK_SELECTOR, LEAK_ENSEMBLE)
    rng = np.random.default_rng(88)
    changed = []
    for k, t in enumerate(base.t_index):
        y = x.copy()
        y[t - 1:] = 50 * rng.standard_normal(y.size - t + 1)
        alt = walk_forward(y, t - 1, 1, 200, 5, LEAK_SELECTOR, LEAK_ENSEMBLE)
        if alt.predictions[0].tobytes() != base.predictions[k].tobytes():
            changed.append(int(t))
    verdict(8, not changed, f"{50 - len(changed)}/50 step predictions "
                            f"bit-identical after mutating x(s), s >= t")


def test_09_naive_benchmark():
    a = np.array([3.0, 1, 4, 1, 5, 9, 2, 6, 5, 3])
    b = np.array([0.5, 0.5, 1.5, -0.5, 2.0, 2.0, 2.0, 4.0, 0.0, 1.0])
    cases = [
        (a, (2, 10), (4 + 9 + 9 + 16 + 16 + 49 + 16 + 1 + 4) / 9),
        (a, (6, 8), (16 + 49 + 16) / 3),
        (b, (2, 10), (0 + 1 + 4 + 6.25 + 0 + 0 + 4 + 16 + 1) / 9),
        (b, (10, 10), 1.0),
    ]
    got = [naive_benchmark(s, r) for s, r, _ in cases]
    ok = all(g == want for g, (_, _, want) in zip(got, cases))
    verdict(9, ok, f"{sum(g == c[2] for g, c in zip(got, cases))}/4 fixtures "
                   f"match hand-computed values exactly")


def test_10_reported_comparison(tmp_path):
    src = tmp_path / "ar.csv"
    to_csv(TimeSeries(ar_seasonal(300, seed=0), name="value"), src)
    out = tmp_path / "out"
    code = main(["forecast", "--input", str(src), "--output", str(out),
                 "--seed", "8", "--trials", "10", "--T2", "50", "--window", "200",
                 "--tau", "5", "--features", "c,ch", "--lambda"])
    rep = json.loads((out / "forecast.json").read_text())
    vals = [rep["mse"], rep["mse_plain_lags"], rep["mse_ratio_hht_to_plain"]]
    ok = code == 0 and all(np.isfinite(v) for v in vals)
    verdict(10, ok, f"HHT MSE {vals[0]:.4f}, plain-lag MSE {vals[1]:.4f}, "
                    f"ratio {vals[2]:.3f}, naive MSE {rep['naive_mse']:.4f} "
                    f"(logged, not judged)")
