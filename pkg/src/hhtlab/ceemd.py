"""Noise-assisted ensemble decompositions (EEMD and complementary CEEMD).

Every trial draws its white noise from an RNG stream keyed on
``(seed, pair index)`` so results never depend on how trials are scheduled.
Trial decompositions are reduced by summation in trial order.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .emd import MIN_LENGTH, Decomposition, SiftConfig, emd_array
from .series import TimeSeries

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EnsembleConfig:
    """Ensemble settings.

    ``noise_sigma`` is relative to the sample standard deviation of the
    input.  ``target_modes=None`` takes the mode count of a pilot plain-EMD
    run on the noiseless input.
    """

    seed: int
    trials: int = 100
    noise_sigma: float = 0.2
    sift: SiftConfig = field(default_factory=SiftConfig)
    target_modes: Optional[int] = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("ensemble.trials must be >= 1")
        if not self.noise_sigma > 0:
            raise ValueError("ensemble.noise_sigma must be > 0")
        if self.target_modes is not None and self.target_modes < 1:
            raise ValueError("ensemble.target_modes must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("ensemble.seed must be a 64-bit unsigned integer")


def trial_noise(seed: int, index: int, n: int, scale: float) -> np.ndarray:
    """White noise for pair/trial ``index``; depends only on its arguments."""
    rng = np.random.default_rng([int(seed), int(index)])
    return scale * rng.standard_normal(n)


def _trial_emd(signal: np.ndarray, sift: SiftConfig) -> Decomposition:
    return emd_array(signal, sift)


def _padded(signal: np.ndarray, sift: SiftConfig, target: int) -> np.ndarray:
    """Decompose one trial and return a ``(target + 1, T)`` stack.

    Missing modes are zero rows; capping the mode count at ``target`` leaves
    any further modes inside the residue, so each trial still sums to its
    input.
    """
    d = _trial_emd(signal, sift)
    out = np.zeros((target + 1, signal.size))
    out[:d.n_modes] = d.imfs
    out[-1] = d.residue
    return out


def _capped(cfg: SiftConfig, target: int) -> SiftConfig:
    cap = target if cfg.max_modes is None else min(cfg.max_modes, target)
    return SiftConfig(cfg.sd_threshold, cfg.max_sift_iterations, cap)


def _signals(x: np.ndarray, config: EnsembleConfig, complementary: bool):
    scale = config.noise_sigma * float(np.std(x))
    for i in range(config.trials):
        w = trial_noise(config.seed, i, x.size, scale)
        yield x + w
        if complementary:
            yield x - w


def _ensemble(series, config: EnsembleConfig, complementary: bool,
              workers: int) -> Decomposition:
    x = np.asarray(series.values if isinstance(series, TimeSeries) else series,
                   dtype=float)
    if x.ndim != 1 or x.size < MIN_LENGTH:
        raise ValueError(f"ensemble EMD needs at least {MIN_LENGTH} samples")
    target = config.target_modes
    if target is None:
        pilot = emd_array(x, config.sift)
        target = pilot.n_modes
        if target == 0:
            return pilot
    sift = _capped(config.sift, target)
    signals = list(_signals(x, config, complementary))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            stacks = pool.map(_padded, signals, [sift] * len(signals),
                              [target] * len(signals))
            total = _reduce(stacks, target, x.size)
    else:
        total = _reduce((_padded(s, sift, target) for s in signals),
                        target, x.size)
    total /= len(signals)
    logger.debug("ensemble of %d trials, %d modes", len(signals), target)
    return Decomposition(total[:-1], total[-1])


def _reduce(stacks, target: int, n: int) -> np.ndarray:
    total = np.zeros((target + 1, n))
    for stack in stacks:
        total += stack
    return total


def eemd(series, config: EnsembleConfig, workers: int = 1) -> Decomposition:
    """Ensemble EMD: mean of ``config.trials`` noisy decompositions."""
    return _ensemble(series, config, False, workers)


def ceemd(series, config: EnsembleConfig, workers: int = 1) -> Decomposition:
    """Complementary ensemble EMD with ``2 * config.trials`` trials.

    Trials come in pairs ``x + w_i`` and ``x - w_i`` sharing one noise
    realization, so the noise cancels in the ensemble sum and the modes plus
    residue reproduce ``x`` for any number of trials.
    """
    return _ensemble(series, config, True, workers)


@dataclass(frozen=True)
class EndEffectErrorReport:
    """RMSE of each true component, binned by ``|lambda|``.

    ``rmse`` has shape ``(components, bins)``; ``error_sum_max`` holds, per
    replication, the largest ``|sum_j error_j(t)|`` over ``t``.
    """

    lambda_bins: np.ndarray
    rmse: np.ndarray
    error_sum_max: np.ndarray
    assignment: tuple

    def to_csv(self, path, header_lines: Sequence[str] = ()) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["mode", "bin_low", "bin_high", "rmse"])
            for j, row in enumerate(self.rmse, start=1):
                for b, value in enumerate(row):
                    w.writerow([j, repr(float(self.lambda_bins[b])),
                                repr(float(self.lambda_bins[b + 1])),
                                repr(float(value))])


def _align(components: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """Give each decomposed component to the true one it resembles most."""
    norms_c = np.linalg.norm(components, axis=1)
    norms_t = np.linalg.norm(truth, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        sim = np.abs(components @ truth.T) / np.outer(norms_c, norms_t)
    sim = np.nan_to_num(sim, nan=0.0)
    owner = np.argmax(sim, axis=1)
    missing = set(range(truth.shape[0])) - set(owner.tolist())
    if missing:
        raise ValueError(
            f"decomposition has no component matching true mode(s) "
            f"{sorted(m + 1 for m in missing)}")
    return owner


def characterize_end_effect(truth_modes, config: EnsembleConfig,
                            replications: int,
                            n_bins: int = 10) -> EndEffectErrorReport:
    """Measure how CEEMD error grows towards the ends of the window.

    The synthetic input is the sum of ``truth_modes``.  Each replication
    runs :func:`ceemd` with its own seed; every decomposed component (IMFs
    and residue) is assigned to the true component with the largest
    absolute cosine similarity, and the per-sample error of each true
    component is binned by ``|lambda(t)|`` over the full window.
    """
    truth = np.atleast_2d(np.asarray(truth_modes, dtype=float))
    if replications < 1:
        raise ValueError("replications must be >= 1")
    k, n = truth.shape
    x = truth.sum(axis=0)
    t = np.arange(1, n + 1)
    lam = np.abs((2 * t - (1 + n)) / (n - 1))
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    bin_of = np.minimum(np.searchsorted(edges, lam, side="right") - 1,
                        n_bins - 1)
    sq = np.zeros((k, n_bins))
    counts = np.bincount(bin_of, minlength=n_bins).astype(float)
    sums = np.empty(replications)
    owners = []
    seeds = np.random.SeedSequence(int(config.seed)).generate_state(
        replications, dtype=np.uint64)
    for rep in range(replications):
        cfg = EnsembleConfig(int(seeds[rep]), config.trials,
                             config.noise_sigma, config.sift,
                             config.target_modes)
        d = ceemd(x, cfg)
        comps = np.vstack([d.imfs, d.residue])
        owner = _align(comps, truth)
        owners.append(tuple(owner.tolist()))
        est = np.zeros_like(truth)
        np.add.at(est, owner, comps)
        err = est - truth
        sums[rep] = float(np.max(np.abs(err.sum(axis=0))))
        for j in range(k):
            sq[j] += np.bincount(bin_of, weights=err[j] ** 2,
                                 minlength=n_bins)
    denom = counts * replications
    rmse = np.sqrt(np.divide(sq, denom, out=np.zeros_like(sq),
                             where=denom > 0))
    return EndEffectErrorReport(edges, rmse, sums, tuple(owners))
