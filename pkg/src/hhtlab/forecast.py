"""Forecasting harness on HHT features.

Two protocols are provided.  :func:`evaluate_split` decomposes the whole
train+test span once and is therefore optimistic (future samples shape the
IMFs near the split).  :func:`walk_forward` re-decomposes a trailing window
before every step and only ever hands the past to the decomposition,
training and prediction code.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Protocol, Sequence

import numpy as np

from .ceemd import EnsembleConfig
from .features import FeatureMatrix, FeatureSetSelector, hht_window
from .hsa import LowessConfig
from .series import TimeSeries

logger = logging.getLogger(__name__)

DEFAULT_GRID = tuple(float(v) for v in np.logspace(-4, 2, 13))


class ForecastError(RuntimeError):
    pass


class Regressor(Protocol):
    def fit(self, data: FeatureMatrix) -> Any: ...

    def predict(self, model: Any, x: np.ndarray) -> float: ...


@dataclass(frozen=True)
class RidgeModel:
    """Linear model in original feature units.

    ``mean`` and ``scale`` are the training standardization; ``weights``
    have already been mapped back through them.
    """

    weights: np.ndarray
    intercept: float
    regularization: float
    mean: np.ndarray
    scale: np.ndarray

    def predict(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.weights + self.intercept


def _svd(data: FeatureMatrix):
    Z = data.standardize(data.X)
    y = data.target - data.target.mean()
    U, s, Vt = np.linalg.svd(Z, full_matrices=False)
    keep = s > s.max(initial=0.0) * max(Z.shape) * np.finfo(float).eps
    return U[:, keep], s[keep], Vt[keep], y


def _model(data, Vt, s, Uty, reg) -> RidgeModel:
    wz = Vt.T @ (s / (s * s + reg) * Uty)
    w = wz / data.scale
    b = float(data.target.mean() - w @ data.mean)
    return RidgeModel(w, b, float(reg), data.mean, data.scale)


def fit_ridge(data: FeatureMatrix, regularization: float) -> RidgeModel:
    """Ridge regression on standardized features, intercept unpenalized."""
    if len(data) < 2:
        raise ValueError(f"ridge needs at least 2 rows, got {len(data)}")
    if regularization < 0:
        raise ValueError("regularization must be >= 0")
    U, s, Vt, y = _svd(data)
    return _model(data, Vt, s, U.T @ y, regularization)


def fit_ridge_gcv(data: FeatureMatrix, grid: Sequence[float] = DEFAULT_GRID
                  ) -> RidgeModel:
    """Ridge with the penalty picked by generalized cross-validation."""
    if len(data) < 2:
        raise ValueError(f"ridge needs at least 2 rows, got {len(data)}")
    U, s, Vt, y = _svd(data)
    Uty = U.T @ y
    n = y.size
    off_span = float(y @ y - Uty @ Uty)
    best, best_score = None, np.inf
    for reg in grid:
        shrink = s * s / (s * s + reg)
        rss = off_span + float(np.sum(((1.0 - shrink) * Uty) ** 2))
        dof = float(shrink.sum()) + 1.0
        if n - dof <= 0:
            continue
        score = n * rss / (n - dof) ** 2
        if score < best_score:
            best, best_score = reg, score
    if best is None:
        best = max(grid)
    return _model(data, Vt, s, Uty, best)


@dataclass(frozen=True)
class RidgeRegressor:
    """Ridge member of the regressor interface.

    A fixed ``regularization`` is used when given, otherwise GCV over
    ``grid`` inside each training set.
    """

    regularization: Optional[float] = None
    grid: tuple = DEFAULT_GRID

    def fit(self, data: FeatureMatrix) -> RidgeModel:
        if self.regularization is None:
            return fit_ridge_gcv(data, self.grid)
        return fit_ridge(data, self.regularization)

    def predict(self, model: RidgeModel, x) -> float:
        return float(model.predict(np.atleast_2d(x))[0])


@dataclass(frozen=True)
class ForecastReport:
    """Predicted and realized values of ``x(t)`` at the scored steps."""

    t_index: np.ndarray
    predictions: np.ndarray
    actuals: np.ndarray
    mse: float
    naive_mse: float
    step_seconds: np.ndarray = field(default_factory=lambda: np.zeros(0))
    label: str = ""

    @property
    def errors(self) -> np.ndarray:
        return self.predictions - self.actuals

    def summary(self, include_timing: bool = False) -> dict:
        out = {"label": self.label, "steps": int(self.t_index.size),
               "first_t": int(self.t_index[0]), "last_t": int(self.t_index[-1]),
               "mse": self.mse, "naive_mse": self.naive_mse}
        if include_timing:
            out["total_seconds"] = float(self.step_seconds.sum())
        return out

    def to_csv(self, path, header_lines: Sequence[str] = (),
               include_timing: bool = False) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            w = csv.writer(fh, lineterminator="\n")
            cols = ["t", "prediction", "actual", "squared_error"]
            w.writerow(cols + (["seconds"] if include_timing else []))
            for i, t in enumerate(self.t_index):
                row = [int(t), repr(float(self.predictions[i])),
                       repr(float(self.actuals[i])),
                       repr(float(self.errors[i] ** 2))]
                if include_timing:
                    row.append(repr(float(self.step_seconds[i])))
                w.writerow(row)


def _report(ts, preds, x, seconds, label) -> ForecastReport:
    ts = np.asarray(ts, dtype=int)
    preds = np.asarray(preds, dtype=float)
    actual = x[ts - 1]
    return ForecastReport(ts, preds, actual,
                          float(np.mean((preds - actual) ** 2)),
                          naive_benchmark(x, (int(ts[0]), int(ts[-1]))),
                          np.asarray(seconds, dtype=float), label)


def _values(series) -> np.ndarray:
    if isinstance(series, TimeSeries):
        return series.values
    return np.asarray(series, dtype=float)


def naive_benchmark(series, rng: tuple) -> float:
    """MSE of ``x_hat(t) = x(t-1)`` over the 1-based range ``rng``."""
    x = _values(series)
    a, b = rng
    if a < 2:
        raise ValueError("naive prediction needs a previous sample; start >= 2")
    if b < a or b > x.size:
        raise ValueError(f"range {rng} outside 2..{x.size}")
    d = x[a - 1:b] - x[a - 2:b - 1]
    return float(np.mean(d * d))


def rolling_mse(report: ForecastReport, window: int) -> np.ndarray:
    """Trailing mean of squared errors; ``len = steps - window + 1``."""
    sq = report.errors ** 2
    if not 1 <= window <= sq.size:
        raise ValueError(f"window {window} outside 1..{sq.size}")
    c = np.concatenate(([0.0], np.cumsum(sq)))
    return (c[window:] - c[:-window]) / window


def evaluate_split(series, T1: int, T2: int, tau: int,
                   selector: FeatureSetSelector,
                   ensemble: Optional[EnsembleConfig],
                   lowess: Optional[LowessConfig] = LowessConfig(),
                   regressor: Regressor = RidgeRegressor()) -> ForecastReport:
    """Train/test split inside one decomposition of ``x(1..T1+T2)``.

    Training rows are ``t = tau..T1-1`` (targets up to ``x(T1)``); the test
    scores the predictions of ``x(T1+1)..x(T1+T2)``.
    """
    x = _values(series)
    if T1 + T2 > x.size or T2 < 1:
        raise ValueError(f"T1+T2={T1 + T2} exceeds series length {x.size}")
    if T1 - 1 - tau + 1 < 2:
        raise ValueError(f"T1={T1} leaves fewer than 2 training rows for tau={tau}")
    start = time.perf_counter()
    hw = hht_window(x[:T1 + T2], 1, selector, ensemble, lowess)
    train_t = np.arange(tau, T1)
    data = FeatureMatrix(hw.rows(train_t, tau, selector),
                         x[train_t] - x[train_t - 1], train_t, tau)
    model = regressor.fit(data)
    test_t = np.arange(T1, T1 + T2)
    rows = hw.rows(test_t, tau, selector)
    preds = [x[t - 1] + regressor.predict(model, r) for t, r in zip(test_t, rows)]
    elapsed = time.perf_counter() - start
    return _report(test_t + 1, preds, x, np.full(T2, elapsed / T2), "split")


def forecast_step(history, tau: int, selector: FeatureSetSelector,
                  ensemble: Optional[EnsembleConfig],
                  lowess: Optional[LowessConfig],
                  regressor: Regressor) -> float:
    """One-shot prediction of the sample that follows ``history``.

    ``history`` is the training window ``x(t-L), ..., x(t-1)``.  Training
    rows are local times ``tau..L-1``; the prediction uses features at
    local time ``L``.
    """
    h = np.array(history, dtype=float)
    L = h.size
    if L - 1 - tau + 1 < 2:
        raise ValueError(f"window of {L} leaves fewer than 2 rows for tau={tau}")
    hw = hht_window(h, 1, selector, ensemble, lowess)
    train_t = np.arange(tau, L)
    data = FeatureMatrix(hw.rows(train_t, tau, selector),
                         h[train_t] - h[train_t - 1], train_t, tau)
    model = regressor.fit(data)
    x_next = hw.rows([L], tau, selector)[0]
    return float(h[-1] + regressor.predict(model, x_next))


def _timed_step(args):
    t, history, tau, selector, ensemble, lowess, regressor = args
    start = time.perf_counter()
    try:
        pred = forecast_step(history, tau, selector, ensemble, lowess,
                             regressor)
    except Exception as exc:
        raise ForecastError(f"step t={t} failed: {exc}") from exc
    return pred, time.perf_counter() - start


def walk_forward(series, T1: int, T2: int, T_window: int, tau: int,
                 selector: FeatureSetSelector,
                 ensemble: Optional[EnsembleConfig],
                 lowess: Optional[LowessConfig] = LowessConfig(),
                 regressor: Regressor = RidgeRegressor(),
                 workers: int = 1, label: str = "walk_forward"
                 ) -> ForecastReport:
    """Extrapolating one-step forecasts for ``t = T1+1..T1+T2``.

    Step ``t`` sees only ``x(t-T_window), ..., x(t-1)``.  The regressor is
    trained on a fresh decomposition of that window before predicting ``x(t)``.  Steps are
    independent, so ``workers > 1`` runs them in processes; results are
    collected in step order and match a serial run exactly.
    """
    x = _values(series)
    if T1 < T_window:
        raise ValueError(f"T1={T1} < T_window={T_window}: insufficient history")
    if T1 + T2 > x.size or T2 < 1:
        raise ValueError(f"T1+T2={T1 + T2} exceeds series length {x.size}")
    steps = range(T1 + 1, T1 + T2 + 1)
    jobs = [(t, x[t - 1 - T_window:t - 1].copy(), tau, selector, ensemble,
             lowess, regressor) for t in steps]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_timed_step, jobs))
    else:
        results = [_timed_step(j) for j in jobs]
    preds = [r[0] for r in results]
    secs = [r[1] for r in results]
    logger.info("%s: %d steps in %.2fs", label, len(preds), sum(secs))
    return _report(list(steps), preds, x, secs, label)


def compare_with_plain_lags(series, T1: int, T2: int, T_window: int, tau: int,
                            selector: FeatureSetSelector,
                            ensemble: Optional[EnsembleConfig],
                            lowess: Optional[LowessConfig] = LowessConfig(),
                            regressor: Regressor = RidgeRegressor(),
                            workers: int = 1) -> dict:
    """Walk-forward MSE of HHT features against raw-lag features.

    The ratio is reported, never judged.
    """
    hht = walk_forward(series, T1, T2, T_window, tau, selector, ensemble,
                       lowess, regressor, workers, label="hht")
    plain = walk_forward(series, T1, T2, T_window, tau,
                         FeatureSetSelector.plain_lags(), None, lowess,
                         regressor, workers, label="plain_lags")
    ratio = hht.mse / plain.mse if plain.mse > 0 else float("nan")
    return {"hht": hht, "plain": plain, "mse_hht": hht.mse,
            "mse_plain": plain.mse, "mse_ratio": ratio,
            "naive_mse": hht.naive_mse}


def write_report_json(path, payload: dict) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=False, allow_nan=True)
        fh.write("\n")
