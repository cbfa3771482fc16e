"""HHT feature vectors and supervised datasets.

A row at time ``t`` concatenates, for every selected mode in ascending order
and every selected kind in the order ``c, ch, a, f``, the ``tau`` lagged
values oldest first.  Lagged raw values (``x``) come before the modes when
requested, and the end-effect factor ``lambda`` is appended last.  The
target of the row is ``x(t+1) - x(t)``.

Time indices are 1-based.  Inside a decomposition window they are local to
the window; :class:`FeatureMatrix` records global indices.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .ceemd import EnsembleConfig, ceemd
from .emd import Decomposition, emd_array
from .hsa import AnalyticMode, LowessConfig, analytic_modes
from .series import TimeSeries

KINDS = ("c", "ch", "a", "f")
_KIND_FIELD = {"c": "real_part", "ch": "imag_part", "a": "amplitude",
               "f": "frequency"}


def end_effect_factor(t, T1, T2):
    """Position of ``t`` on ``[T1, T2]`` mapped to ``[-1, 1]``."""
    if not T1 < T2:
        raise ValueError(f"degenerate interval [{T1}, {T2}]")
    ta = np.asarray(t, dtype=float)
    if np.any(ta < T1) or np.any(ta > T2):
        raise ValueError(f"t={t} outside [{T1}, {T2}]")
    lam = (2 * ta - (T1 + T2)) / (T2 - T1)
    return float(lam) if lam.ndim == 0 else lam


@dataclass(frozen=True)
class FeatureSetSelector:
    """Which features go into a row.

    ``mode_subset`` is ``"all"``, ``"first"`` or ``"last"``; the latter two
    take ``k`` modes.  ``include_series`` adds plain lags of the input and is
    what the raw-series benchmark uses on its own.
    """

    include_imf: bool = True
    include_hilbert: bool = False
    include_amplitude: bool = False
    include_frequency: bool = False
    include_lambda: bool = False
    include_series: bool = False
    mode_subset: str = "all"
    k: Optional[int] = None

    def __post_init__(self):
        if not (self.include_series or self.include_lambda or self.kinds):
            raise ValueError("features: select at least one feature kind")
        if self.mode_subset not in ("all", "first", "last"):
            raise ValueError(
                f"features.modes: unknown subset {self.mode_subset!r}")
        if self.mode_subset != "all" and (self.k is None or self.k < 1):
            raise ValueError("features.modes: first/last need k >= 1")

    @classmethod
    def parse(cls, kinds: str, modes: str = "all", lam: bool = False
              ) -> "FeatureSetSelector":
        """Build from strings like ``"c,ch,a,f"`` and ``"first:5"``."""
        names = [s.strip() for s in kinds.split(",") if s.strip()]
        unknown = set(names) - set(KINDS) - {"x"}
        if unknown:
            raise ValueError(f"features.kinds: unknown {sorted(unknown)}")
        subset, _, k = modes.partition(":")
        return cls("c" in names, "ch" in names, "a" in names, "f" in names,
                   lam, "x" in names, subset, int(k) if k else None)

    @classmethod
    def plain_lags(cls) -> "FeatureSetSelector":
        return cls(include_imf=False, include_series=True)

    @property
    def kinds(self) -> tuple:
        flags = (self.include_imf, self.include_hilbert,
                 self.include_amplitude, self.include_frequency)
        return tuple(k for k, on in zip(KINDS, flags) if on)

    @property
    def needs_decomposition(self) -> bool:
        return bool(self.kinds)

    def modes(self, n: int) -> list[int]:
        """1-based mode indices selected out of ``n``."""
        if not self.kinds:
            return []
        if self.mode_subset == "all":
            return list(range(1, n + 1))
        if self.k > n:
            raise ValueError(
                f"selector wants {self.mode_subset} {self.k} modes, "
                f"decomposition has {n}")
        if self.mode_subset == "first":
            return list(range(1, self.k + 1))
        return list(range(n - self.k + 1, n + 1))

    def columns(self, n: int, tau: int) -> list[str]:
        lags = range(tau - 1, -1, -1)
        cols = []
        if self.include_series:
            cols += [f"x_lag{l}" for l in lags]
        for j in self.modes(n):
            for kind in self.kinds:
                cols += [f"{kind}{j}_lag{l}" for l in lags]
        if self.include_lambda:
            cols.append("lambda")
        return cols

    def width(self, n: int, tau: int) -> int:
        return (len(self.kinds) * len(self.modes(n)) + self.include_series) * tau \
            + self.include_lambda


def _lagged(values: np.ndarray, ts: np.ndarray, tau: int) -> np.ndarray:
    # rows of (v(t-tau+1), ..., v(t)) for 1-based t
    return values[(ts - tau)[:, None] + np.arange(tau)[None, :]]


def feature_rows(decomp: Optional[Decomposition], modes: Sequence[AnalyticMode],
                 ts, tau: int, selector: FeatureSetSelector,
                 series=None) -> np.ndarray:
    """Feature rows for the local 1-based times ``ts`` of one window."""
    ts = np.atleast_1d(np.asarray(ts, dtype=int))
    if series is not None:
        length = np.asarray(series).size
    elif decomp is not None:
        length = decomp.source_length
    else:
        raise ValueError("need a decomposition or the raw series")
    if tau < 1 or ts.min() - tau + 1 < 1 or ts.max() > length:
        raise ValueError(
            f"window for t in [{ts.min()}, {ts.max()}], tau={tau} outside "
            f"1..{length}")
    n = decomp.n_modes if decomp is not None else 0
    blocks = []
    if selector.include_series:
        if series is None:
            raise ValueError("selector wants raw lags but no series given")
        blocks.append(_lagged(np.asarray(series, dtype=float), ts, tau))
    selected = selector.modes(n)
    if selected and len(modes) != n:
        raise ValueError(f"{len(modes)} analytic modes for {n} IMFs")
    for j in selected:
        m = modes[j - 1]
        for kind in selector.kinds:
            blocks.append(_lagged(getattr(m, _KIND_FIELD[kind]), ts, tau))
    if selector.include_lambda:
        blocks.append(end_effect_factor(ts, 1, length)[:, None])
    if not blocks:
        return np.zeros((ts.size, 0))
    return np.hstack(blocks)


def build_features(decomp: Optional[Decomposition],
                   modes: Sequence[AnalyticMode], t: int, tau: int,
                   selector: FeatureSetSelector, series=None) -> np.ndarray:
    """One feature vector at local time ``t`` (see module docstring)."""
    return feature_rows(decomp, modes, [t], tau, selector, series)[0]


@dataclass(frozen=True)
class HHTWindow:
    """Decomposition and Hilbert analysis of ``values``.

    ``start`` is the global 1-based index of ``values[0]``.
    """

    start: int
    values: np.ndarray
    decomposition: Optional[Decomposition]
    modes: list

    def rows(self, ts_global, tau: int, selector: FeatureSetSelector
             ) -> np.ndarray:
        local = np.asarray(ts_global, dtype=int) - self.start + 1
        return feature_rows(self.decomposition, self.modes, local, tau,
                            selector, self.values)


def decompose(values, ensemble: Optional[EnsembleConfig]) -> Decomposition:
    """CEEMD when ``ensemble`` is given, plain EMD otherwise."""
    if ensemble is None:
        return emd_array(values)
    return ceemd(values, ensemble)


def hht_window(values, start: int, selector: FeatureSetSelector,
               ensemble: Optional[EnsembleConfig],
               lowess: Optional[LowessConfig]) -> HHTWindow:
    values = np.array(values, dtype=float)
    if not selector.needs_decomposition:
        return HHTWindow(start, values, None, [])
    d = decompose(values, ensemble)
    return HHTWindow(start, values, d, analytic_modes(d, lowess))


@dataclass(frozen=True)
class FeatureMatrix:
    """Rows of features with next-step targets.

    ``target[k]`` is ``x(t_index[k] + 1) - x(t_index[k])``.  The z-score
    parameters are computed from these rows once, at construction;
    zero-variance columns get unit scale.
    """

    X: np.ndarray
    target: np.ndarray
    t_index: np.ndarray
    tau: int = 1
    columns: tuple = ()
    mean: np.ndarray = field(default=None)
    scale: np.ndarray = field(default=None)

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        y = np.asarray(self.target, dtype=float)
        if X.shape[0] != y.size or np.asarray(self.t_index).size != y.size:
            raise ValueError("rows, targets and t_index differ in length")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "target", y)
        object.__setattr__(self, "t_index", np.asarray(self.t_index, dtype=int))
        if not self.columns:
            object.__setattr__(self, "columns",
                               tuple(f"f{i}" for i in range(X.shape[1])))
        if self.mean is None and X.shape[0]:
            sd = X.std(axis=0)
            object.__setattr__(self, "mean", X.mean(axis=0))
            object.__setattr__(self, "scale", np.where(sd > 0, sd, 1.0))

    @classmethod
    def from_arrays(cls, X, y) -> "FeatureMatrix":
        y = np.asarray(y, dtype=float)
        return cls(X, y, np.arange(1, y.size + 1))

    def __len__(self) -> int:
        return self.target.size

    def standardize(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.scale

    def to_csv(self, path, header_lines: Sequence[str] = ()) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", *self.columns, "target"])
            for t, row, y in zip(self.t_index, self.X, self.target):
                w.writerow([int(t), *(repr(float(v)) for v in row),
                            repr(float(y))])


def build_dataset(series, rows: tuple, tau: int,
                  selector: FeatureSetSelector,
                  ensemble: Optional[EnsembleConfig],
                  lowess: Optional[LowessConfig] = LowessConfig(),
                  window: Optional[tuple] = None) -> FeatureMatrix:
    """Supervised rows for global times ``rows[0]..rows[1]``.

    The decomposition and Hilbert analysis run once over ``window``
    (1-based inclusive, default ``[1, rows[1]]``, so no feature sees a
    sample later than the last row time); every row is a function of
    samples inside that window only.
    """
    x = series.values if isinstance(series, TimeSeries) else np.asarray(series, dtype=float)
    t_a, t_b = rows
    if window is None:
        window = (1, t_b)
    w_a, w_b = window
    if not (1 <= w_a <= w_b <= x.size):
        raise ValueError(f"window {window} outside 1..{x.size}")
    if t_a > t_b or t_a - tau + 1 < w_a or t_b > w_b or t_b + 1 > x.size:
        raise ValueError(
            f"insufficient history for rows {rows} with tau={tau} "
            f"in window {window} of a {x.size}-sample series")
    hw = hht_window(x[w_a - 1:w_b], w_a, selector, ensemble, lowess)
    ts = np.arange(t_a, t_b + 1)
    n = hw.decomposition.n_modes if hw.decomposition is not None else 0
    return FeatureMatrix(hw.rows(ts, tau, selector), x[ts] - x[ts - 1], ts,
                         tau, tuple(selector.columns(n, tau)))
