"""Classical empirical mode decomposition.

The sifting loop repeatedly subtracts the mean of the cubic-spline envelopes
through the local maxima and minima until the candidate is an intrinsic mode
function (IMF).  The IMF is removed from the remainder and the search
restarts on the next, slower scale.  Decomposition stops once the remainder has at most one
interior extremum.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .series import TimeSeries

logger = logging.getLogger(__name__)

MIN_LENGTH = 8


class TooFewExtrema(ValueError):
    """Envelope is undefined: fewer than two maxima or two minima."""


@dataclass(frozen=True)
class SiftConfig:
    sd_threshold: float = 0.2
    max_sift_iterations: int = 100
    max_modes: Optional[int] = None

    def __post_init__(self):
        if not self.sd_threshold > 0:
            raise ValueError("sift.sd_threshold must be > 0")
        if self.max_sift_iterations < 1:
            raise ValueError("sift.max_sift_iterations must be >= 1")
        if self.max_modes is not None and self.max_modes < 0:
            raise ValueError("sift.max_modes must be >= 0")

    @staticmethod
    def dyadic_cap(n: int) -> int:
        """The optional ``floor(log2 T) - 1`` mode cap."""
        return max(int(np.floor(np.log2(n))) - 1, 1)


@dataclass(frozen=True)
class Imf:
    """One sifted component.  ``mode_index`` is 1-based."""

    values: np.ndarray
    mode_index: int = 1
    iterations: int = 0
    converged: bool = True


@dataclass(frozen=True)
class Decomposition:
    """IMFs (fastest first) stacked as rows, plus the residue."""

    imfs: np.ndarray
    residue: np.ndarray

    def __post_init__(self):
        imfs = np.atleast_2d(np.asarray(self.imfs, dtype=float))
        residue = np.asarray(self.residue, dtype=float)
        if imfs.size == 0:
            imfs = np.zeros((0, residue.size))
        if imfs.shape[1] != residue.size:
            raise ValueError("IMFs and residue differ in length")
        imfs.setflags(write=False)
        residue.setflags(write=False)
        object.__setattr__(self, "imfs", imfs)
        object.__setattr__(self, "residue", residue)

    @property
    def n_modes(self) -> int:
        return self.imfs.shape[0]

    @property
    def source_length(self) -> int:
        return self.residue.size

    def imf(self, j: int) -> Imf:
        """1-based access to a single mode."""
        if not 1 <= j <= self.n_modes:
            raise IndexError(f"mode {j} outside 1..{self.n_modes}")
        return Imf(self.imfs[j - 1], j)

    def reconstruct(self) -> np.ndarray:
        return self.imfs.sum(axis=0) + self.residue

    def to_csv(self, path, header_lines: Sequence[str] = ()) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t"] + [f"imf_{j}" for j in range(1, self.n_modes + 1)]
                       + ["residue"])
            for i in range(self.source_length):
                w.writerow([i + 1] + [repr(float(v)) for v in self.imfs[:, i]]
                           + [repr(float(self.residue[i]))])

    @classmethod
    def from_csv(cls, path) -> "Decomposition":
        with Path(path).open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(l for l in fh if not l.startswith("#")))
        header, body = rows[0], np.array(rows[1:], dtype=float)
        if header[0] != "t" or header[-1] != "residue":
            raise ValueError(f"unexpected decomposition header {header}")
        return cls(body[:, 1:-1].T, body[:, -1])


def find_extrema(signal) -> tuple[np.ndarray, np.ndarray]:
    """Indices (0-based) of interior local maxima and minima.

    A flat run counts once, at its floor midpoint, and only when both
    neighbours of the run lie on the same side of it.  The first and last
    samples are never extrema.
    """
    x = np.asarray(signal, dtype=float)
    if x.size < 3:
        raise ValueError("need at least 3 samples to look for extrema")
    # collapse runs of equal values
    change = np.flatnonzero(np.diff(x) != 0) + 1
    starts = np.concatenate(([0], change))
    ends = np.concatenate((change - 1, [x.size - 1]))
    levels = x[starts]
    if levels.size < 3:
        empty = np.array([], dtype=int)
        return empty, empty
    left = np.sign(levels[1:-1] - levels[:-2])
    right = np.sign(levels[1:-1] - levels[2:])
    mid = (starts[1:-1] + ends[1:-1]) // 2
    maxima = mid[(left > 0) & (right > 0)]
    minima = mid[(left < 0) & (right < 0)]
    return maxima.astype(int), minima.astype(int)


def zero_crossings(signal) -> int:
    x = np.asarray(signal, dtype=float)
    s = np.sign(x)
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def is_imf_shape(signal) -> bool:
    """Extrema and zero-crossing counts differ by at most one."""
    mx, mn = find_extrema(signal)
    return abs(mx.size + mn.size - zero_crossings(signal)) <= 1


def is_residue(signal) -> bool:
    """True when the signal has at most one interior extremum."""
    x = np.asarray(signal, dtype=float)
    if x.size < 3:
        return True
    mx, mn = find_extrema(x)
    return mx.size + mn.size <= 1


def _envelope(idx: np.ndarray, x: np.ndarray) -> np.ndarray:
    last = x.size - 1
    # mirror the two extrema nearest each end across the endpoint
    lead = idx[:2][::-1]
    tail = idx[-2:][::-1]
    knots = np.concatenate((-lead, idx, 2 * last - tail))
    vals = np.concatenate((x[lead], x[idx], x[tail]))
    spline = CubicSpline(knots.astype(float), vals, bc_type="natural")
    return spline(np.arange(x.size, dtype=float))


def envelopes(signal) -> tuple[np.ndarray, np.ndarray]:
    """Upper and lower natural cubic-spline envelopes."""
    x = np.asarray(signal, dtype=float)
    mx, mn = find_extrema(x)
    if mx.size < 2 or mn.size < 2:
        raise TooFewExtrema(
            f"{mx.size} maxima and {mn.size} minima; need two of each")
    return _envelope(mx, x), _envelope(mn, x)


def envelope_mean(signal) -> np.ndarray:
    upper, lower = envelopes(signal)
    return 0.5 * (upper + lower)


def sift(signal, config: SiftConfig = SiftConfig(), mode_index: int = 1) -> Imf:
    """Extract the finest-scale IMF of ``signal``.

    Stops when the Cauchy-type criterion
    ``sum((c_prev - c_new)**2) / sum(c_prev**2)`` falls below
    ``config.sd_threshold`` and the candidate has IMF shape, or after
    ``config.max_sift_iterations`` rounds.  If the envelope becomes undefined
    mid-sift, the current iterate is returned with ``converged=False``.
    """
    c = np.array(signal, dtype=float)
    if is_residue(c):
        raise ValueError("signal already satisfies the residue condition")
    for it in range(1, config.max_sift_iterations + 1):
        try:
            m = envelope_mean(c)
        except TooFewExtrema:
            logger.debug("extrema vanished after %d sifts", it - 1)
            return Imf(c, mode_index, it - 1, converged=False)
        denom = float(np.dot(c, c))
        new = c - m
        sd = float(np.dot(m, m)) / denom if denom > 0 else 0.0
        c = new
        if sd < config.sd_threshold and is_imf_shape(c):
            return Imf(c, mode_index, it, converged=True)
    return Imf(c, mode_index, config.max_sift_iterations, converged=False)


def _stop(r: np.ndarray) -> bool:
    mx, mn = find_extrema(r)
    return mx.size + mn.size <= 1 or mx.size < 2 or mn.size < 2


def emd_array(x, config: SiftConfig = SiftConfig()) -> Decomposition:
    """Plain EMD of a 1-D array."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < MIN_LENGTH:
        raise ValueError(f"EMD needs at least {MIN_LENGTH} samples")
    cap = config.max_modes if config.max_modes is not None else x.size
    r = x.copy()
    imfs = []
    while len(imfs) < cap and not _stop(r):
        imf = sift(r, config, len(imfs) + 1)
        if not np.any(imf.values):
            break
        imfs.append(imf.values)
        r = r - imf.values
    return Decomposition(np.array(imfs).reshape(len(imfs), x.size), r)


def emd(series, config: SiftConfig = SiftConfig()) -> Decomposition:
    """Plain EMD of a :class:`TimeSeries` (or array)."""
    values = series.values if isinstance(series, TimeSeries) else series
    return emd_array(values, config)
