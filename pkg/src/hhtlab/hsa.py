"""Hilbert spectral analysis of IMFs.

Each IMF becomes an analytic signal ``c + i*H[c]`` whose modulus and
unwrapped argument give instantaneous amplitude and phase; the frequency is
the centred difference of the phase over ``2*pi``, smoothed with robust
LOWESS.  Frequencies are in cycles per sample.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, NamedTuple, Optional, Sequence

import numpy as np

from .emd import Decomposition, Imf
from .series import interior


@dataclass(frozen=True)
class LowessConfig:
    span: float = 0.05
    robust_iterations: int = 5

    def __post_init__(self):
        if not 0 < self.span <= 1:
            raise ValueError("lowess.span must be in (0, 1]")
        if self.robust_iterations < 0:
            raise ValueError("lowess.robust_iterations must be >= 0")


def hilbert(signal) -> np.ndarray:
    """Discrete Hilbert transform by the FFT analytic-signal construction."""
    x = np.asarray(signal, dtype=float)
    n = x.size
    if n < 4:
        raise ValueError("Hilbert transform needs at least 4 samples")
    h = np.zeros(n)
    h[0] = 1.0
    if n % 2 == 0:
        h[n // 2] = 1.0
        h[1:n // 2] = 2.0
    else:
        h[1:(n + 1) // 2] = 2.0
    return np.fft.ifft(np.fft.fft(x) * h).imag


def _windows(n: int, k: int) -> np.ndarray:
    # k nearest neighbours on a unit grid: centred, clipped at the edges
    start = np.clip(np.arange(n) - (k - 1) // 2, 0, n - k)
    return start[:, None] + np.arange(k)[None, :]


def _local_linear(y, idx, base_w, robust):
    # local coordinates: the target point sits at 0
    x = (idx - np.arange(idx.shape[0])[:, None]).astype(float)
    w = base_w * robust[idx]
    sw = w.sum(axis=1)
    sx = (w * x).sum(axis=1)
    sy = (w * y[idx]).sum(axis=1)
    sxx = (w * x * x).sum(axis=1)
    sxy = (w * x * y[idx]).sum(axis=1)
    det = sw * sxx - sx * sx
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = sy / sw
        slope = (sw * sxy - sx * sy) / det
        fit = mean - slope * (sx / sw)
    flat = ~np.isfinite(fit) | (np.abs(det) <= 1e-12 * np.maximum(sw * sxx, 1e-300))
    fit = np.where(flat, mean, fit)
    return np.where(sw > 0, fit, np.nan)


def robust_lowess(y, config: LowessConfig = LowessConfig()) -> np.ndarray:
    """Robust locally weighted linear smoothing on a unit-spaced grid.

    Each point is fitted from its ``ceil(span * n)`` nearest neighbours with
    tricube distance weights.  Each robustness round reweights points by the
    bisquare of ``residual / (6 * median|residual|)``.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    k = int(math.ceil(config.span * n))
    if n < 4 or n < k:
        raise ValueError(f"LOWESS needs at least max(4, {k}) samples, got {n}")
    if k < 2:
        raise ValueError(f"LOWESS window of {k} point(s); need at least 2")
    idx = _windows(n, k)
    dist = np.abs(idx - np.arange(n)[:, None]).astype(float)
    h = dist.max(axis=1, keepdims=True)
    h = np.where(h > 0, h, 1.0)
    # scale slightly past the farthest neighbour so it keeps a positive weight
    u = np.clip(dist / (h * (1.0 + 1.0 / k)), 0.0, 1.0)
    base_w = (1.0 - u ** 3) ** 3

    robust = np.ones(n)
    fit = _local_linear(y, idx, base_w, robust)
    floor = 1e-12 * max(float(np.max(np.abs(y))), 1.0)
    for _ in range(config.robust_iterations):
        resid = y - fit
        s = max(float(np.median(np.abs(resid))), floor)
        r = np.clip(resid / (6.0 * s), -1.0, 1.0)
        robust = (1.0 - r ** 2) ** 2
        new = _local_linear(y, idx, base_w, robust)
        # windows with every point rejected keep their previous value
        fit = np.where(np.isfinite(new), new, fit)
    return fit


def instantaneous_frequency(phase,
                            lowess: Optional[LowessConfig] = LowessConfig()
                            ) -> np.ndarray:
    """Phase rate over ``2*pi`` by centred differences, then LOWESS.

    Negative values are kept.  ``lowess=None`` returns the raw estimate.
    """
    theta = np.asarray(phase, dtype=float)
    if theta.size < 3:
        raise ValueError("need at least 3 phase samples")
    f = np.gradient(theta) / (2.0 * np.pi)
    if lowess is not None:
        f = robust_lowess(f, lowess)
    return f


@dataclass(frozen=True)
class AnalyticMode:
    real_part: np.ndarray
    imag_part: np.ndarray
    amplitude: np.ndarray
    phase: np.ndarray
    frequency: np.ndarray
    mode_index: int = 1

    @property
    def energy(self) -> np.ndarray:
        return self.amplitude ** 2


def analytic_mode(imf, lowess: Optional[LowessConfig] = LowessConfig()
                  ) -> AnalyticMode:
    """Hilbert pair of an IMF together with its polar form."""
    if isinstance(imf, Imf):
        c, j = np.asarray(imf.values, dtype=float), imf.mode_index
    else:
        c, j = np.asarray(imf, dtype=float), 1
    ch = hilbert(c)
    amp = np.sqrt(c * c + ch * ch)
    phase = np.unwrap(np.arctan2(ch, c))
    return AnalyticMode(c, ch, amp, phase,
                        instantaneous_frequency(phase, lowess), j)


def analytic_modes(decomp: Decomposition,
                   lowess: Optional[LowessConfig] = LowessConfig()
                   ) -> list[AnalyticMode]:
    return [analytic_mode(decomp.imf(j), lowess)
            for j in range(1, decomp.n_modes + 1)]


class SpectrumPoint(NamedTuple):
    mode_index: int
    time: int
    frequency: float
    energy: float


@dataclass(frozen=True)
class HilbertSpectrum:
    """Sparse support of ``H(f, t)``: one ``(f_j(t), E_j(t))`` per mode and time.

    Arrays have shape ``(n_modes, T)``; ``time`` is 1-based.
    """

    frequency: np.ndarray
    amplitude: np.ndarray

    @property
    def energy(self) -> np.ndarray:
        return self.amplitude ** 2

    @property
    def n_modes(self) -> int:
        return self.frequency.shape[0]

    def __len__(self) -> int:
        return self.frequency.size

    def __iter__(self) -> Iterator[SpectrumPoint]:
        energy = self.energy
        for j in range(self.n_modes):
            for i in range(self.frequency.shape[1]):
                yield SpectrumPoint(j + 1, i + 1, float(self.frequency[j, i]),
                                    float(energy[j, i]))

    def to_csv(self, path, header_lines: Sequence[str] = ()) -> None:
        energy = self.energy
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["mode", "t", "frequency", "energy", "amplitude"])
            for j in range(self.n_modes):
                for i in range(self.frequency.shape[1]):
                    w.writerow([j + 1, i + 1, repr(float(self.frequency[j, i])),
                                repr(float(energy[j, i])),
                                repr(float(self.amplitude[j, i]))])


def hilbert_spectrum(decomp: Decomposition,
                     lowess: Optional[LowessConfig] = LowessConfig()
                     ) -> HilbertSpectrum:
    modes = analytic_modes(decomp, lowess)
    n = decomp.source_length
    if not modes:
        return HilbertSpectrum(np.zeros((0, n)), np.zeros((0, n)))
    return HilbertSpectrum(np.vstack([m.frequency for m in modes]),
                           np.vstack([m.amplitude for m in modes]))


def mode_spectrum_means(spectrum: HilbertSpectrum,
                        keep: float = 0.8) -> list[tuple[float, float]]:
    """Per-mode mean frequency and mean energy over the interior samples."""
    if len(spectrum) == 0:
        raise ValueError("empty spectrum")
    s = interior(spectrum.frequency.shape[1], keep)
    f = spectrum.frequency[:, s].mean(axis=1)
    e = spectrum.energy[:, s].mean(axis=1)
    return [(float(a), float(b)) for a, b in zip(f, e)]


def write_means_csv(means, path, header_lines: Sequence[str] = ()) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["mode", "mean_frequency", "mean_energy"])
        for j, (f, e) in enumerate(means, start=1):
            w.writerow([j, repr(f), repr(e)])


def spectral_reconstruction(modes: Sequence[AnalyticMode], residue) -> np.ndarray:
    """``Re sum_j a_j exp(i theta_j) + r``."""
    out = np.asarray(residue, dtype=float).copy()
    for m in modes:
        out += (m.amplitude * np.exp(1j * m.phase)).real
    return out
