"""Power spectra and FFT-domain band-stop filtering of daily series.

The filter is a zero-phase frequency mask: the series is transformed with a
length-D DFT (no padding), every bin whose absolute frequency falls inside a
stop band is zeroed (or ramped down with a raised cosine), and the inverse
transform is taken. Removing the weekly reporting cycle and its harmonics is
the intended use; see :func:`default_weekly_bands`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError, SpecError
from .panel import TimeSeriesPanel

NYQUIST = 0.5
FILTER_MODES = ("hard_zero", "cosine_taper")


@dataclass(frozen=True)
class StopBand:
    center: float
    low_edge: float
    high_edge: float

    def __post_init__(self):
        if not (0 < self.low_edge < self.center < self.high_edge):
            raise SpecError(
                f"stop band needs 0 < low < center < high, got "
                f"({self.low_edge}, {self.center}, {self.high_edge})"
            )
        if self.high_edge >= NYQUIST:
            raise SpecError(f"stop band edge {self.high_edge} at or beyond Nyquist ({NYQUIST} 1/days)")

    @classmethod
    def parse(cls, text: str) -> "StopBand":
        """Parse ``low:center:high`` (all in 1/days)."""
        try:
            low, center, high = (float(p) for p in text.split(":"))
        except ValueError:
            raise SpecError(f"band must be 'low:center:high', got {text!r}") from None
        return cls(center=center, low_edge=low, high_edge=high)

    def to_text(self) -> str:
        return f"{self.low_edge!r}:{self.center!r}:{self.high_edge!r}"


@dataclass(frozen=True)
class SpectralFilterSpec:
    bands: tuple[StopBand, ...]
    mode: str = "hard_zero"
    taper_fraction: float = 0.1

    def __post_init__(self):
        bands = tuple(sorted(self.bands, key=lambda b: b.center))
        if not bands:
            raise SpecError("filter spec needs at least one band")
        for a, b in zip(bands[:-1], bands[1:]):
            if a.high_edge >= b.low_edge:
                raise SpecError(f"stop bands overlap: {a} and {b}")
        if self.mode not in FILTER_MODES:
            raise SpecError(f"mode must be one of {FILTER_MODES}, got {self.mode!r}")
        if not 0.0 <= self.taper_fraction <= 1.0:
            raise SpecError(f"taper_fraction must lie in [0, 1], got {self.taper_fraction}")
        object.__setattr__(self, "bands", bands)


@dataclass(frozen=True)
class PowerSpectrum:
    frequencies: np.ndarray
    power: np.ndarray = field(repr=False)


def default_weekly_bands(mode: str = "hard_zero", taper_fraction: float = 0.1) -> SpectralFilterSpec:
    """Weekly reporting cycle plus its 1/2- and 1/3-week harmonics."""
    return SpectralFilterSpec(
        bands=(
            StopBand(center=0.14299706, low_edge=1 / 7.6, high_edge=1 / 6.35),
            StopBand(center=0.28599412, low_edge=1 / 3.7, high_edge=1 / 3.29),
            StopBand(center=0.42899119, low_edge=1 / 2.371, high_edge=1 / 2.3),
        ),
        mode=mode,
        taper_fraction=taper_fraction,
    )


def _as_series(series, min_len=4) -> np.ndarray:
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise NumericError(f"expected a 1-D series, got shape {x.shape}")
    if x.size < min_len:
        raise NumericError(f"series too short for a spectrum: {x.size} < {min_len}")
    if not np.all(np.isfinite(x)):
        raise NumericError("series contains non-finite values")
    return x


def power_spectrum(series) -> PowerSpectrum:
    """One-sided periodogram ``|X_k|^2 / D`` of the mean-removed series.

    Bin ``k`` sits at ``k / D`` cycles per day for ``k = 0 .. D // 2``.
    """
    x = _as_series(series)
    n = x.size
    coeffs = np.fft.rfft(x - x.mean())
    freqs = np.arange(coeffs.size) / n
    return PowerSpectrum(frequencies=freqs, power=np.abs(coeffs) ** 2 / n)


def _fft_frequencies(n: int) -> np.ndarray:
    # |f| for every bin of a length-n DFT; negative bins mirror positive ones
    k = np.arange(n)
    return np.minimum(k, n - k) / n


def _band_gain(freqs: np.ndarray, band: StopBand, mode: str, taper_fraction: float) -> np.ndarray:
    gain = np.ones_like(freqs)
    inside = (freqs >= band.low_edge) & (freqs <= band.high_edge)
    if mode == "hard_zero" or taper_fraction == 0.0:
        gain[inside] = 0.0
        return gain
    ramp = taper_fraction * (band.high_edge - band.low_edge) / 2
    dist = np.minimum(freqs - band.low_edge, band.high_edge - freqs)
    g = np.where(dist >= ramp, 0.0, 0.5 * (1 + np.cos(np.pi * np.clip(dist, 0, ramp) / ramp)))
    gain[inside] = g[inside]
    return gain


def frequency_mask(n: int, spec: SpectralFilterSpec) -> np.ndarray:
    """Real, symmetric gain for each bin of a length-``n`` DFT."""
    freqs = _fft_frequencies(n)
    mask = np.ones(n)
    for band in spec.bands:
        mask *= _band_gain(freqs, band, spec.mode, spec.taper_fraction)
    return mask


def band_stop(series, spec: SpectralFilterSpec) -> np.ndarray:
    """Remove the stop bands of ``spec`` from ``series``; output has the same length."""
    x = _as_series(series)
    for band in spec.bands:
        if band.high_edge >= NYQUIST:
            raise SpecError(f"stop band {band} beyond Nyquist")
    y = np.fft.ifft(np.fft.fft(x) * frequency_mask(x.size, spec))
    scale = max(float(np.max(np.abs(x))), 1.0)
    residue = float(np.max(np.abs(y.imag)))
    if residue >= 1e-9 * scale:
        raise NumericError(f"inverse transform not real: imaginary residue {residue:g}")
    return y.real.copy()


def filter_panel(panel: TimeSeriesPanel, spec: SpectralFilterSpec) -> TimeSeriesPanel:
    """Apply :func:`band_stop` to every region independently."""
    out = np.empty_like(panel.values)
    for i in range(panel.n_regions):
        out[i] = band_stop(panel.values[i], spec)
    return panel.with_values(out)
