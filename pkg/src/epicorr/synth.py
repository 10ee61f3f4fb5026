"""Synthetic data with planted correlation regimes.

``planted_patterns`` / ``planted_matrices`` give correlation matrices drawn
around four fixed regime patterns (used to check clustering).
``synthetic_panel`` builds a full daily-count panel whose returns switch
between the same regimes in 16-day blocks and which carries a weekly
reporting artifact for the band-stop filter to remove.
"""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

import numpy as np

from .panel import TimeSeriesPanel

DEFAULT_START = dt.date(2020, 2, 27)
DEFAULT_DAYS = 1021
N_REGIMES = 4


def _block_matrix(n, n_blocks, within, between):
    size = n // n_blocks
    block_of = np.minimum(np.arange(n) // size, n_blocks - 1)
    c = np.where(block_of[:, None] == block_of[None, :], within, between)
    np.fill_diagonal(c, 1.0)
    return c


def planted_patterns(n: int = 32) -> np.ndarray:
    """Four positive-definite regime patterns, ordered weak -> strong mean correlation.

    0: near-uncorrelated (0.05 everywhere); 1: four quarters (0.75 within,
    0.05 across, mean ~0.21); 2: two halves (0.55 within, 0.35 across,
    mean ~0.45); 3: uniform 0.8.
    """
    pats = np.stack(
        [
            _block_matrix(n, 1, 0.05, 0.05),
            _block_matrix(n, 4, 0.75, 0.05),
            _block_matrix(n, 2, 0.55, 0.35),
            _block_matrix(n, 1, 0.8, 0.8),
        ]
    )
    return pats


def planted_matrices(
    labels, n: int = 32, noise: float = 0.02, seed: int = 0
) -> np.ndarray:
    """One matrix per label: the label's pattern plus symmetric uniform noise in [-noise, noise].

    Diagonals stay exactly 1 and entries are clipped to [-1, 1].
    """
    labels = np.asarray(labels, dtype=int)
    pats = planted_patterns(n)
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(n, 1)
    out = np.empty((labels.size, n, n))
    for l, lab in enumerate(labels):
        c = pats[lab].copy()
        eps = rng.uniform(-noise, noise, size=iu[0].size)
        c[iu] = np.clip(c[iu] + eps, -1.0, 1.0)
        c[iu[1], iu[0]] = c[iu]
        out[l] = c
    return out


def regime_schedule(n_blocks: int, rng: np.random.Generator, min_run: int = 2, max_run: int = 7) -> np.ndarray:
    """Sticky regime sequence over blocks; every regime appears at least once."""
    while True:
        seq = []
        current = int(rng.integers(N_REGIMES))
        while len(seq) < n_blocks:
            seq.extend([current] * int(rng.integers(min_run, max_run + 1)))
            current = int(rng.choice([r for r in range(N_REGIMES) if r != current]))
        seq = np.array(seq[:n_blocks])
        if np.unique(seq).size == N_REGIMES:
            return seq


def planted_labels(n_matrices: int, seed: int = 0) -> np.ndarray:
    return regime_schedule(n_matrices, np.random.default_rng(seed))


@dataclass(frozen=True)
class SyntheticPanel:
    panel: TimeSeriesPanel
    day_regimes: np.ndarray  # regime of each return day (length D - 1)
    epoch_labels: np.ndarray  # majority regime of each planned epoch
    incidence: np.ndarray  # national daily total (length D)


def synthetic_panel(
    seed: int = 0,
    n_regions: int = 32,
    n_days: int = DEFAULT_DAYS,
    start: dt.date = DEFAULT_START,
    window: int = 33,
    overlap: int = 17,
    volatility: float = 0.08,
    weekly_amplitude: float = 0.25,
    level: float = 500.0,
) -> SyntheticPanel:
    """Daily counts whose log-level innovations follow planted regime correlations.

    ``log X_i`` is a mean-reverting walk driven by Gaussian innovations whose
    correlation matrix is the pattern of the current 16-day block; the
    observed count is that level times a weekly reporting modulation (with
    a 3.5-day harmonic) whose phase differs per region.
    """
    rng = np.random.default_rng(seed)
    stride = window - overlap
    n_ret = n_days - 1
    n_blocks = -(-n_ret // stride)
    blocks = regime_schedule(n_blocks, rng, min_run=3, max_run=8)
    day_regimes = np.repeat(blocks, stride)[:n_ret]

    chols = [np.linalg.cholesky(p) for p in planted_patterns(n_regions)]
    innov = np.empty((n_regions, n_ret))
    for t in range(n_ret):
        innov[:, t] = volatility * (chols[day_regimes[t]] @ rng.standard_normal(n_regions))

    base = np.log(level) + rng.normal(0.0, 0.5, size=n_regions)
    log_x = np.empty((n_regions, n_days))
    log_x[:, 0] = base
    for t in range(n_ret):
        log_x[:, t + 1] = log_x[:, t] + innov[:, t] - 0.01 * (log_x[:, t] - base)

    days = np.arange(n_days)
    phase = rng.uniform(0, 2 * np.pi, size=n_regions)
    weekly = (
        1
        + weekly_amplitude * np.sin(2 * np.pi * days[None, :] / 7 + phase[:, None])
        + 0.4 * weekly_amplitude * np.sin(4 * np.pi * days[None, :] / 7 + 2 * phase[:, None])
    )
    counts = np.round(np.exp(log_x) * weekly)

    n_epochs = (n_ret - window) // stride + 1
    epoch_labels = np.empty(n_epochs, dtype=int)
    for e in range(n_epochs):
        seg = day_regimes[e * stride : e * stride + window]
        epoch_labels[e] = int(np.argmax(np.bincount(seg, minlength=N_REGIMES)))

    regions = tuple(f"region_{i:02d}" for i in range(n_regions))
    dates = tuple(start + dt.timedelta(days=int(d)) for d in days)
    panel = TimeSeriesPanel(regions, dates, counts)
    return SyntheticPanel(panel=panel, day_regimes=day_regimes, epoch_labels=epoch_labels, incidence=counts.sum(axis=0))
