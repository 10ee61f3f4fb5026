"""Returns, overlapping epochs and per-epoch Pearson correlation matrices."""
from __future__ import annotations

import datetime as dt
import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSeriesError, NumericError, PlanError, ShapeError
from .panel import TimeSeriesPanel

logger = logging.getLogger(__name__)

DEFAULT_GUARD = 1e-6
ZERO_VARIANCE_POLICIES = ("error", "zero")
# relative threshold under which a within-epoch standard deviation counts as zero
_FLAT_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class ReturnsPanel:
    """Day-over-day relative changes; ``dates[t]`` is the date of X(t+1)."""

    regions: tuple[str, ...]
    dates: tuple[dt.date, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=float)
        if values.shape != (len(self.regions), len(self.dates)):
            raise ShapeError(f"values shape {values.shape} does not match labels")
        if not np.all(np.isfinite(values)):
            raise NumericError("returns contain non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def length(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class EpochPlan:
    length: int
    window: int
    overlap: int

    def __post_init__(self):
        if self.window < 2:
            raise PlanError(f"window must be >= 2, got {self.window}")
        if not 0 <= self.overlap < self.window:
            raise PlanError(f"overlap must satisfy 0 <= overlap < window, got {self.overlap}")
        if self.length < self.window:
            raise PlanError(f"series length {self.length} shorter than window {self.window}")

    @property
    def stride(self) -> int:
        return self.window - self.overlap

    @property
    def epoch_count(self) -> int:
        return (self.length - self.window) // self.stride + 1

    @property
    def epoch_starts(self) -> list[int]:
        return [e * self.stride for e in range(self.epoch_count)]


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    epoch_index: int
    epoch_start_day: int
    entries: np.ndarray


def compute_returns(
    panel: TimeSeriesPanel, guard: float = DEFAULT_GUARD, absolute: bool = False
) -> ReturnsPanel:
    """``R(t) = (X(t+1) - X(t)) / max(X(t), guard)`` for every region.

    The guard keeps zero or near-zero days finite; it is not a smoothing
    device and leaves ordinary days untouched. ``absolute=True`` returns
    ``|R(t)|``.
    """
    if guard <= 0:
        raise NumericError(f"guard must be positive, got {guard}")
    x = panel.values
    if x.shape[1] < 2:
        raise NumericError("need at least two days to form returns")
    if not np.all(np.isfinite(x)):
        raise NumericError("panel contains non-finite values")
    r = (x[:, 1:] - x[:, :-1]) / np.maximum(x[:, :-1], guard)
    if absolute:
        r = np.abs(r)
    return ReturnsPanel(panel.regions, panel.dates[1:], r)


def plan_epochs(length: int, window: int, overlap: int) -> EpochPlan:
    return EpochPlan(length=int(length), window=int(window), overlap=int(overlap))


def pearson_stack(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Population-moment Pearson matrices for a stack of ``(..., N, W)`` samples.

    Returns ``(C, sigma)``; rows with ``sigma == 0`` produce undefined
    entries that callers must handle. ``C`` has an exact unit diagonal, is
    exactly symmetric (upper triangle mirrored) and clamped to [-1, 1].
    """
    # fixed C layout keeps BLAS results independent of how the input was built
    x = np.ascontiguousarray(samples, dtype=float)
    centered = x - x.mean(axis=-1, keepdims=True)
    w = x.shape[-1]
    cov = np.matmul(centered, np.swapaxes(centered, -1, -2)) / w
    var = np.clip(np.diagonal(cov, axis1=-2, axis2=-1), 0.0, None)
    sigma = np.sqrt(var)
    # sqrt(v_i * v_j) rather than sigma_i * sigma_j: equal rows then give exactly 1
    with np.errstate(divide="ignore", invalid="ignore"):
        c = cov / np.sqrt(var[..., :, None] * var[..., None, :])
    n = x.shape[-2]
    iu = np.triu_indices(n, 1)
    upper = np.clip(c[..., iu[0], iu[1]], -1.0, 1.0)
    out = np.zeros_like(c)
    out[..., iu[0], iu[1]] = upper
    out[..., iu[1], iu[0]] = upper
    idx = np.arange(n)
    out[..., idx, idx] = 1.0
    return out, sigma


def _flat_rows(window: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    scale = np.max(np.abs(window), axis=-1)
    return (sigma == 0) | (sigma <= _FLAT_RTOL * scale)


def _apply_zero_variance(c, flat, regions, epoch_index, policy):
    if not flat.any():
        return c
    names = [regions[i] for i in np.flatnonzero(flat)]
    if policy == "error":
        raise DegenerateSeriesError(names[0], epoch_index)
    warnings.warn(f"epoch {epoch_index}: zero-variance regions {names} decoupled", RuntimeWarning, stacklevel=3)
    c = c.copy()
    c[flat, :] = 0.0
    c[:, flat] = 0.0
    idx = np.flatnonzero(flat)
    c[idx, idx] = 1.0
    return c


def pearson_matrix(
    returns: ReturnsPanel,
    start: int,
    window: int,
    epoch_index: int = 0,
    zero_variance: str = "error",
) -> CorrelationMatrix:
    """Correlation matrix of ``returns`` over days ``[start, start + window)``."""
    if zero_variance not in ZERO_VARIANCE_POLICIES:
        raise ValueError(f"zero_variance must be one of {ZERO_VARIANCE_POLICIES}")
    if window < 2:
        raise PlanError(f"window must be >= 2, got {window}")
    if start < 0 or start + window > returns.length:
        raise PlanError(f"epoch [{start}, {start + window}) outside returns of length {returns.length}")
    seg = returns.values[:, start : start + window]
    c, sigma = pearson_stack(seg)
    c = _apply_zero_variance(c, _flat_rows(seg, sigma), returns.regions, epoch_index, zero_variance)
    return CorrelationMatrix(epoch_index=epoch_index, epoch_start_day=start, entries=c)


def correlation_series(
    returns: ReturnsPanel, plan: EpochPlan, zero_variance: str = "error"
) -> list[CorrelationMatrix]:
    """One matrix per planned epoch, in epoch order."""
    if zero_variance not in ZERO_VARIANCE_POLICIES:
        raise ValueError(f"zero_variance must be one of {ZERO_VARIANCE_POLICIES}")
    if plan.length != returns.length:
        raise PlanError(f"plan covers {plan.length} days but returns have {returns.length}")
    starts = plan.epoch_starts
    segs = np.stack([returns.values[:, s : s + plan.window] for s in starts])
    stack, sigma = pearson_stack(segs)
    flat = _flat_rows(segs, sigma)
    out = []
    for e, s in enumerate(starts):
        c = _apply_zero_variance(stack[e], flat[e], returns.regions, e, zero_variance)
        out.append(CorrelationMatrix(epoch_index=e, epoch_start_day=s, entries=c))
    logger.debug("computed %d correlation matrices (N=%d, W=%d)", len(out), len(returns.regions), plan.window)
    return out
