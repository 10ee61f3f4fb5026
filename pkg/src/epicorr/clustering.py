"""k-means in the space of correlation matrices.

Matrices are compared with the Frobenius (entrywise Euclidean) distance
over all N^2 entries. Centroids are entrywise means of their members, so a
centroid of correlation matrices is itself symmetric with unit diagonal.
"""
from __future__ import annotations

import itertools
import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from sklearn.metrics import adjusted_rand_score

from . import kernels
from .errors import DiagnosticsError, KError, ShapeError
from .returns import CorrelationMatrix, EpochPlan

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 300
# per-iteration inertia may only rise by rounding noise
_MONOTONE_RTOL = 1e-10


@dataclass
class ClusteringResult:
    k: int
    centroids: np.ndarray  # (k, N, N)
    labels: np.ndarray  # (M,) ints in [0, k)
    inertia: float
    n_iterations: int
    restart_index_of_best: int
    seed: int
    converged: bool = True
    inertia_history: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    restart_inertias: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    restart_converged: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=bool), repr=False)

    @property
    def symbols(self) -> list[int]:
        return [int(v) for v in self.labels]


@dataclass(frozen=True)
class KRecord:
    k: int
    best_inertia: float
    mean_silhouette: float | None
    inertia_warning: bool = False


@dataclass(frozen=True)
class KDiagnostics:
    records: tuple[KRecord, ...]

    def best_k_by_silhouette(self) -> int:
        scored = [r for r in self.records if r.mean_silhouette is not None]
        if not scored:
            raise DiagnosticsError("no k with a defined silhouette")
        # first (smallest) k wins ties
        return max(scored, key=lambda r: (r.mean_silhouette, -r.k)).k


@dataclass(frozen=True)
class SymbolRow:
    epoch_index: int
    epoch_start_day: int
    cluster_id: int
    day_range: str


def as_matrix_stack(matrices) -> np.ndarray:
    """Normalise a list of CorrelationMatrix / arrays, or a 3-D array, to (M, N, N)."""
    if isinstance(matrices, np.ndarray):
        stack = np.asarray(matrices, dtype=float)
    else:
        stack = np.stack(
            [m.entries if isinstance(m, CorrelationMatrix) else np.asarray(m, dtype=float) for m in matrices]
        )
    if stack.ndim != 3 or stack.shape[1] != stack.shape[2]:
        raise ShapeError(f"expected a stack of square matrices, got shape {stack.shape}")
    return stack


def frobenius_distance(a, b) -> float:
    a = a.entries if isinstance(a, CorrelationMatrix) else np.asarray(a, dtype=float)
    b = b.entries if isinstance(b, CorrelationMatrix) else np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2)))


def pairwise_distances(matrices, backend: str | None = None) -> np.ndarray:
    stack = as_matrix_stack(matrices)
    flat = np.ascontiguousarray(stack.reshape(stack.shape[0], -1))
    return np.sqrt(kernels.get_backend(backend).pairwise_sq_dists(flat))


def _check_k(k: int, m: int) -> None:
    if k <= 0:
        raise KError(f"k must be positive, got {k}")
    if k > m:
        raise KError(f"k={k} exceeds the number of matrices ({m})")


def _check_monotone(history: np.ndarray) -> None:
    if history.size < 2:
        return
    slack = _MONOTONE_RTOL * max(float(history[0]), 1e-300)
    rises = np.diff(history)
    if np.any(rises > slack):
        t = int(np.argmax(rises)) + 1
        raise AssertionError(f"k-means inertia increased at iteration {t}: {history[t - 1]!r} -> {history[t]!r}")


def _single_run(flat, n, k, seed, tol, max_iter, backend):
    rng = np.random.default_rng(seed)
    init = np.sort(rng.choice(flat.shape[0], size=k, replace=False)).astype(np.intp)
    labels, cent, inertia, n_iter, history, converged = kernels.get_backend(backend).kmeans_run(
        flat, init, float(tol), int(max_iter)
    )
    history = np.asarray(history, dtype=float)
    _check_monotone(history)
    return ClusteringResult(
        k=k,
        centroids=np.asarray(cent).reshape(k, n, n),
        labels=np.asarray(labels, dtype=np.intp),
        inertia=float(inertia),
        n_iterations=int(n_iter),
        restart_index_of_best=0,
        seed=int(seed),
        converged=bool(converged),
        inertia_history=history,
    )


def kmeans(
    matrices,
    k: int,
    seed: int = 0,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    backend: str | None = None,
) -> ClusteringResult:
    """Single Lloyd run seeded with ``k`` distinct dataset matrices drawn uniformly.

    Stops when no centroid moves more than ``tol`` (Frobenius) or after
    ``max_iter`` iterations. A cluster that empties is re-seeded with the
    matrix farthest from its current centroid.
    """
    stack = as_matrix_stack(matrices)
    m, n, _ = stack.shape
    _check_k(k, m)
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    flat = np.ascontiguousarray(stack.reshape(m, n * n))
    return _single_run(flat, n, k, seed, tol, max_iter, backend)


def kmeans_multi(
    matrices,
    k: int,
    n_restarts: int = 1000,
    base_seed: int = 0,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    n_jobs: int = 1,
    backend: str | None = None,
) -> ClusteringResult:
    """Best of ``n_restarts`` runs with seeds ``base_seed, base_seed + 1, ...``.

    The minimum-inertia run wins; ties go to the lowest restart index, so
    the answer does not depend on ``n_jobs``.
    """
    if n_restarts < 1:
        raise ValueError("n_restarts must be >= 1")
    stack = as_matrix_stack(matrices)
    m, n, _ = stack.shape
    _check_k(k, m)
    flat = np.ascontiguousarray(stack.reshape(m, n * n))
    seeds = [base_seed + r for r in range(n_restarts)]

    def run(seed):
        return _single_run(flat, n, k, seed, tol, max_iter, backend)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            runs = list(pool.map(run, seeds))
    else:
        runs = [run(s) for s in seeds]

    inertias = np.array([r.inertia for r in runs])
    best_idx = int(np.argmin(inertias))  # first minimum
    best = runs[best_idx]
    best.restart_index_of_best = best_idx
    best.restart_inertias = inertias
    best.restart_converged = np.array([r.converged for r in runs])
    n_unconverged = int(np.sum(~best.restart_converged))
    if n_unconverged:
        logger.info("%d of %d restarts hit max_iter=%d", n_unconverged, n_restarts, max_iter)
    return best


def silhouette(matrices, labels) -> tuple[np.ndarray, float]:
    """Per-matrix silhouette values and their mean, with Frobenius distances.

    Singleton clusters score 0, as do points whose intra- and nearest
    inter-cluster mean distances are both 0.
    """
    stack = as_matrix_stack(matrices)
    labels = np.asarray(labels)
    if labels.shape != (stack.shape[0],):
        raise ShapeError(f"{labels.shape[0]} labels for {stack.shape[0]} matrices")
    present = np.unique(labels)
    if present.size < 2:
        raise DiagnosticsError("silhouette needs at least two non-empty clusters")
    dist = pairwise_distances(stack)
    m = stack.shape[0]
    masks = {c: labels == c for c in present}
    s = np.zeros(m)
    for i in range(m):
        own = masks[labels[i]]
        size = int(own.sum())
        if size == 1:
            continue
        a = dist[i, own].sum() / (size - 1)
        b = min(dist[i, masks[c]].mean() for c in present if c != labels[i])
        denom = max(a, b)
        s[i] = 0.0 if denom == 0 else (b - a) / denom
    return s, float(s.mean())


def scan_k(
    matrices,
    k_range: Sequence[int],
    n_restarts: int = 100,
    base_seed: int = 0,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    n_jobs: int = 1,
) -> KDiagnostics:
    """Best inertia and mean silhouette for each ``k`` in ``k_range``."""
    stack = as_matrix_stack(matrices)
    m = stack.shape[0]
    ks = sorted(int(k) for k in k_range)
    if not ks:
        raise KError("empty k range")
    for k in ks:
        _check_k(k, m)
    records = []
    prev = None
    for k in ks:
        res = kmeans_multi(stack, k, n_restarts=n_restarts, base_seed=base_seed, tol=tol, max_iter=max_iter, n_jobs=n_jobs)
        sil = silhouette(stack, res.labels)[1] if k >= 2 else None
        bad = prev is not None and res.inertia > prev * (1 + 1e-12) + 1e-15
        if bad:
            warnings.warn(f"best inertia rose from k={k - 1} to k={k}; more restarts needed", RuntimeWarning, stacklevel=2)
        records.append(KRecord(k=k, best_inertia=res.inertia, mean_silhouette=sil, inertia_warning=bad))
        prev = res.inertia
    return KDiagnostics(records=tuple(records))


def relabel_by_mean_correlation(result: ClusteringResult) -> ClusteringResult:
    """Renumber clusters by ascending centroid mean off-diagonal correlation.

    Cluster 0 becomes the most weakly correlated regime. Ties keep the
    original order.
    """
    n = result.centroids.shape[1]
    off = ~np.eye(n, dtype=bool)
    means = np.array([c[off].mean() for c in result.centroids])
    order = np.argsort(means, kind="stable")
    new_id = np.empty(result.k, dtype=np.intp)
    new_id[order] = np.arange(result.k)
    return ClusteringResult(
        k=result.k,
        centroids=result.centroids[order].copy(),
        labels=new_id[result.labels],
        inertia=result.inertia,
        n_iterations=result.n_iterations,
        restart_index_of_best=result.restart_index_of_best,
        seed=result.seed,
        converged=result.converged,
        inertia_history=result.inertia_history,
        restart_inertias=result.restart_inertias,
        restart_converged=result.restart_converged,
    )


def match_labels(reference, labels, k: int | None = None) -> tuple[np.ndarray, int]:
    """Relabel ``labels`` by the permutation that best agrees with ``reference``.

    Exhaustive over permutations, fine for k <= 8. Returns the relabelled
    array and the number of disagreements left.
    """
    reference = np.asarray(reference)
    labels = np.asarray(labels)
    if reference.shape != labels.shape:
        raise ShapeError("label arrays differ in length")
    if k is None:
        k = int(max(reference.max(), labels.max())) + 1
    best, best_miss = labels, labels.size + 1
    for perm in itertools.permutations(range(k)):
        cand = np.asarray(perm)[labels]
        miss = int(np.sum(cand != reference))
        if miss < best_miss:
            best, best_miss = cand, miss
    return best, best_miss


def adjusted_rand_index(a, b) -> float:
    return float(adjusted_rand_score(np.asarray(a), np.asarray(b)))


def symbolic_dynamics(result: ClusteringResult, plan: EpochPlan) -> list[SymbolRow]:
    """Join labels with epoch start days; day ranges follow the ``t=a-b`` stride convention."""
    if len(result.labels) != plan.epoch_count:
        raise ShapeError(f"{len(result.labels)} labels for {plan.epoch_count} epochs")
    return [
        SymbolRow(
            epoch_index=e,
            epoch_start_day=s,
            cluster_id=int(result.labels[e]),
            day_range=f"t={s}-{s + plan.stride - 1}",
        )
        for e, s in enumerate(plan.epoch_starts)
    ]
