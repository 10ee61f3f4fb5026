"""Shared fixtures and independent reference implementations used as test oracles."""
from __future__ import annotations

import datetime as dt
import math
from pathlib import Path

import numpy as np
import pytest

from epicorr import kernels

ROOT = Path(__file__).resolve().parents[1]
BACKENDS = ["python"] + (["cython"] if kernels.compiled_available() else [])


def two_pass_pearson(x: np.ndarray) -> np.ndarray:
    """Textbook Pearson with explicit loops: mean first, then centred sums."""
    n, w = x.shape
    means = [math.fsum(x[i]) / w for i in range(n)]
    out = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            sij = math.fsum((x[i, t] - means[i]) * (x[j, t] - means[j]) for t in range(w))
            sii = math.fsum((x[i, t] - means[i]) ** 2 for t in range(w))
            sjj = math.fsum((x[j, t] - means[j]) ** 2 for t in range(w))
            out[i, j] = sij / math.sqrt(sii * sjj)
    return out


def brute_frobenius(a: np.ndarray, b: np.ndarray) -> float:
    return math.sqrt(math.fsum((float(a[i, j]) - float(b[i, j])) ** 2 for i in range(a.shape[0]) for j in range(a.shape[1])))


def brute_mean_offdiag(c: np.ndarray) -> float:
    n = c.shape[0]
    return math.fsum(float(c[i, j]) for i in range(n) for j in range(n) if i != j) / (n * (n - 1))


def write_csv(path: Path, rows) -> Path:
    path.write_text("\n".join(",".join(str(c) for c in r) for r in rows) + "\n", encoding="utf-8")
    return path


def date_seq(start: dt.date, n: int) -> list[dt.date]:
    return [start + dt.timedelta(days=i) for i in range(n)]


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture(scope="session")
def planted62():
    from epicorr.synth import planted_labels, planted_matrices

    labels = planted_labels(62, seed=0)
    return labels, planted_matrices(labels, noise=0.02, seed=0)


@pytest.fixture(scope="session")
def bundled_config():
    return ROOT / "configs" / "synthetic.cfg"
