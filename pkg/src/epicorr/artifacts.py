"""Readers and writers for every stage artifact.

Floats are written with ``repr`` so that every artifact reads back to the
identical double; re-running a stage from saved files therefore reproduces
the downstream outputs byte for byte.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .clustering import ClusteringResult, KDiagnostics, SymbolRow
from .errors import ParseError, ShapeError
from .panel import parse_date
from .returns import CorrelationMatrix, EpochPlan, ReturnsPanel
from .rmt import ClusterSpectra
from .spectral import PowerSpectrum


def _r(v) -> str:
    return repr(float(v))


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def dump_json(obj, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1, sort_keys=False, allow_nan=False)
        fh.write("\n")


def load_json(path: Path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_spectrum_csv(path: Path, raw: PowerSpectrum, filtered: PowerSpectrum | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["frequency", "power"] if filtered is None else ["frequency", "power_raw", "power_filtered"])
        for i, f in enumerate(raw.frequencies):
            row = [_r(f), _r(raw.power[i])]
            if filtered is not None:
                row.append(_r(filtered.power[i]))
            w.writerow(row)


def write_returns(returns: ReturnsPanel, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["date", *returns.regions])
        for t, day in enumerate(returns.dates):
            w.writerow([day.isoformat(), *(_r(v) for v in returns.values[:, t])])


def read_returns(path: Path) -> ReturnsPanel:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    dates = tuple(parse_date(r[0]) for r in rows[1:])
    try:
        values = np.array([[float(c) for c in r[1:]] for r in rows[1:]]).T
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return ReturnsPanel(tuple(header[1:]), dates, values.reshape(len(header) - 1, len(dates)))


def plan_to_dict(plan: EpochPlan) -> dict:
    return {
        "length": plan.length,
        "window": plan.window,
        "overlap": plan.overlap,
        "stride": plan.stride,
        "epoch_count": plan.epoch_count,
        "epoch_starts": plan.epoch_starts,
    }


def plan_from_dict(d: dict) -> EpochPlan:
    return EpochPlan(length=int(d["length"]), window=int(d["window"]), overlap=int(d["overlap"]))


def matrices_to_json(matrices: list[CorrelationMatrix]) -> list[dict]:
    return [
        {
            "epoch_index": m.epoch_index,
            "epoch_start_day": m.epoch_start_day,
            "matrix": [[float(v) for v in row] for row in m.entries],
        }
        for m in matrices
    ]


def matrices_from_json(data: list[dict]) -> list[CorrelationMatrix]:
    out = []
    for item in data:
        entries = np.array(item["matrix"], dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ShapeError(f"epoch {item.get('epoch_index')}: matrix is not square")
        out.append(CorrelationMatrix(int(item["epoch_index"]), int(item["epoch_start_day"]), entries))
    return out


def write_matrix_csv(matrix: CorrelationMatrix, regions, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["", *regions])
        for name, row in zip(regions, matrix.entries):
            w.writerow([name, *(_r(v) for v in row)])


def clustering_to_json(result: ClusteringResult, rows: list[SymbolRow]) -> dict:
    return {
        "k": result.k,
        "seed": result.seed,
        "inertia": float(result.inertia),
        "n_iterations": result.n_iterations,
        "restart_index_of_best": result.restart_index_of_best,
        "n_restarts": int(result.restart_inertias.size) or 1,
        "converged": result.converged,
        "centroids": [[[float(v) for v in row] for row in c] for c in result.centroids],
        "labels": result.symbols,
        "per_epoch": [
            {"epoch_index": r.epoch_index, "start_day": r.epoch_start_day, "cluster": r.cluster_id} for r in rows
        ],
    }


def clustering_from_json(d: dict) -> ClusteringResult:
    return ClusteringResult(
        k=int(d["k"]),
        centroids=np.array(d["centroids"], dtype=float),
        labels=np.array(d["labels"], dtype=np.intp),
        inertia=float(d["inertia"]),
        n_iterations=int(d.get("n_iterations", 0)),
        restart_index_of_best=int(d.get("restart_index_of_best", 0)),
        seed=int(d["seed"]),
        converged=bool(d.get("converged", True)),
        restart_inertias=np.zeros(int(d.get("n_restarts", 1))),
    )


def write_symbolic_csv(rows: list[SymbolRow], k: int, path: Path) -> None:
    """Published-table layout: one row per epoch, the matrix name in its cluster's column."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["Epoch", *(f"Cluster {j + 1}" for j in range(k))])
        for r in rows:
            cells = [""] * k
            cells[r.cluster_id] = f"C({r.epoch_index})"
            w.writerow([f"{r.day_range} days", *cells])


def read_symbolic_csv(path: Path) -> list[int]:
    """Cluster index (0-based) per epoch from a published-style table."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    labels = []
    for r in rows[1:]:
        filled = [j for j, c in enumerate(r[1:]) if c.strip()]
        if len(filled) != 1:
            raise ParseError("each epoch row needs exactly one filled cluster cell", row=len(labels) + 1)
        labels.append(filled[0])
    return labels


def read_label_file(path: Path) -> list[int]:
    """Reference labels: either a published-style table or ``epoch_index,cluster`` rows."""
    with open(path, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh))
    if header and header[0].strip() == "Epoch":
        return read_symbolic_csv(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))[1:]
    return [int(r[1]) for r in sorted(rows, key=lambda r: int(r[0]))]


def write_k_scan(diag: KDiagnostics, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["k", "best_inertia", "mean_silhouette", "inertia_warning"])
        for r in diag.records:
            sil = "" if r.mean_silhouette is None else _r(r.mean_silhouette)
            w.writerow([r.k, _r(r.best_inertia), sil, int(r.inertia_warning)])


def write_cluster_spectra(spec: ClusterSpectra, directory: Path) -> list[Path]:
    directory.mkdir(parents=True, exist_ok=True)
    ev_path = directory / "eigenvalues.csv"
    with open(ev_path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["eigenvalue"])
        for v in spec.empirical.eigenvalues:
            w.writerow([_r(v)])
    hist_path = directory / "histograms.csv"
    with open(hist_path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["series", "bin_left", "bin_right", "density"])
        for name, h in (
            ("empirical", spec.empirical.histogram),
            ("marchenko_pastur", spec.mp_histogram),
            ("wishart", spec.wishart_histogram),
        ):
            for a, b, d in zip(h.edges[:-1], h.edges[1:], h.densities):
                w.writerow([name, _r(a), _r(b), _r(d)])
    return [ev_path, hist_path]


def spectra_summary(spec: ClusterSpectra) -> dict:
    lo, hi = spec.mp_params.support
    emp = spec.empirical.eigenvalues
    return {
        "cluster": spec.cluster_id,
        "n_members": spec.n_members,
        "x_bar": spec.x_bar,
        "mp": {"Q": spec.mp_params.q, "sigma2": spec.mp_params.sigma2, "lambda_minus": lo, "lambda_plus": hi},
        "largest_eigenvalue": float(emp.max()),
        "fraction_above_lambda_plus": float(np.mean(emp > hi)),
        "wishart_mean_largest": float(np.max(spec.wishart_eigenvalues.reshape(-1, emp.size // spec.n_members), axis=1).mean()),
        "bins": {
            "empirical": int(spec.empirical.histogram.densities.size),
            "wishart": int(spec.wishart_histogram.densities.size),
            "marchenko_pastur": int(spec.mp_histogram.densities.size),
        },
        "axis_max": spec.axis_max,
    }


def read_series_csv(path: Path) -> np.ndarray:
    """A daily series from ``date,value`` rows or a single value column."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    body = rows[1:] if rows and not _numeric(rows[0][-1]) else rows
    return np.array([float(r[-1]) for r in body])


def _numeric(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True

