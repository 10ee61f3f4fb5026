"""Static SVG figures for a pipeline run.

One function per figure family; :func:`emit_figures` calls them all and
turns any rendering failure into a warning so the run itself still
succeeds.
"""
from __future__ import annotations

import logging
import warnings
from pathlib import Path

import numpy as np

from . import svg
from .artifacts import read_series_csv
from .rmt import mp_density
from .spectral import power_spectrum

logger = logging.getLogger(__name__)


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def filter_figures(panel, filtered, d: Path, n_regions: int) -> list[Path]:
    """Raw vs filtered counts and their spectra for the first ``n_regions`` regions."""
    from .pipeline import _safe_name

    paths = []
    days = np.arange(panel.n_days)
    for i in range(min(n_regions, panel.n_regions)):
        name = panel.regions[i]
        stem = _safe_name(i, name)
        paths.append(
            _write(
                d / f"series_{stem}.svg",
                svg.line_chart(
                    [(days, panel.values[i], "raw"), (days, filtered.values[i], "filtered")],
                    title=f"{name}: daily counts",
                    xlabel="day",
                    ylabel="count",
                ),
            )
        )
        raw, filt = power_spectrum(panel.values[i]), power_spectrum(filtered.values[i])
        paths.append(
            _write(
                d / f"spectrum_{stem}.svg",
                svg.line_chart(
                    [(raw.frequencies, raw.power, "raw"), (filt.frequencies, filt.power, "filtered")],
                    title=f"{name}: power spectrum",
                    xlabel="frequency [1/day]",
                    ylabel="power",
                ),
            )
        )
    return paths


def returns_figures(filtered, returns, d: Path, n_regions: int) -> list[Path]:
    from .pipeline import _safe_name

    paths = []
    days = np.arange(returns.length) + 1
    for i in range(min(n_regions, len(returns.regions))):
        name = returns.regions[i]
        scale = float(np.max(np.abs(filtered.values[i]))) or 1.0
        paths.append(
            _write(
                d / f"returns_{_safe_name(i, name)}.svg",
                svg.line_chart(
                    [
                        (np.arange(filtered.n_days), filtered.values[i] / scale, "filtered (scaled)", "#222"),
                        (days, returns.values[i], "returns", "#2ca02c"),
                    ],
                    title=f"{name}: returns",
                    xlabel="day",
                ),
            )
        )
    return paths


def epoch_heatmaps(matrices, regions, d: Path) -> list[Path]:
    return [
        _write(
            d / "epochs" / f"epoch_{m.epoch_index:03d}.svg",
            svg.heatmap(m.entries, title=f"epoch {m.epoch_index} (t={m.epoch_start_day})", labels=regions),
        )
        for m in matrices
    ]


def centroid_heatmaps(result, regions, d: Path) -> list[Path]:
    return [
        _write(d / "centroids" / f"cluster_{j + 1}.svg", svg.heatmap(c, title=f"Cluster {j + 1} centroid", labels=regions))
        for j, c in enumerate(result.centroids)
    ]


def symbolic_strip(result, plan, d: Path, incidence=None) -> Path:
    return _write(
        d / "symbolic_dynamics.svg",
        svg.label_strip(plan.epoch_starts, result.labels, result.k, plan.stride, title="Symbolic dynamics", overlay=incidence),
    )


def spectra_overlays(spectra, d: Path) -> list[Path]:
    paths = []
    for s in spectra:
        x = np.linspace(0.0, s.axis_max, 400)
        paths.append(
            _write(
                d / "spectra" / f"cluster_{s.cluster_id + 1}.svg",
                svg.histogram_overlay(
                    [
                        (s.empirical.histogram.edges, s.empirical.histogram.densities, "empirical"),
                        (s.wishart_histogram.edges, s.wishart_histogram.densities, f"Wishart (x={s.x_bar:.3f})"),
                        (s.mp_histogram.edges, s.mp_histogram.densities, "MP (binned)"),
                    ],
                    curves=[(x, mp_density(x, s.mp_params), "MP density")],
                    title=f"Cluster {s.cluster_id + 1}: eigenvalue density",
                ),
            )
        )
    return paths


def emit_figures(ctx, d: Path) -> list[Path]:
    """All figure families for a run; each failure becomes a warning."""
    cfg = ctx.config
    jobs = [
        ("filter", lambda: filter_figures(ctx.get("panel"), ctx.get("filtered"), d, cfg.figure_regions)),
        ("returns", lambda: returns_figures(ctx.get("filtered"), ctx.get("returns"), d, cfg.figure_regions)),
        ("epochs", lambda: epoch_heatmaps(ctx.get("matrices"), ctx.get("returns").regions, d)),
        ("centroids", lambda: centroid_heatmaps(ctx.get("clustering"), ctx.get("returns").regions, d)),
        ("symbolic", lambda: [symbolic_strip(ctx.get("clustering"), ctx.get("plan"), d, _incidence(cfg))]),
        ("spectra", lambda: spectra_overlays(ctx.get("spectra"), d)),
    ]
    paths: list[Path] = []
    for name, job in jobs:
        try:
            paths.extend(job())
        except Exception as exc:  # figures never abort a run
            warnings.warn(f"figure family {name!r} failed: {exc}", RuntimeWarning, stacklevel=2)
            logger.warning("figure family %s failed: %s", name, exc)
    return paths


def _incidence(cfg):
    if not cfg.incidence:
        return None
    return read_series_csv(Path(cfg.incidence))
