"""End-to-end run: ingest -> filter -> returns -> epochs -> clustering -> spectra -> figures.

Every stage writes its artifacts under ``output_dir`` and later stages read
their inputs through :class:`_Context`, which falls back to those files when
the value was not computed in the current run. Starting from any stage
therefore reproduces the downstream outputs byte for byte.
"""
from __future__ import annotations

import configparser
import dataclasses
import logging
import re
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, artifacts, kernels
from .clustering import (
    adjusted_rand_index,
    kmeans_multi,
    relabel_by_mean_correlation,
    scan_k,
    symbolic_dynamics,
)
from .errors import ConfigError, EpicorrError
from .panel import load_panel, save_panel
from .returns import DEFAULT_GUARD, compute_returns, correlation_series, plan_epochs
from .rmt import DEFAULT_MP_BINS, cluster_spectra
from .spectral import SpectralFilterSpec, StopBand, default_weekly_bands, filter_panel, power_spectrum

logger = logging.getLogger(__name__)

STAGES = ("ingest", "filter", "returns", "epochs", "clustering", "spectra", "figures")
STAGE_VERSIONS = {name: "1" for name in STAGES}
STAGE_DIRS = {
    "ingest": "01_ingest",
    "filter": "02_filter",
    "returns": "03_returns",
    "epochs": "04_epochs",
    "clustering": "05_clustering",
    "spectra": "06_spectra",
    "figures": "figures",
}
PARTIAL_MARKER = ".partial"
# manifest summary entries owned by each stage, carried over when the stage is skipped
_SUMMARY_KEYS = {
    "clustering": ("clustering", "k_scan_best_silhouette", "reference_ari"),
    "spectra": ("spectra_bundles",),
}


class StageError(EpicorrError):
    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")


@dataclass(frozen=True)
class PipelineConfig:
    input: str = ""
    layout: str = "dates_as_rows"
    drop_columns: tuple[str, ...] = ()
    drop_regions: tuple[str, ...] = ()
    clip_negative_to_zero: bool = False
    bands: str = "default"
    filter_mode: str = "hard_zero"
    taper_fraction: float = 0.1
    returns_guard: float = DEFAULT_GUARD
    absolute_returns: bool = False
    window: int = 33
    overlap: int = 17
    zero_variance: str = "error"
    k: int = 4
    n_restarts: int = 1000
    seed: int = 0
    tol: float = 1e-6
    max_iter: int = 300
    jobs: int = 1
    relabel: bool = True
    scan_k: str = ""
    scan_restarts: int = 100
    bins_empirical: int = 32
    bins_wishart: int = 24
    bins_mp: tuple[int, ...] = DEFAULT_MP_BINS
    wishart_samples: int = 2000
    mp_q: float | None = None
    incidence: str = ""
    reference_labels: str = ""
    figures: bool = True
    figure_regions: int = 4
    record_timings: bool = False
    output_dir: str = "out"

    def __post_init__(self):
        try:
            self.filter_spec()
        except EpicorrError as exc:
            raise ConfigError(f"bad filter settings: {exc}") from None
        if self.zero_variance not in ("error", "zero"):
            raise ConfigError(f"zero_variance must be 'error' or 'zero', got {self.zero_variance!r}")
        if self.n_restarts < 1 or self.max_iter < 1 or self.jobs < 1:
            raise ConfigError("n_restarts, max_iter and jobs must be >= 1")

    def filter_spec(self) -> SpectralFilterSpec:
        if self.bands.strip().lower() == "default":
            return default_weekly_bands(self.filter_mode, self.taper_fraction)
        bands = [StopBand.parse(b) for b in re.split(r"[;\s]+", self.bands.strip()) if b]
        return SpectralFilterSpec(tuple(bands), self.filter_mode, self.taper_fraction)

    def scan_range(self) -> list[int]:
        text = self.scan_k.strip()
        if not text:
            return []
        m = re.fullmatch(r"(\d+)\s*-\s*(\d+)", text)
        if m:
            return list(range(int(m.group(1)), int(m.group(2)) + 1))
        return [int(v) for v in text.split(",")]

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["drop_columns"] = list(self.drop_columns)
        d["drop_regions"] = list(self.drop_regions)
        d["bins_mp"] = list(self.bins_mp)
        return d

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            lines.append(f"{f.name} = {_format_value(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    def replace(self, **changes) -> "PipelineConfig":
        return dataclasses.replace(self, **{k: coerce_field(k, v) for k, v in changes.items()})


_FIELDS = {f.name: f for f in dataclasses.fields(PipelineConfig)}
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ",".join(str(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def coerce_field(name: str, value):
    """Convert a config-file or CLI string to the field's type."""
    if name not in _FIELDS:
        raise ConfigError(f"unknown config key {name!r}")
    if not isinstance(value, str):
        return tuple(value) if isinstance(value, list) else value
    text = value.strip()
    default = _FIELDS[name].default
    try:
        if name == "mp_q":
            return float(text) if text else None
        if name in ("drop_columns", "drop_regions"):
            return tuple(p.strip() for p in text.split(",") if p.strip())
        if name == "bins_mp":
            return tuple(int(p) for p in text.split(",") if p.strip())
        if isinstance(default, bool):
            low = text.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(f"not a boolean: {text!r}")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
    except ValueError as exc:
        raise ConfigError(f"{name}: {exc}") from None
    return text


def parse_config_text(text: str, base: PipelineConfig | None = None) -> PipelineConfig:
    """Parse flat ``key = value`` lines (``#`` comments allowed)."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string("[pipeline]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    values = {k: coerce_field(k, v) for k, v in parser["pipeline"].items()}
    return dataclasses.replace(base or PipelineConfig(), **values)


def load_config(path: str | Path, overrides: dict | None = None) -> PipelineConfig:
    """Read a config file; relative ``input``/``output_dir`` stay relative to the CWD."""
    cfg = parse_config_text(Path(path).read_text(encoding="utf-8"))
    if overrides:
        cfg = cfg.replace(**overrides)
    return cfg


def stage_seed(root: int, stage: str) -> int:
    return int(np.random.SeedSequence([int(root), STAGES.index(stage)]).generate_state(1)[0])


@dataclass
class RunManifest:
    config: dict
    seed: int
    versions: dict
    outputs: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    backend: str = kernels.BACKEND
    summary: dict = field(default_factory=dict)

    def to_json(self, include_timings: bool = False) -> dict:
        d = {
            "package_version": __version__,
            "config": self.config,
            "seed": self.seed,
            "kernel_backend": self.backend,
            "stage_versions": self.versions,
            "outputs": self.outputs,
            "summary": self.summary,
        }
        if include_timings:
            d["wall_clock_seconds"] = self.timings
        return d


class _Context:
    """Stage values, loaded from the output tree when not computed in this run."""

    def __init__(self, config: PipelineConfig, out: Path):
        self.config = config
        self.out = out
        self._cache: dict = {}

    def path(self, stage: str, *parts: str) -> Path:
        return self.out.joinpath(STAGE_DIRS[stage], *parts)

    def __setitem__(self, key, value):
        self._cache[key] = value

    def get(self, key):
        if key not in self._cache:
            self._cache[key] = getattr(self, f"_load_{key}")()
        return self._cache[key]

    def _load_panel(self):
        return load_panel(self.path("ingest", "panel.csv"))

    def _load_filtered(self):
        return load_panel(self.path("filter", "filtered.csv"), allow_negative=True)

    def _load_returns(self):
        return artifacts.read_returns(self.path("returns", "returns.csv"))

    def _load_plan(self):
        return artifacts.plan_from_dict(artifacts.load_json(self.path("epochs", "plan.json")))

    def _load_matrices(self):
        return artifacts.matrices_from_json(artifacts.load_json(self.path("epochs", "matrices.json")))

    def _load_clustering(self):
        return artifacts.clustering_from_json(artifacts.load_json(self.path("clustering", "clustering.json")))

    def _load_spectra(self):
        return _compute_spectra(self)


def _safe_name(i: int, region: str) -> str:
    return f"{i:02d}_{re.sub(r'[^A-Za-z0-9_.-]+', '_', region)}"


def _rel(out: Path, paths) -> list[str]:
    return [p.relative_to(out).as_posix() for p in paths]


def _stage_ingest(ctx: _Context) -> list[Path]:
    cfg = ctx.config
    panel = load_panel(cfg.input, cfg.layout, cfg.drop_columns, cfg.clip_negative_to_zero, drop_regions=cfg.drop_regions)
    ctx["panel"] = panel
    d = ctx.path("ingest")
    d.mkdir(parents=True, exist_ok=True)
    save_panel(panel, d / "panel.csv")
    return [d / "panel.csv"]


def _stage_filter(ctx: _Context) -> list[Path]:
    panel = ctx.get("panel")
    filtered = filter_panel(panel, ctx.config.filter_spec())
    ctx["filtered"] = filtered
    d = ctx.path("filter")
    (d / "spectra").mkdir(parents=True, exist_ok=True)
    save_panel(filtered, d / "filtered.csv")
    paths = [d / "filtered.csv"]
    for i, region in enumerate(panel.regions):
        p = d / "spectra" / f"{_safe_name(i, region)}.csv"
        artifacts.write_spectrum_csv(p, power_spectrum(panel.values[i]), power_spectrum(filtered.values[i]))
        paths.append(p)
    return paths


def _stage_returns(ctx: _Context) -> list[Path]:
    cfg = ctx.config
    returns = compute_returns(ctx.get("filtered"), cfg.returns_guard, cfg.absolute_returns)
    ctx["returns"] = returns
    d = ctx.path("returns")
    d.mkdir(parents=True, exist_ok=True)
    artifacts.write_returns(returns, d / "returns.csv")
    return [d / "returns.csv"]


def _stage_epochs(ctx: _Context) -> list[Path]:
    cfg = ctx.config
    returns = ctx.get("returns")
    plan = plan_epochs(returns.length, cfg.window, cfg.overlap)
    matrices = correlation_series(returns, plan, cfg.zero_variance)
    ctx["plan"] = plan
    ctx["matrices"] = matrices
    d = ctx.path("epochs")
    (d / "matrices").mkdir(parents=True, exist_ok=True)
    artifacts.dump_json(artifacts.plan_to_dict(plan), d / "plan.json")
    artifacts.dump_json(artifacts.matrices_to_json(matrices), d / "matrices.json")
    paths = [d / "plan.json", d / "matrices.json"]
    for m in matrices:
        p = d / "matrices" / f"epoch_{m.epoch_index:03d}.csv"
        artifacts.write_matrix_csv(m, returns.regions, p)
        paths.append(p)
    return paths


def _stage_clustering(ctx: _Context, manifest: RunManifest) -> list[Path]:
    cfg = ctx.config
    matrices = ctx.get("matrices")
    plan = ctx.get("plan")
    result = kmeans_multi(
        matrices, cfg.k, n_restarts=cfg.n_restarts, base_seed=cfg.seed, tol=cfg.tol, max_iter=cfg.max_iter, n_jobs=cfg.jobs
    )
    if cfg.relabel:
        result = relabel_by_mean_correlation(result)
    ctx["clustering"] = result
    rows = symbolic_dynamics(result, plan)
    d = ctx.path("clustering")
    d.mkdir(parents=True, exist_ok=True)
    artifacts.dump_json(artifacts.clustering_to_json(result, rows), d / "clustering.json")
    artifacts.write_symbolic_csv(rows, result.k, d / "symbolic_dynamics.csv")
    paths = [d / "clustering.json", d / "symbolic_dynamics.csv"]
    manifest.summary["clustering"] = {"k": result.k, "inertia": result.inertia, "n_epochs": len(rows)}

    ks = cfg.scan_range()
    if ks:
        diag = scan_k(matrices, ks, n_restarts=cfg.scan_restarts, base_seed=cfg.seed, tol=cfg.tol, max_iter=cfg.max_iter, n_jobs=cfg.jobs)
        artifacts.write_k_scan(diag, d / "k_scan.csv")
        paths.append(d / "k_scan.csv")
        manifest.summary["k_scan_best_silhouette"] = diag.best_k_by_silhouette()
    if cfg.reference_labels:
        ref = artifacts.read_label_file(Path(cfg.reference_labels))
        if len(ref) != len(rows):
            raise EpicorrError(f"reference has {len(ref)} epochs, run has {len(rows)}")
        ari = adjusted_rand_index(ref, result.labels)
        artifacts.dump_json({"adjusted_rand_index": ari, "n_epochs": len(rows)}, d / "reference_agreement.json")
        paths.append(d / "reference_agreement.json")
        manifest.summary["reference_ari"] = ari
    return paths


def _compute_spectra(ctx: _Context):
    cfg = ctx.config
    result = ctx.get("clustering")
    plan = ctx.get("plan")
    return cluster_spectra(
        ctx.get("matrices"),
        result.labels,
        window=plan.window,
        centroids=result.centroids,
        bins_empirical=cfg.bins_empirical,
        bins_wishart=cfg.bins_wishart,
        bins_mp=cfg.bins_mp,
        n_samples=cfg.wishart_samples,
        seed=stage_seed(cfg.seed, "spectra"),
        q=cfg.mp_q,
    )


def write_spectra(spectra, d: Path) -> list[Path]:
    d.mkdir(parents=True, exist_ok=True)
    paths = []
    for s in spectra:
        paths.extend(artifacts.write_cluster_spectra(s, d / f"cluster_{s.cluster_id + 1}"))
    artifacts.dump_json([artifacts.spectra_summary(s) for s in spectra], d / "spectra.json")
    paths.append(d / "spectra.json")
    return paths


def _stage_spectra(ctx: _Context, manifest: RunManifest) -> list[Path]:
    spectra = _compute_spectra(ctx)
    ctx["spectra"] = spectra
    manifest.summary["spectra_bundles"] = len(spectra)
    return write_spectra(spectra, ctx.path("spectra"))


def _stage_figures(ctx: _Context) -> list[Path]:
    from .figures import emit_figures

    if not ctx.config.figures:
        return []
    return emit_figures(ctx, ctx.path("figures"))


def run_pipeline(config: PipelineConfig, from_stage: str | None = None) -> RunManifest:
    """Run every stage from ``from_stage`` (default: the first) and write the manifest.

    Stage failures raise :class:`StageError`; files already written are kept
    and the output directory carries a ``.partial`` marker.
    """
    if from_stage is not None and from_stage not in STAGES:
        raise ConfigError(f"unknown stage {from_stage!r}; choose from {STAGES}")
    if not config.input and (from_stage in (None, "ingest")):
        raise ConfigError("no input file configured")
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    marker = out / PARTIAL_MARKER
    marker.write_text("run incomplete\n", encoding="utf-8")
    (out / "config.cfg").write_text(config.to_text(), encoding="utf-8")

    manifest = RunManifest(config=config.to_dict(), seed=config.seed, versions=dict(STAGE_VERSIONS))
    ctx = _Context(config, out)
    runners = {
        "ingest": lambda: _stage_ingest(ctx),
        "filter": lambda: _stage_filter(ctx),
        "returns": lambda: _stage_returns(ctx),
        "epochs": lambda: _stage_epochs(ctx),
        "clustering": lambda: _stage_clustering(ctx, manifest),
        "spectra": lambda: _stage_spectra(ctx, manifest),
        "figures": lambda: _stage_figures(ctx),
    }
    first = STAGES.index(from_stage) if from_stage else 0
    previous = _previous_manifest(out) if first > 0 else None
    for i, stage in enumerate(STAGES):
        if i < first:
            if previous is None or stage not in previous.get("outputs", {}):
                raise StageError(stage, FileNotFoundError(f"no saved artifacts for stage {stage!r} in {out}"))
            manifest.outputs[stage] = previous["outputs"][stage]
            for key in _SUMMARY_KEYS.get(stage, ()):
                if key in previous.get("summary", {}):
                    manifest.summary[key] = previous["summary"][key]
            continue
        t0 = time.perf_counter()
        try:
            paths = runners[stage]()
        except EpicorrError as exc:
            raise StageError(stage, exc) from exc
        except (OSError, ValueError) as exc:
            raise StageError(stage, exc) from exc
        manifest.outputs[stage] = _rel(out, paths)
        manifest.timings[stage] = round(time.perf_counter() - t0, 6)
        logger.info("stage %s done in %.2fs (%d files)", stage, manifest.timings[stage], len(paths))

    artifacts.dump_json(manifest.to_json(config.record_timings), out / "manifest.json")
    marker.unlink()
    return manifest


def _previous_manifest(out: Path):
    p = out / "manifest.json"
    if not p.exists():
        return None
    return artifacts.load_json(p)


def synthesize(seed: int, out: str | Path) -> dict:
    """Write a planted-regime synthetic panel plus ground truth and a ready config."""
    from .synth import synthetic_panel

    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    sp = synthetic_panel(seed)
    save_panel(sp.panel, out / "panel.csv")
    with open(out / "planted_labels.csv", "w", encoding="utf-8") as fh:
        fh.write("epoch_index,cluster\n")
        for e, lab in enumerate(sp.epoch_labels):
            fh.write(f"{e},{int(lab)}\n")
    with open(out / "incidence.csv", "w", encoding="utf-8") as fh:
        fh.write("date,total\n")
        for day, v in zip(sp.panel.dates, sp.incidence):
            fh.write(f"{day.isoformat()},{float(v)!r}\n")
    cfg = PipelineConfig(
        input=(out / "panel.csv").as_posix(),
        incidence=(out / "incidence.csv").as_posix(),
        reference_labels=(out / "planted_labels.csv").as_posix(),
        seed=seed,
        output_dir=(out / "run").as_posix(),
    )
    (out / "config.cfg").write_text(cfg.to_text(), encoding="utf-8")
    return {"panel": str(out / "panel.csv"), "n_epochs": int(sp.epoch_labels.size)}

