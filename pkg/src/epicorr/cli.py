"""Command-line entry point: ``epicorr analyze | synth | spectra``."""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import artifacts
from .errors import EpicorrError
from .pipeline import STAGES, PipelineConfig, load_config, run_pipeline, synthesize, write_spectra

# flags whose spelling differs from the config key, or which take a list
_SPECIAL = {"bands", "absolute_returns", "clip_negative_to_zero"}


def _add_override_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("config overrides (CLI wins over the file)")
    for f in dataclasses.fields(PipelineConfig):
        if f.name in _SPECIAL:
            continue
        g.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name, default=None, metavar=f.name.upper())
    g.add_argument("--bands", dest="bands", action="append", default=None, metavar="LOW:CENTER:HIGH",
                   help="stop band in 1/days; repeat for several, or 'default'")
    g.add_argument("--absolute-returns", dest="absolute_returns", action="store_const", const="true", default=None)
    g.add_argument("--clip-negative-to-zero", dest="clip_negative_to_zero", action="store_const", const="true", default=None)


def _overrides(args) -> dict:
    out = {}
    for f in dataclasses.fields(PipelineConfig):
        v = getattr(args, f.name, None)
        if v is None:
            continue
        out[f.name] = ";".join(v) if f.name == "bands" else v
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="epicorr", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="run the full pipeline from a config file")
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--from-stage", choices=STAGES, default=None, help="reuse saved artifacts of earlier stages")
    _add_override_flags(p)

    p = sub.add_parser("synth", help="write a synthetic planted-regime panel")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("spectra", help="eigenvalue spectra from saved correlation matrices")
    p.add_argument("--from", dest="source", required=True, help="matrices.json written by analyze")
    p.add_argument("--clustering", help="clustering.json with labels/centroids (default: cluster now)")
    p.add_argument("--out", default=None, help="output directory (default: ./spectra_out)")
    p.add_argument("--config", help="config file for k, seeds and bin counts")
    _add_override_flags(p)
    return parser


def _cmd_analyze(args) -> int:
    overrides = _overrides(args)
    cfg = load_config(args.config, overrides) if args.config else PipelineConfig().replace(**overrides)
    manifest = run_pipeline(cfg, from_stage=args.from_stage)
    n_files = sum(len(v) for v in manifest.outputs.values())
    print(f"wrote {n_files} files to {cfg.output_dir}")
    return 0


def _cmd_synth(args) -> int:
    info = synthesize(args.seed, args.out)
    print(f"wrote {info['panel']} ({info['n_epochs']} planned epochs)")
    return 0


def _cmd_spectra(args) -> int:
    from .clustering import kmeans_multi, relabel_by_mean_correlation
    from .pipeline import stage_seed
    from .rmt import cluster_spectra

    overrides = _overrides(args)
    cfg = load_config(args.config, overrides) if args.config else PipelineConfig().replace(**overrides)
    source = Path(args.source)
    matrices = artifacts.matrices_from_json(artifacts.load_json(source))
    # samples per matrix: --window, else the sibling plan.json, else the config
    window = cfg.window if "window" in overrides else None
    if window is None:
        plan_path = source.with_name("plan.json")
        window = artifacts.load_json(plan_path)["window"] if plan_path.exists() else cfg.window
    if args.clustering:
        result = artifacts.clustering_from_json(artifacts.load_json(Path(args.clustering)))
    else:
        result = kmeans_multi(matrices, cfg.k, cfg.n_restarts, cfg.seed, cfg.tol, cfg.max_iter, n_jobs=cfg.jobs)
        if cfg.relabel:
            result = relabel_by_mean_correlation(result)
    spectra = cluster_spectra(
        matrices,
        result.labels,
        window=window,
        centroids=result.centroids,
        bins_empirical=cfg.bins_empirical,
        bins_wishart=cfg.bins_wishart,
        bins_mp=cfg.bins_mp,
        n_samples=cfg.wishart_samples,
        seed=stage_seed(cfg.seed, "spectra"),
        q=cfg.mp_q,
    )
    out = Path(args.out or "spectra_out")
    paths = write_spectra(spectra, out)
    print(f"wrote {len(paths)} files to {out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    handlers = {"analyze": _cmd_analyze, "synth": _cmd_synth, "spectra": _cmd_spectra}
    try:
        return handlers[args.command](args)
    except EpicorrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
