"""Command-line driver: ``weightedprior <subcommand> [options]``.

Exit codes: 0 success, 1 validation or config error, 2 I/O error, 3 a
non-finite value was produced.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .benchmark import NumericalError, make_dataset, run_benchmark, write_benchmark
from .config import Experiment, default_experiment, parse_config
from .grid import RasterFormatError, RasterLengthError, ValidationError, load_raster, save_raster
from .metrics import rmse, ssim
from .phantom import load_dataset_dir, parse_roi, save_dataset
from .pipeline import RECON_METHODS, UsageError, plain_prior_reconstruct, reconstruct, weighted_prior_reconstruct
from .prior import DegenerateSpanError, RankError, build_eigenspace, save_eigenspace
from .projector import GeometryError, forward_project, load_sinogram, parallel_geometry, save_sinogram
from .weights import build_pilot_set, compute_weight_map, dump_difference_maps, simulate_template_sinograms

log = logging.getLogger("weightedprior")

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_NUMERICAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageExit(f"{self.prog}: error: {message}")


class _UsageExit(Exception):
    pass


def _experiment(args) -> Experiment:
    exp = parse_config(args.config) if args.config else default_experiment()
    return exp.with_overrides(
        seed=getattr(args, "seed", None),
        views=getattr(args, "views", None),
        method=getattr(args, "method", None),
    )


def _templates(directory):
    templates, _, _ = load_dataset_dir(directory)
    return templates


def _require_finite(*arrays):
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise NumericalError("non-finite values in result")


def cmd_phantom(args):
    exp = _experiment(args)
    out = save_dataset(make_dataset(exp), args.out)
    log.info("wrote %s dataset to %s", exp.dataset, out)


def cmd_project(args):
    exp = _experiment(args)
    image = load_raster(args.input)
    geom = parallel_geometry(image.shape, exp.views, exp.total_views)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_sinogram(forward_project(image, geom), out / "sinogram.tpr")


def cmd_recon(args):
    exp = _experiment(args)
    sino = load_sinogram(args.sino)
    templates = _templates(args.templates) if args.templates else None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    method = exp.method
    if method in ("prior", "weighted-prior"):
        if templates is None:
            raise _UsageExit(f"method {method} needs --templates")
        fn = weighted_prior_reconstruct if method == "weighted-prior" else plain_prior_reconstruct
        result = fn(sino, templates, exp.recon)
        _require_finite(result.image)
        save_raster(result.image, out / f"recon_{method}.tpr")
        save_raster(result.weights, out / f"weights_{method}.tpr")
        (out / f"diagnostics_{method}.txt").write_text(result.diagnostics.table())
        return
    algebraic = exp.algebraic_options(method) if method in ("art", "sart", "sirt") else None
    image = reconstruct(method, sino, cfg=exp.recon, algebraic_options=algebraic)
    _require_finite(image)
    save_raster(image, out / f"recon_{method}.tpr")


def cmd_eigen(args):
    exp = _experiment(args)
    src = Path(args.templates)
    templates = _templates(src)
    rank = args.rank if args.rank is not None else exp.recon.eigen_rank_high
    space = build_eigenspace(templates, rank)
    sources = sorted(src.glob("template_*.tpr"))
    save_eigenspace(space, args.out, sources)


def cmd_weights(args):
    exp = _experiment(args)
    sino = load_sinogram(args.sino)
    templates = _templates(args.templates)
    pilots = build_pilot_set(sino, simulate_template_sinograms(templates, sino.geometry),
                             exp.recon.pilot_methods, exp.recon.eigen_rank_low)
    weights = compute_weight_map(pilots, exp.recon.k, exp.recon.smoothing_sigma)
    _require_finite(weights)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_raster(weights, out / "weights.tpr")
    if args.dump_differences:
        dump_difference_maps(pilots, out)


def cmd_metric(args):
    a = load_raster(args.image)
    b = load_raster(args.reference)
    rois = [parse_roi(r) for r in args.roi or []]
    if args.dataset:
        rois += load_dataset_dir(args.dataset)[2]
    print(f"ssim_global = {ssim(a, b):.6f}")
    print(f"rmse_global = {rmse(a, b):.6f}")
    if rois:
        print(f"ssim_roi = {ssim(a, b, rois):.6f}")
        print(f"rmse_roi = {rmse(a, b, rois):.6f}")


def cmd_bench(args):
    exp = _experiment(args)
    result = run_benchmark(exp)
    write_benchmark(result, args.out, timings=args.timings)
    sys.stdout.write(result.report(timings=args.timings))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="weightedprior", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, views=True):
        p.add_argument("--config", type=Path, help="key = value config file")
        p.add_argument("--seed", type=int)
        if views:
            p.add_argument("--views", type=int)
        return p

    p = common(sub.add_parser("phantom", help="generate a synthetic longitudinal dataset"), views=False)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_phantom)

    p = common(sub.add_parser("project", help="forward project a raster"))
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_project)

    p = common(sub.add_parser("recon", help="reconstruct a sinogram"))
    p.add_argument("--sino", type=Path, required=True)
    p.add_argument("--method", choices=RECON_METHODS)
    p.add_argument("--templates", type=Path, help="dataset directory holding template rasters")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_recon)

    p = common(sub.add_parser("eigen", help="build an eigenspace from templates"), views=False)
    p.add_argument("--templates", type=Path, required=True)
    p.add_argument("--rank", type=int)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_eigen)

    p = common(sub.add_parser("weights", help="compute the prior weight map"))
    p.add_argument("--sino", type=Path, required=True)
    p.add_argument("--templates", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--dump-differences", action="store_true", help="also write per-method difference maps")
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("metric", help="SSIM and RMSE of an image against a reference")
    p.add_argument("--image", type=Path, required=True)
    p.add_argument("--reference", type=Path, required=True)
    p.add_argument("--roi", action="append", help="x0,y0,w,h (repeatable)")
    p.add_argument("--dataset", type=Path, help="use the new regions listed in this dataset's manifest")
    p.set_defaults(func=cmd_metric)

    p = common(sub.add_parser("bench", help="compare methods on a synthetic dataset"))
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--timings", action="store_true", help="record wall-clock seconds in the report")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _UsageExit as exc:
        print(exc, file=sys.stderr)
        return EXIT_VALIDATION
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except _UsageExit as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (RasterFormatError, RasterLengthError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericalError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValidationError, GeometryError, RankError, DegenerateSpanError, UsageError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
