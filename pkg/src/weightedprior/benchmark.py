"""Table-style comparison of reconstruction methods on a synthetic dataset."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import Experiment
from .grid import RegionOfInterest, save_raster
from .metrics import rmse, ssim
from .phantom import PRESETS, LongitudinalDataset, generate_longitudinal_dataset, save_dataset
from .pipeline import Diagnostics, plain_prior_reconstruct, reconstruct, weighted_prior_reconstruct
from .projector import ScanGeometry, Sinogram, forward_project, parallel_geometry, save_sinogram

REPORT_HEADER = ("dataset", "method", "ssim_global", "ssim_roi", "rmse_global", "seconds")


class NumericalError(ArithmeticError):
    """A reconstruction produced non-finite values."""


@dataclass
class BenchRow:
    dataset: str
    method: str
    ssim_global: float
    ssim_roi: float
    rmse_global: float
    rmse_roi: float
    seconds: float


@dataclass
class BenchResult:
    experiment: Experiment
    dataset: LongitudinalDataset
    sinogram: Sinogram
    rows: list[BenchRow] = field(default_factory=list)
    images: dict[str, np.ndarray] = field(default_factory=dict)
    weights: dict[str, np.ndarray] = field(default_factory=dict)
    diagnostics: dict[str, Diagnostics] = field(default_factory=dict)

    def row(self, method: str) -> BenchRow:
        return next(r for r in self.rows if r.method == method)

    def report(self, timings: bool = False) -> str:
        lines = ["\t".join(REPORT_HEADER)]
        for r in self.rows:
            secs = f"{r.seconds:.3f}" if timings else "NA"
            lines.append(
                f"{r.dataset}\t{r.method}\t{r.ssim_global:.6f}\t{r.ssim_roi:.6f}\t{r.rmse_global:.6f}\t{secs}"
            )
        return "\n".join(lines) + "\n"


def make_dataset(exp: Experiment) -> LongitudinalDataset:
    spec = PRESETS[exp.dataset](size=exp.size, n_templates=exp.n_templates, seed=exp.seed,
                                noise_sigma=exp.noise_sigma)
    return generate_longitudinal_dataset(spec)


def acquisition_geometry(exp: Experiment) -> ScanGeometry:
    """``views`` evenly spread out of a dense ``total_views`` scan."""
    return parallel_geometry((exp.size, exp.size), exp.views, exp.total_views)


def score(image, truth, rois: list[RegionOfInterest]) -> tuple[float, float, float, float]:
    return ssim(image, truth), ssim(image, truth, rois), rmse(image, truth), rmse(image, truth, rois)


def run_benchmark(exp: Experiment, methods=None) -> BenchResult:
    """Reconstruct the experiment's test volume with every method and score it."""
    dataset = make_dataset(exp)
    sino = forward_project(dataset.test, acquisition_geometry(exp))
    result = BenchResult(exp, dataset, sino)
    cfg = exp.recon
    for method in methods or exp.bench_methods:
        start = time.perf_counter()
        if method == "weighted-prior":
            out = weighted_prior_reconstruct(sino, dataset.templates, cfg)
        elif method == "prior":
            out = plain_prior_reconstruct(sino, dataset.templates, cfg)
        else:
            out = None
            image = reconstruct(method, sino, cfg=cfg, algebraic_options=(
                exp.algebraic_options(method) if method in ("art", "sart", "sirt") else None))
        if out is not None:
            image = out.image
            result.weights[method] = out.weights
            result.diagnostics[method] = out.diagnostics
        seconds = time.perf_counter() - start
        if not np.all(np.isfinite(image)):
            raise NumericalError(f"{method} produced non-finite values")
        result.images[method] = image
        result.rows.append(BenchRow(exp.dataset, method, *score(image, dataset.test, dataset.new_regions), seconds))
    return result


def write_benchmark(result: BenchResult, directory, timings: bool = False) -> Path:
    """Write ``report.tsv``, the dataset, the sinogram and every reconstruction."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    save_dataset(result.dataset, out / "dataset")
    save_sinogram(result.sinogram, out / "sinogram.tpr")
    for method, image in result.images.items():
        save_raster(image, out / f"recon_{method}.tpr")
    for method, weights in result.weights.items():
        save_raster(weights, out / f"weights_{method}.tpr")
    for method, diag in result.diagnostics.items():
        (out / f"diagnostics_{method}.txt").write_text(diag.table())
    (out / "report.tsv").write_text(result.report(timings))
    return out
