"""Synthetic longitudinal datasets.

A dataset is a base specimen (a sum of ellipses) plus per-volume defect lists.
Each template and the test volume get their own defects; the pixels where the
test differs from every template are reported as ``new_regions``.

Two presets mirror classic longitudinal designs:

* :func:`potato_spec` drills one more hole per scan, so the test shows a hole
  no template has (structure appears).
* :func:`okra_spec` gives every template the same two deformities and adds a
  cut per scan; the test keeps the cuts but lacks the deformities (structure
  disappears).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .grid import RegionOfInterest, ValidationError, load_raster, save_raster
from .keyvalue import read_key_values, write_key_values

SUBSAMPLES = 4


@dataclass(frozen=True)
class Ellipse:
    cx: float
    cy: float
    a: float
    b: float
    value: float
    angle: float = 0.0  # degrees, counter-clockwise from the x axis

    def coverage(self, xs, ys):
        t = math.radians(self.angle)
        dx, dy = xs - self.cx, ys - self.cy
        u = dx * math.cos(t) + dy * math.sin(t)
        v = -dx * math.sin(t) + dy * math.cos(t)
        return (u / self.a) ** 2 + (v / self.b) ** 2 <= 1.0

    def extent(self):
        t = math.radians(self.angle)
        hx = math.hypot(self.a * math.cos(t), self.b * math.sin(t))
        hy = math.hypot(self.a * math.sin(t), self.b * math.cos(t))
        return self.cx - hx, self.cy - hy, self.cx + hx, self.cy + hy


@dataclass(frozen=True)
class Disk:
    cx: float
    cy: float
    r: float
    delta: float

    def coverage(self, xs, ys):
        return (xs - self.cx) ** 2 + (ys - self.cy) ** 2 <= self.r**2

    def extent(self):
        return self.cx - self.r, self.cy - self.r, self.cx + self.r, self.cy + self.r


@dataclass(frozen=True)
class Rect:
    x0: float
    y0: float
    w: float
    h: float
    delta: float

    def coverage(self, xs, ys):
        return (xs >= self.x0) & (xs < self.x0 + self.w) & (ys >= self.y0) & (ys < self.y0 + self.h)

    def extent(self):
        return self.x0, self.y0, self.x0 + self.w, self.y0 + self.h


Defect = Union[Disk, Rect]


@dataclass(frozen=True)
class LongitudinalSpec:
    """Recipe for a template set plus one test volume.

    Coordinates are in pixels with pixel ``(row, col)`` centred at
    ``(x=col, y=row)``.
    """

    size: int
    base: tuple[Ellipse, ...]
    template_defects: tuple[tuple[Defect, ...], ...]
    test_defects: tuple[Defect, ...]
    noise_sigma: float = 0.0
    seed: int = 0
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "base", tuple(self.base))
        object.__setattr__(self, "template_defects", tuple(tuple(d) for d in self.template_defects))
        object.__setattr__(self, "test_defects", tuple(self.test_defects))
        if self.size < 1:
            raise ValidationError("size must be positive")
        if self.noise_sigma < 0:
            raise ValidationError("noise_sigma must be non-negative")
        if len(self.template_defects) < 1:
            raise ValidationError("at least one template is required")
        lo, hi = -0.5, self.size - 0.5
        shapes = list(self.base) + list(self.test_defects)
        shapes += [d for ds in self.template_defects for d in ds]
        for shape in shapes:
            x0, y0, x1, y1 = shape.extent()
            if x0 < lo or y0 < lo or x1 > hi or y1 > hi:
                raise ValidationError(f"{shape} extends outside the {self.size}x{self.size} grid")

    @property
    def n_templates(self) -> int:
        return len(self.template_defects)

    def changed_defects(self) -> list[Defect]:
        """Symmetric difference of the test defects and the union of template defects."""
        union = {d for ds in self.template_defects for d in ds}
        test = set(self.test_defects)
        ordered = list(self.test_defects) + [d for ds in self.template_defects for d in ds]
        out, seen = [], set()
        for d in ordered:
            if (d in union) != (d in test) and d not in seen:
                seen.add(d)
                out.append(d)
        return out

    @property
    def new_regions(self) -> list[RegionOfInterest]:
        return [_bounding_box(_coverage(d, self.size) > 0) for d in self.changed_defects()]


@dataclass
class LongitudinalDataset:
    templates: list[np.ndarray]
    test: np.ndarray
    new_regions: list[RegionOfInterest]
    spec: LongitudinalSpec = field(repr=False)

    def __iter__(self):
        return iter((self.templates, self.test, self.new_regions))


def _subsample_grid(size: int):
    offs = (np.arange(SUBSAMPLES) + 0.5) / SUBSAMPLES - 0.5
    centres = np.arange(size, dtype=np.float64)
    ys = (centres[:, None] + offs[None, :]).reshape(-1)
    return ys[:, None], ys[None, :]


def _coverage(shape, size: int) -> np.ndarray:
    ys, xs = _subsample_grid(size)
    inside = shape.coverage(xs, ys).astype(np.float64)
    return inside.reshape(size, SUBSAMPLES, size, SUBSAMPLES).mean(axis=(1, 3))


def _bounding_box(mask: np.ndarray) -> RegionOfInterest:
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    if rows.size == 0:
        raise ValidationError("defect covers no pixels")
    return RegionOfInterest(int(cols[0]), int(rows[0]), int(cols[-1] - cols[0] + 1), int(rows[-1] - rows[0] + 1))


def rasterize(size: int, base: Sequence[Ellipse], defects: Sequence[Defect] = ()) -> np.ndarray:
    """Noise-free rendering with 4x4 supersampling per pixel."""
    img = np.zeros((size, size))
    for e in base:
        img += e.value * _coverage(e, size)
    for d in defects:
        img += d.delta * _coverage(d, size)
    return img


def generate_longitudinal_dataset(spec: LongitudinalSpec) -> LongitudinalDataset:
    rng = np.random.default_rng(spec.seed)
    clean = [rasterize(spec.size, spec.base, ds) for ds in spec.template_defects]
    clean.append(rasterize(spec.size, spec.base, spec.test_defects))
    if spec.noise_sigma > 0:
        noisy = [img + rng.normal(0.0, spec.noise_sigma, img.shape) for img in clean]
    else:
        noisy = clean
    return LongitudinalDataset(noisy[:-1], noisy[-1], spec.new_regions, spec)


def _potato_base(size: int) -> tuple[Ellipse, ...]:
    c = (size - 1) / 2.0
    s = size / 128.0
    return (
        Ellipse(c, c, 52 * s, 42 * s, 1.0, angle=15.0),
        Ellipse(c + 4 * s, c - 2 * s, 30 * s, 22 * s, 0.25, angle=15.0),
        Ellipse(c - 36 * s, c + 6 * s, 6 * s, 4 * s, -0.3, angle=40.0),
        Ellipse(c + 34 * s, c + 14 * s, 5 * s, 7 * s, -0.3, angle=-20.0),
    )


def _place_disks(rng, size, count, radius_range, accept, existing=(), spacing=4.0, restarts=50):
    """Rejection-sample non-overlapping disk centres satisfying ``accept``.

    Greedy placement can paint itself into a corner, so the whole set is
    redrawn (continuing the same random stream) when a pass gets stuck.
    """
    for _ in range(restarts):
        placed = list(existing)
        out = []
        for _ in range(10000):
            if len(out) == count:
                break
            r = float(rng.uniform(*radius_range))
            cx, cy = (float(v) for v in rng.uniform(r + 1, size - r - 2, size=2))
            cx, cy = round(cx, 2), round(cy, 2)
            if not accept(cx, cy, r):
                continue
            if any(math.hypot(cx - px, cy - py) < r + pr + spacing for px, py, pr in placed):
                continue
            placed.append((cx, cy, r))
            out.append((cx, cy, round(r, 2)))
        if len(out) == count:
            return out
    raise ValidationError("could not place the requested defects")


def potato_spec(
    size: int = 128, n_templates: int = 4, seed: int = 0, noise_sigma: float = 0.005
) -> LongitudinalSpec:
    """Template ``i`` has holes ``1..i``; the test has one hole more than any template."""
    base = _potato_base(size)
    body, flesh = base[0], base[1]
    rng = np.random.default_rng([seed, 1])
    s = size / 128.0
    shrunk_body = Ellipse(body.cx, body.cy, body.a - 10 * s, body.b - 10 * s, 1.0, body.angle)
    grown_flesh = Ellipse(flesh.cx, flesh.cy, flesh.a + 10 * s, flesh.b + 10 * s, 1.0, flesh.angle)

    def accept(cx, cy, r):
        p = np.array([cx]), np.array([cy])
        if not shrunk_body.coverage(*p)[0] or grown_flesh.coverage(*p)[0]:
            return False
        return all(math.hypot(cx - e.cx, cy - e.cy) > r + max(e.a, e.b) + 2 * s for e in base[2:])

    holes = [Disk(cx, cy, r, -1.0) for cx, cy, r in
             _place_disks(rng, size, n_templates + 1, (4 * s, 8 * s), accept, spacing=4 * s)]
    templates = tuple(tuple(holes[: i + 1]) for i in range(n_templates))
    return LongitudinalSpec(size, base, templates, tuple(holes), noise_sigma, seed, "potato")


def okra_spec(
    size: int = 128, n_templates: int = 4, seed: int = 0, noise_sigma: float = 0.005
) -> LongitudinalSpec:
    """Every template carries the same two deformities; the test has none of them."""
    c = (size - 1) / 2.0
    s = size / 128.0
    rng = np.random.default_rng([seed, 2])
    base = [
        Ellipse(c, c, 50 * s, 50 * s, 1.0),
        Ellipse(c, c, 30 * s, 30 * s, -0.6),
    ]
    for i in range(5):
        phi = 2 * math.pi * i / 5 + 0.3
        base.append(Ellipse(c + 20 * s * math.cos(phi), c + 20 * s * math.sin(phi), 5 * s, 3 * s, 0.5,
                            angle=math.degrees(phi)))

    def in_wall(cx, cy, r):
        d = math.hypot(cx - c, cy - c)
        return 30 * s + r + 2 * s <= d <= 50 * s - r - 2 * s

    spots = _place_disks(rng, size, 2, (4 * s, 6 * s), in_wall, spacing=4 * s)
    deformities = tuple(Disk(cx, cy, r, -0.7) for cx, cy, r in spots)
    cut_centres = _place_disks(rng, size, n_templates, (3 * s, 4 * s), in_wall,
                               existing=[(cx, cy, r) for cx, cy, r in spots], spacing=4 * s)
    cuts = [Rect(round(cx - r, 2), round(cy - r, 2), round(2 * r, 2), round(r, 2), -0.8)
            for cx, cy, r in cut_centres]
    templates = tuple(deformities + tuple(cuts[: i + 1]) for i in range(n_templates))
    return LongitudinalSpec(size, tuple(base), templates, tuple(cuts), noise_sigma, seed, "okra")


PRESETS = {"potato": potato_spec, "okra": okra_spec}


def save_dataset(dataset: LongitudinalDataset, directory) -> Path:
    """Write ``template_XX.tpr``, ``test.tpr`` and a ``manifest.txt`` listing new regions."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    spec = dataset.spec
    manifest = {
        "dataset": spec.name,
        "size": spec.size,
        "seed": spec.seed,
        "noise_sigma": repr(float(spec.noise_sigma)),
        "n_templates": len(dataset.templates),
    }
    for i, tpl in enumerate(dataset.templates):
        name = f"template_{i:02d}.tpr"
        save_raster(tpl, out / name)
        manifest[f"template_{i:02d}"] = name
    save_raster(dataset.test, out / "test.tpr")
    manifest["test"] = "test.tpr"
    manifest["n_new_regions"] = len(dataset.new_regions)
    for i, roi in enumerate(dataset.new_regions):
        manifest[f"new_region_{i:02d}"] = f"{roi.x0},{roi.y0},{roi.w},{roi.h}"
    write_key_values(out / "manifest.txt", manifest)
    return out


def parse_roi(text: str) -> RegionOfInterest:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 4:
        raise ValidationError(f"ROI must be 'x0,y0,w,h', got {text!r}")
    return RegionOfInterest(*(int(p) for p in parts))


def load_dataset_dir(directory) -> tuple[list[np.ndarray], np.ndarray | None, list[RegionOfInterest]]:
    """Templates, test image (if present) and new regions from a dataset directory."""
    src = Path(directory)
    manifest = read_key_values(src / "manifest.txt")
    n = int(manifest["n_templates"])
    templates = [load_raster(src / manifest[f"template_{i:02d}"]) for i in range(n)]
    test = load_raster(src / manifest["test"]) if "test" in manifest else None
    rois = [parse_roi(manifest[f"new_region_{i:02d}"]) for i in range(int(manifest.get("n_new_regions", 0)))]
    return templates, test, rois
