"""Synthetic piecewise-planar scenes with known per-region distortions.

A scene is a ground-truth depth map assembled from per-region surfaces,
plus a relative map produced by applying each region's *inverse*
distortion to the ground truth. A correct fitter must therefore map the
relative map back onto the ground truth to numerical precision, which
makes these scenes the exact-recovery oracle for the pipeline.

Surfaces are planes in the normalized [-1, 1] image coordinates, with
optional quadratic terms that bend them; bent surfaces make the
relative map nonlinear in (x, y), which is what separates a surface
fit from a plain scale-and-shift fit under slope-bearing distortions.

All randomness is derived from a single seed, split deterministically
per purpose, so identical specs yield identical scenes and samples.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import InputError, InvalidSpec, TooManyRequested
from .grids import DepthGrid, LabelGrid, SparseSamples

LAYOUT_GRID = "grid"
LAYOUT_VORONOI = "voronoi"

DISTORT_AFFINE = "affine"
DISTORT_PLANAR = "planar"
DISTORT_NONLINEAR = "nonlinear"
DISTORTION_KINDS = (DISTORT_AFFINE, DISTORT_PLANAR, DISTORT_NONLINEAR)

# Sub-seed tags so the coordinate draw, the measurement noise, and the
# scene layout never share a random stream.
_TAG_COORDS = 1
_TAG_NOISE = 2
_TAG_LAYOUT = 3

# Noisy sample depths are floored here to keep them strictly positive.
MIN_SAMPLE_DEPTH = 1e-6


def _rng(seed, tag: int) -> np.random.Generator:
    if seed is None:
        raise InputError("a seed is required for reproducible sampling")
    key = list(seed) if isinstance(seed, (tuple, list)) else [int(seed)]
    return np.random.default_rng([tag] + [int(k) for k in key])


@dataclass(frozen=True)
class Plane:
    """Depth surface over normalized coordinates.

    depth(x, y) = m*x + n*y + l + qx*x^2 + qy*y^2. The quadratic terms
    default to zero (a true plane); nonzero values bend the surface,
    which is used to exercise model misspecification.
    """

    m: float
    n: float
    l: float
    qx: float = 0.0
    qy: float = 0.0

    def depth(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return self.m * x + self.n * y + self.l + self.qx * x * x + self.qy * y * y


@dataclass(frozen=True)
class Distortion:
    """Invertible map from ground truth to relative depth for one region.

    affine:    rel = (gt - b) / a
    planar:    rel = (gt - bx*x - by*y - c) / a
    nonlinear: rel = gt ** gamma

    `a` must be positive so relative ordering survives; `noise_sigma`
    is Gaussian noise applied to sparse sample depths only, never to
    the dense relative map.
    """

    kind: str
    a: float = 1.0
    b: float = 0.0
    bx: float = 0.0
    by: float = 0.0
    c: float = 0.0
    gamma: float = 1.2
    noise_sigma: float = 0.0

    def __post_init__(self):
        if self.kind not in DISTORTION_KINDS:
            raise InvalidSpec(f"unknown distortion kind {self.kind!r}")
        if self.kind in (DISTORT_AFFINE, DISTORT_PLANAR) and self.a <= 0:
            raise InvalidSpec("distortion scale a must be positive")
        if self.kind == DISTORT_NONLINEAR and self.gamma <= 0:
            raise InvalidSpec("nonlinear exponent gamma must be positive")
        if self.noise_sigma < 0:
            raise InvalidSpec("noise_sigma must be non-negative")

    def inverse(self, gt: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Ground truth -> relative depth."""
        if self.kind == DISTORT_AFFINE:
            return (gt - self.b) / self.a
        if self.kind == DISTORT_PLANAR:
            return (gt - self.bx * x - self.by * y - self.c) / self.a
        return gt**self.gamma

    def forward(self, rel: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Relative depth -> ground truth (the map a fitter must find)."""
        if self.kind == DISTORT_AFFINE:
            return self.a * rel + self.b
        if self.kind == DISTORT_PLANAR:
            return self.a * rel + self.bx * x + self.by * y + self.c
        return rel ** (1.0 / self.gamma)


@dataclass(frozen=True)
class RegionSpec:
    plane: Plane
    distortion: Distortion


@dataclass(frozen=True)
class SceneSpec:
    """Complete description of one synthetic scene.

    Grid layout tiles the image into grid_rows x grid_cols cells;
    voronoi layout labels pixels by their nearest of `sites` seeded
    random sites (ties go to the lower site index). `regions[i]`
    describes the region labeled i in the emitted mask.
    """

    height: int
    width: int
    layout: str
    regions: tuple[RegionSpec, ...]
    seed: int
    depth_range: tuple[float, float] = (0.001, 10.0)
    grid_rows: int = 0
    grid_cols: int = 0
    sites: int = 0

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise InvalidSpec("scene dimensions must be positive")
        lo, hi = self.depth_range
        if not (0.0 < lo < hi):
            raise InvalidSpec(f"depth range must satisfy 0 < min < max, got {self.depth_range}")
        if self.layout == LAYOUT_GRID:
            expected = self.grid_rows * self.grid_cols
            if self.grid_rows < 1 or self.grid_cols < 1:
                raise InvalidSpec("grid layout needs grid_rows and grid_cols >= 1")
        elif self.layout == LAYOUT_VORONOI:
            expected = self.sites
            if self.sites < 1:
                raise InvalidSpec("voronoi layout needs sites >= 1")
        else:
            raise InvalidSpec(f"unknown layout {self.layout!r}")
        if len(self.regions) != expected:
            raise InvalidSpec(
                f"layout defines {expected} regions but {len(self.regions)} were specified"
            )

    @property
    def n_regions(self) -> int:
        return len(self.regions)


def _layout_labels(spec: SceneSpec) -> np.ndarray:
    h, w = spec.height, spec.width
    if spec.layout == LAYOUT_GRID:
        row_band = np.minimum(np.arange(h) * spec.grid_rows // h, spec.grid_rows - 1)
        col_band = np.minimum(np.arange(w) * spec.grid_cols // w, spec.grid_cols - 1)
        return (row_band[:, None] * spec.grid_cols + col_band[None, :]).astype(np.int32)
    rng = _rng(spec.seed, _TAG_LAYOUT)
    site_r = rng.uniform(0, h, spec.sites)
    site_c = rng.uniform(0, w, spec.sites)
    rr = np.arange(h, dtype=np.float64)[:, None]
    cc = np.arange(w, dtype=np.float64)[None, :]
    best = np.full((h, w), np.inf)
    labels = np.zeros((h, w), dtype=np.int32)
    for i in range(spec.sites):
        d2 = (rr - site_r[i]) ** 2 + (cc - site_c[i]) ** 2
        closer = d2 < best  # strict: ties keep the lower site index
        labels[closer] = i
        best = np.where(closer, d2, best)
    return labels


def _coordinate_grids(height: int, width: int) -> tuple[np.ndarray, np.ndarray]:
    x = np.linspace(-1.0, 1.0, width) if width > 1 else np.zeros(1)
    y = np.linspace(-1.0, 1.0, height) if height > 1 else np.zeros(1)
    return np.broadcast_to(x[None, :], (height, width)), np.broadcast_to(
        y[:, None], (height, width)
    )


def generate_scene(spec: SceneSpec) -> tuple[DepthGrid, DepthGrid, LabelGrid]:
    """Materialize (ground truth, relative map, region mask) from a spec.

    Deterministic in the spec's seed. Raises InvalidSpec if any region's
    surface leaves the declared depth range.
    """
    labels = _layout_labels(spec)
    x, y = _coordinate_grids(spec.height, spec.width)
    gt = np.zeros((spec.height, spec.width), dtype=np.float64)
    rel = np.zeros((spec.height, spec.width), dtype=np.float64)
    lo, hi = spec.depth_range
    tol = 1e-9 * max(1.0, hi)
    for i, region in enumerate(spec.regions):
        sel = labels == i
        if not sel.any():
            continue
        depths = region.plane.depth(x[sel], y[sel])
        if depths.min() < lo - tol or depths.max() > hi + tol:
            raise InvalidSpec(
                f"region {i} surface leaves depth range [{lo}, {hi}]: "
                f"[{depths.min():.4f}, {depths.max():.4f}]"
            )
        gt[sel] = depths
        rel[sel] = region.distortion.inverse(depths, x[sel], y[sel])
    return DepthGrid(gt), DepthGrid(rel), LabelGrid(labels)


def sample_uniform(
    gt: DepthGrid, n: int, seed, noise_sigma: float = 0.0
) -> SparseSamples:
    """Draw n distinct valid pixels uniformly without replacement.

    Depths are the ground-truth values, with optional Gaussian noise
    (floored at a tiny positive value to keep depths legal). The seed
    may be an int or a sequence of ints; identical seeds reproduce the
    identical sample set.
    """
    flat_valid = np.flatnonzero(gt.valid.ravel())
    if n > flat_valid.size:
        raise TooManyRequested(f"requested {n} samples but only {flat_valid.size} valid pixels")
    if n < 0:
        raise InputError("sample count must be non-negative")
    picked = _rng(seed, _TAG_COORDS).choice(flat_valid, size=n, replace=False)
    rows = picked // gt.width
    cols = picked % gt.width
    depths = gt.values[rows, cols]
    if noise_sigma > 0:
        noise = _rng(seed, _TAG_NOISE).normal(0.0, noise_sigma, size=n)
        depths = np.maximum(depths + noise, MIN_SAMPLE_DEPTH)
    return SparseSamples(rows, cols, depths)


def sample_beams(
    gt: DepthGrid, beams: int, seed=0, noise_sigma: float = 0.0
) -> SparseSamples:
    """Sample full scanlines at evenly spaced heights, one per beam.

    Beam k reads every valid pixel of row floor((k + 0.5) * H / beams),
    emulating a low-beam-count range sensor swept across the image.
    With beams == height every valid pixel is sampled.
    """
    height = gt.height
    if beams < 1:
        raise InputError("beam count must be >= 1")
    if beams > height:
        raise TooManyRequested(f"{beams} beams exceed {height} image rows")
    beam_rows = (2 * np.arange(beams, dtype=np.int64) + 1) * height // (2 * beams)
    row_sel = np.zeros(height, dtype=bool)
    row_sel[beam_rows] = True
    keep = gt.valid & row_sel[:, None]
    rows, cols = np.nonzero(keep)
    depths = gt.values[rows, cols]
    if noise_sigma > 0:
        noise = _rng(seed, _TAG_NOISE).normal(0.0, noise_sigma, size=depths.size)
        depths = np.maximum(depths + noise, MIN_SAMPLE_DEPTH)
    return SparseSamples(rows, cols, depths)


def scene_samples(
    spec: SceneSpec, gt: DepthGrid, mask: LabelGrid, n: int, seed
) -> SparseSamples:
    """Uniform sampling that honors each region's own noise_sigma."""
    clean = sample_uniform(gt, n, seed, noise_sigma=0.0)
    sigmas = np.array(
        [spec.regions[i].distortion.noise_sigma for i in range(spec.n_regions)]
    )
    per_sample = sigmas[mask.labels[clean.rows, clean.cols]]
    if (per_sample > 0).any():
        noise = _rng(seed, _TAG_NOISE).normal(0.0, 1.0, size=len(clean)) * per_sample
        depths = np.maximum(clean.depths + noise, MIN_SAMPLE_DEPTH)
        return SparseSamples(clean.rows, clean.cols, depths)
    return clean


def random_scene(
    seed: int,
    height: int = 480,
    width: int = 640,
    region_range: tuple[int, int] = (6, 20),
    layout: str = LAYOUT_VORONOI,
    distortion: str = DISTORT_AFFINE,
    scale_range: tuple[float, float] = (0.5, 3.0),
    shift_range: tuple[float, float] = (-15.0, 7.0),
    slope_range: tuple[float, float] = (0.3, 1.2),
    curvature_range: tuple[float, float] | None = None,
    noise_sigma: float = 0.0,
    depth_range: tuple[float, float] = (1.0, 9.0),
    min_region_pixels: int = 25,
) -> SceneSpec:
    """Draw a heterogeneous scene spec with per-region random distortions.

    Surfaces are guaranteed to stay inside `depth_range` on the whole
    image. Voronoi layouts are redrawn (with a shifted sub-seed) until
    every site owns at least `min_region_pixels` pixels, so the region
    count is exact.
    """
    rng = _rng(seed, _TAG_LAYOUT)
    count = int(rng.integers(region_range[0], region_range[1] + 1))
    lo, hi = depth_range
    span = hi - lo

    def draw_plane() -> Plane:
        # Keep |m|+|n|+|qx|+|qy| under ~35% of the span, then center the
        # offset so the surface cannot leave the range anywhere.
        budget = 0.35 * span
        m = rng.uniform(*slope_range) * rng.choice([-1.0, 1.0])
        n = rng.uniform(*slope_range) * rng.choice([-1.0, 1.0])
        qx = qy = 0.0
        if curvature_range is not None:
            qx = rng.uniform(*curvature_range) * rng.choice([-1.0, 1.0])
            qy = rng.uniform(*curvature_range) * rng.choice([-1.0, 1.0])
        total = abs(m) + abs(n) + abs(qx) + abs(qy)
        if total > budget:
            factor = budget / total
            m, n, qx, qy = m * factor, n * factor, qx * factor, qy * factor
            total = budget
        l = rng.uniform(lo + 1.05 * total, hi - 1.05 * total)
        return Plane(m=m, n=n, l=l, qx=qx, qy=qy)

    def draw_distortion() -> Distortion:
        if distortion == DISTORT_AFFINE:
            return Distortion(
                kind=DISTORT_AFFINE,
                a=rng.uniform(*scale_range),
                b=rng.uniform(*shift_range),
                noise_sigma=noise_sigma,
            )
        if distortion == DISTORT_PLANAR:
            return Distortion(
                kind=DISTORT_PLANAR,
                a=rng.uniform(*scale_range),
                bx=rng.uniform(-1.0, 1.0),
                by=rng.uniform(-1.0, 1.0),
                c=rng.uniform(*shift_range),
                noise_sigma=noise_sigma,
            )
        if distortion == DISTORT_NONLINEAR:
            return Distortion(
                kind=DISTORT_NONLINEAR, gamma=rng.uniform(1.05, 1.4), noise_sigma=noise_sigma
            )
        raise InputError(f"unknown distortion family {distortion!r}")

    # Planes are drawn before any distortion so that two calls with the
    # same seed but different distortion families share their geometry.
    planes = tuple(draw_plane() for _ in range(count))
    regions = tuple(RegionSpec(plane, draw_distortion()) for plane in planes)

    if layout == LAYOUT_GRID:
        rows = max(1, int(np.sqrt(count)))
        while count % rows:
            rows -= 1
        spec = SceneSpec(
            height=height,
            width=width,
            layout=LAYOUT_GRID,
            regions=regions,
            seed=seed,
            depth_range=depth_range,
            grid_rows=rows,
            grid_cols=count // rows,
        )
        return spec
    if layout != LAYOUT_VORONOI:
        raise InputError(f"unknown layout {layout!r}")
    # Redraw sites until every region is usable: big enough, and in one
    # piece (digitized voronoi cells can fray into disconnected slivers,
    # which would silently change the effective region count).
    for attempt in range(64):
        spec = SceneSpec(
            height=height,
            width=width,
            layout=LAYOUT_VORONOI,
            regions=regions,
            seed=seed + 100003 * attempt,
            depth_range=depth_range,
            sites=count,
        )
        labels = _layout_labels(spec)
        owned = np.bincount(labels.ravel(), minlength=count)
        if owned.min() < min_region_pixels:
            continue
        if all(ndimage.label(labels == i)[1] == 1 for i in range(count)):
            return spec
    raise InvalidSpec(
        f"could not place {count} connected voronoi cells with >= {min_region_pixels} pixels each"
    )


def scene_to_json(spec: SceneSpec) -> str:
    doc = {
        "format_version": 1,
        "height": spec.height,
        "width": spec.width,
        "layout": spec.layout,
        "grid_rows": spec.grid_rows,
        "grid_cols": spec.grid_cols,
        "sites": spec.sites,
        "seed": spec.seed,
        "depth_range": list(spec.depth_range),
        "regions": [
            {"plane": asdict(r.plane), "distortion": asdict(r.distortion)} for r in spec.regions
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def scene_from_json(text: str) -> SceneSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise InvalidSpec(f"scene spec is not valid JSON: {err}") from err
    try:
        regions = tuple(
            RegionSpec(Plane(**r["plane"]), Distortion(**r["distortion"]))
            for r in doc["regions"]
        )
        return SceneSpec(
            height=int(doc["height"]),
            width=int(doc["width"]),
            layout=doc["layout"],
            regions=regions,
            seed=int(doc["seed"]),
            depth_range=tuple(doc["depth_range"]),
            grid_rows=int(doc.get("grid_rows", 0)),
            grid_cols=int(doc.get("grid_cols", 0)),
            sites=int(doc.get("sites", 0)),
        )
    except (KeyError, TypeError) as err:
        raise InvalidSpec(f"scene spec is missing or mistypes a field: {err}") from err


def save_scene_spec(spec: SceneSpec, path) -> None:
    Path(path).write_text(scene_to_json(spec))


def load_scene_spec(path) -> SceneSpec:
    return scene_from_json(Path(path).read_text())
