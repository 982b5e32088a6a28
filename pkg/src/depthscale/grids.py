"""Dense depth grids, label grids, and sparse depth samples.

Conventions shared by the whole package:

- Row-major indexing with the origin at the top-left pixel.
- Invalid pixels are tracked with an explicit boolean mask rather than
  a sentinel value; file loaders map stored zeros to ``valid=False``.
- Arrays are copied on construction and marked read-only, so every
  instance is immutable and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DuplicateSample, InputError, OutOfBounds


def _readonly(arr, dtype) -> np.ndarray:
    out = np.array(arr, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class DepthGrid:
    """H x W depth values plus a per-pixel validity mask.

    Values are meters for metric and ground-truth grids (strictly
    positive at valid pixels there) and unitless for relative or
    normalized grids. Values at invalid pixels carry no meaning.
    """

    values: np.ndarray
    valid: np.ndarray | None = None

    def __post_init__(self):
        values = _readonly(self.values, np.float64)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise InputError(f"depth grid must be 2-D and non-empty, got shape {values.shape}")
        if self.valid is None:
            valid = _readonly(np.ones(values.shape, dtype=bool), bool)
        else:
            valid = _readonly(self.valid, bool)
            if valid.shape != values.shape:
                raise InputError(f"validity mask shape {valid.shape} != values shape {values.shape}")
        if not np.isfinite(values[valid]).all():
            raise InputError("non-finite depth value at a valid pixel")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "valid", valid)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def n_valid(self) -> int:
        return int(self.valid.sum())

    def valid_values(self) -> np.ndarray:
        """Values at valid pixels, flattened in row-major order."""
        return self.values[self.valid]


@dataclass(frozen=True, eq=False)
class LabelGrid:
    """H x W grid of non-negative region labels (a segmentation mask)."""

    labels: np.ndarray

    def __post_init__(self):
        labels = _readonly(self.labels, np.int32)
        if labels.ndim != 2 or labels.shape[0] < 1 or labels.shape[1] < 1:
            raise InputError(f"label grid must be 2-D and non-empty, got shape {labels.shape}")
        if labels.min() < 0:
            raise InputError("region labels must be non-negative")
        object.__setattr__(self, "labels", labels)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape

    def is_canonical(self) -> bool:
        """True when the label set is exactly {0 .. max}."""
        present = np.unique(self.labels)
        return bool(present.size == self.labels.max() + 1)


@dataclass(frozen=True, eq=False)
class SparseSamples:
    """Sparse (row, col, depth) measurements in meters.

    Depths are strictly positive and finite; each pixel appears at most
    once. Bounds against a particular grid are checked where the samples
    are consumed.
    """

    rows: np.ndarray
    cols: np.ndarray
    depths: np.ndarray

    def __post_init__(self):
        rows = _readonly(self.rows, np.int64)
        cols = _readonly(self.cols, np.int64)
        depths = _readonly(self.depths, np.float64)
        if not (rows.ndim == cols.ndim == depths.ndim == 1):
            raise InputError("sample arrays must be one-dimensional")
        if not (rows.size == cols.size == depths.size):
            raise InputError("sample arrays must have equal length")
        if rows.size:
            if rows.min() < 0 or cols.min() < 0:
                raise InputError("sample coordinates must be non-negative")
            if not np.isfinite(depths).all() or depths.min() <= 0:
                raise InputError("sample depths must be finite and strictly positive")
            key = np.stack([rows, cols], axis=1)
            if np.unique(key, axis=0).shape[0] != rows.size:
                raise DuplicateSample("duplicate (row, col) in sparse samples")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "depths", depths)

    @classmethod
    def from_points(cls, points) -> "SparseSamples":
        """Build from an iterable of (row, col, depth) triples."""
        pts = list(points)
        if not pts:
            empty = np.empty(0)
            return cls(empty.astype(np.int64), empty.astype(np.int64), empty)
        rows, cols, depths = zip(*pts)
        return cls(np.asarray(rows), np.asarray(cols), np.asarray(depths))

    @property
    def points(self) -> list[tuple[int, int, float]]:
        return [(int(r), int(c), float(d)) for r, c, d in zip(self.rows, self.cols, self.depths)]

    def __len__(self) -> int:
        return int(self.rows.size)


def canonicalize_labels(mask: LabelGrid) -> LabelGrid:
    """Remap labels to {0 .. R-1} by order of first appearance.

    The scan is row-major, so the region containing the top-left pixel
    becomes label 0. Idempotent.
    """
    flat = mask.labels.ravel()
    _, first, inverse = np.unique(flat, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty(order.size, dtype=np.int32)
    rank[order] = np.arange(order.size, dtype=np.int32)
    return LabelGrid(rank[inverse].reshape(mask.labels.shape))


def samples_to_grid(samples: SparseSamples, height: int, width: int) -> DepthGrid:
    """Scatter sparse samples into a grid, valid exactly at sample pixels."""
    if len(samples) and (samples.rows.max() >= height or samples.cols.max() >= width):
        raise OutOfBounds(f"sample coordinates exceed grid shape ({height}, {width})")
    values = np.zeros((height, width), dtype=np.float64)
    valid = np.zeros((height, width), dtype=bool)
    values[samples.rows, samples.cols] = samples.depths
    valid[samples.rows, samples.cols] = True
    return DepthGrid(values, valid)


def grid_to_samples(grid: DepthGrid) -> SparseSamples:
    """Gather valid pixels into sparse samples, row-major order."""
    rows, cols = np.nonzero(grid.valid)
    return SparseSamples(rows, cols, grid.values[rows, cols])
