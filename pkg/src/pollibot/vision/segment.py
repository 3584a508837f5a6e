"""Colour segmentation into connected patches and the pluggable patch classifier."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol

import numpy as np
from scipy import ndimage

from .color import Label, apply_lut

MIN_BLOB = 25


@dataclass(frozen=True)
class ImagePatch:
    """One connected flower-coloured component.

    ``bbox`` is (x0, y0, x1, y1) in pixels with exclusive upper ends;
    ``fraction`` is the share of the bounding box covered by the component.
    """

    bbox: tuple[int, int, int, int]
    count: int
    fraction: float
    centroid: tuple[float, float]

    @property
    def width(self) -> int:
        return self.bbox[2] - self.bbox[0]

    @property
    def height(self) -> int:
        return self.bbox[3] - self.bbox[1]


def segment_image(image, lut, min_blob: int = MIN_BLOB) -> list[ImagePatch]:
    """Per-pixel lookup, 4-connected components, small blobs dropped.

    Patches come back ordered by the scanline position of their bounding
    box's top-left corner.
    """
    if min_blob < 1:
        raise ValueError("min_blob must be at least 1")
    mask = apply_lut(lut, image)
    labels, n = ndimage.label(mask)  # default structure is 4-connected in 2D
    if n == 0:
        return []
    counts = np.bincount(labels.ravel(), minlength=n + 1)
    slices = ndimage.find_objects(labels)
    idx = np.arange(1, n + 1)
    cy = ndimage.sum_labels(np.indices(mask.shape)[0], labels, idx)
    cx = ndimage.sum_labels(np.indices(mask.shape)[1], labels, idx)
    patches = []
    for k, sl in enumerate(slices, start=1):
        c = int(counts[k])
        if c < min_blob:
            continue
        y0, y1 = sl[0].start, sl[0].stop
        x0, x1 = sl[1].start, sl[1].stop
        area = (y1 - y0) * (x1 - x0)
        patches.append((y0, x0, k, ImagePatch(
            bbox=(x0, y0, x1, y1),
            count=c,
            fraction=c / area,
            centroid=(float(cx[k - 1] / c), float(cy[k - 1] / c)),
        )))
    patches.sort(key=lambda t: t[:3])
    return [p for *_, p in patches]


class PatchClassifier(Protocol):
    def classify(self, patch: ImagePatch) -> Label: ...


@dataclass(frozen=True)
class ThresholdPatchClassifier:
    """Deterministic stand-in for a learned patch classifier: compact, mid-sized
    blobs are flowers."""

    tau: float = 0.6
    min_area: int = MIN_BLOB
    max_area: float = 5000

    def classify(self, patch: ImagePatch) -> Label:
        ok = patch.fraction >= self.tau and self.min_area <= patch.count <= self.max_area
        return Label.FLOWER if ok else Label.NON_FLOWER


def classify_patch(patch: ImagePatch, classifier: PatchClassifier | None = None) -> Label:
    return (classifier or ThresholdPatchClassifier()).classify(patch)


def patch_contains(patch: ImagePatch, x: float, y: float, r: float) -> bool:
    """Whether the patch centroid falls inside the circle (x, y, r)."""
    return math.hypot(patch.centroid[0] - x, patch.centroid[1] - y) <= r
