"""Train-on-train, count-on-test evaluation over a labelled image corpus."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import numpy as np

from .color import ColorModel, Label, build_lut, train_color_model
from .metrics import ConfusionCounts
from .ppm import read_ppm
from .segment import MIN_BLOB, PatchClassifier, ThresholdPatchClassifier, patch_contains, segment_image
from .synthetic import Annotation, read_labels


class EmptySplit(ValueError):
    pass


def _by_image(labels: list[Annotation], split: str) -> dict[str, list[Annotation]]:
    out = defaultdict(list)
    for a in labels:
        if a.split == split:
            out[a.image].append(a)
    return dict(sorted(out.items()))


def training_pixels(image: np.ndarray, annotations: list[Annotation]):
    """Pixels inside flower circles are flower; everything else is not."""
    h, w = image.shape[:2]
    yy, xx = np.mgrid[0:h, 0:w]
    flower = np.zeros((h, w), bool)
    for a in annotations:
        if a.label == "flower":
            flower |= (xx - a.x) ** 2 + (yy - a.y) ** 2 <= a.r**2
    return image.reshape(-1, 3), flower.reshape(-1)


def train_from_corpus(root, labels: list[Annotation]) -> ColorModel:
    images = _by_image(labels, "train")
    if not images:
        raise EmptySplit("training split is empty")
    px, lab = [], []
    for name, ann in images.items():
        p, l = training_pixels(read_ppm(Path(root) / name), ann)
        px.append(p)
        lab.append(l)
    return train_color_model(np.concatenate(px), np.concatenate(lab))


def evaluate_image(image, annotations, lut, classifier: PatchClassifier, min_blob: int = MIN_BLOB) -> ConfusionCounts:
    """Every patch is one sample, truth = its centroid lies in a flower circle.
    Flowers that no patch lands in count as misses."""
    counts = ConfusionCounts()
    flowers = [a for a in annotations if a.label == "flower"]
    found = [False] * len(flowers)
    for patch in segment_image(image, lut, min_blob):
        hit = [k for k, a in enumerate(flowers) if patch_contains(patch, a.x, a.y, a.r)]
        for k in hit:
            found[k] = True
        counts = counts.add(bool(hit), classifier.classify(patch) is Label.FLOWER)
    return counts + ConfusionCounts(fn=found.count(False))


def evaluate_corpus(root, labels_path=None, classifier: PatchClassifier | None = None, min_blob: int = MIN_BLOB):
    """Returns (model, counts) for a corpus directory holding P6 images and labels.csv."""
    root = Path(root)
    labels = read_labels(labels_path or root / "labels.csv")
    test = _by_image(labels, "test")
    if not test:
        raise EmptySplit("test split is empty")
    model = train_from_corpus(root, labels)
    lut = build_lut(model)
    classifier = classifier or ThresholdPatchClassifier(min_area=min_blob)
    counts = ConfusionCounts()
    for name, ann in test.items():
        counts = counts + evaluate_image(read_ppm(root / name), ann, lut, classifier, min_blob)
    return model, counts
