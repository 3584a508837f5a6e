"""Procedural image corpus: flower discs and flower-coloured distractors on a
foliage texture, with a circle label file."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ppm import write_ppm

LABEL_HEADER = ("image", "split", "x", "y", "r", "label")


@dataclass(frozen=True)
class CorpusSpec:
    n_images: int = 20
    width: int = 160
    height: int = 120
    flowers_per_image: tuple[int, int] = (3, 7)
    distractors_per_image: tuple[int, int] = (1, 4)
    radius: tuple[float, float] = (4.0, 9.0)
    train_fraction: float = 0.5


@dataclass(frozen=True)
class Annotation:
    image: str
    split: str
    x: float
    y: float
    r: float
    label: str  # "flower" or "non-flower"


def _flower_rgb(rng, n):
    return np.column_stack([
        rng.integers(225, 256, n), rng.integers(195, 245, n), rng.integers(10, 90, n),
    ])


def _foliage(rng, h, w):
    base = np.array([60, 130, 45], float)
    noise = rng.normal(0.0, 18.0, (h, w, 3))
    yy, xx = np.mgrid[0:h, 0:w]
    shade = 25.0 * np.sin(xx / 9.0 + rng.uniform(0, 6)) * np.cos(yy / 13.0 + rng.uniform(0, 6))
    img = base + noise + shade[..., None] * np.array([0.4, 1.0, 0.3])
    return np.clip(img, 0, 255)


def render_image(rng: np.random.Generator, spec: CorpusSpec):
    """One image plus its annotations as (x, y, r, label) tuples."""
    h, w = spec.height, spec.width
    img = _foliage(rng, h, w)
    yy, xx = np.mgrid[0:h, 0:w]
    ann = []
    for _ in range(int(rng.integers(spec.flowers_per_image[0], spec.flowers_per_image[1] + 1))):
        r = rng.uniform(*spec.radius)
        cx, cy = rng.uniform(r + 1, w - r - 1), rng.uniform(r + 1, h - r - 1)
        inside = (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r
        img[inside] = _flower_rgb(rng, int(inside.sum()))
        ann.append((cx, cy, r, "flower"))
    for _ in range(int(rng.integers(spec.distractors_per_image[0], spec.distractors_per_image[1] + 1))):
        kind = rng.integers(0, 3)
        if kind == 0:
            # thin diagonal stem-like streak: low fill of its bounding box
            x0, y0 = rng.uniform(5, w - 45), rng.uniform(5, h - 45)
            ln = rng.uniform(25, 40)
            t = np.linspace(0.0, 1.0, int(ln * 3))
            px = np.round(x0 + t * ln).astype(int)
            py = np.round(y0 + t * ln * rng.uniform(0.6, 1.0)).astype(int)
            for dx in (0, 1):
                img[py, np.clip(px + dx, 0, w - 1)] = _flower_rgb(rng, len(px))
            cx, cy, r = x0 + ln / 2, float(py.mean()), ln / 2
        elif kind == 1:
            # ring: hollow outline
            r = rng.uniform(8, 12)
            cx, cy = rng.uniform(r + 1, w - r - 1), rng.uniform(r + 1, h - r - 1)
            d2 = (xx - cx) ** 2 + (yy - cy) ** 2
            ring = (d2 <= r * r) & (d2 >= (r - 2) ** 2)
            img[ring] = _flower_rgb(rng, int(ring.sum()))
        else:
            # pale-green small blob, half the time inside flower colour range
            r = rng.uniform(3, 6)
            cx, cy = rng.uniform(r + 1, w - r - 1), rng.uniform(r + 1, h - r - 1)
            inside = (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r
            col = np.column_stack([
                rng.integers(150, 240, int(inside.sum())),
                rng.integers(190, 240, int(inside.sum())),
                rng.integers(40, 110, int(inside.sum())),
            ])
            img[inside] = col
        ann.append((float(cx), float(cy), float(r), "non-flower"))
    return np.clip(np.round(img), 0, 255).astype(np.uint8), ann


def generate_corpus(out_dir, spec: CorpusSpec = CorpusSpec(), seed: int = 0) -> list[Annotation]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    n_train = int(math.floor(spec.n_images * spec.train_fraction))
    labels = []
    for k in range(spec.n_images):
        name = f"img_{k:04d}.ppm"
        split = "train" if k < n_train else "test"
        img, ann = render_image(rng, spec)
        write_ppm(out / name, img)
        labels.extend(Annotation(name, split, x, y, r, lab) for x, y, r, lab in ann)
    write_labels(out / "labels.csv", labels)
    return labels


def write_labels(path, labels) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LABEL_HEADER)
        for a in labels:
            w.writerow([a.image, a.split, f"{a.x:.3f}", f"{a.y:.3f}", f"{a.r:.3f}", a.label])


def read_labels(path) -> list[Annotation]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != LABEL_HEADER:
            raise ValueError(f"{path}: expected header {','.join(LABEL_HEADER)}")
        out = []
        for i, row in enumerate(reader, start=2):
            try:
                a = Annotation(row["image"], row["split"], float(row["x"]), float(row["y"]), float(row["r"]), row["label"])
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{i}: malformed row") from exc
            if a.split not in ("train", "test") or a.label not in ("flower", "non-flower") or a.r <= 0:
                raise ValueError(f"{path}:{i}: bad split, label or radius")
            out.append(a)
    return out
