"""Naive Bayes pixel classifier over per-channel colour histograms and the
precomputed 24-bit lookup table built from it."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ..errors import PollibotError

BINS = 256
LUT_SIZE = 1 << 24


class MissingClass(PollibotError):
    pass


class Label(enum.IntEnum):
    NON_FLOWER = 0
    FLOWER = 1


@dataclass(frozen=True, eq=False)
class ColorModel:
    """``hist[c, ch, v]`` is P(channel ch = v | class c); ``priors[c]`` is P(c)."""

    hist: np.ndarray
    priors: np.ndarray

    def __post_init__(self):
        hist = np.array(self.hist, dtype=float)
        priors = np.array(self.priors, dtype=float)
        if hist.shape != (2, 3, BINS):
            raise ValueError(f"histograms must have shape (2, 3, {BINS})")
        if priors.shape != (2,) or (priors < 0).any() or abs(priors.sum() - 1.0) > 1e-9:
            raise ValueError("priors must be two non-negative numbers summing to 1")
        if (hist <= 0).any() or np.abs(hist.sum(axis=2) - 1.0).max() > 1e-9:
            raise ValueError("each histogram must be strictly positive and sum to 1")
        hist.setflags(write=False)
        priors.setflags(write=False)
        object.__setattr__(self, "hist", hist)
        object.__setattr__(self, "priors", priors)

    def log_tables(self) -> tuple[np.ndarray, np.ndarray]:
        with np.errstate(divide="ignore"):
            return np.log(self.priors), np.log(self.hist)

    @classmethod
    def uniform(cls, prior_flower: float = 0.5) -> "ColorModel":
        return cls(np.full((2, 3, BINS), 1.0 / BINS), np.array([1.0 - prior_flower, prior_flower]))


def train_color_model(pixels, labels) -> ColorModel:
    """Laplace-smoothed histograms and empirical priors from labelled pixels.

    ``pixels`` is (N, 3) of 8-bit values; ``labels`` is (N,) of 0/1 (or bool),
    1 meaning flower.
    """
    px = np.asarray(pixels).reshape(-1, 3)
    lab = np.asarray(labels).astype(int).reshape(-1)
    if len(px) != len(lab):
        raise ValueError("pixels and labels differ in length")
    if len(px) and (px.min() < 0 or px.max() > 255):
        raise ValueError("pixel values must lie in [0, 255]")
    px = px.astype(np.int64)
    totals = np.array([(lab == c).sum() for c in (0, 1)])
    for c in (0, 1):
        if totals[c] == 0:
            raise MissingClass(f"no {Label(c).name.lower().replace('_', '-')} pixels in the training set")
    hist = np.empty((2, 3, BINS))
    for c in (0, 1):
        sel = px[lab == c]
        for ch in range(3):
            counts = np.bincount(sel[:, ch], minlength=BINS)
            hist[c, ch] = (counts + 1.0) / (totals[c] + BINS)
    return ColorModel(hist, totals / totals.sum())


def _scores(log_prior, log_hist, r, g, b):
    # same association order everywhere so the LUT reproduces classify_rgb bit for bit
    return ((log_prior + log_hist[:, 0, r]) + log_hist[:, 1, g]) + log_hist[:, 2, b]


def classify_rgb(model: ColorModel, r: int, g: int, b: int) -> Label:
    """argmax_c P(c) P(r|c) P(g|c) P(b|c), evaluated as log sums; ties go to non-flower."""
    for v in (r, g, b):
        if not 0 <= int(v) <= 255:
            raise ValueError("channel values must lie in [0, 255]")
    lp, lh = model.log_tables()
    s = _scores(lp, lh, int(r), int(g), int(b))
    return Label.FLOWER if s[1] > s[0] else Label.NON_FLOWER


def class_product(model: ColorModel, r: int, g: int, b: int) -> np.ndarray:
    """The unnormalised posterior P(c) P(r|c) P(g|c) P(b|c) for both classes."""
    h = model.hist
    return model.priors * h[:, 0, r] * h[:, 1, g] * h[:, 2, b]


def pack_rgb(r, g, b):
    return (np.asarray(r, np.uint32) << 16) | (np.asarray(g, np.uint32) << 8) | np.asarray(b, np.uint32)


def build_lut(model: ColorModel) -> np.ndarray:
    """uint8 table of 2**24 labels indexed by ``pack_rgb``."""
    lp, lh = model.log_tables()
    lut = np.empty((BINS, BINS, BINS), dtype=np.uint8)
    g = lh[:, 1, :, None]
    b = lh[:, 2, None, :]
    for r in range(BINS):
        s = ((lp + lh[:, 0, r])[:, None, None] + g) + b
        lut[r] = s[1] > s[0]
    lut = lut.reshape(-1)
    lut.setflags(write=False)
    return lut


def apply_lut(lut: np.ndarray, image) -> np.ndarray:
    """Boolean flower mask of an (H, W, 3) uint8 image."""
    img = np.asarray(image)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError("image must be (H, W, 3)")
    if img.dtype != np.uint8:
        raise ValueError("image channels must be 8-bit")
    return lut[pack_rgb(img[..., 0], img[..., 1], img[..., 2])].astype(bool)

