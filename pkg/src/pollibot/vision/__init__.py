from .color import BINS, LUT_SIZE, ColorModel, Label, MissingClass, apply_lut, build_lut, class_product, classify_rgb, pack_rgb, train_color_model
from .evaluate import EmptySplit, evaluate_corpus, evaluate_image
from .geolocate import CellFlowerMap, CellRecord, StaleObservation, begin_pass, bearing_to_cell, camera_ray, record_pollination, update_cell_map
from .metrics import REPORT_HEADER, ConfusionCounts, metrics, read_counts, report_csv
from .ppm import read_ppm, write_ppm
from .segment import MIN_BLOB, ImagePatch, PatchClassifier, ThresholdPatchClassifier, classify_patch, segment_image
from .synthetic import CorpusSpec, generate_corpus, read_labels

__all__ = [
    "BINS", "LUT_SIZE", "CellFlowerMap", "CellRecord", "ColorModel", "ConfusionCounts", "CorpusSpec",
    "EmptySplit", "ImagePatch", "Label", "MIN_BLOB", "MissingClass", "PatchClassifier", "REPORT_HEADER",
    "StaleObservation", "ThresholdPatchClassifier", "apply_lut", "bearing_to_cell", "begin_pass",
    "build_lut", "camera_ray", "class_product", "classify_patch", "classify_rgb", "evaluate_corpus",
    "evaluate_image", "generate_corpus", "metrics", "pack_rgb", "read_counts", "read_labels", "read_ppm",
    "record_pollination", "report_csv", "segment_image", "train_color_model", "update_cell_map", "write_ppm",
]
