import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from pollibot.geometry import Pose2
from pollibot.vision import (
    LUT_SIZE, CellFlowerMap, ColorModel, ConfusionCounts, CorpusSpec, EmptySplit, ImagePatch, Label,
    MissingClass, StaleObservation, ThresholdPatchClassifier, apply_lut, begin_pass, bearing_to_cell,
    build_lut, class_product, classify_patch, classify_rgb, evaluate_corpus, generate_corpus, metrics,
    pack_rgb, read_counts, read_labels, read_ppm, report_csv, segment_image, train_color_model,
    update_cell_map, write_ppm,
)
from pollibot.world import CameraSpec, GridCellRef, PlantRow, Side, build_world, simulate_cluster_detections

from conftest import flower, one_row_config

RED, GREEN = (255, 0, 0), (0, 255, 0)


def red_green_model(n=100):
    px = np.array([RED] * n + [GREEN] * n)
    return train_color_model(px, [1] * n + [0] * n)


RG_LUT = build_lut(red_green_model())


@pytest.fixture
def rg_lut():
    return RG_LUT


# -- training ----------------------------------------------------------------


def test_laplace_histograms():
    m = red_green_model()
    assert m.hist[1, 0, 255] == pytest.approx(101 / 356, abs=1e-15)
    assert m.hist[0, 0, 255] == pytest.approx(1 / 356, abs=1e-15)
    assert np.abs(m.hist.sum(axis=2) - 1).max() < 1e-9
    assert (m.hist > 0).all()


def test_equal_priors():
    assert red_green_model().priors == pytest.approx([0.5, 0.5])


def test_unbalanced_priors():
    m = train_color_model(np.array([RED] * 3 + [GREEN]), [1, 1, 1, 0])
    assert m.priors == pytest.approx([0.25, 0.75])


def test_missing_class():
    with pytest.raises(MissingClass):
        train_color_model(np.array([RED] * 5), [1] * 5)


# -- classification ----------------------------------------------------------


def test_tie_is_non_flower():
    assert classify_rgb(ColorModel.uniform(), 10, 200, 30) is Label.NON_FLOWER


def test_zero_flower_prior():
    m = red_green_model()
    m0 = ColorModel(m.hist, np.array([1.0, 0.0]))
    for rgb in (RED, GREEN, (255, 30, 40)):
        assert classify_rgb(m0, *rgb) is Label.NON_FLOWER


def test_toy_pixel_by_hand():
    m = red_green_model()
    # flower: 0.5 * 101/356 * 1/356 * 1/356; non-flower: 0.5 * 1/356 * 1/356 * 1/356
    p = class_product(m, 255, 30, 40)
    assert p[1] == pytest.approx(0.5 * 101 / 356**3)
    assert p[0] == pytest.approx(0.5 / 356**3)
    assert classify_rgb(m, 255, 30, 40) is Label.FLOWER


def test_channel_range_checked():
    with pytest.raises(ValueError):
        classify_rgb(red_green_model(), 256, 0, 0)


# -- LUT ---------------------------------------------------------------------


def test_lut_size(rg_lut):
    assert len(rg_lut) == LUT_SIZE == 16_777_216 and rg_lut.dtype == np.uint8


def test_uniform_lut_constant():
    assert not build_lut(ColorModel.uniform()).any()


def test_lut_agrees_with_direct_rule(rg_lut, rng):
    m = red_green_model()
    rgb = rng.integers(0, 256, size=(10_000, 3))
    direct = np.array([classify_rgb(m, *c) for c in rgb])
    assert (rg_lut[pack_rgb(*rgb.T)] == direct).all()


@settings(max_examples=200)
@given(st.lists(st.tuples(st.integers(0, 255), st.integers(0, 255), st.integers(0, 255), st.booleans()), min_size=2, max_size=30),
       st.tuples(st.integers(0, 255), st.integers(0, 255), st.integers(0, 255)))
def test_log_sum_equals_product_argmax(samples, pixel):
    labels = [s[3] for s in samples]
    assume(any(labels) and not all(labels))
    m = train_color_model(np.array([s[:3] for s in samples]), labels)
    p = class_product(m, *pixel)
    expected = Label.FLOWER if p[1] > p[0] else Label.NON_FLOWER
    if not math.isclose(p[0], p[1], rel_tol=1e-12):
        assert classify_rgb(m, *pixel) is expected


# -- segmentation ------------------------------------------------------------


def blank(h=40, w=40):
    img = np.zeros((h, w, 3), np.uint8)
    img[...] = GREEN
    return img


def test_background_has_no_patches(rg_lut):
    assert segment_image(blank(), rg_lut) == []


def test_single_square(rg_lut):
    img = blank()
    img[5:15, 8:18] = RED
    (p,) = segment_image(img, rg_lut)
    assert (p.width, p.height, p.count, p.fraction) == (10, 10, 100, 1.0)
    assert p.bbox == (8, 5, 18, 15)
    assert p.centroid == pytest.approx((12.5, 9.5))


def test_two_squares_split_by_one_row(rg_lut):
    img = blank()
    img[5:15, 5:15] = RED
    img[16:26, 5:15] = RED
    assert len(segment_image(img, rg_lut)) == 2


def test_diagonal_touch_is_not_connected(rg_lut):
    img = blank()
    img[0:10, 0:10] = RED
    img[10:20, 10:20] = RED
    assert len(segment_image(img, rg_lut)) == 2


def test_min_blob_filters(rg_lut):
    img = blank()
    img[0:4, 0:6] = RED  # 24 px
    img[20:25, 20:25] = RED  # 25 px
    assert [p.count for p in segment_image(img, rg_lut)] == [25]


def flood_components(mask):
    """Independent 4-connected labelling by explicit flood fill."""
    seen = np.zeros_like(mask, bool)
    comps = []
    h, w = mask.shape
    for y in range(h):
        for x in range(w):
            if mask[y, x] and not seen[y, x]:
                stack, pix = [(y, x)], []
                seen[y, x] = True
                while stack:
                    cy, cx = stack.pop()
                    pix.append((cy, cx))
                    for ny, nx in ((cy + 1, cx), (cy - 1, cx), (cy, cx + 1), (cy, cx - 1)):
                        if 0 <= ny < h and 0 <= nx < w and mask[ny, nx] and not seen[ny, nx]:
                            seen[ny, nx] = True
                            stack.append((ny, nx))
                comps.append(pix)
    return comps


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_segmentation_matches_flood_fill(seed):
    rng = np.random.default_rng(seed)
    mask = rng.random((24, 24)) < 0.45
    img = blank(24, 24)
    img[mask] = RED
    patches = segment_image(img, RG_LUT, min_blob=3)
    comps = [c for c in flood_components(mask) if len(c) >= 3]
    assert sorted(p.count for p in patches) == sorted(len(c) for c in comps)
    # scanline order of bbox top-left
    keys = [(p.bbox[1], p.bbox[0]) for p in patches]
    assert keys == sorted(keys)


def test_segmentation_deterministic(rg_lut, rng):
    img = blank()
    img[rng.random((40, 40)) < 0.5] = RED
    assert segment_image(img, rg_lut, 2) == segment_image(img.copy(), rg_lut, 2)


def test_apply_lut_requires_uint8(rg_lut):
    with pytest.raises(ValueError):
        apply_lut(rg_lut, blank().astype(np.int32))


# -- patch classifier --------------------------------------------------------


def patch(fraction, count=100):
    return ImagePatch((0, 0, 10, 10), count, fraction, (5.0, 5.0))


@pytest.mark.parametrize("fraction,label", [(1.0, Label.FLOWER), (0.2, Label.NON_FLOWER), (0.6, Label.FLOWER)])
def test_patch_stub(fraction, label):
    assert classify_patch(patch(fraction)) is label


def test_patch_area_bounds():
    c = ThresholdPatchClassifier(min_area=25, max_area=5000)
    assert c.classify(patch(1.0, 24)) is Label.NON_FLOWER
    assert c.classify(patch(1.0, 5001)) is Label.NON_FLOWER
    assert c.classify(patch(1.0, 5000)) is Label.FLOWER


# -- metrics -----------------------------------------------------------------


def test_class_total_counts():
    c = ConfusionCounts.from_class_totals(2102, 1892, 2124, 1609)
    assert (c.tp, c.fn, c.tn, c.fp) == (1892, 210, 1609, 515)
    m = metrics(c)
    assert abs(100 * m["recall"] - 90.0) <= 0.05
    assert m["precision"] == 1892 / 2407
    assert round(100 * m["precision"], 2) == 78.60


def test_degenerate_metrics():
    assert metrics(ConfusionCounts()) == {"precision": 0.0, "recall": 0.0}


def test_report_round_trip():
    c = ConfusionCounts(1892, 515, 1609, 210)
    text = report_csv(c)
    assert text.splitlines()[0] == "tp,fp,tn,fn,precision,recall"
    assert text.splitlines()[1] == "1892,515,1609,210,0.786041,0.900095"
    assert read_counts(text) == c
    with pytest.raises(ValueError):
        read_counts("a,b\n1,2\n")
    with pytest.raises(ValueError):
        ConfusionCounts(tp=-1)


# -- geolocation -------------------------------------------------------------


def test_ray_perpendicular_hits_cell_two():
    row = PlantRow("A", start=(0.0, 0.0))
    cam = Pose2(2.5 * 0.688, 1.5, -math.pi / 2)
    assert bearing_to_cell(cam, (1.0, 0.0, 0.0), [row], 3.0) == GridCellRef("A", Side.LEFT, 2)


def test_ray_away_misses():
    row = PlantRow("A", start=(0.0, 0.0))
    assert bearing_to_cell(Pose2(1.0, 1.5, math.pi / 2), (1.0, 0.0, 0.0), [row], 3.0) is None


def test_ray_crossing_two_rows_picks_nearer():
    near, far = PlantRow("N", start=(0.0, 0.0)), PlantRow("F", start=(0.0, -1.5))
    cam = Pose2(1.0, 1.0, -math.pi / 2)
    assert bearing_to_cell(cam, (1.0, 0.0, 0.0), [far, near], 5.0) == GridCellRef("N", Side.LEFT, 1)


def test_ray_beyond_range():
    row = PlantRow("A", start=(0.0, 0.0))
    cam = Pose2(1.0, 3.0, -math.pi / 2)
    assert bearing_to_cell(cam, (1.0, 0.0, 0.0), [row], 2.5) is None


def test_bearing_must_be_unit():
    with pytest.raises(ValueError):
        bearing_to_cell(Pose2(), (2.0, 0.0, 0.0), [], 1.0)


@settings(max_examples=60, deadline=None)
@given(
    st.sampled_from(list(Side)), st.floats(0.01, 3.43), st.floats(0.3, 0.9),
    st.floats(0.6, 5.4), st.floats(-0.6, 0.6),
)
def test_geolocation_soundness(side, arc, height, x, dy):
    assume(abs(arc / 0.688 - round(arc / 0.688)) > 1e-6)
    cfg = one_row_config([flower("f", side, arc, height=height)])
    w = build_world(cfg)
    f = w.flower("f")
    # stand in the corridor on the flower's side
    y = 2.0 + side.sign * 1.3 + dy * 0.5
    heading = math.atan2(f.position[1] - y, f.position[0] - x)
    cam = CameraSpec(detect_prob=1.0, sigma_bearing=0.0, false_positive_rate=0.0, reliable_range=2.5, fov=3.0)
    pose = Pose2(x, y, heading)
    events = simulate_cluster_detections(w, pose, cam, np.random.default_rng(0))
    assume(events)
    assert bearing_to_cell(pose, events[0].bearing, w.rows, cam.reliable_range + 1e-9) == f.cell


# -- cell map ----------------------------------------------------------------


CELL = GridCellRef("A", Side.LEFT, 0)


def test_cell_map_max_rule():
    m = update_cell_map(update_cell_map(CellFlowerMap(), CELL, 3, 1.0), CELL, 4, 2.0)
    assert m.get(CELL).count == 4
    m = update_cell_map(update_cell_map(CellFlowerMap(), CELL, 4, 1.0), CELL, 3, 2.0)
    assert m.get(CELL).count == 4


def test_cell_map_new_pass():
    m = update_cell_map(CellFlowerMap(), CELL, 5, 1.0)
    m = update_cell_map(begin_pass(m), CELL, 2, 3.0)
    assert m.get(CELL).count == 2 and m.pass_id == 1


def test_cell_map_stale():
    m = update_cell_map(CellFlowerMap(), CELL, 1, 5.0)
    with pytest.raises(StaleObservation):
        update_cell_map(m, CELL, 1, 4.0)


# -- corpus ------------------------------------------------------------------


def test_ppm_round_trip(tmp_path, rng):
    img = rng.integers(0, 256, size=(7, 5, 3), dtype=np.uint8)
    write_ppm(tmp_path / "a.ppm", img)
    assert (read_ppm(tmp_path / "a.ppm") == img).all()


def test_corpus_evaluation(tmp_path):
    labels = generate_corpus(tmp_path, CorpusSpec(n_images=6), seed=3)
    back = read_labels(tmp_path / "labels.csv")
    assert [(a.image, a.split, a.label) for a in back] == [(a.image, a.split, a.label) for a in labels]
    assert np.allclose([(a.x, a.y, a.r) for a in back], [(a.x, a.y, a.r) for a in labels], atol=5e-4)
    _, counts = evaluate_corpus(tmp_path)
    m = metrics(counts)
    assert counts.tp + counts.fn > 0
    assert m["recall"] > 0.5 and m["precision"] > 0.5


def test_corpus_without_test_split(tmp_path):
    generate_corpus(tmp_path, CorpusSpec(n_images=2, train_fraction=1.0), seed=1)
    with pytest.raises(EmptySplit):
        evaluate_corpus(tmp_path)
