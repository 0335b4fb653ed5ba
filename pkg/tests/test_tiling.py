import numpy as np
import pytest

from centerhead.geometry import ChpBox
from centerhead.tiling import (
    SliceSpec,
    box_to_global,
    box_to_model,
    make_axis_origins,
    make_slices,
    merge_detections,
    slice_annotations,
)


def test_single_slice_for_small_images():
    slices = make_slices(1024, 1024)
    assert len(slices) == 1
    assert (slices[0].origin_x, slices[0].origin_y) == (0, 0)
    assert len(make_slices(300, 200)) == 1


def test_exact_stride_fit():
    assert make_axis_origins(1844, 1024, 820) == [0, 820]


def test_final_origin_clamped():
    assert make_axis_origins(2000, 1024, 820) == [0, 820, 976]


def test_grid_is_row_major_product():
    slices = make_slices(2000, 1844)
    assert [(s.origin_x, s.origin_y) for s in slices] == [
        (0, 0),
        (820, 0),
        (976, 0),
        (0, 820),
        (820, 820),
        (976, 820),
    ]


def test_coverage_random_sizes():
    rng = np.random.default_rng(0)
    for _ in range(50):
        w = int(rng.integers(100, 5000))
        h = int(rng.integers(100, 5000))
        covered_x = np.zeros(w, dtype=bool)
        covered_y = np.zeros(h, dtype=bool)
        for s in make_slices(w, h):
            covered_x[s.origin_x : s.origin_x + s.slice_size] = True
            covered_y[s.origin_y : s.origin_y + s.slice_size] = True
        assert covered_x.all() and covered_y.all()


def test_spec_validation():
    with pytest.raises(ValueError):
        SliceSpec(-1, 0)
    with pytest.raises(ValueError):
        SliceSpec(0, 0, slice_size=512, model_size=1024)
    with pytest.raises(ValueError):
        make_slices(100, 100, slice_size=1024, stride=2000)


def test_model_mapping_example():
    spec = SliceSpec(820, 0, slice_size=1024, model_size=512)
    model_det = ChpBox(50.0, 50.0, 6.0, 20.0, 50.0, 40.0, class_id=0, score=0.9)
    g = box_to_global(spec, model_det)
    assert (g.cx, g.cy) == (920.0, 100.0)
    assert (g.hx, g.hy) == (920.0, 80.0)
    assert g.w == 12.0 and g.h == 40.0


def test_identity_mapping():
    spec = SliceSpec(0, 0, slice_size=512, model_size=512)
    box = ChpBox(10.0, 20.0, 3.0, 9.0, 10.0, 16.0)
    assert box_to_global(spec, box) == box
    assert box_to_model(spec, box) == box


def test_roundtrip_interior_box():
    spec = SliceSpec(820, 1640, slice_size=1024, model_size=512)
    box = ChpBox(1333.7, 2020.1, 11.3, 77.7, 1311.9, 1990.4, class_id=2, score=0.42)
    back = box_to_global(spec, box_to_model(spec, box))
    for field in ("cx", "cy", "w", "h", "hx", "hy"):
        assert getattr(back, field) == pytest.approx(getattr(box, field), abs=1e-9)


def test_slice_annotations_overlap_duplicates():
    slices = make_slices(1844, 1024)
    assert len(slices) == 2
    # center inside the [820, 1024) overlap band lands on both slices
    box = ChpBox(900.0, 500.0, 10.0, 50.0, 900.0, 475.0, class_id=0, score=1.0)
    per_slice = slice_annotations([box], slices)
    assert [len(p) for p in per_slice] == [1, 1]


def test_merge_dedups_cross_slice_object():
    slices = make_slices(1844, 1024)
    box = ChpBox(900.0, 500.0, 10.0, 50.0, 900.0, 475.0, class_id=0, score=0.9)
    per_slice = list(zip(slices, slice_annotations([box], slices)))
    merged = merge_detections(per_slice, rnms_threshold=0.15)
    assert len(merged) == 1
    assert merged[0].cx == pytest.approx(900.0, abs=1e-9)
    assert merged[0].hy == pytest.approx(475.0, abs=1e-9)


def test_merge_independent_of_slice_order():
    slices = make_slices(2000, 1024)
    boxes = [
        ChpBox(900.0, 500.0, 10.0, 50.0, 900.0, 475.0, class_id=0, score=0.9),
        ChpBox(1500.0, 300.0, 14.0, 60.0, 1500.0, 270.0, class_id=1, score=0.7),
        ChpBox(100.0, 100.0, 8.0, 30.0, 100.0, 85.0, class_id=0, score=0.5),
    ]
    per_slice = list(zip(slices, slice_annotations(boxes, slices)))
    merged = merge_detections(per_slice, 0.15)
    reordered = merge_detections(list(reversed(per_slice)), 0.15)
    key = lambda d: (d.class_id, round(d.cx, 6), round(d.cy, 6))
    assert sorted(map(key, merged)) == sorted(map(key, reordered))
    assert len(merged) == 3
