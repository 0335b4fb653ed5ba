import numpy as np
import pytest

from centerhead.geometry import ChpBox
from centerhead.size_prior import (
    ClassLengthTable,
    gaussian_tail_quadrature,
    refine_scores,
    size_prior_probability,
)


def test_on_prior_length_is_certain():
    assert size_prior_probability(172.8, 172.8, 0.2) == 1.0


def test_tail_values():
    # frozen from trapezoid quadrature of the standard normal tail
    assert size_prior_probability(120.0, 100.0, 0.2) == pytest.approx(0.31731, abs=1e-3)
    assert size_prior_probability(160.0, 100.0, 0.2) == pytest.approx(0.00270, abs=1e-4)


def test_matches_quadrature_over_range():
    for z in np.linspace(0.0, 6.0, 61):
        closed = size_prior_probability(100.0 + z * 20.0, 100.0, 0.2)
        assert closed == pytest.approx(gaussian_tail_quadrature(z), abs=1e-6)


def test_symmetric_and_decreasing():
    mean = 80.0
    for dev in (5.0, 12.0, 30.0):
        lo = size_prior_probability(mean - dev, mean, 0.2)
        hi = size_prior_probability(mean + dev, mean, 0.2)
        assert lo == pytest.approx(hi, abs=1e-12)
    probs = [size_prior_probability(mean + d, mean, 0.2) for d in (0, 4, 9, 18, 40)]
    assert probs == sorted(probs, reverse=True)
    assert all(0.0 < p <= 1.0 for p in probs)


def test_monotone_in_coefficient():
    p_small = size_prior_probability(130.0, 100.0, 0.1)
    p_big = size_prior_probability(130.0, 100.0, 0.5)
    assert p_big > p_small


def test_refine_on_prior_unchanged():
    table = ClassLengthTable(("a",), (100.0,), coeff=0.2, gsd=1.0)
    det = ChpBox(50, 50, 10, 100.0, 50, 0, class_id=0, score=0.9)
    assert refine_scores([det], table)[0].score == pytest.approx(0.9)


def test_refine_one_sigma_deviation():
    table = ClassLengthTable(("a",), (100.0,), coeff=0.2, gsd=1.0)
    det = ChpBox(100, 100, 10, 120.0, 100, 40, class_id=0, score=0.9)
    assert refine_scores([det], table)[0].score == pytest.approx(0.9 * 0.31731, abs=1e-4)


def test_refine_huge_coefficient_is_noop():
    table = ClassLengthTable(("a",), (100.0,), coeff=1e6, gsd=1.0)
    det = ChpBox(100, 100, 10, 150.0, 100, 25, class_id=0, score=0.8)
    assert refine_scores([det], table)[0].score == pytest.approx(0.8, abs=1e-6)


def test_refine_unknown_class():
    table = ClassLengthTable(("a",), (100.0,), coeff=0.2)
    det = ChpBox(100, 100, 10, 150.0, 100, 25, class_id=3, score=0.8)
    with pytest.raises(KeyError, match="3"):
        refine_scores([det], table)


def test_refine_never_increases_and_preserves_geometry():
    rng = np.random.default_rng(0)
    table = ClassLengthTable(("a", "b"), (60.0, 170.0), coeff=0.2, gsd=1.0)
    dets = [
        ChpBox(
            100.0,
            100.0,
            10.0,
            float(rng.uniform(20, 300)),
            100.0,
            25.0,
            class_id=int(rng.integers(0, 2)),
            score=float(rng.uniform(0, 1)),
        )
        for _ in range(500)
    ]
    refined = refine_scores(dets, table)
    for before, after in zip(dets, refined):
        assert after.score <= before.score
        assert (after.cx, after.cy, after.w, after.h, after.hx, after.hy) == (
            before.cx,
            before.cy,
            before.w,
            before.h,
            before.hx,
            before.hy,
        )


def test_table_validation():
    with pytest.raises(ValueError):
        ClassLengthTable(("a",), (0.0,))
    with pytest.raises(ValueError):
        ClassLengthTable(("a", "a"), (10.0, 20.0))
    with pytest.raises(ValueError):
        ClassLengthTable(("a",), (10.0,), coeff=0.0)
    table = ClassLengthTable(("x", "y"), (10.0, 20.0))
    assert table.id_of("y") == 1
    with pytest.raises(KeyError):
        table.id_of("z")
