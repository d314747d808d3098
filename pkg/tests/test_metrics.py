import random

import pytest
from hypothesis import given, strategies as st

from oracles import si_exact
from quadevent.metrics import (
    NoDetections,
    NoTruthEvents,
    TruthEvent,
    ZeroPostCount,
    evaluate,
    match_events,
    precision,
    recall,
    strength_index,
)
from quadevent.model import BoundingBox, Event, GeoPoint


@pytest.mark.parametrize(
    "c, counts, si",
    [
        (18, [13, 13, 13, 11, 3], 2.94),
        (35, [6, 4, 4, 3, 3], 0.57),
        (94, [41, 28, 14, 11, 10], 1.11),
    ],
)
def test_strength_index_reported_values(c, counts, si):
    assert strength_index(c, counts) == pytest.approx(float(si_exact(c, counts)), rel=1e-15)
    assert abs(strength_index(c, counts) - si) <= 0.005


def test_strength_index_zero_counts():
    assert strength_index(10, [0, 0, 0]) == 0.0
    assert strength_index(10, []) == 0.0
    with pytest.raises(ZeroPostCount):
        strength_index(0, [1])


@given(st.integers(1, 50), st.lists(st.integers(0, 50), max_size=5))
def test_strength_index_bounds(c, counts):
    counts = [min(x, c) for x in counts]
    si = strength_index(c, counts)
    assert 0 <= si <= 5
    assert (si == len(counts)) == all(x == c for x in counts)


def test_precision_examples():
    assert precision(40, 5) == pytest.approx(0.889, abs=5e-4)
    assert precision(7, 0) == 1.0
    assert precision(9, 11) == pytest.approx(0.45)
    with pytest.raises(NoDetections):
        precision(0, 0)


def test_recall_examples():
    assert recall(10, 5) == pytest.approx(0.667, abs=5e-4)
    assert recall(3, 0) == 1.0
    assert recall(4, 11) == pytest.approx(0.267, abs=5e-4)
    with pytest.raises(NoTruthEvents):
        recall(0, 0)


@given(st.integers(1, 100), st.integers(0, 100), st.integers(0, 100))
def test_metrics_scale_free(tp, fp, fn):
    assert precision(2 * tp, 2 * fp) == pytest.approx(precision(tp, fp))
    assert recall(2 * tp, 2 * fn) == pytest.approx(recall(tp, fn))


def det(box, start, end, signal=0.5, path="0"):
    return Event(path, BoundingBox(*box), start, end, end - start, (), 3, signal)


def truth(tid, lat, lon, start, end):
    return TruthEvent(tid, GeoPoint(lat, lon), start, end)


def test_empty_lists():
    assert match_events([], [])[:3] == (0, 0, 0)


def test_one_exact_match():
    assert match_events([det((0, 0, 1, 1), 0, 3600)], [truth("g", 0.5, 0.5, 0, 3600)])[:3] == (1, 0, 0)


def test_duplicate_detection_is_false_positive():
    d = [det((0, 0, 1, 1), 0, 3600, 0.9), det((0, 0, 2, 2), 600, 4200, 0.5)]
    tp, fp, fn, matching = match_events(d, [truth("g", 0.5, 0.5, 0, 3600)])
    assert (tp, fp, fn) == (1, 1, 0)
    assert matching == [(0, "g")]


def test_match_requires_space_and_time():
    g = [truth("g", 0.5, 0.5, 0, 3600)]
    assert match_events([det((0, 0, 1, 1), 3600, 7200)], g)[:3] == (0, 1, 1)
    assert match_events([det((0.6, 0.6, 1, 1), 0, 3600)], g)[:3] == (0, 1, 1)
    # epicenter on the box edge counts as inside
    assert match_events([det((0.5, 0.5, 1, 1), 0, 3600)], g)[:3] == (1, 0, 0)


def test_matching_independent_of_truth_order():
    rng = random.Random(4)
    ds = [det((0, 0, 1 + i % 3, 1 + i % 2), 600 * i, 600 * i + 3600, rng.random(), str(i)) for i in range(12)]
    gs = [truth(f"g{i}", rng.uniform(0, 2), rng.uniform(0, 2), 500 * i, 500 * i + 3000) for i in range(10)]
    ref = match_events(ds, gs)
    for _ in range(10):
        rng.shuffle(gs)
        assert match_events(ds, gs) == ref


def test_evaluate_reports_undefined_as_none():
    r = evaluate([], [truth("g", 0.5, 0.5, 0, 60)])
    assert (r.tp, r.fn, r.precision, r.recall) == (0, 1, None, 0.0)
    r = evaluate([det((0, 0, 1, 1), 0, 60)], [truth("g", 0.5, 0.5, 0, 60)])
    assert (r.precision, r.recall) == (1.0, 1.0)


def test_truth_span_validated():
    with pytest.raises(ValueError):
        truth("g", 0, 0, 10, 10)
