import pytest
from hypothesis import given, strategies as st

from quadevent.model import (
    BoundingBox,
    DegenerateBox,
    EmptyId,
    Event,
    GeoPoint,
    Interval,
    NegativeTimestamp,
    OutOfRangeCoordinate,
    Post,
    validate_post,
)


def test_boundary_legal_post_is_valid():
    p = validate_post({"id": "a", "ts": 0, "lat": 0, "lon": 0, "entities": []})
    assert p == Post("a", 0, 0.0, 0.0, ())


@pytest.mark.parametrize(
    "raw, err",
    [
        ({"id": "a", "ts": 0, "lat": 91, "lon": 0}, OutOfRangeCoordinate),
        ({"id": "a", "ts": 0, "lat": 0, "lon": -180.5}, OutOfRangeCoordinate),
        ({"id": "a", "ts": -1, "lat": 0, "lon": 0}, NegativeTimestamp),
        ({"id": "", "ts": 0, "lat": 0, "lon": 0}, EmptyId),
    ],
)
def test_invalid_posts_raise_typed_errors(raw, err):
    with pytest.raises(err):
        validate_post(raw)


def test_entities_lowercased_then_deduplicated():
    p = validate_post({"id": "a", "ts": 0, "lat": 0, "lon": 0, "entities": ["#X", "#x"]})
    assert p.entities == ("#x",)


def test_extreme_coordinates_accepted():
    for lat, lon in [(90, 180), (-90, -180)]:
        assert validate_post({"id": "a", "ts": 5, "lat": lat, "lon": lon}).lat == lat


entity = st.text(alphabet="#@abcXYZ", min_size=1, max_size=4)


@given(
    st.text(min_size=1, max_size=5).filter(str.strip),
    st.integers(0, 2**40),
    st.floats(-90, 90),
    st.floats(-180, 180),
    st.lists(entity, max_size=6),
)
def test_validate_is_idempotent(pid, ts, lat, lon, ents):
    p = validate_post({"id": pid, "ts": ts, "lat": lat, "lon": lon, "entities": ents})
    assert validate_post(p) == p
    assert validate_post(validate_post(p)) == validate_post(p)


def test_geopoint_bounds():
    with pytest.raises(OutOfRangeCoordinate):
        GeoPoint(-90.01, 0)


def test_bbox_rejects_degenerate():
    with pytest.raises(DegenerateBox):
        BoundingBox(0, 0, 0, 1)
    with pytest.raises(DegenerateBox):
        BoundingBox(1, 0, 0, 1)


def test_bbox_half_open_containment():
    b = BoundingBox(0, 0, 2, 2)
    assert b.contains(0, 0)
    assert not b.contains(2, 1)
    assert b.contains(2, 2, closed=True)
    assert (b.mid_lat, b.mid_lon) == (1, 1)


def test_interval_bounds():
    itv = Interval(3, 1800, 600, 3600)
    assert itv.window_start == -1800
    assert itv.increment_end == 2400


def _ev(start, end):
    return Event("0", BoundingBox(0, 0, 1, 1), start, end, end - start, (), 0, 0.5)


def test_time_overlap_is_half_open():
    assert _ev(0, 600).overlaps_in_time(_ev(599, 1200))
    assert not _ev(0, 600).overlaps_in_time(_ev(600, 1200))
