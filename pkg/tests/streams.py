"""Hand-built post streams with a fully predictable quad-tree.

The root box is split into four quadrants; every interval carries exactly
one background post at the centre of each quadrant.  With ``THETA_COUNT``
above a quadrant's window count (432 over three days) but below the
root's, each interval's tree is the root plus four leaves with
arrival rates 4 and 1 per interval.
"""

from __future__ import annotations

from quadevent.detector import DetectorParams
from quadevent.model import BoundingBox, Post
from quadevent.pipeline import QuadTreeDetector

ROOT = BoundingBox(-37.84, 144.94, -37.82, 144.96)
DT = 600
T0 = 1_483_228_800  # multiple of DT
WARM = 3 * 86400
THETA_COUNT = 500

# quadrant centres in digit order SW, SE, NW, NE
CENTRES = {
    "0": (-37.835, 144.945),
    "1": (-37.835, 144.955),
    "2": (-37.825, 144.945),
    "3": (-37.825, 144.955),
}


def stream(bursts=(), tail_intervals=12, entities=("#a", "#b", "#c")) -> list[Post]:
    """Background for the warm-up plus ``tail_intervals`` more intervals.

    ``bursts`` holds ``(quadrant, first_interval, n_intervals, extra)``
    with intervals counted from the end of warm-up; each burst interval
    adds ``extra`` posts at the quadrant centre carrying ``entities``.
    """
    n = WARM // DT + tail_intervals
    posts = []
    for i in range(n):
        head = T0 + i * DT
        for j, q in enumerate("0123"):
            lat, lon = CENTRES[q]
            posts.append(Post(f"bg{i}_{q}", head + 60 * j + 30, lat, lon, ()))
        for q, first, count, extra in bursts:
            k = i - WARM // DT - first
            if 0 <= k < count:
                lat, lon = CENTRES[q]
                for e in range(extra):
                    posts.append(Post(f"b{q}_{k}_{e}", head + 300 + e, lat, lon, tuple(entities)))
    posts.sort(key=lambda p: (p.ts, p.id))
    return posts


def run(posts, **kw):
    det = QuadTreeDetector(DetectorParams(**kw), ROOT, theta_count=THETA_COUNT)
    return list(det.run(posts))


def burst_start(first_interval: int) -> int:
    return T0 + WARM + first_interval * DT
