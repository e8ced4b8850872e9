"""Planar geometry: oriented boxes, separating-axis tests, rays, and routes."""

from __future__ import annotations

import math
from bisect import bisect_right

TWO_PI = 2.0 * math.pi


def wrap_angle(a: float) -> float:
    """Wrap an angle to [0, 2*pi)."""
    a = math.fmod(a, TWO_PI)
    return a + TWO_PI if a < 0.0 else a


def angle_diff(a: float, b: float) -> float:
    """Signed smallest difference a - b, in (-pi, pi]."""
    d = math.fmod(a - b, TWO_PI)
    if d <= -math.pi:
        d += TWO_PI
    elif d > math.pi:
        d -= TWO_PI
    return d


def lerp_angle(a: float, b: float, u: float) -> float:
    """Interpolate between angles along the shortest arc."""
    return wrap_angle(a + angle_diff(b, a) * u)


def obb_corners(x: float, y: float, heading: float, half_length: float,
                half_width: float) -> list[tuple[float, float]]:
    """Corners of an oriented box, counter-clockwise from front-left."""
    c, s = math.cos(heading), math.sin(heading)
    lx, ly = half_length * c, half_length * s
    wx, wy = -half_width * s, half_width * c
    return [
        (x + lx + wx, y + ly + wy),
        (x - lx + wx, y - ly + wy),
        (x - lx - wx, y - ly - wy),
        (x + lx - wx, y + ly - wy),
    ]


def _project_interval(corners, ax: float, ay: float) -> tuple[float, float]:
    lo = hi = corners[0][0] * ax + corners[0][1] * ay
    for cx, cy in corners[1:]:
        d = cx * ax + cy * ay
        if d < lo:
            lo = d
        elif d > hi:
            hi = d
    return lo, hi


def obb_overlap(ax: float, ay: float, ah: float, ahl: float, ahw: float,
                bx: float, by: float, bh: float, bhl: float, bhw: float) -> bool:
    """Separating-axis overlap test between two oriented boxes.

    Touching boxes count as overlapping (closed intervals).
    """
    # Circumradius prescreen keeps the common far-apart case cheap.
    ra = math.hypot(ahl, ahw)
    rb = math.hypot(bhl, bhw)
    if math.hypot(bx - ax, by - ay) > ra + rb:
        return False
    ca = obb_corners(ax, ay, ah, ahl, ahw)
    cb = obb_corners(bx, by, bh, bhl, bhw)
    for h in (ah, bh):
        c, s = math.cos(h), math.sin(h)
        for axis in ((c, s), (-s, c)):
            alo, ahi = _project_interval(ca, *axis)
            blo, bhi = _project_interval(cb, *axis)
            if ahi < blo or bhi < alo:
                return False
    return True


def segment_intersects_obb(px: float, py: float, qx: float, qy: float,
                           bx: float, by: float, bh: float,
                           bhl: float, bhw: float) -> bool:
    """True when segment p->q crosses (or ends inside) the oriented box."""
    c, s = math.cos(bh), math.sin(bh)
    # Transform the segment into the box frame; clip against the AABB.
    rpx, rpy = px - bx, py - by
    rqx, rqy = qx - bx, qy - by
    p0 = (rpx * c + rpy * s, -rpx * s + rpy * c)
    p1 = (rqx * c + rqy * s, -rqx * s + rqy * c)
    dx, dy = p1[0] - p0[0], p1[1] - p0[1]
    t0, t1 = 0.0, 1.0
    for d, lo, hi in ((dx, -bhl, bhl), (dy, -bhw, bhw)):
        start = p0[0] if d is dx else p0[1]
        if abs(d) < 1e-12:
            if start < lo or start > hi:
                return False
            continue
        ta = (lo - start) / d
        tb = (hi - start) / d
        if ta > tb:
            ta, tb = tb, ta
        t0 = max(t0, ta)
        t1 = min(t1, tb)
        if t0 > t1:
            return False
    return True


class Polyline:
    """Arc-length parameterized polyline used for routes and scripts."""

    def __init__(self, points: list[tuple[float, float]]):
        if len(points) < 2:
            raise ValueError("polyline needs at least two points")
        self.points = [(float(x), float(y)) for x, y in points]
        self.cum_s = [0.0]
        for (x0, y0), (x1, y1) in zip(self.points, self.points[1:]):
            self.cum_s.append(self.cum_s[-1] + math.hypot(x1 - x0, y1 - y0))
        self.length = self.cum_s[-1]

    def point_at(self, s: float) -> tuple[float, float]:
        s = min(max(s, 0.0), self.length)
        i = min(bisect_right(self.cum_s, s), len(self.points) - 1)
        i = max(i, 1)
        s0, s1 = self.cum_s[i - 1], self.cum_s[i]
        (x0, y0), (x1, y1) = self.points[i - 1], self.points[i]
        if s1 <= s0:
            return x0, y0
        u = (s - s0) / (s1 - s0)
        return x0 + (x1 - x0) * u, y0 + (y1 - y0) * u

    def tangent_at(self, s: float) -> float:
        s = min(max(s, 0.0), self.length)
        i = min(bisect_right(self.cum_s, s), len(self.points) - 1)
        i = max(i, 1)
        (x0, y0), (x1, y1) = self.points[i - 1], self.points[i]
        return wrap_angle(math.atan2(y1 - y0, x1 - x0))

    def project(self, x: float, y: float) -> tuple[float, float]:
        """Project a point onto the line; returns (s, signed lateral offset).

        Lateral offset is positive to the left of travel direction.
        """
        best = None
        for i in range(1, len(self.points)):
            (x0, y0), (x1, y1) = self.points[i - 1], self.points[i]
            ex, ey = x1 - x0, y1 - y0
            seg_len2 = ex * ex + ey * ey
            if seg_len2 <= 0.0:
                continue
            u = ((x - x0) * ex + (y - y0) * ey) / seg_len2
            u = min(max(u, 0.0), 1.0)
            cx, cy = x0 + ex * u, y0 + ey * u
            d2 = (x - cx) ** 2 + (y - cy) ** 2
            if best is None or d2 < best[0]:
                seg_len = math.sqrt(seg_len2)
                s = self.cum_s[i - 1] + seg_len * u
                # Cross product sign gives the side.
                lat = ((x - x0) * ey - (y - y0) * ex) / seg_len
                best = (d2, s, -lat)
        assert best is not None
        return best[1], best[2]
