"""Building footprints and line-of-sight testing.

Footprints load from a GeoJSON-style feature collection whose coordinates
are planar meters (geographic lat/lon files are rejected unless a projection
is declared).  A segment is LOS when it touches no polygon edge and neither
endpoint sits strictly inside a footprint; endpoint-on-edge counts as
blocked, which keeps the test deterministic on boundaries.  A uniform grid
over the polygon edges accelerates queries; the brute-force path is kept
for cross-checking.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

__all__ = ["BuildingSet", "load_buildings", "los_test", "los_test_brute",
           "fit_blockage", "fit_blockage_curve", "los_area_fraction"]


def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _on_segment(ax, ay, bx, by, px, py):
    return (min(ax, bx) <= px <= max(ax, bx)) and (min(ay, by) <= py <= max(ay, by))


def _segments_intersect(ax, ay, bx, by, cx, cy, dx, dy) -> bool:
    """Closed segment intersection: touching or collinear overlap counts."""
    d1 = _orient(cx, cy, dx, dy, ax, ay)
    d2 = _orient(cx, cy, dx, dy, bx, by)
    d3 = _orient(ax, ay, bx, by, cx, cy)
    d4 = _orient(ax, ay, bx, by, dx, dy)
    if ((d1 > 0) != (d2 > 0) and d1 != 0 and d2 != 0
            and (d3 > 0) != (d4 > 0) and d3 != 0 and d4 != 0):
        return True
    if d1 == 0 and _on_segment(cx, cy, dx, dy, ax, ay):
        return True
    if d2 == 0 and _on_segment(cx, cy, dx, dy, bx, by):
        return True
    if d3 == 0 and _on_segment(ax, ay, bx, by, cx, cy):
        return True
    if d4 == 0 and _on_segment(ax, ay, bx, by, dx, dy):
        return True
    return False


def _ring_is_simple(ring: np.ndarray) -> bool:
    # O(k^2) pairwise check over non-adjacent edges; footprints are small
    k = len(ring) - 1
    for i in range(k):
        a, b = ring[i], ring[i + 1]
        for j in range(i + 1, k):
            if j == i or abs(i - j) == 1 or (i == 0 and j == k - 1):
                continue
            c, d = ring[j], ring[j + 1]
            if _segments_intersect(a[0], a[1], b[0], b[1], c[0], c[1], d[0], d[1]):
                return False
    return True


def _point_in_ring(px, py, ring: np.ndarray) -> bool:
    inside = False
    x0, y0 = ring[-2]  # last distinct vertex (ring closed)
    for x1, y1 in ring[:-1]:
        if (y0 > py) != (y1 > py):
            t = (py - y0) / (y1 - y0)
            if px < x0 + t * (x1 - x0):
                inside = not inside
        x0, y0 = x1, y1
    return inside


class _EdgeGrid:
    """Uniform spatial hash of polygon edges for segment queries."""

    def __init__(self, edges: np.ndarray, bbox, target_cells: int = 4096):
        self.edges = edges
        x0, y0, x1, y1 = bbox
        span_x = max(x1 - x0, 1e-9)
        span_y = max(y1 - y0, 1e-9)
        aspect = span_x / span_y
        self.nx = max(1, int(round(math.sqrt(target_cells * aspect))))
        self.ny = max(1, int(round(math.sqrt(target_cells / aspect))))
        self.x0, self.y0 = x0, y0
        self.cw = span_x / self.nx
        self.ch = span_y / self.ny
        self.cells: dict[tuple, list] = {}
        for idx, (ax, ay, bx, by) in enumerate(edges):
            for cell in self._cells_for_bbox(min(ax, bx), min(ay, by),
                                             max(ax, bx), max(ay, by)):
                self.cells.setdefault(cell, []).append(idx)

    def _clamp(self, ix, n):
        return min(max(ix, 0), n - 1)

    def _cells_for_bbox(self, xmin, ymin, xmax, ymax):
        i0 = self._clamp(int((xmin - self.x0) / self.cw), self.nx)
        i1 = self._clamp(int((xmax - self.x0) / self.cw), self.nx)
        j0 = self._clamp(int((ymin - self.y0) / self.ch), self.ny)
        j1 = self._clamp(int((ymax - self.y0) / self.ch), self.ny)
        for i in range(i0, i1 + 1):
            for j in range(j0, j1 + 1):
                yield (i, j)

    def candidates(self, ax, ay, bx, by):
        """Edge indices whose cells the segment's bbox overlaps."""
        seen = set()
        for cell in self._cells_for_bbox(min(ax, bx), min(ay, by),
                                         max(ax, bx), max(ay, by)):
            bucket = self.cells.get(cell)
            if bucket:
                seen.update(bucket)
        return seen


@dataclass(frozen=True)
class BuildingSet:
    """Closed, simple footprint rings (vertices in meters, first == last)."""

    rings: tuple
    bbox: tuple

    def __post_init__(self):
        object.__setattr__(self, "rings", tuple(np.asarray(r, dtype=float)
                                                for r in self.rings))
        edges = []
        for ring in self.rings:
            if ring.ndim != 2 or ring.shape[1] != 2:
                raise ConfigError("each ring must be an (k, 2) array")
            if len(ring) < 4 or not np.allclose(ring[0], ring[-1]):
                raise ConfigError("rings must be closed with >= 3 distinct vertices")
            if not _ring_is_simple(ring):
                raise ConfigError("self-intersecting footprint ring")
            for i in range(len(ring) - 1):
                edges.append((ring[i, 0], ring[i, 1], ring[i + 1, 0], ring[i + 1, 1]))
        edge_arr = np.asarray(edges, dtype=float) if edges else np.zeros((0, 4))
        object.__setattr__(self, "_edges", edge_arr)
        if len(edge_arr):
            grid = _EdgeGrid(edge_arr, self.bbox)
        else:
            grid = None
        object.__setattr__(self, "_grid", grid)
        # ring bounding boxes for the point-in-polygon prefilter
        rb = [(r[:, 0].min(), r[:, 1].min(), r[:, 0].max(), r[:, 1].max())
              for r in self.rings]
        object.__setattr__(self, "_ring_bbox", rb)

    @classmethod
    def from_rings(cls, rings) -> "BuildingSet":
        rings = [np.asarray(r, dtype=float) for r in rings]
        if rings:
            xs = np.concatenate([r[:, 0] for r in rings])
            ys = np.concatenate([r[:, 1] for r in rings])
            bbox = (float(xs.min()), float(ys.min()), float(xs.max()), float(ys.max()))
        else:
            bbox = (0.0, 0.0, 0.0, 0.0)
        return cls(rings=tuple(rings), bbox=bbox)

    @property
    def n_edges(self) -> int:
        return len(self._edges)

    def contains(self, point) -> bool:
        """Strictly-inside test against any footprint (bbox-prefiltered)."""
        px, py = float(point[0]), float(point[1])
        for ring, (x0, y0, x1, y1) in zip(self.rings, self._ring_bbox):
            if x0 <= px <= x1 and y0 <= py <= y1 and _point_in_ring(px, py, ring):
                return True
        return False


def load_buildings(path) -> BuildingSet:
    """Read footprints from a GeoJSON-compatible feature collection.

    Coordinates must be planar meters.  Files whose coordinates all fit in
    geographic ranges (|x| <= 180, |y| <= 90) are rejected unless the file
    declares a projection via a top-level "crs" or "projection" member.
    Polygon and MultiPolygon geometries contribute their exterior rings;
    interior rings (courtyards) block like any other wall and are kept.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc

    if doc.get("type") != "FeatureCollection":
        raise ConfigError(f"{path}: expected a FeatureCollection")
    rings = []
    for feat in doc.get("features", []):
        geom = feat.get("geometry") or {}
        gtype = geom.get("type")
        coords = geom.get("coordinates", [])
        if gtype == "Polygon":
            polys = [coords]
        elif gtype == "MultiPolygon":
            polys = coords
        else:
            raise ConfigError(f"{path}: unsupported geometry type {gtype!r}")
        for poly in polys:
            for ring in poly:
                rings.append(np.asarray(ring, dtype=float))
    if not rings:
        raise ConfigError(f"{path}: no polygon rings found")

    declared = "crs" in doc or "projection" in doc
    xs = np.concatenate([r[:, 0] for r in rings])
    ys = np.concatenate([r[:, 1] for r in rings])
    looks_geographic = np.all(np.abs(xs) <= 180.0) and np.all(np.abs(ys) <= 90.0)
    if looks_geographic and not declared:
        raise ConfigError(
            f"{path}: coordinates look geographic (lat/lon); declare a planar "
            "projection ('crs' or 'projection' member) or project to meters")
    return BuildingSet.from_rings(rings)


def _blocked_by_edges(a, b, edges, index_iter) -> bool:
    ax, ay = a
    bx, by = b
    for idx in index_iter:
        ex0, ey0, ex1, ey1 = edges[idx]
        if _segments_intersect(ax, ay, bx, by, ex0, ey0, ex1, ey1):
            return True
    return False


def los_test(a, b, buildings: BuildingSet) -> bool:
    """True iff the open segment a-b sees no building: it crosses or touches
    no footprint edge and neither endpoint is strictly inside a footprint."""
    a = (float(a[0]), float(a[1]))
    b = (float(b[0]), float(b[1]))
    if buildings.n_edges == 0:
        return True
    grid = buildings._grid
    cand = grid.candidates(a[0], a[1], b[0], b[1])
    if _blocked_by_edges(a, b, buildings._edges, cand):
        return False
    return not (buildings.contains(a) or buildings.contains(b))


def los_test_brute(a, b, buildings: BuildingSet) -> bool:
    """Reference implementation testing every edge; used to validate the
    grid-indexed path."""
    a = (float(a[0]), float(a[1]))
    b = (float(b[0]), float(b[1]))
    if buildings.n_edges == 0:
        return True
    if _blocked_by_edges(a, b, buildings._edges, range(buildings.n_edges)):
        return False
    return not (buildings.contains(a) or buildings.contains(b))


def los_area_fraction(point, d_ball: float, buildings: BuildingSet,
                      rng: np.random.Generator, *, n_rays: int = 256,
                      n_radial: int = 16) -> float:
    """Fraction of the radius-d_ball disk around `point` that is LOS from it,
    by stratified polar sampling: n_rays jittered directions, n_radial strata
    uniform in area (radius proportional to sqrt(u))."""
    px, py = float(point[0]), float(point[1])
    hits = 0
    total = n_rays * n_radial
    jitter = rng.random(n_rays)
    u = (np.arange(n_radial)[None, :] + rng.random((n_rays, n_radial))) / n_radial
    radii = d_ball * np.sqrt(u)
    angles = 2.0 * math.pi * (np.arange(n_rays) + jitter) / n_rays
    cos_a, sin_a = np.cos(angles), np.sin(angles)
    for i in range(n_rays):
        for r in radii[i]:
            q = (px + r * cos_a[i], py + r * sin_a[i])
            if los_test((px, py), q, buildings):
                hits += 1
    return hits / total


def _sample_outdoor(buildings: BuildingSet, rng, count: int):
    x0, y0, x1, y1 = buildings.bbox
    if x1 <= x0 or y1 <= y0:
        # no extent (empty set): sample the unit square, everything is LOS
        x0, y0, x1, y1 = 0.0, 0.0, 1.0, 1.0
    pts = []
    attempts = 0
    while len(pts) < count:
        p = (x0 + rng.random() * (x1 - x0), y0 + rng.random() * (y1 - y0))
        if not buildings.contains(p):
            pts.append(p)
        attempts += 1
        if attempts > 10000 * count + 10000:
            raise ValueError("no outdoor area found in the footprint bbox")
    return pts


def fit_blockage(buildings: BuildingSet, d_ball: float, samples: int,
                 seed: int, *, n_rays: int = 256, n_radial: int = 16) -> float:
    """Average LOS area fraction of radius-d_ball disks around uniformly
    dropped outdoor points: the empirical estimate of the LOS-ball
    probability for this geography."""
    if d_ball <= 0:
        raise ValueError("d_ball must be positive")
    if samples < 1:
        raise ValueError("need at least one sample point")
    rng = np.random.default_rng(seed)
    pts = _sample_outdoor(buildings, rng, samples)
    vals = [los_area_fraction(p, d_ball, buildings, rng,
                              n_rays=n_rays, n_radial=n_radial) for p in pts]
    return float(np.mean(vals))


def fit_blockage_curve(buildings: BuildingSet, d_grid, samples: int,
                       seed: int, *, n_rays: int = 256,
                       n_radial: int = 16) -> np.ndarray:
    """fit_blockage over a grid of ball radii, re-using the same sample
    points and (angle, radial) strata across radii so the curve is smooth
    in d rather than re-randomized per point."""
    d_grid = np.asarray(d_grid, dtype=float)
    if np.any(d_grid <= 0):
        raise ValueError("ball radii must be positive")
    rng = np.random.default_rng(seed)
    pts = _sample_outdoor(buildings, rng, samples)
    strata = []
    for _ in pts:
        jitter = rng.random(n_rays)
        u = (np.arange(n_radial)[None, :] + rng.random((n_rays, n_radial))) / n_radial
        angles = 2.0 * math.pi * (np.arange(n_rays) + jitter) / n_rays
        strata.append((angles, u))
    out = np.empty(d_grid.shape)
    for k, d in enumerate(d_grid):
        hits = 0
        total = len(pts) * n_rays * n_radial
        for (px, py), (angles, u) in zip(pts, strata):
            radii = d * np.sqrt(u)
            for i, ang in enumerate(angles):
                ca, sa = math.cos(ang), math.sin(ang)
                for r in radii[i]:
                    if los_test((px, py), (px + r * ca, py + r * sa), buildings):
                        hits += 1
        out[k] = hits / total
    return out
