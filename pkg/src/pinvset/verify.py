"""Independent certification of synthesized sets.

``check_fixpoint`` re-derives every active leaf's successor box from the
stored sample data and re-classifies it against the final union using only
the geometry primitives; it never looks at any synthesis bookkeeping, so a
certificate obtained from a deserialized result file stands on its own.

``raster_coverage`` is a brute-force sampling oracle used to cross-validate
the exact classifier, and ``monte_carlo_invariance`` is a falsifier that
rolls true trajectories forward; only the exact check constitutes the
deterministic guarantee.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np

from .dataset import SystemOracle
from .geometry import (
    Box,
    BoxList,
    CoverageClass,
    GEOM_TOL,
    Rect,
    Vec,
    chebyshev,
    rects_intersect,
    uncovered_fragments,
)
from .synthesis import SynthConfig, SynthResult

METHOD_EXACT = "exact-coverage"
METHOD_RASTER = "raster"
METHOD_MONTE_CARLO = "monte-carlo"


@dataclass
class Certificate:
    passed: bool
    checked_leaves: int
    first_failure: dict | None
    method: str


@dataclass
class RasterReport:
    covered_fraction: float
    verdict: CoverageClass


class BoxUnionIndex:
    """Bucket-grid index over a box union for overlap and membership queries.

    Cell size defaults to the smallest box side, clamped so the grid stays
    small; each bucket lists the boxes meeting that cell.  Query results
    preserve first-seen order, so downstream classification is
    deterministic.
    """

    def __init__(self, boxes: BoxList, cell: float | None = None, max_cells: int = 1 << 22):
        self.boxes = boxes
        self.rects = [b.rect() for b in boxes]
        if boxes.is_empty:
            self.dim = 0
            return
        self.dim = boxes[0].dim
        glo, ghi = boxes.bounding_rect()
        self._glo = glo
        widths = [h - l for l, h in zip(glo, ghi)]
        if cell is None:
            cell = min(2.0 * b.radius for b in boxes)
        if cell <= 0.0:
            cell = max(max(widths), 1.0)
        per_dim_cap = max(2, int(round(max_cells ** (1.0 / self.dim))))
        for w in widths:
            need = max(1, math.ceil(w / cell))
            if need > per_dim_cap:
                cell = w / per_dim_cap
        self._cell = cell
        self._shape = tuple(
            max(1, int(math.ceil((h - l) / cell - 1e-9))) for l, h in zip(glo, ghi)
        )
        buckets: dict[tuple[int, ...], list[int]] = {}
        for idx, (lo, hi) in enumerate(self.rects):
            for key in self._cells_touching(lo, hi):
                buckets.setdefault(key, []).append(idx)
        self._buckets = buckets

    def _cells_touching(self, lo: Vec, hi: Vec):
        ranges = []
        for d in range(self.dim):
            a = int(math.floor((lo[d] - self._glo[d]) / self._cell + 1e-9))
            b = int(math.ceil((hi[d] - self._glo[d]) / self._cell - 1e-9))
            a = max(0, min(a, self._shape[d] - 1))
            b = max(a + 1, min(b, self._shape[d]))
            ranges.append(range(a, b))
        return product(*ranges)

    def overlapping(self, qlo: Vec, qhi: Vec, tol: float = GEOM_TOL) -> list[Rect]:
        if self.boxes.is_empty:
            return []
        seen = bytearray(len(self.rects))
        out: list[Rect] = []
        for key in self._cells_touching(qlo, qhi):
            for idx in self._buckets.get(key, ()):
                if seen[idx]:
                    continue
                seen[idx] = 1
                lo, hi = self.rects[idx]
                if rects_intersect(lo, hi, qlo, qhi, tol):
                    out.append((lo, hi))
        return out

    def contains_point(self, y: Sequence[float], tol: float = GEOM_TOL) -> bool:
        if self.boxes.is_empty:
            return False
        key = tuple(
            min(
                self._shape[d] - 1,
                max(0, int(math.floor((y[d] - self._glo[d]) / self._cell))),
            )
            for d in range(self.dim)
        )
        for idx in self._buckets.get(key, ()):
            lo, hi = self.rects[idx]
            if all(l - tol <= v <= h + tol for v, l, h in zip(y, lo, hi)):
                return True
        return False


def check_fixpoint(
    result: SynthResult,
    config: SynthConfig | None = None,
    tol: float = GEOM_TOL,
) -> Certificate:
    """Exact re-certification of the final set.

    The stored union must equal the included leaves' cells, every included
    leaf's sample ball must still contain its cell (``r >= r_target +
    dist``), and the sample's successor box of radius ``L * r`` must be
    fully covered by the final union.  An empty union passes vacuously.
    Raises when the supplied config disagrees with the one recorded in the
    result.
    """
    if config is not None and config.lipschitz != result.config.lipschitz:
        raise ValueError(
            f"Lipschitz bound mismatch: result has {result.config.lipschitz}, "
            f"caller supplied {config.lipschitz}"
        )
    lipschitz = result.config.lipschitz
    pi_set = result.pi_set
    tree = result.tree
    active = tree.active_leaves()
    mismatch = len(active) != len(pi_set) or any(
        tree.nodes[i].target_center != b.center
        or tree.nodes[i].target_radius != b.radius
        for i, b in zip(active, pi_set)
    )
    if mismatch:
        return Certificate(
            False,
            0,
            {"reason": "stored union does not match the included leaf cells"},
            METHOD_EXACT,
        )
    if pi_set.is_empty:
        return Certificate(True, 0, None, METHOD_EXACT)
    index = BoxUnionIndex(pi_set)
    checked = 0
    for i in active:
        node = tree.nodes[i]
        checked += 1
        slack = node.radius + tol - (
            node.target_radius + chebyshev(node.target_center, node.sample_x)
        )
        if slack < 0:
            return Certificate(
                False,
                checked,
                {"leaf": i, "reason": "sample ball does not contain the cell"},
                METHOD_EXACT,
            )
        succ = Box(node.sample_xp, lipschitz * node.radius)
        leftovers = uncovered_fragments(succ, index, tol, limit=1)
        if leftovers:
            return Certificate(
                False,
                checked,
                {
                    "leaf": i,
                    "fragment": [list(leftovers[0][0]), list(leftovers[0][1])],
                },
                METHOD_EXACT,
            )
    return Certificate(True, checked, None, METHOD_EXACT)


def raster_coverage(query: Box, union: BoxList, cell: float) -> RasterReport:
    """Sampling oracle: covered fraction of a point grid over the query box.

    The grid uses at most ``cell`` pitch per axis (cell centers), so a
    covered or uncovered region thicker than the pitch cannot be missed;
    verdicts within one cell of a boundary are advisory only, the exact
    classifier is authoritative.
    """
    if cell <= 0.0 or cell > query.radius:
        raise ValueError(
            f"raster cell must lie in (0, query radius]; got {cell} "
            f"for radius {query.radius}"
        )
    lo, hi = query.rect()
    axes = []
    for l, h in zip(lo, hi):
        k = max(1, int(math.ceil((h - l) / cell - 1e-12)))
        pitch = (h - l) / k
        axes.append(l + (np.arange(k) + 0.5) * pitch)
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    covered = np.zeros(len(pts), dtype=bool)
    for b in union:
        blo, bhi = b.rect()
        inside = np.ones(len(pts), dtype=bool)
        for d in range(query.dim):
            inside &= (pts[:, d] >= blo[d] - GEOM_TOL) & (pts[:, d] <= bhi[d] + GEOM_TOL)
        covered |= inside
    hits = int(covered.sum())
    fraction = hits / len(pts)
    if hits == len(pts):
        verdict = CoverageClass.FULLY_COVERED
    elif hits == 0:
        verdict = CoverageClass.DISJOINT
    else:
        verdict = CoverageClass.PARTIAL
    return RasterReport(fraction, verdict)


class _UnionMembership:
    """Vectorized membership test for a box union.

    Rasterizes the union onto a uniform bitmap at the finest box side;
    cells fully inside some box are certain hits, untouched cells certain
    misses, and partially covered edge cells fall back to an exact check.
    Dyadic tilings align exactly, so their bitmaps have no uncertain cells.
    """

    def __init__(self, boxes: BoxList, max_cells: int = 1 << 22):
        self.boxes = boxes
        self.dim = boxes[0].dim
        glo, ghi = boxes.bounding_rect()
        self._glo = np.array(glo)
        self._ghi = np.array(ghi)
        pitch = min(2.0 * b.radius for b in boxes)
        if pitch <= 0.0:
            pitch = max(max(h - l for l, h in zip(glo, ghi)), 1.0)
        per_dim_cap = max(2, int(round(max_cells ** (1.0 / self.dim))))
        for l, h in zip(glo, ghi):
            if (h - l) / pitch > per_dim_cap:
                pitch = (h - l) / per_dim_cap
        self._pitch = pitch
        shape = tuple(
            max(1, int(math.ceil((h - l) / pitch - 1e-9))) for l, h in zip(glo, ghi)
        )
        self._shape = shape
        covered = np.zeros(shape, dtype=bool)
        uncertain = np.zeros(shape, dtype=bool)
        snap = 1e-9
        for b in boxes:
            lo, hi = b.rect()
            full = []
            touch = []
            for d in range(self.dim):
                a = (lo[d] - glo[d]) / pitch
                bb = (hi[d] - glo[d]) / pitch
                full.append(
                    slice(
                        max(0, int(math.ceil(a - snap))),
                        min(shape[d], int(math.floor(bb + snap))),
                    )
                )
                touch.append(
                    slice(
                        max(0, int(math.floor(a + snap))),
                        min(shape[d], int(math.ceil(bb - snap))),
                    )
                )
            covered[tuple(full)] = True
            region = np.zeros(shape, dtype=bool)
            region[tuple(touch)] = True
            region[tuple(full)] = False
            uncertain |= region
        self._covered = covered
        self._uncertain = uncertain & ~covered
        self._exact = BoxUnionIndex(boxes) if self._uncertain.any() else None

    def contains(self, pts: np.ndarray, tol: float = GEOM_TOL) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        inside_bbox = np.all(
            (pts >= self._glo - tol) & (pts <= self._ghi + tol), axis=1
        )
        idx = np.floor((pts - self._glo) / self._pitch).astype(np.int64)
        np.clip(idx, 0, np.array(self._shape) - 1, out=idx)
        keys = tuple(idx[:, d] for d in range(self.dim))
        result = self._covered[keys] & inside_bbox
        if self._exact is not None:
            maybe = self._uncertain[keys] & inside_bbox & ~result
            for j in np.nonzero(maybe)[0]:
                if self._exact.contains_point(tuple(pts[j]), tol):
                    result[j] = True
        return result


def monte_carlo_invariance(
    pi_set: BoxList,
    oracle: SystemOracle,
    samples: int = 100_000,
    horizon: int = 50,
    seed: int = 0,
) -> Certificate:
    """Trajectory falsifier: roll the true map forward from points of the set.

    Draws points uniformly from the union (rejection over its bounding
    box), iterates the oracle ``horizon`` steps, and fails at the first
    iterate that leaves the union.  Passing is evidence, not proof; the
    exact coverage check is the guarantee.
    """
    if pi_set.is_empty:
        raise ValueError("cannot sample trajectories from an empty set")
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    if horizon < 0:
        raise ValueError(f"horizon must be >= 0, got {horizon}")
    member = _UnionMembership(pi_set)
    rng = np.random.default_rng(seed)
    glo, ghi = pi_set.bounding_rect()
    lo = np.array(glo)
    hi = np.array(ghi)
    pts = np.empty((0, pi_set[0].dim))
    while len(pts) < samples:
        batch = rng.uniform(lo, hi, size=(max(samples, 4 * (samples - len(pts))), len(lo)))
        accepted = batch[member.contains(batch)]
        pts = np.vstack((pts, accepted))
    pts = pts[:samples]
    start = pts.copy()
    for step in range(1, horizon + 1):
        pts = oracle.map_points(pts)
        ok = member.contains(pts)
        if not ok.all():
            j = int(np.argmin(ok))
            return Certificate(
                False,
                samples,
                {
                    "step": step,
                    "start": list(map(float, start[j])),
                    "state": list(map(float, pts[j])),
                },
                METHOD_MONTE_CARLO,
            )
    return Certificate(True, samples, None, METHOD_MONTE_CARLO)
