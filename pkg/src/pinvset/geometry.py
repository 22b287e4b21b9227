"""Axis-aligned box algebra in the max norm.

A ``Box`` is a closed max-norm ball: a hypercube given by a center and a
half-width.  Intersections and subtraction fragments are general axis-aligned
hyperrectangles, carried as ``(lo, hi)`` corner-tuple pairs so the hot loops
stay allocation-light.

All sets are closed: boundary contact counts as membership and as
intersection.  Coverage of a box by a union is decided by exact fragment
subtraction, never by sampling, so an exactly tiled union classifies as fully
covering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Sequence

# Absolute slack for geometric comparisons.  Dyadic subdivision keeps tile
# coordinates exact in binary floating point; this only has to absorb the
# rounding of decimal domain corners and of mapped successor states.
GEOM_TOL = 1e-12

Vec = tuple[float, ...]
Rect = tuple[Vec, Vec]


class DimensionMismatchError(ValueError):
    """Operands live in different state-space dimensions."""


class CoverageClass(Enum):
    """How a query box relates to a union of cover boxes."""

    FULLY_COVERED = "fully-covered"
    DISJOINT = "disjoint"
    PARTIAL = "partial"


@dataclass(frozen=True, slots=True)
class Box:
    """Closed max-norm ball: ``{y : max_i |center_i - y_i| <= radius}``."""

    center: Vec
    radius: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if self.radius < 0.0:
            raise ValueError(f"box radius must be nonnegative, got {self.radius}")

    @property
    def dim(self) -> int:
        return len(self.center)

    def rect(self) -> Rect:
        r = self.radius
        return (
            tuple(c - r for c in self.center),
            tuple(c + r for c in self.center),
        )

    def volume(self) -> float:
        return (2.0 * self.radius) ** self.dim

    def contains_point(self, y: Sequence[float], tol: float = GEOM_TOL) -> bool:
        if len(y) != self.dim:
            raise DimensionMismatchError(
                f"point has dim {len(y)}, box has dim {self.dim}"
            )
        r = self.radius + tol
        return all(abs(c - v) <= r for c, v in zip(self.center, y))


def box_contains_point(b: Box, y: Sequence[float], tol: float = GEOM_TOL) -> bool:
    return b.contains_point(y, tol)


def box_volume(b: Box) -> float:
    return b.volume()


@dataclass(frozen=True, slots=True)
class BoxList:
    """Ordered union of boxes; may be empty (the empty set)."""

    boxes: tuple[Box, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "boxes", tuple(self.boxes))
        dims = {b.dim for b in self.boxes}
        if len(dims) > 1:
            raise DimensionMismatchError(f"mixed box dimensions {sorted(dims)}")

    def __len__(self) -> int:
        return len(self.boxes)

    def __iter__(self) -> Iterator[Box]:
        return iter(self.boxes)

    def __getitem__(self, i: int) -> Box:
        return self.boxes[i]

    @property
    def is_empty(self) -> bool:
        return not self.boxes

    def volume(self) -> float:
        # Assumes pairwise-disjoint interiors, which holds for tree tilings.
        return math.fsum(b.volume() for b in self.boxes)

    def contains_point(self, y: Sequence[float], tol: float = GEOM_TOL) -> bool:
        return any(b.contains_point(y, tol) for b in self.boxes)

    def bounding_rect(self) -> Rect:
        if self.is_empty:
            raise ValueError("empty union has no bounding rectangle")
        rects = [b.rect() for b in self.boxes]
        n = self.boxes[0].dim
        lo = tuple(min(r[0][d] for r in rects) for d in range(n))
        hi = tuple(max(r[1][d] for r in rects) for d in range(n))
        return lo, hi

    def overlapping(self, qlo: Vec, qhi: Vec, tol: float = GEOM_TOL) -> list[Rect]:
        out = []
        for b in self.boxes:
            lo, hi = b.rect()
            if rects_intersect(lo, hi, qlo, qhi, tol):
                out.append((lo, hi))
        return out


def as_rect(obj: Box | Rect) -> Rect:
    if isinstance(obj, Box):
        return obj.rect()
    lo, hi = obj
    return tuple(float(v) for v in lo), tuple(float(v) for v in hi)


def rect_volume(rect: Rect) -> float:
    lo, hi = rect
    v = 1.0
    for a, b in zip(lo, hi):
        w = b - a
        if w <= 0.0:
            return 0.0
        v *= w
    return v


def rects_intersect(alo: Vec, ahi: Vec, blo: Vec, bhi: Vec, tol: float = GEOM_TOL) -> bool:
    """Closed intersection test; boundary contact counts."""
    for al, ah, bl, bh in zip(alo, ahi, blo, bhi):
        if (al if al > bl else bl) > (ah if ah < bh else bh) + tol:
            return False
    return True


def _overlap_positive(alo: Vec, ahi: Vec, blo: Vec, bhi: Vec, tol: float) -> bool:
    """True when the overlap has positive width in every dimension."""
    for al, ah, bl, bh in zip(alo, ahi, blo, bhi):
        if (ah if ah < bh else bh) - (al if al > bl else bl) <= tol:
            return False
    return True


def box_intersect(a: Box | Rect, b: Box | Rect, tol: float = GEOM_TOL) -> Rect | None:
    """Coordinatewise intersection, or None when empty.

    The result is a hyperrectangle, not generally a cube.  Contact along a
    face returns the degenerate (zero-width) rectangle, consistent with the
    closed-set convention.
    """
    alo, ahi = as_rect(a)
    blo, bhi = as_rect(b)
    if len(alo) != len(blo):
        raise DimensionMismatchError(
            f"cannot intersect boxes of dim {len(alo)} and {len(blo)}"
        )
    lo = tuple(max(x, y) for x, y in zip(alo, blo))
    hi = tuple(min(x, y) for x, y in zip(ahi, bhi))
    for a_, b_ in zip(lo, hi):
        if a_ > b_ + tol:
            return None
    return lo, hi


def box_subtract(query: Box | Rect, cover: Box | Rect, tol: float = GEOM_TOL) -> list[Rect]:
    """Decompose ``query \\ cover`` into disjoint hyperrectangles.

    Coordinate sweep: at most two fragments per dimension, fragments have
    pairwise-disjoint interiors, and their total volume equals
    ``vol(query) - vol(query & cover)``.  A cover that removes no volume
    (disjoint or face contact only) returns the query unchanged.  Fragments
    thinner than ``tol`` in any dimension are dropped.
    """
    qlo, qhi = as_rect(query)
    clo, chi = as_rect(cover)
    if len(qlo) != len(clo):
        raise DimensionMismatchError(
            f"cannot subtract boxes of dim {len(clo)} from dim {len(qlo)}"
        )
    if not _overlap_positive(qlo, qhi, clo, chi, tol):
        return [(qlo, qhi)]

    lo = list(qlo)
    hi = list(qhi)
    pieces: list[Rect] = []
    n = len(qlo)
    for d in range(n):
        if clo[d] > lo[d] + tol:
            plo, phi = list(lo), list(hi)
            phi[d] = clo[d]
            if all(b - a > tol for a, b in zip(plo, phi)):
                pieces.append((tuple(plo), tuple(phi)))
            lo[d] = clo[d]
        if chi[d] < hi[d] - tol:
            plo, phi = list(lo), list(hi)
            plo[d] = chi[d]
            if all(b - a > tol for a, b in zip(plo, phi)):
                pieces.append((tuple(plo), tuple(phi)))
            hi[d] = chi[d]
    # The remaining core [lo, hi] is query & cover and is discarded.
    return pieces


def classify_coverage(
    query: Box | Rect,
    union: "CoverSource | BoxList | Iterable[Box]",
    tol: float = GEOM_TOL,
) -> CoverageClass:
    """Exact three-way classification of a box against a union of boxes.

    FULLY_COVERED: the query minus all cover boxes has zero volume.
    DISJOINT: no cover box meets the query, not even along a boundary.
    PARTIAL: otherwise.

    A fragment that survives every remaining cover box settles the verdict
    as PARTIAL immediately; running out of fragments settles FULLY_COVERED.
    """
    qlo, qhi = as_rect(query)
    if hasattr(union, "overlapping"):
        covers = union.overlapping(qlo, qhi, tol)
    else:
        covers = []
        for b in union:
            lo, hi = as_rect(b)
            if len(lo) != len(qlo):
                raise DimensionMismatchError(
                    f"cover dim {len(lo)} does not match query dim {len(qlo)}"
                )
            if rects_intersect(lo, hi, qlo, qhi, tol):
                covers.append((lo, hi))
    if not covers:
        return CoverageClass.DISJOINT

    ncov = len(covers)
    stack: list[tuple[Vec, Vec, int]] = [(qlo, qhi, 0)]
    while stack:
        flo, fhi, i = stack.pop()
        while i < ncov:
            clo, chi = covers[i]
            if _overlap_positive(flo, fhi, clo, chi, tol):
                break
            i += 1
        else:
            return CoverageClass.PARTIAL
        for piece in box_subtract((flo, fhi), covers[i], tol):
            stack.append((piece[0], piece[1], i + 1))
    return CoverageClass.FULLY_COVERED


def uncovered_fragments(
    query: Box | Rect,
    union: "CoverSource | BoxList | Iterable[Box]",
    tol: float = GEOM_TOL,
    limit: int | None = None,
) -> list[Rect]:
    """Fragments of the query left uncovered by the union (possibly none)."""
    qlo, qhi = as_rect(query)
    if hasattr(union, "overlapping"):
        covers = union.overlapping(qlo, qhi, tol)
    else:
        covers = [
            as_rect(b)
            for b in union
            if rects_intersect(*as_rect(b), qlo, qhi, tol)
        ]
    fragments: list[Rect] = [(qlo, qhi)]
    for cover in covers:
        nxt: list[Rect] = []
        for frag in fragments:
            nxt.extend(box_subtract(frag, cover, tol))
        fragments = nxt
        if not fragments:
            break
    if limit is not None:
        return fragments[:limit]
    return fragments


def successor_box(pair, r: float, lipschitz: float) -> Box:
    """Over-approximation of the one-step image of the ball around a sample.

    For a map with max-norm Lipschitz bound L, every state within r of the
    sampled state maps within L*r of the sampled successor, so the image of
    the radius-r ball lies inside the radius ``L*r`` ball at ``x_plus``.
    """
    if lipschitz <= 0.0:
        raise ValueError(f"Lipschitz bound must be positive, got {lipschitz}")
    if r < 0.0:
        raise ValueError(f"ball radius must be nonnegative, got {r}")
    return Box(pair.x_plus, lipschitz * r)


def chebyshev(a: Sequence[float], b: Sequence[float]) -> float:
    """Max-norm distance between two points."""
    if len(a) != len(b):
        raise DimensionMismatchError(f"points of dim {len(a)} and {len(b)}")
    return max(abs(x - y) for x, y in zip(a, b))


def rect_to_cubes(lo: Sequence[float], hi: Sequence[float], tol: float = 1e-9) -> BoxList:
    """Tile an axis-aligned rectangle with equal cubes.

    Every side must be an integer multiple of the shortest side; otherwise
    the rectangle has no equal-cube tiling and a ValueError is raised.  A
    cube yields a single box.
    """
    lo = tuple(float(v) for v in lo)
    hi = tuple(float(v) for v in hi)
    if len(lo) != len(hi):
        raise DimensionMismatchError("corner dimensions differ")
    widths = [b - a for a, b in zip(lo, hi)]
    if any(w <= 0 for w in widths):
        raise ValueError(f"degenerate domain rectangle {lo}..{hi}")
    side = min(widths)
    counts = []
    for w in widths:
        k = w / side
        ki = round(k)
        if ki < 1 or abs(k - ki) > tol:
            raise ValueError(
                "domain is not tileable by equal cubes: "
                f"side ratio {k} is not an integer"
            )
        counts.append(ki)
    radius = side / 2.0
    boxes = []
    idx = [0] * len(lo)
    while True:
        center = tuple(lo[d] + (2 * idx[d] + 1) * radius for d in range(len(lo)))
        boxes.append(Box(center, radius))
        d = len(lo) - 1
        while d >= 0:
            idx[d] += 1
            if idx[d] < counts[d]:
                break
            idx[d] = 0
            d -= 1
        if d < 0:
            break
    return BoxList(tuple(boxes))


class CoverSource:
    """Protocol for objects that can answer box-overlap queries.

    Implementations return the cover rectangles intersecting the probe
    rectangle (closed test).  The partition tree and the verifier's union
    index both provide this interface; a plain BoxList answers by scan.
    """

    def overlapping(self, qlo: Vec, qhi: Vec, tol: float = GEOM_TOL) -> list[Rect]:
        raise NotImplementedError
