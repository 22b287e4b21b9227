"""Shared test utilities: lattice-snapped coverage instances.

Instances are built on a coarse lattice so every covered or uncovered
region is a union of full lattice cells, and covers that merely touch the
query (zero-volume contact, where the exact classifier and a point-sampling
oracle legitimately differ) are resampled away.  The result: geometric
margins all exceed the raster cell, so oracle agreement must be exact.
"""

from __future__ import annotations

import numpy as np

from pinvset.geometry import Box, BoxList

LATTICE_PITCH = 0.25
RASTER_CELL = LATTICE_PITCH / 8.0


def _lattice_cube(rng: np.random.Generator, n: int, min_cells: int, max_cells: int, span: int) -> Box:
    w = int(rng.integers(min_cells, max_cells + 1))
    lo = [int(rng.integers(-span, span - w + 1)) for _ in range(n)]
    center = tuple((l + w / 2.0) * LATTICE_PITCH for l in lo)
    return Box(center, w * LATTICE_PITCH / 2.0)


def _touches_without_overlap(query: Box, cover: Box) -> bool:
    (qlo, qhi), (clo, chi) = query.rect(), cover.rect()
    overlaps = [min(qh, ch) - max(ql, cl) for ql, qh, cl, ch in zip(qlo, qhi, clo, chi)]
    return min(overlaps) == 0.0


def margin_separated_instance(rng: np.random.Generator, n: int) -> tuple[Box, BoxList]:
    """A query cube and a cover union whose boundaries never just touch."""
    query = _lattice_cube(rng, n, 2, 4, span=4)
    covers = []
    for _ in range(int(rng.integers(1, 9))):
        while True:
            cover = _lattice_cube(rng, n, 1, 4, span=5)
            if not _touches_without_overlap(query, cover):
                covers.append(cover)
                break
    return query, BoxList(tuple(covers))
