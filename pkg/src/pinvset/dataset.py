"""Pre-collected state/successor data: ingestion, generation, NN queries.

A dataset is an ordered list of (state, successor) pairs with an exact
max-norm nearest-neighbor index over the states.  Exactness matters: the NN
distance feeds directly into the certificate radii, so the index expands
grid rings until no closer point can exist and breaks ties by lowest index.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .geometry import (
    Box,
    BoxList,
    DimensionMismatchError,
    Vec,
    chebyshev,
)

logger = logging.getLogger(__name__)


class DatasetError(Exception):
    """Base class for dataset ingestion failures."""


class EmptyDatasetError(DatasetError):
    """No usable sample pairs."""


class MalformedRowError(DatasetError):
    """A data row could not be parsed into 2n numbers."""


class UnknownSystemError(DatasetError):
    """No builtin system registered under the requested name."""


class SamplePair(NamedTuple):
    x: Vec
    x_plus: Vec


@dataclass(frozen=True)
class SystemOracle:
    """A named state-transition map with a max-norm Lipschitz bound.

    ``step`` maps one state to its successor; ``step_many`` (optional) maps
    an (N, n) array of states at once.  The Lipschitz bound is trusted
    input, not estimated.
    """

    name: str
    step: Callable[[Vec], Vec]
    lipschitz: float
    domain: BoxList
    step_many: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, x: Sequence[float]) -> Vec:
        return tuple(float(v) for v in self.step(tuple(float(c) for c in x)))

    def map_points(self, pts: np.ndarray) -> np.ndarray:
        if self.step_many is not None:
            return np.asarray(self.step_many(np.asarray(pts, dtype=float)), dtype=float)
        return np.array([self.step(tuple(p)) for p in np.asarray(pts, dtype=float)])


def linear2d() -> SystemOracle:
    a11, a12 = 0.2200, 0.4013
    a21, a22 = -0.5364, 0.2109

    def step(x: Vec) -> Vec:
        return (a11 * x[0] + a12 * x[1], a21 * x[0] + a22 * x[1])

    def step_many(pts: np.ndarray) -> np.ndarray:
        a = np.array([[a11, a12], [a21, a22]])
        return pts @ a.T

    domain = BoxList((Box((0.375, -0.375), 0.625),))  # [-0.25,1] x [-1,0.25]
    return SystemOracle("linear2d", step, 0.8225, domain, step_many)


def nonlinear2d() -> SystemOracle:
    def step(x: Vec) -> Vec:
        x1, x2 = x
        return (0.5 * x1 - 0.7 * x2 * x2, 0.9 * x2 ** 3 + x1 * x2)

    def step_many(pts: np.ndarray) -> np.ndarray:
        x1, x2 = pts[:, 0], pts[:, 1]
        return np.column_stack((0.5 * x1 - 0.7 * x2 ** 2, 0.9 * x2 ** 3 + x1 * x2))

    domain = BoxList((Box((0.0, 0.0), 1.0),))  # [-1,1]^2
    return SystemOracle("nonlinear2d", step, 5.728, domain, step_many)


SYSTEMS: dict[str, Callable[[], SystemOracle]] = {
    "linear2d": linear2d,
    "nonlinear2d": nonlinear2d,
}


def get_system(name: str) -> SystemOracle:
    try:
        return SYSTEMS[name]()
    except KeyError:
        raise UnknownSystemError(
            f"unknown system {name!r}; available: {sorted(SYSTEMS)}"
        ) from None


def tabulated_oracle(
    pairs: Sequence[SamplePair],
    lipschitz: float,
    domain: BoxList,
    name: str = "tabulated",
) -> SystemOracle:
    """Oracle backed by an explicit table; defined only at tabulated states."""
    table = {p.x: p.x_plus for p in pairs}

    def step(x: Vec) -> Vec:
        try:
            return table[x]
        except KeyError:
            raise DatasetError(f"state {x} is not tabulated") from None

    return SystemOracle(name, step, lipschitz, domain)


class Dataset:
    """Ordered sample pairs with an exact max-norm NN index.

    The index buckets states into a uniform square grid and answers queries
    by ring expansion: ring k is scanned while (k-1)*cell_width can still
    hold a point at or under the best distance found, which also preserves
    lowest-index tie-breaking.  A linear scan (``nearest_linear``) is kept
    as the reference implementation.
    """

    def __init__(self, pairs: Sequence[SamplePair], metadata: dict | None = None):
        pairs = [SamplePair(tuple(map(float, p.x)), tuple(map(float, p.x_plus))) for p in pairs]
        if not pairs:
            raise EmptyDatasetError("dataset must contain at least one sample pair")
        dim = len(pairs[0].x)
        for j, p in enumerate(pairs):
            if len(p.x) != dim or len(p.x_plus) != dim:
                raise DimensionMismatchError(
                    f"row {j} has dims ({len(p.x)}, {len(p.x_plus)}), expected {dim}"
                )
        self.pairs: list[SamplePair] = pairs
        self.dim = dim
        self.metadata: dict = dict(metadata or {})
        self._xs = np.array([p.x for p in pairs], dtype=float)
        self._build_index()

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def m(self) -> int:
        return len(self.pairs)

    def _build_index(self) -> None:
        xs = self._xs
        lo = xs.min(axis=0)
        hi = xs.max(axis=0)
        extent = float((hi - lo).max())
        cells_per_dim = max(1, int(round(len(xs) ** (1.0 / self.dim))))
        cell = extent / cells_per_dim if extent > 0 else 1.0
        self._grid_lo = lo
        self._cell = cell
        keys = np.floor((xs - lo) / cell).astype(np.int64)
        buckets: dict[tuple[int, ...], list[int]] = {}
        for j, key in enumerate(map(tuple, keys)):
            buckets.setdefault(key, []).append(j)
        self._buckets = buckets
        self._key_lo = tuple(int(v) for v in keys.min(axis=0))
        self._key_hi = tuple(int(v) for v in keys.max(axis=0))

    def _ring_keys(self, center: tuple[int, ...], k: int):
        n = self.dim
        klo, khi = self._key_lo, self._key_hi
        if k == 0:
            if all(klo[d] <= center[d] <= khi[d] for d in range(n)):
                yield center
            return
        # Cells at Chebyshev index-distance exactly k: for each dimension d,
        # fix offset_d = +-k and let earlier dims range over [-k, k], later
        # dims over [-(k-1), k-1] so no cell is produced twice.
        for d in range(n):
            for sign in (-k, k):
                ranges = []
                for j in range(n):
                    if j == d:
                        ranges.append((sign, sign))
                    elif j < d:
                        ranges.append((-k, k))
                    else:
                        ranges.append((-(k - 1), k - 1))
                idx = []
                for j, (a, b) in enumerate(ranges):
                    a = max(a, klo[j] - center[j])
                    b = min(b, khi[j] - center[j])
                    if a > b:
                        idx = None
                        break
                    idx.append(range(a, b + 1))
                if idx is None:
                    continue
                cur = [r.start for r in idx]
                while True:
                    yield tuple(center[j] + cur[j] for j in range(n))
                    j = n - 1
                    while j >= 0:
                        cur[j] += 1
                        if cur[j] < idx[j].stop:
                            break
                        cur[j] = idx[j].start
                        j -= 1
                    if j < 0:
                        break

    def nearest(self, q: Sequence[float]) -> tuple[int, SamplePair, float]:
        """Exact max-norm nearest neighbor, lowest index on ties."""
        if len(q) != self.dim:
            raise DimensionMismatchError(
                f"query dim {len(q)} does not match dataset dim {self.dim}"
            )
        q = tuple(float(v) for v in q)
        cell = self._cell
        center = tuple(
            int(math.floor((q[d] - self._grid_lo[d]) / cell)) for d in range(self.dim)
        )
        best_d = math.inf
        best_i = -1
        xs = self.pairs
        # Ring index beyond which every occupied cell has been visited.
        max_ring = 0
        for d in range(self.dim):
            max_ring = max(
                max_ring, center[d] - self._key_lo[d], self._key_hi[d] - center[d]
            )
        k = 0
        while True:
            if best_i >= 0 and (k - 1) * cell > best_d:
                break
            if k > max_ring:
                break
            for key in self._ring_keys(center, k):
                for j in self._buckets.get(key, ()):
                    x = xs[j].x
                    d = 0.0
                    for a, b in zip(q, x):
                        v = a - b if a >= b else b - a
                        if v > d:
                            d = v
                    if d < best_d or (d == best_d and j < best_i):
                        best_d = d
                        best_i = j
            k += 1
        return best_i, xs[best_i], best_d

    def nearest_linear(self, q: Sequence[float]) -> tuple[int, SamplePair, float]:
        """Reference linear scan with the same exact tie rule."""
        if len(q) != self.dim:
            raise DimensionMismatchError(
                f"query dim {len(q)} does not match dataset dim {self.dim}"
            )
        best_d = math.inf
        best_i = -1
        for j, p in enumerate(self.pairs):
            d = chebyshev(q, p.x)
            if d < best_d:
                best_d = d
                best_i = j
        return best_i, self.pairs[best_i], best_d


def nearest(dataset: Dataset, q: Sequence[float]) -> tuple[int, SamplePair, float]:
    return dataset.nearest(q)


def gen_uniform(
    oracle: SystemOracle,
    m: int,
    seed: int,
    domain: BoxList | None = None,
) -> Dataset:
    """M states drawn i.i.d. uniform over the domain, successors via the map."""
    if m < 1:
        raise ValueError(f"sample count must be >= 1, got {m}")
    domain = domain if domain is not None else oracle.domain
    rng = np.random.default_rng(seed)
    rects = [b.rect() for b in domain]
    los = np.array([r[0] for r in rects])
    his = np.array([r[1] for r in rects])
    if len(rects) == 1:
        pts = rng.uniform(los[0], his[0], size=(m, len(los[0])))
    else:
        vols = np.array([b.volume() for b in domain])
        choice = rng.choice(len(rects), size=m, p=vols / vols.sum())
        pts = rng.uniform(los[choice], his[choice])
    succ = oracle.map_points(pts)
    pairs = [SamplePair(tuple(x), tuple(xp)) for x, xp in zip(pts, succ)]
    meta = {
        "system": oracle.name,
        "mode": "uniform",
        "m": m,
        "seed": seed,
        "lipschitz": oracle.lipschitz,
    }
    return Dataset(pairs, meta)


def dyadic_grid_points(domain: BoxList, tau: float) -> list[Vec]:
    """Every subdivision-center the partition tree can request, per root box.

    Level 0 is the root center; level l >= 1 exists when the level's target
    radius ``root_radius / 2**l`` is still at least tau (a node divides only
    while its children stay at or above the resolution floor).
    """
    if tau <= 0.0:
        raise ValueError(f"resolution floor must be positive, got {tau}")
    points: list[Vec] = []
    for box in domain:
        n = box.dim
        lo, _ = box.rect()
        level = 0
        while True:
            radius = box.radius / (2 ** level)
            if level > 0 and radius < tau:
                break
            per_dim = [
                [lo[d] + (2 * i + 1) * radius for i in range(2 ** level)]
                for d in range(n)
            ]
            idx = [0] * n
            while True:
                points.append(tuple(per_dim[d][idx[d]] for d in range(n)))
                d = n - 1
                while d >= 0:
                    idx[d] += 1
                    if idx[d] < len(per_dim[d]):
                        break
                    idx[d] = 0
                    d -= 1
                if d < 0:
                    break
            level += 1
    return points


def gen_dyadic_grid(
    oracle: SystemOracle,
    tau: float,
    domain: BoxList | None = None,
) -> Dataset:
    """Deterministic dataset placing a sample at every dyadic target center.

    With this data every division finds a sample exactly at the requested
    center, so partition radii collapse to the target radii.
    """
    domain = domain if domain is not None else oracle.domain
    pts = dyadic_grid_points(domain, tau)
    pairs = [SamplePair(x, oracle(x)) for x in pts]
    meta = {
        "system": oracle.name,
        "mode": "grid",
        "m": len(pairs),
        "tau": tau,
        "lipschitz": oracle.lipschitz,
    }
    return Dataset(pairs, meta)


def _parse_meta_value(raw: str):
    try:
        v = float(raw)
    except ValueError:
        return raw
    if v.is_integer() and ("." not in raw and "e" not in raw.lower()):
        return int(v)
    return v


def load_dataset(
    path: str | Path,
    dim: int | None = None,
    domain: BoxList | None = None,
) -> Dataset:
    """Read sample pairs from CSV.

    Rows are ``x_1,..,x_n,xp_1,..,xp_n``; '#' lines are comments and may
    carry ``key=value`` metadata; an optional non-numeric header row is
    skipped.  Rows whose state falls outside the declared domain are
    dropped with a warning (out-of-domain anchors would still be sound but
    break the sample-count accounting).
    """
    path = Path(path)
    pairs: list[SamplePair] = []
    metadata: dict = {}
    rejected: list[int] = []
    expected_cols = 2 * dim if dim is not None else None
    header_allowed = True
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for token in line[1:].split():
                    if "=" in token:
                        k, _, v = token.partition("=")
                        metadata[k.strip()] = _parse_meta_value(v.strip())
                continue
            cells = [c.strip() for c in line.split(",")]
            try:
                values = [float(c) for c in cells]
            except ValueError:
                if header_allowed:
                    header_allowed = False
                    continue
                raise MalformedRowError(
                    f"{path}:{lineno}: non-numeric cell in data row"
                ) from None
            header_allowed = False
            if expected_cols is None:
                if len(values) % 2 != 0:
                    raise MalformedRowError(
                        f"{path}:{lineno}: odd column count {len(values)}"
                    )
                expected_cols = len(values)
            if len(values) != expected_cols:
                raise DimensionMismatchError(
                    f"{path}:{lineno}: {len(values)} columns, expected {expected_cols}"
                )
            n = expected_cols // 2
            x = tuple(values[:n])
            xp = tuple(values[n:])
            if domain is not None and not domain.contains_point(x):
                rejected.append(lineno)
                continue
            pairs.append(SamplePair(x, xp))
    if rejected:
        logger.warning(
            "dropped %d out-of-domain rows from %s (lines %s%s)",
            len(rejected),
            path,
            ", ".join(map(str, rejected[:10])),
            ", ..." if len(rejected) > 10 else "",
        )
    if not pairs:
        raise EmptyDatasetError(f"{path}: no data rows")
    return Dataset(pairs, metadata)


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    """Write CSV with metadata comment lines; floats keep full precision."""
    path = Path(path)
    n = dataset.dim
    with path.open("w", encoding="utf-8") as fh:
        if dataset.metadata:
            fh.write(
                "# " + " ".join(f"{k}={v}" for k, v in dataset.metadata.items()) + "\n"
            )
        header = [f"x{d + 1}" for d in range(n)] + [f"xp{d + 1}" for d in range(n)]
        fh.write(",".join(header) + "\n")
        for p in dataset.pairs:
            fh.write(",".join(repr(v) for v in (*p.x, *p.x_plus)) + "\n")
