"""Dyadic subdivision tree over the state constraint set.

Each node owns a target box (the partition cell) plus the sample pair
nearest to its target center and the radius ``r = r_target + dist`` of the
sample-centered ball that is guaranteed to contain the cell.  Leaves carry a
membership label with respect to the live candidate set; interior nodes are
purely structural.

Subtree counters (total leaves / included leaves) are maintained on every
division and relabeling so that coverage queries can return one coarse
rectangle for any fully-included subtree instead of walking its leaves.

The tree is a single-writer structure: divisions and relabelings must be
serialized.  Read-only traversals (leaf enumeration, coverage probes) are
safe to run concurrently with each other, not with writes.
"""

from __future__ import annotations

import math
from enum import IntEnum
from itertools import product
from typing import Iterator, Sequence

from .dataset import Dataset
from .geometry import (
    Box,
    BoxList,
    GEOM_TOL,
    Rect,
    Vec,
    chebyshev,
    rects_intersect,
)


class Label(IntEnum):
    INCLUDED = 1
    EXCLUDED = 0
    UNKNOWN = -1


class TreeStructureError(ValueError):
    """Operation applied to a node whose role does not permit it."""


class LabelTransitionError(ValueError):
    """Attempted relabeling that would re-activate a retired leaf."""


class TreeNode:
    __slots__ = (
        "target_center",
        "target_radius",
        "lo",
        "hi",
        "sample_index",
        "sample_x",
        "sample_xp",
        "radius",
        "label",
        "parent",
        "children",
        "n_leaves",
        "n_active",
    )

    def __init__(
        self,
        target_center: Vec,
        target_radius: float,
        sample_index: int,
        sample_x: Vec,
        sample_xp: Vec,
        radius: float,
        parent: int,
    ):
        self.target_center = target_center
        self.target_radius = target_radius
        self.lo = tuple(c - target_radius for c in target_center)
        self.hi = tuple(c + target_radius for c in target_center)
        self.sample_index = sample_index
        self.sample_x = sample_x
        self.sample_xp = sample_xp
        self.radius = radius
        self.label = Label.INCLUDED
        self.parent = parent
        self.children: list[int] | None = None
        self.n_leaves = 1
        self.n_active = 1

    @property
    def is_leaf(self) -> bool:
        return self.children is None

    @property
    def x_plus(self) -> Vec:
        # Duck-typed alongside SamplePair for successor_box().
        return self.sample_xp

    def target_box(self) -> Box:
        return Box(self.target_center, self.target_radius)

    def sample_box(self) -> Box:
        return Box(self.sample_x, self.radius)


def _sign_vectors(n: int) -> tuple[tuple[float, ...], ...]:
    return tuple(product((-1.0, 1.0), repeat=n))


class PartitionTree:
    """Subdivision tree; nodes indexed by creation order in a flat list."""

    def __init__(self, dim: int):
        self.dim = dim
        self.nodes: list[TreeNode] = []
        self.roots: list[int] = []
        self.label_log: list[tuple[int | None, int, int, int]] = []
        self._signs = _sign_vectors(dim)

    def __len__(self) -> int:
        return len(self.nodes)

    # -- construction ---------------------------------------------------

    def _attach(self, node: TreeNode) -> int:
        idx = len(self.nodes)
        self.nodes.append(node)
        return idx

    def divide(self, node_id: int, dataset: Dataset) -> list[int]:
        """Split a live leaf into 2^n half-radius children.

        Child target centers sit at the parent's center offset by half the
        child radius along every sign pattern; each child picks the nearest
        dataset sample and records ``r = r_target + dist`` so the sample
        ball still contains the child cell.  Children start INCLUDED.
        """
        node = self.nodes[node_id]
        if not node.is_leaf:
            raise TreeStructureError(f"node {node_id} is not a leaf")
        if node.label is not Label.INCLUDED:
            raise TreeStructureError(
                f"node {node_id} is retired (label {int(node.label)}); "
                "only live partitions subdivide"
            )
        half = node.target_radius / 2.0
        children: list[int] = []
        for sign in self._signs:
            center = tuple(
                c + half * s for c, s in zip(node.target_center, sign)
            )
            j, pair, dist = dataset.nearest(center)
            child = TreeNode(
                target_center=center,
                target_radius=half,
                sample_index=j,
                sample_x=pair.x,
                sample_xp=pair.x_plus,
                radius=half + dist,
                parent=node_id,
            )
            children.append(self._attach(child))
        node.children = children
        # The divided cell's single leaf became 2^n included leaves.
        delta = len(children) - 1
        i = node_id
        while i >= 0:
            n = self.nodes[i]
            n.n_leaves += delta
            n.n_active += delta
            i = n.parent
        return children

    def set_label(self, node_id: int, label: Label | int, sweep: int | None = None) -> None:
        """Relabel a leaf.  Only INCLUDED -> {EXCLUDED, UNKNOWN} mutates;
        re-confirming the current label is a no-op; anything else is a
        re-activation attempt and is rejected."""
        label = Label(label)
        node = self.nodes[node_id]
        if not node.is_leaf:
            raise TreeStructureError(f"node {node_id} is not a leaf")
        if label is node.label:
            return
        if node.label is not Label.INCLUDED:
            raise LabelTransitionError(
                f"leaf {node_id} is {node.label.name} and cannot become {label.name}"
            )
        old = node.label
        node.label = label
        self.label_log.append((sweep, node_id, int(old), int(label)))
        i = node_id
        while i >= 0:
            n = self.nodes[i]
            n.n_active -= 1
            i = n.parent

    # -- queries ---------------------------------------------------------

    def iter_leaves(self) -> Iterator[int]:
        """All leaves in depth-first creation order."""
        stack = list(reversed(self.roots))
        nodes = self.nodes
        while stack:
            i = stack.pop()
            node = nodes[i]
            if node.children is None:
                yield i
            else:
                stack.extend(reversed(node.children))

    def active_leaves(self) -> list[int]:
        return [i for i in self.iter_leaves() if self.nodes[i].label is Label.INCLUDED]

    def candidate_set(self) -> BoxList:
        """Union of target boxes of included leaves (disjoint interiors)."""
        return BoxList(
            tuple(self.nodes[i].target_box() for i in self.active_leaves())
        )

    def active_volume(self) -> float:
        n = self.dim
        return math.fsum(
            (2.0 * self.nodes[i].target_radius) ** n for i in self.active_leaves()
        )

    def leaf_counts(self) -> dict[str, int]:
        counts = {"included": 0, "excluded": 0, "unknown": 0}
        for i in self.iter_leaves():
            label = self.nodes[i].label
            if label is Label.INCLUDED:
                counts["included"] += 1
            elif label is Label.EXCLUDED:
                counts["excluded"] += 1
            else:
                counts["unknown"] += 1
        return counts

    def min_root_radius(self) -> float:
        return min(self.nodes[i].target_radius for i in self.roots)

    def overlapping(self, qlo: Vec, qhi: Vec, tol: float = GEOM_TOL) -> list[Rect]:
        """Target rectangles of included leaves meeting the probe rectangle.

        A subtree whose leaves are all included is reported as its single
        ancestor rectangle, which keeps queries deep inside the candidate
        set cheap regardless of how finely the fringe is subdivided.
        """
        out: list[Rect] = []
        nodes = self.nodes
        stack = list(reversed(self.roots))
        while stack:
            i = stack.pop()
            node = nodes[i]
            if node.n_active == 0:
                continue
            if not rects_intersect(node.lo, node.hi, qlo, qhi, tol):
                continue
            if node.n_active == node.n_leaves:
                out.append((node.lo, node.hi))
                continue
            stack.extend(reversed(node.children))
        return out


def new_tree(domain: BoxList | Sequence[Box], dataset: Dataset) -> PartitionTree:
    """Fresh tree: one INCLUDED root per domain box.

    Domain boxes must have pairwise-disjoint interiors so the leaf cells
    tile the domain at every moment.
    """
    boxes = tuple(domain)
    if not boxes:
        raise ValueError("domain must contain at least one box")
    if len(dataset) < 1:
        raise ValueError("dataset must be nonempty")
    dim = boxes[0].dim
    if dataset.dim != dim:
        raise ValueError(f"dataset dim {dataset.dim} does not match domain dim {dim}")
    for a in range(len(boxes)):
        for b in range(a + 1, len(boxes)):
            (alo, ahi), (blo, bhi) = boxes[a].rect(), boxes[b].rect()
            if all(
                min(ah, bh) - max(al, bl) > GEOM_TOL
                for al, ah, bl, bh in zip(alo, ahi, blo, bhi)
            ):
                raise ValueError(f"domain boxes {a} and {b} have overlapping interiors")
    tree = PartitionTree(dim)
    for box in boxes:
        j, pair, dist = dataset.nearest(box.center)
        root = TreeNode(
            target_center=box.center,
            target_radius=box.radius,
            sample_index=j,
            sample_x=pair.x,
            sample_xp=pair.x_plus,
            radius=box.radius + dist,
            parent=-1,
        )
        tree.roots.append(tree._attach(root))
    return tree


def divide_node(tree: PartitionTree, node_id: int, dataset: Dataset) -> list[int]:
    return tree.divide(node_id, dataset)


def leaves_active(tree: PartitionTree) -> list[int]:
    return tree.active_leaves()


def candidate_set(tree: PartitionTree) -> BoxList:
    return tree.candidate_set()


def set_label(tree: PartitionTree, node_id: int, label: Label | int, sweep: int | None = None) -> None:
    tree.set_label(node_id, label, sweep)


def sample_ball_contains_cell(node: TreeNode, tol: float = GEOM_TOL) -> bool:
    """Check ``r >= r_target + dist(center, sample)``, which guarantees the
    sample-centered ball contains the node's target cell."""
    return (
        node.radius + tol
        >= node.target_radius + chebyshev(node.target_center, node.sample_x)
    )
