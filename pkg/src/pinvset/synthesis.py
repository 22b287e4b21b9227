"""Fixpoint refinement of the candidate invariant set.

Each sweep visits every leaf that was included when the sweep started, in
depth-first order, and classifies the Lipschitz successor box of its sample
against the candidate set:

  fully covered  -> the leaf stays included,
  disjoint       -> the leaf is excluded (its cell provably escapes),
  partial        -> the cell is split while the resolution floor allows,
                    otherwise marked unknown and dropped from the candidate.

Children created by a split join the same sweep's work queue.  The loop
terminates at the first sweep that changes nothing; the surviving union is
then self-mapping and hence positively invariant (re-checked independently
by the verifier).
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from enum import Enum

from .dataset import Dataset
from .geometry import Box, BoxList, CoverageClass, classify_coverage
from .tree import Label, PartitionTree, TreeNode

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Synthesis configuration failed validation."""


class UpdateMode(Enum):
    SEQUENTIAL = "sequential"
    BATCH = "batch"


class Termination(Enum):
    FIXPOINT = "fixpoint"
    SAFEGUARD = "safeguard"


@dataclass(frozen=True)
class SynthConfig:
    lipschitz: float
    tau: float
    max_sweeps: int = 10000
    mode: UpdateMode = UpdateMode.SEQUENTIAL

    def validate(self) -> None:
        if self.lipschitz <= 0.0:
            raise ConfigError(f"Lipschitz bound must be positive, got {self.lipschitz}")
        if self.tau <= 0.0:
            raise ConfigError(f"resolution floor must be positive, got {self.tau}")
        if self.max_sweeps < 1:
            raise ConfigError(f"max_sweeps must be >= 1, got {self.max_sweeps}")


@dataclass
class SweepStats:
    changed: bool
    divisions: int
    exclusions: int
    unknowns: int


@dataclass
class SynthResult:
    tree: PartitionTree
    pi_set: BoxList
    volume: float
    sweeps: int
    leaf_counts: dict[str, int]
    terminated_by: Termination
    config: SynthConfig


def classify_leaf(leaf: TreeNode, candidate, lipschitz: float) -> CoverageClass:
    """Classify the successor box of a live leaf against the candidate set."""
    if leaf.label is not Label.INCLUDED:
        raise ValueError("classify_leaf expects an included leaf")
    return classify_coverage(Box(leaf.sample_xp, lipschitz * leaf.radius), candidate)


def sweep(
    tree: PartitionTree,
    dataset: Dataset,
    config: SynthConfig,
    sweep_index: int | None = None,
) -> SweepStats:
    """One pass over the included leaves present at sweep start.

    Sequential mode applies exclusions immediately, so later
    classifications within the sweep see the already-shrunken candidate.
    Batch mode defers all label changes to the end of the sweep; because
    splits preserve the covered union exactly, every classification in a
    batch sweep sees the sweep-start geometry.
    """
    batch = config.mode is UpdateMode.BATCH
    queue: deque[int] = deque(tree.active_leaves())
    pending: list[tuple[int, Label]] = []
    divisions = exclusions = unknowns = 0
    nodes = tree.nodes
    lipschitz = config.lipschitz
    tau = config.tau
    while queue:
        i = queue.popleft()
        node = nodes[i]
        verdict = classify_coverage(
            Box(node.sample_xp, lipschitz * node.radius), tree
        )
        if verdict is CoverageClass.FULLY_COVERED:
            continue
        if verdict is CoverageClass.DISJOINT:
            if batch:
                pending.append((i, Label.EXCLUDED))
            else:
                tree.set_label(i, Label.EXCLUDED, sweep_index)
            exclusions += 1
        elif node.target_radius / 2.0 >= tau:
            queue.extend(tree.divide(i, dataset))
            divisions += 1
        else:
            if batch:
                pending.append((i, Label.UNKNOWN))
            else:
                tree.set_label(i, Label.UNKNOWN, sweep_index)
            unknowns += 1
    for i, label in pending:
        tree.set_label(i, label, sweep_index)
    changed = bool(divisions or exclusions or unknowns)
    return SweepStats(changed, divisions, exclusions, unknowns)


def synthesize(tree: PartitionTree, dataset: Dataset, config: SynthConfig) -> SynthResult:
    """Run sweeps until the candidate set stabilizes or the safeguard trips.

    The candidate can only lose volume (splits are volume-neutral), and the
    resolution floor bounds the number of splits, so a fixpoint is reached
    after finitely many sweeps; max_sweeps is a defensive backstop far above
    any reachable sweep count.
    """
    config.validate()
    if config.tau > tree.min_root_radius():
        raise ConfigError(
            f"resolution floor {config.tau} exceeds the smallest root radius "
            f"{tree.min_root_radius()}"
        )
    terminated = Termination.SAFEGUARD
    sweeps = config.max_sweeps
    for z in range(1, config.max_sweeps + 1):
        stats = sweep(tree, dataset, config, z)
        logger.info(
            "sweep=%d active=%d divisions=%d exclusions=%d unknowns=%d volume=%.12g",
            z,
            len(tree.active_leaves()),
            stats.divisions,
            stats.exclusions,
            stats.unknowns,
            tree.active_volume(),
        )
        if not stats.changed:
            terminated = Termination.FIXPOINT
            sweeps = z
            break
    pi_set = tree.candidate_set()
    return SynthResult(
        tree=tree,
        pi_set=pi_set,
        volume=pi_set.volume(),
        sweeps=sweeps,
        leaf_counts=tree.leaf_counts(),
        terminated_by=terminated,
        config=config,
    )
