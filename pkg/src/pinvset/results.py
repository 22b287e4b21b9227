"""Result-file schema: one self-describing JSON document per run.

Sections: manifest (provenance), config, domain, tree (flat node table),
pi_set, volume/sweeps/leaf_counts/terminated_by, certificate.  The node
table stores everything the independent verifier needs (target geometry,
sample state and successor, ball radius, label), so a result file can be
re-certified without the dataset.  Serialization round-trips exactly: JSON
numbers are emitted via repr and parsed back to the same floats.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .geometry import Box, BoxList
from .synthesis import SynthConfig, SynthResult, Termination, UpdateMode
from .tree import Label, PartitionTree, TreeNode
from .verify import Certificate


class ResultFormatError(ValueError):
    """Result document is missing sections or malformed."""


@dataclass
class RunManifest:
    command: str
    version: str = __version__
    dataset_sha256: str | None = None
    dataset_meta: dict = field(default_factory=dict)
    seed: int | None = None
    duration_s: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunManifest":
        return cls(
            command=d.get("command", ""),
            version=d.get("version", ""),
            dataset_sha256=d.get("dataset_sha256"),
            dataset_meta=d.get("dataset_meta", {}) or {},
            seed=d.get("seed"),
            duration_s=d.get("duration_s", 0.0),
        )


def file_sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _boxlist_to_dict(boxes: BoxList) -> dict:
    return {
        "centers": [list(b.center) for b in boxes],
        "radii": [b.radius for b in boxes],
    }


def _boxlist_from_dict(d: dict) -> BoxList:
    return BoxList(
        tuple(Box(tuple(c), r) for c, r in zip(d["centers"], d["radii"]))
    )


def _tree_to_dict(tree: PartitionTree) -> dict:
    nodes = tree.nodes
    return {
        "dim": tree.dim,
        "parent": [n.parent for n in nodes],
        "target_center": [list(n.target_center) for n in nodes],
        "target_radius": [n.target_radius for n in nodes],
        "radius": [n.radius for n in nodes],
        "sample_index": [n.sample_index for n in nodes],
        "sample_x": [list(n.sample_x) for n in nodes],
        "sample_xp": [list(n.sample_xp) for n in nodes],
        "label": [int(n.label) for n in nodes],
    }


def _tree_from_dict(d: dict) -> PartitionTree:
    tree = PartitionTree(int(d["dim"]))
    count = len(d["parent"])
    for i in range(count):
        node = TreeNode(
            target_center=tuple(d["target_center"][i]),
            target_radius=float(d["target_radius"][i]),
            sample_index=int(d["sample_index"][i]),
            sample_x=tuple(d["sample_x"][i]),
            sample_xp=tuple(d["sample_xp"][i]),
            radius=float(d["radius"][i]),
            parent=int(d["parent"][i]),
        )
        node.label = Label(int(d["label"][i]))
        tree.nodes.append(node)
        if node.parent < 0:
            tree.roots.append(i)
        else:
            parent = tree.nodes[node.parent]
            if parent.children is None:
                parent.children = []
            parent.children.append(i)
    # Children precede nothing: parents always have smaller indices, so a
    # reverse pass rebuilds the subtree counters bottom-up.
    for i in range(count - 1, -1, -1):
        node = tree.nodes[i]
        if node.children is None:
            node.n_leaves = 1
            node.n_active = 1 if node.label is Label.INCLUDED else 0
        else:
            node.n_leaves = sum(tree.nodes[c].n_leaves for c in node.children)
            node.n_active = sum(tree.nodes[c].n_active for c in node.children)
    return tree


def _certificate_to_dict(cert: Certificate | None) -> dict | None:
    if cert is None:
        return None
    return {
        "method": cert.method,
        "passed": cert.passed,
        "checked_leaves": cert.checked_leaves,
        "first_failure": cert.first_failure,
    }


def _certificate_from_dict(d: dict | None) -> Certificate | None:
    if d is None:
        return None
    return Certificate(
        passed=bool(d["passed"]),
        checked_leaves=int(d["checked_leaves"]),
        first_failure=d.get("first_failure"),
        method=d.get("method", "exact-coverage"),
    )


def result_to_document(
    result: SynthResult,
    manifest: RunManifest,
    certificate: Certificate | None = None,
) -> dict:
    tree = result.tree
    domain = BoxList(tuple(tree.nodes[i].target_box() for i in tree.roots))
    return {
        "manifest": manifest.to_dict(),
        "config": {
            "lipschitz": result.config.lipschitz,
            "tau": result.config.tau,
            "max_sweeps": result.config.max_sweeps,
            "update_mode": result.config.mode.value,
        },
        "domain": _boxlist_to_dict(domain),
        "tree": _tree_to_dict(tree),
        "pi_set": _boxlist_to_dict(result.pi_set),
        "volume": result.volume,
        "sweeps": result.sweeps,
        "terminated_by": result.terminated_by.value,
        "leaf_counts": result.leaf_counts,
        "certificate": _certificate_to_dict(certificate),
    }


def result_from_document(doc: dict) -> tuple[RunManifest, SynthResult, Certificate | None]:
    try:
        manifest = RunManifest.from_dict(doc["manifest"])
        cfg = doc["config"]
        config = SynthConfig(
            lipschitz=float(cfg["lipschitz"]),
            tau=float(cfg["tau"]),
            max_sweeps=int(cfg["max_sweeps"]),
            mode=UpdateMode(cfg["update_mode"]),
        )
        tree = _tree_from_dict(doc["tree"])
        result = SynthResult(
            tree=tree,
            pi_set=_boxlist_from_dict(doc["pi_set"]),
            volume=float(doc["volume"]),
            sweeps=int(doc["sweeps"]),
            leaf_counts=dict(doc["leaf_counts"]),
            terminated_by=Termination(doc["terminated_by"]),
            config=config,
        )
        certificate = _certificate_from_dict(doc.get("certificate"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ResultFormatError(f"malformed result document: {exc}") from exc
    return manifest, result, certificate


def save_result(
    path: str | Path,
    result: SynthResult,
    manifest: RunManifest,
    certificate: Certificate | None = None,
) -> None:
    doc = result_to_document(result, manifest, certificate)
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_result(path: str | Path) -> tuple[RunManifest, SynthResult, Certificate | None]:
    try:
        with Path(path).open("r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ResultFormatError(f"{path}: invalid JSON: {exc}") from exc
    return result_from_document(doc)
