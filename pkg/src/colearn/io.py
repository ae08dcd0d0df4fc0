"""JSON instance files and graph files (see docs/formats.md)."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .classes import HypothesisClass, from_descriptor
from .core import DataDistribution, Dataset
from .errors import InvalidInputError

FORMAT = "colearn-instance"
VERSION = 1


@dataclass
class InstanceFile:
    cls: HypothesisClass
    k: Optional[int] = None
    distributions: list = field(default_factory=list)
    datasets: list = field(default_factory=list)
    planted: Optional[dict] = None
    extra: dict = field(default_factory=dict)


def distribution_to_json(D: DataDistribution) -> list:
    return [[int(p), int(y), float(w)] for p, y, w in zip(D.points, D.labels, D.probs)]


def dataset_to_json(S: Dataset) -> list:
    return [[int(p), int(y)] for p, y in S]


def instance_to_json(inst: InstanceFile) -> dict:
    out = {"format": FORMAT, "version": VERSION, "class": inst.cls.descriptor()}
    if inst.k is not None:
        out["k"] = int(inst.k)
    if inst.distributions:
        out["distributions"] = [distribution_to_json(D) for D in inst.distributions]
    if inst.datasets:
        out["datasets"] = [dataset_to_json(S) for S in inst.datasets]
    if inst.planted is not None:
        out["planted"] = inst.planted
    out.update(inst.extra)
    return out


def instance_from_json(obj: dict) -> InstanceFile:
    if not isinstance(obj, dict) or obj.get("format") != FORMAT:
        raise InvalidInputError(f"not a {FORMAT} document")
    if obj.get("version") != VERSION:
        raise InvalidInputError(f"unsupported version {obj.get('version')!r}")
    if "class" not in obj:
        raise InvalidInputError("instance is missing its class descriptor")
    cls = from_descriptor(obj["class"])
    try:
        dists = [DataDistribution.from_support([tuple(t) for t in d]) for d in obj.get("distributions", [])]
        data = [Dataset.from_examples([tuple(e) for e in s]) for s in obj.get("datasets", [])]
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"malformed support or dataset: {exc}") from exc
    known = {"format", "version", "class", "k", "distributions", "datasets", "planted"}
    extra = {key: v for key, v in obj.items() if key not in known}
    return InstanceFile(cls, obj.get("k"), dists, data, obj.get("planted"), extra)


def load_instance(path: str) -> InstanceFile:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: invalid JSON ({exc})") from exc
    return instance_from_json(obj)


def dump_json(obj, path: Optional[str] = None) -> str:
    text = json.dumps(obj, indent=1, sort_keys=False) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def planted_to_file(inst) -> InstanceFile:
    planted = {
        "hypotheses": [h.labels.tolist() for h in inst.hypotheses],
        "assignment": [int(c) for c in inst.assignment],
        "noise": [float(x) for x in inst.noise],
        "mode": inst.mode,
    }
    return InstanceFile(inst.cls, inst.k, inst.distributions, [], planted)


def read_graph(text: str):
    """Parse a graph from JSON ``{"vertices", "edges"}``, DIMACS (``p edge`` / ``e``,
    1-based) or a plain 0-based ``u v`` edge list (``# vertices N`` sets the count)."""
    from .reductions import GraphInstance

    stripped = text.lstrip()
    if stripped.startswith("{"):
        obj = json.loads(stripped)
        return GraphInstance(int(obj["vertices"]), [tuple(e) for e in obj.get("edges", [])])
    n, edges, dimacs = None, [], False
    for raw in text.splitlines():
        parts = raw.split()
        if not parts or parts[0] == "c":
            continue
        if parts[0] == "#":
            if len(parts) >= 3 and parts[1] == "vertices":
                n = int(parts[2])
            continue
        if parts[0] == "p":
            dimacs, n = True, int(parts[2])
            continue
        if parts[0] == "e":
            edges.append((int(parts[1]) - 1, int(parts[2]) - 1))
            continue
        if len(parts) != 2:
            raise InvalidInputError(f"cannot parse graph line {raw!r}")
        edges.append((int(parts[0]), int(parts[1])))
    if n is None:
        n = max((max(e) for e in edges), default=-1) + 1
    return GraphInstance(n, edges)


def load_graph(path: str):
    with open(path) as fh:
        return read_graph(fh.read())


def graph_to_json(G) -> dict:
    return {"vertices": G.n, "edges": [list(e) for e in G.edges]}


def dimacs(n: int, edges) -> str:
    lines = [f"p edge {n} {len(edges)}"]
    lines += [f"e {u + 1} {v + 1}" for u, v in edges]
    return "\n".join(lines) + "\n"
