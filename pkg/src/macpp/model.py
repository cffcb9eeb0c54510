"""Structural roles of taxa and the parameter vector."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .errors import CycleError, GraphError


class Role(str, Enum):
    PARENT = "parent"        # parent-only homogeneous Poisson process
    OFFSPRING = "offspring"  # clusters around the points of its parent taxon
    UNRELATED = "unrelated"  # homogeneous Poisson, outside any arrangement


@dataclass(frozen=True)
class ModelGraph:
    """Role of each taxon plus the offspring -> parent map.

    ``taxa`` gives the declaration order, which fixes the parameter order
    and the tie-breaking of :func:`topo_order`.
    """

    taxa: tuple[str, ...]
    roles: dict
    parent_of: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "taxa", tuple(self.taxa))
        object.__setattr__(self, "roles", {t: Role(r) for t, r in self.roles.items()})
        object.__setattr__(self, "parent_of", dict(self.parent_of))

    def __hash__(self):
        return hash((self.taxa, tuple(sorted(self.roles.items())), tuple(sorted(self.parent_of.items()))))

    def with_role(self, role: Role) -> list[str]:
        return [t for t in self.taxa if self.roles.get(t) == role]

    @property
    def parents(self) -> list[str]:
        return self.with_role(Role.PARENT)

    @property
    def offspring(self) -> list[str]:
        return self.with_role(Role.OFFSPRING)

    @property
    def unrelated(self) -> list[str]:
        return self.with_role(Role.UNRELATED)

    def children_of(self, taxon: str) -> list[str]:
        return [t for t in self.offspring if self.parent_of.get(t) == taxon]

    def to_dict(self) -> list[dict]:
        out = []
        for t in self.taxa:
            entry = {"name": t, "role": self.roles[t].value}
            if t in self.parent_of:
                entry["parent"] = self.parent_of[t]
            out.append(entry)
        return out

    @classmethod
    def from_dict(cls, entries: list[dict]) -> "ModelGraph":
        taxa = [e["name"] for e in entries]
        roles = {e["name"]: e["role"] for e in entries}
        parent_of = {e["name"]: e["parent"] for e in entries if "parent" in e}
        return cls(tuple(taxa), roles, parent_of)

    def relabel(self, mapping: dict) -> "ModelGraph":
        m = lambda t: mapping.get(t, t)  # noqa: E731
        return ModelGraph(tuple(m(t) for t in self.taxa),
                          {m(t): r for t, r in self.roles.items()},
                          {m(k): m(v) for k, v in self.parent_of.items()})


def _find_cycles(graph: ModelGraph) -> list[list[str]]:
    cycles, seen = [], set()
    for start in graph.offspring:
        path, node = [], start
        while node in graph.parent_of and node not in seen and node not in path:
            path.append(node)
            node = graph.parent_of[node]
        if node in path:
            cyc = path[path.index(node):]
            key = frozenset(cyc)
            if key not in {frozenset(c) for c in cycles}:
                cycles.append(cyc)
        seen.update(path)
    return cycles


def validate(graph: ModelGraph) -> list[str]:
    """Return every structural violation; an empty list means the graph is usable."""
    problems = []
    if len(set(graph.taxa)) != len(graph.taxa):
        problems.append("duplicate taxon names")
    for t in graph.taxa:
        if not t:
            problems.append("empty taxon name")
        if t not in graph.roles:
            problems.append(f"taxon {t!r} has no role")
    for t in graph.roles:
        if t not in graph.taxa:
            problems.append(f"role given for undeclared taxon {t!r}")
    for t in graph.offspring:
        if t not in graph.parent_of:
            problems.append(f"offspring {t!r} has no parent")
    for child, parent in graph.parent_of.items():
        role = graph.roles.get(child)
        if role != Role.OFFSPRING:
            problems.append(f"{child!r} has a parent but its role is {role.value if role else 'undeclared'}")
            continue
        prole = graph.roles.get(parent)
        if prole is None:
            problems.append(f"parent {parent!r} of {child!r} is not a declared taxon")
        elif prole == Role.UNRELATED:
            problems.append(f"parent {parent!r} of {child!r} is an unrelated taxon")
        elif parent == child:
            problems.append(f"{child!r} is its own parent")
    for cyc in _find_cycles(graph):
        if len(cyc) > 1:
            problems.append("parent cycle: " + " <- ".join(cyc + [cyc[0]]))
    return problems


def check(graph: ModelGraph) -> ModelGraph:
    problems = validate(graph)
    if any(p.startswith("parent cycle") for p in problems):
        raise CycleError(problems)
    if problems:
        raise GraphError(problems)
    return graph


def topo_order(graph: ModelGraph) -> list[str]:
    """Order taxa so every parent precedes its offspring (stable w.r.t. declaration order)."""
    placed, order = set(), []
    pending = list(graph.taxa)
    while pending:
        ready = [t for t in pending
                 if graph.parent_of.get(t) is None or graph.parent_of[t] in placed]
        if not ready:
            raise CycleError(["parent cycle among " + ", ".join(map(repr, pending))])
        for t in ready:
            order.append(t)
            placed.add(t)
        pending = [t for t in pending if t not in placed]
    return order


@dataclass
class ParamVector:
    """Model parameters keyed by taxon name.

    alpha / bandwidth: one per offspring taxon; lambda_parent: one per
    parent-only taxon; lambda_unrelated: one per unrelated taxon.
    """

    alpha: dict = field(default_factory=dict)
    bandwidth: dict = field(default_factory=dict)
    lambda_parent: dict = field(default_factory=dict)
    lambda_unrelated: dict = field(default_factory=dict)

    def check(self, graph: ModelGraph) -> "ParamVector":
        expected = {
            "alpha": set(graph.offspring), "bandwidth": set(graph.offspring),
            "lambda_parent": set(graph.parents), "lambda_unrelated": set(graph.unrelated),
        }
        problems = []
        for name, want in expected.items():
            got = getattr(self, name)
            if set(got) != want:
                problems.append(f"{name} keys {sorted(got)} do not match {sorted(want)}")
            for t, v in got.items():
                if not v > 0:
                    problems.append(f"{name}[{t}] = {v} is not strictly positive")
        if problems:
            raise GraphError(problems)
        return self

    def flat(self, graph: ModelGraph) -> dict[str, float]:
        """Named scalar view in a fixed order: alphas, bandwidths, parent then unrelated intensities."""
        out = {}
        for t in graph.offspring:
            out[f"alpha[{t}]"] = self.alpha[t]
        for t in graph.offspring:
            out[f"h[{t}]"] = self.bandwidth[t]
        for t in graph.parents:
            out[f"lambda[{t}]"] = self.lambda_parent[t]
        for t in graph.unrelated:
            out[f"lambda[{t}]"] = self.lambda_unrelated[t]
        return out

    @classmethod
    def from_flat(cls, graph: ModelGraph, values: dict) -> "ParamVector":
        return cls(
            alpha={t: float(values[f"alpha[{t}]"]) for t in graph.offspring},
            bandwidth={t: float(values[f"h[{t}]"]) for t in graph.offspring},
            lambda_parent={t: float(values[f"lambda[{t}]"]) for t in graph.parents},
            lambda_unrelated={t: float(values[f"lambda[{t}]"]) for t in graph.unrelated},
        )

    def to_dict(self) -> dict:
        return {"alpha": dict(self.alpha), "bandwidth": dict(self.bandwidth),
                "lambda_parent": dict(self.lambda_parent),
                "lambda_unrelated": dict(self.lambda_unrelated)}

    @classmethod
    def from_dict(cls, d: dict) -> "ParamVector":
        return cls(**{k: {t: float(v) for t, v in d.get(k, {}).items()}
                      for k in ("alpha", "bandwidth", "lambda_parent", "lambda_unrelated")})

    def relabel(self, mapping: dict) -> "ParamVector":
        m = lambda d: {mapping.get(t, t): v for t, v in d.items()}  # noqa: E731
        return ParamVector(m(self.alpha), m(self.bandwidth), m(self.lambda_parent), m(self.lambda_unrelated))


def biofilm_graph() -> ModelGraph:
    """The four-taxon dental plaque arrangement plus five unrelated taxa."""
    taxa = ("Corynebacterium", "Streptococcus", "Porphyromonas", "Pasteurellaceae",
            "Neisseriaceae", "Capnocytophaga", "Actinomyces", "Fusobacterium", "Leptotrichia")
    roles = {t: Role.UNRELATED for t in taxa}
    roles.update({"Corynebacterium": Role.PARENT, "Streptococcus": Role.OFFSPRING,
                  "Porphyromonas": Role.OFFSPRING, "Pasteurellaceae": Role.OFFSPRING})
    parent_of = {"Streptococcus": "Corynebacterium", "Porphyromonas": "Corynebacterium",
                 "Pasteurellaceae": "Streptococcus"}
    return ModelGraph(taxa, roles, parent_of)
