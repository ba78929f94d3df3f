"""Directed acyclic graphs, back-door paths, and the admissibility criterion.

A *back-door path* between a treatment t and a response r is a simple
path whose first edge points into t and whose last edge points into r.
A conditioning set Z is admissible when every such path either

(i)  contains a Z-node that points an arrow along the path (a chain or
     fork node), or
(ii) contains no Z-node pointing an arrow along the path, and contains
     a collider such that neither the collider nor any of its
     descendants lies in Z.

The two conditions are mutually exclusive on any single path.  Sets
containing descendants of the treatment are handled separately: the
descendants are deleted and merged with t into a pseudo-treatment node
that inherits all their edges, and the criterion runs on the modified
graph.  When a deleted node fed the response directly, the merged node
acquires an edge into r and the report warns that the treatment's role
is partly or completely overruled by the conditioning.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .errors import (
    CyclicGraphError,
    DescendantConditioningError,
    InvalidArgumentError,
    ResourceLimitError,
)

FORWARD = "forward"
BACKWARD = "backward"

DEFAULT_PATH_CAP = 100_000


class Dag:
    """Immutable directed graph with node-sorted adjacency.

    Acyclicity is verified by :func:`topological_order` (and by
    ``scm.validate_scm``), not at construction, so that cycle errors
    surface with a witness where they matter.
    """

    def __init__(self, nodes, edges):
        self.nodes = frozenset(nodes)
        self.edges = frozenset((u, v) for u, v in edges)
        for u, v in self.edges:
            if u == v:
                raise InvalidArgumentError(f"self-loop at {u!r}")
            if u not in self.nodes:
                raise InvalidArgumentError(f"edge endpoint {u!r} is not a node")
            if v not in self.nodes:
                raise InvalidArgumentError(f"edge endpoint {v!r} is not a node")
        self._parents = {n: [] for n in self.nodes}
        self._children = {n: [] for n in self.nodes}
        for u, v in sorted(self.edges, key=lambda e: (str(e[0]), str(e[1]))):
            self._parents[v].append(u)
            self._children[u].append(v)
        self._parents = {n: tuple(sorted(ps, key=str)) for n, ps in self._parents.items()}
        self._children = {n: tuple(sorted(cs, key=str)) for n, cs in self._children.items()}

    def parents(self, node):
        self._require(node)
        return self._parents[node]

    def children(self, node):
        self._require(node)
        return self._children[node]

    def has_edge(self, u, v) -> bool:
        return (u, v) in self.edges

    def _require(self, node):
        if node not in self.nodes:
            raise InvalidArgumentError(f"unknown node {node!r}")

    def __eq__(self, other):
        return isinstance(other, Dag) and self.nodes == other.nodes and self.edges == other.edges

    def __repr__(self):
        return f"Dag(nodes={sorted(self.nodes, key=str)}, edges={sorted(self.edges, key=str)})"


def topological_order(dag: Dag) -> list:
    """Parents-before-children order, ties broken by identifier sort."""
    indegree = {n: len(dag.parents(n)) for n in dag.nodes}
    frontier = sorted((n for n, d in indegree.items() if d == 0), key=str)
    order = []
    while frontier:
        node = frontier.pop(0)
        order.append(node)
        changed = False
        for child in dag.children(node):
            indegree[child] -= 1
            if indegree[child] == 0:
                frontier.append(child)
                changed = True
        if changed:
            frontier.sort(key=str)
    if len(order) < len(dag.nodes):
        raise CyclicGraphError(f"cycle detected: {_cycle_witness(dag, set(indegree) - set(order))}")
    return order


def _cycle_witness(dag: Dag, remaining: set) -> str:
    """Walk parent links inside `remaining` until a node repeats."""
    node = min(remaining, key=str)
    trail, seen = [], {}
    while node not in seen:
        seen[node] = len(trail)
        trail.append(node)
        node = next(p for p in dag.parents(node) if p in remaining)
    cycle = trail[seen[node]:] + [node]
    return " <- ".join(str(n) for n in cycle)


def descendants(dag: Dag, node) -> frozenset:
    """All nodes reachable from `node` by a directed path, excluding it."""
    dag._require(node)
    out, frontier = set(), [node]
    while frontier:
        for child in dag.children(frontier.pop()):
            if child not in out:
                out.add(child)
                frontier.append(child)
    out.discard(node)
    return frozenset(out)


def ancestors(dag: Dag, node) -> frozenset:
    dag._require(node)
    out, frontier = set(), [node]
    while frontier:
        for parent in dag.parents(frontier.pop()):
            if parent not in out:
                out.add(parent)
                frontier.append(parent)
    out.discard(node)
    return frozenset(out)


@dataclass(frozen=True)
class Path:
    """Simple path: node sequence plus per-step edge orientation.

    ``directions[i]`` is ``"forward"`` when the graph edge runs
    ``nodes[i] -> nodes[i+1]`` and ``"backward"`` when it runs the
    other way.
    """

    nodes: tuple
    directions: tuple

    def __post_init__(self):
        if len(self.directions) != len(self.nodes) - 1:
            raise InvalidArgumentError("one direction per step required")
        if len(set(self.nodes)) != len(self.nodes):
            raise InvalidArgumentError("path must be simple")

    def is_collider(self, i: int) -> bool:
        """True when both neighbouring edges point into nodes[i]."""
        if not 0 < i < len(self.nodes) - 1:
            return False
        return self.directions[i - 1] == FORWARD and self.directions[i] == BACKWARD

    def interior(self) -> tuple:
        return self.nodes[1:-1]

    def __str__(self):
        parts = [str(self.nodes[0])]
        for node, direction in zip(self.nodes[1:], self.directions):
            arrow = "->" if direction == FORWARD else "<-"
            parts.append(f"{arrow} {node}")
        return " ".join(parts)


@dataclass(frozen=True)
class PathVerdict:
    path: Path
    verdict: str  # "satisfies-(i)" | "satisfies-(ii)" | "violates"
    witness: object = None  # pointing Z-node for (i), open collider for (ii)


@dataclass
class BackdoorReport:
    valid: bool
    verdicts: list[PathVerdict]
    warnings: list[str] = field(default_factory=list)

    def violating_paths(self) -> list[Path]:
        return [v.path for v in self.verdicts if v.verdict == "violates"]


def backdoor_paths(dag: Dag, t, r, cap: int = DEFAULT_PATH_CAP) -> list[Path]:
    """All simple paths from t to r entered against an edge and exiting along one."""
    dag._require(t)
    dag._require(r)
    if t == r:
        raise InvalidArgumentError("treatment and response must differ")
    paths: list[Path] = []

    def extend(node, visited, nodes, dirs):
        steps = [(c, FORWARD) for c in dag.children(node)] + [
            (p, BACKWARD) for p in dag.parents(node)
        ]
        for nxt, direction in sorted(steps, key=lambda s: (str(s[0]), s[1])):
            if nxt == r:
                if direction == FORWARD:
                    if len(paths) >= cap:
                        raise ResourceLimitError(f"more than {cap} back-door paths")
                    paths.append(Path(nodes + (r,), dirs + (direction,)))
                continue
            if nxt in visited:
                continue
            extend(nxt, visited | {nxt}, nodes + (nxt,), dirs + (direction,))

    for first in dag.parents(t):
        if first == r:
            continue  # the edge r -> t leaves r, so it opens no back-door path
        extend(first, {t, first}, (t, first), (BACKWARD,))
    return paths


def _classify(path: Path, dag: Dag, Z: frozenset) -> PathVerdict:
    pointing = [
        node
        for i, node in enumerate(path.interior(), start=1)
        if node in Z and not path.is_collider(i)
    ]
    if pointing:
        return PathVerdict(path, "satisfies-(i)", pointing[0])
    # No Z-node on the path points an arrow; look for an open collider.
    for i, node in enumerate(path.interior(), start=1):
        if path.is_collider(i) and node not in Z and not (descendants(dag, node) & Z):
            return PathVerdict(path, "satisfies-(ii)", node)
    return PathVerdict(path, "violates")


def check_backdoor(dag: Dag, t, r, Z) -> BackdoorReport:
    """Per-path criterion verdicts; valid iff every back-door path passes."""
    Z = frozenset(Z)
    for z in Z:
        dag._require(z)
    if Z & {t, r}:
        raise InvalidArgumentError("conditioning set must exclude treatment and response")
    offenders = Z & descendants(dag, t)
    if offenders:
        raise DescendantConditioningError(
            f"{sorted(offenders, key=str)} descend from {t!r}; use check_backdoor_extended"
        )
    verdicts = [_classify(p, dag, Z) for p in backdoor_paths(dag, t, r)]
    return BackdoorReport(all(v.verdict != "violates" for v in verdicts), verdicts)


def pseudo_treatment_graph(dag: Dag, t, deleted) -> tuple[Dag, object]:
    """Merge t with `deleted` into one node inheriting all their edges.

    Returns the modified graph and the merged node's identifier.
    """
    deleted = frozenset(deleted)
    cluster = deleted | {t}
    star = f"{t}*"
    while star in dag.nodes:
        star += "*"
    nodes = (dag.nodes - cluster) | {star}
    edges = set()
    for u, v in dag.edges:
        u2 = star if u in cluster else u
        v2 = star if v in cluster else v
        if u2 != v2:
            edges.add((u2, v2))
    return Dag(nodes, edges), star


def check_backdoor_extended(dag: Dag, t, r, Z_desc, Z_nondesc) -> BackdoorReport:
    """Criterion with treatment-descendant conditioning via a pseudo-treatment.

    `Z_desc` (descendants of t) are deleted and merged with t; the plain
    criterion then runs for the merged node against `Z_nondesc`.  A
    deleted parent of r grafts a direct merged-node -> r edge, flagged
    with an overrule warning because the response mechanism then no
    longer involves the original treatment value.
    """
    Z_desc, Z_nondesc = frozenset(Z_desc), frozenset(Z_nondesc)
    for z in Z_desc | Z_nondesc:
        dag._require(z)
    if (Z_desc | Z_nondesc) & {t, r}:
        raise InvalidArgumentError("conditioning sets must exclude treatment and response")
    t_desc = descendants(dag, t)
    stray = Z_desc - t_desc
    if stray:
        raise InvalidArgumentError(f"{sorted(stray, key=str)} are not descendants of {t!r}")
    misplaced = Z_nondesc & t_desc
    if misplaced:
        raise InvalidArgumentError(
            f"{sorted(misplaced, key=str)} descend from {t!r}; list them in Z_desc"
        )
    if not Z_desc:
        return check_backdoor(dag, t, r, Z_nondesc)

    modified, star = pseudo_treatment_graph(dag, t, Z_desc)
    report = check_backdoor(modified, star, r, Z_nondesc)
    overruling = sorted((d for d in Z_desc if dag.has_edge(d, r)), key=str)
    if overruling:
        report.warnings.append(
            f"conditioning on {overruling} overrules the effect of {t!r} on {r!r} "
            "partly or completely: the response law under the pseudo-treatment "
            "no longer involves the treatment value"
        )
    return report


def enumerate_valid_adjustment_sets(dag: Dag, t, r, candidates) -> list[frozenset]:
    """All minimal subsets of `candidates` passing the back-door criterion."""
    candidates = frozenset(candidates)
    if len(candidates) > 20:
        raise ResourceLimitError(f"{len(candidates)} candidates exceed the cap of 20")
    if candidates & ({t, r} | descendants(dag, t)):
        raise InvalidArgumentError(
            "candidates must exclude the treatment, the response, and treatment descendants"
        )
    ordered = sorted(candidates, key=str)
    minimal: list[frozenset] = []
    for size in range(len(ordered) + 1):
        for combo in itertools.combinations(ordered, size):
            Z = frozenset(combo)
            if any(m <= Z for m in minimal):
                continue  # proper superset of a known valid set
            if check_backdoor(dag, t, r, Z).valid:
                minimal.append(Z)
    return sorted(minimal, key=lambda s: (len(s), sorted(s, key=str)))
