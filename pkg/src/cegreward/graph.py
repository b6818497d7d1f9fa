"""Evidence graph types and the conclusion-anchored extraction algorithms.

An evidence graph is a directed multigraph of (subject, predicate, object)
triplets. Node identity is normalized string equality, so "Breast  Mass" and
"breast mass" are the same node. All operations here are pure functions over
immutable values; nothing mutates a graph in place.
"""

from __future__ import annotations

from collections import Counter, defaultdict, deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple

from .errors import CyclicGraph, EmptyConcept, InvalidQuorum, RedundantEdge, UnknownNode

__all__ = [
    "Triplet",
    "EvidenceGraph",
    "CriticalEvidenceGraph",
    "ExtractionBundle",
    "GraphComponent",
    "normalize_concept",
    "build_graph",
    "ensemble_merge",
    "backward_causal_subgraph",
    "detect_cycle",
    "transitive_reduction",
    "extract_ceg",
    "connected_components",
    "graph_jaccard",
]


def normalize_concept(text: str) -> str:
    """Trim, collapse internal whitespace runs to one space, and case-fold.

    Idempotent. Raises EmptyConcept if nothing is left.
    """
    if not isinstance(text, str):
        raise TypeError(f"concept must be a string, got {type(text).__name__}")
    folded = " ".join(text.split()).casefold()
    if not folded:
        raise EmptyConcept(f"concept is empty after normalization: {text!r}")
    return folded


@dataclass(frozen=True, order=True)
class Triplet:
    """One directed edge: subject --predicate--> object.

    Components are normalized on construction, so two triplets differing
    only in case or whitespace compare equal. Ordering is lexicographic on
    (subject, predicate, object), which is what every deterministic
    iteration in this package relies on.
    """

    subject: str
    predicate: str
    obj: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "subject", normalize_concept(self.subject))
        object.__setattr__(self, "predicate", normalize_concept(self.predicate))
        object.__setattr__(self, "obj", normalize_concept(self.obj))

    def as_tuple(self) -> tuple[str, str, str]:
        return (self.subject, self.predicate, self.obj)


@dataclass(frozen=True)
class EvidenceGraph:
    """Immutable directed multigraph over normalized concept nodes.

    Edge endpoints must be nodes. Parallel edges (same node pair, different
    predicate) are distinct triplets; identical triplets collapse because
    edges form a set. ``provenance`` optionally tags edges with the id of
    the extractor that produced them and never affects equality.
    """

    nodes: frozenset[str] = frozenset()
    edges: frozenset[Triplet] = frozenset()
    provenance: Mapping[Triplet, str] | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", frozenset(normalize_concept(n) for n in self.nodes))
        object.__setattr__(self, "edges", frozenset(self.edges))
        for t in self.edges:
            if t.subject not in self.nodes or t.obj not in self.nodes:
                raise UnknownNode(t.subject if t.subject not in self.nodes else t.obj)
        if self.provenance is not None and set(self.provenance) - set(self.edges):
            raise ValueError("provenance references a triplet that is not an edge")

    @classmethod
    def from_triplets(
        cls, triplets: Iterable[Triplet], nodes: Iterable[str] = ()
    ) -> "EvidenceGraph":
        return build_graph(triplets, nodes=nodes)

    def sorted_edges(self) -> list[Triplet]:
        return sorted(self.edges)

    def predicates(self) -> frozenset[str]:
        return frozenset(t.predicate for t in self.edges)

    def is_empty(self) -> bool:
        return not self.nodes


@dataclass(frozen=True)
class CriticalEvidenceGraph:
    """A conclusion-anchored, acyclic, transitively reduced evidence graph.

    Construction validates the full contract: the conclusion is a node,
    every node has a directed path to it, the graph is acyclic, and no edge
    is implied by the remaining ones. Documents parsed from disk go through
    this same constructor, so an invalid reference graph fails loudly.
    """

    graph: EvidenceGraph
    conclusion: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "conclusion", normalize_concept(self.conclusion))
        if self.conclusion not in self.graph.nodes:
            raise UnknownNode(self.conclusion)
        cycle = detect_cycle(self.graph)
        if cycle is not None:
            raise CyclicGraph(cycle)
        anchored = backward_causal_subgraph(self.graph, self.conclusion)
        if anchored.nodes != self.graph.nodes:
            missing = sorted(self.graph.nodes - anchored.nodes)[0]
            raise UnknownNode(missing)
        reduced = transitive_reduction(self.graph)
        if reduced.edges != self.graph.edges:
            extra = sorted(self.graph.edges - reduced.edges)[0]
            raise RedundantEdge(extra.as_tuple())

    @property
    def nodes(self) -> frozenset[str]:
        return self.graph.nodes

    @property
    def edges(self) -> frozenset[Triplet]:
        return self.graph.edges

    def sorted_edges(self) -> list[Triplet]:
        return self.graph.sorted_edges()


@dataclass(frozen=True)
class ExtractionBundle:
    """Triplet sets proposed by independent extractors, plus the quorum.

    A triplet survives the merge iff at least ``quorum`` extractor sets
    contain it.
    """

    extractions: tuple[frozenset[Triplet], ...]
    quorum: int

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "extractions", tuple(frozenset(s) for s in self.extractions)
        )
        if not isinstance(self.quorum, int) or isinstance(self.quorum, bool):
            raise InvalidQuorum(f"quorum must be an integer, got {self.quorum!r}")
        if self.quorum < 1:
            raise InvalidQuorum(f"quorum must be positive, got {self.quorum}")
        if self.quorum > len(self.extractions):
            raise InvalidQuorum(
                f"quorum {self.quorum} exceeds extractor count {len(self.extractions)}"
            )


class GraphComponent(NamedTuple):
    nodes: frozenset[str]
    triplets: frozenset[Triplet]


def build_graph(triplets: Iterable[Triplet], nodes: Iterable[str] = ()) -> EvidenceGraph:
    """Deduplicate triplets into a graph whose nodes are the edge endpoints.

    ``nodes`` adds explicit extra nodes; that is the only way an orphan node
    enters a graph.
    """
    edges = frozenset(triplets)
    endpoints: set[str] = set()
    for t in edges:
        endpoints.add(t.subject)
        endpoints.add(t.obj)
    endpoints.update(normalize_concept(n) for n in nodes)
    return EvidenceGraph(nodes=frozenset(endpoints), edges=edges)


def ensemble_merge(bundle: ExtractionBundle) -> frozenset[Triplet]:
    """Keep each triplet contained in at least ``quorum`` extractor sets."""
    counts: Counter[Triplet] = Counter()
    for extraction in bundle.extractions:
        counts.update(extraction)
    return frozenset(t for t, n in counts.items() if n >= bundle.quorum)


def _predecessor_index(graph: EvidenceGraph) -> dict[str, list[Triplet]]:
    pred: dict[str, list[Triplet]] = defaultdict(list)
    for t in sorted(graph.edges):
        pred[t.obj].append(t)
    return pred


def backward_causal_subgraph(graph: EvidenceGraph, conclusion: str) -> EvidenceGraph:
    """Reverse breadth-first traversal from the conclusion.

    Returns the subgraph of every node with a directed path to the
    conclusion, together with every edge encountered entering a visited
    node. Predicates along parallel edges are all retained.
    """
    conclusion = normalize_concept(conclusion)
    if conclusion not in graph.nodes:
        raise UnknownNode(conclusion)
    pred = _predecessor_index(graph)
    visited = {conclusion}
    queue: deque[str] = deque([conclusion])
    kept: set[Triplet] = set()
    while queue:
        node = queue.popleft()
        for t in pred.get(node, ()):
            kept.add(t)
            if t.subject not in visited:
                visited.add(t.subject)
                queue.append(t.subject)
    return EvidenceGraph(nodes=frozenset(visited), edges=frozenset(kept))


def detect_cycle(graph: EvidenceGraph) -> list[str] | None:
    """Depth-first search for a directed cycle.

    Returns one witness as a node list that starts and ends on the same
    node ([a, b, a]), or None when the graph is acyclic. Roots and
    successors are visited in sorted order so the witness is stable.
    """
    targets: dict[str, set[str]] = defaultdict(set)
    for t in graph.edges:
        targets[t.subject].add(t.obj)
    succ = {u: sorted(vs) for u, vs in targets.items()}

    # 0 = on the current DFS path, 1 = fully explored
    state: dict[str, int] = {}
    for root in sorted(graph.nodes):
        if root in state:
            continue
        state[root] = 0
        path = [root]
        stack = [(root, iter(succ.get(root, ())))]
        while stack:
            node, neighbours = stack[-1]
            advanced = False
            for nxt in neighbours:
                if state.get(nxt) == 0:
                    return path[path.index(nxt):] + [nxt]
                if nxt not in state:
                    state[nxt] = 0
                    path.append(nxt)
                    stack.append((nxt, iter(succ.get(nxt, ()))))
                    advanced = True
                    break
            if not advanced:
                state[node] = 1
                path.pop()
                stack.pop()
    return None


def _has_path(succ: Mapping[str, set[Triplet]], start: str, goal: str) -> bool:
    """True iff a directed path of length >= 1 leads from start to goal."""
    seen = {start}
    queue: deque[str] = deque([start])
    while queue:
        node = queue.popleft()
        for t in succ.get(node, ()):
            if t.obj == goal:
                return True
            if t.obj not in seen:
                seen.add(t.obj)
                queue.append(t.obj)
    return False


def transitive_reduction(graph: EvidenceGraph) -> EvidenceGraph:
    """Drop every edge implied by the rest of the graph.

    Edges are tried in sorted (subject, predicate, object) order; an edge is
    removed iff an alternative path between its endpoints survives in the
    current edge set with the edge itself withheld. The result preserves the
    reachability relation exactly and, for a DAG, is the unique transitive
    reduction. Cyclic input raises CyclicGraph with a witness.
    """
    cycle = detect_cycle(graph)
    if cycle is not None:
        raise CyclicGraph(cycle)
    succ: dict[str, set[Triplet]] = defaultdict(set)
    for t in graph.edges:
        succ[t.subject].add(t)
    kept = set(graph.edges)
    for t in sorted(graph.edges):
        succ[t.subject].discard(t)
        if _has_path(succ, t.subject, t.obj):
            kept.discard(t)
        else:
            succ[t.subject].add(t)
    return EvidenceGraph(nodes=graph.nodes, edges=frozenset(kept))


def extract_ceg(graph: EvidenceGraph, conclusion: str) -> CriticalEvidenceGraph:
    """Backward traversal from the conclusion, then transitive reduction."""
    anchored = backward_causal_subgraph(graph, conclusion)
    cycle = detect_cycle(anchored)
    if cycle is not None:
        raise CyclicGraph(cycle)
    reduced = transitive_reduction(anchored)
    return CriticalEvidenceGraph(graph=reduced, conclusion=conclusion)


def connected_components(triplets: Iterable[Triplet]) -> list[GraphComponent]:
    """Undirected connected components of a triplet set.

    Sorted by triplet count descending, ties by smallest node id ascending,
    so components[0] is "the" largest component everywhere in this package.
    """
    edges = sorted(set(triplets))
    parent: dict[str, str] = {}

    def find(x: str) -> str:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:  # path compression
            parent[x], x = root, parent[x]
        return root

    for t in edges:
        for node in (t.subject, t.obj):
            parent.setdefault(node, node)
        ra, rb = find(t.subject), find(t.obj)
        if ra != rb:
            parent[rb] = ra

    nodes_by_root: dict[str, set[str]] = defaultdict(set)
    triplets_by_root: dict[str, set[Triplet]] = defaultdict(set)
    for node in parent:
        nodes_by_root[find(node)].add(node)
    for t in edges:
        triplets_by_root[find(t.subject)].add(t)

    components = [
        GraphComponent(frozenset(nodes_by_root[root]), frozenset(triplets_by_root[root]))
        for root in nodes_by_root
    ]
    components.sort(key=lambda c: (-len(c.triplets), min(c.nodes)))
    return components


def graph_jaccard(first: EvidenceGraph, second: EvidenceGraph) -> float:
    """Jaccard overlap of the two edge sets; 1.0 when both are empty."""
    union = first.edges | second.edges
    if not union:
        return 1.0
    return len(first.edges & second.edges) / len(union)
