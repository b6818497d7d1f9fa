"""Random (reference CEG, generated graph) pairs for property tests.

Reference graphs are random trees oriented toward the conclusion: every
non-conclusion node has exactly one outgoing edge, so the result is
acyclic, conclusion-anchored, and transitively reduced by construction --
no package graph algorithm is involved in building it.
"""

from __future__ import annotations

from cegreward.graph import CriticalEvidenceGraph, EvidenceGraph, Triplet, build_graph

PREDICATES = ["causes", "treats", "indicates", "located in", "confirms", "precedes"]
ENTITIES = [f"concept {i:02d}" for i in range(48)]
NOISE_ENTITIES = [f"stray finding {i:02d}" for i in range(24)]


def random_reference(rng, min_nodes=2, max_nodes=9) -> CriticalEvidenceGraph:
    n = int(rng.integers(min_nodes, max_nodes + 1))
    names = [str(x) for x in rng.choice(ENTITIES, size=n, replace=False)]
    edges = []
    for i in range(n - 1):
        parent = names[int(rng.integers(i + 1, n))]
        predicate = PREDICATES[int(rng.integers(len(PREDICATES)))]
        edges.append(Triplet(names[i], predicate, parent))
    return CriticalEvidenceGraph(graph=build_graph(edges), conclusion=names[-1])


def _mutate(rng, triplet: Triplet) -> Triplet:
    # near-miss: perturb one component so only soft matching can recover it
    which = int(rng.integers(3))
    s, p, o = triplet.as_tuple()
    if which == 0:
        s = s + " variant"
    elif which == 1:
        p = p + " maybe"
    else:
        o = o + " variant"
    return Triplet(s, p, o)


def noise_triplets(rng, count: int) -> list[Triplet]:
    out = []
    for _ in range(count):
        a, b = rng.choice(NOISE_ENTITIES, size=2, replace=False)
        predicate = PREDICATES[int(rng.integers(len(PREDICATES)))]
        out.append(Triplet(str(a), predicate, str(b)))
    return out


def random_generated(rng, ref: CriticalEvidenceGraph) -> EvidenceGraph:
    """Partial recall of the reference plus mutations and unrelated noise."""
    keep_prob = float(rng.uniform(0.2, 1.0))
    edges: list[Triplet] = []
    for t in ref.sorted_edges():
        roll = rng.random()
        if roll < keep_prob:
            edges.append(t)
        elif roll < keep_prob + 0.2:
            edges.append(_mutate(rng, t))
    edges.extend(noise_triplets(rng, int(rng.integers(0, 4))))
    return build_graph(edges)


def random_pair(rng) -> tuple[CriticalEvidenceGraph, EvidenceGraph]:
    ref = random_reference(rng)
    return ref, random_generated(rng, ref)
