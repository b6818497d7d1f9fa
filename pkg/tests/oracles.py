"""Independent reference implementations used to freeze expected values.

Deliberately written with different techniques than the package (boolean
matrix powers, label propagation, plain set arithmetic) so a bug in the
package cannot hide inside its own oracle.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from cegreward.graph import Triplet


def node_order(triplets, extra_nodes=()):
    nodes = set(extra_nodes)
    for t in triplets:
        nodes.add(t.subject)
        nodes.add(t.obj)
    return sorted(nodes)


def closure_matrix(order, triplets):
    """Paths-of-length->=1 reachability via repeated boolean matrix products."""
    index = {node: i for i, node in enumerate(order)}
    n = len(order)
    adj = np.zeros((n, n), dtype=np.int64)
    for t in triplets:
        adj[index[t.subject], index[t.obj]] = 1
    reach = adj.copy()
    for _ in range(n):
        nxt = np.minimum(reach + reach @ adj, 1)
        if np.array_equal(nxt, reach):
            break
        reach = nxt
    return reach.astype(bool)


def has_cycle_oracle(triplets, extra_nodes=()):
    order = node_order(triplets, extra_nodes)
    return bool(closure_matrix(order, triplets).diagonal().any())


def reverse_reachable_oracle(triplets, conclusion, extra_nodes=()):
    """All nodes with a directed path to the conclusion, plus the conclusion."""
    order = node_order(triplets, extra_nodes)
    reach = closure_matrix(order, triplets)
    col = order.index(conclusion)
    ancestors = {order[i] for i in range(len(order)) if reach[i, col]}
    ancestors.add(conclusion)
    return ancestors


def reduction_pairs_oracle(triplets):
    """Unique transitive reduction of a simple DAG, as a set of node pairs.

    An edge (u, w) is redundant iff a path of length >= 2 joins u to w,
    which is exactly the support of closure @ closure.
    """
    order = node_order(triplets)
    index = {node: i for i, node in enumerate(order)}
    reach = closure_matrix(order, triplets).astype(np.int64)
    two_step = (reach @ reach) > 0
    pairs = {(t.subject, t.obj) for t in triplets}
    return {(u, w) for (u, w) in pairs if not two_step[index[u], index[w]]}


def components_oracle(triplets):
    """Undirected components by minimum-label propagation to a fixpoint."""
    triplets = set(triplets)
    label = {n: n for t in triplets for n in (t.subject, t.obj)}
    changed = True
    while changed:
        changed = False
        for t in triplets:
            low = min(label[t.subject], label[t.obj])
            for n in (t.subject, t.obj):
                if label[n] != low:
                    label[n] = low
                    changed = True
    groups: dict[str, tuple[set, set]] = {}
    for n, root in label.items():
        groups.setdefault(root, (set(), set()))[0].add(n)
    for t in triplets:
        groups[label[t.subject]][1].add(t)
    out = [(frozenset(ns), frozenset(ts)) for ns, ts in groups.values()]
    out.sort(key=lambda c: (-len(c[1]), min(c[0])))
    return out


def all_digraph_edge_sets(n, predicate="rel"):
    """Every labeled simple digraph on n nodes, as triplet frozensets."""
    names = [f"n{i}" for i in range(n)]
    arcs = [(a, b) for a in names for b in names if a != b]
    for r in range(len(arcs) + 1):
        for chosen in combinations(arcs, r):
            yield names, frozenset(Triplet(a, predicate, b) for a, b in chosen)


def all_labeled_dags(max_nodes, predicate="rel"):
    """Every labeled DAG with node count 1..max_nodes (isolated nodes kept)."""
    for n in range(1, max_nodes + 1):
        for names, edges in all_digraph_edge_sets(n, predicate):
            if not has_cycle_oracle(edges, extra_nodes=names):
                yield names, edges


def random_dag_triplets(rng, max_nodes=8, predicate="rel"):
    """Random DAG: edges only ever point forward along a random permutation."""
    n = int(rng.integers(1, max_nodes + 1))
    names = [f"n{i}" for i in range(n)]
    perm = [names[i] for i in rng.permutation(n)]
    density = float(rng.uniform(0.1, 0.9))
    edges = set()
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < density:
                edges.add(Triplet(perm[i], predicate, perm[j]))
    return names, frozenset(edges)


def node_recall_oracle(ref_nodes, gen_nodes):
    return len(set(ref_nodes) & set(gen_nodes)) / len(set(ref_nodes))


def triplet_recall_oracle(ref_triplets, gen_triplets):
    recalled = set(ref_triplets) & set(gen_triplets)
    return len(recalled) / len(set(ref_triplets)), frozenset(recalled)


def chain_score_oracle(ref_triplets, recalled):
    comps = components_oracle(recalled)
    largest = len(comps[0][1]) if comps else 0
    return largest / len(set(ref_triplets))
