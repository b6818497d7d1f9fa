"""Cross-graph soft matching: similarity matrices, element maps, and
conclusion-node selection.

Exact normalized string equality always counts as similarity 1.0, on top of
whatever the provider reports. That fast path is what keeps identity
matching safe under degenerate providers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .embedding import EmbeddingProvider
from .errors import EmptyGraph
from .graph import EvidenceGraph, normalize_concept

__all__ = [
    "ElementMap",
    "ConclusionChoice",
    "similarity_matrix",
    "overlay_exact_equality",
    "build_element_map",
    "select_conclusion_node",
]


def similarity_matrix(
    gen_elements: Sequence[str],
    ref_elements: Sequence[str],
    provider: EmbeddingProvider,
) -> np.ndarray:
    """S[i][j] = sim(gen_elements[i], ref_elements[j]) under the provider."""
    return provider.similarity_matrix(list(gen_elements), list(ref_elements))


def overlay_exact_equality(sims: np.ndarray, gen: Sequence[str], ref: Sequence[str]) -> np.ndarray:
    """Force similarity 1.0 wherever the normalized strings are equal."""
    out = np.array(sims, dtype=np.float64, copy=True)
    ref_index: dict[str, list[int]] = {}
    for j, r in enumerate(ref):
        ref_index.setdefault(r, []).append(j)
    for i, g in enumerate(gen):
        for j in ref_index.get(g, ()):
            out[i, j] = 1.0
    return out


@dataclass(frozen=True)
class ElementMap:
    """Reference element -> set of generated elements accepted as matches.

    Keys cover every reference element, including ones with no match.
    """

    entity_map: dict[str, frozenset[str]]
    relation_map: dict[str, frozenset[str]]
    theta_entity: float
    theta_relation: float


def _threshold_map(
    gen: list[str],
    ref: list[str],
    theta: float,
    provider: EmbeddingProvider,
) -> dict[str, frozenset[str]]:
    if not ref:
        return {}
    if not gen:
        return {r: frozenset() for r in ref}
    sims = overlay_exact_equality(similarity_matrix(gen, ref, provider), gen, ref)
    return {
        r: frozenset(gen[i] for i in range(len(gen)) if sims[i, j] >= theta)
        for j, r in enumerate(ref)
    }


def build_element_map(
    gen_graph: EvidenceGraph,
    ref_graph: EvidenceGraph,
    provider: EmbeddingProvider,
    theta_entity: float = 0.85,
    theta_relation: float = 0.80,
) -> ElementMap:
    """Match generated entities/relations to reference ones by similarity.

    A generated element maps to a reference element iff their similarity
    meets the relevant threshold; normalized-equal strings always map.
    """
    for theta in (theta_entity, theta_relation):
        if not 0.0 <= theta <= 1.0:
            raise ValueError(f"threshold must lie in [0, 1], got {theta}")
    return ElementMap(
        entity_map=_threshold_map(
            sorted(gen_graph.nodes), sorted(ref_graph.nodes), theta_entity, provider
        ),
        relation_map=_threshold_map(
            sorted(gen_graph.predicates()),
            sorted(ref_graph.predicates()),
            theta_relation,
            provider,
        ),
        theta_entity=theta_entity,
        theta_relation=theta_relation,
    )


class ConclusionChoice(NamedTuple):
    node: str
    score: float


def select_conclusion_node(
    graph: EvidenceGraph, answer: str, provider: EmbeddingProvider
) -> ConclusionChoice:
    """Pick the node most similar to the answer string.

    Ties break toward the lexicographically smallest node id; an exact
    normalized match always wins outright.
    """
    if graph.is_empty():
        raise EmptyGraph("cannot select a conclusion in an empty graph")
    answer_norm = normalize_concept(answer)
    nodes = sorted(graph.nodes)
    sims = overlay_exact_equality(
        similarity_matrix(nodes, [answer_norm], provider), nodes, [answer_norm]
    )[:, 0]
    best = int(np.argmax(sims))  # argmax returns the first max; nodes are sorted
    return ConclusionChoice(nodes[best], float(sims[best]))
