"""The graph-grounded process reward: node coverage, structural correctness,
chain completeness, their weighted composite, answer/format bits, and the
final scalar.

Weighted sums go through math.fsum (exactly rounded), so a perfect
generation composes to exactly 1.0 even though the shipped weights are not
exactly representable as floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import EmptyReference, InvalidWeights
from .graph import CriticalEvidenceGraph, EvidenceGraph, Triplet, connected_components
from .matching import (
    ElementMap,
    build_element_map,
    overlay_exact_equality,
    similarity_matrix,
)

__all__ = [
    "RewardWeights",
    "RewardBreakdown",
    "AnswerAssessment",
    "node_coverage",
    "structural_correctness",
    "chain_completeness",
    "reasoning_reward",
    "answer_reward",
    "format_reward",
    "crp_reward",
]

_WEIGHT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class RewardWeights:
    """Process-metric weights (lambda_*) and composite weights (w_*).

    Each triple must be nonnegative and sum to 1 within 1e-9.
    """

    lambda_node: float = 0.5
    lambda_struct: float = 0.3
    lambda_chain: float = 0.2
    w_reason: float = 0.3
    w_answer: float = 0.6
    w_format: float = 0.1

    def __post_init__(self) -> None:
        values = (
            self.lambda_node,
            self.lambda_struct,
            self.lambda_chain,
            self.w_reason,
            self.w_answer,
            self.w_format,
        )
        if any(not math.isfinite(v) or v < 0 for v in values):
            raise InvalidWeights(f"weights must be finite and nonnegative: {values}")
        lam = math.fsum((self.lambda_node, self.lambda_struct, self.lambda_chain))
        if abs(lam - 1.0) > _WEIGHT_TOLERANCE:
            raise InvalidWeights(f"lambda weights sum to {lam}, expected 1")
        w = math.fsum((self.w_reason, self.w_answer, self.w_format))
        if abs(w - 1.0) > _WEIGHT_TOLERANCE:
            raise InvalidWeights(f"w weights sum to {w}, expected 1")


class AnswerAssessment(NamedTuple):
    value: int
    box_found: bool
    extracted: str | None


@dataclass(frozen=True)
class RewardBreakdown:
    r_node: float
    r_struct: float
    r_chain: float
    r_reason: float
    r_answer: int
    r_format: int
    r_crp: float
    recalled_triplets: frozenset[Triplet]
    largest_component_size: int
    answer_found: bool
    extracted_answer: str | None


def node_coverage(
    ref: CriticalEvidenceGraph, gen: EvidenceGraph, provider
) -> float:
    """Mean over reference nodes of the best similarity to any generated node.

    Similarities clamp to [0,1] (negative cosine counts as 0); the max over
    an empty generated node set is 0.
    """
    ref_nodes = sorted(ref.nodes)
    if not ref_nodes:
        raise EmptyReference("reference graph has no nodes")
    gen_nodes = sorted(gen.nodes)
    if not gen_nodes:
        return 0.0
    sims = overlay_exact_equality(
        similarity_matrix(gen_nodes, ref_nodes, provider), gen_nodes, ref_nodes
    )
    best = np.clip(sims, 0.0, 1.0).max(axis=0)
    return math.fsum(float(b) for b in best) / len(ref_nodes)


def structural_correctness(
    ref: CriticalEvidenceGraph, gen: EvidenceGraph, emap: ElementMap
) -> tuple[float, frozenset[Triplet]]:
    """Recall ratio of reference triplets under the soft element map.

    A reference triplet is recalled iff some generated triplet maps onto all
    three of its components. One generated triplet may witness several
    reference triplets.
    """
    if not ref.edges:
        raise EmptyReference("reference graph has no edges")
    gen_edges = gen.sorted_edges()
    recalled = set()
    for target in ref.edges:
        subjects = emap.entity_map[target.subject]
        objects = emap.entity_map[target.obj]
        relations = emap.relation_map[target.predicate]
        for candidate in gen_edges:
            if (
                candidate.subject in subjects
                and candidate.obj in objects
                and candidate.predicate in relations
            ):
                recalled.add(target)
                break
    return len(recalled) / len(ref.edges), frozenset(recalled)


def _chain_stats(
    ref: CriticalEvidenceGraph, recalled: frozenset[Triplet]
) -> tuple[float, int]:
    if not ref.edges:
        raise EmptyReference("reference graph has no edges")
    if not recalled <= ref.edges:
        raise ValueError("recalled triplets must be a subset of the reference edges")
    components = connected_components(recalled)
    largest = len(components[0].triplets) if components else 0
    return largest / len(ref.edges), largest


def chain_completeness(ref: CriticalEvidenceGraph, recalled: frozenset[Triplet]) -> float:
    """Fraction of reference triplets inside the largest recalled component."""
    return _chain_stats(ref, frozenset(recalled))[0]


def reasoning_reward(
    r_node: float, r_struct: float, r_chain: float, weights: RewardWeights
) -> float:
    for name, value in (("r_node", r_node), ("r_struct", r_struct), ("r_chain", r_chain)):
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return math.fsum(
        (
            weights.lambda_node * r_node,
            weights.lambda_struct * r_struct,
            weights.lambda_chain * r_chain,
        )
    )


def _soft_normalize(text: str) -> str:
    # like normalize_concept but empty-tolerant; used only for comparisons
    return " ".join(text.split()).casefold()


def _boxed_spans(text: str) -> list[tuple[int, int, str]]:
    """Every well-bracketed \\boxed{...} span as (start, end, content)."""
    spans = []
    marker = "\\boxed{"
    search = 0
    while True:
        start = text.find(marker, search)
        if start == -1:
            return spans
        depth = 1
        i = start + len(marker)
        while i < len(text) and depth:
            if text[i] == "{":
                depth += 1
            elif text[i] == "}":
                depth -= 1
            i += 1
        if depth == 0:
            spans.append((start, i, text[start + len(marker) : i - 1]))
            search = i
        else:
            search = start + len(marker)  # unclosed; skip this marker


def answer_reward(
    response: str,
    gold: str | None,
    judge: Callable[[str, str | None], bool] | None = None,
) -> AnswerAssessment:
    """Binary answer reward from the last well-bracketed \\boxed{...} span.

    The built-in path is exact normalized match against ``gold``; a ``judge``
    callable replaces it for open-ended answers. No box (or no gold and no
    judge) scores 0.
    """
    spans = _boxed_spans(response)
    if not spans:
        return AnswerAssessment(0, False, None)
    extracted = spans[-1][2]
    if judge is not None:
        verdict = bool(judge(extracted, gold))
    elif gold is None:
        verdict = False
    else:
        verdict = _soft_normalize(extracted) == _soft_normalize(gold)
    return AnswerAssessment(int(verdict), True, extracted)


def format_reward(response: str) -> int:
    """1 iff nonempty reasoning text precedes exactly one boxed answer."""
    spans = _boxed_spans(response)
    if len(spans) != 1:
        return 0
    reasoning = response[: spans[0][0]]
    return 1 if reasoning.strip() else 0


def crp_reward(
    ref: CriticalEvidenceGraph,
    gen: EvidenceGraph,
    response: str | None = None,
    gold: str | None = None,
    *,
    provider,
    weights: RewardWeights | None = None,
    theta_entity: float = 0.85,
    theta_relation: float = 0.80,
    judge: Callable[[str, str | None], bool] | None = None,
    format_checker: Callable[[str], int] | None = None,
) -> RewardBreakdown:
    """Full reward breakdown for one generated attempt against a reference.

    ``response``/``gold`` may be omitted when only the process reward is of
    interest; the answer and format bits then score 0.
    """
    weights = weights or RewardWeights()
    emap = build_element_map(gen, ref.graph, provider, theta_entity, theta_relation)
    r_node = node_coverage(ref, gen, provider)
    r_struct, recalled = structural_correctness(ref, gen, emap)
    r_chain, largest = _chain_stats(ref, recalled)
    r_reason = reasoning_reward(r_node, r_struct, r_chain, weights)
    if response is None:
        assessment = AnswerAssessment(0, False, None)
        r_format = 0
    else:
        assessment = answer_reward(response, gold, judge)
        checker = format_checker or format_reward
        r_format = int(checker(response))
    r_crp = math.fsum(
        (
            weights.w_reason * r_reason,
            weights.w_answer * assessment.value,
            weights.w_format * r_format,
        )
    )
    return RewardBreakdown(
        r_node=r_node,
        r_struct=r_struct,
        r_chain=r_chain,
        r_reason=r_reason,
        r_answer=assessment.value,
        r_format=r_format,
        r_crp=r_crp,
        recalled_triplets=recalled,
        largest_component_size=largest,
        answer_found=assessment.box_found,
        extracted_answer=assessment.extracted,
    )
