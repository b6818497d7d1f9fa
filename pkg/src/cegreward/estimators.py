"""Estimator facade over the functional core.

Both classes follow the scikit-learn parameter protocol (constructor stores
arguments verbatim, validation happens at use time, get_params/set_params
and clone just work), so they drop into sklearn pipelines and grid searches
even though the samples are reasoning records rather than feature rows.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .embedding import DiscreteMatchProvider, EmbeddingProvider, HashEmbeddingProvider
from .documents import extract_ceg_with_stats
from .graph import CriticalEvidenceGraph, build_graph
from .reward import RewardBreakdown, RewardWeights, crp_reward
from .validation import as_ceg, as_triplets


def _resolve_provider(provider, dimension: int) -> EmbeddingProvider:
    if isinstance(provider, EmbeddingProvider):
        return provider
    if provider == "hash":
        return HashEmbeddingProvider(dimension=dimension)
    if provider == "discrete":
        return DiscreteMatchProvider()
    raise ValueError(
        'provider must be "hash", "discrete", or an EmbeddingProvider instance; '
        f"got {provider!r} (build remote providers via make_provider)"
    )


def _extraction_item(item) -> tuple[list, str]:
    if isinstance(item, Mapping):
        if "triplets" not in item or "answer" not in item:
            raise TypeError('extraction items need "triplets" and "answer" keys')
        return as_triplets(item["triplets"]), item["answer"]
    if isinstance(item, (list, tuple)) and len(item) == 2:
        return as_triplets(item[0]), item[1]
    raise TypeError(f"expected a mapping or a (triplets, answer) pair, got {item!r}")


class CegExtractor(TransformerMixin, BaseEstimator):
    """Transform evidence-triplet records into critical evidence graphs.

    Each sample is a {"triplets": [...], "answer": str} mapping or a
    (triplets, answer) pair; transform returns one CriticalEvidenceGraph per
    sample. Stateless: fit only validates parameters.
    """

    def __init__(self, provider="hash", dimension: int = 256):
        self.provider = provider
        self.dimension = dimension

    def fit(self, X=None, y=None):
        _resolve_provider(self.provider, self.dimension)
        return self

    def __sklearn_is_fitted__(self) -> bool:
        # stateless: nothing is learned, so the estimator is always "fitted"
        return True

    def transform(self, X) -> list[CriticalEvidenceGraph]:
        resolved = _resolve_provider(self.provider, self.dimension)
        out = []
        for item in X:
            triplets, answer = _extraction_item(item)
            ceg, _ = extract_ceg_with_stats(triplets, answer, resolved)
            out.append(ceg)
        return out


def _scoring_item(item) -> dict:
    if isinstance(item, Mapping):
        if "reference" not in item or "generated_triplets" not in item:
            raise TypeError('scoring items need "reference" and "generated_triplets" keys')
        return {
            "reference": as_ceg(item["reference"]),
            "generated_triplets": as_triplets(item["generated_triplets"]),
            "response": item.get("response"),
            "gold": item.get("gold"),
        }
    raise TypeError(f"expected a scoring mapping, got {item!r}")


class CrpScorer(BaseEstimator):
    """Score generated reasoning records against reference graphs.

    Each sample is a mapping with "reference" (a CriticalEvidenceGraph or a
    triplets/conclusion mapping), "generated_triplets", and optional
    "response" and "gold" strings. predict returns the composite reward per
    sample; score_breakdowns returns the full per-component objects.
    """

    def __init__(
        self,
        provider="hash",
        theta_entity: float = 0.85,
        theta_relation: float = 0.80,
        weights: RewardWeights | None = None,
        dimension: int = 256,
    ):
        self.provider = provider
        self.theta_entity = theta_entity
        self.theta_relation = theta_relation
        self.weights = weights
        self.dimension = dimension

    def fit(self, X=None, y=None):
        _resolve_provider(self.provider, self.dimension)
        return self

    def __sklearn_is_fitted__(self) -> bool:
        return True

    def score_breakdowns(self, X) -> list[RewardBreakdown]:
        resolved = _resolve_provider(self.provider, self.dimension)
        out = []
        for item in X:
            record = _scoring_item(item)
            out.append(
                crp_reward(
                    record["reference"],
                    build_graph(record["generated_triplets"]),
                    record["response"],
                    record["gold"],
                    provider=resolved,
                    weights=self.weights,
                    theta_entity=self.theta_entity,
                    theta_relation=self.theta_relation,
                )
            )
        return out

    def predict(self, X) -> np.ndarray:
        return np.array([b.r_crp for b in self.score_breakdowns(X)], dtype=np.float64)
