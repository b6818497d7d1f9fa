"""Coercion helpers for user-facing entry points.

The estimator layer accepts loosely-shaped inputs (tuples, mappings, or the
domain objects themselves); these functions funnel everything into the core
types with uniform error messages.
"""

from __future__ import annotations

from typing import Iterable, Mapping

from .graph import CriticalEvidenceGraph, EvidenceGraph, Triplet, build_graph


def as_triplet(value) -> Triplet:
    if isinstance(value, Triplet):
        return value
    if isinstance(value, (list, tuple)) and len(value) == 3:
        return Triplet(*value)
    raise TypeError(f"expected a Triplet or a 3-item sequence, got {value!r}")


def as_triplets(value) -> list[Triplet]:
    if isinstance(value, (str, bytes)) or not isinstance(value, Iterable):
        raise TypeError(f"expected an iterable of triplets, got {value!r}")
    return [as_triplet(item) for item in value]


def as_evidence_graph(value) -> EvidenceGraph:
    if isinstance(value, EvidenceGraph):
        return value
    if isinstance(value, CriticalEvidenceGraph):
        return value.graph
    if isinstance(value, Mapping):
        if "triplets" not in value:
            raise TypeError('graph mapping needs a "triplets" key')
        return build_graph(as_triplets(value["triplets"]))
    return build_graph(as_triplets(value))


def as_ceg(value) -> CriticalEvidenceGraph:
    if isinstance(value, CriticalEvidenceGraph):
        return value
    if isinstance(value, Mapping):
        for key in ("triplets", "conclusion"):
            if key not in value:
                raise TypeError(f'reference mapping needs a "{key}" key')
        return CriticalEvidenceGraph(
            graph=build_graph(as_triplets(value["triplets"])),
            conclusion=value["conclusion"],
        )
    raise TypeError(
        f"expected a CriticalEvidenceGraph or a triplets/conclusion mapping, got {value!r}"
    )
