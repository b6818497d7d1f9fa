"""Dataset records and the difficulty filter.

A record bundles one training example: the question, the free-text
rationale, the gold answer, the full evidence graph, and optionally the
extracted critical subgraph with its conclusion node. Serialization is
lossless up to concept normalization, which is applied once on the way in;
saving what was loaded is byte-stable after that single pass.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .documents import FORMAT_VERSION, _decode, _loads, _parse_triplet_array, dump_document
from .errors import ParseError
from .graph import CriticalEvidenceGraph, Triplet, build_graph


@dataclass(frozen=True)
class DatasetRecord:
    question: str
    rationale: str
    answer: str
    triplets: tuple[Triplet, ...]
    ceg_triplets: tuple[Triplet, ...] | None = None
    ceg_conclusion: str | None = None

    def __post_init__(self) -> None:
        for name in ("question", "rationale", "answer"):
            if not isinstance(getattr(self, name), str):
                raise TypeError(f"{name} must be a string")
        if not self.question.strip():
            raise ValueError("question must be nonempty")
        if not self.answer.strip():
            raise ValueError("answer must be nonempty")
        object.__setattr__(self, "triplets", tuple(self.triplets))
        if (self.ceg_triplets is None) != (self.ceg_conclusion is None):
            raise ValueError("ceg_triplets and ceg_conclusion must be present together")
        if self.ceg_triplets is not None:
            ceg_triplets = tuple(self.ceg_triplets)
            object.__setattr__(self, "ceg_triplets", ceg_triplets)
            # raises UnknownNode / CyclicGraph / RedundantEdge when invalid
            self.ceg()

    def ceg(self) -> CriticalEvidenceGraph | None:
        if self.ceg_triplets is None:
            return None
        return CriticalEvidenceGraph(
            graph=build_graph(self.ceg_triplets), conclusion=self.ceg_conclusion
        )


def save_dataset_record(record: DatasetRecord) -> bytes:
    doc = {
        "format_version": FORMAT_VERSION,
        "question": record.question,
        "rationale": record.rationale,
        "answer": record.answer,
        "triplets": [list(t.as_tuple()) for t in record.triplets],
    }
    if record.ceg_triplets is not None:
        doc["ceg_triplets"] = [list(t.as_tuple()) for t in record.ceg_triplets]
        doc["ceg_conclusion"] = record.ceg_conclusion
    return dump_document(doc)


def load_dataset_record(data: bytes | str) -> DatasetRecord:
    text = _decode(data)
    doc = _loads(text)
    if not isinstance(doc, dict):
        raise ParseError("record must be a JSON object", offset=0)
    for name in ("question", "rationale", "answer", "triplets"):
        if name not in doc:
            raise ParseError(f'missing required field "{name}"', field=name)
    for name in ("question", "rationale", "answer"):
        if not isinstance(doc[name], str):
            raise ParseError(f'"{name}" must be a string', field=name)
    triplets = _parse_triplet_array(doc["triplets"], text, "triplets")

    ceg_triplets = None
    conclusion = doc.get("ceg_conclusion")
    if doc.get("ceg_triplets") is not None:
        ceg_triplets = _parse_triplet_array(doc["ceg_triplets"], text, "ceg_triplets")
        if not isinstance(conclusion, str):
            raise ParseError(
                '"ceg_conclusion" must accompany "ceg_triplets"', field="ceg_conclusion"
            )
    elif conclusion is not None:
        raise ParseError(
            '"ceg_conclusion" is meaningless without "ceg_triplets"', field="ceg_triplets"
        )

    try:
        return DatasetRecord(
            question=doc["question"],
            rationale=doc["rationale"],
            answer=doc["answer"],
            triplets=tuple(triplets),
            ceg_triplets=None if ceg_triplets is None else tuple(ceg_triplets),
            ceg_conclusion=None if ceg_triplets is None else conclusion,
        )
    except (TypeError, ValueError) as exc:
        raise ParseError(str(exc)) from exc


@dataclass(frozen=True)
class AttemptLog:
    """Pass/fail outcomes of repeated answer attempts on one question."""

    question_id: str
    attempts: tuple[bool, ...]
    total: int

    def __post_init__(self) -> None:
        attempts = tuple(bool(a) for a in self.attempts)
        object.__setattr__(self, "attempts", attempts)
        if self.total < 1:
            raise ValueError("total must be >= 1")
        if len(attempts) != self.total:
            raise ValueError(f"{len(attempts)} attempts recorded but total={self.total}")

    @property
    def correct(self) -> int:
        return sum(self.attempts)


def hard_case_filter(log: AttemptLog) -> bool:
    """Keep a question iff it was answered correctly in fewer than half the
    attempts: strict inequality against total/2 as a real number, so 8 of 16
    drops while 7 of 16 keeps."""
    return log.correct < log.total / 2
