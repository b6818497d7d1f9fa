"""Wire documents: triplet lists, extracted graphs, and score breakdowns.

Every document is UTF-8 JSON with sorted keys, compact separators, and a
trailing newline, produced by the single `dump_document` serializer. The CLI
and the HTTP service both emit these exact bytes, which is what makes their
outputs byte-comparable.

Parse failures raise ParseError carrying the byte offset of the offending
spot where one can be located (malformed JSON, or a bad element inside the
"triplets" array).
"""

from __future__ import annotations

import json
from typing import Mapping, Sequence

from .errors import EmptyGraph, ParseError
from .graph import (
    CriticalEvidenceGraph,
    Triplet,
    build_graph,
    extract_ceg,
    transitive_reduction,
)
from .matching import select_conclusion_node
from .reward import RewardBreakdown

FORMAT_VERSION = 1


def dump_document(doc: Mapping) -> bytes:
    """The one serializer: stable key order, compact, newline-terminated."""
    text = json.dumps(doc, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return (text + "\n").encode("utf-8")


def _byte_offset(text: str, char_index: int) -> int:
    return len(text[:char_index].encode("utf-8"))


def _decode(data: bytes | str) -> str:
    if isinstance(data, str):
        return data
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError("document is not valid UTF-8", offset=exc.start) from exc


def _loads(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"malformed JSON: {exc.msg}", offset=_byte_offset(text, exc.pos)
        ) from exc


def _skip_ws(text: str, i: int) -> int:
    while i < len(text) and text[i] in " \t\n\r":
        i += 1
    return i


def _array_element_offsets(text: str, key: str) -> list[int]:
    """Char offsets of each element of the top-level array under `key`.

    Only called on documents that already json.loads-ed cleanly, so the
    walk cannot derail; any surprise degrades to "no offsets" rather than a
    second error.
    """
    decoder = json.JSONDecoder()
    try:
        i = _skip_ws(text, 0)
        if text[i] != "{":
            return []
        i = _skip_ws(text, i + 1)
        while text[i] != "}":
            name, i = json.decoder.scanstring(text, i + 1)
            i = _skip_ws(text, i)
            i = _skip_ws(text, i + 1)  # past the colon
            if name == key:
                if text[i] != "[":
                    return []
                offsets = []
                j = _skip_ws(text, i + 1)
                while text[j] != "]":
                    offsets.append(j)
                    _, j = decoder.raw_decode(text, j)
                    j = _skip_ws(text, j)
                    if text[j] == ",":
                        j = _skip_ws(text, j + 1)
                return offsets
            _, i = decoder.raw_decode(text, i)
            i = _skip_ws(text, i)
            if text[i] == ",":
                i = _skip_ws(text, i + 1)
        return []
    except (IndexError, ValueError):
        return []


def _parse_triplet_array(raw, text: str, key: str) -> list[Triplet]:
    if not isinstance(raw, list):
        raise ParseError(f'"{key}" must be an array', field=key)
    offsets = _array_element_offsets(text, key)

    def offset_of(index: int) -> int | None:
        return _byte_offset(text, offsets[index]) if index < len(offsets) else None

    out: list[Triplet] = []
    for index, item in enumerate(raw):
        if not isinstance(item, list) or len(item) != 3:
            raise ParseError(
                f"triplet {index} must be an array of exactly 3 strings",
                offset=offset_of(index),
                field=key,
            )
        if not all(isinstance(part, str) for part in item):
            raise ParseError(
                f"triplet {index} has a non-string member",
                offset=offset_of(index),
                field=key,
            )
        try:
            out.append(Triplet(*item))
        except Exception as exc:
            raise ParseError(
                f"triplet {index} is invalid: {exc}",
                offset=offset_of(index),
                field=key,
            ) from exc
    return out


def parse_triplet_document(data: bytes | str) -> list[Triplet]:
    """{"triplets": [[s,p,o], ...]} -> normalized triplets, document order."""
    text = _decode(data)
    doc = _loads(text)
    if not isinstance(doc, dict):
        raise ParseError("document must be a JSON object", offset=0)
    if "triplets" not in doc:
        raise ParseError('missing required field "triplets"', field="triplets")
    return _parse_triplet_array(doc["triplets"], text, "triplets")


def triplet_document(triplets: Sequence[Triplet]) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "triplets": [list(t.as_tuple()) for t in triplets],
    }


def ceg_document(ceg: CriticalEvidenceGraph, stats: Mapping[str, int] | None = None) -> dict:
    doc = {
        "format_version": FORMAT_VERSION,
        "triplets": [list(t.as_tuple()) for t in ceg.sorted_edges()],
        "conclusion": ceg.conclusion,
    }
    if stats is not None:
        doc["stats"] = {
            "nodes_in": int(stats["nodes_in"]),
            "nodes_out": int(stats["nodes_out"]),
            "edges_pruned": int(stats["edges_pruned"]),
        }
    return doc


def parse_ceg_document(data: bytes | str) -> tuple[CriticalEvidenceGraph, dict | None]:
    """Returns the validated graph plus the stats block when one is present."""
    text = _decode(data)
    doc = _loads(text)
    if not isinstance(doc, dict):
        raise ParseError("document must be a JSON object", offset=0)
    for name in ("triplets", "conclusion"):
        if name not in doc:
            raise ParseError(f'missing required field "{name}"', field=name)
    if not isinstance(doc["conclusion"], str):
        raise ParseError('"conclusion" must be a string', field="conclusion")
    triplets = _parse_triplet_array(doc["triplets"], text, "triplets")
    graph = build_graph(triplets)
    ceg = CriticalEvidenceGraph(graph=graph, conclusion=doc["conclusion"])
    stats = doc.get("stats")
    if stats is not None and not isinstance(stats, dict):
        raise ParseError('"stats" must be an object', field="stats")
    return ceg, stats


def extract_ceg_with_stats(
    triplets: Sequence[Triplet], answer: str, provider
) -> tuple[CriticalEvidenceGraph, dict]:
    """Full extraction pipeline: anchor selection, backward walk, reduction.

    Stats describe the shrinkage: nodes_in/nodes_out around the whole
    pipeline, edges_pruned counting every input edge that fell out (backward
    restriction and shortcut removal combined).
    """
    graph = build_graph(triplets)
    if graph.is_empty():
        raise EmptyGraph("cannot extract from an empty evidence graph")
    choice = select_conclusion_node(graph, answer, provider)
    ceg = extract_ceg(graph, choice.node)
    stats = {
        "nodes_in": len(graph.nodes),
        "nodes_out": len(ceg.nodes),
        "edges_pruned": len(graph.edges) - len(ceg.edges),
    }
    return ceg, stats


def breakdown_document(breakdown: RewardBreakdown) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "r_node": breakdown.r_node,
        "r_struct": breakdown.r_struct,
        "r_chain": breakdown.r_chain,
        "r_reason": breakdown.r_reason,
        "r_answer": breakdown.r_answer,
        "r_format": breakdown.r_format,
        "r_crp": breakdown.r_crp,
        "recalled_triplets": [list(t.as_tuple()) for t in sorted(breakdown.recalled_triplets)],
        "largest_component_size": breakdown.largest_component_size,
        "diagnostics": {
            "answer_found": breakdown.answer_found,
            "extracted_answer": breakdown.extracted_answer,
        },
    }


def parse_breakdown_document(data: bytes | str) -> RewardBreakdown:
    text = _decode(data)
    doc = _loads(text)
    if not isinstance(doc, dict):
        raise ParseError("document must be a JSON object", offset=0)
    required = (
        "r_node", "r_struct", "r_chain", "r_reason",
        "r_answer", "r_format", "r_crp",
        "recalled_triplets", "largest_component_size", "diagnostics",
    )
    for name in required:
        if name not in doc:
            raise ParseError(f'missing required field "{name}"', field=name)
    diagnostics = doc["diagnostics"]
    if not isinstance(diagnostics, dict):
        raise ParseError('"diagnostics" must be an object', field="diagnostics")
    recalled = _parse_triplet_array(doc["recalled_triplets"], text, "recalled_triplets")
    try:
        return RewardBreakdown(
            r_node=float(doc["r_node"]),
            r_struct=float(doc["r_struct"]),
            r_chain=float(doc["r_chain"]),
            r_reason=float(doc["r_reason"]),
            r_answer=int(doc["r_answer"]),
            r_format=int(doc["r_format"]),
            r_crp=float(doc["r_crp"]),
            recalled_triplets=frozenset(recalled),
            largest_component_size=int(doc["largest_component_size"]),
            answer_found=bool(diagnostics.get("answer_found", False)),
            extracted_answer=diagnostics.get("extracted_answer"),
        )
    except (TypeError, ValueError) as exc:
        raise ParseError(f"breakdown fields have wrong types: {exc}") from exc


def reduce_document(data: bytes | str) -> dict:
    """Triplet document -> transitively reduced triplet document."""
    triplets = parse_triplet_document(data)
    graph = build_graph(triplets)
    reduced = transitive_reduction(graph)
    return triplet_document(reduced.sorted_edges())
