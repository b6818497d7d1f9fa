"""Exception taxonomy shared by the graph, scoring, and serving layers.

Every error carries a stable machine-readable ``code`` so the CLI and the
HTTP service can map failures to exit codes / status codes without string
matching on messages.
"""

from __future__ import annotations


class RewardEngineError(Exception):
    """Base class for all engine errors."""

    code = "engine_error"

    def detail(self) -> dict:
        """Extra structured context for error documents. Override as needed."""
        return {}


class EmptyConcept(RewardEngineError):
    """A concept string is empty after normalization."""

    code = "empty_concept"


class InvalidQuorum(RewardEngineError):
    """Quorum is not a positive integer <= the number of extractor sets."""

    code = "invalid_quorum"


class UnknownNode(RewardEngineError):
    code = "unknown_node"

    def __init__(self, node: str):
        super().__init__(f"node not present in graph: {node!r}")
        self.node = node

    def detail(self) -> dict:
        return {"node": self.node}


class CyclicGraph(RewardEngineError):
    """Raised where acyclicity is a precondition; carries one witness cycle."""

    code = "cyclic_graph"

    def __init__(self, cycle: list[str]):
        super().__init__("graph contains a cycle: " + " -> ".join(cycle))
        self.cycle = list(cycle)

    def detail(self) -> dict:
        return {"cycle": self.cycle}


class EmptyGraph(RewardEngineError):
    """An operation that needs at least one node got an empty graph."""

    code = "empty_graph"


class RedundantEdge(RewardEngineError):
    """A graph required to be transitively reduced contains an implied edge."""

    code = "redundant_edge"

    def __init__(self, edge: tuple[str, str, str]):
        super().__init__(f"edge is implied by the remaining graph: {edge!r}")
        self.edge = edge

    def detail(self) -> dict:
        return {"edge": list(self.edge)}


class DimensionMismatch(RewardEngineError):
    code = "dimension_mismatch"


class ZeroVector(RewardEngineError):
    """Cosine similarity is undefined against an all-zero vector."""

    code = "zero_vector"


class ProviderUnavailable(RewardEngineError):
    """The embedding backend could not be reached or answered malformed."""

    code = "provider_unavailable"

    def __init__(self, message: str, retryable: bool = True):
        hint = "retry may succeed" if retryable else "retry will not help"
        super().__init__(f"{message} ({hint})")
        self.retryable = retryable

    def detail(self) -> dict:
        return {"retryable": self.retryable}


class EmptyReference(RewardEngineError):
    """Scoring against an empty reference is an error, never a silent score."""

    code = "empty_reference"


class InvalidWeights(RewardEngineError):
    code = "invalid_weights"


class InvalidReward(RewardEngineError):
    code = "invalid_reward"


class InvalidGroup(RewardEngineError):
    """A rollout group violates its shape or log-probability invariants."""

    code = "invalid_group"


class RatioOverflow(RewardEngineError):
    """A probability ratio or KL term left the finite float range."""

    code = "ratio_overflow"


class ParseError(RewardEngineError):
    """A wire document failed to parse or validate.

    ``offset`` is the byte offset into the UTF-8 document where the problem
    sits, when it can be located; ``field`` names the offending field for
    record-shaped documents.
    """

    code = "parse_error"

    def __init__(self, message: str, *, offset: int | None = None, field: str | None = None):
        parts = [message]
        if field is not None:
            parts.append(f"field={field}")
        if offset is not None:
            parts.append(f"offset={offset}")
        super().__init__("; ".join(parts))
        self.offset = offset
        self.field = field

    def detail(self) -> dict:
        out: dict = {}
        if self.offset is not None:
            out["offset"] = self.offset
        if self.field is not None:
            out["field"] = self.field
        return out
