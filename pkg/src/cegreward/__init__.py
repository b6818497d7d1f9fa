"""Evidence-graph extraction and process-reward scoring for reasoning traces.

The package turns (subject, predicate, object) triplets into critical
evidence graphs, scores generated reasoning against a reference graph with
soft semantic matching, and exposes the group-relative policy-optimization
numerics, a CLI, and an HTTP service on top of the same core.
"""

from .config import EngineConfig, ProviderConfig, load_config, make_provider
from .dataset import (
    AttemptLog,
    DatasetRecord,
    hard_case_filter,
    load_dataset_record,
    save_dataset_record,
)
from .documents import (
    ceg_document,
    dump_document,
    extract_ceg_with_stats,
    parse_ceg_document,
    parse_triplet_document,
    triplet_document,
)
from .embedding import (
    CachedProvider,
    DiscreteMatchProvider,
    EmbeddingProvider,
    HashEmbeddingProvider,
    HttpEmbeddingProvider,
)
from .graph import (
    CriticalEvidenceGraph,
    EvidenceGraph,
    ExtractionBundle,
    Triplet,
    backward_causal_subgraph,
    build_graph,
    connected_components,
    detect_cycle,
    ensemble_merge,
    extract_ceg,
    graph_jaccard,
    normalize_concept,
    transitive_reduction,
)
from .grpo import (
    GrpoGroup,
    GrpoResult,
    clipped_surrogate,
    group_advantages,
    grpo_objective,
    kl_penalty,
    prob_ratio,
)
from .estimators import CegExtractor, CrpScorer
from .matching import build_element_map, select_conclusion_node
from .reward import (
    RewardBreakdown,
    RewardWeights,
    answer_reward,
    chain_completeness,
    crp_reward,
    format_reward,
    node_coverage,
    reasoning_reward,
    structural_correctness,
)

__version__ = "0.1.0"

__all__ = [
    "AttemptLog",
    "CachedProvider",
    "CegExtractor",
    "CriticalEvidenceGraph",
    "CrpScorer",
    "DatasetRecord",
    "DiscreteMatchProvider",
    "EmbeddingProvider",
    "EngineConfig",
    "EvidenceGraph",
    "ExtractionBundle",
    "GrpoGroup",
    "GrpoResult",
    "HashEmbeddingProvider",
    "HttpEmbeddingProvider",
    "ProviderConfig",
    "RewardBreakdown",
    "RewardWeights",
    "Triplet",
    "answer_reward",
    "backward_causal_subgraph",
    "build_element_map",
    "build_graph",
    "ceg_document",
    "chain_completeness",
    "clipped_surrogate",
    "connected_components",
    "crp_reward",
    "detect_cycle",
    "dump_document",
    "ensemble_merge",
    "extract_ceg",
    "extract_ceg_with_stats",
    "format_reward",
    "graph_jaccard",
    "group_advantages",
    "grpo_objective",
    "hard_case_filter",
    "kl_penalty",
    "load_config",
    "load_dataset_record",
    "make_provider",
    "node_coverage",
    "normalize_concept",
    "parse_ceg_document",
    "parse_triplet_document",
    "prob_ratio",
    "reasoning_reward",
    "save_dataset_record",
    "select_conclusion_node",
    "structural_correctness",
    "transitive_reduction",
    "triplet_document",
    "__version__",
]
