import math

import numpy as np
import pytest

import genpairs
import oracles
from cegreward.embedding import DiscreteMatchProvider, HashEmbeddingProvider
from cegreward.errors import EmptyReference, InvalidWeights
from cegreward.graph import (
    CriticalEvidenceGraph,
    Triplet,
    build_graph,
    connected_components,
)
from cegreward.matching import build_element_map
from cegreward.reward import (
    RewardWeights,
    answer_reward,
    chain_completeness,
    crp_reward,
    format_reward,
    node_coverage,
    reasoning_reward,
    structural_correctness,
)

DISCRETE = DiscreteMatchProvider()
HASH = HashEmbeddingProvider(dimension=64)


def T(s, p, o):
    return Triplet(s, p, o)


def chain_ceg(*names):
    """a -> b -> ... -> conclusion, one predicate."""
    edges = [T(a, "leads to", b) for a, b in zip(names, names[1:])]
    return CriticalEvidenceGraph(graph=build_graph(edges), conclusion=names[-1])


def fan_in_ceg():
    """Five edges: a->b->c->z plus d->z and e->z; conclusion z."""
    edges = [
        T("a", "p", "b"),
        T("b", "p", "c"),
        T("c", "p", "z"),
        T("d", "p", "z"),
        T("e", "p", "z"),
    ]
    return CriticalEvidenceGraph(graph=build_graph(edges), conclusion="z")


class TestRewardWeights:
    def test_defaults(self):
        w = RewardWeights()
        assert (w.lambda_node, w.lambda_struct, w.lambda_chain) == (0.5, 0.3, 0.2)
        assert (w.w_reason, w.w_answer, w.w_format) == (0.3, 0.6, 0.1)

    def test_lambda_sum_enforced(self):
        with pytest.raises(InvalidWeights):
            RewardWeights(lambda_node=0.5, lambda_struct=0.5, lambda_chain=0.2)

    def test_w_sum_enforced(self):
        with pytest.raises(InvalidWeights):
            RewardWeights(w_reason=0.5, w_answer=0.6, w_format=0.1)

    def test_negative_rejected(self):
        with pytest.raises(InvalidWeights):
            RewardWeights(lambda_node=1.2, lambda_struct=-0.2, lambda_chain=0.0)

    def test_degenerate_but_valid(self):
        w = RewardWeights(lambda_node=1.0, lambda_struct=0.0, lambda_chain=0.0)
        assert w.lambda_node == 1.0


class TestNodeCoverage:
    def test_identical_node_sets_is_exactly_one(self):
        ref = chain_ceg("a", "b", "c")
        assert node_coverage(ref, ref.graph, HASH) == 1.0

    def test_empty_generation(self):
        ref = chain_ceg("a", "b")
        assert node_coverage(ref, build_graph([]), HASH) == 0.0

    def test_discrete_half_overlap(self):
        ref = chain_ceg("a", "b", "c", "d")
        gen = build_graph([], nodes=["a", "b", "x"])
        assert node_coverage(ref, gen, DISCRETE) == 0.5

    def test_negative_similarity_clamps_to_zero(self):
        class AntiProvider(HashEmbeddingProvider):
            def similarity_matrix(self, gen_elements, ref_elements):
                return np.full((len(gen_elements), len(ref_elements)), -0.9)

        ref = chain_ceg("a", "b")
        gen = build_graph([], nodes=["q"])
        assert node_coverage(ref, gen, AntiProvider(dimension=64)) == 0.0


class TestStructuralCorrectness:
    def test_identity(self):
        ref = chain_ceg("a", "b", "c")
        emap = build_element_map(ref.graph, ref.graph, DISCRETE)
        score, recalled = structural_correctness(ref, ref.graph, emap)
        assert score == 1.0 and recalled == ref.edges

    def test_empty_generation(self):
        ref = chain_ceg("a", "b", "c")
        gen = build_graph([])
        emap = build_element_map(gen, ref.graph, DISCRETE)
        score, recalled = structural_correctness(ref, gen, emap)
        assert score == 0.0 and recalled == frozenset()

    def test_discrete_three_of_four(self):
        ref = chain_ceg("a", "b", "c", "d", "e")
        kept = [T("a", "leads to", "b"), T("b", "leads to", "c"), T("c", "leads to", "d")]
        gen = build_graph(kept)
        emap = build_element_map(gen, ref.graph, DISCRETE)
        score, recalled = structural_correctness(ref, gen, emap)
        assert score == 0.75 and recalled == frozenset(kept)

    def test_one_generated_triplet_may_witness_many(self):
        ref = CriticalEvidenceGraph(
            graph=build_graph([T("aa", "pp", "bb"), T("aa variant", "pp", "bb")]),
            conclusion="bb",
        )
        gen = build_graph([T("aa", "pp", "bb")])
        emap = build_element_map(gen, ref.graph, HASH, theta_entity=0.3, theta_relation=0.3)
        score, recalled = structural_correctness(ref, gen, emap)
        assert score == 1.0 and recalled == ref.edges

    def test_edgeless_reference_rejected(self):
        ref = CriticalEvidenceGraph(graph=build_graph([], nodes=["only"]), conclusion="only")
        gen = build_graph([])
        emap = build_element_map(gen, ref.graph, DISCRETE)
        with pytest.raises(EmptyReference):
            structural_correctness(ref, gen, emap)


class TestChainCompleteness:
    def test_nothing_recalled(self):
        assert chain_completeness(fan_in_ceg(), frozenset()) == 0.0

    def test_fully_recalled_connected(self):
        ref = fan_in_ceg()
        assert chain_completeness(ref, ref.edges) == 1.0

    def test_two_components_gives_point_four(self):
        ref = fan_in_ceg()
        recalled = frozenset({T("a", "p", "b"), T("b", "p", "c"), T("d", "p", "z")})
        # components: {a-b-c} with 2 triplets, {d-z} with 1; C_max = 2 of 5
        assert chain_completeness(ref, recalled) == 0.4

    def test_recalled_must_be_subset(self):
        with pytest.raises(ValueError):
            chain_completeness(fan_in_ceg(), frozenset({T("x", "p", "y")}))

    def test_edgeless_reference_rejected(self):
        ref = CriticalEvidenceGraph(graph=build_graph([], nodes=["n"]), conclusion="n")
        with pytest.raises(EmptyReference):
            chain_completeness(ref, frozenset())


class TestReasoningReward:
    def test_all_ones_is_exactly_one(self):
        assert reasoning_reward(1.0, 1.0, 1.0, RewardWeights()) == 1.0

    def test_all_zeros(self):
        assert reasoning_reward(0.0, 0.0, 0.0, RewardWeights()) == 0.0

    def test_worked_example(self):
        got = reasoning_reward(1.0, 0.75, 0.4, RewardWeights())
        assert got == pytest.approx(0.805, abs=1e-12)

    def test_component_bounds_enforced(self):
        with pytest.raises(ValueError):
            reasoning_reward(1.5, 0.0, 0.0, RewardWeights())


class TestAnswerReward:
    def test_exact_match(self):
        got = answer_reward("so the answer is \\boxed{A}", "A")
        assert got == (1, True, "A")

    def test_mismatch(self):
        assert answer_reward("\\boxed{B}", "A").value == 0

    def test_missing_box_sets_flag(self):
        got = answer_reward("no box here", "A")
        assert got.value == 0 and got.box_found is False and got.extracted is None

    def test_last_box_wins(self):
        got = answer_reward("first \\boxed{A} then \\boxed{B}", "B")
        assert got.value == 1 and got.extracted == "B"

    def test_nested_braces(self):
        got = answer_reward("x \\boxed{\\frac{1}{2}}", "\\frac{1}{2}")
        assert got.value == 1 and got.extracted == "\\frac{1}{2}"

    def test_unclosed_box_falls_back_to_previous(self):
        got = answer_reward("\\boxed{A} and \\boxed{broken", "A")
        assert got.value == 1 and got.extracted == "A"

    def test_normalized_comparison(self):
        assert answer_reward("\\boxed{ Trastuzumab }", "trastuzumab").value == 1

    def test_judge_seam(self):
        seen = {}

        def judge(extracted, gold):
            seen["args"] = (extracted, gold)
            return True

        got = answer_reward("\\boxed{a long free-form answer}", "gold", judge)
        assert got.value == 1
        assert seen["args"] == ("a long free-form answer", "gold")

    def test_judge_not_called_without_box(self):
        def judge(extracted, gold):  # pragma: no cover
            raise AssertionError("must not be called")

        assert answer_reward("nothing", "gold", judge).value == 0

    def test_no_gold_scores_zero(self):
        assert answer_reward("\\boxed{A}", None).value == 0


class TestFormatReward:
    def test_reasoning_then_one_box(self):
        assert format_reward("let us think. therefore \\boxed{A}") == 1

    def test_two_boxes(self):
        assert format_reward("thinking \\boxed{A} and \\boxed{B}") == 0

    def test_box_without_reasoning(self):
        assert format_reward("\\boxed{A}") == 0
        assert format_reward("   \\boxed{A} trailing") == 0

    def test_no_box(self):
        assert format_reward("just text") == 0

    def test_trailing_text_allowed(self):
        assert format_reward("reasoning \\boxed{A}.") == 1


class TestCrpReward:
    def perfect_case(self, provider):
        ref = chain_ceg("anemia", "iron deficiency", "ferrous sulfate")
        response = "the deficit explains the finding, so \\boxed{Ferrous Sulfate}"
        return crp_reward(
            ref, ref.graph, response, "ferrous sulfate", provider=provider
        )

    @pytest.mark.parametrize("provider", [DISCRETE, HASH], ids=["discrete", "hash"])
    def test_perfect_generation_is_exactly_one(self, provider):
        got = self.perfect_case(provider)
        assert got.r_node == 1.0 and got.r_struct == 1.0 and got.r_chain == 1.0
        assert got.r_reason == 1.0 and got.r_answer == 1 and got.r_format == 1
        assert got.r_crp == 1.0
        assert got.largest_component_size == 2

    def test_empty_generation_wrong_answer_is_zero(self):
        ref = chain_ceg("a", "b", "c")
        got = crp_reward(ref, build_graph([]), "\\boxed{wrong}", "c", provider=DISCRETE)
        # no reasoning before the box, so the format bit is 0 as well
        assert got.r_crp == 0.0
        assert got.r_node == got.r_struct == got.r_chain == 0.0

    def test_missing_response_scores_zero_bits(self):
        ref = chain_ceg("a", "b", "c")
        got = crp_reward(ref, ref.graph, provider=DISCRETE)
        assert got.r_answer == 0 and got.r_format == 0
        assert got.answer_found is False and got.extracted_answer is None
        assert got.r_crp == pytest.approx(0.3, abs=1e-12)  # w_reason * 1.0

    def test_missing_gold_keeps_box_diagnostics(self):
        ref = chain_ceg("a", "b", "c")
        got = crp_reward(ref, ref.graph, "thinking \\boxed{c}", None, provider=DISCRETE)
        assert got.r_answer == 0 and got.answer_found is True
        assert got.extracted_answer == "c" and got.r_format == 1

    def test_custom_format_checker_seam(self):
        ref = chain_ceg("a", "b")
        got = crp_reward(
            ref,
            ref.graph,
            "\\boxed{A} \\boxed{B}",
            "b",
            provider=DISCRETE,
            format_checker=lambda response: 1,
        )
        assert got.r_format == 1

    def test_judge_seam_reaches_answer_bit(self):
        ref = chain_ceg("a", "b")
        got = crp_reward(
            ref,
            ref.graph,
            "reasoning \\boxed{some free text}",
            "b",
            provider=DISCRETE,
            judge=lambda extracted, gold: True,
        )
        assert got.r_answer == 1

    def test_composite_exactness(self):
        rng = np.random.default_rng(7)
        weights = RewardWeights()
        for _ in range(25):
            ref, gen = genpairs.random_pair(rng)
            got = crp_reward(ref, gen, "thinking \\boxed{x}", "x", provider=HASH)
            assert got.r_reason == math.fsum(
                (
                    weights.lambda_node * got.r_node,
                    weights.lambda_struct * got.r_struct,
                    weights.lambda_chain * got.r_chain,
                )
            )
            assert got.r_crp == math.fsum(
                (
                    weights.w_reason * got.r_reason,
                    weights.w_answer * got.r_answer,
                    weights.w_format * got.r_format,
                )
            )

    @pytest.mark.parametrize("provider", [DISCRETE, HASH], ids=["discrete", "hash"])
    def test_bounds_and_dominance_on_random_pairs(self, provider):
        rng = np.random.default_rng(11)
        for _ in range(40):
            ref, gen = genpairs.random_pair(rng)
            got = crp_reward(ref, gen, provider=provider)
            for value in (got.r_node, got.r_struct, got.r_chain, got.r_reason, got.r_crp):
                assert 0.0 <= value <= 1.0
            assert got.r_chain <= got.r_struct

    def test_discrete_reduction_matches_set_oracles(self):
        rng = np.random.default_rng(13)
        for _ in range(60):
            ref, gen = genpairs.random_pair(rng)
            got = crp_reward(ref, gen, provider=DISCRETE)
            assert got.r_node == oracles.node_recall_oracle(ref.nodes, gen.nodes)
            expected_struct, expected_recalled = oracles.triplet_recall_oracle(
                ref.edges, gen.edges
            )
            assert got.r_struct == expected_struct
            assert got.recalled_triplets == expected_recalled
            assert got.r_chain == oracles.chain_score_oracle(ref.edges, expected_recalled)

    @pytest.mark.parametrize("provider", [DISCRETE, HASH], ids=["discrete", "hash"])
    def test_monotone_under_generated_additions(self, provider):
        rng = np.random.default_rng(17)
        for _ in range(25):
            ref, gen = genpairs.random_pair(rng)
            base = crp_reward(ref, gen, provider=provider)
            extra = list(gen.edges) + genpairs.noise_triplets(rng, 2)
            ref_edges = ref.sorted_edges()
            extra.append(ref_edges[int(rng.integers(len(ref_edges)))])
            grown = crp_reward(ref, build_graph(extra), provider=provider)
            # exact: pair similarities are batch-shape independent
            assert grown.r_node >= base.r_node
            assert grown.r_struct >= base.r_struct
            assert grown.r_chain >= base.r_chain

    def test_breakdown_component_size_consistent(self):
        rng = np.random.default_rng(19)
        for _ in range(20):
            ref, gen = genpairs.random_pair(rng)
            got = crp_reward(ref, gen, provider=DISCRETE)
            comps = connected_components(got.recalled_triplets)
            expected = len(comps[0].triplets) if comps else 0
            assert got.largest_component_size == expected
            assert got.r_chain == expected / len(ref.edges)
