import json
import statistics

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from groundeval import MockBackend, RewardWeights, combined_reward, group_advantages
from groundeval.errors import PreconditionError
from groundeval.rewards import score_completion, score_group

finite_rewards = st.lists(
    st.floats(min_value=-100, max_value=100, allow_nan=False), min_size=2, max_size=16)


class TestRewardWeights:
    def test_defaults(self):
        weights = RewardWeights()
        assert (weights.w_format, weights.w_correct, weights.w_ground) == (1.0, 1.0, 2.0)
        assert weights.total == 4.0

    def test_negative_rejected(self):
        with pytest.raises(PreconditionError):
            RewardWeights(w_ground=-1.0)

    def test_all_zero_rejected(self):
        with pytest.raises(PreconditionError):
            RewardWeights(0.0, 0.0, 0.0)


class TestCombinedReward:
    def test_upper_bound(self):
        assert combined_reward(1, 1.0, 1.0) == pytest.approx(4.0)

    def test_lower_bound(self):
        assert combined_reward(0, 0.0, -1.0) == pytest.approx(0.0)

    def test_hand_arithmetic(self):
        # Oracle: 1 + 2/3 + 2 * (0.5 + 1) / 2 = 3.16666...
        assert combined_reward(1, 2 / 3, 0.5) == pytest.approx(1 + 2 / 3 + 1.5)

    def test_custom_weights(self):
        weights = RewardWeights(0.5, 2.0, 1.0)
        assert combined_reward(1, 0.5, 0.0, weights) == pytest.approx(0.5 + 1.0 + 0.5)

    def test_out_of_range_components_rejected(self):
        with pytest.raises(PreconditionError):
            combined_reward(0.5, 0.0, 0.0)
        with pytest.raises(PreconditionError):
            combined_reward(1, 1.5, 0.0)
        with pytest.raises(PreconditionError):
            combined_reward(1, 0.0, -1.1)

    @given(st.integers(0, 1), st.floats(0, 1), st.floats(-1, 1),
           st.integers(0, 1), st.floats(0, 1), st.floats(-1, 1))
    @settings(max_examples=200, deadline=None)
    def test_monotone_in_each_component(self, f1, c1, g1, f2, c2, g2):
        lo = combined_reward(min(f1, f2), min(c1, c2), min(g1, g2))
        hi = combined_reward(max(f1, f2), max(c1, c2), max(g1, g2))
        assert lo <= hi + 1e-12


class TestGroupAdvantages:
    def test_hand_computed_population_std(self):
        # Oracle: mean 2, population std sqrt(2/3) = 0.8164966...
        advantages = group_advantages([1.0, 2.0, 3.0])
        expected = (3.0 - 2.0) / statistics.pstdev([1.0, 2.0, 3.0])
        assert advantages == pytest.approx([-1.224744871391589, 0.0, 1.224744871391589])
        assert advantages[2] == pytest.approx(expected)

    def test_constant_group_all_zero(self):
        assert group_advantages([5.0, 5.0, 5.0, 5.0]) == [0.0, 0.0, 0.0, 0.0]

    def test_two_point_symmetry(self):
        assert group_advantages([0.0, 4.0]) == pytest.approx([-1.0, 1.0])

    def test_group_of_one_rejected(self):
        with pytest.raises(PreconditionError):
            group_advantages([1.0])

    @given(finite_rewards)
    @settings(max_examples=200, deadline=None)
    def test_zero_mean_unit_std(self, rewards):
        advantages = group_advantages(rewards)
        assert abs(sum(advantages) / len(advantages)) < 1e-9
        if statistics.pstdev(rewards) > 1e-8:
            assert statistics.pstdev(advantages) == pytest.approx(1.0, abs=1e-6)

    @given(finite_rewards, st.floats(min_value=-50, max_value=50, allow_nan=False))
    @settings(max_examples=150, deadline=None)
    def test_shift_invariance(self, rewards, shift):
        assume(statistics.pstdev(rewards) == 0 or statistics.pstdev(rewards) > 1e-3)
        base = group_advantages(rewards)
        shifted = group_advantages([r + shift for r in rewards])
        assert shifted == pytest.approx(base, abs=1e-9)

    @given(finite_rewards, st.floats(min_value=0.01, max_value=50, allow_nan=False))
    @settings(max_examples=150, deadline=None)
    def test_positive_scale_invariance(self, rewards, scale):
        assume(statistics.pstdev(rewards) == 0 or statistics.pstdev(rewards) > 1e-3)
        base = group_advantages(rewards)
        scaled = group_advantages([r * scale for r in rewards])
        assert scaled == pytest.approx(base, abs=1e-9)


def valid_medical(names, quote=None):
    """Completion whose reasonings optionally quote a case sentence."""
    reasoning = quote or "Generic reasoning that mentions chest pain and troponin."
    return json.dumps({"diagnoses": [
        {"name": name, "reasoning": reasoning} for name in names]})


class TestScoreGroup:
    def test_malformed_completion_gets_zero_format(self, medical_case, backend):
        good = valid_medical(["d1", "d2", "d3", "d4", "d5"])
        records = score_group(medical_case, [good, "not json"],
                              RewardWeights(), backend)
        assert records[0].r_format == 1
        assert records[1].r_format == 0
        assert records[1].r_correct == 0.0
        assert records[1].r_ground == 0.0
        assert records[1].combined == pytest.approx(1.0)  # grounding shift alone

    def test_identical_completions_zero_advantages(self, medical_case, backend):
        raw = valid_medical(["d1", "d2", "d3", "d4", "d5"])
        records = score_group(medical_case, [raw] * 4, RewardWeights(), backend)
        assert all(r.advantage == 0.0 for r in records)
        assert len({r.combined for r in records}) == 1

    def test_deterministic(self, medical_case, backend):
        completions = [
            valid_medical(["Acute myocardial infarction", "d2", "d3", "d4", "d5"]),
            valid_medical(["x1", "x2", "x3", "x4", "x5"]),
            "broken {",
        ]
        first = score_group(medical_case, completions, RewardWeights(), backend)
        second = score_group(medical_case, completions, RewardWeights(), backend)
        assert [r.to_dict() for r in first] == [r.to_dict() for r in second]

    def test_manual_composition_two_completions(self, medical_case, backend):
        # Oracle: recompose the record from the component operations.
        from groundeval import MatchConfig, embedding_correctness, format_reward
        from groundeval.grounding import grounding_reward_medical
        from groundeval.parsing import parse_medical

        completions = [
            valid_medical(
                ["Acute myocardial infarction", "Heart failure", "d3", "d4", "d5"],
                quote="the troponin level is elevated at 4.67"),
            valid_medical(["other1", "other2", "other3", "other4", "other5"]),
        ]
        records = score_group(medical_case, completions, RewardWeights(), backend)
        for raw, record in zip(completions, records):
            parsed = parse_medical(raw)
            expected_f = format_reward(parsed)
            expected_c = embedding_correctness(
                [p.label for p in parsed.predictions], medical_case.references,
                MatchConfig(), backend).fraction
            expected_g = grounding_reward_medical(medical_case, parsed, 3, backend)
            assert record.r_format == expected_f
            assert record.r_correct == pytest.approx(expected_c)
            assert record.r_ground == pytest.approx(expected_g)
            assert record.combined == pytest.approx(
                expected_f + expected_c + 2 * (expected_g + 1) / 2)

    def test_advantages_sum_to_zero(self, medical_case, backend):
        completions = [
            valid_medical(["Acute myocardial infarction", "d2", "d3", "d4", "d5"]),
            valid_medical(["a", "b", "c", "d", "e"]),
            "nope",
            valid_medical(["Heart failure", "x", "y", "z", "w"]),
        ]
        records = score_group(medical_case, completions, RewardWeights(), backend)
        assert abs(sum(r.advantage for r in records)) < 1e-9

    def test_single_completion_rejected(self, medical_case, backend):
        with pytest.raises(PreconditionError):
            score_group(medical_case, ["only one"], RewardWeights(), backend)

    def test_legal_exact_match_and_sentencewise(self, legal_case):
        correct = json.dumps({
            "answer": "B",
            "reasoning": "A landlord must provide reasonable notice before entering a rented dwelling.",
        })
        wrong = json.dumps({"answer": "C", "reasoning": "Some unrelated argument entirely."})
        backend = MockBackend(seed=0)
        records = score_group(legal_case, [correct, wrong], RewardWeights(), backend)
        assert records[0].r_correct == 1.0
        assert records[1].r_correct == 0.0
        # The correct answer quotes the gold passage verbatim: entailed.
        assert records[0].r_ground == pytest.approx(0.7)
        assert records[0].combined > records[1].combined
        assert records[0].advantage == pytest.approx(1.0)
        assert records[1].advantage == pytest.approx(-1.0)

    def test_failing_backend_aborts_group_with_index(self, medical_case):
        from groundeval.backends import ScorerBackend
        from groundeval.errors import TransportError

        class FlakyBackend(MockBackend):
            def __init__(self):
                super().__init__(seed=0)
                self.calls = 0

            def embed_batch(self, texts):
                self.calls += 1
                if self.calls > 1:
                    raise TransportError("backend went away")
                return super().embed_batch(texts)

        completions = [valid_medical([f"d{i}", "b", "c", "d", "e"]) for i in range(3)]
        with pytest.raises(TransportError) as excinfo:
            score_group(medical_case, completions, RewardWeights(), FlakyBackend())
        assert "completion 1" in str(excinfo.value)


class TestScoreCompletion:
    def test_record_fields_consistent(self, medical_case, backend):
        record = score_completion(
            medical_case, valid_medical(["d1", "d2", "d3", "d4", "d5"]),
            RewardWeights(), backend)
        assert record.r_ground_normalized == pytest.approx((record.r_ground + 1) / 2)
        assert 0.0 <= record.combined <= RewardWeights().total
