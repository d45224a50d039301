"""Acceptance suite: every release criterion at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -s`` to see one PASS line per
criterion. Everything runs against the deterministic mock backend.
"""

import json
import math
import statistics
import time
from pathlib import Path

import numpy as np
import pytest

from groundeval import (
    CaseRecord,
    MockBackend,
    RewardWeights,
    classify,
    combined_reward,
    faithfulness,
    ground_prediction,
    group_advantages,
    truncate_pair,
)
from groundeval.aggregate import Cluster, rank_clusters
from groundeval.cli import main
from groundeval.grounding import build_premises
from groundeval.retrieval import build_index, chunk_document, query

from test_cli import approx_equal, read_jsonl

DATA = Path(__file__).parent / "data"
GOLDEN = DATA / "golden"

WORDS = ["finding", "troponin", "elevated", "chest", "pain", "normal", "severe",
         "stenosis", "pressure", "rhythm", "zq1", "wv2", "xm3", "contradicts:"]


def announce(name):
    print(f"ACCEPTANCE: {name} ... PASS")


class TestGroundingOracleEquivalence:
    def test_brute_force_scan_1000_fixtures(self):
        rng = np.random.default_rng(101)
        backend = MockBackend(seed=9)
        start = time.monotonic()
        mismatches = 0
        for trial in range(1000):
            n_premises = int(rng.integers(1, 11))
            sections = tuple(
                (f"s{k}", " ".join(rng.choice(WORDS, size=int(rng.integers(2, 8)))))
                for k in range(n_premises))
            case = CaseRecord(id=f"t{trial}", anchor="anchor context line",
                              sections=sections, references=("r",))
            hypothesis = " ".join(rng.choice(WORDS, size=int(rng.integers(1, 6))))
            report = ground_prediction(case, hypothesis, backend)
            # Independent oracle: exhaustive scan, first maximum wins.
            deltas = [backend.nli_batch([(p, hypothesis)])[0].delta
                      for p in build_premises(case).texts]
            best = 0
            for i, d in enumerate(deltas):
                if abs(d) > abs(deltas[best]):
                    best = i
            if (report.argmax_premise != best
                    or not math.isclose(report.max_score, deltas[best], abs_tol=1e-12)):
                mismatches += 1
        elapsed = time.monotonic() - start
        assert mismatches == 0
        assert elapsed < 5.0, f"grounding oracle sweep took {elapsed:.2f}s"
        announce(f"grounding oracle equivalence (1000 fixtures, {elapsed:.2f}s)")


class TestCombinedRewardArithmetic:
    def test_10000_random_triples(self):
        rng = np.random.default_rng(202)
        weights = RewardWeights()
        for _ in range(10_000):
            r_f = int(rng.integers(0, 2))
            r_c = float(rng.random())
            r_g = float(rng.uniform(-1, 1))
            value = combined_reward(r_f, r_c, r_g, weights)
            expected = 1.0 * r_f + 1.0 * r_c + 2.0 * (r_g + 1.0) / 2.0
            assert abs(value - expected) <= 1e-12
            assert 0.0 <= value <= 4.0
        announce("combined reward arithmetic (10000 triples, 1e-12)")


class TestAdvantageContract:
    def test_10000_random_groups_of_8(self):
        rng = np.random.default_rng(303)
        for _ in range(10_000):
            rewards = [float(x) for x in rng.uniform(0.0, 4.0, size=8)]
            advantages = group_advantages(rewards)
            assert abs(sum(advantages) / 8) < 1e-9
            if statistics.pstdev(rewards) > 1e-8:
                assert abs(statistics.pstdev(advantages) - 1.0) < 1e-6
            shift = float(rng.uniform(-10, 10))
            scale = float(rng.uniform(0.1, 10))
            shifted = group_advantages([r + shift for r in rewards])
            scaled = group_advantages([r * scale for r in rewards])
            for a, b, c in zip(advantages, shifted, scaled):
                assert abs(a - b) < 1e-9
                assert abs(a - c) < 1e-9
        assert group_advantages([2.5] * 8) == [0.0] * 8
        announce("advantage contract (10000 groups of 8)")


class TestTaxonomyPartition:
    def test_exhaustive_threshold_sweep(self):
        correct_labels = set()
        incorrect_labels = set()
        steps = np.arange(-1000, 1001)  # g = k / 1000
        previous = {}
        change_points = {True: [], False: []}
        for correct in (True, False):
            for k in steps:
                g = float(k) / 1000.0
                label = classify(correct, g)
                (correct_labels if correct else incorrect_labels).add(label)
                key = correct
                if key in previous and previous[key] != label:
                    change_points[key].append(g)
                previous[key] = label
        assert len(correct_labels) == 3 and len(incorrect_labels) == 3
        assert correct_labels.isdisjoint(incorrect_labels)
        # Strict thresholds: the closed interval ends at +-0.5, so labels
        # flip stepping past -0.5 - eps and +0.5 + eps.
        assert change_points[True] == [-0.5, 0.501]
        assert change_points[False] == [-0.5, 0.501]
        assert faithfulness(1, 1, 1) == pytest.approx(1 / 3, abs=0)
        assert faithfulness(1, 1, 1) * 3 == 1.0
        announce("taxonomy partition sweep (4002 points) and faithfulness(1,1,1)=1/3")


class TestSelfConsistencyDominance:
    def test_1000_random_cluster_pairs(self):
        rng = np.random.default_rng(404)
        for _ in range(1000):
            v_low = int(rng.integers(1, 20))
            v_high = v_low + int(rng.integers(1, 10))
            clusters = []
            for name, votes in (("low", v_low), ("high", v_high)):
                cluster = Cluster(member_names=[name], centroid=np.ones(1),
                                  representative_name=name)
                cluster.vote_count = votes
                cluster.avg_position = float(rng.uniform(1, 5))
                cluster.composite_score = 100.0 * votes - cluster.avg_position
                clusters.append(cluster)
            ranked = rank_clusters(clusters)
            assert ranked[0].representative_name == "high"
        announce("self-consistency vote dominance (1000 pairs)")


class TestRetrievalExactness:
    def test_chunking_spans(self, backend):
        text = " ".join(f"tok{i}" for i in range(600))
        spans = [c.token_span for c in chunk_document(text, backend)]
        assert spans == [(0, 320), (256, 576), (512, 600)]

    def test_200_queries_match_brute_force(self, backend):
        rng = np.random.default_rng(505)
        chunks = []
        for i in range(50):
            chunks.extend(chunk_document(
                f"chunk {i} contains " + " ".join(rng.choice(WORDS, size=5)),
                backend, doc_id=f"d{i}"))
        chunks = chunks[:50]
        index = build_index(chunks, backend)
        for _ in range(200):
            text = " ".join(rng.choice(WORDS, size=int(rng.integers(1, 6))))
            query_vector = backend.embed_batch([text])[0]
            sims = index.matrix @ query_vector
            expected = sorted(range(len(chunks)), key=lambda i: (-sims[i], i))
            for k in (1, 3, 10):
                hits = query(index, text, backend, k=k)
                got = [index.chunks.index(c) for c, _ in hits]
                assert got == expected[:k]
        announce("retrieval exactness (200 queries, k in {1,3,10}) and 600-token spans")


class TestTruncationSafety:
    def test_1000_random_pairs(self, backend):
        rng = np.random.default_rng(606)
        limit = 512
        for _ in range(1000):
            premise = " ".join(rng.choice(WORDS, size=int(rng.integers(0, 700))))
            hypothesis = " ".join(rng.choice(WORDS, size=int(rng.integers(1, 400))))
            out_premise, out_hypothesis = truncate_pair(premise, hypothesis, limit, backend)
            assert out_hypothesis == hypothesis
            total = (backend.tokenize(out_premise).count
                     + backend.tokenize(out_hypothesis).count)
            assert total <= limit
        announce("truncation safety (1000 pairs, 512-token limit)")


class TestEndToEndGolden:
    def test_fixture_reproduces_goldens_twice(self, tmp_path):
        start = time.monotonic()
        for run in range(2):
            rewards_out = tmp_path / f"rewards-{run}.jsonl"
            report_out = tmp_path / f"report-{run}.json"
            csv_out = tmp_path / f"report-{run}.csv"
            assert main(["score", "--mock",
                         "--cases", str(DATA / "cases_medical.jsonl"),
                         "--rollouts", str(DATA / "rollouts_medical_groups.jsonl"),
                         "-o", str(rewards_out)]) == 0
            assert main(["evaluate", "--mock",
                         "--cases", str(DATA / "cases_medical.jsonl"),
                         "--rollouts", str(DATA / "rollouts_medical_eval.jsonl"),
                         "-o", str(report_out)]) == 0
            assert main(["evaluate", "--mock", "--format", "csv",
                         "--label", "fixture-medical",
                         "--cases", str(DATA / "cases_medical.jsonl"),
                         "--rollouts", str(DATA / "rollouts_medical_eval.jsonl"),
                         "-o", str(csv_out)]) == 0
            approx_equal(read_jsonl(rewards_out),
                         read_jsonl(GOLDEN / "rewards_medical.jsonl"))
            approx_equal(json.loads(report_out.read_text()),
                         json.loads((GOLDEN / "report_medical.json").read_text()))
            header = csv_out.read_text().splitlines()[0]
            assert header.split(",") == [
                "label",
                "f1_at_k", "f1_at_k_ci_lower", "f1_at_k_ci_upper",
                "g_avg", "g_avg_ci_lower", "g_avg_ci_upper",
                "g_max", "g_max_ci_lower", "g_max_ci_upper",
                "eb_pct", "h_pct", "w_pct", "lg_pct", "faithfulness_pct",
            ]
        elapsed = time.monotonic() - start
        assert elapsed < 10.0, f"end-to-end fixture runs took {elapsed:.2f}s"
        announce(f"end-to-end golden (20 cases, 2 runs, {elapsed:.2f}s)")


class TestServiceCliParity:
    def test_score_group_endpoint_matches_cli(self, tmp_path):
        from fastapi.testclient import TestClient

        from groundeval import EngineConfig
        from groundeval.service import create_app

        out = tmp_path / "rewards.jsonl"
        assert main(["score", "--mock",
                     "--cases", str(DATA / "cases_medical.jsonl"),
                     "--rollouts", str(DATA / "rollouts_medical_groups.jsonl"),
                     "-o", str(out)]) == 0
        offline = read_jsonl(out)
        cases = {row["id"]: row for row in read_jsonl(DATA / "cases_medical.jsonl")}
        client = TestClient(create_app(EngineConfig(), backend=MockBackend(seed=0)))
        online = []
        for rollout in read_jsonl(DATA / "rollouts_medical_groups.jsonl"):
            response = client.post("/v1/score-group", json={
                "case": cases[rollout["case_id"]],
                "completions": rollout["completions"]})
            assert response.status_code == 200
            for record in response.json()["records"]:
                online.append({"case_id": rollout["case_id"], **record})
        approx_equal(online, offline)
        announce("service/CLI parity on the 20-case fixture")
