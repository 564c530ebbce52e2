"""Acceptance suite: one test per release criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
"""

import json
import math
import random
import threading
import time

import pytest
import requests
from click.testing import CliRunner

from scholareval.citations import EvidenceStore, LinkChecker, LinkClass, extract_links
from scholareval.cli import main
from scholareval.config import build_environment
from scholareval.contribution import RelevanceJudgment, is_seed
from scholareval.dataset import dataset_counts, write_scholarideas
from scholareval.embeddings import FixtureEmbeddingBackend, embedding_filter
from scholareval.errors import ValidationError
from scholareval.gateway import LlmGateway
from scholareval.harness import CoverageScore, aggregate_coverage
from scholareval.models import (
    PaperEvidence,
    ResearchIdea,
    RubricAxis,
    RubricItem,
    RubricSeverity,
    RubricType,
    parse_partial_date,
)
from scholareval.ratelimit import RateLimiter
from scholareval.report import serialize_report
from scholareval.retrieval import CallRecorder
from scholareval.runner import run_evaluation

import corpusgen
from conftest import make_config
from test_ratelimit import VirtualClock, window_property_holds


def _pass(name: str) -> None:
    print(f"ACCEPTANCE PASS: {name}")


def _replay_run(bundle, tmp_path, corpus=None, modules=("soundness", "contribution"),
                **overrides):
    config = make_config(
        bundle["transcript"], corpus or bundle["corpus"], tmp_path / "jobs", **overrides
    )
    recorder = CallRecorder()
    gateway = LlmGateway()
    tags = []
    gateway.add_prompt_listener(lambda tag, ident, text: tags.append(tag))
    env = build_environment(config, gateway=gateway, recorder=recorder)
    store = EvidenceStore()
    report = run_evaluation(bundle["idea"], list(modules), env, store=store)
    return report, store, recorder, tags, env


class TestFixtureEndToEnd:
    def test_cli_completes_fast_and_byte_identical(self, bundle, tmp_path):
        runner = CliRunner()
        artifacts = []
        for attempt in range(3):
            out = tmp_path / f"run{attempt}"
            started = time.monotonic()
            result = runner.invoke(
                main,
                [
                    "run",
                    "--idea", str(bundle["idea_path"]),
                    "--idea-id", "idea",
                    "--cutoff", corpusgen.CUTOFF,
                    "--modules", "soundness,contribution",
                    "--out", str(out),
                    "--config", str(bundle["config_path"]),
                ],
            )
            elapsed = time.monotonic() - started
            assert result.exit_code == 0, result.output
            assert elapsed < 10.0, f"run {attempt} took {elapsed:.2f}s"
            artifacts.append(
                (
                    (out / "report.md").read_bytes(),
                    (out / "report.json").read_bytes(),
                )
            )
        assert artifacts[0] == artifacts[1] == artifacts[2]
        markdown = artifacts[0][0].decode()
        assert "## Soundness" in markdown and "## Contribution" in markdown
        _pass("fixture end-to-end: 3 byte-identical runs, both modules, < 10 s")


class _StoreOnlySession:
    """HTTP stub that resolves exactly the evidence-store URLs."""

    def __init__(self, allowed: set[str]):
        self.allowed = allowed

    class _Resp:
        def __init__(self, status):
            self.status_code = status

    def head(self, url, allow_redirects=True, timeout=None):
        return self._Resp(200 if url in self.allowed else 404)

    def get(self, url, allow_redirects=True, timeout=None):
        return self.head(url)


class TestZeroInvalidity:
    def test_report_urls_subset_of_store_and_rate_zero(self, bundle, tmp_path):
        report, store, _, _, _ = _replay_run(bundle, tmp_path)
        report_urls = set()
        for text in report.all_section_texts():
            report_urls.update(extract_links(text))
        report_urls.update(ev.url for _, ev in report.bibliography if ev.url)
        assert report_urls, "report carries no links; vacuous run"
        assert report_urls <= store.urls()

        from scholareval.citations import invalidity_rate

        session = _StoreOnlySession(store.urls())
        rate = invalidity_rate(report, session)
        assert rate == 0.0
        _pass("zero-invalidity: report URLs ⊆ evidence store, invalidity_rate == 0.0")


class TestCutoffSoundness:
    def test_no_post_cutoff_citations_anywhere(self, bundle, tmp_path):
        report, store, _, _, _ = _replay_run(bundle, tmp_path)
        cutoff = parse_partial_date(corpusgen.CUTOFF)
        corpus = json.loads(bundle["corpus"].read_text(encoding="utf-8"))
        url_to_paper = {
            record["url"]: record for record in corpus["papers"].values()
        }
        checked = 0
        for text in report.all_section_texts():
            for url in extract_links(text):
                paper = url_to_paper[url]
                assert paper.get("date"), f"undated paper {paper['paper_id']} cited"
                assert parse_partial_date(paper["date"]) <= cutoff, url
                checked += 1
        for _, evidence in report.bibliography:
            assert evidence.publication_date is not None
            assert evidence.publication_date <= cutoff
            checked += 1
        assert checked > 0
        post_cutoff_ids = {"SX", "PX", "CX", "RX", "PU"}
        cited_ids = {ev.paper_id for _, ev in report.bibliography}
        assert not (cited_ids & post_cutoff_ids)
        _pass("cutoff soundness: no section or bibliography entry post-dates the cutoff")


class TestBudgetConformance:
    def test_no_stage_exceeds_defaults_on_oversupplied_corpus(self, bundle, tmp_path):
        report, _, recorder, tags, env = _replay_run(
            bundle, tmp_path, corpus=bundle["oversupply"]
        )
        # The corpus oversupplies every stage; the caps must still hold.
        assert recorder.max_returned("snippet_search") == 20
        assert recorder.max_returned("paper_search") == 20
        assert recorder.max_returned("recommend_similar") == 8
        assert recorder.max_returned("fetch_references") == 10
        # One snippet query per method (two methods, no empty-result retries).
        assert recorder.count("snippet_search") == 2
        # Three paper-search queries per contribution statement (3 statements).
        assert recorder.count("paper_search") == 9
        # Pairwise comparison sampled down to at most 25 papers.
        assert tags.count("pairwise_comparison") == 25
        _pass("budget conformance: 1/20/3/20/8/10/25 holds under oversupply")


class TestSeedGate:
    def test_thousand_synthetic_judgments(self):
        rng = random.Random(42)
        for i in range(1000):
            score = rng.randint(0, 5)
            judgment = RelevanceJudgment(
                paper_id=f"p{i}", rationale="synthetic", score=score
            )
            assert is_seed(judgment, 3) == (score >= 3), (i, score)
        _pass("seed gate: augmentation entry iff relevance score >= 3 (1000 cases)")


class TestEmbeddingFilterOracle:
    @staticmethod
    def _brute_force(idea_vec, items, n):
        def cosine(u, v):
            dot = sum(a * b for a, b in zip(u, v))
            nu = math.sqrt(sum(a * a for a in u))
            nv = math.sqrt(sum(b * b for b in v))
            return dot / (nu * nv) if nu and nv else 0.0

        scored = sorted(
            ((cosine(vec, idea_vec), pid) for pid, vec in items),
            key=lambda t: (-t[0], t[1]),
        )
        return [pid for _, pid in scored[:n]]

    def test_200_random_corpora(self):
        rng = random.Random(2024)

        def unit_vector(dim):
            vec = [rng.gauss(0.0, 1.0) for _ in range(dim)]
            norm = math.sqrt(sum(x * x for x in vec)) or 1.0
            return [x / norm for x in vec]

        for trial in range(200):
            dim = rng.randint(2, 12)
            count = rng.randint(1, 30)
            vectors = {"idea": unit_vector(dim)}
            items = []
            for i in range(count):
                pid = f"p{i:02d}"
                vectors[pid] = unit_vector(dim)
                items.append((pid, vectors[pid]))
            backend = FixtureEmbeddingBackend(vectors)
            candidates = [
                PaperEvidence(paper_id=pid, abstract=pid) for pid, _ in items
            ]
            n = rng.randint(1, count)
            got = [
                c.paper_id
                for c in embedding_filter("idea", candidates, backend, n)
            ]
            assert got == self._brute_force(vectors["idea"], items, n), trial
        _pass("embedding-filter oracle: 200/200 corpora match brute-force top-n")


class TestAblationStructure:
    def test_each_flag_removes_exactly_its_call_class(self, bundle, tmp_path):
        baseline = _replay_run(bundle, tmp_path)
        _, _, recorder, tags, env = baseline
        assert env.documents.parse_calls > 0
        assert recorder.count("recommend_similar") > 0
        assert recorder.count("fetch_references") > 0
        assert tags.count("pairwise_comparison") > 0

        report, _, recorder, tags, env = _replay_run(
            bundle, tmp_path / "mre", ablate_mre=True
        )
        assert env.documents.parse_calls == 0
        assert env.documents.download_calls == 0
        assert len(report.soundness_sections) == 2
        assert tags.count("pairwise_comparison") > 0  # other stages intact

        report, _, recorder, tags, env = _replay_run(
            bundle, tmp_path / "pa", ablate_pa=True
        )
        assert recorder.count("recommend_similar") == 0
        assert recorder.count("fetch_references") == 0
        assert len(report.contribution_sections) == 2
        assert env.documents.parse_calls > 0  # soundness path intact

        report, _, recorder, tags, env = _replay_run(
            bundle, tmp_path / "pc", ablate_pc=True
        )
        assert tags.count("pairwise_comparison") == 0
        assert recorder.count("recommend_similar") > 0  # augmentation intact
        assert len(report.contribution_sections) == 2
        _pass("ablation structure: -MRE/-PA/-PC eliminate exactly their call classes")


class TestCoverageArithmetic:
    def test_means_match_hand_computation(self):
        rng = random.Random(9)
        rubric = RubricItem(
            statement="s", type=RubricType.STRENGTH,
            axis=RubricAxis.CONTRIBUTION, severity=RubricSeverity.MINOR,
        )
        for _ in range(50):
            values = [rng.randint(1, 5) for _ in range(rng.randint(1, 400))]
            scores = [
                CoverageScore(rubric=rubric, score=v, judge_rationale="r")
                for v in values
            ]
            expected = sum(values) / len(values)
            assert abs(aggregate_coverage(scores) - expected) <= 1e-12

    def test_out_of_range_scores_rejected(self):
        rubric = RubricItem(
            statement="s", type=RubricType.STRENGTH,
            axis=RubricAxis.CONTRIBUTION, severity=RubricSeverity.MINOR,
        )
        for bad in (0, 6, -3):
            with pytest.raises(ValidationError):
                CoverageScore(rubric=rubric, score=bad, judge_rationale="r")

    def test_dataset_counts_117_ideas_1076_rubrics(self, tmp_path):
        # Replica of the released dataset's shape: 117 ideas across four
        # disciplines carrying 1076 rubric lines in total.
        disciplines = ("ai", "neuroscience", "biochemistry", "ecology")
        idea_counts = (30, 29, 29, 29)
        per_idea = [10 if i < 23 else 9 for i in range(117)]
        assert sum(idea_counts) == 117 and sum(per_idea) == 1076
        pairs = []
        index = 0
        for discipline, count in zip(disciplines, idea_counts):
            for j in range(count):
                idea = ResearchIdea(
                    id=f"{discipline}/idea{j:03d}",
                    text=f"Idea {index} in {discipline}.",
                )
                rubrics = [
                    RubricItem(
                        statement=f"Rubric {k} for idea {index}.",
                        type=RubricType.WEAKNESS if k % 2 else RubricType.STRENGTH,
                        axis=RubricAxis.SOUNDNESS if k % 3 else RubricAxis.CONTRIBUTION,
                        severity=RubricSeverity.MAJOR if k % 2 else RubricSeverity.MINOR,
                    )
                    for k in range(per_idea[index])
                ]
                pairs.append((idea, rubrics))
                index += 1
        root = tmp_path / "scholarideas"
        write_scholarideas(root, pairs)
        assert dataset_counts(root) == (117, 1076)
        _pass("coverage arithmetic: means to 1e-12, range enforced, 117/1076 counts")


class TestLinkClassification:
    def test_status_matrix(self, status_server):
        checker = LinkChecker(requests.Session(), timeout=0.5)
        expected = {
            "200": LinkClass.NOT_PROVABLY_INVALID,
            "403": LinkClass.NOT_PROVABLY_INVALID,
            "404": LinkClass.PROVABLY_INVALID,
            "410": LinkClass.PROVABLY_INVALID,
            "500": LinkClass.PROVABLY_INVALID,
            "503": LinkClass.PROVABLY_INVALID,
            "timeout": LinkClass.UNREACHABLE,
        }
        got = {
            path: checker.check(f"{status_server}/{path}").classification
            for path in expected
        }
        assert got == expected
        _pass("link classification: {200,403,404,410,500,503,timeout} verdicts exact")


class TestRateLimitProperty:
    def test_hundred_queued_requests_under_virtual_clock(self):
        clock = VirtualClock()
        limiter = RateLimiter(10, 1.0, clock=clock.now, sleeper=clock.sleep)
        times: list[float] = []
        lock = threading.Lock()

        def worker(count):
            for _ in range(count):
                stamp = limiter.acquire()
                with lock:
                    times.append(stamp)

        threads = [threading.Thread(target=worker, args=(25,)) for _ in range(4)]
        for thread in threads:
            thread.start()
        for thread in threads:
            thread.join()
        assert len(times) == 100
        assert window_property_holds(times, 10, 1.0)
        _pass("rate limit: no 1 s window holds more than 10 of 100 queued requests")
