import pytest

from hypothesearch.backends import ScriptedBackend
from hypothesearch.errors import NoCandidates
from hypothesearch.executor import ExecutionLimits, ExecutionReport, ProgramCandidate
from hypothesearch.generate import Hypothesis, Provenance
from hypothesearch.prompts import PromptLibrary
from hypothesearch.reduce_store import ReviewHub, SelectionRecord
from hypothesearch.search import (
    Mode,
    PRESETS,
    SearchConfig,
    SolveContext,
    cluster_by_signature,
    implement_hypothesis,
    select_best,
    solve_task,
)
from hypothesearch.task_model import Domain, Example, Task

PROMPTS = PromptLibrary()
FAST = ExecutionLimits(timeout_s=5.0)

GOOD = "def transform_list(input_list):\n    return input_list[::-1]\n"
IDENT = "def transform_list(input_list):\n    return list(input_list)\n"
SORTED_SRC = "def transform_list(input_list):\n    return sorted(input_list)\n"
BOOM = "def transform_list(input_list):\n    raise RuntimeError('boom')\n"


def fenced(src):
    return f"```python\n{src}```"


def reverse_task(task_id="rev"):
    return Task(id=task_id, domain=Domain.LISTFN,
                train=(Example([1, 2], [2, 1]), Example([1, 2, 3], [3, 2, 1]),
                       Example([5], [5])),
                test=(Example([4, 6], [6, 4]),))


def ctx_for(backend):
    return SolveContext(backend=backend, prompts=PROMPTS)


def cfg(**kw):
    kw.setdefault("limits", FAST)
    kw.setdefault("mode", Mode.FULL)
    return SearchConfig(**kw)


HYP = Hypothesis("rev/h0", "reverse the list", Provenance.SAMPLED)


class TestImplementHypothesis:
    def test_early_return_zero_revisions(self):
        backend = ScriptedBackend([fenced(IDENT), fenced(GOOD)])
        out = implement_hypothesis(reverse_task(), HYP, cfg(K=2, n_feedback=3),
                                   ctx_for(backend))
        assert out.verified
        assert out.revise_calls == 0
        assert out.chosen.source.strip() == GOOD.strip()

    def test_first_revision_verifies(self):
        backend = ScriptedBackend([fenced(IDENT), fenced(SORTED_SRC), fenced(GOOD)])
        out = implement_hypothesis(reverse_task(), HYP, cfg(K=2, n_feedback=3),
                                   ctx_for(backend))
        assert out.verified
        assert out.revise_calls == 1
        assert out.chosen.round == 1

    def test_zero_feedback_argmax_fallback(self):
        # BOOM passes 0/3 cases, identity passes the [5] case only (1/3)
        backend = ScriptedBackend([fenced(BOOM), fenced(IDENT)])
        out = implement_hypothesis(reverse_task(), HYP, cfg(K=2, n_feedback=0),
                                   ctx_for(backend))
        assert not out.verified
        assert out.revise_calls == 0
        assert out.chosen.source.strip() == IDENT.strip()

    def test_revise_bound(self):
        responses = [fenced(IDENT), fenced(SORTED_SRC)] + [fenced(BOOM)] * 8
        backend = ScriptedBackend(responses)
        out = implement_hypothesis(reverse_task(), HYP, cfg(K=2, n_feedback=2),
                                   ctx_for(backend))
        assert not out.verified
        assert out.revise_calls <= 2 * 2
        assert out.revise_calls == 4

    def test_cluster_feedback_single_call_per_iteration(self):
        responses = [fenced(IDENT)] * 8 + [fenced(IDENT)] * 2
        backend = ScriptedBackend(responses)
        out = implement_hypothesis(
            reverse_task(), HYP,
            cfg(K=8, n_feedback=2, cluster_feedback=True), ctx_for(backend))
        assert not out.verified
        assert out.revise_calls_per_iteration == [1, 1]
        assert out.revise_calls == 2

    def test_all_extraction_failures(self):
        backend = ScriptedBackend(["prose only"] * 2)
        with pytest.raises(NoCandidates):
            implement_hypothesis(reverse_task(), HYP, cfg(K=2), ctx_for(backend))


class TestSelectBest:
    def make(self, pass_counts):
        from hypothesearch.executor import CaseResult, CaseStatus
        candidates, reports = {}, {}
        for i, pc in enumerate(pass_counts):
            cid = f"c{i}"
            candidates[cid] = ProgramCandidate(cid, "def f():\n    pass", seq=i)
            cases = [CaseResult(CaseStatus.PASS)] * pc + \
                    [CaseResult(CaseStatus.WRONG_OUTPUT)] * (3 - pc)
            reports[cid] = ExecutionReport(cid, cases)
        return reports, candidates

    def test_argmax(self):
        reports, candidates = self.make([2, 3, 1])
        assert select_best(reports, candidates).id == "c1"

    def test_tie_break_earliest(self):
        reports, candidates = self.make([3, 3])
        assert select_best(reports, candidates).id == "c0"

    def test_empty(self):
        with pytest.raises(NoCandidates):
            select_best({}, {})


class TestClusterBySignature:
    def evaluate_sources(self, sources):
        from hypothesearch.executor import evaluate
        task = reverse_task()
        candidates = {}
        reports = []
        for i, src in enumerate(sources):
            cand = ProgramCandidate(f"c{i}", src, seq=i)
            candidates[cand.id] = cand
            reports.append(evaluate(cand, task.train, task.domain, FAST))
        return reports, candidates

    def test_three_signatures(self):
        reports, candidates = self.evaluate_sources(
            [IDENT, IDENT, SORTED_SRC, BOOM, BOOM, BOOM])
        clusters = cluster_by_signature(reports, candidates)
        # IDENT and SORTED_SRC agree on this task's train outputs
        # ([2,1]... both wrong identically? no: sorted([1,2])=[1,2]=identity) —
        # so IDENT/SORTED cluster together, BOOM separately.
        sizes = sorted(len(c) for c in clusters)
        assert sizes == [3, 3]

    def test_identity_clustering_when_distinct(self):
        reports, candidates = self.evaluate_sources([GOOD, BOOM])
        clusters = cluster_by_signature(reports, candidates)
        assert len(clusters) == 2

    def test_duplicates_single_cluster(self):
        reports, candidates = self.evaluate_sources([IDENT] * 8)
        clusters = cluster_by_signature(reports, candidates)
        assert len(clusters) == 1
        assert clusters[0][0].candidate_id == "c0"


class TestSolveTask:
    def hypothesis_then_program(self, hyp_texts, program_responses):
        return ScriptedBackend(hyp_texts + program_responses)

    def test_full_mode_solved(self):
        backend = self.hypothesis_then_program(
            ["reverse the list"], [fenced(GOOD)])
        out = solve_task(reverse_task(), cfg(mode=Mode.FULL, k_hypotheses=1, K=1),
                         ctx_for(backend))
        assert out.solved and out.verified and not out.false_positive
        assert out.test_correct == [True]

    def test_false_positive_detection(self):
        # passes all train but wrong on test
        trick_task = Task(id="fp", domain=Domain.LISTFN,
                          train=(Example([1, 2], [1, 2]),),
                          test=(Example([9, 3], [3, 9]),))
        backend = self.hypothesis_then_program(["keep it"], [fenced(IDENT)])
        out = solve_task(trick_task, cfg(mode=Mode.FULL, k_hypotheses=1, K=1,
                                         n_feedback=0), ctx_for(backend))
        assert out.verified and not out.solved and out.false_positive

    def test_program_only(self):
        backend = ScriptedBackend([fenced(GOOD)])
        out = solve_task(reverse_task(), cfg(mode=Mode.PROGRAM_ONLY, K=1),
                         ctx_for(backend))
        assert out.solved and out.verified

    def test_direct_mode(self):
        backend = ScriptedBackend(["[6, 4]"])
        out = solve_task(reverse_task(), cfg(mode=Mode.DIRECT), ctx_for(backend))
        assert out.solved

    def test_human_selected_none_correct(self, tmp_path):
        hub = ReviewHub(tmp_path)
        task = reverse_task()
        backend = ScriptedBackend(["bad rule", "another bad rule"])
        context = SolveContext(backend=backend, prompts=PROMPTS, review_hub=hub,
                               run_id="r1")

        import threading

        def annotate():
            while not hub.list_pending("r1"):
                pass
            hub.record_selection(SelectionRecord("r1", task.id, "tester", ()))

        t = threading.Thread(target=annotate)
        t.start()
        out = solve_task(task, cfg(mode=Mode.HUMAN_SELECTED, k_hypotheses=2,
                                   selection_timeout_s=5.0), context)
        t.join()
        assert out.skipped and not out.solved
        assert out.revise_calls == 0 and out.chosen is None

    def test_human_selected_with_choice(self, tmp_path):
        hub = ReviewHub(tmp_path)
        task = reverse_task()
        backend = ScriptedBackend(["bad rule", "reverse the list", fenced(GOOD)])
        context = SolveContext(backend=backend, prompts=PROMPTS, review_hub=hub,
                               run_id="r1")
        # prefill before the run: headless path
        hub.enqueue_for_review(
            "r1", task,
            [Hypothesis(f"{task.id}/h{i}", t, Provenance.SAMPLED)
             for i, t in enumerate(["bad rule", "reverse the list"])])
        hub.record_selection(SelectionRecord("r1", task.id, "tester",
                                             (f"{task.id}/h1",)))
        out = solve_task(task, cfg(mode=Mode.HUMAN_SELECTED, k_hypotheses=2, K=1),
                         context)
        assert out.solved and out.verified

    def test_human_written(self):
        backend = ScriptedBackend([fenced(GOOD)])
        context = SolveContext(backend=backend, prompts=PROMPTS,
                               human_hypotheses={"rev": ["reverse the input list"]})
        out = solve_task(reverse_task(), cfg(mode=Mode.HUMAN_WRITTEN, K=1), context)
        assert out.solved

    def test_sygus_solved_iff_verified(self):
        task = Task(id="sy", domain=Domain.SYGUS,
                    train=(Example("ab", "ba"), Example("xyz", "zyx")), test=())
        src = "def transform_string(input_string):\n    return input_string[::-1]\n"
        backend = ScriptedBackend(["reverse the string", fenced(src)])
        out = solve_task(task, cfg(mode=Mode.FULL, k_hypotheses=1, K=1),
                         ctx_for(backend))
        assert out.solved and out.verified

    def test_backend_error_recorded(self):
        from hypothesearch.errors import BackendError

        def script(req):
            raise BackendError("down")

        out = solve_task(reverse_task(), cfg(mode=Mode.FULL, k_hypotheses=1),
                         ctx_for(ScriptedBackend(script)))
        assert out.error and "BackendError" in out.error
        assert not out.solved


class TestConfig:
    def test_full_requires_hypotheses(self):
        with pytest.raises(ValueError):
            SearchConfig(mode=Mode.FULL, k_hypotheses=0)

    def test_summarized_requires_m(self):
        with pytest.raises(ValueError):
            SearchConfig(mode=Mode.SUMMARIZED, m_summaries=None)

    def test_presets(self):
        p = PRESETS["arc-summarized"]
        assert (p.k_hypotheses, p.m_summaries, p.K, p.n_feedback) == (64, 8, 8, 3)
        p = PRESETS["1darc-full"]
        assert (p.k_hypotheses, p.K) == (16, 4)
        p = PRESETS["sygus-full"]
        assert (p.k_hypotheses, p.K, p.n_feedback) == (4, 2, 2)
        p = PRESETS["listfn-full"]
        assert (p.k_hypotheses, p.K) == (64, 1)
        assert PRESETS["arc-program-only"].K == 64
