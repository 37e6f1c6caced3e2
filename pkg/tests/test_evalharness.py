import json

import pytest

from _synth import synthetic_ledger
from hypothesearch.backends import ScriptedBackend, Transcript
from hypothesearch.errors import MissingPriceTable
from hypothesearch.evalharness import (
    ReferenceRow,
    RunConfig,
    RunLedger,
    estimate_cost,
    format_accuracy,
    report,
    run,
    score,
)
from hypothesearch.executor import ExecutionLimits
from hypothesearch.prompts import PromptLibrary
from hypothesearch.search import Mode, SearchConfig, SolveContext
from hypothesearch.task_model import Domain, Example, Task

PROMPTS = PromptLibrary()
GOOD = "```python\ndef transform_list(input_list):\n    return input_list[::-1]\n```"


def reverse_task(task_id):
    return Task(id=task_id, domain=Domain.LISTFN,
                train=(Example([1, 2], [2, 1]), Example([3], [3])),
                test=(Example([4, 6], [6, 4]),))


def make_config(**kw):
    search = SearchConfig(mode=Mode.PROGRAM_ONLY, K=1, n_feedback=0,
                          limits=ExecutionLimits(timeout_s=5.0))
    kw.setdefault("run_id", "r1")
    kw.setdefault("search", search)
    return RunConfig(**kw)


class TestFormatAccuracy:
    @pytest.mark.parametrize("solved,total,domain,expected", [
        (84, 89, Domain.SYGUS, "94.3"),   # floored, not rounded
        (66, 108, Domain.ARC1D, "61.1"),
        (79, 108, Domain.ARC1D, "73.1"),
        (30, 100, Domain.ARC, "30"),
        (17, 100, Domain.ARC, "17"),
        (69, 100, Domain.LISTFN, "69"),
        (0, 10, Domain.ARC, "0"),
        (0, 0, Domain.ARC, "-"),
    ])
    def test_cases(self, solved, total, domain, expected):
        assert format_accuracy(solved, total, domain) == expected


class TestRunLedger:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "run.jsonl"
        ledger = synthetic_ledger(Domain.ARC, Mode.SUMMARIZED, 3, 5, path=path)
        ledger.append_usage("program", 10, 4000, 2000)

        loaded = RunLedger.load(path)
        assert loaded.header == ledger.header
        assert loaded.outcomes == ledger.outcomes
        assert loaded.usage == ledger.usage
        assert loaded.hash() == ledger.hash()

    def test_hash_ignores_usage_and_order(self, tmp_path):
        a = synthetic_ledger(Domain.ARC, Mode.FULL, 2, 4)
        b = synthetic_ledger(Domain.ARC, Mode.FULL, 2, 4)
        b.append_usage("program", 1, 10, 10)
        assert a.hash() == b.hash()

    def test_hash_sensitive_to_outcomes(self):
        a = synthetic_ledger(Domain.ARC, Mode.FULL, 2, 4)
        b = synthetic_ledger(Domain.ARC, Mode.FULL, 3, 4)
        assert a.hash() != b.hash()


class TestRun:
    def test_executes_all_tasks(self, tmp_path):
        tasks = [reverse_task(f"t{i}") for i in range(3)]
        ctx = SolveContext(backend=ScriptedBackend([GOOD] * 3), prompts=PROMPTS)
        ledger = run(make_config(), tasks, ctx, tmp_path / "run.jsonl")
        assert len(ledger.outcomes) == 3
        assert all(doc["solved"] for doc in ledger.outcomes.values())

    def test_checkpoint_resume_skips_completed(self, tmp_path):
        path = tmp_path / "run.jsonl"
        tasks = [reverse_task(f"t{i}") for i in range(3)]
        calls = []

        def script(req):
            calls.append(req)
            return [GOOD] * req.n

        ctx = SolveContext(backend=ScriptedBackend(script), prompts=PROMPTS)
        first = run(make_config(), tasks, ctx, path)
        n_calls = len(calls)
        assert n_calls == 3

        resumed = run(make_config(), tasks, ctx, path)
        assert len(calls) == n_calls  # zero new backend requests
        assert resumed.hash() == first.hash()

    def test_partial_ledger_resumes_remaining_only(self, tmp_path):
        path = tmp_path / "run.jsonl"
        tasks = [reverse_task(f"t{i}") for i in range(3)]
        ctx = SolveContext(backend=ScriptedBackend([GOOD] * 3), prompts=PROMPTS)
        full_hash = run(make_config(), tasks, ctx, path).hash()

        # rebuild the ledger keeping header + first outcome only
        lines = path.read_text().splitlines()
        path.write_text("\n".join(lines[:2]) + "\n")
        ctx2 = SolveContext(backend=ScriptedBackend([GOOD] * 2), prompts=PROMPTS)
        resumed = run(make_config(), tasks, ctx2, path)
        assert len(resumed.outcomes) == 3
        assert resumed.hash() == full_hash

    def test_parallel_matches_serial_hash(self, tmp_path):
        tasks = [reverse_task(f"t{i}") for i in range(4)]

        def script(req):
            return [GOOD] * req.n

        serial = run(make_config(), tasks,
                     SolveContext(backend=ScriptedBackend(script), prompts=PROMPTS),
                     tmp_path / "serial.jsonl")
        parallel = run(make_config(workers=3), tasks,
                       SolveContext(backend=ScriptedBackend(script), prompts=PROMPTS),
                       tmp_path / "parallel.jsonl")
        assert serial.hash() == parallel.hash()

    def test_unknown_task_ids_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            run(make_config(task_ids=["ghost"]), [reverse_task("t0")],
                SolveContext(backend=ScriptedBackend([]), prompts=PROMPTS))

    def test_usage_recorded_from_transcript(self, tmp_path):
        tasks = [reverse_task("t0")]
        transcript = Transcript(tmp_path / "t.jsonl", backend_id="scripted")
        ctx = SolveContext(backend=ScriptedBackend([GOOD]), prompts=PROMPTS,
                           transcript=transcript)
        ledger = run(make_config(), tasks, ctx, tmp_path / "run.jsonl")
        assert "program" in ledger.usage
        assert ledger.usage["program"]["requests"] == 1


class TestScore:
    def test_accuracy(self):
        card = score(synthetic_ledger(Domain.ARC, Mode.SUMMARIZED, 30, 100))
        assert (card.solved, card.total) == (30, 100)
        assert card.accuracy_display == "30"

    def test_zero(self):
        card = score(synthetic_ledger(Domain.ARC, Mode.DIRECT, 0, 10))
        assert card.accuracy_display == "0"

    def test_false_positives_counted(self):
        card = score(synthetic_ledger(Domain.ARC, Mode.FULL, 5, 10,
                                      false_positives=1))
        assert card.false_positives == 1
        assert card.verified == 6

    def test_rescore_is_pure(self, tmp_path):
        path = tmp_path / "run.jsonl"
        synthetic_ledger(Domain.SYGUS, Mode.FULL, 84, 89, path=path)
        first = score(RunLedger.load(path))
        second = score(RunLedger.load(path))
        assert first == second
        assert first.accuracy_display == "94.3"


class TestReport:
    def test_method_table_rows(self):
        ledgers = [
            synthetic_ledger(Domain.ARC, Mode.DIRECT, 17, 100, label="Direct"),
            synthetic_ledger(Domain.ARC, Mode.PROGRAM_ONLY, 23, 100,
                             label="Program Only"),
            synthetic_ledger(Domain.ARC, Mode.SUMMARIZED, 30, 100,
                             label="Summarized"),
        ]
        rep = report(ledgers)
        assert "| Direct | 17 |" in rep.markdown
        assert "| Program Only | 23 |" in rep.markdown
        assert "| Summarized | 30 |" in rep.markdown
        assert "ARC,Summarized,3,30,100,30" in rep.csv

    def test_sweep_table(self):
        ledgers = [synthetic_ledger(Domain.ARC, Mode.HUMAN_WRITTEN, s, 100,
                                    label="Human-Written", n_feedback=n)
                   for n, s in [(0, 38), (1, 44), (2, 45), (3, 45)]]
        rep = report(ledgers)
        assert "| Human-Written | 38 | 44 | 45 | 45 |" in rep.markdown
        # the method table shows the full-feedback figure
        assert "| Human-Written | 45 |" in rep.markdown

    def test_reference_rows(self):
        ledgers = [synthetic_ledger(Domain.ARC1D, Mode.FULL, 79, 108,
                                    label="Full")]
        rep = report(ledgers, references=[
            ReferenceRow(Domain.ARC1D, "Direct (reported)", "39.6")])
        assert "| Direct (reported) | 39.6 |" in rep.markdown
        assert "| Full | 73.1 |" in rep.markdown

    def test_empty_ledger_headers_only(self):
        rep = report([])
        assert rep.markdown.startswith("# Results")
        assert rep.csv.splitlines() == ["dataset,method,n_feedback,solved,total,accuracy"]

    def test_false_positive_section(self):
        ledgers = [synthetic_ledger(Domain.ARC, Mode.FULL, 5, 10, label="Full",
                                    false_positives=1)]
        rep = report(ledgers)
        assert "| ARC | Full | 1 |" in rep.markdown

    def test_hit_rate_section(self):
        ledgers = [synthetic_ledger(Domain.ARC, Mode.HUMAN_SELECTED, 33, 100,
                                    label="Human-Selected", skipped=40)]
        rep = report(ledgers)
        assert "| ARC | Human-Selected | 60/100 |" in rep.markdown

    def test_deterministic(self):
        ledgers = [synthetic_ledger(Domain.ARC, Mode.FULL, 5, 10)]
        assert report(ledgers).markdown == report(ledgers).markdown


class TestEstimateCost:
    def ledger_with_usage(self):
        ledger = synthetic_ledger(Domain.LISTFN, Mode.FULL, 1, 2)
        ledger.append_usage("hypothesis", 2, 1000, 400)
        ledger.append_usage("program", 4, 3000, 1000)
        return ledger

    def test_exact_arithmetic(self):
        cost = estimate_cost(self.ledger_with_usage(),
                             {"prompt_per_1k": 0.03, "completion_per_1k": 0.06})
        assert cost.per_stage["hypothesis"] == pytest.approx(0.03 + 0.024)
        assert cost.per_stage["program"] == pytest.approx(0.09 + 0.06)
        assert cost.total == pytest.approx(0.204)
        assert cost.requests == 6
        assert cost.mean_per_task == pytest.approx(0.102)

    def test_zero_requests_zero_cost(self):
        ledger = synthetic_ledger(Domain.LISTFN, Mode.FULL, 1, 2)
        cost = estimate_cost(ledger, {"prompt_per_1k": 1, "completion_per_1k": 1})
        assert cost.total == 0.0

    def test_missing_price_table(self):
        with pytest.raises(MissingPriceTable):
            estimate_cost(self.ledger_with_usage(), {"prompt_per_1k": 0.03})
