"""Acceptance suite: one test (one pass/fail line under -v) per criterion."""

import hashlib
import json
import os
import random
import time
from pathlib import Path

import pytest

from _synth import published_ledgers, synthetic_ledger
from replay_lib import FIXTURE_ROOT, replay_once, run_specs
from hypothesearch.backends import ScriptedBackend, Stage
from hypothesearch.evalharness import RunConfig, report, run as run_harness, score
from hypothesearch.executor import ExecutionLimits, ProgramCandidate, CaseStatus, evaluate
from hypothesearch.generate import Hypothesis, Provenance
from hypothesearch.oracle import DslTerm, OracleBackend, make_dsl_task
from hypothesearch.prompts import PromptLibrary
from hypothesearch.reduce_store import ReviewHub, SelectionRecord
from hypothesearch.search import (
    Mode,
    SearchConfig,
    SolveContext,
    implement_hypothesis,
    solve_task,
)
from hypothesearch.task_model import (
    Domain,
    Example,
    Grid,
    Task,
    parse_grid_text,
    render_grid,
)

PROMPTS = PromptLibrary()
FAST = ExecutionLimits(timeout_s=5.0)
GOLDEN = Path(__file__).parent / "fixtures" / "golden"

REVERSE = "```python\ndef transform_list(input_list):\n    return input_list[::-1]\n```"
IDENT = "```python\ndef transform_list(input_list):\n    return list(input_list)\n```"
SORTED_SRC = "```python\ndef transform_list(input_list):\n    return sorted(input_list)\n```"
BOOM = "```python\ndef transform_list(input_list):\n    raise RuntimeError('x')\n```"


def reverse_task(task_id="rev"):
    return Task(id=task_id, domain=Domain.LISTFN,
                train=(Example([1, 2], [2, 1]), Example([1, 2, 3], [3, 2, 1])),
                test=(Example([4, 6], [6, 4]),))


def ctx_for(backend, **kw):
    return SolveContext(backend=backend, prompts=PROMPTS, **kw)


HYP = Hypothesis("rev/h0", "reverse the list", Provenance.SAMPLED)


def test_algorithm_conformance():
    start = time.monotonic()

    # (a) early return when an initial candidate verifies: revise_calls == 0
    out = implement_hypothesis(
        reverse_task(), HYP,
        SearchConfig(mode=Mode.FULL, K=2, n_feedback=3, limits=FAST),
        ctx_for(ScriptedBackend([IDENT, REVERSE])))
    assert out.verified and out.revise_calls == 0

    # (b) revision rounds never exceed N_feedback
    out = implement_hypothesis(
        reverse_task(), HYP,
        SearchConfig(mode=Mode.FULL, K=1, n_feedback=2, limits=FAST),
        ctx_for(ScriptedBackend([IDENT] + [BOOM] * 10)))
    assert not out.verified
    assert len(out.revise_calls_per_iteration) <= 2
    assert out.revise_calls == 2

    # (c) all candidates failing: argmax pass count, earliest-seq tie-break.
    # sorted passes the first case only (1/2); BOOM passes none.
    mix = Task(id="mix", domain=Domain.LISTFN,
               train=(Example([2, 1], [1, 2]), Example([1, 2], [2, 1])),
               test=(Example([5, 4], [4, 5]),))
    out = implement_hypothesis(
        mix, HYP,
        SearchConfig(mode=Mode.FULL, K=3, n_feedback=0, limits=FAST),
        ctx_for(ScriptedBackend([BOOM, SORTED_SRC, SORTED_SRC])))
    assert not out.verified
    assert out.reports[out.chosen.id].pass_count == 1
    # earliest of the two tied sorted copies, i.e. the second candidate generated
    seqs = sorted(c.seq for c in out.candidates.values())
    assert out.chosen.seq == seqs[1]

    # (d) cluster feedback: 8 copies of one wrong program -> 1 revise call/iteration
    out = implement_hypothesis(
        reverse_task(), HYP,
        SearchConfig(mode=Mode.FULL, K=8, n_feedback=2, cluster_feedback=True,
                     limits=FAST),
        ctx_for(ScriptedBackend([IDENT] * 8 + [IDENT] * 2)))
    assert out.revise_calls_per_iteration == [1, 1]

    assert time.monotonic() - start < 30.0


def test_oracle_end_to_end():
    start = time.monotonic()
    rng = random.Random(20240817)
    chains = [
        ("reverse",), ("sort",), ("plus1",), ("keep_even",), ("tail",),
        ("concat_self",), ("sort", "reverse"), ("reverse", "plus1"),
        ("tail", "sort"), ("plus1", "plus1"), ("keep_odd", "reverse"),
        ("sort", "head"), ("reverse", "tail", "plus1"), ("sort", "tail", "reverse"),
        ("plus1", "keep_even", "sort"), ("tail", "tail", "plus1"),
        ("concat_self", "sort", "tail"), ("keep_even", "plus1", "reverse"),
        ("sort", "reverse", "head"), ("plus1", "sort", "concat_self"),
    ]
    assert len(chains) == 20 and all(len(c) <= 3 for c in chains)
    backend = OracleBackend(depth=3)
    cfg = SearchConfig(mode=Mode.PROGRAM_ONLY, K=2, n_feedback=1, limits=FAST)
    solved = 0
    for i, chain in enumerate(chains):
        inputs = [[rng.randrange(0, 9) for _ in range(rng.randrange(3, 7))]
                  for _ in range(6)]
        task = make_dsl_task(f"dsl{i}", chain, inputs, n_test=2)
        outcome = solve_task(task, cfg, ctx_for(backend))
        assert outcome.verified, f"{chain}: not verified ({outcome.error})"
        assert outcome.solved, f"{chain}: verified but unsolved"
        solved += 1
    assert solved == 20
    assert time.monotonic() - start < 120.0


def test_replay_end_to_end(tmp_path):
    expected = json.loads((FIXTURE_ROOT / "expected.json").read_text())
    specs = run_specs()
    assert sum(len(s.tasks) for s in specs) == 10
    assert {s.domain.value for s in specs} == {"arc", "arc1d", "sygus", "listfn"}
    assert {s.search.mode.value for s in specs} == \
        {"full", "summarized", "program_only", "direct", "human_selected"}
    for spec in specs:
        first = replay_once(spec, tmp_path / "a", PROMPTS)
        second = replay_once(spec, tmp_path / "b", PROMPTS)
        assert first.hash() == second.hash(), spec.name
        card = score(first)
        want = expected[spec.name]
        assert (card.solved, card.total, card.accuracy_display) == \
            (want["solved"], want["total"], want["accuracy"]), spec.name


def _live_children() -> set[int]:
    me = os.getpid()
    kids = set()
    for entry in os.listdir("/proc"):
        if not entry.isdigit():
            continue
        try:
            stat = Path(f"/proc/{entry}/stat").read_text()
        except OSError:
            continue
        fields = stat.rsplit(")", 1)[-1].split()
        if fields and int(fields[1]) == me:
            kids.add(int(entry))
    return kids


def _dir_hash(root: Path) -> str:
    h = hashlib.sha256()
    for path in sorted(root.rglob("*")):
        h.update(str(path.relative_to(root)).encode())
        if path.is_file():
            h.update(path.read_bytes())
    return h.hexdigest()


def test_sandbox_isolation(tmp_path):
    start = time.monotonic()

    sentinel = tmp_path / "sentinel"
    sentinel.mkdir()
    for i in range(3):
        (sentinel / f"file{i}.txt").write_text(f"payload {i}")
    before = _dir_hash(sentinel)

    # infinite loop terminates within timeout + supervision slack
    loop_limits = ExecutionLimits(timeout_s=2.0, supervision_slack_s=2.0)
    t0 = time.monotonic()
    rep = evaluate(ProgramCandidate("loop", "def transform_list(x):\n"
                                            "    while True:\n        pass\n"),
                   [Example([1], [1])], Domain.LISTFN, loop_limits)
    assert rep.cases[0].status is CaseStatus.TIMEOUT
    assert time.monotonic() - t0 < 2.0 + 2.0 + 1.0  # small scheduling margin

    # hostile candidates never crash the host and cannot touch the sentinel
    hostile = [
        "def transform_list(x):\n    raise SystemExit(3)\n",
        "def transform_list(x):\n    import sys\n    sys.stderr.close()\n    return 1/0\n",
        f"import os\ndef transform_list(x):\n"
        f"    os.remove({str(sentinel / 'file0.txt')!r})\n    return x\n",
        f"def transform_list(x):\n"
        f"    open({str(sentinel / 'file1.txt')!r}, 'w').write('gone')\n    return x\n",
        f"import shutil\ndef transform_list(x):\n"
        f"    shutil.rmtree({str(sentinel)!r})\n    return x\n",
    ]
    for src in hostile:
        rep = evaluate(ProgramCandidate("h", src), [Example([1], [1])],
                       Domain.LISTFN, FAST)
        assert rep.cases[0].status is not CaseStatus.PASS

    # 1,000 sequential evaluations leak no processes
    baseline = _live_children()
    src = "def transform_list(x):\n    return x\n"
    for _ in range(1000):
        evaluate(ProgramCandidate("ok", src), [Example([1], [1])],
                 Domain.LISTFN, FAST)
    leaked = _live_children() - baseline
    assert not leaked, f"leaked sandbox processes: {leaked}"

    assert _dir_hash(sentinel) == before
    assert time.monotonic() - start < 300.0


def test_serialization_round_trip():
    rng = random.Random(13)
    for _ in range(10_000):
        rows = rng.randint(1, 30)
        cols = rng.randint(1, 30)
        g = Grid.from_lists([[rng.randint(0, 9) for _ in range(cols)]
                             for _ in range(rows)])
        assert parse_grid_text(render_grid(g)) == g

    # the full public ARC training set, when a local copy exists
    arc_dir = Path(os.environ.get("HYPOTHESEARCH_ARC_TRAINING", "data/arc_training"))
    if arc_dir.is_dir():
        from hypothesearch.task_model import load_tasks
        for task in load_tasks(arc_dir, Domain.ARC):
            for ex in task.train + task.test:
                for g in (ex.input, ex.output):
                    assert parse_grid_text(render_grid(g)) == g


def test_report_regression_golden():
    ledgers, refs = published_ledgers()
    rep = report(ledgers, references=refs)
    assert rep.markdown == (GOLDEN / "report.md").read_text()
    assert rep.csv == (GOLDEN / "report.csv").read_text()


def test_false_positive_instrumentation(tmp_path):
    # identity verifies on the train pair but fails the held-out test pair
    trick = Task(id="fp", domain=Domain.LISTFN,
                 train=(Example([1, 2], [1, 2]),),
                 test=(Example([9, 3], [3, 9]),))
    honest = reverse_task("ok")
    backend = ScriptedBackend(
        lambda req: [IDENT if "[1, 2]" in req.messages[0].content else REVERSE]
        * req.n)
    config = RunConfig(
        run_id="fp-run", label="Full",
        search=SearchConfig(mode=Mode.PROGRAM_ONLY, K=1, n_feedback=0, limits=FAST))
    ledger = run_harness(config, [trick, honest], ctx_for(backend),
                         tmp_path / "fp.jsonl")
    card = score(ledger)
    assert card.false_positives == 1
    assert "| List Functions | Full | 1 |" in report([ledger]).markdown


def test_human_selection_headless(tmp_path):
    hub = ReviewHub(tmp_path / "review")
    chosen_task = reverse_task("pick_me")
    rejected_task = Task(id="none_right", domain=Domain.LISTFN,
                         train=(Example([7, 7], [7]),), test=(Example([8, 8], [8]),))
    texts = ["sort the list", "reverse the list"]
    for task in (chosen_task, rejected_task):
        hub.enqueue_for_review("hs", task, [
            Hypothesis(f"{task.id}/h{i}", t, Provenance.SAMPLED)
            for i, t in enumerate(texts)])
    hub.record_selection(SelectionRecord("hs", "pick_me", "annotator",
                                         ("pick_me/h1",)))
    hub.record_selection(SelectionRecord("hs", "none_right", "annotator", ()))

    program_prompts = []

    def script(req):
        if req.stage is Stage.HYPOTHESIS:
            return texts[:req.n]
        program_prompts.append(req.messages[0].content)
        return [REVERSE] * req.n

    cfg = SearchConfig(mode=Mode.HUMAN_SELECTED, k_hypotheses=2, K=1,
                       n_feedback=0, selection_timeout_s=0.0, limits=FAST)
    ctx = ctx_for(ScriptedBackend(script), review_hub=hub, run_id="hs")

    t0 = time.monotonic()
    picked = solve_task(chosen_task, cfg, ctx)
    skipped = solve_task(rejected_task, cfg, ctx)
    assert time.monotonic() - t0 < 10.0  # no interactive wait

    assert picked.solved and picked.verified and not picked.skipped
    assert skipped.skipped and not skipped.solved
    # programs were synthesized only for the selected task
    assert len(program_prompts) == 1
    assert "[1, 2]" in program_prompts[0]          # chosen task's train pair
    assert all("[7, 7]" not in p for p in program_prompts)
