"""Per-hypothesis program search with execution feedback, and per-task
orchestration across run modes.

The search for one hypothesis: synthesize K candidates, return the first
that passes every training example; otherwise run bounded revision rounds,
revising one representative per output-signature cluster per round, and fall
back to the candidate passing the most examples.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence

from .backends import Backend, Transcript
from .errors import (
    BackendError,
    ExtractionError,
    NoCandidates,
    ParseError,
    SandboxSpawnError,
    TimedOut,
)
from .executor import (
    CaseStatus,
    ExecutionLimits,
    ExecutionReport,
    ProgramCandidate,
    evaluate,
    predict,
    signature,
)
from .generate import (
    FailureMessage,
    Hypothesis,
    Provenance,
    direct_predict,
    revise,
    propose_hypotheses,
    summarize,
    synthesize_programs,
)
from .prompts import PromptLibrary
from .task_model import Example, Task, Value, render_value, value_to_json, values_equal

logger = logging.getLogger(__name__)

FAILURE_HISTORY_CAP = 2  # most recent shared failure records kept in revision prompts


class Mode(str, Enum):
    FULL = "full"
    SUMMARIZED = "summarized"
    HUMAN_SELECTED = "human_selected"
    HUMAN_WRITTEN = "human_written"
    PROGRAM_ONLY = "program_only"
    DIRECT = "direct"
    COT = "cot"


_HYPOTHESIS_MODES = (Mode.FULL, Mode.SUMMARIZED, Mode.HUMAN_SELECTED, Mode.HUMAN_WRITTEN)


@dataclass
class SearchConfig:
    mode: Mode = Mode.FULL
    K: int = 8                      # programs per hypothesis
    n_feedback: int = 3             # max revision iterations
    k_hypotheses: int = 8           # hypotheses sampled
    m_summaries: Optional[int] = None
    cluster_feedback: bool = False
    exhaustive: bool = False        # evaluate every hypothesis even after a verified hit
    zero_shot: bool = False
    selection_timeout_s: float = 0.0  # 0 = only accept pre-existing selections
    limits: ExecutionLimits = field(default_factory=ExecutionLimits)

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.n_feedback < 0:
            raise ValueError("n_feedback must be >= 0")
        if self.mode in _HYPOTHESIS_MODES and self.mode is not Mode.HUMAN_WRITTEN \
                and self.k_hypotheses < 1:
            raise ValueError(f"{self.mode.value} mode requires k_hypotheses >= 1")
        if self.mode is Mode.SUMMARIZED and not self.m_summaries:
            raise ValueError("summarized mode requires m_summaries")


# Paper-scale defaults, recorded by name in the run ledger.
PRESETS: dict[str, SearchConfig] = {
    "arc-summarized": SearchConfig(mode=Mode.SUMMARIZED, k_hypotheses=64, m_summaries=8,
                                   K=8, n_feedback=3, cluster_feedback=True),
    "arc-human-selected": SearchConfig(mode=Mode.HUMAN_SELECTED, k_hypotheses=64,
                                       K=8, n_feedback=3, cluster_feedback=True),
    "arc-human-written": SearchConfig(mode=Mode.HUMAN_WRITTEN, K=8, n_feedback=3,
                                      cluster_feedback=True),
    "arc-program-only": SearchConfig(mode=Mode.PROGRAM_ONLY, K=64, n_feedback=3,
                                     cluster_feedback=True),
    "arc-direct": SearchConfig(mode=Mode.DIRECT),
    "1darc-full": SearchConfig(mode=Mode.FULL, k_hypotheses=16, K=4, n_feedback=3),
    "1darc-program-only": SearchConfig(mode=Mode.PROGRAM_ONLY, K=80, n_feedback=3),
    "sygus-full": SearchConfig(mode=Mode.FULL, k_hypotheses=4, K=2, n_feedback=2),
    "sygus-program-only": SearchConfig(mode=Mode.PROGRAM_ONLY, K=8, n_feedback=2),
    "listfn-full": SearchConfig(mode=Mode.FULL, k_hypotheses=64, K=1, n_feedback=3),
    "listfn-program-only": SearchConfig(mode=Mode.PROGRAM_ONLY, K=64, n_feedback=3),
}


@dataclass
class SearchOutcome:
    hypothesis_id: Optional[str]
    chosen: Optional[ProgramCandidate]
    verified: bool
    reports: dict[str, ExecutionReport]
    candidates: dict[str, ProgramCandidate]
    revise_calls: int = 0
    revise_calls_per_iteration: list[int] = field(default_factory=list)

    def __post_init__(self):
        if self.verified:
            assert self.chosen is not None
            assert self.reports[self.chosen.id].all_pass


@dataclass
class TaskOutcome:
    task_id: str
    domain: str
    mode: str
    solved: bool = False
    verified: bool = False
    false_positive: bool = False
    skipped: bool = False
    predictions: list = field(default_factory=list)  # JSON values, None = malformed
    test_correct: list = field(default_factory=list)
    revise_calls: int = 0
    n_hypotheses: int = 0
    chosen: Optional[dict] = None
    error: Optional[str] = None
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id, "domain": self.domain, "mode": self.mode,
            "solved": self.solved, "verified": self.verified,
            "false_positive": self.false_positive, "skipped": self.skipped,
            "predictions": self.predictions, "test_correct": self.test_correct,
            "revise_calls": self.revise_calls, "n_hypotheses": self.n_hypotheses,
            "chosen": self.chosen, "error": self.error,
        }


@dataclass
class SolveContext:
    """Shared services handed to solve_task by the harness."""

    backend: Backend
    prompts: PromptLibrary
    transcript: Optional[Transcript] = None
    review_hub: Optional[object] = None            # reduce.ReviewHub
    human_hypotheses: dict[str, list[str]] = field(default_factory=dict)
    run_id: str = "adhoc"


# ---------------------------------------------------------------------------
# Selection and clustering
# ---------------------------------------------------------------------------


def select_best(reports: dict[str, ExecutionReport],
                candidates: dict[str, ProgramCandidate]) -> ProgramCandidate:
    """Argmax pass count; ties break to earliest generation order, then lowest
    revision round."""
    if not reports:
        raise NoCandidates("no evaluated candidates to select from")
    best_id = min(reports,
                  key=lambda cid: (-reports[cid].pass_count,
                                   candidates[cid].seq, candidates[cid].round))
    return candidates[best_id]


def cluster_by_signature(reports: Sequence[ExecutionReport],
                         candidates: dict[str, ProgramCandidate]
                         ) -> list[list[ExecutionReport]]:
    """Partition reports by output signature; each cluster is ordered by
    generation order, so cluster[0] is the representative."""
    groups: dict[str, list[ExecutionReport]] = {}
    for report in reports:
        groups.setdefault(signature(report), []).append(report)
    clusters = [sorted(g, key=lambda r: candidates[r.candidate_id].seq)
                for g in groups.values()]
    clusters.sort(key=lambda g: candidates[g[0].candidate_id].seq)
    return clusters


def _build_failure(candidate: ProgramCandidate, report: ExecutionReport,
                   examples: Sequence[Example], task: Task) -> FailureMessage:
    idx = report.first_failing_index()
    assert idx is not None
    case = report.cases[idx]
    ex = examples[idx]
    input_text = render_value(ex.input, task.domain)
    if case.status in (CaseStatus.EXCEPTION, CaseStatus.TIMEOUT):
        err = case.error
        return FailureMessage(
            kind="exception", case_index=idx, program_source=candidate.source,
            input_text=input_text,
            actual_or_error=err.message if err else "",
            error_type=err.type if err else "Error",
            traceback=err.traceback if err else "")
    actual_text = render_value(case.actual, task.domain) if case.actual is not None \
        else (case.error.message if case.error else "<no output>")
    return FailureMessage(
        kind="wrong_output", case_index=idx, program_source=candidate.source,
        input_text=input_text,
        expected_text=render_value(ex.output, task.domain),
        actual_or_error=actual_text)


# ---------------------------------------------------------------------------
# Algorithm: implement one hypothesis
# ---------------------------------------------------------------------------


def implement_hypothesis(task: Task, hypothesis: Optional[Hypothesis],
                         cfg: SearchConfig, ctx: SolveContext) -> SearchOutcome:
    """Search for a program consistent with all training examples.

    Early-returns as soon as any candidate (initial or revised) verifies;
    otherwise falls back to the candidate passing the most examples.
    """
    hyp_id = hypothesis.id if hypothesis else None
    initial, extraction_errors = synthesize_programs(
        task, hypothesis, cfg.K, ctx.backend, ctx.prompts, ctx.transcript)
    if extraction_errors:
        logger.info("task %s: %d completions had no extractable code",
                    task.id, len(extraction_errors))
    if not initial:
        raise NoCandidates(f"hypothesis {hyp_id}: no candidates extracted")

    candidates = {c.id: c for c in initial}
    reports: dict[str, ExecutionReport] = {}

    def done(chosen: ProgramCandidate, verified: bool, calls: int,
             per_iter: list[int]) -> SearchOutcome:
        return SearchOutcome(hypothesis_id=hyp_id, chosen=chosen, verified=verified,
                             reports=reports, candidates=candidates,
                             revise_calls=calls, revise_calls_per_iteration=per_iter)

    for cand in initial:
        reports[cand.id] = evaluate(cand, task.train, task.domain, cfg.limits)
        if reports[cand.id].all_pass:
            return done(cand, True, 0, [])

    live: list[ProgramCandidate] = list(initial)
    shared_history: list[FailureMessage] = []
    revise_calls = 0
    per_iteration: list[int] = []

    for _ in range(cfg.n_feedback):
        if cfg.cluster_feedback:
            clusters = cluster_by_signature([reports[c.id] for c in live], candidates)
            targets = [candidates[c[0].candidate_id] for c in clusters]
        else:
            targets = list(live)
        calls_this_iter = 0
        for target in targets:
            failure = _build_failure(target, reports[target.id], task.train, task)
            history = shared_history[-FAILURE_HISTORY_CAP:]
            revise_calls += 1
            calls_this_iter += 1
            try:
                revised = revise(task, target, failure, ctx.backend, ctx.prompts,
                                 ctx.transcript, hypothesis=hypothesis, history=history)
            except ExtractionError:
                shared_history.append(failure)
                continue
            shared_history.append(failure)
            candidates[revised.id] = revised
            reports[revised.id] = evaluate(revised, task.train, task.domain, cfg.limits)
            live[live.index(target)] = revised
            if reports[revised.id].all_pass:
                per_iteration.append(calls_this_iter)
                return done(revised, True, revise_calls, per_iteration)
        per_iteration.append(calls_this_iter)

    best = select_best(reports, candidates)
    return done(best, False, revise_calls, per_iteration)


# ---------------------------------------------------------------------------
# Per-task orchestration
# ---------------------------------------------------------------------------


def _score_predictions(task: Task, predictions: list[Optional[Value]]) -> tuple[list, list[bool]]:
    json_preds, correct = [], []
    for ex, pred in zip(task.test, predictions):
        json_preds.append(value_to_json(pred) if pred is not None else None)
        if ex.output is None:
            correct.append(False)
        else:
            correct.append(pred is not None and values_equal(pred, ex.output))
    return json_preds, correct


def _apply_chosen(task: Task, outcome_chosen: ProgramCandidate,
                  cfg: SearchConfig) -> list[Optional[Value]]:
    results = predict(outcome_chosen, [ex.input for ex in task.test],
                      task.domain, cfg.limits)
    return [r.actual if r.status is CaseStatus.PASS else None for r in results]


def _obtain_hypotheses(task: Task, cfg: SearchConfig, ctx: SolveContext
                       ) -> tuple[list[Hypothesis], bool]:
    """Returns (hypotheses, skipped): skipped means a human marked none correct."""
    if cfg.mode is Mode.HUMAN_WRITTEN:
        texts = ctx.human_hypotheses.get(task.id)
        if not texts:
            raise NoCandidates(f"no human-written hypothesis for task {task.id}")
        return [Hypothesis(f"{task.id}/w{i}", t, Provenance.HUMAN_WRITTEN)
                for i, t in enumerate(texts)], False

    sampled = propose_hypotheses(task, cfg.k_hypotheses, ctx.backend, ctx.prompts,
                                 ctx.transcript, zero_shot=cfg.zero_shot)
    if cfg.mode is Mode.FULL:
        return sampled, False
    if cfg.mode is Mode.SUMMARIZED:
        return summarize(sampled, cfg.m_summaries, ctx.backend, ctx.prompts,
                         ctx.transcript), False

    # HUMAN_SELECTED
    if ctx.review_hub is None:
        raise NoCandidates("human-selected mode needs a review hub")
    ctx.review_hub.enqueue_for_review(ctx.run_id, task, sampled)
    record = ctx.review_hub.await_selection(ctx.run_id, task.id,
                                            timeout=cfg.selection_timeout_s)
    if not record.chosen_hypothesis_ids:
        return [], True
    by_id = {h.id: h for h in sampled}
    chosen = [replace(by_id[hid], provenance=Provenance.HUMAN_SELECTED)
              for hid in record.chosen_hypothesis_ids if hid in by_id]
    if not chosen:
        return [], True
    return chosen, False


def solve_task(task: Task, cfg: SearchConfig, ctx: SolveContext) -> TaskOutcome:
    """Run one task through the configured mode; infrastructure failures are
    recorded on the outcome rather than raised."""
    start = time.monotonic()
    outcome = TaskOutcome(task_id=task.id, domain=task.domain.value, mode=cfg.mode.value)
    try:
        if cfg.mode in (Mode.DIRECT, Mode.COT):
            predictions = direct_predict(task, ctx.backend, ctx.prompts, ctx.transcript,
                                         cot=cfg.mode is Mode.COT)
            outcome.predictions, outcome.test_correct = _score_predictions(task, predictions)
            outcome.solved = bool(outcome.test_correct) and all(outcome.test_correct)
            return outcome

        if cfg.mode is Mode.PROGRAM_ONLY:
            search = implement_hypothesis(task, None, cfg, ctx)
            searches = [search]
        else:
            hyps, skipped = _obtain_hypotheses(task, cfg, ctx)
            outcome.n_hypotheses = len(hyps)
            if skipped:
                outcome.skipped = True
                return outcome
            searches = []
            for hyp in hyps:
                try:
                    search = implement_hypothesis(task, hyp, cfg, ctx)
                except NoCandidates:
                    continue
                searches.append(search)
                if search.verified and not cfg.exhaustive:
                    break
            if not searches:
                outcome.error = "no candidates extracted for any hypothesis"
                return outcome

        outcome.revise_calls = sum(s.revise_calls for s in searches)
        verified = [s for s in searches if s.verified]
        if verified:
            chosen_search = verified[0]
        else:
            # Fall back to the globally best unverified candidate.
            all_reports: dict[str, ExecutionReport] = {}
            all_candidates: dict[str, ProgramCandidate] = {}
            for s in searches:
                all_reports.update(s.reports)
                all_candidates.update(s.candidates)
            best = select_best(all_reports, all_candidates)
            chosen_search = next(s for s in searches if best.id in s.candidates)
            chosen_search = replace(chosen_search, chosen=best, verified=False)

        chosen = chosen_search.chosen
        outcome.verified = chosen_search.verified
        outcome.chosen = {
            "id": chosen.id, "source": chosen.source,
            "hypothesis_id": chosen.hypothesis_id, "round": chosen.round,
        }

        if task.test:
            predictions = _apply_chosen(task, chosen, cfg)
            outcome.predictions, outcome.test_correct = _score_predictions(task, predictions)
            outcome.solved = bool(outcome.test_correct) and all(outcome.test_correct)
            outcome.false_positive = outcome.verified and not outcome.solved
        else:
            # SyGuS convention: every example is training, solved = verified.
            outcome.solved = outcome.verified
        return outcome
    except (BackendError, SandboxSpawnError, ParseError, NoCandidates, TimedOut) as e:
        outcome.error = f"{type(e).__name__}: {e}"
        return outcome
    finally:
        outcome.wall_time = time.monotonic() - start
