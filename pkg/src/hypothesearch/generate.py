"""Pipeline generation stages: hypotheses, summaries, programs, revisions,
and the direct-prompting baseline.

Each operation builds its messages from the prompt library, runs them through
a backend, and parses the completions into typed results.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import logging

from .backends import Backend, ChatMessage, GenerationRequest, Stage, Transcript, complete
from .errors import ExtractionError, ParseError
from .executor import ProgramCandidate
from .prompts import PromptLibrary
from .task_model import Domain, Task, Value, color_legend, parse_value_text, render_value

logger = logging.getLogger(__name__)


class Provenance(str, Enum):
    SAMPLED = "sampled"
    SUMMARIZED = "summarized"
    HUMAN_WRITTEN = "human_written"
    HUMAN_SELECTED = "human_selected"


@dataclass(frozen=True)
class Hypothesis:
    id: str
    text: str
    provenance: Provenance
    parent_ids: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("empty hypothesis text")
        if self.provenance is Provenance.SUMMARIZED and not self.parent_ids:
            raise ValueError("summarized hypothesis needs parent_ids")


@dataclass(frozen=True)
class FailureMessage:
    """First failing case of a report, rendered into the revision prompt."""

    kind: str  # "exception" | "wrong_output"
    case_index: int
    program_source: str
    input_text: str
    expected_text: Optional[str] = None  # wrong_output only
    actual_or_error: str = ""
    error_type: str = ""
    traceback: str = ""


_seq_counter = itertools.count()


def next_seq() -> int:
    """Monotone generation-order counter for candidate tie-breaking."""
    return next(_seq_counter)


# ---------------------------------------------------------------------------
# Rendering helpers
# ---------------------------------------------------------------------------


def render_cases(task: Task, label: str = "Case") -> str:
    blocks = []
    for i, ex in enumerate(task.train):
        blocks.append(f"{label} {i}:\nInput:\n{render_value(ex.input, task.domain)}\n"
                      f"Output:\n{render_value(ex.output, task.domain)}")
    return "\n".join(blocks)


def _system_template(domain: Domain) -> str:
    return f"hypothesis_system_{domain.kind}"


# ---------------------------------------------------------------------------
# Hypothesis generation
# ---------------------------------------------------------------------------


def propose_hypotheses(task: Task, k: int, backend: Backend, prompts: PromptLibrary,
                       transcript: Optional[Transcript] = None, *,
                       zero_shot: bool = False) -> list[Hypothesis]:
    """Sample k natural-language rule hypotheses for a task."""
    if k < 1:
        raise ValueError("k must be >= 1")
    fields = {}
    if task.domain.kind == "grid":
        fields["legend"] = color_legend()
    system = prompts.render(_system_template(task.domain), **fields)
    messages = [ChatMessage("system", system)]
    if not zero_shot:
        messages.extend(prompts.demos(f"hypothesis_demos_{task.domain.kind}"))
    messages.append(ChatMessage("user", render_cases(task)))

    req = GenerationRequest(tuple(messages), Stage.HYPOTHESIS, n=k)
    texts = complete(req, backend, transcript)
    return [Hypothesis(f"{task.id}/h{i}", text, Provenance.SAMPLED)
            for i, text in enumerate(texts)]


# ---------------------------------------------------------------------------
# Summarization
# ---------------------------------------------------------------------------

_NUMBERED_RE = re.compile(r"^\s*\d+[.)]\s+(.*\S)\s*$")
_BULLET_RE = re.compile(r"^\s*[-*]\s+(.*\S)\s*$")


def _parse_rules(text: str) -> list[str]:
    """Extract standalone rules: numbered list, then bullets, then paragraphs."""
    lines = text.splitlines()
    numbered = [m.group(1) for line in lines if (m := _NUMBERED_RE.match(line))]
    if numbered:
        return numbered
    bullets = [m.group(1) for line in lines if (m := _BULLET_RE.match(line))]
    if bullets:
        return bullets
    paragraphs = [p.strip() for p in re.split(r"\n\s*\n", text) if p.strip()]
    return paragraphs


def summarize(hyps: Sequence[Hypothesis], m: int, backend: Backend,
              prompts: PromptLibrary,
              transcript: Optional[Transcript] = None) -> list[Hypothesis]:
    """Compress a hypothesis set into exactly m standalone rules."""
    if not 1 <= m <= len(hyps):
        raise ValueError(f"need 1 <= m={m} <= |hyps|={len(hyps)}")
    parent_ids = tuple(h.id for h in hyps)
    rules_text = "\n".join(h.text.strip() for h in hyps)
    system = ChatMessage("system", prompts.text("summarize_system"))
    user = ChatMessage("user", prompts.render("summarize_user", m=str(m), rules=rules_text))

    messages = [system, user]
    for attempt in range(2):
        req = GenerationRequest(tuple(messages), Stage.SUMMARIZE, n=1)
        text = complete(req, backend, transcript)[0]
        rules = _parse_rules(text)
        if len(rules) == m:
            base = parent_ids[0].rsplit("/", 1)[0] if parent_ids else "summary"
            return [Hypothesis(f"{base}/s{i}", rule, Provenance.SUMMARIZED, parent_ids)
                    for i, rule in enumerate(rules)]
        if attempt == 0:
            messages = messages + [
                ChatMessage("assistant", text),
                ChatMessage("user",
                            f"That was {len(rules)} rules. Please reply again with exactly "
                            f"{m} rules as a numbered list, one rule per line."),
            ]
    raise ParseError(f"could not extract exactly {m} rules after one reprompt")


# ---------------------------------------------------------------------------
# Program synthesis
# ---------------------------------------------------------------------------

_FENCE_RE = re.compile(r"```(?:[Pp]ython)?\s*\n(.*?)```", re.DOTALL)
_DEF_RE = re.compile(r"^(?:def |import |from |@)", re.MULTILINE)


def extract_code(text: str) -> str:
    """Pull program source from a completion: fenced block first, else from the
    first definition/import line onward."""
    for m in _FENCE_RE.finditer(text):
        block = m.group(1).strip("\n")
        if "def " in block:
            return block
    m = _DEF_RE.search(text)
    if m:
        return text[m.start():].strip("\n")
    raise ExtractionError("no code found in completion")


def build_program_messages(task: Task, hypothesis: Optional[Hypothesis],
                           prompts: PromptLibrary) -> tuple[ChatMessage, ...]:
    examples = render_cases(task, label="Example")
    hint = ""
    if hypothesis is not None:
        hint = prompts.render("program_hint", hypothesis=hypothesis.text.strip())
    fields = {"examples": examples, "hint": hint}
    if task.domain.kind == "grid":
        fields["legend"] = color_legend()
    user = prompts.render(f"program_{task.domain.kind}", **fields)
    return (ChatMessage("user", user),)


def synthesize_programs(task: Task, hypothesis: Optional[Hypothesis], K: int,
                        backend: Backend, prompts: PromptLibrary,
                        transcript: Optional[Transcript] = None,
                        ) -> tuple[list[ProgramCandidate], list[str]]:
    """Generate K candidate programs for a hypothesis (or directly from the
    examples when hypothesis is None).

    Returns (candidates, extraction_errors); unextractable completions are
    dropped, not padded.
    """
    messages = build_program_messages(task, hypothesis, prompts)
    req = GenerationRequest(messages, Stage.PROGRAM, n=K)
    texts = complete(req, backend, transcript)
    hyp_id = hypothesis.id if hypothesis else None
    tag = hyp_id or f"{task.id}/direct"
    candidates, errors = [], []
    for i, text in enumerate(texts):
        try:
            source = extract_code(text)
        except ExtractionError as e:
            errors.append(str(e))
            continue
        candidates.append(ProgramCandidate(
            id=f"{tag}/p{i}", source=source, hypothesis_id=hyp_id,
            round=0, seq=next_seq()))
    return candidates, errors


def render_failure(failure: FailureMessage, prompts: PromptLibrary, closing: str) -> str:
    if failure.kind == "exception":
        return prompts.render(
            "revise_exception",
            case_index=str(failure.case_index),
            program=failure.program_source,
            input=failure.input_text,
            error_type=failure.error_type,
            error_message=failure.actual_or_error,
            traceback=failure.traceback,
            closing=closing,
        )
    return prompts.render(
        "revise_wrong_output",
        case_index=str(failure.case_index),
        program=failure.program_source,
        input=failure.input_text,
        expected=failure.expected_text or "",
        actual=failure.actual_or_error,
        closing=closing,
    )


def revise(task: Task, candidate: ProgramCandidate, failure: FailureMessage,
           backend: Backend, prompts: PromptLibrary,
           transcript: Optional[Transcript] = None, *,
           hypothesis: Optional[Hypothesis] = None,
           history: Sequence[FailureMessage] = (),
           ) -> ProgramCandidate:
    """Generate one revised program from the candidate's first failing case."""
    entry = {"grid": "transform_grid", "text": "transform_string",
             "intlist": "transform_list"}[task.domain.kind]
    closing = f"Just reply with the implementation of {entry} in Python and nothing else."
    messages = list(build_program_messages(task, hypothesis, prompts))
    for past in history:
        messages.append(ChatMessage("user", render_failure(past, prompts, closing)))
    messages.append(ChatMessage("user", render_failure(failure, prompts, closing)))

    req = GenerationRequest(tuple(messages), Stage.REVISE, n=1)
    text = complete(req, backend, transcript)[0]
    source = extract_code(text)
    return ProgramCandidate(
        id=f"{candidate.id}/r{candidate.round + 1}",
        source=source,
        hypothesis_id=candidate.hypothesis_id,
        round=candidate.round + 1,
        parent_id=candidate.id,
        seq=next_seq(),
    )


# ---------------------------------------------------------------------------
# Direct prediction baseline
# ---------------------------------------------------------------------------

_GRID_BLOCK_RE = re.compile(r"\[\s*\[.*?\]\s*\]", re.DOTALL)
_LIST_BLOCK_RE = re.compile(r"\[[^\[\]]*\]")


def extract_answer_text(response: str, domain: Domain) -> str:
    """Locate the answer value inside a free-form completion."""
    if domain.kind == "grid":
        blocks = _GRID_BLOCK_RE.findall(response)
        if not blocks:
            raise ParseError("no grid found in response")
        return blocks[-1]
    if domain.kind == "intlist":
        blocks = _LIST_BLOCK_RE.findall(response)
        if not blocks:
            raise ParseError("no list found in response")
        return blocks[-1]
    text = response
    if "Output:" in text:
        text = text.rsplit("Output:", 1)[1]
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ParseError("empty response")
    return lines[-1].strip()


def direct_predict(task: Task, backend: Backend, prompts: PromptLibrary,
                   transcript: Optional[Transcript] = None, *,
                   cot: bool = False) -> list[Optional[Value]]:
    """Ask the backend for each test output directly; malformed answers
    come back as None (scored wrong)."""
    if not task.test:
        raise ValueError(f"task {task.id} has no test inputs")
    template = "cot" if cot else "direct"
    stage = Stage.COT if cot else Stage.DIRECT
    examples = render_cases(task)
    predictions: list[Optional[Value]] = []
    for ex in task.test:
        user = prompts.render(template, examples=examples,
                              test_input=render_value(ex.input, task.domain))
        req = GenerationRequest((ChatMessage("user", user),), stage, n=1)
        text = complete(req, backend, transcript)[0]
        try:
            answer = extract_answer_text(text, task.domain)
            predictions.append(parse_value_text(answer, task.domain))
        except (ParseError, ValueError) as e:
            logger.debug("malformed direct prediction for %s: %s", task.id, e)
            predictions.append(None)
    return predictions
