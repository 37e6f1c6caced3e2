"""Benchmark runner: run configuration, the append-only run ledger with
checkpoint/resume, scoring, table emission, and cost accounting.

The ledger is a JSON-lines file: one header record with the full config
snapshot, then one record per task outcome (appended as each task finishes,
so a crashed run resumes from where it stopped), then per-stage token-usage
records. The ledger hash covers the config and the outcomes sorted by task
id — wall times and timestamps are excluded, so replayed runs hash equal.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .errors import MissingPriceTable
from .search import Mode, SearchConfig, SolveContext, TaskOutcome, solve_task
from .task_model import Domain, Task

# Accuracy formatting per dataset: percentages as printed in the result
# tables — whole numbers for ARC and List Functions, one decimal (floored,
# not rounded) for 1D-ARC and SyGuS.
_DECIMAL_DOMAINS = {Domain.ARC1D, Domain.SYGUS}


def format_accuracy(solved: int, total: int, domain: Domain) -> str:
    """Exact integer arithmetic so formatting never drifts with float error."""
    if total <= 0:
        return "-"
    if domain in _DECIMAL_DOMAINS:
        tenths = solved * 1000 // total
        return f"{tenths // 10}.{tenths % 10}"
    return str(solved * 100 // total)


@dataclass
class RunConfig:
    run_id: str
    search: SearchConfig
    preset: Optional[str] = None
    label: Optional[str] = None     # row label in reports; defaults to preset/mode
    seed: Optional[int] = None      # subset-sampling seed, when a subset was drawn
    task_ids: list[str] = field(default_factory=list)
    template_hashes: dict[str, str] = field(default_factory=dict)
    backend_id: str = "unknown"
    workers: int = 1

    @property
    def display_label(self) -> str:
        return self.label or self.preset or self.search.mode.value

    def snapshot(self) -> dict:
        s = self.search
        return {
            "run_id": self.run_id,
            "preset": self.preset,
            "label": self.display_label,
            "seed": self.seed,
            "task_ids": list(self.task_ids),
            "template_hashes": dict(self.template_hashes),
            "backend_id": self.backend_id,
            "search": {
                "mode": s.mode.value, "K": s.K, "n_feedback": s.n_feedback,
                "k_hypotheses": s.k_hypotheses, "m_summaries": s.m_summaries,
                "cluster_feedback": s.cluster_feedback, "exhaustive": s.exhaustive,
                "zero_shot": s.zero_shot,
                "timeout_s": s.limits.timeout_s, "memory_mb": s.limits.memory_mb,
            },
        }


class RunLedger:
    """Header + per-task outcomes + per-stage usage, JSON-lines on disk."""

    def __init__(self, path: Optional[Path] = None):
        self.path = Path(path) if path else None
        self.header: Optional[dict] = None
        self.outcomes: dict[str, dict] = {}
        self.usage: dict[str, dict] = {}

    @classmethod
    def load(cls, path: Path) -> "RunLedger":
        ledger = cls(path)
        for line in Path(path).read_text().splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            kind = rec.get("kind")
            if kind == "header":
                ledger.header = rec["config"]
            elif kind == "outcome":
                ledger.outcomes[rec["outcome"]["task_id"]] = rec["outcome"]
            elif kind == "usage":
                ledger.usage[rec["stage"]] = {
                    "requests": rec["requests"],
                    "prompt_tokens": rec["prompt_tokens"],
                    "completion_tokens": rec["completion_tokens"],
                }
        return ledger

    def _append(self, rec: dict) -> None:
        if self.path:
            with self.path.open("a") as f:
                f.write(json.dumps(rec) + "\n")
                f.flush()

    def write_header(self, config_snapshot: dict) -> None:
        self.header = config_snapshot
        self._append({"kind": "header", "config": config_snapshot})

    def append_outcome(self, outcome: TaskOutcome) -> None:
        doc = outcome.to_dict()
        self.outcomes[doc["task_id"]] = doc
        self._append({"kind": "outcome", "outcome": doc, "wall_time": outcome.wall_time,
                      "ts": time.time()})

    def append_usage(self, stage: str, requests: int, prompt_tokens: int,
                     completion_tokens: int) -> None:
        self.usage[stage] = {"requests": requests, "prompt_tokens": prompt_tokens,
                             "completion_tokens": completion_tokens}
        self._append({"kind": "usage", "stage": stage, "requests": requests,
                      "prompt_tokens": prompt_tokens,
                      "completion_tokens": completion_tokens})

    def hash(self) -> str:
        body = {
            "config": self.header,
            "outcomes": [self.outcomes[tid] for tid in sorted(self.outcomes)],
        }
        blob = json.dumps(body, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    # -- derived views -------------------------------------------------------

    @property
    def domain(self) -> Optional[Domain]:
        domains = {doc["domain"] for doc in self.outcomes.values()}
        if len(domains) == 1:
            return Domain(next(iter(domains)))
        return None

    @property
    def mode(self) -> str:
        if self.header:
            return self.header["search"]["mode"]
        modes = {doc["mode"] for doc in self.outcomes.values()}
        return next(iter(modes)) if len(modes) == 1 else "mixed"

    @property
    def label(self) -> str:
        if self.header and self.header.get("label"):
            return self.header["label"]
        return self.mode

    @property
    def n_feedback(self) -> int:
        return self.header["search"]["n_feedback"] if self.header else 0


def run(config: RunConfig, tasks: Sequence[Task], ctx: SolveContext,
        ledger_path: Optional[Path] = None) -> RunLedger:
    """Execute the configured tasks with bounded parallelism, checkpointing
    each outcome; completed tasks in an existing ledger are not re-run."""
    known = {t.id for t in tasks}
    missing = [tid for tid in config.task_ids if tid not in known]
    if missing:
        raise ValueError(f"configured task ids not in dataset: {missing[:5]}")
    ordered = tasks if not config.task_ids else \
        [t for t in tasks if t.id in set(config.task_ids)]

    if ledger_path and Path(ledger_path).exists():
        ledger = RunLedger.load(ledger_path)
    else:
        ledger = RunLedger(ledger_path)
    if ledger.header is None:
        ledger.write_header(config.snapshot())

    remaining = [t for t in ordered if t.id not in ledger.outcomes]
    if remaining:
        if config.workers <= 1:
            for task in remaining:
                ledger.append_outcome(solve_task(task, config.search, ctx))
        else:
            # workers solve; only this thread writes the ledger
            with ThreadPoolExecutor(max_workers=config.workers) as pool:
                futures = [pool.submit(solve_task, t, config.search, ctx)
                           for t in remaining]
                for fut in as_completed(futures):
                    ledger.append_outcome(fut.result())

    if ctx.transcript is not None:
        totals: dict[str, list[int]] = {}
        for rec in ctx.transcript.records:
            t = totals.setdefault(rec["stage"], [0, 0, 0])
            t[0] += 1
            t[1] += rec["usage"]["prompt_tokens"]
            t[2] += rec["usage"]["completion_tokens"]
        for stage in sorted(totals):
            n, p, c = totals[stage]
            if stage not in ledger.usage:
                ledger.append_usage(stage, n, p, c)
    return ledger


# ---------------------------------------------------------------------------
# Scoring
# ---------------------------------------------------------------------------


@dataclass
class ScoreCard:
    solved: int
    total: int
    verified: int
    false_positives: int
    skipped: int
    errors: int
    domain: Optional[Domain]

    @property
    def accuracy_display(self) -> str:
        return format_accuracy(self.solved, self.total,
                               self.domain or Domain.ARC)

    @property
    def accuracy(self) -> float:
        return self.solved / self.total if self.total else 0.0


def score(ledger: RunLedger) -> ScoreCard:
    """Accuracy over outcomes alone; a task counts as solved only if every
    test output matched exactly (or, with no test split, if it verified)."""
    docs = list(ledger.outcomes.values())
    return ScoreCard(
        solved=sum(1 for d in docs if d["solved"]),
        total=len(docs),
        verified=sum(1 for d in docs if d["verified"]),
        false_positives=sum(1 for d in docs if d["false_positive"]),
        skipped=sum(1 for d in docs if d["skipped"]),
        errors=sum(1 for d in docs if d["error"]),
        domain=ledger.domain,
    )


# ---------------------------------------------------------------------------
# Reporting
# ---------------------------------------------------------------------------

_DOMAIN_TITLES = {
    Domain.ARC: "ARC",
    Domain.ARC1D: "1D-ARC",
    Domain.SYGUS: "SyGuS",
    Domain.LISTFN: "List Functions",
}


@dataclass(frozen=True)
class ReferenceRow:
    """Externally sourced comparison number, printed verbatim."""
    domain: Domain
    label: str
    value: str


@dataclass
class Report:
    markdown: str
    csv: str


def report(ledgers: Sequence[RunLedger],
           references: Sequence[ReferenceRow] = ()) -> Report:
    """Method-accuracy tables per dataset, a feedback-iteration sweep for any
    method present at several n_feedback settings, and false-positive and
    hypothesis hit-rate summaries."""
    # group ledgers by (domain, label), keeping first-appearance order
    groups: dict[tuple[str, str], list[RunLedger]] = {}
    domain_order: list[Domain] = []
    for ledger in ledgers:
        domain = ledger.domain
        if domain is None:
            continue
        if domain not in domain_order:
            domain_order.append(domain)
        groups.setdefault((domain.value, ledger.label), []).append(ledger)
    for ref in references:
        if ref.domain not in domain_order:
            domain_order.append(ref.domain)

    md: list[str] = ["# Results", ""]
    csv: list[str] = ["dataset,method,n_feedback,solved,total,accuracy"]
    sweep_rows: dict[Domain, list[tuple[str, dict[int, str]]]] = {}

    for domain in domain_order:
        md.append(f"## {_DOMAIN_TITLES[domain]}")
        md.append("")
        md.append("| Method | Accuracy (%) |")
        md.append("| --- | --- |")
        for ref in references:
            if ref.domain is domain:
                md.append(f"| {ref.label} | {ref.value} |")
                csv.append(f"{_DOMAIN_TITLES[domain]},{ref.label},,,,{ref.value}")
        for (dom, label), group in groups.items():
            if dom != domain.value:
                continue
            group = sorted(group, key=lambda lg: lg.n_feedback)
            final = group[-1]  # method table shows the full-feedback setting
            card = score(final)
            md.append(f"| {label} | {card.accuracy_display} |")
            csv.append(f"{_DOMAIN_TITLES[domain]},{label},{final.n_feedback},"
                       f"{card.solved},{card.total},{card.accuracy_display}")
            if len(group) > 1:
                cells = {lg.n_feedback: score(lg).accuracy_display for lg in group}
                sweep_rows.setdefault(domain, []).append((label, cells))
        md.append("")

    for domain, rows in sweep_rows.items():
        iterations = sorted({n for _, cells in rows for n in cells})
        md.append(f"## Feedback iterations ({_DOMAIN_TITLES[domain]})")
        md.append("")
        md.append("| Method | " + " | ".join(str(n) for n in iterations) + " |")
        md.append("| --- |" + " --- |" * len(iterations))
        for label, cells in rows:
            vals = " | ".join(cells.get(n, "-") for n in iterations)
            md.append(f"| {label} | {vals} |")
            for n in iterations:
                if n in cells:
                    csv.append(f"{_DOMAIN_TITLES[domain]} sweep,{label},{n},,,{cells[n]}")
        md.append("")

    # summaries cover each method's full-feedback ledger only
    finals = {key: sorted(group, key=lambda lg: lg.n_feedback)[-1]
              for key, group in groups.items()}

    fp_lines = []
    for (dom, label), ledger in finals.items():
        card = score(ledger)
        if card.false_positives:
            fp_lines.append(
                f"| {_DOMAIN_TITLES[Domain(dom)]} | {label} | {card.false_positives} |")
    md.append("## False positives (verified but wrong on test)")
    md.append("")
    if fp_lines:
        md.append("| Dataset | Method | Count |")
        md.append("| --- | --- | --- |")
        md.extend(fp_lines)
    else:
        md.append("None observed.")
    md.append("")

    hit_lines = []
    for (dom, label), ledger in finals.items():
        if ledger.mode != Mode.HUMAN_SELECTED.value:
            continue
        card = score(ledger)
        with_hit = card.total - card.skipped
        hit_lines.append(f"| {_DOMAIN_TITLES[Domain(dom)]} | {label} | "
                         f"{with_hit}/{card.total} |")
    if hit_lines:
        md.append("## Hypothesis hit rate (tasks with a selected hypothesis)")
        md.append("")
        md.append("| Dataset | Method | Tasks |")
        md.append("| --- | --- | --- |")
        md.extend(hit_lines)
        md.append("")

    return Report(markdown="\n".join(md), csv="\n".join(csv) + "\n")


# ---------------------------------------------------------------------------
# Cost accounting
# ---------------------------------------------------------------------------


@dataclass
class CostEstimate:
    per_stage: dict[str, float]
    total: float
    prompt_tokens: int
    completion_tokens: int
    requests: int
    mean_per_task: float


def estimate_cost(ledger: RunLedger, price_table: dict) -> CostEstimate:
    """Currency totals from the ledger's per-stage token counts and a price
    table of {"prompt_per_1k": $, "completion_per_1k": $}."""
    try:
        prompt_rate = float(price_table["prompt_per_1k"])
        completion_rate = float(price_table["completion_per_1k"])
    except (KeyError, TypeError) as e:
        raise MissingPriceTable(f"price table missing entry: {e}") from None
    per_stage: dict[str, float] = {}
    prompt_total = completion_total = requests = 0
    for stage, u in sorted(ledger.usage.items()):
        cost = (u["prompt_tokens"] * prompt_rate
                + u["completion_tokens"] * completion_rate) / 1000.0
        per_stage[stage] = cost
        prompt_total += u["prompt_tokens"]
        completion_total += u["completion_tokens"]
        requests += u["requests"]
    total = sum(per_stage.values())
    n_tasks = len(ledger.outcomes)
    return CostEstimate(per_stage=per_stage, total=total,
                        prompt_tokens=prompt_total,
                        completion_tokens=completion_total,
                        requests=requests,
                        mean_per_task=total / n_tasks if n_tasks else 0.0)
