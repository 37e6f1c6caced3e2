"""Human-in-the-loop hypothesis selection: pending-review queue and the
append-only selection store.

Both the pending queue and the selections are JSON-lines files, so the CLI,
the HTTP API, and offline editing are interchangeable front-ends to the same
state. In-process waiters are woken through a condition variable; a
pre-populated selection file satisfies waits immediately, which is what makes
headless runs possible.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .errors import TimedOut, UnknownHypothesis, UnknownTask
from .generate import Hypothesis
from .task_model import Task, value_to_json


@dataclass(frozen=True)
class SelectionRecord:
    run_id: str
    task_id: str
    annotator: str
    chosen_hypothesis_ids: tuple[str, ...]  # empty = "none correct"
    timestamp: float = field(default_factory=time.time)

    def to_dict(self) -> dict:
        return {"run_id": self.run_id, "task_id": self.task_id,
                "annotator": self.annotator,
                "chosen_hypothesis_ids": list(self.chosen_hypothesis_ids),
                "timestamp": self.timestamp}

    @classmethod
    def from_dict(cls, doc: dict) -> "SelectionRecord":
        return cls(run_id=doc["run_id"], task_id=doc["task_id"],
                   annotator=doc.get("annotator", "unknown"),
                   chosen_hypothesis_ids=tuple(doc["chosen_hypothesis_ids"]),
                   timestamp=doc.get("timestamp", 0.0))


class ReviewHub:
    """Pending-review queue plus selection store rooted at one directory."""

    def __init__(self, directory: Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.pending_path = self.directory / "pending.jsonl"
        self.selections_path = self.directory / "selections.jsonl"
        self._cond = threading.Condition()
        self._pending: dict[tuple[str, str], dict] = {}
        self._selections: dict[tuple[str, str], SelectionRecord] = {}
        self._load()

    def _load(self):
        if self.pending_path.exists():
            for line in self.pending_path.read_text().splitlines():
                if line.strip():
                    entry = json.loads(line)
                    self._pending[(entry["run_id"], entry["task_id"])] = entry
        if self.selections_path.exists():
            for line in self.selections_path.read_text().splitlines():
                if line.strip():
                    rec = SelectionRecord.from_dict(json.loads(line))
                    # later records supersede earlier ones
                    self._selections[(rec.run_id, rec.task_id)] = rec

    # -- queue ---------------------------------------------------------------

    def enqueue_for_review(self, run_id: str, task: Task,
                           hypotheses: Sequence[Hypothesis]) -> dict:
        """Make a task visible to reviewers; idempotent per (run, task)."""
        if not hypotheses:
            raise ValueError("cannot enqueue with no hypotheses")
        key = (run_id, task.id)
        with self._cond:
            if key in self._pending:
                return self._pending[key]
            entry = {
                "run_id": run_id,
                "task_id": task.id,
                "domain": task.domain.value,
                "train": [{"input": value_to_json(ex.input),
                           "output": value_to_json(ex.output)} for ex in task.train],
                "hypotheses": [{"id": h.id, "text": h.text} for h in hypotheses],
            }
            self._pending[key] = entry
            with self.pending_path.open("a") as f:
                f.write(json.dumps(entry) + "\n")
            return entry

    def known_run_ids(self) -> list[str]:
        """Every run that ever enqueued or recorded, in first-seen order."""
        with self._cond:
            seen: dict[str, None] = {}
            for run_id, _ in list(self._pending) + list(self._selections):
                seen.setdefault(run_id)
            return list(seen)

    def list_pending(self, run_id: Optional[str] = None) -> list[dict]:
        """Enqueued entries without a selection yet, in enqueue order."""
        with self._cond:
            return [entry for key, entry in self._pending.items()
                    if key not in self._selections
                    and (run_id is None or key[0] == run_id)]

    # -- store ---------------------------------------------------------------

    def record_selection(self, record: SelectionRecord) -> SelectionRecord:
        """Validate against the enqueued hypotheses, persist, wake waiters."""
        key = (record.run_id, record.task_id)
        with self._cond:
            entry = self._pending.get(key)
            if entry is None:
                raise UnknownTask(f"task {record.task_id} was never enqueued for run "
                                  f"{record.run_id}")
            known = {h["id"] for h in entry["hypotheses"]}
            bad = set(record.chosen_hypothesis_ids) - known
            if bad:
                raise UnknownHypothesis(f"unknown hypothesis ids: {sorted(bad)}")
            self._selections[key] = record
            with self.selections_path.open("a") as f:
                f.write(json.dumps(record.to_dict()) + "\n")
            self._cond.notify_all()
        return record

    def get_selection(self, run_id: str, task_id: str) -> Optional[SelectionRecord]:
        with self._cond:
            return self._selections.get((run_id, task_id))

    def await_selection(self, run_id: str, task_id: str,
                        timeout: float = 0.0) -> SelectionRecord:
        """Block until a selection exists for (run, task) or the timeout elapses."""
        deadline = time.monotonic() + timeout
        key = (run_id, task_id)
        with self._cond:
            while True:
                rec = self._selections.get(key)
                if rec is not None:
                    return rec
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise TimedOut(f"no selection for {task_id} within {timeout}s")
                self._cond.wait(remaining)
