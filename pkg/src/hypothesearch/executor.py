"""Sandboxed verification of candidate programs against examples.

Each case runs in a fresh shim subprocess (one process per case, so a hang on
case i cannot mask case i+1). The supervisor speaks one JSON line in, one
JSON line out, enforces the wall-clock timeout by killing the process, and
compares decoded outputs by exact structural equality.
"""

from __future__ import annotations

import hashlib
import json
import os
import shutil
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

from .errors import SandboxSpawnError, SchemaError
from .task_model import Domain, Example, Value, validate_value, value_to_json, values_equal

SHIM_PATH = Path(__file__).parent / "sandbox_shim.py"

ENTRY_POINTS = {"grid": "transform_grid", "text": "transform_string", "intlist": "transform_list"}

TRACEBACK_TAIL_LINES = 20


@dataclass(frozen=True)
class ProgramCandidate:
    id: str
    source: str
    hypothesis_id: Optional[str] = None
    round: int = 0
    parent_id: Optional[str] = None
    seq: int = 0  # global generation order, used for deterministic tie-breaks

    def __post_init__(self):
        if not self.source.strip():
            raise ValueError("empty candidate source")


class CaseStatus(str, Enum):
    PASS = "pass"
    WRONG_OUTPUT = "wrong_output"
    EXCEPTION = "exception"
    TIMEOUT = "timeout"
    MALFORMED_OUTPUT = "malformed_output"


@dataclass
class CaseError:
    type: str
    message: str
    traceback: str = ""


@dataclass
class CaseResult:
    status: CaseStatus
    actual: Optional[Value] = None
    error: Optional[CaseError] = None
    wall_time: float = 0.0


@dataclass
class ExecutionReport:
    candidate_id: str
    cases: list[CaseResult]

    @property
    def pass_count(self) -> int:
        return sum(1 for c in self.cases if c.status is CaseStatus.PASS)

    @property
    def all_pass(self) -> bool:
        return bool(self.cases) and all(c.status is CaseStatus.PASS for c in self.cases)

    def first_failing_index(self) -> Optional[int]:
        for i, c in enumerate(self.cases):
            if c.status is not CaseStatus.PASS:
                return i
        return None


@dataclass
class ExecutionLimits:
    timeout_s: float = 10.0
    memory_mb: int = 512
    supervision_slack_s: float = 2.0


def signature(report: ExecutionReport) -> str:
    """Digest of ordered per-case outcomes: actual value if produced, else status tag.

    Equal iff the ordered outcomes are equal; stable across processes.
    """
    outcomes = []
    for case in report.cases:
        if case.actual is not None:
            outcomes.append(["value", value_to_json(case.actual)])
        else:
            outcomes.append(["status", case.status.value])
    blob = json.dumps(outcomes, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _coerce_numbers(value):
    """Accept integer-valued floats anywhere in a decoded structure."""
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if isinstance(value, list):
        return [_coerce_numbers(v) for v in value]
    return value


def _truncate_traceback(tb: str) -> str:
    lines = tb.splitlines()
    if len(lines) <= TRACEBACK_TAIL_LINES:
        return tb
    return "\n".join(lines[-TRACEBACK_TAIL_LINES:])


def run_case(source: str, input_value: Value, domain: Domain,
             limits: ExecutionLimits) -> CaseResult:
    """Execute one candidate invocation in a fresh sandbox process."""
    kind = domain.kind
    request = {
        "source": source,
        "entry": ENTRY_POINTS[kind],
        "input": value_to_json(input_value),
        "domain": kind,
    }
    scratch = tempfile.mkdtemp(prefix="hs-sandbox-")
    start = time.monotonic()
    try:
        try:
            proc = subprocess.Popen(
                [sys.executable, str(SHIM_PATH)],
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                cwd=scratch,
                env={
                    "PATH": os.environ.get("PATH", ""),
                    "HS_MEM_MB": str(limits.memory_mb),
                    "PYTHONPATH": "",
                },
                text=True,
            )
        except OSError as e:
            raise SandboxSpawnError(f"failed to start sandbox: {e}") from e

        try:
            stdout, _ = proc.communicate(json.dumps(request) + "\n",
                                         timeout=limits.timeout_s)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()
            return CaseResult(CaseStatus.TIMEOUT,
                              error=CaseError("Timeout",
                                              f"exceeded {limits.timeout_s}s wall clock"),
                              wall_time=time.monotonic() - start)
        wall = time.monotonic() - start

        line = stdout.strip().splitlines()[-1] if stdout.strip() else ""
        try:
            response = json.loads(line)
        except (json.JSONDecodeError, ValueError):
            return CaseResult(CaseStatus.EXCEPTION,
                              error=CaseError("ShimCrash",
                                              f"sandbox exited {proc.returncode} with no response"),
                              wall_time=wall)

        if response.get("status") == "ok":
            raw = _coerce_numbers(response.get("output"))
            try:
                actual = validate_value(raw, domain)
            except (ValueError, SchemaError) as e:
                return CaseResult(CaseStatus.MALFORMED_OUTPUT,
                                  error=CaseError("MalformedOutput", str(e)),
                                  wall_time=wall)
            return CaseResult(CaseStatus.PASS, actual=actual, wall_time=wall)

        err_type = response.get("type", "UnknownError")
        err = CaseError(err_type, response.get("message", ""),
                        _truncate_traceback(response.get("traceback", "")))
        if err_type == "OutputEncodingError":
            return CaseResult(CaseStatus.MALFORMED_OUTPUT, error=err, wall_time=wall)
        return CaseResult(CaseStatus.EXCEPTION, error=err, wall_time=wall)
    finally:
        shutil.rmtree(scratch, ignore_errors=True)


def evaluate(candidate: ProgramCandidate, examples: Sequence[Example],
             domain: Domain, limits: Optional[ExecutionLimits] = None) -> ExecutionReport:
    """Run a candidate on every training example; exceptions are reported, never raised."""
    limits = limits or ExecutionLimits()
    cases = []
    for ex in examples:
        if ex.output is None:
            raise ValueError("evaluate requires examples with outputs")
        result = run_case(candidate.source, ex.input, domain, limits)
        if result.status is CaseStatus.PASS and not values_equal(result.actual, ex.output):
            result = CaseResult(CaseStatus.WRONG_OUTPUT, actual=result.actual,
                                wall_time=result.wall_time)
        cases.append(result)
    return ExecutionReport(candidate_id=candidate.id, cases=cases)


def predict(candidate: ProgramCandidate, inputs: Sequence[Value], domain: Domain,
            limits: Optional[ExecutionLimits] = None) -> list[CaseResult]:
    """Apply a candidate to novel inputs under the same sandbox contract."""
    limits = limits or ExecutionLimits()
    return [run_case(candidate.source, value, domain, limits) for value in inputs]
