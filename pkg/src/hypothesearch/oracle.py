"""Brute-force oracle generator over a micro-DSL of list/string/grid primitives.

A test double for the generation backend: terms are unary primitive chains
composed up to a documented depth bound of 3, each transpiled to guest Python
source. Enumeration order is deterministic and every emitted candidate
compiles in the sandbox. The DSL also evaluates terms natively, giving an
independent check against sandbox execution.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import product
from typing import Callable, Optional, Sequence

from .backends import CompletionResult, GenerationRequest, Stage, _request_usage
from .errors import BackendError
from .executor import ProgramCandidate
from .task_model import Domain, Example, Grid, Task, Value, parse_value_text

MAX_DEPTH = 3


@dataclass(frozen=True)
class Primitive:
    name: str
    native: Callable
    code: str  # one statement transforming variable x in place


def _grid_native(fn):
    def wrapped(g: Grid) -> Grid:
        return Grid.from_lists(fn(g.to_lists()))
    return wrapped


LIST_PRIMITIVES = [
    Primitive("reverse", lambda x: x[::-1], "x = x[::-1]"),
    Primitive("sort", lambda x: sorted(x), "x = sorted(x)"),
    Primitive("head", lambda x: x[:1], "x = x[:1]"),
    Primitive("tail", lambda x: x[1:], "x = x[1:]"),
    Primitive("plus1", lambda x: [v + 1 for v in x], "x = [v + 1 for v in x]"),
    Primitive("keep_even", lambda x: [v for v in x if v % 2 == 0],
              "x = [v for v in x if v % 2 == 0]"),
    Primitive("keep_odd", lambda x: [v for v in x if v % 2 == 1],
              "x = [v for v in x if v % 2 == 1]"),
    Primitive("concat_self", lambda x: x + x, "x = x + x"),
]

TEXT_PRIMITIVES = [
    Primitive("reverse", lambda x: x[::-1], "x = x[::-1]"),
    Primitive("sort", lambda x: "".join(sorted(x)), 'x = "".join(sorted(x))'),
    Primitive("head", lambda x: x[:1], "x = x[:1]"),
    Primitive("tail", lambda x: x[1:], "x = x[1:]"),
    Primitive("concat_self", lambda x: x + x, "x = x + x"),
]

GRID_PRIMITIVES = [
    Primitive("transpose", _grid_native(lambda g: [list(r) for r in zip(*g)]),
              "x = [list(r) for r in zip(*x)]"),
    Primitive("flip_h", _grid_native(lambda g: [r[::-1] for r in g]),
              "x = [r[::-1] for r in x]"),
    Primitive("flip_v", _grid_native(lambda g: g[::-1]), "x = x[::-1]"),
]

_PRIMITIVES = {"intlist": LIST_PRIMITIVES, "text": TEXT_PRIMITIVES, "grid": GRID_PRIMITIVES}
_ENTRY = {"intlist": "transform_list", "text": "transform_string", "grid": "transform_grid"}
_PARAM = {"intlist": "input_list", "text": "input_string", "grid": "input_grid"}


@dataclass(frozen=True)
class DslTerm:
    """A chain of primitives applied left to right; empty chain is identity."""

    kind: str  # "grid" | "text" | "intlist"
    chain: tuple[str, ...]

    def _primitives(self) -> list[Primitive]:
        by_name = {p.name: p for p in _PRIMITIVES[self.kind]}
        return [by_name[name] for name in self.chain]

    def apply(self, value: Value) -> Value:
        for prim in self._primitives():
            value = prim.native(value)
        return value

    def to_source(self) -> str:
        entry = _ENTRY[self.kind]
        param = _PARAM[self.kind]
        lines = [f"def {entry}({param}):"]
        if self.kind == "grid":
            # Accept both ndarray and nested-list inputs.
            lines.append(f"    x = [list(r) for r in {param}]")
        elif self.kind == "intlist":
            lines.append(f"    x = list({param})")
        else:
            lines.append(f"    x = {param}")
        for prim in self._primitives():
            lines.append(f"    {prim.code}")
        lines.append("    return x")
        return "\n".join(lines) + "\n"

    def passes_native(self, examples: Sequence[Example]) -> bool:
        from .task_model import values_equal
        for ex in examples:
            try:
                if not values_equal(self.apply(ex.input), ex.output):
                    return False
            except Exception:
                return False
        return True


def enumerate_terms(kind: str, depth: int) -> list[DslTerm]:
    """All chains up to the given depth, identity first, deterministic order."""
    if depth > MAX_DEPTH:
        raise ValueError(f"depth {depth} exceeds documented bound {MAX_DEPTH}")
    names = [p.name for p in _PRIMITIVES[kind]]
    terms = []
    for d in range(depth + 1):
        for chain in product(names, repeat=d):
            terms.append(DslTerm(kind, chain))
    return terms


def oracle_generate(task: Task, depth: int) -> list[ProgramCandidate]:
    """Transpile the full enumeration for a task's domain into candidates."""
    terms = enumerate_terms(task.domain.kind, depth)
    return [
        ProgramCandidate(id=f"{task.id}/oracle{i}", source=term.to_source(), seq=i)
        for i, term in enumerate(terms)
    ]


def make_dsl_task(task_id: str, chain: Sequence[str], inputs: Sequence[list],
                  *, n_test: int = 2) -> Task:
    """Build a ListFn task whose ground truth is the given DSL chain.

    The last n_test inputs become test examples.
    """
    term = DslTerm("intlist", tuple(chain))
    examples = [Example(list(inp), term.apply(list(inp))) for inp in inputs]
    return Task(id=task_id, domain=Domain.LISTFN,
                train=tuple(examples[:-n_test]), test=tuple(examples[-n_test:]))


# ---------------------------------------------------------------------------
# Backend adapter
# ---------------------------------------------------------------------------

_EXAMPLE_RE = re.compile(
    r"Example (\d+):\nInput:\n(.*?)\nOutput:\n(.*?)(?=\nExample \d+:|\nNow, please)",
    re.DOTALL)


class OracleBackend:
    """Backend that answers program-stage prompts by DSL enumeration.

    Training examples are parsed back out of the rendered prompt; candidates
    that pass them under native DSL evaluation are returned first (the sandbox
    still independently verifies whatever the pipeline selects). Hypothesis
    prompts get placeholder texts so FULL-mode plumbing can run end to end.
    """

    name = "oracle"

    def __init__(self, depth: int = 2):
        self.depth = depth

    def complete(self, req: GenerationRequest) -> CompletionResult:
        if req.stage in (Stage.PROGRAM, Stage.REVISE):
            texts = self._programs(req)
        elif req.stage == Stage.HYPOTHESIS:
            texts = [f"Apply transformation variant {i}." for i in range(req.n)]
        else:
            raise BackendError(f"oracle backend does not serve stage {req.stage.value}")
        return CompletionResult(texts, _request_usage(req, texts))

    def _programs(self, req: GenerationRequest) -> list[str]:
        # The first message always carries the rendered examples, for both
        # initial synthesis and revision requests.
        prompt = req.messages[0].content
        if "transform_list" in prompt:
            kind, domain = "intlist", Domain.LISTFN
        elif "transform_string" in prompt:
            kind, domain = "text", Domain.SYGUS
        elif "transform_grid" in prompt:
            kind, domain = "grid", Domain.ARC
        else:
            raise BackendError("oracle backend cannot infer domain from prompt")
        examples = []
        for m in _EXAMPLE_RE.finditer(prompt):
            examples.append(Example(parse_value_text(m.group(2), domain),
                                    parse_value_text(m.group(3), domain)))
        if not examples:
            raise BackendError("oracle backend found no examples in prompt")

        terms = enumerate_terms(kind, self.depth)
        ranked = sorted(range(len(terms)),
                        key=lambda i: (not terms[i].passes_native(examples), i))
        sources = [f"```python\n{terms[i].to_source()}```" for i in ranked[:req.n]]
        while len(sources) < req.n:
            sources.append(sources[-1])
        return sources
