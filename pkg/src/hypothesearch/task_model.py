"""Tasks and values for the four benchmark domains.

A task is a set of input-output examples sharing one hidden transformation.
Three value kinds exist: color grids (ARC and its one-dimensional variant),
strings (SyGuS string transformations), and integer lists (List Functions).
Everything here is a pure function over immutable-ish values, safe to call
from any number of workers.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .errors import ParseError, SchemaError

MAX_GRID_DIM = 30
NUM_COLORS = 10

_COLOR_NAMES = [
    "black", "blue", "red", "green", "yellow",
    "grey", "fuschia", "orange", "teal", "brown",
]


class Domain(str, Enum):
    ARC = "arc"
    ARC1D = "arc1d"
    SYGUS = "sygus"
    LISTFN = "listfn"

    @property
    def kind(self) -> str:
        """Wire-protocol value kind: "grid", "text", or "intlist"."""
        if self in (Domain.ARC, Domain.ARC1D):
            return "grid"
        if self is Domain.SYGUS:
            return "text"
        return "intlist"


@dataclass(frozen=True)
class Grid:
    """Rectangular grid of color indices 0-9, 1x1 up to 30x30."""

    cells: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        rows = len(self.cells)
        if not 1 <= rows <= MAX_GRID_DIM:
            raise ValueError(f"grid has {rows} rows, expected 1..{MAX_GRID_DIM}")
        cols = len(self.cells[0])
        if not 1 <= cols <= MAX_GRID_DIM:
            raise ValueError(f"grid has {cols} cols, expected 1..{MAX_GRID_DIM}")
        for row in self.cells:
            if len(row) != cols:
                raise ValueError("grid rows have unequal lengths")
            for cell in row:
                if not isinstance(cell, int) or isinstance(cell, bool):
                    raise ValueError(f"grid cell {cell!r} is not an integer")
                if not 0 <= cell <= 9:
                    raise ValueError(f"grid cell {cell} outside 0..9")

    @classmethod
    def from_lists(cls, rows: Sequence[Sequence[int]]) -> "Grid":
        if not rows:
            raise ValueError("grid has 0 rows, expected 1..30")
        return cls(tuple(tuple(r) for r in rows))

    def to_lists(self) -> list[list[int]]:
        return [list(r) for r in self.cells]

    @property
    def rows(self) -> int:
        return len(self.cells)

    @property
    def cols(self) -> int:
        return len(self.cells[0])


Value = Union[Grid, str, list]
"""A domain value: Grid for ARC/1D-ARC, str for SyGuS, list[int] for ListFn."""


@dataclass(frozen=True)
class Example:
    """One input-output pair; output is absent only for unscored test inputs."""

    input: Value
    output: Optional[Value] = None


@dataclass(frozen=True)
class Task:
    id: str
    domain: Domain
    train: tuple[Example, ...]
    test: tuple[Example, ...] = ()
    category: Optional[str] = None  # 1D-ARC category, used for stratified sampling

    def __post_init__(self):
        if not self.train:
            raise ValueError(f"task {self.id}: train set is empty")
        if not self.test and self.domain is not Domain.SYGUS:
            raise ValueError(f"task {self.id}: test set is empty")


# ---------------------------------------------------------------------------
# Value validation / JSON boundary
# ---------------------------------------------------------------------------


def validate_value(raw, domain: Domain) -> Value:
    """Decode a JSON-shaped value into a domain Value, enforcing invariants.

    Raises ValueError on domain violations, SchemaError on wrong container types.
    """
    kind = domain.kind
    if kind == "grid":
        if not isinstance(raw, list) or not all(isinstance(r, list) for r in raw):
            raise SchemaError(f"expected list of lists for a grid, got {type(raw).__name__}")
        return Grid.from_lists(raw)
    if kind == "text":
        if not isinstance(raw, str):
            raise SchemaError(f"expected string, got {type(raw).__name__}")
        return raw
    if not isinstance(raw, list):
        raise SchemaError(f"expected list of ints, got {type(raw).__name__}")
    out = []
    for x in raw:
        if isinstance(x, bool) or not isinstance(x, int):
            raise ValueError(f"list element {x!r} is not an integer")
        out.append(x)
    return out


def value_to_json(v: Value):
    """Encode a Value into the JSON shape used by task files and the sandbox."""
    if isinstance(v, Grid):
        return v.to_lists()
    return v


def values_equal(a: Value, b: Value) -> bool:
    """Exact structural equality: dims + cells, byte-equal strings, element-equal lists."""
    if isinstance(a, Grid) and isinstance(b, Grid):
        return a.cells == b.cells
    if isinstance(a, Grid) or isinstance(b, Grid):
        return False
    return type(a) is type(b) and a == b


# ---------------------------------------------------------------------------
# Task file parsing
# ---------------------------------------------------------------------------


def parse_task(data: bytes, task_id: str, domain: Domain, *,
               strict_1d: bool = False, category: Optional[str] = None) -> Task:
    """Parse a task file (ARC JSON schema or its list/string mirror)."""
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as e:
        raise SchemaError(f"task {task_id}: invalid JSON: {e}") from e
    if not isinstance(doc, dict) or "train" not in doc or "test" not in doc:
        raise SchemaError(f"task {task_id}: expected object with 'train' and 'test'")

    def parse_split(split: str, require_output: bool) -> tuple[Example, ...]:
        items = doc[split]
        if not isinstance(items, list):
            raise SchemaError(f"task {task_id}: '{split}' is not a list")
        examples = []
        for i, item in enumerate(items):
            if not isinstance(item, dict) or "input" not in item:
                raise SchemaError(f"task {task_id}: {split}[{i}] missing 'input'")
            inp = validate_value(item["input"], domain)
            out = None
            if "output" in item and item["output"] is not None:
                out = validate_value(item["output"], domain)
            elif require_output:
                raise SchemaError(f"task {task_id}: {split}[{i}] missing 'output'")
            examples.append(Example(inp, out))
        return tuple(examples)

    train = parse_split("train", require_output=True)
    test = parse_split("test", require_output=False)
    if strict_1d and domain is Domain.ARC1D:
        for ex in list(train) + list(test):
            for v in (ex.input, ex.output):
                if isinstance(v, Grid) and v.rows != 1:
                    raise ValueError(f"task {task_id}: 1D task has a grid with {v.rows} rows")
    return Task(id=task_id, domain=domain, train=train, test=test, category=category)


def parse_arc_task(data: bytes, task_id: str) -> Task:
    return parse_task(data, task_id, Domain.ARC)


def serialize_task(task: Task) -> bytes:
    """Inverse of parse_task; preserves example ordering."""
    doc = {
        "train": [
            {"input": value_to_json(ex.input), "output": value_to_json(ex.output)}
            for ex in task.train
        ],
        "test": [
            {"input": value_to_json(ex.input)}
            | ({"output": value_to_json(ex.output)} if ex.output is not None else {})
            for ex in task.test
        ],
    }
    return json.dumps(doc, separators=(",", ":")).encode()


def load_tasks(directory: Union[str, Path], domain: Domain, *,
               strict_1d: bool = False) -> list[Task]:
    """Load every *.json task in a directory; filename stem is the task id.

    1D-ARC categories come from the id prefix before the trailing _<n> suffix.
    """
    directory = Path(directory)
    tasks = []
    for path in sorted(directory.glob("*.json")):
        category = None
        if domain is Domain.ARC1D:
            category = re.sub(r"_\d+$", "", path.stem)
        tasks.append(parse_task(path.read_bytes(), path.stem, domain,
                                strict_1d=strict_1d, category=category))
    return tasks


# ---------------------------------------------------------------------------
# Text rendering / parsing
# ---------------------------------------------------------------------------


def render_grid(g: Grid) -> str:
    """Bracketed matrix text, e.g. "[[3 3 8]\\n [3 7 0]\\n [5 0 0]]"."""
    rows = ["[" + " ".join(str(c) for c in row) + "]" for row in g.cells]
    return "[" + "\n ".join(rows) + "]"


_ROW_RE = re.compile(r"\[([^\[\]]*)\]")


def parse_grid_text(text: str) -> Grid:
    """Inverse of render_grid; tolerates surrounding whitespace and commas."""
    s = text.strip()
    if not (s.startswith("[") and s.endswith("]")):
        raise ParseError(f"grid text not bracketed: {text[:40]!r}")
    inner = s[1:-1]
    rows = []
    last_end = 0
    for m in _ROW_RE.finditer(inner):
        between = inner[last_end:m.start()]
        if between.strip(" \t\n\r,"):
            raise ParseError(f"unexpected text between grid rows: {between!r}")
        last_end = m.end()
        tokens = [t for t in re.split(r"[\s,]+", m.group(1).strip()) if t]
        if not tokens:
            raise ParseError("empty grid row")
        row = []
        for tok in tokens:
            try:
                row.append(int(tok))
            except ValueError:
                raise ParseError(f"non-integer grid cell {tok!r}") from None
        rows.append(row)
    trailing = inner[last_end:]
    if trailing.strip(" \t\n\r,"):
        raise ParseError(f"unbalanced brackets or trailing text: {trailing!r}")
    if not rows:
        raise ParseError("no grid rows found")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ParseError("ragged grid rows")
    return Grid.from_lists(rows)


def color_legend() -> str:
    """The color legend line used in grid prompts (verbatim, 10 entries)."""
    return "".join(
        f"{i}:{name}" + ("; " if i < 9 else "")
        for i, name in enumerate(_COLOR_NAMES)
    )


def render_value(v: Value, domain: Domain) -> str:
    """Render a value as prompt/score text for its domain."""
    kind = domain.kind
    if kind == "grid":
        if not isinstance(v, Grid):
            raise ValueError(f"expected Grid for {domain}, got {type(v).__name__}")
        return render_grid(v)
    if kind == "text":
        if not isinstance(v, str):
            raise ValueError(f"expected str for {domain}, got {type(v).__name__}")
        return json.dumps(v)  # quoted, escaped
    if not isinstance(v, list):
        raise ValueError(f"expected list for {domain}, got {type(v).__name__}")
    return "[" + ", ".join(str(x) for x in v) + "]"


def parse_value_text(text: str, domain: Domain) -> Value:
    """Inverse of render_value on its image; raises ParseError otherwise."""
    kind = domain.kind
    if kind == "grid":
        return parse_grid_text(text)
    s = text.strip()
    if kind == "text":
        if s.startswith('"'):
            try:
                decoded = json.loads(s)
            except json.JSONDecodeError as e:
                raise ParseError(f"bad quoted string: {e}") from e
            if not isinstance(decoded, str):
                raise ParseError("quoted value is not a string")
            return decoded
        # Models frequently answer with the bare string; accept it.
        return s
    if not (s.startswith("[") and s.endswith("]")):
        raise ParseError(f"list text not bracketed: {text[:40]!r}")
    body = s[1:-1].strip()
    if not body:
        return []
    out = []
    for tok in re.split(r"[\s,]+", body):
        if not tok:
            continue
        try:
            out.append(int(tok))
        except ValueError:
            raise ParseError(f"non-integer list element {tok!r}") from None
    return out


# ---------------------------------------------------------------------------
# Subset sampling
# ---------------------------------------------------------------------------


def sample_subset(ids: Sequence[str], n: int, seed: int) -> list[str]:
    """Uniform sample of n ids without replacement; deterministic per seed.

    Uses random.Random (Mersenne Twister) over the sorted id list so results
    do not depend on input ordering.
    """
    if n > len(ids):
        raise ValueError(f"cannot sample {n} from {len(ids)} ids")
    return random.Random(seed).sample(sorted(ids), n)


def sample_stratified(by_category: dict[str, Sequence[str]], per_category: int,
                      seed: int) -> list[str]:
    """Per-category uniform sample (the 1D-ARC 6-per-category scheme)."""
    rng = random.Random(seed)
    chosen = []
    for cat in sorted(by_category):
        ids = sorted(by_category[cat])
        if per_category > len(ids):
            raise ValueError(f"category {cat}: cannot sample {per_category} from {len(ids)}")
        chosen.extend(rng.sample(ids, per_category))
    return chosen
