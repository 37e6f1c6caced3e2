"""Prompt template loading and rendering.

Templates are plain text files with str.format placeholders, shipped as
package data but overridable via a directory path in the run config. The
library exposes content hashes so runs can record exactly which templates
they used.
"""

from __future__ import annotations

import hashlib
import re
from pathlib import Path
from typing import Optional

from .backends import ChatMessage

_DEFAULT_DIR = Path(__file__).parent / "templates"

_DEMO_BLOCK_RE = re.compile(r"^=== (user|assistant) ===$", re.MULTILINE)


class PromptLibrary:
    def __init__(self, directory: Optional[Path] = None):
        self.directory = Path(directory) if directory else _DEFAULT_DIR
        self._cache: dict[str, str] = {}

    def text(self, name: str) -> str:
        if name not in self._cache:
            self._cache[name] = (self.directory / f"{name}.txt").read_text()
        return self._cache[name]

    def render(self, name: str, **fields: str) -> str:
        return self.text(name).format(**fields)

    def demos(self, name: str) -> list[ChatMessage]:
        """Parse a few-shot demo file of "=== role ===" delimited blocks."""
        raw = self.text(name)
        parts = _DEMO_BLOCK_RE.split(raw)
        # parts = ["", role, body, role, body, ...]
        messages = []
        for role, body in zip(parts[1::2], parts[2::2]):
            messages.append(ChatMessage(role=role, content=body.strip("\n")))
        return messages

    def hashes(self) -> dict[str, str]:
        """sha256 of every template file, for the run ledger."""
        out = {}
        for path in sorted(self.directory.glob("*.txt")):
            out[path.stem] = hashlib.sha256(path.read_bytes()).hexdigest()
        return out
