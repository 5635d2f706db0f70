"""Listwise prompt rendering and token estimation."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Optional, Sequence

from .core import Passage, Query, ValidationError

_PLACEHOLDER = re.compile(r"\{(num|query)\}")
_FIRST_LINE = re.compile(r"^(?P<pre>.*)\[1\](?P<mid>.*)\{passage 1\}(?P<post>.*)$")
_LAST_LINE = re.compile(r"\{passage \{num\}\}")


def _fill(text: str, values: dict[str, str]) -> str:
    # Single pass so query text containing "{num}" is never re-expanded.
    return _PLACEHOLDER.sub(lambda m: values[m.group(1)], text)


@dataclass(frozen=True)
class PromptTemplate:
    """Preamble, one line per passage, postamble.

    ``passage_line`` uses ``{index}`` and ``{passage}``; preamble and
    postamble may use ``{num}`` and ``{query}``.
    """

    preamble: str
    passage_line: str
    postamble: str

    @classmethod
    def from_text(cls, text: str) -> "PromptTemplate":
        """Read a template written the way it is displayed to a reader.

        The line holding ``[1] {passage 1}`` is the per-passage prototype and
        everything up to the line holding ``{passage {num}}`` is elided.
        """
        lines = text.splitlines()
        first = next((i for i, ln in enumerate(lines) if _FIRST_LINE.match(ln)), None)
        if first is None:
            raise ValidationError("template has no '[1] {passage 1}' line")
        last = next(
            (i for i in range(first, len(lines)) if _LAST_LINE.search(lines[i])), first
        )
        m = _FIRST_LINE.match(lines[first])
        assert m is not None
        line = m["pre"] + "[{index}]" + m["mid"] + "{passage}" + m["post"]
        preamble = "".join(ln + "\n" for ln in lines[:first])
        postamble = "\n".join(lines[last + 1 :])
        return cls(preamble, line, postamble)

    @classmethod
    def from_file(cls, path: str | Path) -> "PromptTemplate":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))

    def render(self, query: str, passages: Sequence[str]) -> str:
        if not passages:
            raise ValidationError("cannot build a prompt for an empty window")
        values = {"num": str(len(passages)), "query": query}
        body = "".join(
            self.passage_line.replace("{index}", str(i)).replace("{passage}", text) + "\n"
            for i, text in enumerate(passages, start=1)
        )
        return _fill(self.preamble, values) + body + _fill(self.postamble, values)


def default_template() -> PromptTemplate:
    text = resources.files("listrank").joinpath("templates/listwise.txt").read_text("utf-8")
    return PromptTemplate.from_text(text)


DEFAULT_TEMPLATE = default_template()


def build_prompt(
    query: Query, window: Sequence[Passage], template: Optional[PromptTemplate] = None
) -> str:
    """Render the listwise prompt; passages are renumbered 1..len(window)."""
    template = template or DEFAULT_TEMPLATE
    return template.render(query.body, [p.body for p in window])


@dataclass(frozen=True)
class TokenizerHandle:
    name: str
    count: Callable[[str], int]

    def __call__(self, text: str) -> int:
        return self.count(text)


def heuristic_count(text: str) -> int:
    return math.ceil(len(text) / 4)


HEURISTIC = TokenizerHandle("chars/4", heuristic_count)


def estimate_tokens(text: str, tokenizer: Optional[TokenizerHandle] = None) -> int:
    return (tokenizer or HEURISTIC).count(text)
