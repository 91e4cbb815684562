"""Reproduction steps as typed records with a bracketed textual form.

A step is one GUI interaction distilled from a bug report. The closed action
vocabulary and the per-action field shape are fixed; everything the rest of
the pipeline does (prompting, guidance, replay) is phrased in terms of these
records or their textual rendering, e.g.::

    1. [Tap] ["bookmark"]
    2. [Input] ["name"] ["a"]
    3. [Scroll] [down]
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .errors import MalformedStep

# Value typed into a field when the report names no explicit text.
DEFAULT_INPUT_VALUE = "test"


class ActionType(Enum):
    TAP = "Tap"
    SCROLL = "Scroll"
    INPUT = "Input"
    DOUBLE_TAP = "Double-tap"
    LONG_TAP = "Long-tap"

    def __str__(self) -> str:
        return self.value


class Direction(Enum):
    UP = "up"
    DOWN = "down"
    LEFT = "left"
    RIGHT = "right"

    def __str__(self) -> str:
        return self.value


# Which optional Step fields each action requires. All other optional
# fields must stay unset; a step never carries more than its shape.
PrimitiveShape = frozenset

_ARITY: dict[ActionType, PrimitiveShape] = {
    ActionType.TAP: frozenset({"component"}),
    ActionType.DOUBLE_TAP: frozenset({"component"}),
    ActionType.LONG_TAP: frozenset({"component"}),
    ActionType.INPUT: frozenset({"component", "value"}),
    ActionType.SCROLL: frozenset({"direction"}),
}

_ACTION_WORDS = {
    "tap": ActionType.TAP,
    "scroll": ActionType.SCROLL,
    "input": ActionType.INPUT,
    "doubletap": ActionType.DOUBLE_TAP,
    "longtap": ActionType.LONG_TAP,
}

_DIRECTION_WORDS = {
    "up": Direction.UP,
    "upward": Direction.UP,
    "upwards": Direction.UP,
    "down": Direction.DOWN,
    "downward": Direction.DOWN,
    "downwards": Direction.DOWN,
    "left": Direction.LEFT,
    "leftward": Direction.LEFT,
    "right": Direction.RIGHT,
    "rightward": Direction.RIGHT,
}


def arity(action: ActionType) -> PrimitiveShape:
    """Required field names for an action."""
    return _ARITY[action]


def normalize_action(word: str) -> ActionType | None:
    """Map a free-form action word onto the vocabulary, or None.

    Matching is case-insensitive and tolerant of hyphen/space/underscore
    variants ("Double tap", "long-tap"). Anything else, including near
    synonyms like "open" or "press", returns None; mapping synonyms onto
    the vocabulary is the extraction model's job, not the parser's.
    """
    key = re.sub(r"[\s_-]+", "", word.strip().lower())
    return _ACTION_WORDS.get(key)


def normalize_direction(word: str) -> Direction | None:
    return _DIRECTION_WORDS.get(word.strip().lower())


@dataclass(frozen=True)
class Step:
    """One reproduction step. Field shape is dictated by the action."""

    index: int
    action: ActionType
    component: str | None = None
    value: str | None = None
    direction: Direction | None = None

    def __post_init__(self):
        if not isinstance(self.index, int) or self.index < 1:
            raise ValueError(f"step index must be a positive int, got {self.index!r}")
        shape = arity(self.action)
        if ("component" in shape) != (self.component is not None):
            raise ValueError(f"{self.action} steps {'require' if 'component' in shape else 'forbid'} a component")
        if ("value" in shape) != (self.value is not None):
            raise ValueError(f"{self.action} steps {'require' if 'value' in shape else 'forbid'} a value")
        if ("direction" in shape) != (self.direction is not None):
            raise ValueError(f"{self.action} steps {'require' if 'direction' in shape else 'forbid'} a direction")
        if self.component is not None:
            _check_field_text("component", self.component, allow_empty=False)
        if self.value is not None:
            # empty value is legitimate: "leave the field empty"
            _check_field_text("value", self.value, allow_empty=True)

    def __str__(self) -> str:
        return step_text(self)


def _check_field_text(name: str, text: str, allow_empty: bool):
    if not isinstance(text, str):
        raise ValueError(f"step {name} must be a string, got {type(text).__name__}")
    if not allow_empty and not text:
        raise ValueError(f"step {name} must be non-empty")
    # The bracketed line syntax cannot carry these characters. Line
    # breaks means anything splitlines() honors, not just \n.
    if "[" in text or "]" in text:
        raise ValueError(f"step {name} may not contain square brackets: {text!r}")
    if len(("x" + text + "x").splitlines()) != 1:
        raise ValueError(f"step {name} may not contain line breaks: {text!r}")


@dataclass(frozen=True)
class BugReport:
    """A bug report as submitted: an id and the raw reproduction prose."""

    id: str
    raw_text: str

    def __post_init__(self):
        if not self.id:
            raise ValueError("bug report id must be non-empty")
        if not self.raw_text or not self.raw_text.strip():
            raise ValueError("bug report text must be non-empty")


def validate_step_list(steps: list[Step]) -> None:
    """Indices must run 1..n with no gaps."""
    for pos, step in enumerate(steps, start=1):
        if step.index != pos:
            raise ValueError(f"step indices must be consecutive from 1; position {pos} has index {step.index}")


def step_text(step: Step) -> str:
    """Bracketed textual form without the ordinal, e.g. '[Input] ["name"] ["a"]'."""
    parts = [f"[{step.action.value}]"]
    if step.component is not None:
        parts.append(f'["{step.component}"]')
    if step.value is not None:
        parts.append(f'["{step.value}"]')
    if step.direction is not None:
        parts.append(f"[{step.direction.value}]")
    return " ".join(parts)


def render_steps(steps: list[Step]) -> str:
    """Numbered lines, one step each."""
    return "\n".join(f"{s.index}. {step_text(s)}" for s in steps)


# Accepted quote wrappings around component/value tokens. Emission always
# uses plain double quotes; parsing strips exactly one wrapping layer.
_QUOTE_PAIRS = [
    ("``", "''"),
    ('"', '"'),
    ("“", "”"),
    ("'", "'"),
    ("‘", "’"),
]


def strip_quotes(token: str) -> str:
    t = token.strip()
    for left, right in _QUOTE_PAIRS:
        if len(t) >= len(left) + len(right) and t.startswith(left) and t.endswith(right):
            return t[len(left):len(t) - len(right)]
    return t


_TOKEN_RE = re.compile(r"\[([^\[\]]*)\]")


def bracket_tokens(text: str) -> list[str]:
    """All [...] token bodies in a line, left to right."""
    return _TOKEN_RE.findall(text)


def bind_tokens(tokens: list[str], index: int, line: str) -> Step:
    """Bind one line's bracket tokens to a Step per the action's shape.

    The first token names the action; the rest fill its required fields.
    An Input step missing its value gets DEFAULT_INPUT_VALUE; every other
    arity mismatch is malformed, as is an unknown action or direction.
    """
    if not tokens:
        raise MalformedStep(line, "no bracket tokens")
    action = normalize_action(tokens[0])
    if action is None:
        raise MalformedStep(line, f"unknown action {tokens[0]!r}")
    rest = [strip_quotes(t) for t in tokens[1:]]
    try:
        if action is ActionType.SCROLL:
            if len(rest) != 1:
                raise MalformedStep(line, "scroll takes exactly one direction token")
            direction = normalize_direction(rest[0])
            if direction is None:
                raise MalformedStep(line, f"unknown direction {rest[0]!r}")
            return Step(index, action, direction=direction)
        if action is ActionType.INPUT:
            if len(rest) == 1:
                rest.append(DEFAULT_INPUT_VALUE)
            if len(rest) != 2:
                raise MalformedStep(line, "input takes a component and a value")
            return Step(index, action, component=rest[0], value=rest[1])
        if len(rest) != 1:
            raise MalformedStep(line, f"{action.value.lower()} takes exactly one component token")
        return Step(index, action, component=rest[0])
    except ValueError as exc:
        raise MalformedStep(line, str(exc)) from exc


def parse_step_text(text: str, index: int = 1) -> Step:
    """Parse a single bracketed step like '[Tap] ["bookmark"]'."""
    return bind_tokens(bracket_tokens(text), index, text.strip())
