"""Worked exemplars for few-shot prompting, and budgeted selection.

The built-in corpus ships with the package; users can point the CLI at
their own file instead. Corpus files are JSON with two arrays::

    {
      "extraction": [{"input": ..., "cot": ..., "output": [step, ...]}, ...],
      "guidance":   [{"gui_html": ..., "query": ..., "cot": ..., "output": ...}, ...]
    }

where steps and queries use the bracketed textual form and guidance
outputs are raw answer text such as "[id=6]" or "[MISSING] [id=1]".
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import TYPE_CHECKING, Callable, Sequence

from .errors import BudgetUnsatisfiable
from .steps import Step, parse_step_text, validate_step_list

if TYPE_CHECKING:
    from .guidance import GuidanceResult

MAX_EXEMPLARS = 3


@dataclass(frozen=True)
class ExtractionExemplar:
    """A worked report -> reasoning -> numbered steps example."""

    input_report: str
    chain_of_thought: str
    output_steps: tuple[Step, ...]

    def __post_init__(self):
        if not self.input_report.strip():
            raise ValueError("exemplar input report must be non-empty")
        if not self.chain_of_thought.strip():
            raise ValueError("exemplar chain of thought must be non-empty")
        if not self.output_steps:
            raise ValueError("exemplar must have at least one output step")
        validate_step_list(list(self.output_steps))


@dataclass(frozen=True)
class GuidanceExemplar:
    """A worked screen + query -> reasoning -> component answer example."""

    gui_html: str
    query_step: Step
    chain_of_thought: str
    output: "GuidanceResult"

    def __post_init__(self):
        if not self.gui_html.strip():
            raise ValueError("exemplar gui html must be non-empty")
        if not self.chain_of_thought.strip():
            raise ValueError("exemplar chain of thought must be non-empty")
        cid = self.output.component_id
        if cid is not None and not re.search(rf"\bid={cid}\b", self.gui_html):
            raise ValueError(f"exemplar answer cites id={cid} which is not in its gui html")


@dataclass(frozen=True)
class ExemplarCorpus:
    extraction: tuple[ExtractionExemplar, ...]
    guidance: tuple[GuidanceExemplar, ...]

    @classmethod
    def from_dict(cls, data: dict) -> "ExemplarCorpus":
        from .guidance import parse_guidance_response

        extraction = []
        for record in data.get("extraction", []):
            steps = [parse_step_text(text, i) for i, text in enumerate(record["output"], start=1)]
            extraction.append(
                ExtractionExemplar(record["input"], record["cot"], tuple(steps))
            )
        guidance = []
        for record in data.get("guidance", []):
            guidance.append(
                GuidanceExemplar(
                    gui_html=record["gui_html"],
                    query_step=parse_step_text(record["query"]),
                    chain_of_thought=record["cot"],
                    output=parse_guidance_response(record["output"]),
                )
            )
        return cls(tuple(extraction), tuple(guidance))

    @classmethod
    def load(cls, path) -> "ExemplarCorpus":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    @classmethod
    def builtin(cls) -> "ExemplarCorpus":
        text = resources.files("bugreplay").joinpath("data/default_corpus.json").read_text("utf-8")
        return cls.from_dict(json.loads(text))


def select_exemplars(
    corpus_slice: Sequence,
    budget: int,
    test_prompt_size: int,
    *,
    cost: Callable[[object], int],
) -> list:
    """Pick 1..3 exemplars, greedy in corpus order, under a token budget.

    cost estimates one exemplar's token contribution to the prompt. An
    exemplar is kept while the running total plus test_prompt_size stays
    within budget; selection never reorders and never truncates exemplar
    text. If not even the cheapest exemplar fits, the budget is
    unsatisfiable.
    """
    if not corpus_slice:
        raise ValueError("exemplar corpus slice is empty")
    if budget <= test_prompt_size:
        raise BudgetUnsatisfiable(
            f"test prompt alone estimates {test_prompt_size} tokens of a {budget} budget"
        )
    chosen: list = []
    total = test_prompt_size
    for exemplar in corpus_slice:
        if len(chosen) == MAX_EXEMPLARS:
            break
        c = cost(exemplar)
        if total + c <= budget:
            chosen.append(exemplar)
            total += c
    if not chosen:
        cheapest = min(cost(e) for e in corpus_slice)
        raise BudgetUnsatisfiable(
            f"smallest exemplar ({cheapest} tokens) plus test prompt "
            f"({test_prompt_size} tokens) exceeds the {budget} token budget"
        )
    return chosen
