"""Prompt templates for answer generation and Yes/No answer verification.

The template strings are rendered byte-exactly: the trailing spaces and the
double period in the verification template are intentional and covered by
golden-file tests. Placeholders are substituted in a single pass, so a
placeholder-looking string inside a question or answer is never re-expanded.
"""

from __future__ import annotations

import re
from typing import Mapping, Sequence

from .corpus import Chunk

ANSWER_PROMPT_TEMPLATE = (
    "Please read the question provided below and then review the accompanying document excerpts. "
    "Your task is to answer the question using the information from the documents:\n"
    "Question: {question}\n"
    "\n"
    "Relevant Document chunks:\n"
    "{context}\n"
    "\n"
    "After considering the information in the documents, please provide an answer (maximum 5 tokens) "
    "to the question: {question}.\n"
    "Answer:"
)

JUDGE_PROMPT_TEMPLATE = (
    'You are CompareGPT, a machine to verify the correctness of predictions. Answer with only "Yes" or "No". \n'
    "You are given a question, one or more corresponding ground-truth answers, and a prediction from a model. "
    'Compare the "Ground-truth answers" and the "Prediction" to determine whether the prediction correctly answers '
    "the question based on any of the provided ground-truth answers. \n"
    "All information in at least one of the ground-truth answers must be present in the prediction, including "
    'numbers and dates. You must answer "No" if the prediction does not completely match at least one set of '
    "specific details in the ground-truth answers. \n"
    "There should be no contradicting statements in the prediction. The prediction may contain extra information "
    "that does not contradict the ground-truth answers.\n"
    "\n"
    "Question: {query} \n"
    "Ground-truth answers: {answer}\n"
    "Prediction: {result}\n"
    "\n"
    'Answer "Yes" if the prediction correctly answers the question based on any of the Ground-truth answers, '
    'otherwise answer "No"..'
)

_PLACEHOLDER_RE = re.compile(r"\{(question|context|query|answer|result)\}")


def _substitute(template: str, values: Mapping[str, str]) -> str:
    return _PLACEHOLDER_RE.sub(lambda match: values[match.group(1)], template)


def format_context(chunks: Sequence[Chunk]) -> str:
    """Render chunks as numbered "[i] title: text" lines in rank order."""
    return "\n".join(f"[{i}] {chunk.title}: {chunk.text}" for i, chunk in enumerate(chunks, start=1))


def format_references(references: Sequence[str]) -> str:
    """Serialize ground-truth answers as a comma-separated quoted list."""
    return ", ".join(f'"{reference}"' for reference in references)


def render_answer_prompt(question: str, chunks: Sequence[Chunk]) -> str:
    if not chunks:
        raise ValueError("cannot render an answer prompt without context chunks")
    return _substitute(
        ANSWER_PROMPT_TEMPLATE, {"question": question, "context": format_context(chunks)}
    )


def render_judge_prompt(question: str, references: Sequence[str], prediction: str) -> str:
    if not references:
        raise ValueError("cannot render a judge prompt without references")
    return _substitute(
        JUDGE_PROMPT_TEMPLATE,
        {"query": question, "answer": format_references(references), "result": prediction},
    )
