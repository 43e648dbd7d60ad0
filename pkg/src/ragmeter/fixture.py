"""Deterministic synthetic corpus/dataset generator for hermetic pipeline runs.

Both variants contain 50 questions and 500 single-chunk documents; every
question's gold chunk carries its answer token, so semi-gold generation always
recovers the answer under the mock stack.

``clean``  -- distractor-free: each question's gold chunk is the unique best
match, so every question is a top-1 hit answered correctly.

``mixed``  -- same questions over an adversarial corpus:
  * questions 0-29: unchanged clean hits;
  * questions 30-39: an unlabeled near-duplicate chunk also carries the answer
    and outranks the gold chunk, so at k=1 the retriever misses the labeled
    chunk while the generator still answers correctly (annotation-gap analog);
  * questions 40-49: twelve answer-free decoy chunks outrank the gold chunk,
    so retrieval misses at every k <= 10 and the generator cannot answer.

Rankings under the mock hash embedder are exact by construction: the
vocabulary is forged so that, at ``FIXTURE_EMBED_DIM`` dimensions, every
distinct token occupies a distinct hash bucket. Cosine similarity then equals
pure token-overlap geometry (a question's gold chunk scores 4/sqrt(70), its
short twin/decoy chunks 4/(3*sqrt(5)), every unrelated chunk exactly 0), and
no hash collision can perturb the designed orderings.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

from .ioutils import write_jsonl
from .mocks import hash_bucket

QUESTION_COUNT = 50
CHUNK_COUNT = 500
CASE_A_QUESTIONS = tuple(range(30, 40))  # answer also in an unlabeled chunk
HARD_MISS_QUESTIONS = tuple(range(40, 50))  # gold chunk outranked by decoys
DECOYS_PER_MISS = 12
FILLER_POOL_SIZE = 160
FILLER_TOKENS_PER_CHUNK = 8

# The forged vocabulary is collision-free at this dimension; it matches the
# default mock embedder dimension used by the pipeline.
FIXTURE_EMBED_DIM = 1024

VARIANTS = ("clean", "mixed")


@dataclass(frozen=True)
class FixturePaths:
    root: Path
    corpus: Path
    dataset: Path


class _Vocabulary:
    """Forge token names whose hash buckets are pairwise distinct.

    Candidates extend the stem with ``x`` letters until an unused bucket is
    found; the forging order is fixed, so the vocabulary is deterministic.
    """

    def __init__(self, dim: int = FIXTURE_EMBED_DIM):
        self.dim = dim
        self._used: set[int] = set()
        self.which = self._fresh("which")
        self.code = self._fresh("code")
        self.matches = self._fresh("matches")
        self.record = self._fresh("record")
        self.entry = self._fresh("entry")
        self.alpha = [self._fresh("alpha", i) for i in range(QUESTION_COUNT)]
        self.bravo = [self._fresh("bravo", i) for i in range(QUESTION_COUNT)]
        self.omega = [self._fresh("omega", i) for i in range(QUESTION_COUNT)]
        self.ref = [self._fresh("ref", i) for i in range(3 * QUESTION_COUNT)]
        self.void = [
            self._fresh("void", i) for i in range(DECOYS_PER_MISS * len(HARD_MISS_QUESTIONS))
        ]
        self.fill = [self._fresh("fill", i) for i in range(FILLER_POOL_SIZE)]

    def _fresh(self, stem: str, number: int | None = None) -> str:
        for salt in range(64):
            name = f"{stem}{'x' * salt}" + (f"{number:03d}" if number is not None else "")
            bucket = hash_bucket(name, self.dim)
            if bucket not in self._used:
                self._used.add(bucket)
                return name
        raise RuntimeError(f"could not forge a collision-free token for stem {stem!r}")


_VOCABULARY: _Vocabulary | None = None


def _vocabulary() -> _Vocabulary:
    global _VOCABULARY
    if _VOCABULARY is None:
        _VOCABULARY = _Vocabulary()
    return _VOCABULARY


def question_text(i: int) -> str:
    v = _vocabulary()
    return f"{v.which} {v.code} {v.matches} {v.alpha[i]} {v.bravo[i]}"


def answer_token(i: int) -> str:
    return _vocabulary().omega[i]


def gold_chunk_id(i: int) -> str:
    return f"d{i:03d}#0"


def _gold_body(i: int) -> str:
    v = _vocabulary()
    keys = f"{v.alpha[i]} {v.bravo[i]} {v.alpha[i]} {v.bravo[i]}"
    refs = " ".join(v.ref[3 * i : 3 * i + 3])
    return f"{keys} {v.record} {v.entry} {v.omega[i]} {refs}"


def _twin_body(i: int) -> str:
    v = _vocabulary()
    return f"{v.alpha[i]} {v.bravo[i]} {v.alpha[i]} {v.bravo[i]} {v.omega[i]}"


def _decoy_body(i: int, void_index: int) -> str:
    v = _vocabulary()
    return f"{v.alpha[i]} {v.bravo[i]} {v.alpha[i]} {v.bravo[i]} {v.void[void_index]}"


def _corpus_records(variant: str) -> list[dict]:
    v = _vocabulary()
    records = [
        {"id": f"d{i:03d}", "title": f"Register {i:03d}", "text": _gold_body(i)}
        for i in range(QUESTION_COUNT)
    ]
    if variant == "mixed":
        for offset, i in enumerate(CASE_A_QUESTIONS):
            records.append(
                {"id": f"d{50 + offset:03d}", "title": f"Duplicate {i:03d}", "text": _twin_body(i)}
            )
        doc = 60
        void_index = 0
        for i in HARD_MISS_QUESTIONS:
            for j in range(DECOYS_PER_MISS):
                records.append(
                    {
                        "id": f"d{doc:03d}",
                        "title": f"Decoy {i:03d}-{j:02d}",
                        "text": _decoy_body(i, void_index),
                    }
                )
                doc += 1
                void_index += 1
        first_filler = doc
    else:
        first_filler = QUESTION_COUNT
    rng = random.Random(20240614)
    for n in range(first_filler, CHUNK_COUNT):
        body = " ".join(rng.sample(v.fill, FILLER_TOKENS_PER_CHUNK))
        records.append({"id": f"d{n:03d}", "title": f"Misc {n:03d}", "text": body})
    assert len(records) == CHUNK_COUNT
    return records


def _dataset_records() -> list[dict]:
    return [
        {
            "id": f"q{i:03d}",
            "question": question_text(i),
            "answers": [answer_token(i)],
            "gold_chunk_ids": [gold_chunk_id(i)],
        }
        for i in range(QUESTION_COUNT)
    ]


def write_fixture(out_dir: Path | str, variant: str) -> FixturePaths:
    """Write corpus.jsonl and dataset.jsonl for one variant under out_dir/<variant>."""
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    root = Path(out_dir) / variant
    root.mkdir(parents=True, exist_ok=True)
    corpus_path = root / "corpus.jsonl"
    dataset_path = root / "dataset.jsonl"
    write_jsonl(corpus_path, _corpus_records(variant))
    write_jsonl(dataset_path, _dataset_records())
    return FixturePaths(root=root, corpus=corpus_path, dataset=dataset_path)
