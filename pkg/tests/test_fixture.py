"""The bundled fixture files must match regeneration and honor their designed rankings."""

import json

from ragmeter.corpus import chunk_corpus, ingest_corpus, load_dataset
from ragmeter.fixture import (
    CASE_A_QUESTIONS,
    CHUNK_COUNT,
    DECOYS_PER_MISS,
    HARD_MISS_QUESTIONS,
    QUESTION_COUNT,
    answer_token,
    gold_chunk_id,
    write_fixture,
)
from ragmeter.mocks import HashEmbedder
from ragmeter.retriever import VectorIndex, retrieve


def test_committed_fixture_matches_regeneration(tmp_path, bundled_fixtures):
    for variant in ("clean", "mixed"):
        regenerated = write_fixture(tmp_path, variant)
        for name in ("corpus.jsonl", "dataset.jsonl"):
            committed = (bundled_fixtures / variant / name).read_bytes()
            fresh = (regenerated.root / name).read_bytes()
            assert committed == fresh, f"{variant}/{name} is out of sync; regenerate with `ragmeter fixture`"


def test_fixture_counts(bundled_fixtures):
    for variant in ("clean", "mixed"):
        docs = ingest_corpus(bundled_fixtures / variant / "corpus.jsonl")
        questions = load_dataset(bundled_fixtures / variant / "dataset.jsonl")
        assert len(docs) == CHUNK_COUNT
        assert len(questions) == QUESTION_COUNT
        chunks = chunk_corpus(docs)
        assert len(chunks) == CHUNK_COUNT  # every doc fits one window


def test_gold_chunks_always_carry_their_answer(bundled_fixtures):
    for variant in ("clean", "mixed"):
        docs = {d.doc_id: d for d in ingest_corpus(bundled_fixtures / variant / "corpus.jsonl")}
        for i in range(QUESTION_COUNT):
            gold_doc = docs[gold_chunk_id(i).split("#")[0]]
            assert answer_token(i) in gold_doc.body


def test_mixed_corpus_answer_placement(bundled_fixtures):
    corpus_text = (bundled_fixtures / "mixed" / "corpus.jsonl").read_text()
    records = [json.loads(line) for line in corpus_text.splitlines()]
    by_id = {record["id"]: record["text"] for record in records}
    for i in HARD_MISS_QUESTIONS:
        carriers = [doc_id for doc_id, text in by_id.items() if answer_token(i) in text]
        assert carriers == [f"d{i:03d}"], "hard-miss answers must live only in the gold chunk"
    for i in CASE_A_QUESTIONS:
        carriers = {doc_id for doc_id, text in by_id.items() if answer_token(i) in text}
        assert len(carriers) == 2, "case-A answers appear in the gold chunk and one unlabeled twin"


def _ranked_ids(bundled_fixtures, variant):
    docs = ingest_corpus(bundled_fixtures / variant / "corpus.jsonl")
    questions = load_dataset(bundled_fixtures / variant / "dataset.jsonl")
    chunks = chunk_corpus(docs)
    embedder = HashEmbedder(dim=1024)
    index = VectorIndex.build(chunks, embedder)
    return {
        question.question_id: retrieve(index, embedder, question, 13).chunk_ids()
        for question in questions
    }, questions


def test_clean_fixture_ranks_every_gold_chunk_first(bundled_fixtures):
    ranked, questions = _ranked_ids(bundled_fixtures, "clean")
    for question in questions:
        assert ranked[question.question_id][0] == question.gold_chunk_ids[0]


def test_mixed_fixture_designed_rankings(bundled_fixtures):
    ranked, questions = _ranked_ids(bundled_fixtures, "mixed")
    for question in questions:
        ids = ranked[question.question_id]
        number = int(question.question_id[1:])
        gold = question.gold_chunk_ids[0]
        if number in CASE_A_QUESTIONS:
            assert ids[0] != gold, "twin must outrank the gold chunk at k=1"
            assert ids[1] == gold, "gold chunk must re-enter at rank 2"
        elif number in HARD_MISS_QUESTIONS:
            assert gold not in ids[:10], "decoys must bury the gold chunk below rank 10"
            assert gold in ids[:13]
            assert len(set(ids[:DECOYS_PER_MISS]) & {gold}) == 0
        else:
            assert ids[0] == gold
