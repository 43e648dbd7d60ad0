"""Resumable staged evaluation pipeline: index -> retrieve -> generate -> semigold -> judge -> report.

Every stage persists JSONL artifacts between steps so each downstream
analysis is replayable without regenerating model output. A run manifest
records the config fingerprint and the content hash of every artifact; a
stage may only read upstream artifacts whose hashes still match, re-running a
completed stage with unchanged inputs is a no-op, and all writes are atomic
(temp file + rename), so a killed run never leaves a partial artifact
registered.

Provider calls go through content-addressed disk caches, so warm re-runs
perform zero provider invocations; per-stage provider call counts are
recorded in the manifest stats.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Sequence

from . import __version__
from .analysis import QuestionEvalRecord, build_report, report_csv_rows, semi_gold_verdict
from .cache import CachedCompleter, CachedEmbedder, CompletionCache, EmbeddingCache
from .config import RunConfig, config_fingerprint
from .corpus import (
    Chunk,
    Question,
    chunk_corpus,
    chunks_by_id,
    ingest_corpus,
    load_dataset,
    require_gold_chunks,
)
from .errors import (
    FailureBudgetExceededError,
    IntegrityError,
    ProviderError,
    StageDependencyError,
    StaleArtifactError,
)
from .generation import (
    AnswerSource,
    GeneratedAnswer,
    GeneratorProfile,
    generate_answers,
    generate_semi_gold,
)
from .ioutils import atomic_write_text, iter_jsonl, sha256_file, write_jsonl
from .judge import AnswerComparator, Verdict, make_comparator
from .metrics import mrr, ndcg_at_k, rank_agnostic_at_k
from .mocks import EqualityJudge, HashEmbedder, OracleGenerator
from .providers import BaseCompleter, BaseEmbedder, EmbedKind, OpenAIChatCompleter, OpenAIEmbedder
from .retriever import RetrievalResult, ScoredChunk, VectorIndex, retrieve, write_trec_run

logger = logging.getLogger(__name__)

STAGES = ("index", "retrieve", "generate", "semigold", "judge", "report")

STAGE_DEPS: dict[str, tuple[str, ...]] = {
    "index": (),
    "retrieve": ("index",),
    "generate": ("index", "retrieve"),
    "semigold": ("index",),
    "judge": ("generate", "semigold"),
    "report": ("retrieve", "judge"),
}

MANIFEST_NAME = "manifest.json"


class RunManifest:
    """Stage completion markers plus artifact content hashes for one run directory."""

    def __init__(self, path: Path, config_hash: str, tool_version: str = __version__):
        self.path = path
        self.config_hash = config_hash
        self.tool_version = tool_version
        self.stages: dict[str, dict] = {}

    @classmethod
    def load(cls, path: Path) -> "RunManifest | None":
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            return None
        manifest = cls(path, raw["config_hash"], raw.get("tool_version", "unknown"))
        manifest.stages = raw.get("stages", {})
        return manifest

    def save(self) -> None:
        payload = {
            "config_hash": self.config_hash,
            "tool_version": self.tool_version,
            "stages": self.stages,
        }
        atomic_write_text(self.path, json.dumps(payload, indent=2, sort_keys=True) + "\n")

    def record_stage(self, name: str, artifacts: dict[str, str], stats: dict) -> None:
        self.stages[name] = {"artifacts": artifacts, "stats": stats}
        self.save()


class PipelineRun:
    """Builds providers once per run and executes stages against one output directory."""

    def __init__(self, config: RunConfig):
        config.validate()
        self.config = config
        self.out_dir = Path(config.out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.config_hash = config_fingerprint(config)
        self._questions: list[Question] | None = None
        self._embedder: CachedEmbedder | None = None
        self._generator: CachedCompleter | None = None
        self._judge: CachedCompleter | None = None

    # ---------------------------------------------------------------- setup

    @property
    def questions(self) -> list[Question]:
        if self._questions is None:
            self._questions = load_dataset(self.config.dataset_path)
        return self._questions

    def _build_embedder(self) -> BaseEmbedder:
        cfg = self.config.embedder
        if self.config.mock or cfg.provider == "mock":
            return HashEmbedder(
                dim=cfg.dim, query_prefix=cfg.query_prefix, passage_prefix=cfg.passage_prefix
            )
        if cfg.provider == "openai":
            return OpenAIEmbedder(
                cfg.model,
                base_url=cfg.base_url,
                api_key_env=cfg.api_key_env,
                query_prefix=cfg.query_prefix,
                passage_prefix=cfg.passage_prefix,
                requests_per_minute=cfg.requests_per_minute,
            )
        raise IntegrityError(f"unknown embedder provider {cfg.provider!r}")

    def _build_generator(self) -> BaseCompleter:
        cfg = self.config.generator
        if self.config.mock or cfg.provider == "mock":
            return OracleGenerator({q.text: list(q.gold_answers) for q in self.questions})
        if cfg.provider == "openai":
            return OpenAIChatCompleter(
                cfg.model,
                base_url=cfg.base_url,
                api_key_env=cfg.api_key_env,
                requests_per_minute=cfg.requests_per_minute,
            )
        raise IntegrityError(f"unknown generator provider {cfg.provider!r}")

    def _build_judge(self) -> BaseCompleter:
        cfg = self.config.judge
        if self.config.mock or cfg.provider == "mock":
            return EqualityJudge()
        if cfg.provider == "openai":
            return OpenAIChatCompleter(
                cfg.model,
                base_url=cfg.base_url,
                api_key_env=cfg.api_key_env,
                requests_per_minute=cfg.requests_per_minute,
            )
        raise IntegrityError(f"unknown judge provider {cfg.provider!r}")

    @property
    def embedder(self) -> CachedEmbedder:
        if self._embedder is None:
            self._embedder = CachedEmbedder(self._build_embedder(), EmbeddingCache(self.config.cache_dir))
        return self._embedder

    @property
    def generator(self) -> CachedCompleter:
        if self._generator is None:
            self._generator = CachedCompleter(self._build_generator(), CompletionCache(self.config.cache_dir))
        return self._generator

    @property
    def judge_provider(self) -> CachedCompleter:
        if self._judge is None:
            self._judge = CachedCompleter(self._build_judge(), CompletionCache(self.config.cache_dir))
        return self._judge

    def provider_calls(self) -> int:
        total = 0
        for wrapper in (self._embedder, self._generator, self._judge):
            if wrapper is not None:
                total += wrapper.provider_calls
        return total

    def _cache_hits(self) -> int:
        total = 0
        for wrapper in (self._embedder, self._generator, self._judge):
            if wrapper is not None:
                total += wrapper.cache_hits
        return total

    def _rag_profile(self) -> GeneratorProfile:
        cfg = self.config.generator
        return GeneratorProfile(
            provider_id=self.generator.provider_id,
            model_id=self.generator.model_id,
            temperature=cfg.temperature,
            samples=cfg.samples,
            max_answer_tokens=cfg.max_answer_tokens,
        )

    def _semi_gold_profile(self) -> GeneratorProfile:
        cfg = self.config.semi_gold
        return GeneratorProfile(
            provider_id=self.generator.provider_id,
            model_id=self.generator.model_id,
            temperature=cfg.temperature,
            samples=cfg.samples,
            max_answer_tokens=self.config.generator.max_answer_tokens,
        )

    def _comparator(self) -> AnswerComparator:
        return make_comparator(
            self.config.comparator,
            judge_provider=self.judge_provider,
            embedder=self.embedder,
            token_overlap_threshold=self.config.thresholds.token_overlap,
            embedding_threshold=self.config.thresholds.embedding,
            on_unparsed=self.config.judge.on_unparsed,
        )

    # ------------------------------------------------------------- manifest

    def _manifest(self) -> RunManifest:
        existing = RunManifest.load(self.out_dir / MANIFEST_NAME)
        if existing is None:
            return RunManifest(self.out_dir / MANIFEST_NAME, self.config_hash)
        if existing.config_hash != self.config_hash:
            raise StaleArtifactError(
                "run directory was produced under a different configuration or inputs; "
                f"use a fresh --out directory or delete {self.out_dir}"
            )
        return existing

    def _stage_intact(self, manifest: RunManifest, name: str) -> bool:
        entry = manifest.stages.get(name)
        if entry is None:
            return False
        for relpath, digest in entry["artifacts"].items():
            path = self.out_dir / relpath
            if not path.exists() or sha256_file(path) != digest:
                return False
        return True

    def _require_deps(self, manifest: RunManifest, name: str) -> None:
        for dep in STAGE_DEPS[name]:
            entry = manifest.stages.get(dep)
            if entry is None:
                raise StageDependencyError(
                    f"stage {name!r} requires stage {dep!r} to run first"
                )
            for relpath, digest in entry["artifacts"].items():
                path = self.out_dir / relpath
                if not path.exists():
                    raise StageDependencyError(
                        f"stage {name!r} is missing upstream artifact {relpath!r} from stage {dep!r}"
                    )
                if sha256_file(path) != digest:
                    raise StaleArtifactError(
                        f"artifact {relpath!r} no longer matches the manifest entry from stage {dep!r}"
                    )

    # ---------------------------------------------------------------- stages

    def run_stage(self, name: str) -> list[Path]:
        """Run one stage (no-op if already complete with intact artifacts)."""
        if name not in STAGES:
            raise ValueError(f"unknown stage {name!r}; stages are {STAGES}")
        manifest = self._manifest()
        self._require_deps(manifest, name)
        if self._stage_intact(manifest, name):
            logger.info("stage %s is up to date, skipping", name)
            return [self.out_dir / rel for rel in manifest.stages[name]["artifacts"]]
        calls_before = self.provider_calls()
        hits_before = self._cache_hits()
        logger.info("running stage %s", name)
        artifacts: list[Path] = getattr(self, f"_stage_{name}")()
        stats = {
            "provider_calls": self.provider_calls() - calls_before,
            "cache_hits": self._cache_hits() - hits_before,
        }
        hashes = {str(path.relative_to(self.out_dir)): sha256_file(path) for path in artifacts}
        manifest.record_stage(name, hashes, stats)
        logger.info("stage %s complete: %s", name, stats)
        return artifacts

    def run_all(self) -> Path:
        """Run every stage in order; returns the report path."""
        for name in STAGES:
            self.run_stage(name)
        return self.out_dir / "report.json"

    # -- index

    def _stage_index(self) -> list[Path]:
        documents = ingest_corpus(self.config.corpus_path)
        chunks = chunk_corpus(
            documents,
            max_tokens=self.config.chunking.max_tokens,
            overlap=self.config.chunking.overlap,
        )
        chunk_index = chunks_by_id(chunks)
        require_gold_chunks(self.questions, chunk_index)
        chunks_path = self.out_dir / "chunks.jsonl"
        write_jsonl(
            chunks_path,
            (
                {
                    "chunk_id": c.chunk_id,
                    "doc_id": c.doc_id,
                    "title": c.title,
                    "text": c.text,
                    "token_count": c.token_count,
                }
                for c in chunks
            ),
        )
        index = VectorIndex.build(chunks, self.embedder)
        index_path = self.out_dir / "index.bin"
        index.save(index_path)
        return [chunks_path, index_path]

    def _load_chunks(self) -> dict[str, Chunk]:
        chunks = [
            Chunk(
                chunk_id=record["chunk_id"],
                doc_id=record["doc_id"],
                title=record["title"],
                text=record["text"],
                token_count=int(record["token_count"]),
            )
            for _, record in iter_jsonl(self.out_dir / "chunks.jsonl")
        ]
        return chunks_by_id(chunks)

    # -- retrieve

    def _stage_retrieve(self) -> list[Path]:
        index = VectorIndex.load(self.out_dir / "index.bin")
        max_k = max(self.config.k_values)
        # One batched embedding call warms the cache; per-question retrieval then hits it.
        self.embedder.embed_texts([q.text for q in self.questions], EmbedKind.QUERY)
        results = [retrieve(index, self.embedder, question, max_k) for question in self.questions]
        results.sort(key=lambda result: result.question_id)
        retrieval_path = self.out_dir / "retrieval.jsonl"
        write_jsonl(
            retrieval_path,
            (
                {
                    "question_id": result.question_id,
                    "k": result.k,
                    "ranked": [
                        {"chunk_id": s.chunk_id, "score": s.score, "rank": s.rank}
                        for s in result.ranked
                    ],
                }
                for result in results
            ),
        )
        artifacts = [retrieval_path]
        if self.config.trec_run:
            trec_path = self.out_dir / "run.trec"
            write_trec_run(trec_path, results)
            artifacts.append(trec_path)
        return artifacts

    def _load_retrieval(self) -> dict[str, RetrievalResult]:
        results: dict[str, RetrievalResult] = {}
        for _, record in iter_jsonl(self.out_dir / "retrieval.jsonl"):
            ranked = tuple(
                ScoredChunk(chunk_id=r["chunk_id"], score=float(r["score"]), rank=int(r["rank"]))
                for r in record["ranked"]
            )
            results[record["question_id"]] = RetrievalResult(
                question_id=record["question_id"], k=int(record["k"]), ranked=ranked
            )
        return results

    def _parallel(self, fn, items: Sequence) -> list:
        if self.config.concurrency == 1 or len(items) <= 1:
            return [fn(item) for item in items]
        with ThreadPoolExecutor(max_workers=self.config.concurrency) as pool:
            return list(pool.map(fn, items))

    def _check_budget(self, errors: list[dict], stage: str) -> None:
        if len(errors) > self.config.failure_budget:
            raise FailureBudgetExceededError(
                f"stage {stage!r}: {len(errors)} item failure(s) exceed the budget "
                f"of {self.config.failure_budget}; see {stage}_errors.jsonl"
            )

    # -- generate

    def _stage_generate(self) -> list[Path]:
        chunk_index = self._load_chunks()
        retrieval = self._load_retrieval()
        profile = self._rag_profile()
        artifacts: list[Path] = []
        errors: list[dict] = []

        for k in sorted(self.config.k_values):

            def generate_one(question: Question, k: int = k) -> list[GeneratedAnswer] | dict:
                result = retrieval.get(question.question_id)
                if result is None:
                    raise IntegrityError(f"no retrieval result for question {question.question_id!r}")
                top_ids = result.chunk_ids()[:k]
                try:
                    top_chunks = [chunk_index[cid] for cid in top_ids]
                except KeyError as exc:
                    raise IntegrityError(f"retrieved chunk id {exc} is not in chunks.jsonl") from exc
                try:
                    return generate_answers(
                        self.generator, profile, question, top_chunks, AnswerSource.RETRIEVED
                    )
                except ProviderError as exc:
                    logger.error("generation failed for %s at k=%d: %s", question.question_id, k, exc)
                    return {"question_id": question.question_id, "k": k, "error": str(exc)}

            outcomes = self._parallel(generate_one, self.questions)
            answers: list[GeneratedAnswer] = []
            for outcome in outcomes:
                if isinstance(outcome, dict):
                    errors.append(outcome)
                else:
                    answers.extend(outcome)
            answers.sort(key=lambda a: (a.question_id, a.sample_index))
            path = self.out_dir / f"answers_retrieved_k{k}.jsonl"
            write_jsonl(path, (answer.to_record() for answer in answers))
            artifacts.append(path)

        if errors:
            errors_path = self.out_dir / "generate_errors.jsonl"
            write_jsonl(errors_path, sorted(errors, key=lambda e: (e["question_id"], e["k"])))
            artifacts.append(errors_path)
        self._check_budget(errors, "generate")
        return artifacts

    # -- semigold

    def _stage_semigold(self) -> list[Path]:
        chunk_index = self._load_chunks()
        profile = self._semi_gold_profile()
        errors: list[dict] = []

        def semi_gold_one(question: Question) -> list[GeneratedAnswer] | dict:
            try:
                return generate_semi_gold(self.generator, profile, question, chunk_index)
            except ProviderError as exc:
                logger.error("semi-gold generation failed for %s: %s", question.question_id, exc)
                return {"question_id": question.question_id, "error": str(exc)}

        outcomes = self._parallel(semi_gold_one, self.questions)
        answers: list[GeneratedAnswer] = []
        for outcome in outcomes:
            if isinstance(outcome, dict):
                errors.append(outcome)
            else:
                answers.extend(outcome)
        answers.sort(key=lambda a: (a.question_id, a.sample_index))
        path = self.out_dir / "answers_gold.jsonl"
        write_jsonl(path, (answer.to_record() for answer in answers))
        artifacts = [path]
        if errors:
            errors_path = self.out_dir / "semigold_errors.jsonl"
            write_jsonl(errors_path, sorted(errors, key=lambda e: e["question_id"]))
            artifacts.append(errors_path)
        self._check_budget(errors, "semigold")
        return artifacts

    def _load_answers(self, path: Path) -> dict[str, list[GeneratedAnswer]]:
        grouped: dict[str, list[GeneratedAnswer]] = {}
        for _, record in iter_jsonl(path):
            answer = GeneratedAnswer.from_record(record)
            grouped.setdefault(answer.question_id, []).append(answer)
        for answers in grouped.values():
            answers.sort(key=lambda a: a.sample_index)
        return grouped

    # -- judge

    def _stage_judge(self) -> list[Path]:
        comparator = self._comparator()
        semi_gold_answers = self._load_answers(self.out_dir / "answers_gold.jsonl")
        questions_by_id = {q.question_id: q for q in self.questions}
        artifacts: list[Path] = []
        errors: list[dict] = []

        for k in sorted(self.config.k_values):
            rag_answers = self._load_answers(self.out_dir / f"answers_retrieved_k{k}.jsonl")

            def judge_one(question_id: str, k: int = k) -> tuple[Verdict, Verdict] | dict:
                question = questions_by_id[question_id]
                rag_answer = rag_answers[question_id][0]  # sample 0 is the system answer under test
                references = semi_gold_answers[question_id]
                if not question.gold_answers:
                    raise IntegrityError(
                        f"question {question_id!r} has no gold answers; "
                        "end-to-end evaluation requires them"
                    )
                try:
                    semi = semi_gold_verdict(
                        comparator,
                        question_id,
                        question.text,
                        rag_answer,
                        references,
                        mode=self.config.semi_gold_judge_mode,
                    )
                    end_to_end = comparator.decide(
                        question_id, question.text, list(question.gold_answers), rag_answer.text
                    )
                    return semi, end_to_end
                except ProviderError as exc:
                    logger.error("judging failed for %s at k=%d: %s", question_id, k, exc)
                    return {"question_id": question_id, "k": k, "error": str(exc)}

            judgeable = sorted(set(rag_answers) & set(semi_gold_answers))
            outcomes = self._parallel(judge_one, judgeable)
            semi_verdicts: list[Verdict] = []
            e2e_verdicts: list[Verdict] = []
            for outcome in outcomes:
                if isinstance(outcome, dict):
                    errors.append(outcome)
                else:
                    semi_verdicts.append(outcome[0])
                    e2e_verdicts.append(outcome[1])
            semi_path = self.out_dir / f"verdicts_semi_gold_k{k}.jsonl"
            e2e_path = self.out_dir / f"verdicts_end_to_end_k{k}.jsonl"
            write_jsonl(semi_path, (v.to_record() for v in sorted(semi_verdicts, key=lambda v: v.question_id)))
            write_jsonl(e2e_path, (v.to_record() for v in sorted(e2e_verdicts, key=lambda v: v.question_id)))
            artifacts.extend([semi_path, e2e_path])

        if errors:
            errors_path = self.out_dir / "judge_errors.jsonl"
            write_jsonl(errors_path, sorted(errors, key=lambda e: (e["question_id"], e["k"])))
            artifacts.append(errors_path)
        self._check_budget(errors, "judge")
        return artifacts

    # -- report

    def _stage_report(self) -> list[Path]:
        retrieval = self._load_retrieval()
        questions_by_id = {q.question_id: q for q in self.questions}
        k_values = sorted(self.config.k_values)

        verdicts: dict[int, dict[str, tuple[bool, bool]]] = {}
        for k in k_values:
            semi = {
                record["question_id"]: bool(record["decision"])
                for _, record in iter_jsonl(self.out_dir / f"verdicts_semi_gold_k{k}.jsonl")
            }
            e2e = {
                record["question_id"]: bool(record["decision"])
                for _, record in iter_jsonl(self.out_dir / f"verdicts_end_to_end_k{k}.jsonl")
            }
            verdicts[k] = {
                qid: (semi[qid], e2e[qid]) for qid in semi.keys() & e2e.keys()
            }

        included = set(questions_by_id)
        for k in k_values:
            included &= set(verdicts[k])
        skipped = sorted(set(questions_by_id) - included)
        if skipped:
            logger.warning("%d question(s) lack verdicts at some k and are skipped", len(skipped))

        records: list[QuestionEvalRecord] = []
        rank_aware: dict[int, dict[str, float]] = {}
        for k in k_values:
            per_query: list[tuple[list[str], set[str]]] = []
            for question_id in sorted(included):
                question = questions_by_id[question_id]
                result = retrieval.get(question_id)
                if result is None:
                    raise IntegrityError(f"no retrieval result for question {question_id!r}")
                top_ids = result.chunk_ids()[:k]
                gold = set(question.gold_chunk_ids)
                scores = rank_agnostic_at_k(top_ids, gold, k)
                semi_match, e2e_match = verdicts[k][question_id]
                records.append(
                    QuestionEvalRecord.build(
                        question_id=question_id,
                        k=k,
                        recall_hit=bool(gold & set(top_ids)),
                        scores=scores,
                        semi_gold_match=semi_match,
                        end_to_end_match=e2e_match,
                    )
                )
                per_query.append((top_ids, gold))
            if per_query:
                rank_aware[k] = {
                    "mrr": mrr(per_query),
                    "mean_ndcg": sum(ndcg_at_k(ids, gold, k) for ids, gold in per_query)
                    / len(per_query),
                }

        report = build_report(records, k_values, skipped_questions=skipped)
        payload = report.to_dict()
        for k, block in rank_aware.items():
            payload["per_k"][str(k)]["rank_aware"] = block

        records_path = self.out_dir / "records.jsonl"
        write_jsonl(records_path, (record.to_record() for record in records))
        report_path = self.out_dir / "report.json"
        atomic_write_text(report_path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
        artifacts = [records_path, report_path]
        if self.config.report_csv:
            buffer = io.StringIO()
            csv.writer(buffer).writerows(report_csv_rows(report))
            csv_path = self.out_dir / "report.csv"
            atomic_write_text(csv_path, buffer.getvalue())
            artifacts.append(csv_path)
        return artifacts
