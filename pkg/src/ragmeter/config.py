"""Run configuration: JSON schema, validation, and the semantic fingerprint.

The fingerprint covers every result-determining input (config fields plus the
corpus and dataset file contents) and deliberately excludes operational knobs
(output/cache directories, concurrency, failure budget), so moving a run
directory or changing parallelism never invalidates artifacts.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

from .errors import ConfigError
from .generation import SEMI_GOLD_SAMPLES, SEMI_GOLD_TEMPERATURE
from .ioutils import sha256_bytes, sha256_file
from .judge import (
    DEFAULT_EMBEDDING_THRESHOLD,
    DEFAULT_TOKEN_OVERLAP_THRESHOLD,
    Comparator,
)

DEFAULT_K_VALUES = (1, 5, 10)


@dataclass(frozen=True)
class ChunkingConfig:
    max_tokens: int = 100
    overlap: int = 0


@dataclass(frozen=True)
class EmbedderConfig:
    provider: str = "mock"
    model: str = "hash-1024"
    dim: int = 1024
    query_prefix: str = ""
    passage_prefix: str = ""
    base_url: str = "https://api.openai.com/v1"
    api_key_env: str = "OPENAI_API_KEY"
    requests_per_minute: float = 0.0


@dataclass(frozen=True)
class GeneratorConfig:
    provider: str = "mock"
    model: str = "oracle"
    temperature: float = 0.0
    samples: int = 1
    max_answer_tokens: int = 16
    base_url: str = "https://api.openai.com/v1"
    api_key_env: str = "OPENAI_API_KEY"
    requests_per_minute: float = 0.0


@dataclass(frozen=True)
class SemiGoldConfig:
    samples: int = SEMI_GOLD_SAMPLES
    temperature: float = SEMI_GOLD_TEMPERATURE


@dataclass(frozen=True)
class JudgeConfig:
    provider: str = "mock"
    model: str = "equality"
    on_unparsed: str = "error"  # or "no": treat unparseable replies as No, flagged
    base_url: str = "https://api.openai.com/v1"
    api_key_env: str = "OPENAI_API_KEY"
    requests_per_minute: float = 0.0


@dataclass(frozen=True)
class ThresholdConfig:
    token_overlap: float = DEFAULT_TOKEN_OVERLAP_THRESHOLD
    embedding: float = DEFAULT_EMBEDDING_THRESHOLD


@dataclass(frozen=True)
class RunConfig:
    dataset_path: Path
    corpus_path: Path
    out_dir: Path
    cache_dir: Path
    k_values: tuple[int, ...] = DEFAULT_K_VALUES
    comparator: Comparator = Comparator.LLM_JUDGE
    semi_gold_judge_mode: str = "multi"
    chunking: ChunkingConfig = field(default_factory=ChunkingConfig)
    embedder: EmbedderConfig = field(default_factory=EmbedderConfig)
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    semi_gold: SemiGoldConfig = field(default_factory=SemiGoldConfig)
    judge: JudgeConfig = field(default_factory=JudgeConfig)
    thresholds: ThresholdConfig = field(default_factory=ThresholdConfig)
    concurrency: int = 4
    mock: bool = False
    failure_budget: int = 0
    trec_run: bool = False
    report_csv: bool = False

    def validate(self) -> None:
        if not self.k_values:
            raise ConfigError("k_values must be non-empty")
        if any(k < 1 for k in self.k_values):
            raise ConfigError("k_values must be positive")
        if len(set(self.k_values)) != len(self.k_values):
            raise ConfigError("k_values must be distinct")
        if self.semi_gold_judge_mode not in ("multi", "per_reference"):
            raise ConfigError("semi_gold_judge_mode must be 'multi' or 'per_reference'")
        if self.chunking.overlap < 0 or self.chunking.overlap >= self.chunking.max_tokens:
            raise ConfigError("chunking overlap must satisfy 0 <= overlap < max_tokens")
        if self.generator.samples < 1 or self.semi_gold.samples < 1:
            raise ConfigError("generator samples must be >= 1")
        if not 0 < self.thresholds.token_overlap <= 1:
            raise ConfigError("token_overlap threshold must be in (0, 1]")
        if not -1 < self.thresholds.embedding <= 1:
            raise ConfigError("embedding threshold must be in (-1, 1]")
        if self.concurrency < 1:
            raise ConfigError("concurrency must be >= 1")
        if self.failure_budget < 0:
            raise ConfigError("failure_budget must be >= 0")
        if self.judge.on_unparsed not in ("error", "no"):
            raise ConfigError("judge.on_unparsed must be 'error' or 'no'")


_SECTION_TYPES = {
    "chunking": ChunkingConfig,
    "embedder": EmbedderConfig,
    "generator": GeneratorConfig,
    "semi_gold": SemiGoldConfig,
    "judge": JudgeConfig,
    "thresholds": ThresholdConfig,
}

_TOP_LEVEL_KEYS = {
    "dataset",
    "corpus",
    "out_dir",
    "cache_dir",
    "k_values",
    "comparator",
    "semi_gold_judge_mode",
    "concurrency",
    "mock",
    "failure_budget",
    "trec_run",
    "report_csv",
    *_SECTION_TYPES,
}


def _build_section(name: str, raw: Mapping[str, Any]):
    cls = _SECTION_TYPES[name]
    known = {f for f in cls.__dataclass_fields__}  # type: ignore[attr-defined]
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in config section {name!r}: {sorted(unknown)}")
    try:
        return cls(**raw)
    except TypeError as exc:
        raise ConfigError(f"invalid config section {name!r}: {exc}") from exc


def load_config(path: Path | str, **overrides: Any) -> RunConfig:
    """Load a JSON config file; keyword overrides win over file values.

    Relative paths in the file resolve against the file's directory.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {path}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = set(raw) - _TOP_LEVEL_KEYS
    if unknown:
        raise ConfigError(f"unknown config key(s): {sorted(unknown)}")

    base = path.parent

    def _path(key: str) -> Path:
        value = raw.get(key)
        if not isinstance(value, str) or not value:
            raise ConfigError(f"config key {key!r} is required and must be a path string")
        candidate = Path(value)
        return candidate if candidate.is_absolute() else (base / candidate)

    sections = {
        name: _build_section(name, raw.get(name, {})) for name in _SECTION_TYPES
    }
    try:
        comparator = Comparator(raw.get("comparator", Comparator.LLM_JUDGE.value))
    except ValueError as exc:
        raise ConfigError(
            f"unknown comparator {raw.get('comparator')!r}; "
            f"choose from {[c.value for c in Comparator]}"
        ) from exc

    config = RunConfig(
        dataset_path=_path("dataset"),
        corpus_path=_path("corpus"),
        out_dir=Path(raw["out_dir"]) if "out_dir" in raw else base / "out",
        cache_dir=Path(raw["cache_dir"]) if "cache_dir" in raw else base / ".ragmeter-cache",
        k_values=tuple(raw.get("k_values", DEFAULT_K_VALUES)),
        comparator=comparator,
        semi_gold_judge_mode=raw.get("semi_gold_judge_mode", "multi"),
        chunking=sections["chunking"],
        embedder=sections["embedder"],
        generator=sections["generator"],
        semi_gold=sections["semi_gold"],
        judge=sections["judge"],
        thresholds=sections["thresholds"],
        concurrency=int(raw.get("concurrency", 4)),
        mock=bool(raw.get("mock", False)),
        failure_budget=int(raw.get("failure_budget", 0)),
        trec_run=bool(raw.get("trec_run", False)),
        report_csv=bool(raw.get("report_csv", False)),
    )
    config = apply_overrides(config, overrides)
    config.validate()
    return config


def apply_overrides(config: RunConfig, overrides: Mapping[str, Any]) -> RunConfig:
    updates: dict[str, Any] = {}
    for key, value in overrides.items():
        if value is None:
            continue
        if key == "k_values":
            updates["k_values"] = tuple(value)
        elif key == "comparator":
            updates["comparator"] = Comparator(value) if not isinstance(value, Comparator) else value
        elif key in ("out_dir", "cache_dir"):
            updates[key] = Path(value)
        elif key in ("mock", "trec_run", "report_csv"):
            updates[key] = bool(value)
        else:
            raise ConfigError(f"unknown config override {key!r}")
    return replace(config, **updates) if updates else config


# Operational knobs that never change artifact content.
_NON_SEMANTIC_FIELDS = {"out_dir", "cache_dir", "concurrency", "failure_budget"}


def config_fingerprint(config: RunConfig) -> str:
    """Hash of all result-determining inputs, including input file contents."""
    payload = asdict(config)
    for excluded in _NON_SEMANTIC_FIELDS:
        payload.pop(excluded)
    try:
        payload["dataset_path"] = sha256_file(config.dataset_path)
        payload["corpus_path"] = sha256_file(config.corpus_path)
    except FileNotFoundError as exc:
        raise ConfigError(f"input file not found: {exc.filename}") from exc
    payload["comparator"] = config.comparator.value
    canonical = json.dumps(payload, sort_keys=True, default=str)
    return sha256_bytes(canonical.encode("utf-8"))
