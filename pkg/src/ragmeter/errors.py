"""Exception hierarchy and process exit codes.

Exit code contract: 0 success, 1 usage/config error, 2 data integrity
error, 3 provider failure (budget exceeded or unrecoverable transport).
"""

from __future__ import annotations

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_PROVIDER = 3


class RagmeterError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = EXIT_USAGE


class ConfigError(RagmeterError):
    """Invalid run configuration or CLI usage."""

    exit_code = EXIT_USAGE


class ParseError(RagmeterError):
    """A data file could not be parsed; carries the offending location."""

    exit_code = EXIT_DATA

    def __init__(self, message: str, *, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f" [{path}" + (f":{line}" if line is not None else "") + "]"
        super().__init__(message + where)


class IntegrityError(RagmeterError):
    """Data violates an invariant (duplicate ids, dangling references, bad index file)."""

    exit_code = EXIT_DATA


class StaleArtifactError(RagmeterError):
    """An on-disk artifact no longer matches the manifest that produced it."""

    exit_code = EXIT_DATA


class StageDependencyError(RagmeterError):
    """A pipeline stage was requested before its upstream stages completed."""

    exit_code = EXIT_USAGE


class ProviderError(RagmeterError):
    """A model provider failed in a non-retryable way."""

    exit_code = EXIT_PROVIDER


class ProviderTransportError(ProviderError):
    """A retryable transport-level provider failure (timeout, 5xx, rate limit)."""


class JudgeParseError(ProviderError):
    """The judge provider replied with something other than a leading Yes/No."""


class FailureBudgetExceededError(ProviderError):
    """More per-item provider failures than the configured budget allows."""
