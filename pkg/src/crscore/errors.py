"""Exception hierarchy shared across the package.

The CLI maps these onto its exit-code contract: configuration/usage
problems exit 1, data errors exit 2, external-service failures exit 3.
"""

from __future__ import annotations


class CrscoreError(Exception):
    """Base class for all package errors."""


class ConfigError(CrscoreError):
    """Bad configuration or CLI usage (exit code 1)."""


class DataError(CrscoreError):
    """Malformed, inconsistent, or misaligned input data (exit code 2)."""


class DiffParseError(DataError):
    """Unified diff text that does not parse or fails count validation."""


class PatchApplyError(DataError):
    """Hunk context does not match the file it is applied to."""


class CannotMaterializeError(DataError):
    """Before/after file snapshots cannot be reconstructed for a change."""


class UnparseableClaimsError(DataError):
    """LLM output from which no claim items could be extracted."""


class ExternalServiceError(CrscoreError):
    """Remote endpoint or external tool failure (exit code 3)."""


class TransportError(ExternalServiceError):
    """HTTP transport failure that persisted through all retries."""


class AnalyzerUnavailableError(ExternalServiceError):
    """Static-analysis tool binary not found on this system."""


class AnalyzerTimeoutError(ExternalServiceError):
    """Static-analysis tool exceeded its configured timeout."""


class AnalyzerError(ExternalServiceError):
    """Static-analysis tool failed without producing parseable findings."""
