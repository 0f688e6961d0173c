"""Sidecar configuration."""

from __future__ import annotations

from dataclasses import dataclass

DEFAULT_MODEL = "mixedbread-ai/mxbai-embed-large-v1"

POOLING_MODES = ("native", "mean-nonstop")


@dataclass
class SidecarConfig:
    """Service settings.

    ``pooling`` selects between the model's native sentence vector and mean
    pooling over non-stopword tokens (closer to how the scores were
    originally pooled; both are exposed so reproduction runs can report
    which matches published numbers better).
    """

    model_id: str = DEFAULT_MODEL
    host: str = "127.0.0.1"
    port: int = 8494
    batch_limit: int = 256
    max_text_chars: int = 4000
    pooling: str = "native"

    def __post_init__(self) -> None:
        if self.batch_limit < 1:
            raise ValueError("batch_limit must be >= 1")
        if self.pooling not in POOLING_MODES:
            raise ValueError(f"pooling must be one of {POOLING_MODES}")
