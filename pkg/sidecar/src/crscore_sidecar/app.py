"""FastAPI application implementing the shared embed wire protocol."""

from __future__ import annotations

import logging
import threading

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .backends import make_backend
from .config import SidecarConfig

logger = logging.getLogger(__name__)


class EmbedRequest(BaseModel):
    texts: list[str] = Field(min_length=1)

    model_config = {"extra": "forbid"}


def create_app(config: SidecarConfig | None = None, backend=None) -> FastAPI:
    """Build the service; a pre-built backend may be injected for tests."""
    cfg = config or SidecarConfig()
    app = FastAPI(title="embedding sidecar")
    state = {"backend": backend, "error": None, "dim": None}
    lock = threading.Lock()

    if state["backend"] is None:
        try:
            state["backend"] = make_backend(cfg.model_id, cfg.pooling)
        except Exception as exc:  # degraded, reported via /health
            logger.warning("model %s failed to load: %s", cfg.model_id, exc)
            state["error"] = str(exc)

    @app.get("/health")
    def health():
        backend = state["backend"]
        if backend is None:
            return {"status": "degraded", "model": cfg.model_id, "dim": None}
        dim = state["dim"] or getattr(backend, "dim", None)
        return {"status": "ok", "model": backend.name, "dim": dim}

    @app.post("/embed")
    def embed(request: EmbedRequest):
        backend = state["backend"]
        if backend is None:
            raise HTTPException(status_code=503,
                                detail=f"model unavailable: {state['error']}")
        if len(request.texts) > cfg.batch_limit:
            raise HTTPException(
                status_code=413,
                detail=f"batch of {len(request.texts)} exceeds limit {cfg.batch_limit}",
            )
        warnings = []
        texts = []
        for i, text in enumerate(request.texts):
            if len(text) > cfg.max_text_chars:
                warnings.append(
                    f"text {i} truncated from {len(text)} to {cfg.max_text_chars} chars"
                )
                text = text[: cfg.max_text_chars]
            texts.append(text)
        with lock:  # serialize inference; deterministic and memory-bounded
            vectors = np.asarray(backend.encode(texts), dtype=np.float64)
        norms = np.linalg.norm(vectors, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        vectors = vectors / norms
        dim = int(vectors.shape[1])
        if state["dim"] is None:
            state["dim"] = dim
        elif state["dim"] != dim:
            raise HTTPException(status_code=500, detail="model dimension changed")
        payload = {
            "model": backend.name,
            "dim": dim,
            "embeddings": [row.tolist() for row in vectors],
        }
        if warnings:
            payload["warnings"] = warnings
        return payload

    return app
