"""Sentence-embedding providers and cosine similarity.

Two providers ship with the package:

* ``DeterministicProvider`` — a seeded token-hash bag-of-directions model
  (dim 256 by default). It exists so the whole test suite and all metric
  oracles run with zero model dependencies; it is never used to reproduce
  published numbers.
* ``RemoteProvider`` — speaks the sidecar wire protocol
  (``POST {base}/embed {"texts": [...]}``) with batching and retries.

``CachedProvider`` wraps either with a write-through on-disk cache keyed by
(provider tag, text).
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import struct
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import requests

from . import textproc
from .errors import DataError, TransportError

logger = logging.getLogger(__name__)

DEFAULT_DIM = 256


@dataclass
class EmbeddingVector:
    """A dense sentence vector tagged with its provider."""

    values: np.ndarray
    provider_tag: str

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1:
            raise DataError("embedding vector must be one-dimensional")
        if not np.all(np.isfinite(self.values)):
            raise DataError("embedding vector contains non-finite values")


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine similarity clamped to [-1, 1]."""
    if a.dim != b.dim:
        raise DataError(f"cosine: dimension mismatch {a.dim} vs {b.dim}")
    na = float(np.linalg.norm(a.values))
    nb = float(np.linalg.norm(b.values))
    if na == 0.0 or nb == 0.0:
        raise DataError("cosine: zero vector")
    value = float(np.dot(a.values, b.values) / (na * nb))
    return max(-1.0, min(1.0, value))


# ---------------------------------------------------------------------------
# Deterministic hash-bag provider
# ---------------------------------------------------------------------------

def _token_direction(seed: int, token: str, dim: int) -> np.ndarray:
    """Platform-stable unit direction for a token.

    Gaussian components are derived from SHA-256 in counter mode: block j
    hashes ``"{seed}|{token}|{j}"``, its 32 bytes give eight big-endian
    uint32 values, mapped to (0, 1) uniforms and folded through Box-Muller.
    """
    n_blocks = (dim + 7) // 8
    gauss: list[float] = []
    for j in range(n_blocks):
        digest = hashlib.sha256(f"{seed}|{token}|{j}".encode("utf-8")).digest()
        words = struct.unpack(">8I", digest)
        uniforms = [(w + 0.5) / 2.0**32 for w in words]
        for k in range(0, 8, 2):
            r = math.sqrt(-2.0 * math.log(uniforms[k]))
            theta = 2.0 * math.pi * uniforms[k + 1]
            gauss.append(r * math.cos(theta))
            gauss.append(r * math.sin(theta))
    vec = np.asarray(gauss[:dim], dtype=np.float64)
    return vec / np.linalg.norm(vec)


_EMPTY_SENTINEL = "\x00empty"


class DeterministicProvider:
    """Seeded token-hash bag-of-directions sentence embeddings.

    A sentence embeds as the (optionally normalized) sum of the unit
    directions of its tokens, so the representation is order-free:
    ``embed("a b") == embed("b a")``. Empty or token-free text maps to a
    fixed sentinel direction.
    """

    def __init__(self, seed: int = 0, dim: int = DEFAULT_DIM, normalize: bool = True):
        if dim < 2:
            raise DataError("deterministic provider needs dim >= 2")
        self.seed = seed
        self.dim = dim
        self.normalize = normalize
        self.tag = f"hashbag-d{dim}-s{seed}"
        self._directions: dict[str, np.ndarray] = {}

    def _direction(self, token: str) -> np.ndarray:
        vec = self._directions.get(token)
        if vec is None:
            vec = _token_direction(self.seed, token, self.dim)
            self._directions[token] = vec
        return vec

    def embed(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        out = []
        for text in texts:
            tokens = textproc.tokenize(text) or [_EMPTY_SENTINEL]
            acc = np.zeros(self.dim, dtype=np.float64)
            for tok in tokens:
                acc += self._direction(tok)
            norm = float(np.linalg.norm(acc))
            if norm == 0.0:  # exact cancellation: effectively impossible
                acc = self._direction(tokens[0]).copy()
                norm = 1.0
            if self.normalize:
                acc = acc / norm
            out.append(EmbeddingVector(values=acc, provider_tag=self.tag))
        return out


# ---------------------------------------------------------------------------
# Remote provider (sidecar wire protocol)
# ---------------------------------------------------------------------------

class RemoteProvider:
    """Client for an embedding service speaking the shared wire protocol."""

    def __init__(
        self,
        base_url: str,
        batch_size: int = 64,
        normalize: bool = True,
        retry_attempts: int = 3,
        retry_backoff_s: float = 0.5,
        timeout_s: float = 60.0,
        session: requests.Session | None = None,
    ):
        if batch_size < 1:
            raise DataError("batch_size must be >= 1")
        self.base_url = base_url.rstrip("/")
        self.batch_size = batch_size
        self.normalize = normalize
        self.retry_attempts = max(1, retry_attempts)
        self.retry_backoff_s = retry_backoff_s
        self.timeout_s = timeout_s
        self._session = session or requests.Session()
        self._model: str | None = None
        self._dim: int | None = None

    @property
    def tag(self) -> str:
        return f"remote:{self._model}" if self._model else f"remote:{self.base_url}"

    def _post(self, texts: list[str]) -> dict:
        url = f"{self.base_url}/embed"
        last_exc: Exception | None = None
        for attempt in range(self.retry_attempts):
            try:
                resp = self._session.post(url, json={"texts": texts}, timeout=self.timeout_s)
                if resp.status_code >= 500:
                    raise TransportError(f"{url} returned {resp.status_code}")
                resp.raise_for_status()
                return resp.json()
            except (requests.RequestException, TransportError, ValueError) as exc:
                last_exc = exc
                if attempt + 1 < self.retry_attempts:
                    time.sleep(self.retry_backoff_s * 2**attempt)
        raise TransportError(f"embedding request failed after "
                             f"{self.retry_attempts} attempts: {last_exc}")

    def embed(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        out: list[EmbeddingVector] = []
        items = list(texts)
        for i in range(0, len(items), self.batch_size):
            batch = items[i : i + self.batch_size]
            payload = self._post(batch)
            try:
                model = str(payload["model"])
                dim = int(payload["dim"])
                rows = payload["embeddings"]
            except (KeyError, TypeError, ValueError) as exc:
                raise TransportError(f"malformed embedding response: {exc}") from exc
            if self._model is None:
                self._model, self._dim = model, dim
            elif model != self._model or dim != self._dim:
                raise TransportError(
                    f"provider changed mid-run: {model}/{dim} vs {self._model}/{self._dim}"
                )
            if len(rows) != len(batch):
                raise TransportError(
                    f"embedding count mismatch: sent {len(batch)}, got {len(rows)}"
                )
            for row in rows:
                vec = np.asarray(row, dtype=np.float64)
                if vec.shape != (dim,):
                    raise TransportError("embedding row does not match declared dim")
                if self.normalize:
                    norm = float(np.linalg.norm(vec))
                    if norm == 0.0:
                        raise TransportError("remote provider returned a zero vector")
                    vec = vec / norm
                out.append(EmbeddingVector(values=vec, provider_tag=self.tag))
        return out

    def health(self) -> dict:
        resp = self._session.get(f"{self.base_url}/health", timeout=self.timeout_s)
        resp.raise_for_status()
        return resp.json()


# ---------------------------------------------------------------------------
# Write-through disk cache
# ---------------------------------------------------------------------------

class CachedProvider:
    """Write-through disk cache around another provider.

    Keys are SHA-256 of (tag, text); one JSON record per key. Corrupt
    entries are discarded and recomputed with a logged warning.
    """

    def __init__(self, inner, cache_dir: str | Path):
        self.inner = inner
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)

    @property
    def tag(self) -> str:
        return self.inner.tag

    def _key_path(self, text: str) -> Path:
        digest = hashlib.sha256(
            self.tag.encode("utf-8") + b"\x00" + text.encode("utf-8")
        ).hexdigest()
        return self.cache_dir / f"{digest}.json"

    def _read(self, path: Path) -> EmbeddingVector | None:
        try:
            with open(path, encoding="utf-8") as f:
                obj = json.load(f)
            values = np.asarray(obj["values"], dtype=np.float64)
            if values.shape != (int(obj["dim"]),) or not np.all(np.isfinite(values)):
                raise ValueError("inconsistent cached vector")
            return EmbeddingVector(values=values, provider_tag=str(obj["provider_tag"]))
        except FileNotFoundError:
            return None
        except (ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
            logger.warning("discarding corrupt embedding cache entry %s (%s)", path, exc)
            try:
                path.unlink()
            except OSError:
                pass
            return None

    def _write(self, path: Path, vec: EmbeddingVector) -> None:
        record = {
            "dim": vec.dim,
            "values": vec.values.tolist(),
            "provider_tag": vec.provider_tag,
        }
        tmp = path.with_suffix(f".tmp{os.getpid()}")
        tmp.write_text(json.dumps(record), encoding="utf-8")
        os.replace(tmp, path)

    def embed(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        out: list[EmbeddingVector | None] = []
        missing: list[str] = []
        missing_at: list[int] = []
        for idx, text in enumerate(texts):
            vec = self._read(self._key_path(text))
            out.append(vec)
            if vec is None:
                missing.append(text)
                missing_at.append(idx)
        if missing:
            computed = self.inner.embed(missing)
            for idx, text, vec in zip(missing_at, missing, computed):
                self._write(self._key_path(text), vec)
                out[idx] = vec
        return [v for v in out if v is not None]


def provider_from_config(cfg: "ProviderConfig"):
    """Instantiate a provider (optionally cached) from configuration."""
    if cfg.kind == "deterministic":
        provider = DeterministicProvider(seed=cfg.seed, dim=cfg.dim, normalize=cfg.normalize)
    elif cfg.kind == "remote":
        if not cfg.url:
            raise DataError("remote provider requires a url")
        provider = RemoteProvider(
            cfg.url, batch_size=cfg.batch_size, normalize=cfg.normalize
        )
    else:
        raise DataError(f"unknown provider kind {cfg.kind!r}")
    if cfg.cache_dir:
        provider = CachedProvider(provider, cfg.cache_dir)
    return provider


@dataclass
class ProviderConfig:
    """Declarative provider selection used by the CLI."""

    kind: str = "deterministic"  # "deterministic" | "remote"
    seed: int = 0
    dim: int = DEFAULT_DIM
    url: str = ""
    batch_size: int = 64
    normalize: bool = True
    cache_dir: str = ""

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise DataError("batch_size must be >= 1")
