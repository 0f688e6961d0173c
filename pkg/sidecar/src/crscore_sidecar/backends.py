"""Embedding backends.

``SentenceTransformerBackend`` hosts a real model (lazy import, so the
service degrades gracefully when the model or library is unavailable).
``HashBagBackend`` is a deterministic stand-in selected with model ids like
``test:hashbag-256``; it keeps the service fully testable offline.
"""

from __future__ import annotations

import hashlib
import math
import re
import struct
from importlib import resources

import numpy as np

_WORD_OR_SPAN = re.compile(r"`([^`]*)`|[A-Za-z0-9_']+")
_HASHBAG_ID = re.compile(r"^test:hashbag-(\d+)(?:-s(\d+))?$")
_EMPTY = "\x00empty"


def load_stopwords() -> frozenset[str]:
    text = resources.files("crscore_sidecar.resources").joinpath(
        "stopwords-en.txt"
    ).read_text("utf-8")
    return frozenset(
        line.strip().lower()
        for line in text.splitlines()
        if line.strip() and not line.startswith("#")
    )


def _tokens(text: str) -> list[str]:
    out = []
    for m in _WORD_OR_SPAN.finditer(text):
        if m.group(1) is not None:
            tok = m.group(1).strip()
        else:
            tok = m.group(0).strip("'")
        if tok:
            out.append(tok.lower())
    return out


class HashBagBackend:
    """Seeded token-hash bag-of-directions embeddings (unit norm)."""

    def __init__(self, dim: int = 256, seed: int = 0):
        self.dim = dim
        self.seed = seed
        self.name = f"test:hashbag-{dim}" + (f"-s{seed}" if seed else "")
        self._cache: dict[str, np.ndarray] = {}

    def _direction(self, token: str) -> np.ndarray:
        cached = self._cache.get(token)
        if cached is not None:
            return cached
        gauss: list[float] = []
        for block in range((self.dim + 7) // 8):
            digest = hashlib.sha256(
                f"{self.seed}|{token}|{block}".encode("utf-8")
            ).digest()
            words = struct.unpack(">8I", digest)
            us = [(w + 0.5) / 2.0**32 for w in words]
            for k in range(0, 8, 2):
                r = math.sqrt(-2.0 * math.log(us[k]))
                gauss.append(r * math.cos(2 * math.pi * us[k + 1]))
                gauss.append(r * math.sin(2 * math.pi * us[k + 1]))
        vec = np.asarray(gauss[: self.dim])
        vec = vec / np.linalg.norm(vec)
        self._cache[token] = vec
        return vec

    def encode(self, texts: list[str]) -> np.ndarray:
        rows = np.zeros((len(texts), self.dim))
        for i, text in enumerate(texts):
            toks = _tokens(text) or [_EMPTY]
            acc = np.zeros(self.dim)
            for tok in toks:
                acc += self._direction(tok)
            norm = np.linalg.norm(acc)
            rows[i] = acc / norm if norm else self._direction(toks[0])
        return rows


class SentenceTransformerBackend:
    """Real model behind the same encode() contract; import is lazy."""

    def __init__(self, model_id: str, pooling: str = "native",
                 stopwords: frozenset[str] | None = None):
        from sentence_transformers import SentenceTransformer

        self.name = model_id
        self.pooling = pooling
        self._stopwords = stopwords if stopwords is not None else load_stopwords()
        self._model = SentenceTransformer(model_id)
        self._model.eval()
        self.dim = int(self._model.get_sentence_embedding_dimension())

    def encode(self, texts: list[str]) -> np.ndarray:
        if self.pooling == "native":
            vecs = self._model.encode(
                texts, convert_to_numpy=True, normalize_embeddings=True,
                show_progress_bar=False,
            )
            return np.asarray(vecs, dtype=np.float64)
        return self._mean_nonstop(texts)

    def _mean_nonstop(self, texts: list[str]) -> np.ndarray:
        """Mean of token states, dropping special and stopword tokens."""
        out = np.zeros((len(texts), self.dim))
        token_states = self._model.encode(
            texts, output_value="token_embeddings", convert_to_numpy=False,
            show_progress_bar=False,
        )
        tokenizer = self._model.tokenizer
        for i, (text, states) in enumerate(zip(texts, token_states)):
            ids = tokenizer(text, truncation=True)["input_ids"]
            tokens = tokenizer.convert_ids_to_tokens(ids)
            keep = []
            for j, tok in enumerate(tokens[: states.shape[0]]):
                word = tok.lstrip("##").lstrip("▁").lower()
                if tok in tokenizer.all_special_tokens:
                    continue
                if word in self._stopwords:
                    continue
                keep.append(j)
            if not keep:
                keep = [j for j in range(len(tokens[: states.shape[0]]))
                        if tokens[j] not in tokenizer.all_special_tokens] or [0]
            pooled = states[keep].mean(axis=0)
            vec = pooled.detach().cpu().numpy().astype(np.float64)
            out[i] = vec / np.linalg.norm(vec)
        return out


def make_backend(model_id: str, pooling: str = "native"):
    m = _HASHBAG_ID.match(model_id)
    if m:
        return HashBagBackend(dim=int(m.group(1)), seed=int(m.group(2) or 0))
    return SentenceTransformerBackend(model_id, pooling=pooling)
