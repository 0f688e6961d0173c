"""Embedding sidecar: a small HTTP service exposing sentence embeddings
over the shared wire protocol (POST /embed, GET /health).

Exists so paper-scale score reproduction can run against a real
sentence-embedding model; the metric toolkit's own test suite never
requires it.
"""

__version__ = "0.1.0"
