"""crscore: reference-free code-review quality metrics.

Scores a generated review comment against pseudo-references (LLM claims and
static-analysis smells) for a code change via sentence-embedding similarity,
yielding conciseness, comprehensiveness, and relevance in [0, 1]. Ships the
reference-based baseline metrics and the rank-correlation statistics used to
validate the metric against human judgments.
"""

__version__ = "0.1.0"
