"""Run configuration: a flat key-value config file plus CLI overrides.

The config format is one human-editable document of ``key = value`` lines:

* ``#`` starts a comment; blank lines are ignored.
* Values: double-quoted strings, integers, floats, ``true``/``false``, or
  ``[item, item, ...]`` lists of the same scalars.
* Keys are dotted paths, e.g. ``provider.kind``; no nesting syntax.

CLI flags override file values, which override built-in defaults.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .embed import ProviderConfig
from .errors import ConfigError
from .pseudoref import AnalyzerSpec, LlmClientConfig, default_analyzer_specs

_LINE_RE = re.compile(r"^\s*(?P<key>[A-Za-z0-9_.\-]+)\s*=\s*(?P<value>.+?)\s*$")

THRESHOLD_MODES = ("fixed", "calibrate", "paper-best", "paper-gt")
REPORT_FORMATS = ("csv", "md", "jsonl")


def _parse_scalar(raw: str, where: str):
    raw = raw.strip()
    if raw.startswith('"') and raw.endswith('"') and len(raw) >= 2:
        return raw[1:-1]
    if raw in ("true", "false"):
        return raw == "true"
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    raise ConfigError(f"{where}: cannot parse value {raw!r} "
                      "(strings must be double-quoted)")


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse the flat config document into a {dotted_key: value} mapping."""
    out: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        m = _LINE_RE.match(line)
        if not m:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key = m.group("key")
        raw = m.group("value")
        # Strip trailing comments outside quotes/brackets.
        raw = _strip_comment(raw)
        where = f"{source}:{lineno}"
        if raw.startswith("["):
            if not raw.endswith("]"):
                raise ConfigError(f"{where}: unterminated list")
            body = raw[1:-1].strip()
            value = [_parse_scalar(p, where) for p in _split_list(body)] if body else []
        else:
            value = _parse_scalar(raw, where)
        out[key] = value
    return out


def _strip_comment(raw: str) -> str:
    in_quote = False
    for i, ch in enumerate(raw):
        if ch == '"':
            in_quote = not in_quote
        elif ch == "#" and not in_quote:
            return raw[:i].strip()
    return raw.strip()


def _split_list(body: str) -> list[str]:
    parts: list[str] = []
    cur = []
    in_quote = False
    for ch in body:
        if ch == '"':
            in_quote = not in_quote
            cur.append(ch)
        elif ch == "," and not in_quote:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if cur:
        parts.append("".join(cur))
    return [p.strip() for p in parts if p.strip()]


@dataclass
class RunConfig:
    """Everything a CLI command needs, resolved from defaults, file, flags."""

    changes: str = ""
    reviews: str = ""
    annotations: str = ""
    pseudorefs: str = ""
    scores_file: str = ""
    baselines_file: str = ""
    output_dir: str = "out"
    ground_truth_system: str = "ground-truth"
    exclude_ground_truth: bool = True
    parallelism: int = 4
    fail_ratio_limit: float = 0.05
    timestamp_names: bool = False
    report_formats: list[str] = field(default_factory=lambda: ["csv", "md"])
    threshold_mode: str = "paper-best"
    threshold_value: float = 0.7
    calibrate_system: str = "ground-truth"
    sweep_grid: list[float] = field(default_factory=list)
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    llm: LlmClientConfig = field(default_factory=LlmClientConfig)
    analyzers: list[str] = field(default_factory=list)
    analyzer_specs: dict[str, AnalyzerSpec] = field(default_factory=dict)
    include_smells: bool = False
    smells_whole_file: bool = False
    with_laaj: bool = False

    def __post_init__(self) -> None:
        if self.threshold_mode not in THRESHOLD_MODES:
            raise ConfigError(
                f"threshold.mode must be one of {THRESHOLD_MODES}, "
                f"got {self.threshold_mode!r}"
            )
        bad = [f for f in self.report_formats if f not in REPORT_FORMATS]
        if bad:
            raise ConfigError(f"unknown report formats: {bad}")

    def out_path(self, command: str, ext: str) -> Path:
        stamp = _timestamp() if self.timestamp_names else "latest"
        return Path(self.output_dir) / f"{command}-{stamp}.{ext}"


def _timestamp() -> str:
    import datetime

    return datetime.datetime.now().strftime("%Y%m%dT%H%M%S")


_SIMPLE_KEYS = {
    "changes": ("changes", str),
    "reviews": ("reviews", str),
    "annotations": ("annotations", str),
    "pseudorefs": ("pseudorefs", str),
    "scores_file": ("scores_file", str),
    "baselines_file": ("baselines_file", str),
    "output_dir": ("output_dir", str),
    "ground_truth_system": ("ground_truth_system", str),
    "exclude_ground_truth": ("exclude_ground_truth", bool),
    "parallelism": ("parallelism", int),
    "fail_ratio_limit": ("fail_ratio_limit", float),
    "timestamp_names": ("timestamp_names", bool),
    "report.formats": ("report_formats", list),
    "threshold.mode": ("threshold_mode", str),
    "threshold.value": ("threshold_value", float),
    "calibrate.system": ("calibrate_system", str),
    "sweep.grid": ("sweep_grid", list),
    "gen_refs.include_smells": ("include_smells", bool),
    "smells.whole_file": ("smells_whole_file", bool),
    "baselines.with_laaj": ("with_laaj", bool),
}

_PROVIDER_KEYS = {
    "provider.kind": ("kind", str),
    "provider.seed": ("seed", int),
    "provider.dim": ("dim", int),
    "provider.url": ("url", str),
    "provider.batch_size": ("batch_size", int),
    "provider.normalize": ("normalize", bool),
    "provider.cache_dir": ("cache_dir", str),
}

_LLM_KEYS = {
    "llm.endpoint": ("endpoint", str),
    "llm.model": ("model", str),
    "llm.temperature": ("temperature", float),
    "llm.max_tokens": ("max_tokens", int),
    "llm.max_in_flight": ("max_in_flight", int),
    "llm.retry_attempts": ("retry_attempts", int),
    "llm.retry_backoff_s": ("retry_backoff_s", float),
    "llm.cache_dir": ("cache_dir", str),
    "llm.response_path": ("response_path", str),
    "llm.timeout_s": ("timeout_s", float),
}

_ANALYZER_FIELDS = {"argv", "language", "parser", "regex", "timeout_s", "kind"}


def config_from_mapping(mapping: dict) -> RunConfig:
    """Build a RunConfig from a flat mapping; unknown keys are errors."""
    cfg = RunConfig()
    analyzer_over: dict[str, dict] = {}
    for key, value in mapping.items():
        if key in _SIMPLE_KEYS:
            attr, typ = _SIMPLE_KEYS[key]
            setattr(cfg, attr, _coerce(key, value, typ))
        elif key in _PROVIDER_KEYS:
            attr, typ = _PROVIDER_KEYS[key]
            setattr(cfg.provider, attr, _coerce(key, value, typ))
        elif key in _LLM_KEYS:
            attr, typ = _LLM_KEYS[key]
            setattr(cfg.llm, attr, _coerce(key, value, typ))
        elif key == "analyzers":
            cfg.analyzers = [str(v) for v in _coerce(key, value, list)]
        elif key.startswith("analyzer."):
            parts = key.split(".")
            if len(parts) != 3 or parts[2] not in _ANALYZER_FIELDS:
                raise ConfigError(f"unknown analyzer config key {key!r}")
            analyzer_over.setdefault(parts[1], {})[parts[2]] = value
        else:
            raise ConfigError(f"unknown config key {key!r}")

    specs = default_analyzer_specs()
    for name, fields in analyzer_over.items():
        base = specs.get(name)
        spec = AnalyzerSpec(
            name=name,
            language=str(fields.get("language", base.language if base else "python")),
            argv=[str(a) for a in fields.get("argv", base.argv if base else [])],
            parser=str(fields.get("parser", base.parser if base else "json")),
            regex=str(fields.get("regex", base.regex if base else "")),
            timeout_s=float(fields.get("timeout_s", base.timeout_s if base else 60.0)),
            finding_kind=str(fields.get("kind", base.finding_kind if base else "smell")),
        )
        specs[name] = spec
    cfg.analyzer_specs = specs
    if not cfg.analyzers:
        cfg.analyzers = []
    cfg.__post_init__()
    cfg.provider.__post_init__()
    cfg.llm.__post_init__()
    return cfg


def _coerce(key: str, value, typ):
    if typ is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if typ is list:
        if not isinstance(value, list):
            raise ConfigError(f"{key}: expected a list")
        return value
    if not isinstance(value, typ) or (typ is not bool and isinstance(value, bool)):
        raise ConfigError(f"{key}: expected {typ.__name__}, got {value!r}")
    return value


def load_config(path: str | Path | None, overrides: dict | None = None) -> RunConfig:
    """Load config file (optional) and apply CLI overrides on top."""
    mapping: dict = {}
    if path:
        try:
            text = Path(path).read_text("utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        mapping.update(parse_config_text(text, str(path)))
    for key, value in (overrides or {}).items():
        if value is not None:
            mapping[key] = value
    return config_from_mapping(mapping)
