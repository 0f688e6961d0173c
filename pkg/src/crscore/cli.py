"""Command-line orchestration.

``crscore <subcommand> --config <path> [overrides]`` with subcommands
gen-refs, score, calibrate, sweep, baselines, correlate, rank, smells, and
report. Commands are re-runnable: with warm caches and fixed config all
outputs are byte-identical (output lines are sorted, file names use the
"latest" stamp unless timestamping is enabled).

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 external
service error. The LLM API key is taken from the CRSCORE_API_KEY
environment variable only, never from config files.
"""

from __future__ import annotations

import concurrent.futures
import json
import os
import sys
from collections import defaultdict
from pathlib import Path

import click

from . import baselines as baselines_mod
from . import corpus, evalstats, metric, pseudoref, textproc
from .config import RunConfig, load_config
from .embed import provider_from_config
from .errors import ConfigError, CrscoreError, DataError, ExternalServiceError

API_KEY_ENV = "CRSCORE_API_KEY"

BASELINE_METRICS = ("bleu", "bleu_ns", "rouge_l", "chrf", "chrf_pp", "edit_distance")
OUR_DIMENSIONS = ("con", "comp", "rel")


def _echo(msg: str) -> None:
    click.echo(msg, err=True)


# ---------------------------------------------------------------------------
# Config plumbing
# ---------------------------------------------------------------------------

_config_option = click.option(
    "--config", "config_path", type=click.Path(), default=None,
    help="Flat key-value config file; flags override file values.",
)


def _build_config(config_path, **overrides) -> RunConfig:
    cfg = load_config(config_path, overrides)
    cfg.llm.api_key = os.environ.get(API_KEY_ENV, "")
    return cfg


def _common_overrides(fn):
    options = [
        click.option("--changes", "changes", default=None, help="Code-change JSONL."),
        click.option("--reviews", "reviews", default=None, help="Review JSONL."),
        click.option("--annotations", "annotations", default=None,
                     help="Human annotation JSONL."),
        click.option("--pseudorefs", "pseudorefs", default=None,
                     help="Pseudo-reference JSONL."),
        click.option("--output-dir", "output_dir", default=None),
        click.option("--provider", "provider_kind", default=None,
                     type=click.Choice(["deterministic", "remote"])),
        click.option("--provider-url", "provider_url", default=None),
        click.option("--cache-dir", "provider_cache_dir", default=None),
        click.option("--threshold-mode", "threshold_mode", default=None,
                     type=click.Choice(["fixed", "calibrate", "paper-best", "paper-gt"])),
        click.option("--tau", "threshold_value", type=float, default=None,
                     help="Threshold value (implies --threshold-mode fixed)."),
    ]
    for opt in reversed(options):
        fn = opt(fn)
    return fn


_PARAM_TO_KEY = {
    "changes": "changes",
    "reviews": "reviews",
    "annotations": "annotations",
    "pseudorefs": "pseudorefs",
    "output_dir": "output_dir",
    "provider_kind": "provider.kind",
    "provider_url": "provider.url",
    "provider_cache_dir": "provider.cache_dir",
    "threshold_mode": "threshold.mode",
    "threshold_value": "threshold.value",
    "with_smells": "gen_refs.include_smells",
    "with_laaj": "baselines.with_laaj",
    "whole_file": "smells.whole_file",
    "calibrate_system": "calibrate.system",
    "sweep_grid": "sweep.grid",
}


def _overrides_from_params(params: dict) -> dict:
    out = {}
    for name, value in params.items():
        if value is None or name == "config_path":
            continue
        out[_PARAM_TO_KEY[name]] = value
    if "threshold.value" in out and "threshold.mode" not in out:
        out["threshold.mode"] = "fixed"
    return out


# ---------------------------------------------------------------------------
# Shared pipeline helpers
# ---------------------------------------------------------------------------

def _load_changes(cfg: RunConfig) -> list[corpus.CodeChange]:
    if not cfg.changes:
        raise ConfigError("no code-change corpus configured (key: changes)")
    return corpus.load_changes(cfg.changes)


def _load_reviews(cfg: RunConfig, ids: set[str]) -> list[corpus.ReviewDoc]:
    if not cfg.reviews:
        raise ConfigError("no review corpus configured (key: reviews)")
    return corpus.load_reviews(cfg.reviews, ids)


def _load_prefs_by_change(cfg: RunConfig, ids: set[str]) -> dict[str, list]:
    by_change: dict[str, list] = defaultdict(list)
    if cfg.pseudorefs:
        for ref in corpus.load_pseudorefs(cfg.pseudorefs, ids):
            by_change[ref.change_id].append(ref)
    return by_change


def _matrices(
    cfg: RunConfig,
    changes,
    reviews,
    prefs_by_change,
    provider,
    lexicon,
    only_system: str | None = None,
) -> list[metric.SimilarityMatrix]:
    out = []
    for review in sorted(reviews, key=lambda r: (r.change_id, r.system_id)):
        if only_system is not None and review.system_id != only_system:
            continue
        sents = textproc.sentence_set(
            f"{review.change_id}/{review.system_id}", review.text, lexicon
        )
        out.append(
            metric.similarity_matrix(
                prefs_by_change.get(review.change_id, []),
                sents,
                provider,
                lexicon=lexicon,
                change_id=review.change_id,
                system_id=review.system_id,
            )
        )
    return out


def _resolve_threshold(cfg: RunConfig, calib_source=None) -> metric.ThresholdConfig:
    if cfg.threshold_mode == "fixed":
        return metric.ThresholdConfig(cfg.threshold_value, provenance="fixed")
    if cfg.threshold_mode == "paper-best":
        return metric.ThresholdConfig.paper_best()
    if cfg.threshold_mode == "paper-gt":
        return metric.ThresholdConfig.paper_gt()
    if calib_source is None:
        raise ConfigError("threshold.mode=calibrate needs calibration matrices")
    result = metric.calibrate_threshold(calib_source, run_tag=cfg.calibrate_system)
    return result.threshold


def _write_jsonl(path: Path, records: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec, sort_keys=True) + "\n")


def _write_table(cfg: RunConfig, command: str, header: list[str], rows: list[list]) -> list[Path]:
    """Emit one logical table in each configured report format."""
    written = []
    for fmt in cfg.report_formats:
        path = cfg.out_path(command, fmt)
        path.parent.mkdir(parents=True, exist_ok=True)
        if fmt == "csv":
            import csv

            with open(path, "w", newline="", encoding="utf-8") as f:
                writer = csv.writer(f)
                writer.writerow(header)
                writer.writerows(rows)
        elif fmt == "md":
            with open(path, "w", encoding="utf-8") as f:
                f.write("| " + " | ".join(header) + " |\n")
                f.write("|" + "|".join(["---"] * len(header)) + "|\n")
                for row in rows:
                    f.write("| " + " | ".join(str(c) for c in row) + " |\n")
        else:
            _write_jsonl(path, [dict(zip(header, row)) for row in rows])
        written.append(path)
    return written


def _fmt(x: float | str) -> str:
    if isinstance(x, str):
        return x
    return f"{x:.4f}"


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

@click.group()
def cli() -> None:
    """Reference-free review-quality scoring and its validation battery."""


@cli.command("gen-refs")
@_config_option
@_common_overrides
@click.option("--with-smells", "with_smells", is_flag=True, default=None,
              help="Run configured analyzers and merge smells into the set.")
def cmd_gen_refs(config_path, **params) -> None:
    """Generate pseudo-references (LLM claims, optional analyzer smells)."""
    cfg = _build_config(config_path, **_overrides_from_params(params))
    changes = _load_changes(cfg)
    if not cfg.llm.endpoint:
        raise ConfigError("gen-refs requires llm.endpoint")
    client = pseudoref.LlmClient(cfg.llm)

    def one(change):
        claims = pseudoref.generate_claims(change, client)
        smells = []
        if cfg.include_smells and change.language.supports_smells:
            for name in cfg.analyzers:
                spec = cfg.analyzer_specs[name]
                if spec.language == change.language.name:
                    smells.extend(
                        pseudoref.detect_smells(change, spec, cfg.smells_whole_file)
                    )
        return pseudoref.assemble_pseudorefs(claims, smells, change_id=change.id)

    results: dict[str, list] = {}
    failures: list[dict] = []
    with concurrent.futures.ThreadPoolExecutor(max_workers=cfg.llm.max_in_flight) as pool:
        futures = {pool.submit(one, ch): ch for ch in changes}
        for fut in concurrent.futures.as_completed(futures):
            ch = futures[fut]
            try:
                results[ch.id] = fut.result()
            except CrscoreError as exc:
                failures.append({"change_id": ch.id, "error": str(exc)})

    out = Path(cfg.output_dir) / "pseudorefs.jsonl"
    records = [
        ref.to_json() for ch in changes for ref in results.get(ch.id, [])
    ]
    _write_jsonl(out, records)
    failures.sort(key=lambda r: r["change_id"])
    _write_jsonl(Path(cfg.output_dir) / "errors.jsonl", failures)
    _echo(f"gen-refs: {len(changes) - len(failures)}/{len(changes)} changes ok -> {out}")
    if failures and len(failures) / len(changes) > cfg.fail_ratio_limit:
        raise ExternalServiceError(
            f"{len(failures)}/{len(changes)} changes failed "
            f"(limit {cfg.fail_ratio_limit:.0%})"
        )


@cli.command("score")
@_config_option
@_common_overrides
def cmd_score(config_path, **params) -> None:
    """Score every (change, system) review against its pseudo-references."""
    cfg = _build_config(config_path, **_overrides_from_params(params))
    changes = _load_changes(cfg)
    ids = {c.id for c in changes}
    reviews = _load_reviews(cfg, ids)
    prefs_by_change = _load_prefs_by_change(cfg, ids)
    provider = provider_from_config(cfg.provider)
    lexicon = textproc.load_default_lexicon()

    matrices = _matrices(cfg, changes, reviews, prefs_by_change, provider, lexicon)
    if cfg.threshold_mode == "calibrate":
        calib = [m for m in matrices if m.system_id == cfg.calibrate_system]
        th = _resolve_threshold(cfg, calib)
    else:
        th = _resolve_threshold(cfg)

    records = []
    for m in matrices:
        triple = metric.score(m, th)
        records.append(
            {
                "change_id": m.change_id,
                "system_id": m.system_id,
                "con": triple.con,
                "comp": triple.comp,
                "rel": triple.rel,
                "n_prefs": triple.n_prefs,
                "n_sents": triple.n_sents,
                "tau": th.tau,
                "provider_tag": provider.tag,
                "flags": sorted(triple.degenerate_flags),
            }
        )
    records.sort(key=lambda r: (r["change_id"], r["system_id"]))
    out = cfg.out_path("score", "jsonl")
    _write_jsonl(out, records)
    _echo(
        f"score: {len(records)} reviews scored at tau={th.tau} "
        f"(stopwords {lexicon.version_tag}) -> {out}"
    )


@cli.command("calibrate")
@_config_option
@_common_overrides
@click.option("--system", "calibrate_system", default=None,
              help="System whose reviews calibrate the threshold.")
def cmd_calibrate(config_path, **params) -> None:
    """Calibrate the similarity threshold from one system's reviews."""
    cfg = _build_config(config_path, **_overrides_from_params(params))
    changes = _load_changes(cfg)
    ids = {c.id for c in changes}
    reviews = _load_reviews(cfg, ids)
    prefs_by_change = _load_prefs_by_change(cfg, ids)
    provider = provider_from_config(cfg.provider)
    lexicon = textproc.load_default_lexicon()
    matrices = _matrices(
        cfg, changes, reviews, prefs_by_change, provider, lexicon,
        only_system=cfg.calibrate_system,
    )
    if not matrices:
        raise DataError(f"no reviews for calibration system {cfg.calibrate_system!r}")
    result = metric.calibrate_threshold(matrices, run_tag=cfg.calibrate_system)
    header = ["tau", "system", "n_sentences", "n_skipped_sentences", "provider_tag",
              "stopwords_tag"]
    rows = [[result.threshold.tau, cfg.calibrate_system, result.n_sentences,
             result.n_skipped_sentences, provider.tag, lexicon.version_tag]]
    _write_table(cfg, "calibrate", header, rows)
    click.echo(f"{result.threshold.tau}")


@cli.command("sweep")
@_config_option
@_common_overrides
@click.option("--grid", "sweep_grid", default=None,
              help="Comma-separated thresholds, e.g. 0.6,0.65,0.7.")
def cmd_sweep(config_path, **params) -> None:
    """Correlate relevance with human relevance across a threshold grid."""
    overrides = _overrides_from_params(params)
    if isinstance(overrides.get("sweep.grid"), str):
        overrides["sweep.grid"] = [float(x) for x in overrides["sweep.grid"].split(",")]
    cfg = _build_config(config_path, **overrides)
    if not cfg.sweep_grid:
        raise ConfigError("sweep needs a threshold grid (key: sweep.grid)")
    changes = _load_changes(cfg)
    ids = {c.id for c in changes}
    reviews = _load_reviews(cfg, ids)
    if not cfg.annotations:
        raise ConfigError("sweep requires annotations")
    annotations = corpus.load_annotations(cfg.annotations, ids)
    if cfg.exclude_ground_truth:
        reviews = [r for r in reviews if r.system_id != cfg.ground_truth_system]
        annotations = [a for a in annotations if a.system_id != cfg.ground_truth_system]
    prefs_by_change = _load_prefs_by_change(cfg, ids)
    provider = provider_from_config(cfg.provider)
    lexicon = textproc.load_default_lexicon()
    matrices = _matrices(cfg, changes, reviews, prefs_by_change, provider, lexicon)
    rows_out = []
    for row in metric.threshold_sweep(matrices, annotations, cfg.sweep_grid):
        rows_out.append([
            row.tau, _fmt(row.spearman.coefficient), _fmt(row.spearman.p_value),
            _fmt(row.kendall.coefficient), _fmt(row.kendall.p_value), row.n,
        ])
    _write_table(cfg, "sweep", ["tau", "spearman", "p_s", "kendall", "p_k", "n"], rows_out)
    _echo(f"sweep: {len(rows_out)} thresholds evaluated")


@cli.command("baselines")
@_config_option
@_common_overrides
@click.option("--with-laaj", "with_laaj", is_flag=True, default=None,
              help="Also run the LLM judge (needs llm.endpoint).")
def cmd_baselines(config_path, **params) -> None:
    """Reference-based metrics against the ground-truth reviews."""
    cfg = _build_config(config_path, **_overrides_from_params(params))
    changes = _load_changes(cfg)
    by_id = {c.id: c for c in changes}
    reviews = _load_reviews(cfg, {c.id for c in changes})
    gt = {
        r.change_id: r.text for r in reviews if r.system_id == cfg.ground_truth_system
    }
    lexicon = textproc.load_default_lexicon()
    client = None
    if cfg.with_laaj:
        if not cfg.llm.endpoint:
            raise ConfigError("--with-laaj requires llm.endpoint")
        client = pseudoref.LlmClient(cfg.llm)

    records = []
    skipped = []
    for review in reviews:
        if review.system_id == cfg.ground_truth_system:
            continue
        reference = gt.get(review.change_id)
        if reference is None:
            skipped.append({"change_id": review.change_id,
                            "error": "no ground-truth reference"})
            continue
        flags = [] if review.text.strip() else ["empty_candidate"]
        values = {
            "bleu": baselines_mod.bleu(review.text, reference, lexicon=lexicon),
            "bleu_ns": baselines_mod.bleu(
                review.text, reference, drop_stopwords=True, lexicon=lexicon
            ),
            "rouge_l": baselines_mod.rouge_l_f(review.text, reference),
            "chrf": baselines_mod.chrf(review.text, reference),
            "chrf_pp": baselines_mod.chrf_pp(review.text, reference),
            "edit_distance": baselines_mod.norm_edit_distance(review.text, reference),
        }
        for metric_id, value in values.items():
            records.append({
                "metric_id": metric_id, "change_id": review.change_id,
                "system_id": review.system_id, "value": value, "flags": flags,
            })
        if client is not None:
            try:
                raw = baselines_mod.laaj_score(by_id[review.change_id], review.text, client)
                records.append({
                    "metric_id": "laaj", "change_id": review.change_id,
                    "system_id": review.system_id,
                    "value": evalstats.normalize_likert(raw), "raw": raw,
                    "flags": flags,
                })
            except CrscoreError as exc:
                skipped.append({
                    "change_id": review.change_id, "system_id": review.system_id,
                    "error": str(exc),
                })
    records.sort(key=lambda r: (r["metric_id"], r["change_id"], r["system_id"]))
    out = cfg.out_path("baselines", "jsonl")
    _write_jsonl(out, records)
    if skipped:
        skipped.sort(key=lambda r: (r["change_id"], r.get("system_id", "")))
        _write_jsonl(Path(cfg.output_dir) / "baselines-errors.jsonl", skipped)
    _echo(f"baselines: {len(records)} scores -> {out}")


def _read_scores(cfg: RunConfig) -> list[dict]:
    path = cfg.scores_file or cfg.out_path("score", "jsonl")
    if not Path(path).exists():
        raise DataError(f"no score file at {path}; run `crscore score` first")
    return [json.loads(line) for line in Path(path).read_text("utf-8").splitlines() if line]


def _read_baselines(cfg: RunConfig) -> list[dict]:
    path = cfg.baselines_file or cfg.out_path("baselines", "jsonl")
    if not Path(path).exists():
        return []
    return [json.loads(line) for line in Path(path).read_text("utf-8").splitlines() if line]


def _instance_values(cfg, scores, baseline_rows, annotations):
    """Aligned per-instance vectors for each metric and human dimension."""
    ann = {
        (a.change_id, a.system_id): a
        for a in annotations
        if not (cfg.exclude_ground_truth and a.system_id == cfg.ground_truth_system)
    }
    metric_vals: dict[str, dict[tuple, float]] = defaultdict(dict)
    for rec in scores:
        key = (rec["change_id"], rec["system_id"])
        if key not in ann or "empty_prefs" in rec.get("flags", []):
            continue
        for dim in OUR_DIMENSIONS:
            metric_vals[dim][key] = rec[dim]
    for rec in baseline_rows:
        key = (rec["change_id"], rec["system_id"])
        if key in ann:
            metric_vals[rec["metric_id"]][key] = rec["value"]
    return ann, metric_vals


@cli.command("correlate")
@_config_option
@_common_overrides
def cmd_correlate(config_path, **params) -> None:
    """Correlate metric scores with human Likert annotations per dimension."""
    cfg = _build_config(config_path, **_overrides_from_params(params))
    changes = _load_changes(cfg)
    ids = {c.id for c in changes}
    if not cfg.annotations:
        raise ConfigError("correlate requires annotations")
    annotations = corpus.load_annotations(cfg.annotations, ids)
    ann, metric_vals = _instance_values(cfg, _read_scores(cfg), _read_baselines(cfg), annotations)

    header = ["metric_id", "dimension", "spearman", "p_s", "kendall", "p_k", "n"]
    rows = []
    for metric_id in sorted(metric_vals):
        for dim in OUR_DIMENSIONS:
            keys = sorted(metric_vals[metric_id])
            xs = [metric_vals[metric_id][k] for k in keys]
            ys = [float(getattr(ann[k], dim)) for k in keys]
            if len(xs) < 2:
                continue
            sp = evalstats.spearman(xs, ys)
            kd = evalstats.kendall(xs, ys)
            rows.append([
                metric_id, dim,
                _fmt(sp.coefficient) if not sp.undefined else "undefined",
                _fmt(sp.p_value) if not sp.undefined else "",
                _fmt(kd.coefficient) if not kd.undefined else "undefined",
                _fmt(kd.p_value) if not kd.undefined else "",
                sp.n,
            ])
    if not rows:
        raise DataError("correlate: no metric/annotation overlap")
    paths = _write_table(cfg, "correlate", header, rows)
    _echo(f"correlate: {len(rows)} rows -> {', '.join(map(str, paths))}")


@cli.command("rank")
@_config_option
@_common_overrides
def cmd_rank(config_path, **params) -> None:
    """Rank systems per metric and correlate with the human ranking."""
    cfg = _build_config(config_path, **_overrides_from_params(params))
    changes = _load_changes(cfg)
    ids = {c.id for c in changes}
    if not cfg.annotations:
        raise ConfigError("rank requires annotations")
    annotations = corpus.load_annotations(cfg.annotations, ids)
    exclude = {cfg.ground_truth_system} if cfg.exclude_ground_truth else set()

    human_scores: dict[str, list[float]] = defaultdict(list)
    for a in annotations:
        human_scores[a.system_id].append(evalstats.normalize_likert(a.rel))
    human_ranking = evalstats.system_ranking(human_scores, exclude=exclude)

    per_metric: dict[str, dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
    for rec in _read_scores(cfg):
        for dim in OUR_DIMENSIONS:
            per_metric[dim][rec["system_id"]].append(rec[dim])
    for rec in _read_baselines(cfg):
        per_metric[rec["metric_id"]][rec["system_id"]].append(rec["value"])

    rank_rows = [["human_rel"] + [s for s, _ in human_ranking]]
    corr_rows = []
    for metric_id in sorted(per_metric):
        try:
            ranking = evalstats.system_ranking(per_metric[metric_id], exclude=exclude)
        except DataError:
            continue
        rank_rows.append([metric_id] + [s for s, _ in ranking])
        if {s for s, _ in ranking} == {s for s, _ in human_ranking}:
            sp, kd = evalstats.ranking_correlation(ranking, human_ranking)
            corr_rows.append([
                metric_id, _fmt(sp.coefficient), _fmt(sp.p_value),
                _fmt(kd.coefficient), _fmt(kd.p_value), sp.n,
            ])
    width = max(len(r) for r in rank_rows)
    header = ["metric_id"] + [f"rank_{i}" for i in range(1, width)]
    rank_rows = [r + [""] * (width - len(r)) for r in rank_rows]
    _write_table(cfg, "rank", header, rank_rows)

    _write_table(cfg, "rank-correlation",
                 ["metric_id", "spearman", "p_s", "kendall", "p_k", "n_systems"],
                 corr_rows)
    _echo(f"rank: {len(rank_rows)} rankings, {len(corr_rows)} correlations")


@cli.command("smells")
@_config_option
@_common_overrides
@click.option("--whole-file", "whole_file", is_flag=True, default=None,
              help="Keep whole-file findings instead of changed-region ones.")
def cmd_smells(config_path, **params) -> None:
    """Run the configured analyzers over the corpus."""
    cfg = _build_config(config_path, **_overrides_from_params(params))
    changes = _load_changes(cfg)
    if not cfg.analyzers:
        raise ConfigError("smells requires at least one configured analyzer")
    records = []
    failures = []
    attempted = 0
    for change in changes:
        for name in cfg.analyzers:
            spec = cfg.analyzer_specs[name]
            if spec.language != change.language.name:
                continue
            attempted += 1
            try:
                findings = pseudoref.detect_smells(change, spec, cfg.smells_whole_file)
            except CrscoreError as exc:
                failures.append({"change_id": change.id, "tool": name, "error": str(exc)})
                continue
            for f in findings:
                records.append({
                    "change_id": change.id, "tool": f.tool, "rule": f.rule_id,
                    "message": f.message, "file": f.file,
                    "line_start": f.line_start, "line_end": f.line_end,
                })
    records.sort(key=lambda r: (r["change_id"], r["tool"], r["line_start"], r["rule"]))
    out = cfg.out_path("smells", "jsonl")
    _write_jsonl(out, records)
    if failures:
        failures.sort(key=lambda r: (r["change_id"], r["tool"]))
        _write_jsonl(Path(cfg.output_dir) / "smells-errors.jsonl", failures)
    _echo(f"smells: {len(records)} findings, {len(failures)} failures -> {out}")
    if attempted and failures and len(failures) / attempted > cfg.fail_ratio_limit:
        raise ExternalServiceError(
            f"{len(failures)}/{attempted} analyzer runs failed"
        )


@cli.command("report")
@_config_option
@_common_overrides
def cmd_report(config_path, **params) -> None:
    """Join scores, baselines, and annotations into the summary tables."""
    cfg = _build_config(config_path, **_overrides_from_params(params))
    changes = _load_changes(cfg)
    ids = {c.id for c in changes}
    if not cfg.annotations:
        raise ConfigError("report requires annotations")
    annotations = corpus.load_annotations(cfg.annotations, ids)
    scores = _read_scores(cfg)
    baseline_rows = _read_baselines(cfg)

    # Per-system means (systems table); ground truth shown but kept out of
    # correlations below.
    by_system: dict[str, dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
    for rec in scores:
        for dim in OUR_DIMENSIONS:
            by_system[rec["system_id"]][dim].append(rec[dim])
    for rec in baseline_rows:
        by_system[rec["system_id"]][rec["metric_id"]].append(rec["value"])
    for a in annotations:
        for dim in OUR_DIMENSIONS:
            by_system[a.system_id][f"human_{dim}"].append(
                evalstats.normalize_likert(getattr(a, dim))
            )
    metric_cols = (
        [f"human_{d}" for d in OUR_DIMENSIONS]
        + list(OUR_DIMENSIONS)
        + [m for m in BASELINE_METRICS]
        + ["laaj", "bertscore"]
    )
    sys_rows = []
    for system in sorted(by_system):
        row = [system]
        for col in metric_cols:
            if col == "bertscore":
                row.append("not implemented")
                continue
            vals = by_system[system].get(col)
            row.append(_fmt(sum(vals) / len(vals)) if vals else "")
        sys_rows.append(row)
    _write_table(cfg, "report-systems", ["system_id"] + metric_cols, sys_rows)

    # Instance-level correlations (metric x human dimension).
    ann, metric_vals = _instance_values(cfg, scores, baseline_rows, annotations)
    corr_rows = []
    for metric_id in sorted(metric_vals):
        for dim in OUR_DIMENSIONS:
            keys = sorted(metric_vals[metric_id])
            if len(keys) < 2:
                continue
            xs = [metric_vals[metric_id][k] for k in keys]
            ys = [float(getattr(ann[k], dim)) for k in keys]
            sp = evalstats.spearman(xs, ys)
            kd = evalstats.kendall(xs, ys)
            corr_rows.append([
                metric_id, dim,
                _fmt(sp.coefficient) if not sp.undefined else "undefined",
                _fmt(kd.coefficient) if not kd.undefined else "undefined",
                sp.n,
            ])
    corr_rows.append(["bertscore", "rel", "not implemented", "not implemented", 0])
    _write_table(cfg, "report-correlations",
                 ["metric_id", "dimension", "spearman", "kendall", "n"], corr_rows)

    # System-ranking correlations vs the human relevance ranking.
    exclude = {cfg.ground_truth_system} if cfg.exclude_ground_truth else set()
    human_scores: dict[str, list[float]] = defaultdict(list)
    for a in annotations:
        human_scores[a.system_id].append(evalstats.normalize_likert(a.rel))
    try:
        human_ranking = evalstats.system_ranking(human_scores, exclude=exclude)
    except DataError:
        human_ranking = []
    ranking_rows = []
    if human_ranking:
        per_metric: dict[str, dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
        for rec in scores:
            if cfg.exclude_ground_truth and rec["system_id"] == cfg.ground_truth_system:
                continue
            for dim in OUR_DIMENSIONS:
                per_metric[dim][rec["system_id"]].append(rec[dim])
        for rec in baseline_rows:
            per_metric[rec["metric_id"]][rec["system_id"]].append(rec["value"])
        human_systems = {s for s, _ in human_ranking}
        for metric_id in sorted(per_metric):
            systems = {s for s in per_metric[metric_id] if s not in exclude}
            if systems != human_systems or len(systems) < 2:
                continue
            ranking = evalstats.system_ranking(per_metric[metric_id], exclude=exclude)
            sp, kd = evalstats.ranking_correlation(ranking, human_ranking)
            ranking_rows.append([
                metric_id, _fmt(sp.coefficient), _fmt(sp.p_value),
                _fmt(kd.coefficient), _fmt(kd.p_value), sp.n,
            ])
    ranking_rows.append(["bertscore", "not implemented", "", "", "", 0])
    _write_table(cfg, "report-ranking-correlations",
                 ["metric_id", "spearman", "p_s", "kendall", "p_k", "n_systems"],
                 ranking_rows)
    _echo("report: systems, correlations, and ranking tables written")


def main() -> int:
    """Entry point with the stable exit-code contract."""
    try:
        cli.main(standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.exceptions.Abort:
        return 1
    except click.exceptions.ClickException as exc:
        exc.show()
        return 1
    except ConfigError as exc:
        _echo(f"config error: {exc}")
        return 1
    except ExternalServiceError as exc:
        _echo(f"external service error: {exc}")
        return 3
    except DataError as exc:
        _echo(f"data error: {exc}")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
