"""Pseudo-reference production: LLM claims, analyzer adapters, assembly."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import pytest

from crscore.corpus import CodeChange, Language, parse_unified_diff
from crscore.errors import (
    AnalyzerError,
    AnalyzerTimeoutError,
    AnalyzerUnavailableError,
    DataError,
    TransportError,
    UnparseableClaimsError,
)
from crscore.pseudoref import (
    AnalyzerSpec,
    LlmClient,
    LlmClientConfig,
    PseudoRef,
    SmellFinding,
    assemble_pseudorefs,
    cyclomatic_rank,
    detect_smells,
    generate_claims,
    load_claim_prompt,
    rank_is_flagged,
    render_smell,
    run_analyzer,
    smell_delta,
)

TOOLS = Path(__file__).parent / "fixtures" / "tools"


def change(diff="@@ -1,1 +1,1 @@\n-a\n+b\n", lang="py", cid="cx", **kw):
    return CodeChange(cid, Language.from_string(lang), diff, **kw)


class TestPseudoRefType:
    def test_smell_requires_analyzer_source(self):
        with pytest.raises(DataError, match="analyzer"):
            PseudoRef("i", "c", "smell", "text", "llm:m")

    def test_verdict_values(self):
        ref = PseudoRef("i", "c", "claim", "text", "llm:m", verdict="unverifiable")
        assert ref.verdict == "unverifiable"
        with pytest.raises(DataError):
            PseudoRef("i", "c", "claim", "text", "llm:m", verdict="bogus")

    def test_human_added_smell(self):
        ref = PseudoRef("i", "c", "issue", "text", "analyzer:human", verdict="added")
        assert ref.source == "analyzer:human"

    def test_empty_text_rejected(self):
        with pytest.raises(DataError, match="non-empty"):
            PseudoRef("i", "c", "claim", "  ", "llm:m")


class TestLlmClient:
    def _config(self, tmp_path, **kw):
        return LlmClientConfig(endpoint="http://unused", model="m",
                               cache_dir=str(tmp_path / "llmcache"), **kw)

    def test_cache_hit_issues_no_transport_call(self, tmp_path):
        replies = iter([{"choices": [{"message": {"content": "1. A claim."}}]}])

        def transport(payload):
            return next(replies)

        cfg = self._config(tmp_path)
        client = LlmClient(cfg, transport=transport)
        msg = [{"role": "user", "content": "hi"}]
        first = client.complete(msg, key_parts=("k",))

        def exploding(payload):
            raise AssertionError("transport must not be called on cache hit")

        warm = LlmClient(cfg, transport=exploding)
        assert warm.complete(msg, key_parts=("k",)) == first

    def test_retries_then_error(self, tmp_path):
        calls = {"n": 0}

        def failing(payload):
            calls["n"] += 1
            raise TransportError("boom 500")

        cfg = self._config(tmp_path, retry_attempts=3, retry_backoff_s=0.0)
        client = LlmClient(cfg, transport=failing)
        with pytest.raises(TransportError, match="3 attempts"):
            client.complete([{"role": "user", "content": "x"}], key_parts=("k2",))
        assert calls["n"] == 3

    def test_cache_entry_has_request_response_timestamp(self, tmp_path):
        def transport(payload):
            return {"choices": [{"message": {"content": "ok"}}]}

        cfg = self._config(tmp_path)
        client = LlmClient(cfg, transport=transport)
        client.complete([{"role": "user", "content": "x"}], key_parts=("k3",))
        entries = list(Path(cfg.cache_dir).glob("*.json"))
        assert len(entries) == 1
        entry = json.loads(entries[0].read_text())
        assert set(entry) == {"request", "response", "timestamp"}
        assert entry["request"]["model"] == "m"

    def test_config_validation(self):
        with pytest.raises(DataError):
            LlmClientConfig(temperature=-0.5)
        with pytest.raises(DataError):
            LlmClientConfig(retry_attempts=0)


class TestGenerateClaims:
    def _client(self, tmp_path, replies):
        replies = list(replies)
        state = {"n": 0}

        def transport(payload):
            text = replies[min(state["n"], len(replies) - 1)]
            state["n"] += 1
            return {"choices": [{"message": {"content": text}}]}

        cfg = LlmClientConfig(endpoint="http://unused", model="gen",
                              cache_dir=str(tmp_path / "cache"))
        return LlmClient(cfg, transport=transport), state

    def test_claims_and_implications_mapped(self, tmp_path):
        client, _ = self._client(
            tmp_path, ["1. Adds a null check.\nImplications:\n- Prevents crash."]
        )
        refs = generate_claims(change(cid="c7"), client)
        assert [(r.kind, r.text) for r in refs] == [
            ("claim", "Adds a null check."),
            ("implication", "Prevents crash."),
        ]
        assert all(r.source == "llm:gen" for r in refs)
        assert all(r.change_id == "c7" for r in refs)

    def test_reprompt_once_then_succeed(self, tmp_path):
        client, state = self._client(tmp_path, ["I cannot analyze this.", "- fixed now"])
        refs = generate_claims(change(), client)
        assert [r.text for r in refs] == ["fixed now"]
        assert state["n"] == 2

    def test_unparseable_after_retry_errors(self, tmp_path):
        client, _ = self._client(tmp_path, ["nope", "still nope"])
        with pytest.raises(UnparseableClaimsError, match="cx"):
            generate_claims(change(), client)

    def test_warm_cache_rerun_identical(self, tmp_path):
        client, state = self._client(tmp_path, ["1. First claim."])
        first = generate_claims(change(), client)
        again = generate_claims(change(), client)
        assert state["n"] == 1
        assert [r.text for r in first] == [r.text for r in again]

    def test_template_diff_slot(self, tmp_path):
        seen = {}

        def transport(payload):
            seen["prompt"] = payload["messages"][0]["content"]
            return {"choices": [{"message": {"content": "- x"}}]}

        cfg = LlmClientConfig(endpoint="http://unused", model="gen")
        client = LlmClient(cfg, transport=transport)
        generate_claims(change(), client, prompt_template="DIFF:\n{diff}\nEND")
        assert "@@ -1,1 +1,1 @@" in seen["prompt"]
        assert "{diff}" not in seen["prompt"]

    def test_default_template_ships_with_diff_slot(self):
        assert "{diff}" in load_claim_prompt()


def json_tool_spec(**kw):
    defaults = dict(
        name="fake-json", language="python",
        argv=[sys.executable, str(TOOLS / "fake_smells.py"), "{file}"],
        parser="json",
    )
    defaults.update(kw)
    return AnalyzerSpec(**defaults)


class TestRunAnalyzer:
    def test_json_findings_and_nonzero_exit_ok(self, tmp_path):
        target = tmp_path / "code.py"
        target.write_text("clean line\nthis is smelly code\n")
        findings = run_analyzer(json_tool_spec(), target)
        assert len(findings) == 1
        f = findings[0]
        assert (f.rule_id, f.line_start) == ("smelly-line", 2)
        assert f.tool == "fake-json"

    def test_empty_file_no_findings(self, tmp_path):
        target = tmp_path / "code.py"
        target.write_text("nothing here\n")
        assert run_analyzer(json_tool_spec(), target) == []

    def test_line_regex_parser(self, tmp_path):
        spec = AnalyzerSpec(
            name="fake-lines", language="python",
            argv=[sys.executable, str(TOOLS / "fake_lines.py"), "{file}"],
            parser="line-regex",
            regex=r"^(?:[^:\n]+):(?P<line>\d+):\s*(?P<rule>[\w.-]+):\s*(?P<message>.+)$",
        )
        target = tmp_path / "code.py"
        target.write_text("fine\n# TODO fix this\n")
        findings = run_analyzer(spec, target)
        assert len(findings) == 1
        assert findings[0].rule_id == "todo-marker"
        assert findings[0].line_start == 2

    def test_missing_binary_is_unavailable_error(self, tmp_path):
        spec = json_tool_spec(argv=["definitely-not-a-real-tool", "{file}"])
        target = tmp_path / "code.py"
        target.write_text("x\n")
        with pytest.raises(AnalyzerUnavailableError, match="analyzer unavailable"):
            run_analyzer(spec, target)

    def test_timeout(self, tmp_path):
        spec = json_tool_spec(
            argv=[sys.executable, str(TOOLS / "sleeper.py"), "{file}"], timeout_s=0.3
        )
        target = tmp_path / "code.py"
        target.write_text("x\n")
        with pytest.raises(AnalyzerTimeoutError, match="timed out"):
            run_analyzer(spec, target)

    def test_nonzero_exit_without_findings_is_error(self, tmp_path):
        bad = tmp_path / "crasher.py"
        bad.write_text("import sys; sys.stderr.write('boom'); sys.exit(2)\n")
        spec = json_tool_spec(argv=[sys.executable, str(bad)])
        target = tmp_path / "code.py"
        target.write_text("x\n")
        with pytest.raises(AnalyzerError, match="exited 2"):
            run_analyzer(spec, target)


def finding(rule, message, start, end=None, tool="t"):
    return SmellFinding(tool=tool, rule_id=rule, message=message, file="f.py",
                        line_start=start, line_end=end if end is not None else start)


class TestSmellDelta:
    def test_new_finding_kept(self):
        after = [finding("r1", "new issue", 3)]
        assert smell_delta([], after, []) == after

    def test_unchanged_finding_outside_hunks_dropped(self):
        same = finding("r1", "old issue", 3)
        assert smell_delta([same], [same], []) == []

    def test_identity_is_empty_for_any_set(self):
        items = [finding("r1", "a", 1), finding("r2", "b", 5, 9)]
        assert smell_delta(items, items, []) == []

    def test_same_key_but_touching_added_lines_kept(self):
        hunks = parse_unified_diff("@@ -4,2 +4,3 @@\n ctx\n+added\n ctx2\n")
        # added line lands at new-file line 5
        before = [finding("r1", "persistent", 5)]
        after = [finding("r1", "persistent", 5)]
        assert smell_delta(before, after, hunks) == after

    def test_three_finding_fixture(self):
        hunks = parse_unified_diff("@@ -10,2 +10,3 @@\n a\n+new line\n b\n")
        before = [finding("dup", "kept both sides", 2),
                  finding("gone", "fixed by change", 1)]
        after = [finding("dup", "kept both sides", 2),       # untouched -> drop
                 finding("dup", "kept both sides", 11),      # overlaps line 11 -> keep
                 finding("fresh", "introduced", 2)]          # new key -> keep
        result = smell_delta(before, after, hunks)
        assert result == after[1:]


class TestCyclomaticRank:
    @pytest.mark.parametrize("score,rank", [
        (1, "A"), (5, "A"), (6, "B"), (7, "B"), (10, "B"),
        (11, "C"), (20, "C"), (21, "D"), (30, "D"),
        (31, "E"), (40, "E"), (41, "F"), (100, "F"),
    ])
    def test_rank_table(self, score, rank):
        assert cyclomatic_rank(score) == rank

    @pytest.mark.parametrize("rank,flagged", [
        ("A", False), ("B", False), ("C", True), ("D", True), ("E", True), ("F", True),
    ])
    def test_flagging(self, rank, flagged):
        assert rank_is_flagged(rank) is flagged

    def test_score_below_one(self):
        with pytest.raises(DataError):
            cyclomatic_rank(0)

    def test_unknown_rank(self):
        with pytest.raises(DataError):
            rank_is_flagged("G")


class TestDetectSmells:
    def test_delta_mode_keeps_only_change_caused_findings(self, tmp_path):
        # before has one smelly line; the diff adds a second one
        diff = "@@ -1,2 +1,3 @@\n clean line\n+this is smelly too\n smelly original\n"
        before = "clean line\nsmelly original\n"
        ch = change(diff=diff, before_text=before, cid="sm1")
        findings = detect_smells(ch, json_tool_spec())
        assert [f.line_start for f in findings] == [2]

    def test_whole_file_mode(self, tmp_path):
        diff = "@@ -1,2 +1,3 @@\n clean line\n+this is smelly too\n smelly original\n"
        before = "clean line\nsmelly original\n"
        ch = change(diff=diff, before_text=before, cid="sm2")
        findings = detect_smells(ch, json_tool_spec(), whole_file=True)
        assert [f.line_start for f in findings] == [2, 3]

    def test_language_mismatch(self):
        ch = change(lang="java")
        with pytest.raises(DataError, match="handles 'python'"):
            detect_smells(ch, json_tool_spec())

    def test_file_label_uses_meta_path(self, tmp_path):
        diff = "@@ -1,1 +1,2 @@\n x\n+smelly addition\n"
        ch = change(diff=diff, before_text="x\n", cid="sm3")
        ch.meta["path"] = "pkg/module.py"
        findings = detect_smells(ch, json_tool_spec())
        assert findings[0].file == "module.py"


class TestRenderAndAssemble:
    def test_render_smell_sentence(self):
        f = finding("r", "method too long", 3, 9, tool="pysmell")
        assert render_smell(f) == "pysmell: method too long at lines 3–9 of f.py"

    def test_assemble_orders_and_ids(self):
        claims = [
            PseudoRef("tmp0", "c1", "claim", "Claim one.", "llm:m"),
            PseudoRef("tmp1", "c1", "implication", "Implication.", "llm:m"),
        ]
        smells = [finding("r", "msg", 1, tool="tool")]
        combined = assemble_pseudorefs(claims, smells, change_id="c1")
        assert [r.id for r in combined] == ["c1#0", "c1#1", "c1#2"]
        assert combined[2].kind == "smell"
        assert combined[2].source == "analyzer:tool"

    def test_duplicate_texts_deduplicated_keeping_first(self):
        claims = [
            PseudoRef("a", "c1", "claim", "Same text.", "llm:m"),
            PseudoRef("b", "c1", "claim", "same TEXT.", "llm:m"),
        ]
        combined = assemble_pseudorefs(claims, [], change_id="c1")
        assert len(combined) == 1
        assert combined[0].kind == "claim"

    def test_empty_combined_set_is_legal(self):
        assert assemble_pseudorefs([], [], change_id="c1") == []

    def test_mixed_change_ids_rejected(self):
        claims = [
            PseudoRef("a", "c1", "claim", "One.", "llm:m"),
            PseudoRef("b", "c2", "claim", "Two.", "llm:m"),
        ]
        with pytest.raises(DataError, match="multiple changes"):
            assemble_pseudorefs(claims, [])

    def test_issue_kind_for_linter_tools(self):
        combined = assemble_pseudorefs([], [finding("r", "m", 1)], smell_kind="issue",
                                       change_id="c3")
        assert combined[0].kind == "issue"
        assert combined[0].id == "c3#0"
