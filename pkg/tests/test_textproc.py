"""Sentence splitting, stopword filtering, and claim-list parsing."""

from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from crscore import textproc
from crscore.errors import UnparseableClaimsError
from crscore.textproc import (
    ParsedClaim,
    StopwordLexicon,
    filter_stopwords,
    parse_claims,
    split_sentences,
    tokenize,
)

FIXED_LEX = StopwordLexicon.from_words(
    ["the", "is", "a", "why", "do", "we", "these", "of", "and"], "test-lex"
)


class TestSplitSentences:
    def test_plain_two_sentences(self):
        assert split_sentences("Fix this. Also rename it.") == [
            "Fix this.", "Also rename it.",
        ]

    def test_backticked_dot_does_not_split(self):
        assert split_sentences("Use `foo.bar()`. Then test.") == [
            "Use `foo.bar()`.", "Then test.",
        ]

    def test_empty_input(self):
        assert split_sentences("") == []

    def test_blank_line_splits(self):
        assert split_sentences("first paragraph\n\nsecond one") == [
            "first paragraph", "second one",
        ]

    def test_decimal_number_does_not_split(self):
        assert split_sentences("Version 3.5 is required.") == ["Version 3.5 is required."]

    def test_exclamation_and_question(self):
        assert split_sentences("Really? Yes! Fine.") == ["Really?", "Yes!", "Fine."]

    def test_terminator_run_kept_together(self):
        assert split_sentences("What?! Next.") == ["What?!", "Next."]

    def test_unbalanced_backtick_suppresses_splitting(self):
        text = "Call `obj.method(. and carry on"
        assert split_sentences(text) == [text]

    def test_idempotent_on_own_output(self):
        text = "Use `a.b`. Then run. Maybe 3.5 times! Done?"
        once = split_sentences(text)
        for sent in once:
            assert split_sentences(sent) == [sent]

    def test_reconstructs_source_modulo_whitespace(self):
        text = "One thing. Another!\n\nAnd a paragraph without terminator"
        assert textproc.reconstructs(text, split_sentences(text))

    @given(st.text(alphabet="ab .!?\n`", max_size=80))
    def test_idempotence_property(self, text):
        for sent in split_sentences(text):
            assert split_sentences(sent) == [sent]


class TestTokenizeAndFilter:
    def test_basic_filtering(self):
        lex = StopwordLexicon.from_words(["the", "is"], "t")
        assert filter_stopwords("the function is slow", lex) == ["function", "slow"]

    def test_fixture_sentence(self):
        assert filter_stopwords("Why do we need these imports", FIXED_LEX) == [
            "need", "imports",
        ]

    def test_all_stopwords_yields_empty(self):
        assert filter_stopwords("the of and", FIXED_LEX) == []

    def test_code_span_kept_intact(self):
        assert tokenize("Use `foo.bar()` here") == ["use", "foo.bar()", "here"]

    def test_case_insensitive_removal(self):
        assert filter_stopwords("THE Function", StopwordLexicon.from_words(["the"], "t")) == [
            "function"
        ]

    def test_filter_is_subsequence_of_tokenize(self):
        text = "The quick `fox.run()` jumps over the lazy dog"
        toks = tokenize(text)
        filtered = filter_stopwords(text, FIXED_LEX)
        it = iter(toks)
        assert all(tok in it for tok in filtered)  # order preserved

    @given(st.text(alphabet="abc the`' ", max_size=60))
    def test_filtered_multiset_subset(self, text):
        from collections import Counter

        toks = Counter(tokenize(text))
        filtered = Counter(filter_stopwords(text, FIXED_LEX))
        assert all(filtered[t] <= toks[t] for t in filtered)

    def test_default_lexicon_loads_with_version(self, lexicon):
        assert lexicon.version_tag == "en-classic-v1"
        assert "the" in lexicon
        assert "function" not in lexicon
        assert len(lexicon.words) > 150


class TestSentenceSet:
    def test_embed_texts_rejoin_and_fallback(self, lexicon):
        ss = textproc.sentence_set("d", "The function is slow. Of the and.", lexicon)
        texts = ss.embed_texts()
        assert texts[0] == "function slow"
        # all-stopword sentence falls back to raw lowercased text
        assert texts[1] == "of the and."


class TestParseClaims:
    def test_numbered_items(self):
        items = parse_claims("1. A was added.\n2. B was removed.")
        assert [c.text for c in items] == ["A was added.", "B was removed."]
        assert all(c.kind == "claim" for c in items)

    def test_heading_tags_implications(self):
        items = parse_claims("Claims:\n- x was changed\nImplications:\n- y may break")
        assert items == [
            ParsedClaim("x was changed", "claim"),
            ParsedClaim("y may break", "implication"),
        ]

    def test_unparseable_raises(self):
        with pytest.raises(UnparseableClaimsError):
            parse_claims("I cannot analyze this.")

    def test_multiline_item_joined(self):
        items = parse_claims("1. first line\n   continues here.\n2. second.")
        assert items[0].text == "first line continues here."
        assert items[1].text == "second."

    def test_paren_numbering_and_stars(self):
        items = parse_claims("1) one\n* two\n+ three")
        assert [c.text for c in items] == ["one", "two", "three"]

    def test_no_empty_or_heading_items(self):
        items = parse_claims("Claims:\n1. real item\nImplications:")
        assert items == [ParsedClaim("real item", "claim")]
        assert all(c.text.strip() for c in items)
