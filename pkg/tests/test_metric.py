"""Core metric: similarity matrices, thresholded scoring, calibration,
threshold sweep, and the similarity-pair classifier."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crscore.corpus import AnnotationRecord
from crscore.embed import DeterministicProvider
from crscore.errors import DataError
from crscore.metric import (
    PAPER_BEST_TAU,
    PAPER_GT_TAU,
    SimilarityMatrix,
    ThresholdConfig,
    calibrate_threshold,
    pref_embed_text,
    score,
    similarity_matrix,
    sts_classifier_eval,
    threshold_sweep,
)
from crscore.pseudoref import PseudoRef
from crscore.textproc import StopwordLexicon, sentence_set

import oracles

LEX = StopwordLexicon.from_words(["the", "a", "is", "was", "in", "of"], "test")


def matrix(values, change_id="c", system_id="s"):
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 2:
        arr = arr.reshape((0, 0))
    return SimilarityMatrix(
        change_id=change_id,
        system_id=system_id,
        pref_ids=[f"p{i}" for i in range(arr.shape[0])],
        sent_index=list(range(arr.shape[1])),
        values=arr,
    )


class TestThresholdConfig:
    def test_paper_values(self):
        assert ThresholdConfig.paper_best().tau == PAPER_BEST_TAU == 0.7314
        assert ThresholdConfig.paper_gt().tau == PAPER_GT_TAU == 0.6576

    def test_range_enforced(self):
        for bad in (0.0, 1.0, -0.1, 1.5):
            with pytest.raises(DataError):
                ThresholdConfig(bad)


class TestScore:
    def test_single_high_cell(self):
        t = score(matrix([[0.9]]), ThresholdConfig(0.7314))
        assert (t.con, t.comp, t.rel) == (1.0, 1.0, 1.0)

    def test_two_by_two_hand_case(self):
        t = score(matrix([[0.8, 0.2], [0.3, 0.1]]), ThresholdConfig(0.7))
        assert (t.con, t.comp, t.rel) == (0.5, 0.5, 0.5)

    def test_harmonic_mean_with_zero_side(self):
        t = score(matrix([[0.9, 0.9], [0.0, 0.0]]), ThresholdConfig(0.5))
        assert t.con == 1.0 and t.comp == 0.5
        assert t.rel == pytest.approx(2 * 1.0 * 0.5 / 1.5)

    def test_strict_inequality_at_threshold(self):
        t = score(matrix([[0.7314]]), ThresholdConfig(0.7314))
        assert (t.con, t.comp, t.rel) == (0.0, 0.0, 0.0)

    @pytest.mark.parametrize("n_prefs,n_sents,flags", [
        (0, 3, {"empty_prefs"}),
        (3, 0, {"empty_sents"}),
        (0, 0, {"empty_prefs", "empty_sents"}),
    ])
    def test_degenerate_cases(self, n_prefs, n_sents, flags):
        values = np.zeros((n_prefs, n_sents))
        t = score(matrix(values), ThresholdConfig(0.5))
        assert (t.con, t.comp, t.rel) == (0.0, 0.0, 0.0)
        assert t.degenerate_flags == flags
        assert (t.n_prefs, t.n_sents) == (n_prefs, n_sents)

    def test_matches_brute_force_oracle_on_random_matrices(self):
        rng = np.random.default_rng(42)
        for _ in range(300):
            p = int(rng.integers(0, 6))
            r = int(rng.integers(0, 6))
            values = rng.uniform(-1, 1, size=(p, r))
            for tau in (0.3, 0.5, 0.7314):
                mine = score(matrix(values), ThresholdConfig(tau))
                con, comp, rel = oracles.brute_force_score(values.tolist(), tau)
                assert (mine.con, mine.comp, mine.rel) == (con, comp, rel)

    @settings(max_examples=80, deadline=None)
    @given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 10**6))
    def test_monotonic_in_tau(self, p, r, seed):
        values = np.random.default_rng(seed).uniform(0, 1, size=(p, r))
        taus = np.linspace(0.05, 0.95, 12)
        triples = [score(matrix(values), ThresholdConfig(t)) for t in taus]
        for a, b in zip(triples, triples[1:]):
            assert b.con <= a.con
            assert b.comp <= a.comp

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 10**6))
    def test_permutation_invariance(self, p, r, seed):
        rng = np.random.default_rng(seed)
        values = rng.uniform(-1, 1, size=(p, r))
        th = ThresholdConfig(0.5)
        base = score(matrix(values), th)
        shuffled = values[rng.permutation(p)][:, rng.permutation(r)]
        other = score(matrix(shuffled), th)
        assert (base.con, base.comp, base.rel) == (other.con, other.comp, other.rel)

    def test_appending_low_column_decreases_con_keeps_comp(self):
        values = np.array([[0.9, 0.2], [0.1, 0.8]])
        th = ThresholdConfig(0.7)
        base = score(matrix(values), th)
        low_col = np.array([[0.3], [0.3]])
        extended = score(matrix(np.hstack([values, low_col])), th)
        assert extended.con < base.con or base.con == 0.0
        assert extended.comp == base.comp

    def test_appending_high_column_never_decreases_comp(self):
        values = np.array([[0.9, 0.2], [0.1, 0.2]])
        th = ThresholdConfig(0.7)
        base = score(matrix(values), th)
        high_col = np.array([[0.1], [0.95]])
        extended = score(matrix(np.hstack([values, high_col])), th)
        assert extended.comp >= base.comp

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 10**6))
    def test_rel_bounds(self, p, r, seed):
        values = np.random.default_rng(seed).uniform(0, 1, size=(p, r))
        t = score(matrix(values), ThresholdConfig(0.5))
        if t.con + t.comp > 0:
            assert min(t.con, t.comp) - 1e-12 <= t.rel <= max(t.con, t.comp) + 1e-12
        else:
            assert t.rel == 0.0
        if t.con == t.comp:
            assert t.rel == pytest.approx(t.con)


def pref(change_id, k, text):
    return PseudoRef(id=f"{change_id}#{k}", change_id=change_id, kind="claim",
                     text=text, source="llm:stub")


class TestSimilarityMatrix:
    def test_identical_text_scores_one(self):
        provider = DeterministicProvider(seed=0)
        sents = sentence_set("c/s", "The function is slow.", LEX)
        m = similarity_matrix([pref("c", 0, "function slow")], sents, provider,
                              lexicon=LEX)
        assert m.values.shape == (1, 1)
        assert m.values[0, 0] == pytest.approx(1.0, abs=1e-12)

    def test_matches_independent_hashbag_reimplementation(self):
        provider = DeterministicProvider(seed=0)
        sents = sentence_set("c/s", "Alpha beta gamma. Delta epsilon.", LEX)
        prefs = [pref("c", 0, "alpha beta"), pref("c", 1, "zeta eta theta")]
        m = similarity_matrix(prefs, sents, provider, lexicon=LEX)
        sent_texts = sents.embed_texts()
        for i, p in enumerate(prefs):
            for j, s in enumerate(sent_texts):
                expected = oracles.cosine_oracle(
                    oracles.hashbag_vector(pref_embed_text(p.text, LEX)),
                    oracles.hashbag_vector(s),
                )
                assert m.values[i, j] == pytest.approx(expected, abs=1e-9)

    def test_zero_sentences_no_error(self):
        provider = DeterministicProvider(seed=0)
        sents = sentence_set("c/s", "", LEX)
        m = similarity_matrix([pref("c", 0, "anything")], sents, provider, lexicon=LEX)
        assert m.values.shape == (1, 0)

    def test_pref_texts_stopword_filtered_before_embedding(self):
        provider = DeterministicProvider(seed=0)
        sents = sentence_set("c/s", "function slow", LEX)
        m = similarity_matrix(
            [pref("c", 0, "The function is slow")], sents, provider, lexicon=LEX
        )
        assert m.values[0, 0] == pytest.approx(1.0, abs=1e-12)

    def test_shape_validation(self):
        with pytest.raises(DataError, match="shape"):
            SimilarityMatrix("c", "s", ["p0"], [0, 1], np.zeros((1, 1)))

    def test_non_finite_rejected(self):
        with pytest.raises(DataError, match="finite"):
            SimilarityMatrix("c", "s", ["p0"], [0], np.array([[np.nan]]))


class TestCalibration:
    def test_single_sentence_max(self):
        m = matrix([[0.4], [0.9]])
        result = calibrate_threshold([m])
        assert result.threshold.tau == pytest.approx(0.9)
        assert result.threshold.provenance == "calibrated"

    def test_mean_of_maxima(self):
        m = matrix([[0.9, 0.5], [0.1, 0.2]])
        result = calibrate_threshold([m])
        assert result.threshold.tau == pytest.approx((0.9 + 0.5) / 2)

    def test_zero_pref_changes_skipped_and_counted(self):
        with_prefs = matrix([[0.6, 0.8]])
        no_prefs = matrix(np.zeros((0, 3)))
        result = calibrate_threshold([with_prefs, no_prefs])
        assert result.threshold.tau == pytest.approx(0.7)
        assert result.n_sentences == 2
        assert result.n_skipped_sentences == 3

    def test_no_eligible_sentences_is_error(self):
        with pytest.raises(DataError, match="calibration"):
            calibrate_threshold([matrix(np.zeros((0, 2)))])

    def test_synthetic_known_maxima(self):
        rng = np.random.default_rng(11)
        mats = []
        maxima = []
        for i in range(50):
            p, r = int(rng.integers(1, 5)), int(rng.integers(1, 4))
            values = rng.uniform(0, 1, size=(p, r))
            maxima.extend(values.max(axis=0).tolist())
            mats.append(matrix(values, change_id=f"c{i}"))
        result = calibrate_threshold(mats)
        assert result.threshold.tau == pytest.approx(np.mean(maxima), abs=1e-12)


def ann(change_id, system_id, rel):
    return AnnotationRecord(change_id=change_id, system_id=system_id,
                            con=rel, comp=rel, rel=rel)


class TestThresholdSweep:
    def test_rows_in_grid_order_and_correlations(self):
        mats = [
            matrix([[0.9]], change_id="c1", system_id="s"),
            matrix([[0.6]], change_id="c2", system_id="s"),
            matrix([[0.3]], change_id="c3", system_id="s"),
        ]
        annotations = [ann("c1", "s", 5), ann("c2", "s", 3), ann("c3", "s", 1)]
        rows = threshold_sweep(mats, annotations, [0.5, 0.7])
        assert [r.tau for r in rows] == [0.5, 0.7]
        # tau=0.5: rels are 1,1,0 vs human 5,3,1 -> positive correlation
        assert rows[0].spearman.coefficient > 0

    def test_constant_human_scores_yield_nan_marker(self):
        mats = [
            matrix([[0.9]], change_id="c1", system_id="s"),
            matrix([[0.1]], change_id="c2", system_id="s"),
        ]
        annotations = [ann("c1", "s", 3), ann("c2", "s", 3)]
        rows = threshold_sweep(mats, annotations, [0.5])
        assert rows[0].spearman.undefined
        assert np.isnan(rows[0].spearman.coefficient)

    def test_alignment_failure_lists_ids(self):
        mats = [matrix([[0.9]], change_id="c1", system_id="s")]
        with pytest.raises(DataError, match="c1"):
            threshold_sweep(mats, [ann("cX", "s", 3)], [0.5])

    def test_empty_pref_instances_excluded(self):
        mats = [
            matrix([[0.9]], change_id="c1", system_id="s"),
            matrix([[0.1]], change_id="c2", system_id="s"),
            matrix(np.zeros((0, 2)), change_id="c3", system_id="s"),
        ]
        annotations = [ann("c1", "s", 5), ann("c2", "s", 1), ann("c3", "s", 3)]
        rows = threshold_sweep(mats, annotations, [0.5])
        assert rows[0].n == 2


class TestStsClassifierEval:
    def test_all_correct(self):
        result = sts_classifier_eval([(0.9, True), (0.1, False)], 0.5)
        assert (result.precision, result.recall, result.f1) == (1.0, 1.0, 1.0)

    def test_confusion_fixture(self):
        pairs = (
            [(0.9, True)] * 2      # TP
            + [(0.9, False)] * 2   # FP
            + [(0.1, True)] * 1    # FN
        )
        result = sts_classifier_eval(pairs, 0.5)
        assert result.precision == pytest.approx(0.5)
        assert result.recall == pytest.approx(2 / 3)
        assert result.f1 == pytest.approx(4 / 7)

    def test_zero_denominator_conventions(self):
        none_predicted = sts_classifier_eval([(0.1, True)], 0.5)
        assert none_predicted.precision == 0.0
        no_positives = sts_classifier_eval([(0.9, False)], 0.5)
        assert no_positives.recall == 0.0
        assert no_positives.f1 == 0.0

    def test_empty_pairs_error(self):
        with pytest.raises(DataError, match="empty"):
            sts_classifier_eval([], 0.5)

    def test_strict_threshold(self):
        result = sts_classifier_eval([(0.5, True)], 0.5)
        assert result.recall == 0.0  # equality does not predict coverage
