import math
import random

import pytest

from xlrobust.corpus import BioTag
from xlrobust.errors import AlignmentError, DataError, StatsError
from xlrobust.overlap import OverlapReport
from xlrobust.score import (
    average_runs,
    delta_overlap_report,
    format_delta_overlap_csv,
    paired_ttest,
    parse_tag_file,
    read_results_csv,
    regularized_incomplete_beta,
    score_ner,
    score_title,
    significance_table,
    student_t_two_tailed,
)
from xlrobust.seeds import SeedStream
from xlrobust.titletask import TitleDataset, TitleExample

from conftest import corpus_of

GOLD_20 = ["B-PER", "I-PER", "O", "O", "B-LOC", "I-LOC", "I-LOC", "O", "B-ORG", "O",
           "B-PER", "O", "O", "B-LOC", "O", "O", "B-ORG", "I-ORG", "O", "O"]


def corpus_with_tags(tags):
    return corpus_of([[(f"w{i}", tag) for i, tag in enumerate(tags)]])


def tags(names):
    return [BioTag.parse(t) for t in names]


class TestScoreNer:
    def test_perfect_predictions(self):
        gold = corpus_with_tags(GOLD_20)
        report = score_ner(gold, tags(GOLD_20))
        assert report.macro_f1 == 1.0
        assert report.entity_f1 == 1.0
        assert all(v == 1.0 for v in report.per_class_f1.values())

    def test_all_outside_predictions(self):
        gold = corpus_with_tags(GOLD_20)
        report = score_ner(gold, tags(["O"] * 20))
        assert report.macro_f1 == 0.0
        assert report.entity_f1 == 0.0

    def test_hand_computed_boundary_error_fixture(self):
        # One boundary error: the LOC chunk [4,7) is predicted as [4,6).
        predicted = list(GOLD_20)
        predicted[6] = "O"
        report = score_ner(corpus_with_tags(GOLD_20), tags(predicted))
        # token level: only I-LOC is hurt (tp=1, fn=1 -> F1 = 2/3); 5 classes stay 1.0
        assert report.per_class_f1["I-LOC"] == pytest.approx(2 / 3, abs=1e-12)
        assert report.macro_f1 == pytest.approx(17 / 18, abs=1e-12)
        # chunk level: 6 gold chunks, 6 predicted, 5 exact matches
        assert report.entity_f1 == pytest.approx(5 / 6, abs=1e-12)

    def test_alignment_mismatch_reports_position(self):
        gold = corpus_with_tags(["O", "O", "B-LOC"])
        with pytest.raises(AlignmentError) as excinfo:
            score_ner(gold, tags(["O", "O"]))
        assert excinfo.value.position == 2

    def test_per_class_keys_come_from_gold(self):
        gold = corpus_with_tags(["O", "B-LOC"])
        report = score_ner(gold, tags(["B-MISC", "B-LOC"]))
        assert set(report.per_class_f1) == {"B-LOC"}

    def test_parse_tag_file(self):
        parsed = parse_tag_file("O\nB-LOC\n\nI-LOC\n")
        assert [str(t) for t in parsed] == ["O", "B-LOC", "I-LOC"]


def title_gold(answers):
    return TitleDataset("xx", tuple(
        TitleExample(f"text {i}", ("A", "B", "C", "D"), a, f"p{i}")
        for i, a in enumerate(answers)))


class TestScoreTitle:
    def test_all_correct(self):
        gold = title_gold([0, 1, 2, 3])
        assert score_title(gold, [0, 1, 2, 3]).accuracy == 1.0

    def test_three_of_four(self):
        gold = title_gold([0, 1, 2, 3])
        assert score_title(gold, [0, 1, 2, 0]).accuracy == 0.75

    def test_out_of_range_prediction(self):
        gold = title_gold([0])
        with pytest.raises(DataError):
            score_title(gold, [4])

    def test_length_mismatch(self):
        gold = title_gold([0, 1])
        with pytest.raises(AlignmentError):
            score_title(gold, [0])

    def test_uniform_random_predictions_near_chance(self):
        gen = SeedStream(2024).generator()
        answers = [int(gen.integers(0, 4)) for _ in range(100_000)]
        gold = title_gold(answers)
        predictions = [int(gen.integers(0, 4)) for _ in range(100_000)]
        accuracy = score_title(gold, predictions).accuracy
        assert abs(accuracy - 0.25) < 0.01


class TestAverageRuns:
    def reports(self, values):
        return [score_ner(corpus_with_tags(["B-LOC", "O"]), tags([p, "O"]))
                for p in values]

    def test_single_report_is_itself(self):
        report = self.reports(["B-LOC"])[0]
        assert average_runs([report]) == report

    def test_mean_of_three(self):
        from xlrobust.score import ScoreReport
        reports = [ScoreReport("ner", 5, macro_f1=v, per_class_f1={"B-LOC": v}, entity_f1=v)
                   for v in (0.8, 0.9, 1.0)]
        averaged = average_runs(reports)
        assert averaged.macro_f1 == pytest.approx(0.9)
        assert averaged.per_class_f1["B-LOC"] == pytest.approx(0.9)

    def test_permutation_invariant(self):
        from xlrobust.score import ScoreReport
        reports = [ScoreReport("title", 9, accuracy=v) for v in (0.2, 0.5, 0.95)]
        assert average_runs(reports) == average_runs(list(reversed(reports)))

    def test_label_set_mismatch_rejected(self):
        from xlrobust.score import ScoreReport
        a = ScoreReport("ner", 5, macro_f1=1.0, per_class_f1={"B-LOC": 1.0}, entity_f1=1.0)
        b = ScoreReport("ner", 5, macro_f1=1.0, per_class_f1={"B-PER": 1.0}, entity_f1=1.0)
        with pytest.raises(DataError):
            average_runs([a, b])

    def test_item_count_mismatch_rejected(self):
        from xlrobust.score import ScoreReport
        a = ScoreReport("title", 5, accuracy=1.0)
        b = ScoreReport("title", 6, accuracy=1.0)
        with pytest.raises(DataError):
            average_runs([a, b])


class TestIncompleteBeta:
    def test_against_scipy_grid(self):
        scipy_special = pytest.importorskip("scipy.special")
        for a in (0.5, 1.0, 2.5, 6.0, 12.5):
            for b in (0.5, 1.0, 3.5, 9.0):
                for x in (0.0, 1e-6, 0.1, 0.37, 0.5, 0.82, 0.999, 1.0):
                    expected = float(scipy_special.betainc(a, b, x))
                    assert regularized_incomplete_beta(a, b, x) == pytest.approx(
                        expected, abs=1e-10)

    def test_two_tailed_closed_form_df2(self):
        # For df=2 the two-tailed p has the closed form 1 - |t|/sqrt(2 + t^2).
        for t in (0.5, 1.0, 2.0, 4.0, 10.0):
            expected = 1 - t / math.sqrt(2 + t * t)
            assert student_t_two_tailed(t, 2) == pytest.approx(expected, abs=1e-12)


class TestPairedTTest:
    def test_hand_computed_fixture(self):
        result = paired_ttest([90, 85, 80], [88, 84, 79])
        assert result.t_statistic == pytest.approx(-4.0, abs=1e-12)
        assert result.degrees_of_freedom == 2
        assert result.mean_delta == pytest.approx(-4 / 3, abs=1e-12)
        assert result.p_value == pytest.approx(0.0572, abs=0.0005)
        assert 0.05 < result.p_value < 0.06

    def test_constant_shift_zero_variance_error(self):
        with pytest.raises(StatsError):
            paired_ttest([1.0, 2.0, 3.0], [2.0, 3.0, 4.0])

    def test_too_few_pairs(self):
        with pytest.raises(StatsError):
            paired_ttest([1.0], [2.0])

    def test_swapping_sides_negates_t_and_keeps_p(self):
        baseline = [90, 85, 80, 70]
        perturbed = [88, 86, 78, 69]
        forward = paired_ttest(baseline, perturbed)
        backward = paired_ttest(perturbed, baseline)
        assert forward.t_statistic == pytest.approx(-backward.t_statistic, abs=1e-12)
        assert forward.p_value == pytest.approx(backward.p_value, abs=1e-12)
        assert forward.mean_delta == pytest.approx(-backward.mean_delta, abs=1e-12)

    def test_matches_scipy_on_random_data(self):
        scipy_stats = pytest.importorskip("scipy.stats")
        rnd = random.Random(55)
        for _ in range(50):
            n = rnd.randint(3, 25)
            baseline = [rnd.uniform(0, 100) for _ in range(n)]
            perturbed = [b + rnd.uniform(-20, 20) for b in baseline]
            ours = paired_ttest(baseline, perturbed)
            t_ref, p_ref = scipy_stats.ttest_rel(perturbed, baseline)
            assert ours.t_statistic == pytest.approx(float(t_ref), rel=1e-9)
            assert ours.p_value == pytest.approx(float(p_ref), abs=1e-9)


class TestSignificanceTable:
    def test_known_cells_from_results_fixture(self, data_dir):
        with open(data_dir / "results_ner.csv", encoding="utf-8") as fh:
            rows = read_results_csv(fh)
        table = {(r.condition, r.rule): r for r in significance_table(rows)}
        native_p5 = table[("mbert-native", "p5")]
        assert native_p5.mean_delta == pytest.approx(-16.71, abs=0.01)
        assert native_p5.p_value < 0.0001
        native_p1 = table[("mbert-native", "p1")]
        assert native_p1.mean_delta == pytest.approx(-1.00, abs=0.01)
        assert native_p1.p_value == pytest.approx(0.0118, abs=0.0005)
        transfer_p2 = table[("mbert-transfer", "p2")]
        assert transfer_p2.mean_delta == pytest.approx(2.15, abs=0.01)

    def test_partial_rule_column_rejected(self):
        rows = [
            {"pair": "a-b", "condition": "c", "base": 1.0, "p1": 0.5,
             "p2": None, "p3": None, "p4": None, "p5": None},
            {"pair": "c-d", "condition": "c", "base": 1.0, "p1": None,
             "p2": None, "p3": None, "p4": None, "p5": None},
        ]
        with pytest.raises(DataError):
            significance_table(rows)

    def test_missing_columns_rejected(self):
        with pytest.raises(DataError):
            read_results_csv("pair,base\na-b,1.0\n")


class TestDeltaOverlapReport:
    def test_single_pair_row(self):
        rows = delta_overlap_report({"es-an": OverlapReport(4626, 10000)},
                                    {"es-an": 88.0}, {"es-an": 80.7})
        assert rows == [("es-an", 46.26, pytest.approx(-7.3))]

    def test_empty_inputs_give_header_only(self):
        assert format_delta_overlap_csv(delta_overlap_report({}, {}, {})) == \
            "pair,overlap_percent,delta_f1\n"

    def test_rows_sorted_by_overlap(self):
        overlaps = {"b": 30.0, "a": 50.0, "c": 10.0}
        base = {k: 80.0 for k in overlaps}
        perturbed = {k: 70.0 for k in overlaps}
        rows = delta_overlap_report(overlaps, base, perturbed)
        assert [r[0] for r in rows] == ["c", "b", "a"]

    def test_missing_pair_named_in_error(self):
        with pytest.raises(DataError) as excinfo:
            delta_overlap_report({"es-an": 46.26}, {}, {"es-an": 80.7})
        assert "es-an" in str(excinfo.value)
