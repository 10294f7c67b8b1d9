"""Scoring of prediction files and the paired-t significance analysis.

NER scoring reports token-level per-class F1 and macro F1 alongside
chunk-level entity F1 (the two defensible readings of sequence-labeling F1;
both are always computed). The Student-t tail probability is evaluated with
a continued-fraction regularized incomplete beta to 1e-10, so the module
carries no statistics-package dependency and can be checked against
published t tables.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import IO, Sequence

from .corpus import BioTag, Corpus, Sentence, Token, extract_chunks, validate_bio
from .errors import AlignmentError, ConllParseError, DataError, StatsError
from .overlap import OverlapReport

RESULT_RULES = ("p1", "p2", "p3", "p4", "p5")


@dataclass(frozen=True)
class ScoreReport:
    task: str  # "ner" | "title"
    n_items: int
    macro_f1: float | None = None
    per_class_f1: dict[str, float] | None = None
    entity_f1: float | None = None
    accuracy: float | None = None


@dataclass(frozen=True)
class TTestResult:
    t_statistic: float
    degrees_of_freedom: int
    p_value: float
    mean_delta: float


def _f1(tp: int, fp: int, fn: int) -> float:
    denominator = 2 * tp + fp + fn
    return 2 * tp / denominator if denominator else 0.0


def parse_tag_file(source: str | IO[str]) -> list[BioTag]:
    """One predicted tag per nonblank line, same order as the gold tokens."""
    text = source if isinstance(source, str) else source.read()
    tags = []
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        try:
            tags.append(BioTag.parse(stripped))
        except ValueError as exc:
            raise ConllParseError(number, str(exc)) from exc
    return tags


def score_ner(gold: Corpus, predicted: Sequence[BioTag]) -> ScoreReport:
    """Token-level per-class/macro F1 plus exact-span entity F1 against gold.

    `predicted` must align one-to-one with the gold tokens; the first
    divergent position is reported otherwise. Predicted tag sequences are
    BIO-repaired before chunk extraction, as is standard.
    """
    gold_tokens = [t for sentence in gold for t in sentence]
    if len(predicted) != len(gold_tokens):
        position = min(len(predicted), len(gold_tokens))
        raise AlignmentError(position, f"gold has {len(gold_tokens)} tokens, "
                                       f"predictions have {len(predicted)}")
    labels = sorted({str(t.tag) for t in gold_tokens if not t.tag.is_outside()})
    counts = {label: [0, 0, 0] for label in labels}  # tp, fp, fn
    for gold_token, predicted_tag in zip(gold_tokens, predicted):
        gold_label = str(gold_token.tag)
        predicted_label = str(predicted_tag)
        if gold_label == predicted_label:
            if gold_label in counts:
                counts[gold_label][0] += 1
        else:
            if predicted_label in counts:
                counts[predicted_label][1] += 1
            if gold_label in counts:
                counts[gold_label][2] += 1
    per_class = {label: _f1(*counts[label]) for label in labels}
    macro = sum(per_class.values()) / len(per_class) if per_class else 0.0

    gold_chunks = set()
    predicted_chunks = set()
    cursor = 0
    for index, sentence in enumerate(gold):
        span = predicted[cursor:cursor + len(sentence)]
        cursor += len(sentence)
        predicted_sentence = Sentence(tuple(Token(t.text, tag)
                                            for t, tag in zip(sentence, span)))
        repaired_gold, _ = validate_bio(sentence, "repair")
        repaired_pred, _ = validate_bio(predicted_sentence, "repair")
        gold_chunks.update((index, c.label, c.start, c.end)
                           for c in extract_chunks(repaired_gold, index))
        predicted_chunks.update((index, c.label, c.start, c.end)
                                for c in extract_chunks(repaired_pred, index))
    correct = len(gold_chunks & predicted_chunks)
    entity = _f1(correct, len(predicted_chunks) - correct, len(gold_chunks) - correct)
    return ScoreReport("ner", len(gold_tokens), macro_f1=macro,
                       per_class_f1=per_class, entity_f1=entity)


def parse_prediction_indices(source: str | IO[str]) -> list[int]:
    text = source if isinstance(source, str) else source.read()
    indices = []
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        try:
            indices.append(int(stripped))
        except ValueError as exc:
            raise DataError(f"prediction line {number}: {exc}") from exc
    return indices


def score_title(gold, predictions: Sequence[int]) -> ScoreReport:
    """Fraction of predicted candidate indices matching the answer index."""
    if len(predictions) != len(gold.examples):
        raise AlignmentError(min(len(predictions), len(gold.examples)),
                             f"dataset has {len(gold.examples)} examples, "
                             f"predictions have {len(predictions)}")
    correct = 0
    for position, (example, prediction) in enumerate(zip(gold.examples, predictions)):
        if not 0 <= prediction < len(example.candidates):
            raise DataError(f"prediction {prediction} at position {position} out of range")
        if prediction == example.answer_index:
            correct += 1
    accuracy = correct / len(gold.examples) if gold.examples else 0.0
    return ScoreReport("title", len(gold.examples), accuracy=accuracy)


def average_runs(reports: Sequence[ScoreReport]) -> ScoreReport:
    """Arithmetic mean of every score field over same-condition runs."""
    if not reports:
        raise ValueError("need at least one report")
    first = reports[0]
    for report in reports[1:]:
        if report.task != first.task:
            raise DataError("cannot average reports from different tasks")
        if report.n_items != first.n_items:
            raise DataError("cannot average reports over different item counts")
        if (report.per_class_f1 is None) != (first.per_class_f1 is None) or (
                report.per_class_f1 is not None
                and set(report.per_class_f1) != set(first.per_class_f1)):
            raise DataError("cannot average reports with mismatched label sets")

    def mean_of(values):
        present = [v for v in values if v is not None]
        return sum(present) / len(present) if len(present) == len(values) else None

    per_class = None
    if first.per_class_f1 is not None:
        per_class = {label: sum(r.per_class_f1[label] for r in reports) / len(reports)
                     for label in first.per_class_f1}
    return ScoreReport(
        first.task, first.n_items,
        macro_f1=mean_of([r.macro_f1 for r in reports]),
        per_class_f1=per_class,
        entity_f1=mean_of([r.entity_f1 for r in reports]),
        accuracy=mean_of([r.accuracy for r in reports]),
    )


# --- Student-t machinery -----------------------------------------------------

_BETA_TOL = 1e-10
_BETA_MAX_ITER = 500
_FPMIN = 1e-300


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    """Lentz's continued fraction for the incomplete beta integral."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _BETA_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETA_TOL:
            return h
    raise ArithmeticError(f"incomplete beta failed to converge for a={a} b={b} x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) to absolute tolerance 1e-10."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must be within [0, 1], got {x}")
    if x in (0.0, 1.0):
        return x
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def student_t_two_tailed(t: float, degrees_of_freedom: int) -> float:
    """P(|T| >= |t|) for Student's t with the given degrees of freedom."""
    if degrees_of_freedom < 1:
        raise ValueError("degrees of freedom must be >= 1")
    if t == 0.0:
        return 1.0
    x = degrees_of_freedom / (degrees_of_freedom + t * t)
    return regularized_incomplete_beta(degrees_of_freedom / 2.0, 0.5, x)


def paired_ttest(baseline: Sequence[float], perturbed: Sequence[float]) -> TTestResult:
    """Two-tailed paired t-test over per-pair score differences.

    t = mean(d) / (sd(d) / sqrt(n)) with the sample (n-1) standard
    deviation; raises StatsError for n < 2 or zero-variance differences
    (where the statistic is undefined).
    """
    if len(baseline) != len(perturbed):
        raise StatsError("paired t-test needs equal-length sequences")
    n = len(baseline)
    if n < 2:
        raise StatsError("paired t-test needs at least two pairs")
    differences = [p - b for b, p in zip(baseline, perturbed)]
    mean = sum(differences) / n
    variance = sum((d - mean) ** 2 for d in differences) / (n - 1)
    if variance == 0.0:
        raise StatsError("differences have zero variance; t is undefined")
    t = mean / math.sqrt(variance / n)
    return TTestResult(t, n - 1, student_t_two_tailed(t, n - 1), mean)


# --- results-table ingestion --------------------------------------------------

@dataclass(frozen=True)
class SignificanceRow:
    condition: str
    rule: str
    n_pairs: int
    mean_delta: float
    t_statistic: float
    degrees_of_freedom: int
    p_value: float


def read_results_csv(source: str | IO[str]) -> list[dict]:
    """Read a results table: pair, condition, base, then optional p1..p5 columns."""
    text = source if isinstance(source, str) else source.read()
    reader = csv.DictReader(io.StringIO(text))
    required = {"pair", "condition", "base"}
    if reader.fieldnames is None or not required.issubset(reader.fieldnames):
        raise DataError(f"results CSV needs columns {sorted(required)}, "
                        f"got {reader.fieldnames}")
    rows = []
    for record in reader:
        row = {"pair": record["pair"].strip(), "condition": record["condition"].strip(),
               "base": float(record["base"])}
        for rule in RESULT_RULES:
            value = (record.get(rule) or "").strip()
            row[rule] = float(value) if value else None
        rows.append(row)
    if not rows:
        raise DataError("results CSV contains no data rows")
    return rows


def significance_table(rows: list[dict]) -> list[SignificanceRow]:
    """Paired t-test of every perturbation column against base, per condition."""
    conditions: dict[str, list[dict]] = {}
    for row in rows:
        conditions.setdefault(row["condition"], []).append(row)
    out = []
    for condition in sorted(conditions):
        group = conditions[condition]
        for rule in RESULT_RULES:
            values = [row[rule] for row in group]
            present = [v for v in values if v is not None]
            if not present:
                continue
            if len(present) != len(group):
                raise DataError(f"condition {condition!r} has a partial {rule} column")
            baseline = [row["base"] for row in group]
            result = paired_ttest(baseline, present)
            out.append(SignificanceRow(condition, rule, len(group), result.mean_delta,
                                       result.t_statistic, result.degrees_of_freedom,
                                       result.p_value))
    return out


def format_significance_csv(rows: list[SignificanceRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["condition", "rule", "n_pairs", "mean_delta",
                     "t_statistic", "df", "p_value"])
    for row in rows:
        writer.writerow([row.condition, row.rule, row.n_pairs,
                         f"{row.mean_delta:.4f}", f"{row.t_statistic:.6f}",
                         row.degrees_of_freedom, f"{row.p_value:.6g}"])
    return buffer.getvalue()


def delta_overlap_report(overlaps: dict[str, OverlapReport | float],
                         base_scores: dict[str, float],
                         perturbed_scores: dict[str, float]) -> list[tuple[str, float, float]]:
    """Rows (pair, overlap percent, score delta) sorted by overlap: scatter-plot data."""
    rows = []
    for pair in overlaps:
        for name, mapping in (("base", base_scores), ("perturbed", perturbed_scores)):
            if pair not in mapping:
                raise DataError(f"pair {pair!r} missing from {name} scores")
        overlap = overlaps[pair]
        percent = overlap.percent if isinstance(overlap, OverlapReport) else float(overlap)
        rows.append((pair, percent, perturbed_scores[pair] - base_scores[pair]))
    for pair in list(base_scores) + list(perturbed_scores):
        if pair not in overlaps:
            raise DataError(f"pair {pair!r} missing from overlaps")
    rows.sort(key=lambda row: (row[1], row[0]))
    return rows


def format_delta_overlap_csv(rows: list[tuple[str, float, float]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["pair", "overlap_percent", "delta_f1"])
    for pair, percent, delta in rows:
        writer.writerow([pair, f"{percent:.2f}", f"{delta:.2f}"])
    return buffer.getvalue()
