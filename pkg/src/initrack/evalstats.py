"""Frozen-model evaluation, baselines, cross-validation, and test statistics.

Evaluation replays the tracker loop without touching the learned model.  By
default it is teacher forced: a mispredicted index is still re-anchored on
the annotated holder, so one early error does not cascade through the
dialogue.  Closed-loop tracking is available behind a flag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from .corpus import Corpus, partition_by_pair, role_of
from .cues import CueKind, CueModel, Dimension, canonical_specs
from .tracker import TrackerConfig, TurnRecord, accuracy, run_dialogue


class DegenerateStatisticError(ValueError):
    """Raised when a statistic is undefined on the given data (0/0 chance terms)."""


# ---------------------------------------------------------------------------
# Runs


@dataclass(frozen=True)
class RunResult:
    """Per-turn records of one tracking run plus derived accuracies."""

    records: tuple[TurnRecord, ...]

    @property
    def task_vector(self) -> tuple[int, ...]:
        return tuple(int(r.ti_correct) for r in self.records)

    @property
    def dialogue_vector(self) -> tuple[int, ...]:
        return tuple(int(r.di_correct) for r in self.records)

    @property
    def predictions(self) -> int:
        return len(self.records)

    @property
    def task_correct(self) -> int:
        return sum(self.task_vector)

    @property
    def dialogue_correct(self) -> int:
        return sum(self.dialogue_vector)

    @property
    def task_accuracy(self) -> float:
        return accuracy([r.ti_correct for r in self.records])

    @property
    def dialogue_accuracy(self) -> float:
        return accuracy([r.di_correct for r in self.records])


def evaluate(
    corpus: Corpus,
    model: CueModel,
    config: TrackerConfig,
    *,
    teacher_forcing: bool = True,
) -> RunResult:
    """Run the tracker over a corpus with the model frozen."""
    records: list[TurnRecord] = []
    for dialogue in corpus.dialogues:
        records.extend(
            run_dialogue(dialogue, model, config, learn=False, reset_on_error=teacher_forcing)
        )
    return RunResult(tuple(records))


def baseline_run(corpus: Corpus) -> RunResult:
    """The no-cue predictor: the initiative stays with its current holder."""
    records: list[TurnRecord] = []
    for dialogue in corpus.dialogues:
        turns = dialogue.turns
        for t in range(len(turns) - 1):
            turn, nxt = turns[t], turns[t + 1]
            pred_ti_agent = turn.ti_holder
            pred_di_agent = turn.di_holder
            records.append(
                TurnRecord(
                    dialogue_id=dialogue.id,
                    turn_index=t,
                    predicted_ti=role_of(pred_ti_agent, turn),
                    predicted_ti_agent=pred_ti_agent,
                    predicted_di=role_of(pred_di_agent, turn),
                    predicted_di_agent=pred_di_agent,
                    actual_ti_agent=nxt.ti_holder,
                    actual_di_agent=nxt.di_holder,
                    cues=turn.cues,
                    ti_correct=pred_ti_agent == nxt.ti_holder,
                    di_correct=pred_di_agent == nxt.di_holder,
                )
            )
    return RunResult(tuple(records))


@dataclass(frozen=True)
class Fold:
    pair: tuple[str, str]
    result: RunResult


@dataclass(frozen=True)
class CrossValidationResult:
    folds: tuple[Fold, ...]

    @property
    def aggregate(self) -> RunResult:
        records: list[TurnRecord] = []
        for fold in self.folds:
            records.extend(fold.result.records)
        return RunResult(tuple(records))


def cross_validate(
    corpus: Corpus,
    config: TrackerConfig,
    *,
    teacher_forcing: bool = True,
) -> CrossValidationResult:
    """Leave-one-pair-out: train on the other groups, test on the held-out one."""
    from .tracker import train

    groups = partition_by_pair(corpus)
    if len(groups) < 2:
        raise ValueError("cross-validation needs at least two speaker/hearer pair groups")
    folds = []
    for key, held_out in groups:
        train_dialogues = tuple(d for d in corpus.dialogues if d.agents != key)
        train_corpus = Corpus(f"{corpus.name}!{key[0]},{key[1]}", train_dialogues)
        trained = train(train_corpus, config)
        result = evaluate(held_out, trained.model, config, teacher_forcing=teacher_forcing)
        folds.append(Fold(key, result))
    return CrossValidationResult(tuple(folds))


def fold_table_csv(xval: CrossValidationResult) -> str:
    lines = ["fold,dim,correct,total,accuracy"]
    rows: list[tuple[str, RunResult]] = [(f"{f.pair[0]}|{f.pair[1]}", f.result) for f in xval.folds]
    rows.append(("all", xval.aggregate))
    for label, result in rows:
        lines.append(f"{label},task,{result.task_correct},{result.predictions},{result.task_accuracy:.6f}")
        lines.append(
            f"{label},dialogue,{result.dialogue_correct},{result.predictions},{result.dialogue_accuracy:.6f}"
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Error report (per-cue shift / no-shift tallies)


@dataclass
class ErrorCell:
    shift_errors: int = 0
    shift_total: int = 0
    noshift_errors: int = 0
    noshift_total: int = 0


@dataclass(frozen=True)
class ErrorReport:
    """Per (cue, dimension) tallies of shift vs. no-shift prediction points."""

    cells: dict[tuple[CueKind, Dimension], ErrorCell]

    def cell(self, kind: CueKind, dimension: Dimension) -> ErrorCell:
        return self.cells[(kind, dimension)]


def error_report(run: RunResult, corpus: Corpus) -> ErrorReport:
    """Classify each cue-bearing prediction point as shift or no-shift.

    A point is a Shift for a dimension when the next turn's holder differs
    from the predicting turn's holder.  A point with several cues counts
    toward each of them.
    """
    points: dict[tuple[str, int], tuple[bool, bool]] = {}
    for dialogue in corpus.dialogues:
        turns = dialogue.turns
        for t in range(len(turns) - 1):
            points[(dialogue.id, t)] = (
                turns[t + 1].ti_holder != turns[t].ti_holder,
                turns[t + 1].di_holder != turns[t].di_holder,
            )
    if len(run.records) != len(points):
        raise ValueError("run does not match corpus: differing prediction point counts")

    cells = {
        (spec.kind, dim): ErrorCell() for spec in canonical_specs() for dim in (Dimension.TASK, Dimension.DIALOGUE)
    }
    for record in run.records:
        key = (record.dialogue_id, record.turn_index)
        if key not in points:
            raise ValueError(f"run does not match corpus: unknown prediction point {key}")
        ti_shift, di_shift = points[key]
        for kind in record.cues:
            cell = cells[(kind, Dimension.TASK)]
            if ti_shift:
                cell.shift_total += 1
                cell.shift_errors += not record.ti_correct
            else:
                cell.noshift_total += 1
                cell.noshift_errors += not record.ti_correct
            cell = cells[(kind, Dimension.DIALOGUE)]
            if di_shift:
                cell.shift_total += 1
                cell.shift_errors += not record.di_correct
            else:
                cell.noshift_total += 1
                cell.noshift_errors += not record.di_correct
    return ErrorReport(cells)


def error_report_csv(report: ErrorReport) -> str:
    lines = ["cue,dim,shift_err,shift_tot,noshift_err,noshift_tot"]
    for spec in canonical_specs():
        for dim in (Dimension.TASK, Dimension.DIALOGUE):
            cell = report.cell(spec.kind, dim)
            lines.append(
                f"{spec.kind},{dim},{cell.shift_errors},{cell.shift_total},"
                f"{cell.noshift_errors},{cell.noshift_total}"
            )
    return "\n".join(lines) + "\n"


def error_report_text(report: ErrorReport) -> str:
    lines = [f"{'cue':32}{'dim':10}{'shift err/tot':>14}{'no-shift err/tot':>18}"]
    for spec in canonical_specs():
        for dim in (Dimension.TASK, Dimension.DIALOGUE):
            cell = report.cell(spec.kind, dim)
            if cell.shift_total == 0 and cell.noshift_total == 0:
                continue
            shift = f"{cell.shift_errors}/{cell.shift_total}"
            noshift = f"{cell.noshift_errors}/{cell.noshift_total}"
            lines.append(f"{str(spec.kind):32}{str(dim):10}{shift:>14}{noshift:>18}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Comparison table


@dataclass(frozen=True)
class ComparisonRow:
    corpus_name: str
    baseline: RunResult
    trained: RunResult
    expert_ti_turns: int
    expert_di_turns: int
    total_turns: int


def _pct(count: int, total: int) -> float:
    return 100.0 * count / total if total else float("nan")


def comparison_csv(rows: Sequence[ComparisonRow]) -> str:
    lines = ["corpus,dim,expert_pct,baseline_pct,trained_pct,improvement_pts"]
    for row in rows:
        for dim, expert, base, trained in (
            ("task", row.expert_ti_turns, row.baseline.task_accuracy, row.trained.task_accuracy),
            ("dialogue", row.expert_di_turns, row.baseline.dialogue_accuracy, row.trained.dialogue_accuracy),
        ):
            expert_pct = _pct(expert, row.total_turns)
            lines.append(
                f"{row.corpus_name},{dim},{expert_pct:.6f},{100 * base:.6f},{100 * trained:.6f},"
                f"{100 * (trained - base):.6f}"
            )
    return "\n".join(lines) + "\n"


def comparison_text(rows: Sequence[ComparisonRow]) -> str:
    """Human-readable comparison; improvements are differences of the
    one-decimal percentages, matching how such tables are usually printed."""
    lines = [f"{'corpus':20}{'dim':10}{'expert':>16}{'baseline':>18}{'trained':>18}{'improvement':>13}"]
    for row in rows:
        for dim, expert, base_res, trained_res in (
            ("task", row.expert_ti_turns, (row.baseline.task_correct, row.baseline.task_accuracy),
             (row.trained.task_correct, row.trained.task_accuracy)),
            ("dialogue", row.expert_di_turns, (row.baseline.dialogue_correct, row.baseline.dialogue_accuracy),
             (row.trained.dialogue_correct, row.trained.dialogue_accuracy)),
        ):
            expert_pct = round(_pct(expert, row.total_turns), 1)
            base_pct = round(100 * base_res[1], 1)
            trained_pct = round(100 * trained_res[1], 1)
            improvement = trained_pct - base_pct
            points = row.baseline.predictions
            lines.append(
                f"{row.corpus_name:20}{dim:10}"
                f"{f'{expert} ({expert_pct:.1f}%)':>16}"
                f"{f'{base_res[0]}/{points} ({base_pct:.1f}%)':>18}"
                f"{f'{trained_res[0]}/{points} ({trained_pct:.1f}%)':>18}"
                f"{improvement:>13.1f}"
            )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Agreement and significance statistics


def kappa(ratings: Sequence[Sequence[Hashable]]) -> float:
    """Multi-rater kappa: chance-corrected agreement over N items.

    ratings is an N x m matrix of category labels (m raters per item, no
    missing entries).  With n_ij raters putting item i into category j:

        P(A) = sum_ij n_ij (n_ij - 1) / (N m (m - 1))
        P(E) = sum_j p_j^2,   p_j = sum_i n_ij / (N m)
        K    = (P(A) - P(E)) / (1 - P(E))

    Raises DegenerateStatisticError when every rating lands in a single
    category (P(E) = 1 leaves the chance correction undefined).
    """
    if not ratings:
        raise ValueError("kappa needs at least one item")
    m = len(ratings[0])
    if m < 2:
        raise ValueError("kappa needs at least two raters")
    if any(len(row) != m for row in ratings):
        raise ValueError("every item must have the same number of ratings")
    categories = sorted({label for row in ratings for label in row}, key=repr)
    counts = np.zeros((len(ratings), len(categories)), dtype=np.int64)
    index = {label: j for j, label in enumerate(categories)}
    for i, row in enumerate(ratings):
        for label in row:
            counts[i, index[label]] += 1
    n_items = len(ratings)
    p_observed = float((counts * (counts - 1)).sum()) / (n_items * m * (m - 1))
    proportions = counts.sum(axis=0) / (n_items * m)
    p_expected = float((proportions * proportions).sum())
    if p_expected >= 1.0:
        raise DegenerateStatisticError("all ratings fall in one category; kappa is undefined")
    return (p_observed - p_expected) / (1.0 - p_expected)


@dataclass(frozen=True)
class CochranQResult:
    statistic: float
    df: int
    p_value: float


def cochran_q(outcomes: Sequence[Sequence[int]]) -> CochranQResult:
    """Cochran's Q test for k matched binary treatments over n subjects.

    With column totals G_j and row totals L_i:

        Q = (k - 1) [k sum G_j^2 - (sum G_j)^2] / [k sum L_i - sum L_i^2]

    Q is referred to the chi-square distribution with k - 1 degrees of
    freedom.  Rows with no variation contribute nothing; when every row is
    constant the statistic is the trivial 0/0 case and Q = 0, p = 1 is
    returned (no detectable treatment effect).  For k = 2 the statistic
    equals the uncorrected McNemar statistic (b - c)^2 / (b + c).
    """
    table = np.asarray(outcomes)
    if table.ndim != 2:
        raise ValueError("outcomes must be a 2-D matrix")
    n, k = table.shape
    if k < 2:
        raise ValueError("Cochran's Q needs at least two treatments")
    if n < 1:
        raise ValueError("Cochran's Q needs at least one subject")
    if not np.isin(table, (0, 1)).all():
        raise ValueError("outcomes must be binary (0/1)")
    col_totals = table.sum(axis=0, dtype=np.int64)
    row_totals = table.sum(axis=1, dtype=np.int64)
    numerator = (k - 1) * (k * int((col_totals**2).sum()) - int(col_totals.sum()) ** 2)
    denominator = k * int(row_totals.sum()) - int((row_totals**2).sum())
    df = k - 1
    if denominator == 0:
        return CochranQResult(0.0, df, 1.0)
    q = numerator / denominator
    return CochranQResult(q, df, chi_square_sf(q, df))


def paired_outcomes(baseline: RunResult, trained: RunResult, dimension: Dimension) -> list[list[int]]:
    """Per-point correctness columns for significance testing two predictors."""
    if baseline.predictions != trained.predictions:
        raise ValueError("runs cover different prediction points")
    if dimension is Dimension.TASK:
        return [[b, t] for b, t in zip(baseline.task_vector, trained.task_vector)]
    return [[b, t] for b, t in zip(baseline.dialogue_vector, trained.dialogue_vector)]


# ---------------------------------------------------------------------------
# Chi-square upper tail via the regularized incomplete gamma function


def _lower_gamma_series(a: float, x: float) -> float:
    # P(a, x) by series expansion; converges fast for x < a + 1.
    term = 1.0 / a
    total = term
    denom = a
    for _ in range(1000):
        denom += 1.0
        term *= x / denom
        total += term
        if abs(term) < abs(total) * 1e-16:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _upper_gamma_cf(a: float, x: float) -> float:
    # Q(a, x) by modified Lentz continued fraction; converges fast for x >= a + 1.
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 1000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def chi_square_sf(x: float, df: int) -> float:
    """P(chi-square with df degrees of freedom >= x), to ~14 significant digits."""
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if x < 0 or math.isnan(x):
        raise ValueError("chi-square statistic must be non-negative")
    if x == 0.0:
        return 1.0
    a = df / 2.0
    half = x / 2.0
    if half < a + 1.0:
        return min(1.0, max(0.0, 1.0 - _lower_gamma_series(a, half)))
    return min(1.0, max(0.0, _upper_gamma_cf(a, half)))
