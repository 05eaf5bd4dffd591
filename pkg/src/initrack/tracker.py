"""Initiative tracking: per-turn prediction, error-driven training, sweeps.

The tracker keeps one mass function per initiative dimension, expressed in
the current turn's speaker/hearer frame.  Each turn it pools the current
index with the mass functions of the observed cues, predicts the next
holders, and (in training mode) adjusts cue parameters whenever a
prediction disagrees with the annotation.  Because speakers alternate,
moving to the next turn swaps the speaker/hearer components.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Sequence

from .corpus import Corpus, Dialogue, agent_of, role_of
from .cues import CueEffect, CueKind, CueModel, Dimension, init_model, lookup
from .evidence import MassFunction, Role, bayesian, combine_all, predicted_holder


class AdjustmentMethod(Enum):
    CONSTANT_INCREMENT = "const"
    CONSTANT_INCREMENT_WITH_COUNTER = "const-counter"
    VARIABLE_INCREMENT_WITH_COUNTER = "var-counter"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class TrackerConfig:
    delta: float = 0.35
    method: AdjustmentMethod = AdjustmentMethod.CONSTANT_INCREMENT_WITH_COUNTER
    default_task_x: float = 0.5
    default_dialogue_x: float = 0.5
    reset_strength: float = 0.75

    def __post_init__(self) -> None:
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta!r}")
        if self.delta >= 0.5:
            # A single observation would then out-mass the even prior.
            warnings.warn(f"delta={self.delta} is outside the recommended (0, 0.5) range", stacklevel=2)
        for name in ("default_task_x", "default_dialogue_x"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
        if not 0.0 < self.reset_strength < 1.0:
            # 0 or 1 would make the index absorbing under combination.
            raise ValueError(f"reset_strength must lie strictly in (0, 1), got {self.reset_strength!r}")


@dataclass(frozen=True)
class TrackerState:
    """Current initiative indices, in the current turn's speaker/hearer frame."""

    m_t_cur: MassFunction
    m_d_cur: MassFunction


def default_state(config: TrackerConfig) -> TrackerState:
    return TrackerState(bayesian(config.default_task_x), bayesian(config.default_dialogue_x))


@dataclass(frozen=True)
class StepPrediction:
    m_t_new: MassFunction
    m_d_new: MassFunction
    ti_role: Role
    di_role: Role


@dataclass(frozen=True)
class TurnRecord:
    """One prediction point: made while processing `turn_index`, about the next turn."""

    dialogue_id: str
    turn_index: int
    predicted_ti: Role
    predicted_ti_agent: str
    predicted_di: Role
    predicted_di_agent: str
    actual_ti_agent: str
    actual_di_agent: str
    cues: tuple[CueKind, ...]
    ti_correct: bool
    di_correct: bool

    def __post_init__(self) -> None:
        if self.ti_correct != (self.predicted_ti_agent == self.actual_ti_agent):
            raise ValueError("ti_correct inconsistent with predicted/actual agents")
        if self.di_correct != (self.predicted_di_agent == self.actual_di_agent):
            raise ValueError("di_correct inconsistent with predicted/actual agents")


def _task_cues(cues: Iterable[CueKind]) -> list[CueKind]:
    return [k for k in cues if lookup(k).effect is CueEffect.BOTH]


def step_predict(state: TrackerState, cues: Sequence[CueKind], model: CueModel) -> StepPrediction:
    """Pool the current indices with the observed cues' mass functions.

    The returned predictions name the next turn's holders, expressed in the
    current turn's role frame.  Dialogue-only cues contribute nothing on the
    task side.
    """
    task_bpas = [model.params[k].task_bpa for k in _task_cues(cues)]
    dialogue_bpas = [model.params[k].dialogue_bpa for k in cues]
    m_t_new = combine_all([state.m_t_cur, *task_bpas])
    m_d_new = combine_all([state.m_d_cur, *dialogue_bpas])
    return StepPrediction(m_t_new, m_d_new, predicted_holder(m_t_new), predicted_holder(m_d_new))


def _incremented(bpa: MassFunction, actual: Role, amount: float) -> MassFunction:
    # Mass moves only from theta to the actual holder, never from the
    # opposing singleton; the clamp keeps theta non-negative.
    inc = min(amount, bpa.theta)
    if actual is Role.SPEAKER:
        return MassFunction(bpa.speaker + inc, bpa.hearer, bpa.theta - inc)
    return MassFunction(bpa.speaker, bpa.hearer + inc, bpa.theta - inc)


def _adjust_one(bpa: MassFunction, counter: int, actual: Role, config: TrackerConfig) -> tuple[MassFunction, int]:
    method = config.method
    if method is AdjustmentMethod.CONSTANT_INCREMENT:
        return _incremented(bpa, actual, config.delta), counter
    counter -= 1
    if method is AdjustmentMethod.CONSTANT_INCREMENT_WITH_COUNTER:
        if counter < 0:
            return _incremented(bpa, actual, config.delta), 0
        return bpa, counter
    # Variable increment: the remaining credit damps the step size
    # exponentially; negative credit is clamped to 0 in the exponent.
    step = config.delta / 2 ** (max(counter, 0) + 1)
    return _incremented(bpa, actual, step), counter


def adjust_bpa(
    model: CueModel,
    cues: Sequence[CueKind],
    dimension: Dimension,
    actual: Role,
    config: TrackerConfig,
) -> None:
    """Shift the observed cues' mass toward the actual holder after an error.

    For the task dimension only cues with both-initiative effect are touched.
    """
    kinds = _task_cues(cues) if dimension is Dimension.TASK else list(cues)
    for kind in kinds:
        params = model.params[kind]
        if dimension is Dimension.TASK:
            assert params.task_bpa is not None and params.task_counter is not None
            params.task_bpa, params.task_counter = _adjust_one(params.task_bpa, params.task_counter, actual, config)
        else:
            params.dialogue_bpa, params.dialogue_counter = _adjust_one(
                params.dialogue_bpa, params.dialogue_counter, actual, config
            )


def credit_counters(
    model: CueModel, cues: Sequence[CueKind], dimension: Dimension, config: TrackerConfig
) -> None:
    """Give each observed cue one unit of credit after a correct prediction."""
    if config.method is AdjustmentMethod.CONSTANT_INCREMENT:
        return
    kinds = _task_cues(cues) if dimension is Dimension.TASK else list(cues)
    for kind in kinds:
        params = model.params[kind]
        if dimension is Dimension.TASK:
            assert params.task_counter is not None
            params.task_counter += 1
        else:
            params.dialogue_counter += 1


def reset_current(actual: Role, strength: float) -> MassFunction:
    """Re-anchor a current index on the annotated holder after an error."""
    return bayesian(strength) if actual is Role.SPEAKER else bayesian(1.0 - strength)


def swap_frame(m: MassFunction) -> MassFunction:
    """Re-express an index in the next turn's role frame (speakers alternate)."""
    return MassFunction(m.hearer, m.speaker, m.theta)


def run_dialogue(
    dialogue: Dialogue,
    model: CueModel,
    config: TrackerConfig,
    *,
    learn: bool,
    reset_on_error: bool = True,
) -> list[TurnRecord]:
    """Track one dialogue from default indices; the final turn is target only.

    With learn=True the model is adjusted/credited in place after each
    prediction; with learn=False it is left untouched (frozen evaluation).
    reset_on_error controls whether a misprediction re-anchors the current
    index on the annotated holder.
    """
    state = default_state(config)
    records: list[TurnRecord] = []
    turns = dialogue.turns
    for t in range(len(turns) - 1):
        turn, nxt = turns[t], turns[t + 1]
        pred = step_predict(state, turn.cues, model)
        actual_ti = role_of(nxt.ti_holder, turn)
        actual_di = role_of(nxt.di_holder, turn)
        ti_correct = pred.ti_role is actual_ti
        di_correct = pred.di_role is actual_di

        m_t, m_d = pred.m_t_new, pred.m_d_new
        if ti_correct:
            if learn:
                credit_counters(model, turn.cues, Dimension.TASK, config)
        else:
            if learn:
                adjust_bpa(model, turn.cues, Dimension.TASK, actual_ti, config)
            if reset_on_error:
                m_t = reset_current(actual_ti, config.reset_strength)
        if di_correct:
            if learn:
                credit_counters(model, turn.cues, Dimension.DIALOGUE, config)
        else:
            if learn:
                adjust_bpa(model, turn.cues, Dimension.DIALOGUE, actual_di, config)
            if reset_on_error:
                m_d = reset_current(actual_di, config.reset_strength)

        records.append(
            TurnRecord(
                dialogue_id=dialogue.id,
                turn_index=t,
                predicted_ti=pred.ti_role,
                predicted_ti_agent=agent_of(pred.ti_role, turn),
                predicted_di=pred.di_role,
                predicted_di_agent=agent_of(pred.di_role, turn),
                actual_ti_agent=nxt.ti_holder,
                actual_di_agent=nxt.di_holder,
                cues=turn.cues,
                ti_correct=ti_correct,
                di_correct=di_correct,
            )
        )
        state = TrackerState(swap_frame(m_t), swap_frame(m_d))
    return records


def accuracy(flags: Sequence[bool]) -> float:
    if not flags:
        return float("nan")
    return sum(flags) / len(flags)


@dataclass(frozen=True)
class TrainResult:
    model: CueModel
    records: tuple[TurnRecord, ...]
    task_accuracy: float
    dialogue_accuracy: float


def train(corpus: Corpus, config: TrackerConfig, model: CueModel | None = None) -> TrainResult:
    """One training pass over the corpus.

    Each dialogue starts from fresh default indices while the cue model
    accumulates across dialogues in corpus order.  Pass a model to continue
    training it; by default training starts from the all-vacuous model.
    """
    if model is None:
        model = init_model()
    records: list[TurnRecord] = []
    for dialogue in corpus.dialogues:
        records.extend(run_dialogue(dialogue, model, config, learn=True))
    return TrainResult(
        model,
        tuple(records),
        accuracy([r.ti_correct for r in records]),
        accuracy([r.di_correct for r in records]),
    )


def default_delta_grid() -> tuple[float, ...]:
    """The standard 19-point sweep grid: 0.025 + 0.025 * i for i in 0..18."""
    return tuple(0.025 + 0.025 * i for i in range(19))


@dataclass(frozen=True)
class SweepRow:
    delta: float
    task_accuracy: float
    dialogue_accuracy: float


def sweep(
    corpus: Corpus,
    method: AdjustmentMethod,
    deltas: Sequence[float] | None = None,
    *,
    base_config: TrackerConfig | None = None,
    cross_validated: bool = False,
) -> list[SweepRow]:
    """One independent run per delta, rows in ascending delta order.

    With cross_validated=True each row reports leave-one-pair-out accuracy
    instead of the training-pass accuracy.
    """
    if deltas is None:
        deltas = default_delta_grid()
    if not deltas:
        raise ValueError("sweep requires at least one delta")
    base = base_config if base_config is not None else TrackerConfig()
    rows = []
    for delta in sorted(deltas):
        config = replace(base, delta=delta, method=method)
        if cross_validated:
            from .evalstats import cross_validate

            result = cross_validate(corpus, config).aggregate
            rows.append(SweepRow(delta, result.task_accuracy, result.dialogue_accuracy))
        else:
            result = train(corpus, config)
            rows.append(SweepRow(delta, result.task_accuracy, result.dialogue_accuracy))
    return rows


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    lines = ["delta,task_accuracy,dialogue_accuracy"]
    for row in rows:
        lines.append(f"{row.delta:.3f},{row.task_accuracy:.6f},{row.dialogue_accuracy:.6f}")
    return "\n".join(lines) + "\n"
