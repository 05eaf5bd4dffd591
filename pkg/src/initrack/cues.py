"""The canonical cue taxonomy and the trainable per-cue evidence tables.

Fourteen cue kinds are recognized.  Nine of them can move both the task and
the dialogue initiative; the other five bear on the dialogue initiative
only.  Each cue carries one trainable mass function per dimension it
affects, plus a credit counter per mass function used by the
counter-based adjustment methods.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .evidence import MassFunction, Role, vacuous

MODEL_HEADER = "initrack-model v1"

# Lossless float round-trip needs 17 significant digits.
_FLOAT_FMT = ".17g"


class UnknownCueError(ValueError):
    """Raised for a cue token outside the closed taxonomy."""

    def __init__(self, token: str) -> None:
        super().__init__(f"unknown cue {token!r}")
        self.token = token


class ModelFormatError(ValueError):
    """Raised for a malformed model file; carries the offending line number."""

    def __init__(self, message: str, source: str = "<model>", line: int = 0) -> None:
        super().__init__(f"{source}:{line}: {message}")
        self.source = source
        self.line = line


class CueClass(Enum):
    EXPLICIT = "explicit"
    DISCOURSE = "discourse"
    ANALYTICAL = "analytical"


class CueEffect(Enum):
    DIALOGUE_ONLY = "dialogue-only"
    BOTH = "both"


class Dimension(Enum):
    TASK = "task"
    DIALOGUE = "dialogue"

    def __str__(self) -> str:
        return self.value


class CueKind(Enum):
    EXPLICIT_GIVEUP = "explicit_giveup"
    EXPLICIT_TAKEOVER = "explicit_takeover"
    END_SILENCE = "end_silence"
    NO_NEW_INFO_REPETITION = "no_new_info:repetition"
    NO_NEW_INFO_PROMPT = "no_new_info:prompt"
    QUESTION_DOMAIN = "question:domain"
    QUESTION_EVALUATION = "question:evaluation"
    OBLIGATION_FULFILLED_TASK = "obligation_fulfilled:task"
    OBLIGATION_FULFILLED_DISCOURSE = "obligation_fulfilled:discourse"
    INVALIDITY_ACTION = "invalidity:action"
    INVALIDITY_BELIEF = "invalidity:belief"
    SUBOPTIMALITY = "suboptimality"
    AMBIGUITY_ACTION = "ambiguity:action"
    AMBIGUITY_BELIEF = "ambiguity:belief"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class CueSpec:
    """Static taxonomy entry: recognition class, effect scope, expected holder.

    `expected_holder` is descriptive metadata (who typically takes over when
    the cue appears); prediction and training rely on the learned mass
    functions only.
    """

    kind: CueKind
    cue_class: CueClass
    effect: CueEffect
    expected_holder: Role


_BOTH = CueEffect.BOTH
_DI = CueEffect.DIALOGUE_ONLY

_SPECS: tuple[CueSpec, ...] = (
    CueSpec(CueKind.EXPLICIT_GIVEUP, CueClass.EXPLICIT, _BOTH, Role.HEARER),
    CueSpec(CueKind.EXPLICIT_TAKEOVER, CueClass.EXPLICIT, _BOTH, Role.SPEAKER),
    CueSpec(CueKind.END_SILENCE, CueClass.DISCOURSE, _BOTH, Role.HEARER),
    CueSpec(CueKind.NO_NEW_INFO_REPETITION, CueClass.DISCOURSE, _BOTH, Role.HEARER),
    CueSpec(CueKind.NO_NEW_INFO_PROMPT, CueClass.DISCOURSE, _BOTH, Role.HEARER),
    CueSpec(CueKind.QUESTION_DOMAIN, CueClass.DISCOURSE, _DI, Role.SPEAKER),
    CueSpec(CueKind.QUESTION_EVALUATION, CueClass.DISCOURSE, _DI, Role.HEARER),
    CueSpec(CueKind.OBLIGATION_FULFILLED_TASK, CueClass.DISCOURSE, _BOTH, Role.HEARER),
    CueSpec(CueKind.OBLIGATION_FULFILLED_DISCOURSE, CueClass.DISCOURSE, _DI, Role.HEARER),
    CueSpec(CueKind.INVALIDITY_ACTION, CueClass.ANALYTICAL, _BOTH, Role.HEARER),
    CueSpec(CueKind.INVALIDITY_BELIEF, CueClass.ANALYTICAL, _DI, Role.HEARER),
    CueSpec(CueKind.SUBOPTIMALITY, CueClass.ANALYTICAL, _BOTH, Role.HEARER),
    CueSpec(CueKind.AMBIGUITY_ACTION, CueClass.ANALYTICAL, _BOTH, Role.HEARER),
    CueSpec(CueKind.AMBIGUITY_BELIEF, CueClass.ANALYTICAL, _DI, Role.HEARER),
)

_SPEC_BY_KIND = {spec.kind: spec for spec in _SPECS}


def canonical_specs() -> tuple[CueSpec, ...]:
    """All 14 cue specs in canonical (taxonomy table) order."""
    return _SPECS


def lookup(kind: CueKind) -> CueSpec:
    return _SPEC_BY_KIND[kind]


def parse_cue(token: str) -> CueKind:
    """Resolve a canonical cue identifier; matching is exact and case-sensitive."""
    try:
        return CueKind(token)
    except ValueError:
        raise UnknownCueError(token) from None


@dataclass
class CueParams:
    """Trainable state for one cue: per-dimension mass function and counter.

    Dialogue-only cues carry no task-side fields.
    """

    dialogue_bpa: MassFunction
    dialogue_counter: int = 0
    task_bpa: MassFunction | None = None
    task_counter: int | None = None


@dataclass
class CueModel:
    """The full set of learned per-cue parameters, keyed by cue kind."""

    params: dict[CueKind, CueParams] = field(default_factory=dict)


def init_model() -> CueModel:
    """A fresh model: every mass function vacuous, every counter zero."""
    params: dict[CueKind, CueParams] = {}
    for spec in _SPECS:
        if spec.effect is CueEffect.BOTH:
            params[spec.kind] = CueParams(vacuous(), 0, vacuous(), 0)
        else:
            params[spec.kind] = CueParams(vacuous(), 0)
    return CueModel(params)


def _bpa_line(kind: CueKind, dim: Dimension, bpa: MassFunction, counter: int) -> str:
    return (
        f"cue={kind.value} dim={dim.value}"
        f" m_speaker={bpa.speaker:{_FLOAT_FMT}}"
        f" m_hearer={bpa.hearer:{_FLOAT_FMT}}"
        f" m_theta={bpa.theta:{_FLOAT_FMT}}"
        f" counter={counter}"
    )


def format_model(model: CueModel) -> str:
    """Serialize a model to its canonical text form (header plus 23 lines)."""
    lines = [MODEL_HEADER]
    for spec in _SPECS:
        p = model.params[spec.kind]
        if spec.effect is CueEffect.BOTH:
            assert p.task_bpa is not None and p.task_counter is not None
            lines.append(_bpa_line(spec.kind, Dimension.TASK, p.task_bpa, p.task_counter))
        lines.append(_bpa_line(spec.kind, Dimension.DIALOGUE, p.dialogue_bpa, p.dialogue_counter))
    return "\n".join(lines) + "\n"


def save_model(model: CueModel, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_model(model))


def _parse_kv(fields: list[str], expected: tuple[str, ...], source: str, lineno: int) -> dict[str, str]:
    values: dict[str, str] = {}
    for part in fields:
        key, sep, value = part.partition("=")
        if not sep or key not in expected or key in values:
            raise ModelFormatError(f"malformed field {part!r}", source, lineno)
        values[key] = value
    missing = [key for key in expected if key not in values]
    if missing:
        raise ModelFormatError(f"missing field(s) {', '.join(missing)}", source, lineno)
    return values


def parse_model(text: str, source: str = "<model>") -> CueModel:
    """Parse the text model format; any defect raises with its line number."""
    seen: dict[tuple[CueKind, Dimension], tuple[MassFunction, int]] = {}
    header_seen = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not header_seen:
            if line != MODEL_HEADER:
                raise ModelFormatError(f"expected header {MODEL_HEADER!r}", source, lineno)
            header_seen = True
            continue
        fields = line.split()
        values = _parse_kv(fields, ("cue", "dim", "m_speaker", "m_hearer", "m_theta", "counter"), source, lineno)
        try:
            kind = parse_cue(values["cue"])
        except UnknownCueError as exc:
            raise ModelFormatError(str(exc), source, lineno) from None
        try:
            dim = Dimension(values["dim"])
        except ValueError:
            raise ModelFormatError(f"unknown dimension {values['dim']!r}", source, lineno) from None
        if dim is Dimension.TASK and lookup(kind).effect is CueEffect.DIALOGUE_ONLY:
            raise ModelFormatError(f"cue {kind} affects the dialogue initiative only", source, lineno)
        if (kind, dim) in seen:
            raise ModelFormatError(f"duplicate entry for cue {kind} dim {dim}", source, lineno)
        try:
            bpa = MassFunction(float(values["m_speaker"]), float(values["m_hearer"]), float(values["m_theta"]))
            counter = int(values["counter"])
        except ValueError as exc:
            raise ModelFormatError(str(exc), source, lineno) from None
        seen[(kind, dim)] = (bpa, counter)
    if not header_seen:
        raise ModelFormatError("empty model file", source, 0)

    params: dict[CueKind, CueParams] = {}
    for spec in _SPECS:
        dlg = seen.pop((spec.kind, Dimension.DIALOGUE), None)
        if dlg is None:
            raise ModelFormatError(f"missing dialogue entry for cue {spec.kind}", source, 0)
        if spec.effect is CueEffect.BOTH:
            tsk = seen.pop((spec.kind, Dimension.TASK), None)
            if tsk is None:
                raise ModelFormatError(f"missing task entry for cue {spec.kind}", source, 0)
            params[spec.kind] = CueParams(dlg[0], dlg[1], tsk[0], tsk[1])
        else:
            params[spec.kind] = CueParams(dlg[0], dlg[1])
    return CueModel(params)


def load_model(path: str | Path) -> CueModel:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_model(fh.read(), str(path))
