"""Annotated dialogue corpora: parsing, validation, reports, and synthesis.

A corpus is a set of two-party dialogues.  Every turn names its speaker and
the agents currently holding the task and dialogue initiatives, plus the
cues observed during the turn.  Speakers alternate strictly; annotators are
expected to merge consecutive same-speaker utterances into one turn.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .cues import CueEffect, CueKind, UnknownCueError, canonical_specs, lookup, parse_cue
from .evidence import Role


class CorpusFormatError(ValueError):
    """Raised for an invalid corpus file; carries the offending position."""

    def __init__(self, message: str, source: str = "<corpus>", line: int = 0) -> None:
        super().__init__(f"{source}:{line}: {message}")
        self.source = source
        self.line = line


class GeneratorConfigError(ValueError):
    """Raised for an invalid synthetic-corpus configuration."""


@dataclass(frozen=True)
class Turn:
    speaker: str
    hearer: str
    ti_holder: str
    di_holder: str
    cues: tuple[CueKind, ...] = ()

    def __post_init__(self) -> None:
        if self.speaker == self.hearer:
            raise ValueError("speaker and hearer must differ")
        pair = {self.speaker, self.hearer}
        if self.ti_holder not in pair or self.di_holder not in pair:
            raise ValueError("initiative holders must be one of the turn's two agents")
        if len(set(self.cues)) != len(self.cues):
            raise ValueError("duplicate cue in turn")


@dataclass(frozen=True)
class Dialogue:
    id: str
    agents: tuple[str, str]
    turns: tuple[Turn, ...]

    def __post_init__(self) -> None:
        a, b = self.agents
        if not a or not b or a == b:
            raise ValueError(f"dialogue {self.id}: agents must be two distinct non-empty names")
        if not self.turns:
            raise ValueError(f"dialogue {self.id}: no turns")
        for i, turn in enumerate(self.turns):
            if {turn.speaker, turn.hearer} != {a, b}:
                raise ValueError(f"dialogue {self.id}: turn {i + 1} names a foreign agent")
            if i and turn.speaker == self.turns[i - 1].speaker:
                raise ValueError(f"dialogue {self.id}: speakers must alternate (turn {i + 1})")


@dataclass(frozen=True)
class Corpus:
    name: str
    dialogues: tuple[Dialogue, ...]

    def __post_init__(self) -> None:
        ids = [d.id for d in self.dialogues]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate dialogue id")

    @property
    def turn_count(self) -> int:
        return sum(len(d.turns) for d in self.dialogues)


def role_of(agent: str, turn: Turn) -> Role:
    """The role a given agent plays during a turn."""
    if agent == turn.speaker:
        return Role.SPEAKER
    if agent == turn.hearer:
        return Role.HEARER
    raise ValueError(f"agent {agent!r} does not take part in this turn")


def agent_of(role: Role, turn: Turn) -> str:
    """The agent playing a given role during a turn; inverse of role_of."""
    return turn.speaker if role is Role.SPEAKER else turn.hearer


# ---------------------------------------------------------------------------
# Corpus file format
#
#   corpus <name>
#   dialogue <id> agents=<a>,<b>
#   turn speaker=<agent> ti=<agent> di=<agent> cues=<kind>[,<kind>...]|-
#   end
#
# UTF-8, LF line endings, '#' comments.


def parse_corpus(text: str, source: str = "<corpus>") -> Corpus:
    """Parse a corpus file; all-or-nothing, errors carry file:line positions."""

    def err(lineno: int, message: str) -> CorpusFormatError:
        return CorpusFormatError(message, source, lineno)

    name: str | None = None
    dialogues: list[Dialogue] = []
    seen_ids: set[str] = set()
    current_id: str | None = None
    current_agents: tuple[str, str] | None = None
    current_turns: list[Turn] = []
    current_line = 0

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        directive = fields[0]

        if name is None:
            if directive != "corpus" or len(fields) != 2:
                raise err(lineno, "expected 'corpus <name>'")
            name = fields[1]
            continue

        if directive == "dialogue":
            if current_id is not None:
                raise err(lineno, f"dialogue {current_id!r} not closed with 'end'")
            if len(fields) != 3 or not fields[2].startswith("agents="):
                raise err(lineno, "expected 'dialogue <id> agents=<a>,<b>'")
            dialogue_id = fields[1]
            if dialogue_id in seen_ids:
                raise err(lineno, f"duplicate dialogue id {dialogue_id!r}")
            agents = fields[2][len("agents="):].split(",")
            if len(agents) != 2 or not all(agents) or agents[0] == agents[1]:
                raise err(lineno, "agents must be two distinct non-empty names")
            current_id = dialogue_id
            current_agents = (agents[0], agents[1])
            current_turns = []
            current_line = lineno
            continue

        if directive == "turn":
            if current_id is None or current_agents is None:
                raise err(lineno, "turn outside a dialogue")
            values: dict[str, str] = {}
            for part in fields[1:]:
                key, sep, value = part.partition("=")
                if not sep or key not in ("speaker", "ti", "di", "cues") or key in values:
                    raise err(lineno, f"malformed field {part!r}")
                values[key] = value
            for key in ("speaker", "ti", "di", "cues"):
                if key not in values:
                    raise err(lineno, f"missing field {key!r}")
            pair = set(current_agents)
            for key in ("speaker", "ti", "di"):
                if values[key] not in pair:
                    raise err(lineno, f"unknown agent {values[key]!r} in field {key!r}")
            speaker = values["speaker"]
            hearer = current_agents[1] if speaker == current_agents[0] else current_agents[0]
            if current_turns and current_turns[-1].speaker == speaker:
                raise err(lineno, f"speaker {speaker!r} repeats; turns must alternate")
            cues: list[CueKind] = []
            if values["cues"] != "-":
                for token in values["cues"].split(","):
                    try:
                        kind = parse_cue(token)
                    except UnknownCueError as exc:
                        raise err(lineno, str(exc)) from None
                    if kind in cues:
                        raise err(lineno, f"duplicate cue {token!r}")
                    cues.append(kind)
            current_turns.append(Turn(speaker, hearer, values["ti"], values["di"], tuple(cues)))
            continue

        if directive == "end":
            if current_id is None or current_agents is None:
                raise err(lineno, "'end' outside a dialogue")
            if not current_turns:
                raise err(lineno, f"dialogue {current_id!r} has no turns")
            dialogues.append(Dialogue(current_id, current_agents, tuple(current_turns)))
            seen_ids.add(current_id)
            current_id = None
            current_agents = None
            current_turns = []
            continue

        raise err(lineno, f"unknown directive {directive!r}")

    if name is None:
        raise err(0, "empty corpus file")
    if current_id is not None:
        raise err(current_line, f"dialogue {current_id!r} not closed with 'end'")
    return Corpus(name, tuple(dialogues))


def load_corpus(path: str | Path) -> Corpus:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_corpus(fh.read(), str(path))


def format_corpus(corpus: Corpus) -> str:
    lines = [f"corpus {corpus.name}"]
    for dialogue in corpus.dialogues:
        lines.append(f"dialogue {dialogue.id} agents={dialogue.agents[0]},{dialogue.agents[1]}")
        for turn in dialogue.turns:
            cues = ",".join(k.value for k in turn.cues) if turn.cues else "-"
            lines.append(f"turn speaker={turn.speaker} ti={turn.ti_holder} di={turn.di_holder} cues={cues}")
        lines.append("end")
    return "\n".join(lines) + "\n"


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_corpus(corpus))


# ---------------------------------------------------------------------------
# Reports and partitioning


def largest_remainder_percentages(counts: Iterable[int], decimals: int = 1) -> tuple[float, ...]:
    """Percentages rounded to `decimals` places so that they sum to exactly 100.

    Floors every percentage at the target precision, then hands the leftover
    units to the cells with the largest remainders (ties broken by position).
    This is the usual convention for published distribution tables.
    """
    items = list(counts)
    total = sum(items)
    if total <= 0:
        raise ValueError("percentages need a positive total")
    scale = 10 ** decimals
    raw = [100.0 * c / total for c in items]
    floors = [math.floor(r * scale) for r in raw]
    leftover = 100 * scale - sum(floors)
    by_remainder = sorted(range(len(items)), key=lambda i: (floors[i] - raw[i] * scale, i))
    for i in by_remainder[:leftover]:
        floors[i] += 1
    return tuple(f / scale for f in floors)


@dataclass(frozen=True)
class DistributionReport:
    """Joint counts of task/dialogue initiative holders relative to a focus agent.

    Cells are kept in distribution-table row order: the DI=focus row first
    (TI=focus, then TI=other), then the DI=other row.
    """

    focus_agent: str
    ti_focus_di_focus: int
    ti_other_di_focus: int
    ti_focus_di_other: int
    ti_other_di_other: int

    @property
    def total(self) -> int:
        return (
            self.ti_focus_di_focus
            + self.ti_other_di_focus
            + self.ti_focus_di_other
            + self.ti_other_di_other
        )

    def cells(self) -> tuple[int, int, int, int]:
        return (
            self.ti_focus_di_focus,
            self.ti_other_di_focus,
            self.ti_focus_di_other,
            self.ti_other_di_other,
        )

    def percentages(self) -> tuple[float, float, float, float]:
        total = self.total
        if total == 0:
            raise ValueError("empty corpus has no distribution")
        return tuple(100.0 * c / total for c in self.cells())  # type: ignore[return-value]

    def rounded_percentages(self, decimals: int = 1) -> tuple[float, ...]:
        return largest_remainder_percentages(self.cells(), decimals)


def distribution_report(corpus: Corpus, focus_agent: str) -> DistributionReport:
    """Count turns per joint (TI holder, DI holder) cell relative to focus_agent."""
    cells = [0, 0, 0, 0]
    for dialogue in corpus.dialogues:
        if focus_agent not in dialogue.agents:
            raise ValueError(f"agent {focus_agent!r} does not appear in dialogue {dialogue.id!r}")
        for turn in dialogue.turns:
            ti_focus = turn.ti_holder == focus_agent
            di_focus = turn.di_holder == focus_agent
            if di_focus:
                cells[0 if ti_focus else 1] += 1
            else:
                cells[2 if ti_focus else 3] += 1
    return DistributionReport(focus_agent, *cells)


def partition_by_pair(corpus: Corpus) -> list[tuple[tuple[str, str], Corpus]]:
    """Group dialogues by their ordered agent pair, in sorted key order.

    The ordered pair encodes which participant plays which seat, so the
    groups form a true partition suitable for leave-one-pair-out
    cross-validation.
    """
    groups: dict[tuple[str, str], list[Dialogue]] = {}
    for dialogue in corpus.dialogues:
        groups.setdefault(dialogue.agents, []).append(dialogue)
    out = []
    for key in sorted(groups):
        sub = Corpus(f"{corpus.name}[{key[0]},{key[1]}]", tuple(groups[key]))
        out.append((key, sub))
    return out


# ---------------------------------------------------------------------------
# Synthetic corpora
#
# Desk-scale stand-ins for annotated dialogue data.  Every dialogue opens
# with the first speaker holding both initiatives; cue-conditioned shift
# rules then hand an initiative to the expected holder of the emitting
# turn with a configured probability.


@dataclass(frozen=True)
class GeneratorConfig:
    """Configuration for gen_synthetic.

    cue_emit gives each cue's per-turn emission probability; cue_shift gives
    the probability that an emitted cue actually hands the initiative(s) in
    its effect scope to its expected holder for the next turn.  Cues missing
    from cue_shift are pure noise.  base_shift_* flip a holder spontaneously
    after the cue rules have been applied.
    """

    name: str = "synthetic"
    dialogues: int = 8
    turns_per_dialogue: int = 20
    pairs: int = 1
    cue_emit: Mapping[CueKind, float] = field(default_factory=dict)
    cue_shift: Mapping[CueKind, float] = field(default_factory=dict)
    base_shift_task: float = 0.0
    base_shift_dialogue: float = 0.0

    def __post_init__(self) -> None:
        if self.dialogues < 1 or self.turns_per_dialogue < 1:
            raise GeneratorConfigError("need at least one dialogue and one turn per dialogue")
        if not 1 <= self.pairs <= self.dialogues:
            raise GeneratorConfigError("pairs must be between 1 and the number of dialogues")
        for label, table in (("cue_emit", self.cue_emit), ("cue_shift", self.cue_shift)):
            for kind, p in table.items():
                if not 0.0 <= p <= 1.0:
                    raise GeneratorConfigError(f"{label}[{kind}] must be a probability, got {p!r}")
        for label, p in (("base_shift_task", self.base_shift_task), ("base_shift_dialogue", self.base_shift_dialogue)):
            if not 0.0 <= p <= 1.0:
                raise GeneratorConfigError(f"{label} must be a probability, got {p!r}")


def gen_synthetic(config: GeneratorConfig, seed: int) -> Corpus:
    """Generate a corpus deterministically from (config, seed)."""
    rng = random.Random(seed)
    emitted_kinds = [spec.kind for spec in canonical_specs() if spec.kind in config.cue_emit]
    dialogues = []
    for d in range(config.dialogues):
        pair_index = d % config.pairs
        agents = (f"a{pair_index}", f"b{pair_index}")
        ti_holder = agents[0]
        di_holder = agents[0]
        turns = []
        for t in range(config.turns_per_dialogue):
            speaker = agents[t % 2]
            hearer = agents[(t + 1) % 2]
            cues = tuple(k for k in emitted_kinds if rng.random() < config.cue_emit[k])
            turn = Turn(speaker, hearer, ti_holder, di_holder, cues)
            turns.append(turn)

            next_ti, next_di = ti_holder, di_holder
            for kind in cues:
                if kind not in config.cue_shift or lookup(kind).effect is not CueEffect.BOTH:
                    continue
                if rng.random() < config.cue_shift[kind]:
                    next_ti = agent_of(lookup(kind).expected_holder, turn)
            for kind in cues:
                if kind not in config.cue_shift:
                    continue
                if rng.random() < config.cue_shift[kind]:
                    next_di = agent_of(lookup(kind).expected_holder, turn)
            if config.base_shift_task > 0.0 and rng.random() < config.base_shift_task:
                next_ti = agents[0] if next_ti == agents[1] else agents[1]
            if config.base_shift_dialogue > 0.0 and rng.random() < config.base_shift_dialogue:
                next_di = agents[0] if next_di == agents[1] else agents[1]
            ti_holder, di_holder = next_ti, next_di
        dialogues.append(Dialogue(f"d{d + 1}", agents, tuple(turns)))
    return Corpus(config.name, tuple(dialogues))
