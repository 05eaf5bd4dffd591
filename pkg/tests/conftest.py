from __future__ import annotations

import pytest

from initrack.corpus import Corpus, Dialogue, Turn
from initrack.cues import parse_cue


def make_turn(speaker: str, hearer: str, ti: str, di: str, cues: tuple[str, ...] = ()) -> Turn:
    return Turn(speaker, hearer, ti, di, tuple(parse_cue(c) for c in cues))


def make_dialogue(did: str, agents: tuple[str, str], rows) -> Dialogue:
    """rows: (ti, di, cue tokens) per turn; speakers alternate from agents[0]."""
    turns = []
    for t, (ti, di, cues) in enumerate(rows):
        speaker = agents[t % 2]
        hearer = agents[(t + 1) % 2]
        turns.append(make_turn(speaker, hearer, ti, di, cues))
    return Dialogue(did, agents, tuple(turns))


def make_corpus(name: str, *dialogues: Dialogue) -> Corpus:
    return Corpus(name, tuple(dialogues))


@pytest.fixture
def handtrace_corpus() -> Corpus:
    """Two turns; a prompt on turn 1 precedes a dialogue-initiative shift."""
    return make_corpus(
        "handtrace",
        make_dialogue("d1", ("a", "b"), [("a", "a", ("no_new_info:prompt",)), ("a", "b", ())]),
    )


def corpus_to_plain(corpus: Corpus) -> list[dict]:
    """Convert to the plain-dict form consumed by the straight-line oracle."""
    out = []
    for dialogue in corpus.dialogues:
        out.append(
            {
                "id": dialogue.id,
                "turns": [
                    {
                        "speaker": turn.speaker,
                        "hearer": turn.hearer,
                        "ti": turn.ti_holder,
                        "di": turn.di_holder,
                        "cues": [k.value for k in turn.cues],
                    }
                    for turn in dialogue.turns
                ],
            }
        )
    return out
