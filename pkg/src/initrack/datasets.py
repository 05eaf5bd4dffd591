"""Bundled corpora.

The original annotated dialogue collections are not redistributable, so the
package ships a replica corpus that reproduces the published joint
task/dialogue initiative distribution (cell counts 37 / 274 / 4 / 727 over
1042 turns for the system agent) without any utterance content.
"""

from __future__ import annotations

from importlib import resources

from .corpus import Corpus, parse_corpus

REPLICA_TRAINS91 = "replica_trains91.dti"


def replica_path(name: str = REPLICA_TRAINS91):
    return resources.files("initrack").joinpath("data").joinpath(name)


def load_replica(name: str = REPLICA_TRAINS91) -> Corpus:
    text = replica_path(name).read_text(encoding="utf-8")
    return parse_corpus(text, name)
