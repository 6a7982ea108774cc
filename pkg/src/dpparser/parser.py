"""Decoders wired to a trained scorer: greedy, exact DP, and Eisner."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .chart import decode
from .corpus import ParseTree, Sentence, Vocabulary
from .graph import eisner_decode
from .neural import EDGE, FeatureSet, Forward, ScoreModel
from .transition import (
    SystemKind, TRANSITIONS, Transition, apply, initial, is_terminal, legal, sequence_to_tree,
    viable,
)

DECODERS = ("greedy", "dp", "eisner")


def choices(config, system: SystemKind) -> tuple[Transition, ...]:
    """Transitions a greedy parser may pick (arc-eager skips dead ends)."""
    return viable(config, system) if system is SystemKind.ARC_EAGER else legal(config, system)


def greedy_parse(fw: Forward, b: int, n: int, system: SystemKind,
                 features: FeatureSet) -> tuple[tuple[Transition, ...], ParseTree]:
    """Follow the highest-scoring allowed transition until terminal (ties: canonical order)."""
    order = TRANSITIONS[system]
    c = initial(n)
    seq = []
    while not is_terminal(c):
        allowed = choices(c, system)
        if not c.stack:
            t = allowed[0]                 # the ROOT shift is forced
        else:
            scores = fw.score_transitions(b, features.positions(c))
            t = max(allowed, key=lambda t: scores[order.index(t)])
        seq.append(t)
        c = apply(c, t, system)
    return tuple(seq), sequence_to_tree(seq, n, system)


def default_decoder(kind, mode: str) -> str:
    if kind == EDGE:
        return "eisner"
    return "dp" if mode == "global" else "greedy"


@dataclass
class Parser:
    """A scorer plus the decoder it was trained with."""

    model: ScoreModel
    vocab: Vocabulary
    mode: str = "global"
    decoder: str | None = None

    def __post_init__(self):
        if self.decoder is None:
            self.decoder = default_decoder(self.model.kind, self.mode)
        if self.decoder not in DECODERS:
            raise ValueError(f"unknown decoder {self.decoder!r}")
        if self.decoder == "dp" and self.model.features is not FeatureSet.S0_B0:
            raise ValueError("exact decoding needs the {s0, b0} feature set")
        if (self.decoder == "eisner") != (self.model.kind == EDGE):
            raise ValueError("the Eisner decoder goes with edge-factored models only")

    @property
    def kind(self):
        return self.model.kind

    def parse_forward(self, fw: Forward, b: int, n: int) -> ParseTree:
        if self.decoder == "eisner":
            return eisner_decode(fw.edge_scores(b).astype(np.float64))[0]
        if self.decoder == "dp":
            return decode(fw.tables(b)).tree
        return greedy_parse(fw, b, n, self.model.kind, self.model.features)[1]

    def parse(self, sentences: Sequence[Sentence], batch_tokens: int = 2000) -> list[ParseTree]:
        trees = []
        for chunk in batches(sentences, batch_tokens):
            fw = self.model.forward([self.vocab.numericalize(s) for s in chunk], keep_cache=False)
            trees.extend(self.parse_forward(fw, b, s.n) for b, s in enumerate(chunk))
        return trees


def batches(items: Sequence, budget: int, size=lambda s: s.n) -> list[list]:
    """Consecutive groups whose summed size first reaches ``budget``."""
    out, cur, total = [], [], 0
    for item in items:
        cur.append(item)
        total += size(item)
        if total >= budget:
            out.append(cur)
            cur, total = [], 0
    if cur:
        out.append(cur)
    return out
