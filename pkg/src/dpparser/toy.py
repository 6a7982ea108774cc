"""Synthetic projective treebank with deterministic, POS-keyed head rules.

Sentences follow  S -> NP VP "."  with
  NP -> PRP | DT JJ* NN PP?     (a PP is allowed inside the subject only)
  VP -> RB? VB NP PP*
  PP -> IN NP
Heads: DT/JJ take the noun of their NP; a PP's IN takes the noun before the
verb, or the verb after it; the NP inside a PP hangs from its IN; subject
and object nouns, RB and "." take the verb; the verb takes ROOT.
"""
from __future__ import annotations

import numpy as np

from .corpus import Sentence, Token

LEXICON = {
    "DT": ["the", "a", "every", "some", "this", "that"],
    "JJ": ["big", "small", "red", "old", "quick", "lazy", "happy", "green"],
    "NN": ["dog", "cat", "man", "park", "telescope", "ball", "house", "tree", "car",
           "bird", "river", "book", "city", "garden"],
    "PRP": ["he", "she", "it", "they"],
    "VB": ["sees", "likes", "finds", "takes", "chases", "reads", "paints", "builds"],
    "IN": ["in", "with", "near", "on", "under"],
    "RB": ["often", "rarely", "quietly", "never"],
    ".": ["."],
}


class _Builder:
    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.tags: list[str] = []
        self.heads: list[int] = []     # 1-based positions; filled in after construction

    def add(self, tag: str) -> int:
        self.tags.append(tag)
        self.heads.append(-1)
        return len(self.tags)

    def np_(self, allow_pp: bool) -> int:
        """Build an NP; returns the position of its head word."""
        if self.rng.random() < 0.15:
            return self.add("PRP")
        dt = self.add("DT")
        adjs = [self.add("JJ") for _ in range(self.rng.choice([0, 0, 1, 2]))]
        nn = self.add("NN")
        self.heads[dt - 1] = nn
        for j in adjs:
            self.heads[j - 1] = nn
        if allow_pp and self.rng.random() < 0.3:
            self.heads[self.pp() - 1] = nn
        return nn

    def pp(self) -> int:
        prep = self.add("IN")
        self.heads[self.np_(allow_pp=False) - 1] = prep
        return prep

    def sentence(self) -> None:
        subj = self.np_(allow_pp=True)
        adv = self.add("RB") if self.rng.random() < 0.25 else None
        verb = self.add("VB")
        self.heads[verb - 1] = 0
        self.heads[subj - 1] = verb
        if adv is not None:
            self.heads[adv - 1] = verb
        self.heads[self.np_(allow_pp=False) - 1] = verb
        for _ in range(self.rng.choice([0, 1, 1, 2])):
            self.heads[self.pp() - 1] = verb
        self.heads[self.add(".") - 1] = verb


def toy_sentence(rng: np.random.Generator, min_len: int = 5, max_len: int = 15) -> Sentence:
    while True:
        b = _Builder(rng)
        b.sentence()
        if min_len <= len(b.tags) <= max_len:
            break
    tokens = tuple(Token(str(rng.choice(LEXICON[t])), t, h) for t, h in zip(b.tags, b.heads))
    return Sentence(tokens)


def toy_treebank(n_train: int = 2000, n_dev: int = 200, seed: int = 0,
                 min_len: int = 5, max_len: int = 15) -> tuple[list[Sentence], list[Sentence]]:
    rng = np.random.default_rng(seed)
    train = [toy_sentence(rng, min_len, max_len) for _ in range(n_train)]
    dev = [toy_sentence(rng, min_len, max_len) for _ in range(n_dev)]
    return train, dev
