"""Exhaustive enumeration oracles for small sentences.

Everything here is deliberately naive: sequences come from depth-first
expansion of :func:`transition.legal`, trees from recursive span splitting.
The chart decoders are checked against these, never the other way round.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .corpus import ParseTree
from .transition import (
    Configuration, SystemKind, Transition, TRANSITIONS, apply, initial, is_terminal,
    legal, system_kind,
)

MAX_SEQUENCE_N = 10
MAX_TREE_N = 8


class GuardError(ValueError):
    """Requested enumeration is too large to be exhaustive."""


def enumerate_sequences(system, n: int) -> list[tuple[Transition, ...]]:
    system = system_kind(system)
    if n > MAX_SEQUENCE_N:
        raise GuardError(f"n={n} exceeds the enumeration guard {MAX_SEQUENCE_N}")
    return list(_sequences(system, n))


@lru_cache(maxsize=None)
def _sequences(system: SystemKind, n: int) -> tuple[tuple[Transition, ...], ...]:
    out = []

    def expand(c: Configuration, prefix: list):
        if is_terminal(c):
            out.append(tuple(prefix))
            return
        for t in legal(c, system):
            prefix.append(t)
            expand(apply(c, t, system), prefix)
            prefix.pop()

    expand(initial(n), [])
    return tuple(out)


def enumerate_projective_trees(n: int) -> list[ParseTree]:
    if n > MAX_TREE_N:
        raise GuardError(f"n={n} exceeds the enumeration guard {MAX_TREE_N}")
    if n < 1:
        raise ValueError("n must be at least 1")
    return [ParseTree(h) for h in _trees(n)]


@lru_cache(maxsize=None)
def _trees(n: int) -> tuple[tuple[int, ...], ...]:
    # ROOT heads the span 1..n through any number of right dependents.
    trees = []
    for arcs in _dependents_right(0, 1, n):
        heads = [0] * n
        for h, m in arcs:
            heads[m - 1] = h
        trees.append(tuple(heads))
    return tuple(sorted(trees))


@lru_cache(maxsize=None)
def _headed(h: int, lo: int, hi: int) -> tuple[frozenset, ...]:
    """Arc sets of all projective subtrees rooted at h spanning exactly lo..hi."""
    out = []
    for left in _dependents_left(h, lo, h - 1):
        for right in _dependents_right(h, h + 1, hi):
            out.append(left | right)
    return tuple(out)


@lru_cache(maxsize=None)
def _dependents_right(h: int, lo: int, hi: int) -> tuple[frozenset, ...]:
    """Ways for h to cover lo..hi (all right of h) with a sequence of dependents."""
    if lo > hi:
        return (frozenset(),)
    out = []
    for end in range(lo, hi + 1):          # first dependent's subtree spans lo..end
        for m in range(lo, end + 1):
            for sub in _headed(m, lo, end):
                for rest in _dependents_right(h, end + 1, hi):
                    out.append(sub | rest | {(h, m)})
    return tuple(out)


@lru_cache(maxsize=None)
def _dependents_left(h: int, lo: int, hi: int) -> tuple[frozenset, ...]:
    if lo > hi:
        return (frozenset(),)
    out = []
    for start in range(lo, hi + 1):        # last dependent's subtree spans start..hi
        for m in range(start, hi + 1):
            for sub in _headed(m, start, hi):
                for rest in _dependents_left(h, lo, start - 1):
                    out.append(sub | rest | {(h, m)})
    return tuple(out)


@lru_cache(maxsize=None)
def _sequence_index(system: SystemKind, n: int):
    """Per-sequence (transition, s0, b0) index arrays and induced heads, for vectorised scoring."""
    seqs = _sequences(system, n)
    order = {t: k for k, t in enumerate(TRANSITIONS[system])}
    length = 2 * n + 1 if system is not SystemKind.ARC_EAGER else None
    rows_t, rows_s, rows_b, heads = [], [], [], []
    for seq in seqs:
        c = initial(n)
        ts, ss, bs = [], [], []
        for t in seq:
            if c.stack:
                ts.append(order[t])
                ss.append(c.stack[-1])
                bs.append(c.buffer_front)
            c = apply(c, t, system)
        rows_t.append(ts)
        rows_s.append(ss)
        rows_b.append(bs)
        heads.append(c.heads[1:n + 1])
    width = max(len(r) for r in rows_t) if length is None else length - 1
    # padding points at a sentinel cell holding 0 (transition slot -1 is added below)
    pad = lambda rows, fill: np.array([r + [fill] * (width - len(r)) for r in rows], dtype=np.int64)
    return (pad(rows_t, len(order)), pad(rows_s, 0), pad(rows_b, 0),
            np.array(heads, dtype=np.int64))


def all_sequence_scores(tables, gold: ParseTree | None = None) -> np.ndarray:
    """Score of every enumerated sequence (plus mis-attachment count when gold is given)."""
    system, n = tables.system, tables.n
    if n > MAX_SEQUENCE_N:
        raise GuardError(f"n={n} exceeds the enumeration guard {MAX_SEQUENCE_N}")
    t_idx, s_idx, b_idx, heads = _sequence_index(system, n)
    padded = np.concatenate([tables.scores, np.zeros((1,) + tables.scores.shape[1:])], axis=0)
    steps = padded[t_idx, s_idx, b_idx]
    total = np.zeros(len(steps))
    for k in range(steps.shape[1]):        # fixed left-to-right summation order
        total = total + steps[:, k]
    if gold is not None:
        total = total + (heads != np.asarray(gold.heads)).sum(axis=1)
    return total


def brute_best(tables, gold: ParseTree | None = None) -> tuple[tuple[Transition, ...], float]:
    """Best complete sequence by exhaustive enumeration; ties go to the first in DFS order."""
    scores = all_sequence_scores(tables, gold)
    k = int(np.argmax(scores))
    return _sequences(tables.system, tables.n)[k], float(scores[k])


def sequence_trees(system, n: int) -> list[ParseTree]:
    """Tree induced by each enumerated sequence, aligned with enumerate_sequences."""
    _, _, _, heads = _sequence_index(system_kind(system), n)
    return [ParseTree(h) for h in heads]


def tree_best_scores(tables) -> dict[tuple[int, ...], float]:
    """For every derivable tree, its best score over the sequences producing it."""
    scores = all_sequence_scores(tables)
    _, _, _, heads = _sequence_index(tables.system, tables.n)
    best: dict[tuple[int, ...], float] = {}
    for h, s in zip(map(tuple, heads.tolist()), scores):
        if h not in best or s > best[h]:
            best[h] = float(s)
    return best


def brute_edge_best(G: np.ndarray, gold: ParseTree | None = None) -> tuple[ParseTree, float]:
    """Best projective tree under edge scores G[h, m], by enumeration."""
    n = G.shape[0] - 1
    best_tree, best = None, -np.inf
    for tree in enumerate_projective_trees(n):
        s = 0.0
        for m, h in enumerate(tree.heads, start=1):
            s += G[h, m]
            if gold is not None and gold.heads[m - 1] != h:
                s += 1.0
        if s > best:
            best_tree, best = tree, s
    return best_tree, float(best)


def min_completion_loss(config: Configuration, gold: tuple[int, ...], system,
                        memo: dict | None = None) -> float:
    """Fewest mis-attached tokens over all completions of ``config`` (inf if none).

    ``gold`` is indexed 1..n with slot 0 unused.
    """
    system = system_kind(system)
    memo = {} if memo is None else memo
    key = (config.stack, config.buffer_front, config.heads)
    if key in memo:
        return memo[key]
    if is_terminal(config):
        value = float(sum(config.heads[m] != gold[m] for m in range(1, config.n + 1)))
    else:
        value = min((min_completion_loss(apply(config, t, system), gold, system, memo)
                     for t in legal(config, system)), default=float("inf"))
    memo[key] = value
    return value
