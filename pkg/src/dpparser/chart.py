"""Exact O(n^3) decoding for arc-hybrid and arc-eager over {s0, b0} score tables.

Items are two-index assertions [i, j] (arc-eager adds a flag b on i: whether
w_i already has its head). An item says: starting with w_i as s0, some
transition sequence ends with w_i as s0 and w_j as b0, everything strictly
between attached. Shift and right-attach contribute nothing when they fire;
their score is added by the reduce rule that consumes the item they open,
because only then are both (s0, b0) indices of that earlier configuration in
hand. The ROOT shift out of the empty initial stack scores 0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .corpus import ParseTree, is_projective
from .transition import (
    RA, RE, RR, LR, SH, SystemKind, TRANSITIONS, Transition, initial, apply, is_terminal,
    replay, system_kind,
)

_LR, _RX = 1, 2     # backpointer rule codes; _RX is RR (hybrid) or RE (eager)


@dataclass(frozen=True)
class ScoreTables:
    """One (n+2)x(n+2) matrix per transition: scores[t][a, b] = f_t(w_a, w_b)
    for a configuration with s0 = w_a and b0 = w_b."""

    system: SystemKind
    scores: np.ndarray

    def __post_init__(self):
        system = system_kind(self.system)
        object.__setattr__(self, "system", system)
        scores = np.asarray(self.scores, dtype=np.float64)
        k = len(TRANSITIONS[system])
        if scores.ndim != 3 or scores.shape[0] != k or scores.shape[1] != scores.shape[2]:
            raise ValueError(f"{system.value} tables need shape ({k}, n+2, n+2), got {scores.shape}")
        object.__setattr__(self, "scores", scores)

    @property
    def n(self) -> int:
        return self.scores.shape[1] - 2

    @property
    def transitions(self) -> tuple[Transition, ...]:
        return TRANSITIONS[self.system]

    def index(self, t: Transition) -> int:
        return self.transitions.index(Transition(t))

    def __getitem__(self, t: Transition) -> np.ndarray:
        return self.scores[self.index(t)]

    @classmethod
    def zeros(cls, system, n: int) -> ScoreTables:
        system = system_kind(system)
        return cls(system, np.zeros((len(TRANSITIONS[system]), n + 2, n + 2)))

    @classmethod
    def random(cls, system, n: int, rng: np.random.Generator, low=-1.0, high=1.0) -> ScoreTables:
        system = system_kind(system)
        return cls(system, rng.uniform(low, high, size=(len(TRANSITIONS[system]), n + 2, n + 2)))


@dataclass(frozen=True)
class DecodeResult:
    tree: ParseTree
    sequence: tuple[Transition, ...]
    score: float


@njit(cache=True)
def _hybrid_chart(sh, rr, lr, cost_right, cost_left, n):
    size = n + 2
    score = np.full((size, size), -np.inf)
    split = np.full((size, size), -1, dtype=np.int64)
    rule = np.zeros((size, size), dtype=np.int8)
    for i in range(n + 1):
        score[i, i + 1] = 0.0
    for width in range(2, size):
        for k in range(0, size - width):
            j = k + width
            best = -np.inf
            bi = -1
            br = 0
            for i in range(k + 1, j):
                base = score[k, i] + score[i, j]
                if j <= n:
                    v = base + sh[k, i] + lr[i, j] + cost_left[i, j]
                    if v > best:
                        best = v
                        bi = i
                        br = _LR
                v = base + sh[k, i] + rr[i, j] + cost_right[k, i]
                if v > best:
                    best = v
                    bi = i
                    br = _RX
            score[k, j] = best
            split[k, j] = bi
            rule[k, j] = br
    return score, split, rule


@njit(cache=True)
def _eager_chart(sh, ra, lr, re, cost_right, cost_left, n):
    size = n + 2
    score = np.full((2, size, size), -np.inf)
    split = np.full((2, size, size), -1, dtype=np.int64)
    rule = np.zeros((2, size, size), dtype=np.int8)
    score[0, 0, 1] = 0.0
    for j in range(1, n + 1):
        score[0, j, j + 1] = 0.0
        score[1, j, j + 1] = 0.0
    for width in range(2, size):
        for k in range(0, size - width):
            j = k + width
            for b in range(2):
                if b == 1 and k == 0:
                    continue
                best = -np.inf
                bi = -1
                br = 0
                for i in range(k + 1, j):
                    left = score[b, k, i]
                    if left == -np.inf:
                        continue
                    if j <= n and score[0, i, j] > -np.inf:
                        v = left + score[0, i, j] + sh[k, i] + lr[i, j] + cost_left[i, j]
                        if v > best:
                            best = v
                            bi = i
                            br = _LR
                    if score[1, i, j] > -np.inf:
                        v = left + score[1, i, j] + ra[k, i] + re[i, j] + cost_right[k, i]
                        if v > best:
                            best = v
                            bi = i
                            br = _RX
                score[b, k, j] = best
                split[b, k, j] = bi
                rule[b, k, j] = br
    return score, split, rule


def _backtrack(split, rule, n, eager):
    """Rebuild the transition sequence and heads from backpointers (iteratively)."""
    heads = [-1] * (n + 2)
    seq = [SH]                       # the ROOT shift
    todo = [("item", 0, 0, n + 1)]
    while todo:
        task = todo.pop()
        if task[0] == "emit":
            seq.append(task[1])
            continue
        _, b, k, j = task
        if j == k + 1:
            continue
        i = int(split[b, k, j]) if eager else int(split[k, j])
        r = int(rule[b, k, j]) if eager else int(rule[k, j])
        if r == _LR:
            heads[i] = j
            push, reduce_, inner = SH, LR, 0
        else:
            heads[i] = k
            push, reduce_, inner = (RA, RE, 1) if eager else (SH, RR, 0)
        # processed in reverse: [k,i] then push then [i,j] then reduce
        todo.append(("emit", reduce_))
        todo.append(("item", inner, i, j))
        todo.append(("emit", push))
        todo.append(("item", b, k, i))
    return tuple(seq), ParseTree(heads[1:n + 1])


def _check_tables(tables: ScoreTables, system: SystemKind):
    if tables.system is not system:
        raise ValueError(f"expected {system.value} tables, got {tables.system.value}")
    if tables.n < 1:
        raise ValueError("sentence must have at least one token")
    if not np.isfinite(tables.scores).all():
        raise ValueError("score tables contain non-finite entries")


def _costs(n, gold):
    """Mis-attachment indicators: cost_left[i, j] for arc j->i, cost_right[k, i] for arc k->i."""
    size = n + 2
    if gold is None:
        z = np.zeros((size, size))
        return z, z
    g = np.full(size, -1)
    g[1:n + 1] = gold.heads
    idx = np.arange(size)
    # cost[h, m] = 1 unless h is m's gold head
    arc_cost = (g[None, :] != idx[:, None]).astype(np.float64)
    return arc_cost, arc_cost.T.copy()


def _decode(tables: ScoreTables, gold: ParseTree | None) -> DecodeResult:
    n = tables.n
    cost_right, cost_left = _costs(n, gold)
    if tables.system is SystemKind.ARC_HYBRID:
        s = tables.scores
        score, split, rule = _hybrid_chart(s[0], s[1], s[2], cost_right, cost_left, n)
        total = score[0, n + 1]
        seq, tree = _backtrack(split, rule, n, eager=False)
    else:
        s = tables.scores
        score, split, rule = _eager_chart(s[0], s[1], s[2], s[3], cost_right, cost_left, n)
        total = score[0, 0, n + 1]
        seq, tree = _backtrack(split, rule, n, eager=True)
    return DecodeResult(tree, seq, float(total))


def decode_hybrid(tables: ScoreTables) -> DecodeResult:
    """Highest-scoring complete arc-hybrid sequence."""
    _check_tables(tables, SystemKind.ARC_HYBRID)
    return _decode(tables, None)


def decode_eager(tables: ScoreTables) -> DecodeResult:
    """Highest-scoring complete arc-eager sequence."""
    _check_tables(tables, SystemKind.ARC_EAGER)
    return _decode(tables, None)


def decode(tables: ScoreTables) -> DecodeResult:
    if tables.system is SystemKind.ARC_HYBRID:
        return decode_hybrid(tables)
    if tables.system is SystemKind.ARC_EAGER:
        return decode_eager(tables)
    raise ValueError("exact decoding is only available for arc-hybrid and arc-eager")


def decode_cost_augmented(tables: ScoreTables, gold: ParseTree, system=None) -> DecodeResult:
    """Maximise F(t) + (number of tokens whose head differs from gold).

    Each rule that scores an arc also adds that arc's mis-attachment
    indicator, so the returned score includes the augmentation.
    """
    if system is not None and system_kind(system) is not tables.system:
        raise ValueError("system does not match the score tables")
    if tables.system not in (SystemKind.ARC_HYBRID, SystemKind.ARC_EAGER):
        raise ValueError("cost-augmented decoding needs arc-hybrid or arc-eager tables")
    _check_tables(tables, tables.system)
    if gold is None:
        raise ValueError("gold tree required")
    if not isinstance(gold, ParseTree):
        gold = ParseTree(tuple(gold))
    if gold.n != tables.n:
        raise ValueError("gold tree length does not match tables")
    if not is_projective(gold):
        raise ValueError("gold tree is not projective")
    return _decode(tables, gold)


def sequence_features(sequence, system, n: int) -> list[tuple[Transition, int, int]]:
    """(transition, s0, b0) for every step taken from a non-empty stack."""
    configs = replay(sequence, n, system)
    if not is_terminal(configs[-1]):
        raise ValueError("sequence does not reach a terminal configuration")
    return [(Transition(t), c.stack[-1], c.buffer_front)
            for t, c in zip(sequence, configs) if c.stack]


def sequence_score(tables: ScoreTables, sequence, system=None, n: int | None = None) -> float:
    """F(t): sum of f_t at the (s0, b0) features each transition is taken from."""
    if system is not None and system_kind(system) is not tables.system:
        raise ValueError("system does not match the score tables")
    n = tables.n if n is None else n
    total = 0.0
    for t, a, b in sequence_features(sequence, tables.system, n):
        total += tables[t][a, b]
    return float(total)


def sequence_cost(sequence, gold: ParseTree, system) -> int:
    """Number of tokens the sequence attaches to a non-gold head."""
    final = replay(sequence, gold.n, system)[-1]
    return sum(final.heads[m] != gold.heads[m - 1] for m in range(1, gold.n + 1))


def chart_size(system, n: int) -> int:
    """Number of chart cells allocated for a sentence of length n."""
    size = (n + 2) ** 2
    return 2 * size if system_kind(system) is SystemKind.ARC_EAGER else size
