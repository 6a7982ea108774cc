"""Edge-factored projective decoding and the reductions from edge scores and
arc-hybrid tables to arc-eager tables."""
from __future__ import annotations

import numpy as np
from numba import njit

from .chart import ScoreTables
from .corpus import ParseTree
from .transition import SystemKind

_LEFT, _RIGHT = 0, 1


@njit(cache=True)
def _eisner_chart(G, n):
    size = n + 1
    complete = np.full((2, size, size), -np.inf)
    incomplete = np.full((2, size, size), -np.inf)
    c_split = np.full((2, size, size), -1, dtype=np.int64)
    i_split = np.full((2, size, size), -1, dtype=np.int64)
    for i in range(size):
        complete[0, i, i] = 0.0
        complete[1, i, i] = 0.0
    for width in range(1, size):
        for i in range(0, size - width):
            j = i + width
            # trapezoids: right-reduce (i -> j) and left-reduce (i <- j)
            best = -np.inf
            bk = -1
            for k in range(i, j):
                v = complete[1, i, k] + complete[0, k + 1, j]
                if v > best:
                    best = v
                    bk = k
            incomplete[1, i, j] = best + G[i, j]
            i_split[1, i, j] = bk
            if i > 0:
                incomplete[0, i, j] = best + G[j, i]
                i_split[0, i, j] = bk
            # triangles: left-attach and right-attach
            best = -np.inf
            bk = -1
            for k in range(i, j):
                v = complete[0, i, k] + incomplete[0, k, j]
                if v > best:
                    best = v
                    bk = k
            complete[0, i, j] = best
            c_split[0, i, j] = bk
            best = -np.inf
            bk = -1
            for k in range(i + 1, j + 1):
                v = incomplete[1, i, k] + complete[1, k, j]
                if v > best:
                    best = v
                    bk = k
            complete[1, i, j] = best
            c_split[1, i, j] = bk
    return complete, c_split, i_split


def _eisner_heads(c_split, i_split, n):
    heads = [-1] * (n + 1)
    todo = [(True, _RIGHT, 0, n)]
    while todo:
        is_complete, d, i, j = todo.pop()
        if i == j:
            continue
        if is_complete:
            k = int(c_split[d, i, j])
            if d == _RIGHT:
                todo.append((False, _RIGHT, i, k))
                todo.append((True, _RIGHT, k, j))
            else:
                todo.append((True, _LEFT, i, k))
                todo.append((False, _LEFT, k, j))
        else:
            k = int(i_split[d, i, j])
            if d == _RIGHT:
                heads[j] = i
            else:
                heads[i] = j
            todo.append((True, _RIGHT, i, k))
            todo.append((True, _LEFT, k + 1, j))
    return ParseTree(heads[1:])


def eisner_decode(G: np.ndarray, gold: ParseTree | None = None) -> tuple[ParseTree, float]:
    """Best projective tree under edge scores ``G[h, m]`` (ROOT = 0 takes right dependents only).

    With ``gold``, every non-gold edge gets +1 (cost-augmented decoding)."""
    G = np.asarray(G, dtype=np.float64)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise ValueError(f"edge scores must be square, got {G.shape}")
    n = G.shape[0] - 1
    if n < 1:
        raise ValueError("sentence must have at least one token")
    G = _consulted(G)
    if not np.isfinite(G).all():
        raise ValueError("edge scores contain non-finite entries")
    if gold is not None:
        G = G + edge_costs(gold)
    complete, c_split, i_split = _eisner_chart(G, n)
    return _eisner_heads(c_split, i_split, n), float(complete[1, 0, n])


def _consulted(G):
    G = G.copy()
    np.fill_diagonal(G, 0.0)
    G[:, 0] = 0.0
    return G


def edge_costs(gold: ParseTree) -> np.ndarray:
    """cost[h, m] = 1 when h is not m's gold head."""
    n = gold.n
    cost = np.ones((n + 1, n + 1))
    for m, h in enumerate(gold.heads, start=1):
        cost[h, m] = 0.0
    cost[:, 0] = 0.0
    np.fill_diagonal(cost, 0.0)
    return cost


def tree_score(G: np.ndarray, tree: ParseTree) -> float:
    total = 0.0
    for m, h in enumerate(tree.heads, start=1):
        total += G[h, m]
    return float(total)


def lemma1_reduction(G: np.ndarray) -> ScoreTables:
    """Arc-eager tables that score every tree exactly as the edge-factored model.

    A left arc i <- j is paid by left-reduce at (s0=i, b0=j); a right arc
    k -> i by right-attach at (s0=k, b0=i). Shift and reduce score 0."""
    G = _consulted(np.asarray(G, dtype=np.float64))
    n = G.shape[0] - 1
    size = n + 2
    ra = np.zeros((size, size))
    lr = np.zeros((size, size))
    ra[:n + 1, :n + 1] = G
    lr[:n + 1, :n + 1] = G.T
    zero = np.zeros((size, size))
    return ScoreTables(SystemKind.ARC_EAGER, np.stack([zero, ra, lr, zero.copy()]))


def lemma2_reduction(hybrid: ScoreTables) -> ScoreTables:
    """Arc-eager tables with f_sh = f_ra tied to the hybrid shift score.

    Right-reduce scores move to eager reduce; left-reduce carries over."""
    if hybrid.system is not SystemKind.ARC_HYBRID:
        raise ValueError("expected arc-hybrid tables")
    sh, rr, lr = hybrid.scores
    return ScoreTables(SystemKind.ARC_EAGER, np.stack([sh, sh, lr, rr]).copy())
