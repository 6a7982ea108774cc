"""Enumeration-backed equivalence suites, runnable from the command line."""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import bruteforce as bf
from .chart import ScoreTables, decode, decode_cost_augmented, sequence_score
from .gradcheck import gradient_check
from .graph import eisner_decode, lemma1_reduction, lemma2_reduction
from .neural import ModelConfig, ScoreModel
from .transition import SystemKind, apply, dynamic_oracle_cost, initial, is_viable, legal


@dataclass
class SuiteResult:
    name: str
    passed: bool
    checks: int
    detail: str = ""
    seconds: float = 0.0


def _random_tree(rng, n):
    trees = bf.enumerate_projective_trees(n)
    return trees[rng.integers(len(trees))]


def _corrupt(tables: ScoreTables, rng) -> ScoreTables:
    """Fault-injection hook: shift every entry the decoder sees."""
    return ScoreTables(tables.system, tables.scores + rng.uniform(0.5, 1.0, tables.scores.shape))


def suite_decoders(max_n, draws, rng, fault=False):
    checks = 0
    for system in (SystemKind.ARC_HYBRID, SystemKind.ARC_EAGER):
        for n in range(1, max_n + 1):
            for _ in range(draws):
                tables = ScoreTables.random(system, n, rng)
                seen = _corrupt(tables, rng) if fault else tables
                result = decode(seen)
                _, best = bf.brute_best(tables)
                checks += 1
                if abs(result.score - best) > 1e-9:
                    return False, checks, f"{system.value} n={n}: chart {result.score} vs enumeration {best}"
                if abs(sequence_score(tables, result.sequence) - result.score) > 1e-9:
                    return False, checks, f"{system.value} n={n}: sequence does not re-score"
    return True, checks, ""


def suite_cost_augmented(max_n, draws, rng, fault=False):
    checks = 0
    for system in (SystemKind.ARC_HYBRID, SystemKind.ARC_EAGER):
        for n in range(1, max_n + 1):
            for _ in range(draws):
                tables = ScoreTables.random(system, n, rng)
                gold = _random_tree(rng, n)
                result = decode_cost_augmented(_corrupt(tables, rng) if fault else tables, gold)
                _, best = bf.brute_best(tables, gold)
                checks += 1
                if abs(result.score - best) > 1e-9:
                    return False, checks, f"{system.value} n={n}: {result.score} vs {best}"
    return True, checks, ""


def suite_eisner(max_n, draws, rng, fault=False):
    checks = 0
    for n in range(1, min(max_n, bf.MAX_TREE_N) + 1):
        for _ in range(draws):
            G = rng.uniform(-1, 1, (n + 1, n + 1))
            _, score = eisner_decode(G + (rng.uniform(0.5, 1, G.shape) if fault else 0.0))
            _, best = bf.brute_edge_best(G)
            checks += 1
            if abs(score - best) > 1e-9:
                return False, checks, f"n={n}: Eisner {score} vs enumeration {best}"
    return True, checks, ""


def suite_lemmas(max_n, draws, rng, fault=False):
    checks = 0
    for n in range(1, max_n + 1):
        for _ in range(draws):
            G = rng.uniform(-1, 1, (n + 1, n + 1))
            eager = lemma1_reduction(G)
            if fault:
                eager = _corrupt(eager, rng)
            checks += 1
            if abs(decode(eager).score - eisner_decode(G)[1]) > 1e-9:
                return False, checks, f"edge-factored into arc-eager fails at n={n}"
            hybrid = ScoreTables.random(SystemKind.ARC_HYBRID, n, rng)
            checks += 1
            if abs(decode(lemma2_reduction(hybrid)).score - decode(hybrid).score) > 1e-9:
                return False, checks, f"arc-hybrid into arc-eager fails at n={n}"
    return True, checks, ""


def suite_dynamic_oracle(max_n, draws, rng, fault=False):
    """Exhaustive over reachable configurations for every gold tree (n <= 4 for speed)."""
    checks = 0
    for system in (SystemKind.ARC_HYBRID, SystemKind.ARC_EAGER):
        for n in range(1, min(max_n, 4) + 1):
            for tree in bf.enumerate_projective_trees(n):
                gold = (-1,) + tree.heads
                memo, seen, todo = {}, set(), [initial(n)]
                while todo:
                    c = todo.pop()
                    key = (c.stack, c.buffer_front, c.heads)
                    if key in seen:
                        continue
                    seen.add(key)
                    base = bf.min_completion_loss(c, gold, system, memo)
                    if base == float("inf"):
                        continue
                    for t in legal(c, system):
                        nxt = apply(c, t, system)
                        todo.append(nxt)
                        if not is_viable(nxt, system):
                            continue
                        want = bf.min_completion_loss(nxt, gold, system, memo) - base
                        got = dynamic_oracle_cost(c, t, tree, system) + (1 if fault else 0)
                        checks += 1
                        if got != want:
                            return False, checks, f"{system.value} n={n} gold={tree.heads}: {got} vs {want}"
    return True, checks, ""


def suite_gradients(max_n, draws, rng, fault=False):
    cfg = ModelConfig(word_dim=4, pos_dim=3, lstm_hidden=3, mlp_hidden=4, biaffine_dim=3, dtype="float64")
    checks, worst = 0, 0.0
    for kind in ("hybrid", "eager", "edge"):
        model = ScoreModel(kind, 8, 5, cfg, 2, rng)
        err = gradient_check(model, rng, lengths=(2, 3, min(max_n, 4)), samples=4,
                             perturb_grads=fault)
        worst = max(worst, err)
        checks += 1
        if err >= 1e-4:
            return False, checks, f"{kind}: max relative error {err:.2e}"
    return True, checks, f"max relative error {worst:.1e}"


SUITES: dict[str, Callable] = {
    "decoders": suite_decoders,
    "cost-augmented": suite_cost_augmented,
    "eisner": suite_eisner,
    "lemmas": suite_lemmas,
    "dynamic-oracle": suite_dynamic_oracle,
    "gradients": suite_gradients,
}


def run_selftest(max_n: int = 6, draws: int = 10, seed: int = 0,
                 inject_fault: bool = False) -> list[SuiteResult]:
    results = []
    for name, suite in SUITES.items():
        rng = np.random.default_rng([seed, len(results)])
        start = time.perf_counter()
        passed, checks, detail = suite(max_n, draws, rng, inject_fault)
        results.append(SuiteResult(name, passed, checks, detail, time.perf_counter() - start))
    return results
