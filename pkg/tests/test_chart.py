import numpy as np
import pytest
from hypothesis import given, strategies as st

from dpparser import bruteforce as bf
from dpparser.chart import (
    ScoreTables, chart_size, decode, decode_cost_augmented, decode_eager, decode_hybrid,
    sequence_cost, sequence_score,
)
from dpparser.corpus import ParseTree, is_projective
from dpparser.transition import (
    LR, RA, RE, RR, SH, SystemKind, apply, initial, is_terminal, replay, sequence_to_tree, viable,
    legal,
)

from conftest import projective_trees

SYSTEMS = ("hybrid", "eager")


def tables_with(system, n, **entries):
    tables = ScoreTables.zeros(system, n)
    for key, value in entries.items():
        t, a, b = key.split("_")
        tables[t][int(a), int(b)] = value
    return tables


def test_hybrid_examples():
    r = decode_hybrid(ScoreTables.zeros("hybrid", 2))
    assert r.score == 0.0 and is_projective(r.tree)
    assert sequence_to_tree(r.sequence, 2, "hybrid") == r.tree
    r = decode_hybrid(tables_with("hybrid", 2, LR_1_2=5.0))
    assert (r.tree.heads, r.score) == ((2, 0), 5.0)
    assert sequence_score(tables_with("hybrid", 2, LR_1_2=5.0), [SH, SH, LR, SH, RR]) == 5.0


def test_eager_examples():
    r = decode_eager(ScoreTables.zeros("eager", 1))
    assert (r.tree.heads, r.score) == ((0,), 0.0)
    r = decode_eager(tables_with("eager", 2, RA_0_1=3.0, RA_1_2=4.0))
    assert (r.tree.heads, r.score) == ((0, 1), 7.0)


def test_decoder_errors():
    with pytest.raises(ValueError):
        decode_hybrid(ScoreTables.zeros("eager", 2))
    bad = ScoreTables.zeros("hybrid", 2)
    bad["SH"][0, 1] = np.nan
    with pytest.raises(ValueError):
        decode(bad)
    with pytest.raises(ValueError):
        decode(ScoreTables.zeros("hybrid", 0))


def test_cost_augmented_examples():
    gold = ParseTree((2, 0, 2))
    best = max(sum(a != b for a, b in zip(t.heads, gold.heads))
               for t in bf.enumerate_projective_trees(3))
    for system in SYSTEMS:
        r = decode_cost_augmented(ScoreTables.zeros(system, 3), gold)
        assert r.score == best
        tables = ScoreTables.zeros(system, 3)
        for seq_t, a, b in _gold_features(gold, system):
            tables[seq_t][a, b] = 100.0
        r = decode_cost_augmented(tables, gold)
        assert r.tree == gold
        assert r.score == pytest.approx(decode(tables).score)


def _gold_features(gold, system):
    from dpparser.chart import sequence_features
    from dpparser.transition import static_oracle
    return sequence_features(static_oracle(gold, system), system, gold.n)


@pytest.mark.parametrize("system", SYSTEMS)
@pytest.mark.parametrize("n", range(1, 8))
def test_exact_vs_enumeration(system, n):
    rng = np.random.default_rng(n)
    for _ in range(15):
        tables = ScoreTables.random(system, n, rng)
        r = decode(tables)
        assert r.score == pytest.approx(bf.brute_best(tables)[1], abs=1e-9)
        assert sequence_score(tables, r.sequence) == pytest.approx(r.score, abs=1e-9)
        assert sequence_to_tree(r.sequence, n, system) == r.tree


@pytest.mark.parametrize("system", SYSTEMS)
@pytest.mark.parametrize("n", range(1, 7))
def test_cost_augmented_vs_enumeration(system, n):
    rng = np.random.default_rng(100 + n)
    trees = bf.enumerate_projective_trees(n)
    for _ in range(15):
        tables = ScoreTables.random(system, n, rng)
        gold = trees[rng.integers(len(trees))]
        r = decode_cost_augmented(tables, gold)
        assert r.score == pytest.approx(bf.brute_best(tables, gold)[1], abs=1e-9)
        assert r.score == pytest.approx(
            sequence_score(tables, r.sequence) + sequence_cost(r.sequence, gold, system), abs=1e-9)


@pytest.mark.parametrize("system", SYSTEMS)
@given(n=st.integers(1, 30), seed=st.integers(0, 2**32 - 1))
def test_decode_beats_greedy(system, n, seed):
    rng = np.random.default_rng(seed)
    tables = ScoreTables.random(system, n, rng, -3, 3)
    c, seq = initial(n), []
    while not is_terminal(c):
        options = viable(c, system) if system == "eager" else legal(c, system)
        if c.stack:
            t = max(options, key=lambda t: tables[t][c.stack[-1], c.buffer_front])
        else:
            t = options[0]
        seq.append(t)
        c = apply(c, t, system)
    r = decode(tables)
    assert r.score >= sequence_score(tables, seq) - 1e-9
    assert is_projective(r.tree)
    assert sequence_score(tables, r.sequence) == pytest.approx(r.score, abs=1e-9)


@given(gold=projective_trees(max_n=14), seed=st.integers(0, 2**32 - 1))
def test_cost_augmented_consistency(gold, seed):
    rng = np.random.default_rng(seed)
    for system in SYSTEMS:
        tables = ScoreTables.random(system, gold.n, rng)
        r = decode_cost_augmented(tables, gold)
        plain = decode(tables)
        assert r.score >= plain.score + sequence_cost(plain.sequence, gold, system) - 1e-9
        assert r.score == pytest.approx(
            sequence_score(tables, r.sequence) + sequence_cost(r.sequence, gold, system), abs=1e-9)


def test_sequence_score_examples():
    tables = ScoreTables.random("hybrid", 2, np.random.default_rng(0))
    # the first SH has no s0 and is never scored
    assert sequence_score(tables, [SH, SH, LR, SH, RR]) == pytest.approx(
        tables["SH"][0, 1] + tables["LR"][1, 2] + tables["SH"][0, 2] + tables["RR"][2, 3])
    assert sequence_score(ScoreTables.zeros("eager", 2), [SH, RA, RA, RE, RE]) == 0.0
    with pytest.raises(ValueError):
        sequence_score(tables, [SH, SH])


def test_chart_size():
    for n in (1, 5, 40):
        assert chart_size("hybrid", n) <= (n + 2) ** 2
        assert chart_size("eager", n) <= 2 * (n + 2) ** 2
