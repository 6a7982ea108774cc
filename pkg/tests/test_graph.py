import numpy as np
import pytest
from hypothesis import given, strategies as st

from dpparser import bruteforce as bf
from dpparser.chart import ScoreTables, decode, decode_eager, decode_hybrid
from dpparser.corpus import ParseTree
from dpparser.graph import eisner_decode, edge_costs, lemma1_reduction, lemma2_reduction, tree_score

from conftest import projective_trees


def test_eisner_examples():
    tree, score = eisner_decode(np.zeros((3, 3)))
    assert score == 0.0 and tree in bf.enumerate_projective_trees(2)
    G = np.zeros((3, 3))
    G[0, 2] = G[2, 1] = 1.0
    assert eisner_decode(G) == (ParseTree((2, 0)), 2.0)
    with pytest.raises(ValueError):
        eisner_decode(np.zeros((1, 1)))
    with pytest.raises(ValueError):
        eisner_decode(np.full((3, 3), np.inf))


@pytest.mark.parametrize("n", range(1, 8))
def test_eisner_vs_enumeration(n):
    rng = np.random.default_rng(n)
    trees = bf.enumerate_projective_trees(n)
    for _ in range(20):
        G = rng.uniform(-1, 1, (n + 1, n + 1))
        tree, score = eisner_decode(G)
        assert score == pytest.approx(bf.brute_edge_best(G)[1], abs=1e-9)
        assert tree_score(G, tree) == pytest.approx(score, abs=1e-9)
        gold = trees[rng.integers(len(trees))]
        aug_tree, aug = eisner_decode(G, gold)
        assert aug == pytest.approx(bf.brute_edge_best(G, gold)[1], abs=1e-9)
        assert aug == pytest.approx(tree_score(G + edge_costs(gold), aug_tree), abs=1e-9)


def test_lemma1_examples():
    assert not lemma1_reduction(np.zeros((4, 4))).scores.any()
    G = np.zeros((3, 3))
    G[0, 1] = 7.0
    G[2, 1] = 2.0
    t = lemma1_reduction(G)
    assert t["RA"][0, 1] == 7.0
    assert t["LR"][1, 2] == 2.0
    assert not t["SH"].any() and not t["RE"].any()


@pytest.mark.parametrize("n", range(1, 6))
def test_lemma1_per_tree(n):
    """Every eager derivation of a tree scores exactly that tree's edge score."""
    G = np.random.default_rng(n).uniform(-1, 1, (n + 1, n + 1))
    tables = lemma1_reduction(G)
    scores = bf.all_sequence_scores(tables)
    for tree, s in zip(bf.sequence_trees("eager", n), scores):
        assert s == pytest.approx(tree_score(G, tree), abs=1e-12)


@given(n=st.integers(1, 25), seed=st.integers(0, 2**32 - 1))
def test_lemma1_optimum(n, seed):
    G = np.random.default_rng(seed).uniform(-1, 1, (n + 1, n + 1))
    r = decode_eager(lemma1_reduction(G))
    tree, score = eisner_decode(G)
    assert abs(r.score - score) <= 1e-12
    assert tree_score(G, r.tree) == pytest.approx(score, abs=1e-12)


def test_lemma2_examples():
    assert not lemma2_reduction(ScoreTables.zeros("hybrid", 3)).scores.any()
    hybrid = ScoreTables.zeros("hybrid", 2)
    hybrid["LR"][1, 2] = 5.0
    a, b = decode_hybrid(hybrid), decode_eager(lemma2_reduction(hybrid))
    assert a.score == b.score == 5.0
    assert a.tree == b.tree == ParseTree((2, 0))
    with pytest.raises(ValueError):
        lemma2_reduction(ScoreTables.zeros("eager", 2))


@pytest.mark.parametrize("n", range(1, 6))
def test_lemma2_per_tree(n):
    rng = np.random.default_rng(10 + n)
    for _ in range(5):
        hybrid = ScoreTables.random("hybrid", n, rng)
        a = bf.tree_best_scores(hybrid)
        b = bf.tree_best_scores(lemma2_reduction(hybrid))
        assert a.keys() == b.keys()
        for heads in a:
            assert a[heads] == pytest.approx(b[heads], abs=1e-9)


@given(n=st.integers(1, 25), seed=st.integers(0, 2**32 - 1))
def test_lemma2_optimum(n, seed):
    hybrid = ScoreTables.random("hybrid", n, np.random.default_rng(seed))
    assert decode(lemma2_reduction(hybrid)).score == pytest.approx(decode(hybrid).score, abs=1e-9)


def test_eager_strictly_contains_edge_factored():
    """An eager table set whose tree scores no edge-factored G reproduces (n = 3)."""
    n = 3
    tables = ScoreTables.random("eager", n, np.random.default_rng(0))
    best = bf.tree_best_scores(tables)
    trees = list(best)
    edges = [(h, m) for m in range(1, n + 1) for h in range(n + 1) if h != m]
    A = np.array([[float(heads[m - 1] == h) for h, m in edges] for heads in trees])
    y = np.array([best[h] for h in trees])
    assert np.linalg.matrix_rank(A) < len(trees)
    assert _residual(A, y) > 1e-3
    # sanity: edge-factored scores themselves are representable
    G = np.random.default_rng(1).uniform(-1, 1, (n + 1, n + 1))
    y_edge = np.array([tree_score(G, ParseTree(h)) for h in trees])
    assert _residual(A, y_edge) < 1e-20


def _residual(A, y):
    x = np.linalg.lstsq(A, y, rcond=None)[0]
    return float(((A @ x - y) ** 2).sum())


@given(gold=projective_trees(max_n=20))
def test_gold_edges_win(gold):
    G = np.zeros((gold.n + 1, gold.n + 1))
    for m, h in enumerate(gold.heads, start=1):
        G[h, m] = 1.0
    assert eisner_decode(G) == (gold, float(gold.n))
