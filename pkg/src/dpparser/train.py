"""Local (greedy, dynamic-oracle) and global (structured hinge over exact DP)
training, the Adam optimizer, dev-set model selection and reparsing ensembles."""
from __future__ import annotations

import copy
import json
import logging
import time
import zlib
from dataclasses import dataclass, field
from typing import Sequence, TextIO

import numpy as np

from .chart import decode_cost_augmented, sequence_cost, sequence_features
from .corpus import ParseTree, Sentence, Vocabulary, evaluate, is_projective
from .graph import eisner_decode, tree_score
from .neural import EDGE, FeatureSet, Forward, ModelConfig, ScoreModel, model_kind
from .parser import Parser, batches, choices, default_decoder
from .transition import (
    SystemKind, TRANSITIONS, gold_heads, apply, initial, is_terminal, oracle_loss, static_oracle,
)

log = logging.getLogger(__name__)


def named_rng(seed: int, name: str) -> np.random.Generator:
    """Independent, reproducible stream per purpose (init, shuffle, dropout, exploration)."""
    return np.random.default_rng([zlib.crc32(name.encode()), seed])


# ---------------------------------------------------------------------------
# optimizer

@dataclass(frozen=True)
class AdamConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class OptimizerState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0

    @classmethod
    def for_model(cls, model: ScoreModel) -> OptimizerState:
        return cls(model.zero_grads(), model.zero_grads())


def adam_update(model: ScoreModel, grads: dict[str, np.ndarray], state: OptimizerState,
                config: AdamConfig = AdamConfig()) -> None:
    for name, g in grads.items():
        if g.shape != model.params[name].shape:
            raise ValueError(f"gradient for {name} has shape {g.shape}, expected {model.params[name].shape}")
        if not np.isfinite(g).all():
            raise FloatingPointError(f"non-finite gradient for {name}")
    state.step += 1
    b1, b2 = config.beta1, config.beta2
    c1, c2 = 1 - b1 ** state.step, 1 - b2 ** state.step
    for name, g in grads.items():
        m, v = state.m[name], state.v[name]
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        model.params[name] -= (config.lr * (m / c1) / (np.sqrt(v / c2) + config.eps)).astype(m.dtype)


def clip_gradients(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Scale gradients in place to a global L2 norm of at most ``max_norm``; returns the norm."""
    norm = float(np.sqrt(sum(float((g.astype(np.float64) ** 2).sum()) for g in grads.values())))
    if max_norm > 0 and norm > max_norm:
        for g in grads.values():
            g *= max_norm / norm
    return norm


# ---------------------------------------------------------------------------
# losses

def global_loss(fw: Forward, b: int, gold: ParseTree) -> float:
    """Structured hinge max_t [F(t) + cost(t)] - F(t_gold), with its subgradient recorded on ``fw``."""
    model = fw.model
    if model.kind == EDGE:
        return _edge_global_loss(fw, b, gold)
    tables = fw.tables(b)
    system = tables.system
    gold_seq = static_oracle(gold, system)
    pred = decode_cost_augmented(tables, gold).sequence
    n = gold.n
    f_pred = _features_score(tables, pred, system, n)
    f_gold = _features_score(tables, gold_seq, system, n)
    loss = f_pred + sequence_cost(pred, gold, system) - f_gold
    if loss <= 0.0:
        return 0.0
    d = np.zeros_like(tables.scores)
    index = {t: k for k, t in enumerate(TRANSITIONS[system])}
    for t, a, c in sequence_features(pred, system, n):
        d[index[t], a, c] += 1.0
    for t, a, c in sequence_features(gold_seq, system, n):
        d[index[t], a, c] -= 1.0
    fw.add_table_grad(b, d)
    return float(loss)


def _features_score(tables, seq, system, n) -> float:
    total = 0.0
    for t, a, c in sequence_features(seq, system, n):
        total += tables[t][a, c]
    return total


def _edge_global_loss(fw: Forward, b: int, gold: ParseTree) -> float:
    G = fw.edge_scores(b).astype(np.float64)
    pred, _ = eisner_decode(G, gold)
    cost = sum(p != g for p, g in zip(pred.heads, gold.heads))
    loss = tree_score(G, pred) + cost - tree_score(G, gold)
    if loss <= 0.0:
        return 0.0
    dG = np.zeros_like(G)
    for m, (p, g) in enumerate(zip(pred.heads, gold.heads), start=1):
        dG[p, m] += 1.0
        dG[g, m] -= 1.0
    fw.add_edge_grad(b, dG)
    return float(loss)


def local_train_step(fw: Forward, b: int, gold: ParseTree, system, features: FeatureSet,
                     rng: np.random.Generator, explore: float = 0.1) -> float:
    """Greedy rollout with a margin-1 hinge at every configuration.

    Zero-cost transitions come from the dynamic oracle (arc-hybrid, arc-eager)
    or are the single static-oracle transition (arc-standard, which also always
    follows the gold path). A costly prediction is followed with probability
    ``explore``; otherwise the best-scoring zero-cost transition is taken."""
    system = model_kind(system)
    order = TRANSITIONS[system]
    heads = gold_heads(gold)
    static = iter(static_oracle(gold, system)) if system is SystemKind.ARC_STANDARD else None
    c = initial(gold.n)
    positions, dscores, total = [], [], 0.0
    while not is_terminal(c):
        allowed = choices(c, system)
        if static is not None:
            target = next(static)
            good = {target}
        else:
            base = oracle_loss(c, heads, system)
            good = {t for t in allowed if oracle_loss(apply(c, t, system), heads, system) == base}
        if not c.stack:
            t_next = allowed[0]               # forced ROOT shift, nothing to score
        else:
            pos = features.positions(c)
            scores = fw.score_transitions(b, pos)
            s = {t: scores[order.index(t)] for t in allowed}
            best_good = max((t for t in allowed if t in good), key=s.get)
            bad = [t for t in allowed if t not in good]
            if bad:
                best_bad = max(bad, key=s.get)
                margin = 1.0 + s[best_bad] - s[best_good]
                if margin > 0:
                    total += float(margin)
                    d = np.zeros(len(order))
                    d[order.index(best_bad)] += 1.0
                    d[order.index(best_good)] -= 1.0
                    positions.append(pos)
                    dscores.append(d)
            pred = max(allowed, key=s.get)
            if static is not None or pred in good:
                t_next = best_good if static is not None else pred
            else:
                t_next = pred if rng.random() < explore else best_good
        c = apply(c, t_next, system)
    if positions:
        fw.add_config_grad(b, positions, np.array(dscores))
    return total


# ---------------------------------------------------------------------------
# training loop

@dataclass(frozen=True)
class TrainConfig:
    system: str = "eager"               # standard | hybrid | eager | edge
    features: int = 2
    mode: str = "global"                # local | global
    epochs: int = 20
    batch_tokens: int = 1000
    seed: int = 0
    explore: float = 0.1
    clip_norm: float = 5.0
    punct: str = "ptb"
    adam: AdamConfig = field(default_factory=AdamConfig)
    model: ModelConfig = field(default_factory=ModelConfig)

    def __post_init__(self):
        kind = model_kind(self.system)
        FeatureSet(self.features)
        if self.mode not in ("local", "global"):
            raise ValueError(f"unknown training mode {self.mode!r}")
        if self.mode == "global":
            if kind is SystemKind.ARC_STANDARD:
                raise ValueError("global training is unsupported for arc-standard (no exact decoder)")
            if self.features != 2:
                raise ValueError("global training needs the {s0, b0} feature set (features=2)")
        elif kind == EDGE:
            raise ValueError("the edge-factored model is trained globally only")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.batch_tokens < 1:
            raise ValueError("batch_tokens must be positive")

    @property
    def kind(self):
        return model_kind(self.system)


@dataclass
class TrainResult:
    parser: Parser
    metrics: list[dict]
    best_epoch: int
    best_dev_uas: float
    initial_dev_uas: float
    skipped: int


def trainable(sentences: Sequence[Sentence]) -> tuple[list[Sentence], int]:
    """Annotated projective sentences, and how many others were dropped."""
    keep = [s for s in sentences if s.is_annotated and is_projective(s.gold_tree)]
    return keep, len(sentences) - len(keep)


def new_parser(config: TrainConfig, vocab: Vocabulary) -> Parser:
    model = ScoreModel(config.kind, vocab.n_words, vocab.n_tags, config.model, config.features,
                       named_rng(config.seed, "init"))
    return Parser(model, vocab, config.mode, default_decoder(config.kind, config.mode))


def train_epoch(parser: Parser, sentences: Sequence[Sentence], config: TrainConfig,
                state: OptimizerState, rngs: dict[str, np.random.Generator]) -> float:
    """One pass in shuffled ~batch_tokens minibatches; returns the summed loss."""
    model, vocab = parser.model, parser.vocab
    order = rngs["shuffle"].permutation(len(sentences))
    shuffled = [sentences[i] for i in order]
    total = 0.0
    for chunk in batches(shuffled, config.batch_tokens):
        fw = model.forward([vocab.numericalize(s) for s in chunk], rng=rngs["dropout"])
        for b, sent in enumerate(chunk):
            gold = sent.gold_tree
            if config.mode == "global":
                total += global_loss(fw, b, gold)
            else:
                total += local_train_step(fw, b, gold, model.kind, model.features,
                                          rngs["explore"], config.explore)
        grads = fw.backward()
        clip_gradients(grads, config.clip_norm)
        adam_update(model, grads, state, config.adam)
    return total


def train(train_set: Sequence[Sentence], dev_set: Sequence[Sentence], config: TrainConfig,
          metrics_log: TextIO | None = None, parser: Parser | None = None) -> TrainResult:
    """Train for ``config.epochs`` epochs, keeping the parameters with the best dev UAS."""
    sentences, skipped = trainable(train_set)
    if not sentences:
        raise ValueError("no usable training sentences (need annotated projective trees)")
    if skipped:
        log.warning("skipping %d non-projective or unannotated training sentences", skipped)
    if parser is None:
        parser = new_parser(config, Vocabulary.build(sentences))
    rngs = {name: named_rng(config.seed, name) for name in ("shuffle", "dropout", "explore")}
    state = OptimizerState.for_model(parser.model)

    def dev_score():
        if not dev_set:
            return 1.0, 1.0
        ev = evaluate(parser.parse(dev_set), dev_set, config.punct)
        return ev.uas, ev.uem

    initial_uas, _ = dev_score()
    best = (-1.0, 0, copy.deepcopy(parser.model.params))
    metrics = []
    start = time.perf_counter()
    for epoch in range(1, config.epochs + 1):
        loss = train_epoch(parser, sentences, config, state, rngs)
        uas, uem = dev_score()
        row = {"epoch": epoch, "train_loss": loss, "dev_uas": uas, "dev_uem": uem,
               "wall_time": round(time.perf_counter() - start, 3)}
        metrics.append(row)
        if metrics_log is not None:
            metrics_log.write(json.dumps(row) + "\n")
            metrics_log.flush()
        log.info("epoch %d loss %.3f dev UAS %.4f UEM %.4f", epoch, loss, uas, uem)
        if uas > best[0]:
            best = (uas, epoch, copy.deepcopy(parser.model.params))
    parser.model.params = best[2]
    return TrainResult(parser, metrics, best[1], best[0], initial_uas, skipped)


# ---------------------------------------------------------------------------
# ensembles

def vote_matrix(trees: Sequence[ParseTree]) -> np.ndarray:
    n = trees[0].n
    V = np.zeros((n + 1, n + 1))
    for tree in trees:
        if tree.n != n:
            raise ValueError("trees disagree on sentence length")
        for m, h in enumerate(tree.heads, start=1):
            V[h, m] += 1.0
    return V


def ensemble_parse(parsers: Sequence[Parser], sentences: Sequence[Sentence]) -> list[ParseTree]:
    """Each parser decodes on its own; arc votes are reparsed with Eisner."""
    if not parsers:
        raise ValueError("an ensemble needs at least one model")
    outputs = [p.parse(sentences) for p in parsers]
    return [eisner_decode(vote_matrix(trees))[0] for trees in zip(*outputs)]
