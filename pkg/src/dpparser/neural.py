"""Bi-LSTM feature encoder with an MLP transition scorer and a biaffine edge
scorer, all with hand-written reverse-mode gradients (numpy only).

A sentence of n tokens is encoded as n+2 vectors: ROOT at position 0, the
tokens, and the end marker at n+1. The MLP reads the concatenation of a few
positional vectors; for the {s0, b0} feature set every (a, b) pair is scored
at once to fill the DP score tables.
"""
from __future__ import annotations

import enum
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .chart import ScoreTables
from .corpus import Vocabulary, read_embeddings
from .transition import Configuration, SystemKind, TRANSITIONS, system_kind

EDGE = "edge"   # model kind for the edge-factored (biaffine) scorer


@dataclass(frozen=True)
class ModelConfig:
    word_dim: int = 100
    pos_dim: int = 28
    lstm_hidden: int = 256
    lstm_layers: int = 2
    mlp_hidden: int = 256
    biaffine_dim: int = 256
    lstm_dropout: float = 0.0
    mlp_dropout: float = 0.0
    dtype: str = "float32"

    def __post_init__(self):
        for name in ("word_dim", "pos_dim", "lstm_hidden", "lstm_layers", "mlp_hidden", "biaffine_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        for name in ("lstm_dropout", "mlp_dropout"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ValueError(f"{name} must lie in [0, 1)")
        if self.dtype not in ("float32", "float64"):
            raise ValueError("dtype must be float32 or float64")

    @property
    def encoding_dim(self) -> int:
        return 2 * self.lstm_hidden


class FeatureSet(enum.IntEnum):
    """Positional features read by the MLP, named by how many there are."""

    B0 = 1
    S0_B0 = 2
    S1_S0_B0 = 3
    S2_S1_S0_B0 = 4

    def positions(self, config: Configuration) -> tuple[int, ...]:
        """Sentence indices of the features; -1 marks an absent stack slot."""
        stack = [config.s(j) for j in range(self.value - 2, -1, -1)]
        return tuple(-1 if i is None else i for i in stack) + (config.buffer_front,)


def model_kind(value) -> SystemKind | str:
    return EDGE if value in (EDGE, "edge-factored") else system_kind(value)


def _glorot(rng, shape, dtype):
    fan_in, fan_out = shape[0], shape[-1]
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class ScoreModel:
    """Parameters and forward/backward passes.

    ``kind`` is a transition system (MLP over ``features``) or ``"edge"``
    (biaffine edge scorer)."""

    def __init__(self, kind, n_words: int, n_tags: int, config: ModelConfig = ModelConfig(),
                 features: FeatureSet | int = FeatureSet.S0_B0,
                 rng: np.random.Generator | None = None):
        self.kind = model_kind(kind)
        self.features = FeatureSet(features)
        self.config = config
        self.n_words, self.n_tags = n_words, n_tags
        rng = np.random.default_rng(0) if rng is None else rng
        self.params = self._init_params(rng)

    @property
    def dtype(self):
        return np.dtype(self.config.dtype)

    @property
    def n_transitions(self) -> int:
        return 0 if self.kind == EDGE else len(TRANSITIONS[self.kind])

    def _init_params(self, rng) -> dict[str, np.ndarray]:
        cfg, dt = self.config, self.dtype
        H = cfg.lstm_hidden
        p = {
            "word_emb": rng.uniform(-1, 1, (self.n_words, cfg.word_dim)).astype(dt) * np.sqrt(3.0 / cfg.word_dim).astype(dt),
            "pos_emb": _glorot(rng, (self.n_tags, cfg.pos_dim), dt),
        }
        d_in = cfg.word_dim + cfg.pos_dim
        for layer in range(cfg.lstm_layers):
            for direction in ("fw", "bw"):
                pre = f"lstm{layer}.{direction}"
                p[f"{pre}.Wx"] = _glorot(rng, (d_in, 4 * H), dt)
                p[f"{pre}.Wh"] = _glorot(rng, (H, 4 * H), dt)
                b = np.zeros(4 * H, dt)
                b[H:2 * H] = 1.0        # forget gate
                p[f"{pre}.b"] = b
            d_in = 2 * H
        E = cfg.encoding_dim
        if self.kind == EDGE:
            D = cfg.biaffine_dim
            p["bi.Wh"] = _glorot(rng, (E, D), dt)
            p["bi.bh"] = np.zeros(D, dt)
            p["bi.Wm"] = _glorot(rng, (E, D), dt)
            p["bi.bm"] = np.zeros(D, dt)
            p["bi.U"] = _glorot(rng, (D, D), dt)
            p["bi.u"] = _glorot(rng, (D, 1), dt)[:, 0].copy()
            p["bi.v"] = _glorot(rng, (D, 1), dt)[:, 0].copy()
            p["bi.bias"] = np.zeros(1, dt)
        else:
            k, Hm, T = self.features.value, cfg.mlp_hidden, self.n_transitions
            bound = np.sqrt(6.0 / (k * E + Hm))
            for slot in range(k):
                p[f"mlp.slot{slot}"] = rng.uniform(-bound, bound, (E, Hm)).astype(dt)
            p["mlp.b1"] = np.zeros(Hm, dt)
            p["mlp.Wo"] = _glorot(rng, (T, Hm), dt)
            p["mlp.bo"] = np.zeros(T, dt)
            p["mlp.null"] = _glorot(rng, (1, E), dt)[0].copy()
        return p

    @classmethod
    def from_params(cls, kind, n_words: int, n_tags: int, config: ModelConfig,
                    features, params: dict[str, np.ndarray]) -> ScoreModel:
        """Rebuild a model from saved tensors, checking names and shapes."""
        model = cls(kind, n_words, n_tags, config, features)
        if set(params) != set(model.params):
            raise ValueError("tensor names do not match the model layout")
        for name, ref in model.params.items():
            if tuple(params[name].shape) != ref.shape:
                raise ValueError(f"tensor {name} has shape {params[name].shape}, expected {ref.shape}")
            model.params[name] = np.asarray(params[name], dtype=model.dtype).copy()
        return model

    def zero_grads(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.params.items()}

    def astype(self, dtype: str) -> ScoreModel:
        """Copy with parameters cast (used for 64-bit gradient checks)."""
        other = object.__new__(ScoreModel)
        other.kind, other.features = self.kind, self.features
        other.n_words, other.n_tags = self.n_words, self.n_tags
        other.config = ModelConfig(**{**asdict(self.config), "dtype": dtype})
        other.params = {k: v.astype(dtype) for k, v in self.params.items()}
        return other

    def forward(self, batch: Sequence[tuple[np.ndarray, np.ndarray]],
                rng: np.random.Generator | None = None, keep_cache: bool = True) -> Forward:
        """Encode a batch of (word ids, tag ids) arrays, each covering positions 0..n+1.

        Dropout is applied only when ``rng`` is given."""
        return Forward(self, batch, rng, keep_cache)


# ---------------------------------------------------------------------------
# bi-LSTM

def _sigmoid(x):
    return 0.5 * (np.tanh(0.5 * x) + 1.0)


class _LSTMCache:
    __slots__ = ("Xd", "mx", "mh", "hprev", "cprev", "i", "f", "g", "o", "tc")


def _lstm_forward(X, Wx, Wh, b, mx, mh):
    B, L, _ = X.shape
    H = Wh.shape[0]
    cache = _LSTMCache()
    Xd = X if mx is None else X * mx[:, None, :]
    XW = Xd @ Wx + b
    h = np.zeros((B, H), X.dtype)
    c = np.zeros((B, H), X.dtype)
    out = np.empty((B, L, H), X.dtype)
    gates = {k: np.empty((B, L, H), X.dtype) for k in "ifgo"}
    hprev = np.empty((B, L, H), X.dtype)
    cprev = np.empty((B, L, H), X.dtype)
    tc = np.empty((B, L, H), X.dtype)
    for t in range(L):
        hm = h if mh is None else h * mh
        z = XW[:, t] + hm @ Wh
        i = _sigmoid(z[:, :H])
        f = _sigmoid(z[:, H:2 * H])
        g = np.tanh(z[:, 2 * H:3 * H])
        o = _sigmoid(z[:, 3 * H:])
        hprev[:, t], cprev[:, t] = hm, c
        c = f * c + i * g
        tc[:, t] = np.tanh(c)
        h = o * tc[:, t]
        out[:, t] = h
        gates["i"][:, t], gates["f"][:, t], gates["g"][:, t], gates["o"][:, t] = i, f, g, o
    cache.Xd, cache.mx, cache.mh = Xd, mx, mh
    cache.hprev, cache.cprev, cache.tc = hprev, cprev, tc
    cache.i, cache.f, cache.g, cache.o = gates["i"], gates["f"], gates["g"], gates["o"]
    return out, cache


def _lstm_backward(dout, cache, Wx, Wh):
    B, L, H = dout.shape
    dZ = np.empty((B, L, 4 * H), dout.dtype)
    dWh = np.zeros_like(Wh)
    dh_next = np.zeros((B, H), dout.dtype)
    dc_next = np.zeros((B, H), dout.dtype)
    for t in range(L - 1, -1, -1):
        i, f, g, o, tc = cache.i[:, t], cache.f[:, t], cache.g[:, t], cache.o[:, t], cache.tc[:, t]
        dh = dout[:, t] + dh_next
        dc = dc_next + dh * o * (1.0 - tc * tc)
        dz = dZ[:, t]
        dz[:, :H] = dc * g * i * (1.0 - i)
        dz[:, H:2 * H] = dc * cache.cprev[:, t] * f * (1.0 - f)
        dz[:, 2 * H:3 * H] = dc * i * (1.0 - g * g)
        dz[:, 3 * H:] = dh * tc * o * (1.0 - o)
        dc_next = dc * f
        dWh += cache.hprev[:, t].T @ dz
        dh_next = dz @ Wh.T
        if cache.mh is not None:
            dh_next = dh_next * cache.mh
    D = cache.Xd.shape[2]
    flat = dZ.reshape(B * L, 4 * H)
    dWx = cache.Xd.reshape(B * L, D).T @ flat
    db = flat.sum(axis=0)
    dX = dZ @ Wx.T
    if cache.mx is not None:
        dX = dX * cache.mx[:, None, :]
    return dX, dWx, dWh, db


def _dropout_mask(rng, shape, rate, dtype):
    if rng is None or rate <= 0.0:
        return None
    return ((rng.random(shape) >= rate) / (1.0 - rate)).astype(dtype)


# ---------------------------------------------------------------------------
# forward pass with caches

class Forward:
    """Encoded batch plus everything needed for the backward pass.

    Scores are requested per sentence; the matching gradients are recorded
    with :meth:`add_config_grad`, :meth:`add_table_grad` or
    :meth:`add_edge_grad`, and :meth:`backward` turns them into parameter
    gradients."""

    def __init__(self, model: ScoreModel, batch, rng, keep_cache: bool):
        if not batch:
            raise ValueError("empty batch")
        self.model = model
        self.keep_cache = keep_cache
        self._used = False
        p, cfg, dt = model.params, model.config, model.dtype
        self.lengths = np.array([len(w) for w, _ in batch])
        B, L = len(batch), int(self.lengths.max())
        words = np.zeros((B, L), np.int64)
        tags = np.zeros((B, L), np.int64)
        for b, (w, t) in enumerate(batch):
            w, t = np.asarray(w), np.asarray(t)
            if w.shape != t.shape or len(w) < 3:
                raise ValueError("each sentence needs aligned word/tag ids for positions 0..n+1")
            if w.min() < 0 or w.max() >= model.n_words or t.min() < 0 or t.max() >= model.n_tags:
                raise ValueError("id outside the vocabulary; map unknown words to the UNK id")
            words[b, :len(w)], tags[b, :len(t)] = w, t
        self.words, self.tags = words, tags
        X = np.concatenate([p["word_emb"][words], p["pos_emb"][tags]], axis=2)

        ar = np.arange(B)[:, None]
        pos = np.arange(L)[None, :]
        rev = np.where(pos < self.lengths[:, None], self.lengths[:, None] - 1 - pos, pos)
        self._rev = (ar, rev)
        self._lstm = []
        H = cfg.lstm_hidden
        for layer in range(cfg.lstm_layers):
            outs = []
            for direction in ("fw", "bw"):
                pre = f"lstm{layer}.{direction}"
                mx = _dropout_mask(rng, (B, X.shape[2]), cfg.lstm_dropout, dt)
                mh = _dropout_mask(rng, (B, H), cfg.lstm_dropout, dt)
                inp = X if direction == "fw" else X[ar, rev]
                out, cache = _lstm_forward(inp, p[f"{pre}.Wx"], p[f"{pre}.Wh"], p[f"{pre}.b"], mx, mh)
                outs.append(out if direction == "fw" else out[ar, rev])
                self._lstm.append((pre, cache))
            X = np.concatenate(outs, axis=2)
        self.encoded_padded = X
        self._mlp_mask = _dropout_mask(rng, (B, L, X.shape[2]), cfg.mlp_dropout, dt)
        self._proj: dict[int, list[np.ndarray]] = {}
        self._edge: dict[int, tuple] = {}
        self._config_grads: list[tuple[int, np.ndarray, np.ndarray]] = []
        self._edge_grads: list[tuple[int, np.ndarray]] = []

    def __len__(self):
        return len(self.lengths)

    def encoded(self, b: int) -> np.ndarray:
        """bi-LSTM outputs for sentence b: (n+2, 2*hidden)."""
        return self.encoded_padded[b, :self.lengths[b]]

    # -- transition scoring ------------------------------------------------

    def _features_in(self, b):
        E = self.encoded(b)
        if self._mlp_mask is not None:
            E = E * self._mlp_mask[b, :self.lengths[b]]
        return np.vstack([E, self.model.params["mlp.null"][None, :]])

    def _projections(self, b) -> list[np.ndarray]:
        """Per-slot first-layer projections of every position (last row: null vector)."""
        if b not in self._proj:
            p = self.model.params
            F = self._features_in(b)
            self._proj[b] = [F @ p[f"mlp.slot{k}"] for k in range(self.model.features.value)]
        return self._proj[b]

    def _hidden(self, b, rows):
        P = self._projections(b)
        pre = P[0][rows[:, 0]]
        for k in range(1, rows.shape[1]):
            pre = pre + P[k][rows[:, k]]
        return np.tanh(pre + self.model.params["mlp.b1"])

    def _output(self, hidden):
        p = self.model.params
        return (hidden[:, None, :] * p["mlp.Wo"][None, :, :]).sum(axis=-1) + p["mlp.bo"]

    def _rows(self, b, positions) -> np.ndarray:
        rows = np.asarray(positions, dtype=np.int64).reshape(-1, self.model.features.value).copy()
        rows[rows < 0] = self.lengths[b]        # null row
        return rows

    def score_configs(self, b: int, positions) -> np.ndarray:
        """Transition scores (N, T) for N feature tuples of sentence b."""
        self._require_transition_model()
        rows = self._rows(b, positions)
        return self._output(self._hidden(b, rows))

    def score_transitions(self, b: int, positions: Sequence[int]) -> np.ndarray:
        """Scores of every transition for one feature tuple."""
        return self.score_configs(b, [positions])[0]

    def tables(self, b: int, chunk: int = 4096) -> ScoreTables:
        """All-pairs {s0, b0} scores for sentence b, as DP score tables."""
        self._require_transition_model()
        if self.model.features is not FeatureSet.S0_B0:
            raise ValueError("score tables need the {s0, b0} feature set")
        m = int(self.lengths[b])
        a, c = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
        rows = np.stack([a.ravel(), c.ravel()], axis=1)
        out = np.empty((len(rows), self.model.n_transitions), self.model.dtype)
        for lo in range(0, len(rows), chunk):
            out[lo:lo + chunk] = self._output(self._hidden(b, rows[lo:lo + chunk]))
        scores = out.T.reshape(-1, m, m)
        return ScoreTables(self.model.kind, scores)

    def add_config_grad(self, b: int, positions, dscores) -> None:
        """Record d(loss)/d(scores) for feature tuples previously scored."""
        rows = self._rows(b, positions)
        dscores = np.asarray(dscores, dtype=self.model.dtype).reshape(len(rows), -1)
        self._config_grads.append((b, rows, dscores))

    def add_table_grad(self, b: int, dtables: np.ndarray) -> None:
        """Record d(loss)/d(tables) given densely as (T, n+2, n+2)."""
        t, a, c = np.nonzero(dtables)
        if len(t) == 0:
            return
        pairs, inv = np.unique(np.stack([a, c], axis=1), axis=0, return_inverse=True)
        d = np.zeros((len(pairs), dtables.shape[0]), self.model.dtype)
        np.add.at(d, (inv.ravel(), t), dtables[t, a, c])
        self._config_grads.append((b, pairs, d))

    # -- edge scoring ------------------------------------------------------

    def edge_scores(self, b: int) -> np.ndarray:
        """Biaffine G[h, m] over positions 0..n."""
        if self.model.kind != EDGE:
            raise ValueError("edge scores need an edge-factored model")
        if b not in self._edge:
            p = self.model.params
            E = self.encoded(b)[:-1]
            if self._mlp_mask is not None:
                E = E * self._mlp_mask[b, :self.lengths[b] - 1]
            head = E @ p["bi.Wh"] + p["bi.bh"]
            mod = E @ p["bi.Wm"] + p["bi.bm"]
            hU = head @ p["bi.U"]
            G = hU @ mod.T + (head @ p["bi.u"])[:, None] + (mod @ p["bi.v"])[None, :] + p["bi.bias"][0]
            self._edge[b] = (E, head, mod, hU, G)
        return self._edge[b][4]

    def add_edge_grad(self, b: int, dG: np.ndarray) -> None:
        self._edge_grads.append((b, np.asarray(dG, dtype=self.model.dtype)))

    def _require_transition_model(self):
        if self.model.kind == EDGE:
            raise ValueError("transition scores need a transition-system model")

    # -- backward ----------------------------------------------------------

    def backward(self) -> dict[str, np.ndarray]:
        """Parameter gradients of the recorded output gradients (summed)."""
        if not self.keep_cache:
            raise RuntimeError("forward pass was run without caches; nothing to backpropagate")
        if self._used:
            raise RuntimeError("backward already ran for this forward pass")
        self._used = True
        model, p = self.model, self.model.params
        grads = model.zero_grads()
        dEnc = np.zeros_like(self.encoded_padded)
        B, L, _ = dEnc.shape

        for b, rows, dscores in self._config_grads:
            hidden = self._hidden(b, rows)
            grads["mlp.Wo"] += dscores.T @ hidden
            grads["mlp.bo"] += dscores.sum(axis=0)
            dpre = (dscores @ p["mlp.Wo"]) * (1.0 - hidden * hidden)
            grads["mlp.b1"] += dpre.sum(axis=0)
            F = self._features_in(b)
            dF = np.zeros_like(F)
            for k in range(rows.shape[1]):
                # scatter dpre into the positions feeding slot k, then one matmul
                dslot = np.zeros((len(F), dpre.shape[1]), dpre.dtype)
                np.add.at(dslot, rows[:, k], dpre)
                grads[f"mlp.slot{k}"] += F.T @ dslot
                dF += dslot @ p[f"mlp.slot{k}"].T
            grads["mlp.null"] += dF[-1]
            dE = dF[:-1]
            if self._mlp_mask is not None:
                dE = dE * self._mlp_mask[b, :self.lengths[b]]
            dEnc[b, :self.lengths[b]] += dE

        for b, dG in self._edge_grads:
            self.edge_scores(b)
            E, head, mod, hU, _ = self._edge[b]
            grads["bi.bias"] += dG.sum()
            dhead = dG @ (mod @ p["bi.U"].T) + np.outer(dG.sum(axis=1), p["bi.u"])
            dmod = dG.T @ hU + np.outer(dG.sum(axis=0), p["bi.v"])
            grads["bi.U"] += head.T @ (dG @ mod)
            grads["bi.u"] += head.T @ dG.sum(axis=1)
            grads["bi.v"] += mod.T @ dG.sum(axis=0)
            grads["bi.Wh"] += E.T @ dhead
            grads["bi.bh"] += dhead.sum(axis=0)
            grads["bi.Wm"] += E.T @ dmod
            grads["bi.bm"] += dmod.sum(axis=0)
            dE = dhead @ p["bi.Wh"].T + dmod @ p["bi.Wm"].T
            if self._mlp_mask is not None:
                dE = dE * self._mlp_mask[b, :self.lengths[b] - 1]
            dEnc[b, :self.lengths[b] - 1] += dE

        ar, rev = self._rev
        H = model.config.lstm_hidden
        dX = dEnc
        caches = list(self._lstm)
        for layer in range(model.config.lstm_layers - 1, -1, -1):
            (pre_f, cache_f), (pre_b, cache_b) = caches[2 * layer], caches[2 * layer + 1]
            dout_b = np.zeros((B, L, H), dX.dtype)
            dout_b[ar, rev] = dX[:, :, H:]
            dXf, dWx, dWh, db = _lstm_backward(np.ascontiguousarray(dX[:, :, :H]), cache_f,
                                              p[f"{pre_f}.Wx"], p[f"{pre_f}.Wh"])
            grads[f"{pre_f}.Wx"] += dWx
            grads[f"{pre_f}.Wh"] += dWh
            grads[f"{pre_f}.b"] += db
            dXr, dWx, dWh, db = _lstm_backward(dout_b, cache_b, p[f"{pre_b}.Wx"], p[f"{pre_b}.Wh"])
            grads[f"{pre_b}.Wx"] += dWx
            grads[f"{pre_b}.Wh"] += dWh
            grads[f"{pre_b}.b"] += db
            dXb = np.zeros_like(dXr)
            dXb[ar, rev] = dXr
            dX = dXf + dXb

        valid = np.arange(L)[None, :] < self.lengths[:, None]
        wd = model.config.word_dim
        np.add.at(grads["word_emb"], self.words[valid], dX[valid][:, :wd])
        np.add.at(grads["pos_emb"], self.tags[valid], dX[valid][:, wd:])
        return grads


# ---------------------------------------------------------------------------

def load_pretrained_embeddings(stream, vocab: Vocabulary, model: ScoreModel) -> int:
    """Overwrite word rows found in a text embedding file (exact, case-sensitive match).

    Returns the number of vocabulary rows initialised."""
    table = model.params["word_emb"]
    seen = set()
    for word, vec in read_embeddings(stream):
        if len(vec) != table.shape[1]:
            raise ValueError(f"embedding for {word!r} has dimension {len(vec)}, expected {table.shape[1]}")
        i = vocab.word_index.get(word)
        if i is None or i < len(Vocabulary.RESERVED):
            continue
        table[i] = vec
        seen.add(i)
    return len(seen)
