"""Central finite-difference check of the hand-written gradients."""
from __future__ import annotations

import numpy as np

from .neural import EDGE, FeatureSet, ScoreModel


def _random_loss(model: ScoreModel, lengths, rng):
    """A fixed random linear function of every score the model produces."""
    batch = [(rng.integers(0, model.n_words, n + 2), rng.integers(0, model.n_tags, n + 2))
             for n in lengths]
    k = model.features.value
    weights, positions = [], []
    for n in lengths:
        if model.kind == EDGE:
            weights.append(rng.normal(size=(n + 1, n + 1)))
            positions.append(None)
        elif model.features is FeatureSet.S0_B0:
            weights.append(rng.normal(size=(model.n_transitions, n + 2, n + 2)))
            positions.append(None)
        else:
            pos = rng.integers(-1, n + 2, size=(6, k))
            positions.append(pos)
            weights.append(rng.normal(size=(6, model.n_transitions)))

    def loss(fw, record=False):
        total = 0.0
        for b, (w, pos) in enumerate(zip(weights, positions)):
            if model.kind == EDGE:
                out = fw.edge_scores(b)
                if record:
                    fw.add_edge_grad(b, w)
            elif pos is None:
                out = fw.tables(b).scores
                if record:
                    fw.add_table_grad(b, w)
            else:
                out = fw.score_configs(b, pos)
                if record:
                    fw.add_config_grad(b, pos, w)
            total += float((out * w).sum())
        return total

    return batch, loss


def gradient_check(model: ScoreModel, rng: np.random.Generator, lengths=(2, 3, 4),
                   samples: int = 8, eps: float = 1e-5, perturb_grads: bool = False) -> float:
    """Max relative error between analytic and numerical gradients.

    Every parameter tensor is probed at ``samples`` random entries (64-bit
    models only; ``perturb_grads`` is a fault-injection hook)."""
    if model.dtype != np.float64:
        raise ValueError("gradient checks need a float64 model")
    batch, loss = _random_loss(model, lengths, rng)
    fw = model.forward(batch)
    loss(fw, record=True)
    grads = fw.backward()
    worst = 0.0
    for name, value in model.params.items():
        flat = value.reshape(-1)
        for idx in rng.choice(flat.size, size=min(samples, flat.size), replace=False):
            old = flat[idx]
            flat[idx] = old + eps
            up = loss(model.forward(batch, keep_cache=False))
            flat[idx] = old - eps
            down = loss(model.forward(batch, keep_cache=False))
            flat[idx] = old
            numeric = (up - down) / (2 * eps)
            analytic = grads[name].reshape(-1)[idx] * (1.5 if perturb_grads else 1.0)
            scale = max(abs(numeric), abs(analytic))
            if scale > 1e-7:
                worst = max(worst, abs(numeric - analytic) / scale)
    return worst
