"""Supervised goal predictor ("what should the team aim for next?").

Per-hero feature slots go through a shared MLP into unit embeddings,
the lineup one-hot is encoded into a query vector, attention pools the
units against that query into a strategy embedding, and the remaining
game-stat features take their own MLP.  The concatenation feeds one
categorical head per macro dimension plus an auxiliary head that
reconstructs the own lineup (classification per hero slot), trained
jointly as focal(goal heads) + aux_weight * cross_entropy(lineup head).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import macro, nets
from .config import MetaConfig
from .env import HERO_FEATS
from .errors import DataError, ShapeError

AUX_SLOTS = 5
AUX_ARITY = 6
GOAL_HEAD_PREFIX = "goal_"
AUX_HEAD = "aux"


@dataclass
class MetaModel:
    spec: nets.NetSpec
    params: nets.NetParams


def build_meta_spec(config: MetaConfig | None = None) -> nets.NetSpec:
    config = config or MetaConfig()
    heads = [(f"{GOAL_HEAD_PREFIX}{d}", arity) for d, arity in enumerate(macro.MACRO_ARITIES)]
    heads.append((AUX_HEAD, AUX_SLOTS * AUX_ARITY))
    att = nets.AttentionSpec(
        n_slots=10,
        slot_width=HERO_FEATS,
        query_width=macro.LINEUP_ONEHOT_DIM,
        embed_width=config.unit_embed,
        unit_hidden=tuple(config.unit_hidden),
        query_hidden=tuple(config.query_hidden),
        stats_hidden=tuple(config.stats_hidden),
    )
    return nets.NetSpec(
        input_width=macro.META_FEATURE_DIM,
        hidden=tuple(config.trunk_hidden),
        heads=tuple(heads),
        attention=att,
    )


def new_meta_model(config: MetaConfig | None = None, seed: int = 0) -> MetaModel:
    spec = build_meta_spec(config)
    return MetaModel(spec, nets.init_params(spec, seed))


def _as_batch(batch) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if isinstance(batch, tuple):
        feats, goals, aux = batch
    else:
        if len(batch) == 0:
            raise DataError("empty batch")
        feats = np.stack([ex.features for ex in batch])
        goals = np.stack([ex.goal for ex in batch])
        aux = np.stack([ex.aux for ex in batch])
    if feats.shape[0] == 0:
        raise DataError("empty batch")
    if goals.shape[1] != macro.MACRO_DIM or aux.shape[1] != AUX_SLOTS:
        raise ShapeError(f"label arity mismatch: goals {goals.shape}, aux {aux.shape}")
    return feats, goals.astype(np.int64), aux.astype(np.int64)


def _focal_term(logits: nets.Tensor, labels: np.ndarray, alpha: float, gamma: float) -> nets.Tensor:
    p_label = nets.pick(nets.softmax(logits), labels)
    log_p = nets.log(p_label)
    if gamma == 0.0:
        weighted = log_p
    else:
        one_minus = nets.add_const(nets.neg(p_label), 1.0)
        weighted = nets.mul(nets.pow_const(one_minus, gamma), log_p)
    return nets.mul_const(nets.mean_all(weighted), -alpha)


def meta_loss(
    model: MetaModel,
    batch,
    config: MetaConfig,
) -> tuple[float, np.ndarray, dict]:
    """Loss and flat gradient for one minibatch.

    loss = mean_batch[ sum_dims focal(goal_d) ] + aux_weight * mean_batch[ lineup CE ].
    The returned breakdown keeps the two terms separate so the linear
    decomposition in aux_weight can be checked exactly.
    """
    feats, goals, aux = _as_batch(batch)
    _, cache = nets.forward(model.spec, model.params, feats)

    focal_total = None
    for d in range(macro.MACRO_DIM):
        term = _focal_term(cache.head(f"{GOAL_HEAD_PREFIX}{d}"), goals[:, d], config.focal_alpha, config.focal_gamma)
        focal_total = term if focal_total is None else nets.add(focal_total, term)

    aux_logits = nets.reshape(cache.head(AUX_HEAD), (feats.shape[0], AUX_SLOTS, AUX_ARITY))
    aux_ce = nets.mean_all(nets.neg(nets.sum_last(nets.pick(nets.log_softmax(aux_logits), aux))))

    loss = nets.add(focal_total, nets.mul_const(aux_ce, config.aux_weight))
    grads = nets.grad_from_scalar(loss, cache, model.params)
    breakdown = {
        "focal": float(focal_total.value),
        "aux_ce": float(aux_ce.value),
        "loss": float(loss.value),
    }
    return float(loss.value), grads, breakdown


def predict_goal_distribution(model: MetaModel, features: np.ndarray) -> list[np.ndarray]:
    """Per-dimension categorical distributions for a single feature vector."""
    features = np.asarray(features, dtype=np.float64)
    single = features.ndim == 1
    heads, _ = nets.forward(model.spec, model.params, features)
    out = []
    for d in range(macro.MACRO_DIM):
        z = heads[f"{GOAL_HEAD_PREFIX}{d}"]
        z = z - z.max(axis=-1, keepdims=True)
        p = np.exp(z)
        p /= p.sum(axis=-1, keepdims=True)
        out.append(p[0] if single else p)
    return out


def sample_goal(
    model: MetaModel,
    features: np.ndarray,
    temperature: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Sample each macro dimension from its temperature-scaled categorical.

    Temperatures below 1e-6 collapse to the per-dimension argmax.
    """
    if temperature < 0:
        raise ShapeError(f"temperature must be positive, got {temperature}")
    features = np.asarray(features, dtype=np.float64)
    heads, _ = nets.forward(model.spec, model.params, features)
    goal = np.empty(macro.MACRO_DIM, dtype=np.int64)
    for d in range(macro.MACRO_DIM):
        z = heads[f"{GOAL_HEAD_PREFIX}{d}"][0]
        if temperature < 1e-6:
            goal[d] = int(np.argmax(z))
            continue
        z = z / temperature
        z -= z.max()
        p = np.exp(z)
        p /= p.sum()
        goal[d] = int(rng.choice(p.shape[0], p=p))
    return goal


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


def per_dim_accuracy(model: MetaModel, feats: np.ndarray, goals: np.ndarray) -> np.ndarray:
    heads, _ = nets.forward(model.spec, model.params, feats)
    accs = np.empty(macro.MACRO_DIM)
    for d in range(macro.MACRO_DIM):
        pred = heads[f"{GOAL_HEAD_PREFIX}{d}"].argmax(axis=-1)
        accs[d] = float((pred == goals[:, d]).mean())
    return accs


def train_meta(
    examples: list[macro.LabeledExample],
    config: MetaConfig,
    seed: int,
) -> tuple[MetaModel, list[dict]]:
    """Minibatch Adam on the joint loss; returns the best-eval model.

    History rows carry per-epoch train/eval loss and per-dimension
    eval accuracy (the CLI serializes them to CSV).
    """
    if len(examples) == 0:
        raise DataError("dataset is empty")
    if len(examples) < config.batch_size:
        raise DataError(
            f"dataset has {len(examples)} examples, need at least batch_size={config.batch_size}"
        )
    rng = np.random.default_rng(seed)
    model = new_meta_model(config, seed=seed)
    adam = nets.AdamState.for_params(model.params, lr=config.learning_rate)

    feats = np.stack([ex.features for ex in examples])
    goals = np.stack([ex.goal for ex in examples]).astype(np.int64)
    aux = np.stack([ex.aux for ex in examples]).astype(np.int64)

    n = feats.shape[0]
    order = rng.permutation(n)
    n_eval = max(1, int(round(n * config.eval_fraction))) if n > 1 else 0
    eval_idx, train_idx = order[:n_eval], order[n_eval:]
    if train_idx.size == 0:
        train_idx = order

    history: list[dict] = []
    best = (np.inf, model.params.copy())
    for epoch in range(config.epochs):
        perm = rng.permutation(train_idx.size)
        losses = []
        for start in range(0, train_idx.size, config.batch_size):
            idx = train_idx[perm[start : start + config.batch_size]]
            loss, grads, _ = meta_loss(model, (feats[idx], goals[idx], aux[idx]), config)
            nets.adam_step(model.params, grads, adam)
            losses.append(loss)
        if eval_idx.size:
            eval_loss, _, _ = _loss_no_grad(model, feats[eval_idx], goals[eval_idx], aux[eval_idx], config)
            accs = per_dim_accuracy(model, feats[eval_idx], goals[eval_idx])
        else:
            eval_loss = float(np.mean(losses))
            accs = per_dim_accuracy(model, feats[train_idx], goals[train_idx])
        row = {"epoch": epoch, "train_loss": float(np.mean(losses)), "eval_loss": eval_loss}
        for d in range(macro.MACRO_DIM):
            row[f"acc_{macro.MACRO_NAMES[d]}"] = float(accs[d])
        history.append(row)
        if eval_loss < best[0]:
            best = (eval_loss, model.params.copy())

    model.params = best[1]
    return model, history


def _loss_no_grad(model, feats, goals, aux, config) -> tuple[float, None, dict]:
    heads, _ = nets.forward(model.spec, model.params, feats)
    total = 0.0
    for d in range(macro.MACRO_DIM):
        z = heads[f"{GOAL_HEAD_PREFIX}{d}"]
        z = z - z.max(axis=-1, keepdims=True)
        p = np.exp(z)
        p /= p.sum(axis=-1, keepdims=True)
        pl = np.take_along_axis(p, goals[:, d : d + 1], axis=1)[:, 0]
        total += float(
            (-config.focal_alpha * (1.0 - pl) ** config.focal_gamma * np.log(pl)).mean()
        )
    za = heads[AUX_HEAD].reshape(feats.shape[0], AUX_SLOTS, AUX_ARITY)
    za = za - za.max(axis=-1, keepdims=True)
    lp = za - np.log(np.exp(za).sum(axis=-1, keepdims=True))
    picked = np.take_along_axis(lp, aux[..., None], axis=-1)[..., 0]
    ce = float((-picked.sum(axis=-1)).mean())
    return total + config.aux_weight * ce, None, {"focal": total, "aux_ce": ce}


def save_meta_checkpoint(path: str | Path, model: MetaModel) -> None:
    nets.save_checkpoint(
        path,
        model.spec,
        model.params,
        extra={
            "kind": "meta",
            "arities": list(macro.MACRO_ARITIES),
            "feature_dim": macro.META_FEATURE_DIM,
        },
    )


def load_meta_checkpoint(path: str | Path) -> MetaModel:
    spec, params, extra = nets.load_checkpoint(path)
    if extra.get("kind") != "meta":
        raise DataError(f"{path}: not a goal-predictor checkpoint")
    return MetaModel(spec, params)


def write_history_csv(history: list[dict], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if not history:
        return
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(history[0].keys()))
        writer.writeheader()
        writer.writerows(history)
