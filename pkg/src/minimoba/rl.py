"""Goal-conditioned self-play PPO with a dual-clipped surrogate.

The policy/value network sees the hero observation concatenated with a
one-hot encoding of its team's current macro-goal; the goal is resampled
from the goal predictor every N frames and held fixed in between, and a
goal reward head pays the per-step decrease in macro-space distance to
that goal.  A goal-free baseline uses the identical code path with the
goal features zeroed and the goal reward forced to zero.
"""

from __future__ import annotations

import numpy as np

from . import env as E
from . import macro, meta, nets
from .config import EnvConfig, PPOConfig
from .errors import DataError, NumericError, ShapeError

# Flat action set: noop, 8 move directions, attack k-th nearest enemy in range.
N_ATTACK_SLOTS = 6
ACTION_DIM = 1 + 8 + N_ATTACK_SLOTS

ACTION_HEAD = "action"
VALUE_HEADS = tuple(f"value_{name}" for name in E.REWARD_HEADS)
POLICY_INPUT_DIM = E.OBS_DIM + macro.GOAL_ONEHOT_DIM

GOAL_HEAD_IDX = E.HEAD_INDEX["goal"]


# ---------------------------------------------------------------------------
# Reward and loss kernels
# ---------------------------------------------------------------------------


def intrinsic_reward(
    c_t: np.ndarray,
    c_next: np.ndarray,
    goal: np.ndarray,
    weights: np.ndarray | None = None,
) -> float:
    """Distance-to-goal decrease in macro space (positive = approaching)."""
    return macro.goal_distance(c_t, goal, weights) - macro.goal_distance(c_next, goal, weights)


def dual_clip_objective(ratios: np.ndarray, advantages: np.ndarray, tau: float, c: float) -> np.ndarray:
    """Per-sample surrogate.

    Positive advantage: min(clip(r)A, rA), the standard PPO term.
    Negative advantage: max(cA, min(clip(r)A, rA)), bounding the loss
    from below when the ratio explodes.
    """
    ratios = np.asarray(ratios, dtype=np.float64)
    advantages = np.asarray(advantages, dtype=np.float64)
    if ratios.shape != advantages.shape:
        raise ShapeError(f"ratios {ratios.shape} vs advantages {advantages.shape}")
    if c <= 1.0:
        raise ShapeError(f"dual clip c must exceed 1, got {c}")
    clipped = np.clip(ratios, 1.0 - tau, 1.0 + tau) * advantages
    raw = ratios * advantages
    standard = np.minimum(clipped, raw)
    return np.where(advantages >= 0.0, standard, np.maximum(c * advantages, standard))


def dual_clip_policy_loss(
    logp_new: np.ndarray,
    logp_old: np.ndarray,
    advantages: np.ndarray,
    tau: float,
    c: float,
) -> float:
    """Mean surrogate objective (ascend it; optimizers minimize its negation)."""
    logp_new = np.asarray(logp_new, dtype=np.float64)
    logp_old = np.asarray(logp_old, dtype=np.float64)
    ratios = np.exp(logp_new - logp_old)
    if not np.all(np.isfinite(ratios)):
        raise NumericError("non-finite policy ratio")
    return float(dual_clip_objective(ratios, advantages, tau, c).mean())


def multi_head_value_loss(predictions: np.ndarray, targets: np.ndarray) -> float:
    """Mean over samples of the summed per-head squared errors."""
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if predictions.shape != targets.shape:
        raise ShapeError(f"predictions {predictions.shape} vs targets {targets.shape}")
    err = predictions - targets
    return float((err * err).sum(axis=-1).mean())


def compute_advantages(
    rewards: np.ndarray,
    values: np.ndarray,
    discount: float,
    gae_lambda: float,
    head_weights: np.ndarray,
    bootstrap: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """GAE over one episode.

    rewards, values: (T, ..., K) arrays ordered by frame.  Returns
    (advantages (T, ...) scalarized with the head weights, per-head
    lambda-return targets (T, ..., K)).  Advantages come back raw;
    normalization happens per training batch.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if rewards.shape[0] == 0:
        raise DataError("empty episode")
    if rewards.shape != values.shape:
        raise ShapeError(f"rewards {rewards.shape} vs values {values.shape}")
    head_weights = np.asarray(head_weights, dtype=np.float64)
    if head_weights.shape != (rewards.shape[-1],):
        raise ShapeError("head_weights must match the trailing reward dimension")

    T = rewards.shape[0]
    next_values = np.zeros_like(values)
    next_values[:-1] = values[1:]
    if bootstrap is not None:
        next_values[-1] = bootstrap
    deltas = rewards + discount * next_values - values

    adv_heads = np.zeros_like(values)
    running = np.zeros_like(values[0])
    for t in range(T - 1, -1, -1):
        running = deltas[t] + discount * gae_lambda * running
        adv_heads[t] = running
    returns = adv_heads + values
    advantages = adv_heads @ head_weights
    return advantages, returns


def v_total(values: np.ndarray, head_weights: np.ndarray) -> np.ndarray:
    """Scalarized value: the head-weight combination of the per-head values."""
    return np.asarray(values, dtype=np.float64) @ np.asarray(head_weights, dtype=np.float64)


# ---------------------------------------------------------------------------
# Policy network and action mapping
# ---------------------------------------------------------------------------


def build_policy_spec(config: PPOConfig | None = None) -> nets.NetSpec:
    config = config or PPOConfig()
    heads = [(ACTION_HEAD, ACTION_DIM)] + [(name, 1) for name in VALUE_HEADS]
    return nets.NetSpec(
        input_width=POLICY_INPUT_DIM,
        hidden=tuple(config.hidden),
        heads=tuple(heads),
    )


def new_policy(config: PPOConfig | None = None, seed: int = 0) -> tuple[nets.NetSpec, nets.NetParams]:
    spec = build_policy_spec(config)
    return spec, nets.init_params(spec, seed)


def attack_candidates(state: E.GameState, hero: E.Unit) -> list[E.Unit]:
    """Live hostile units in range, nearest first (ties by id)."""
    cands = [
        u
        for u in state.units.values()
        if u.alive and u.team != hero.team and E._chebyshev(hero, u) <= hero.range
    ]
    cands.sort(key=lambda u: (E._chebyshev(hero, u), u.id))
    return cands[:N_ATTACK_SLOTS]


def to_hero_action(state: E.GameState, hero_id: int, action_idx: int) -> E.HeroAction:
    """Map a flat action index onto a concrete HeroAction (noop fallback)."""
    if action_idx == 0:
        return E.NOOP
    if 1 <= action_idx <= 8:
        return E.HeroAction.move(action_idx - 1)
    slot = action_idx - 9
    cands = attack_candidates(state, state.units[hero_id])
    if slot < len(cands):
        return E.HeroAction.attack(cands[slot].id)
    return E.NOOP


def policy_forward(
    spec: nets.NetSpec, params: nets.NetParams, inputs: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Plain inference: (action logits, per-head values (B, K))."""
    heads, _ = nets.forward(spec, params, inputs)
    values = np.concatenate([heads[name] for name in VALUE_HEADS], axis=1)
    return heads[ACTION_HEAD], values


def sample_actions(
    logits: np.ndarray, rng: np.random.Generator, greedy: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    """Sample one action per row; returns (indices, log-probs)."""
    z = logits - logits.max(axis=-1, keepdims=True)
    p = np.exp(z)
    p /= p.sum(axis=-1, keepdims=True)
    if greedy:
        idx = p.argmax(axis=-1)
    else:
        cum = np.cumsum(p, axis=-1)
        u = rng.random(size=(p.shape[0], 1))
        idx = (u > cum).sum(axis=-1)
    logp = np.log(p[np.arange(p.shape[0]), idx])
    return idx.astype(np.int64), logp


# ---------------------------------------------------------------------------
# Rollout collection
# ---------------------------------------------------------------------------


class RolloutGame:
    """Columnar transition storage for one self-play game."""

    def __init__(self, obs, goals, goal_enc, actions, logps, rewards, values, winner, seed):
        self.obs = obs  # (T, 10, OBS_DIM) float32
        self.goals = goals  # (T, 2, MACRO_DIM) int16; zeros in baseline mode
        self.goal_enc = goal_enc  # (T, 2, GOAL_ONEHOT_DIM) float32; zeros in baseline mode
        self.actions = actions  # (T, 10) int16
        self.logps = logps  # (T, 10) float64
        self.rewards = rewards  # (T, 10, K) float64
        self.values = values  # (T, 10, K) float64
        self.winner = winner
        self.seed = seed

    def __len__(self) -> int:
        return self.obs.shape[0]

    def hero_goal_enc(self, hero_id: int) -> np.ndarray:
        return self.goal_enc[:, 0 if hero_id < 5 else 1]

    def policy_inputs(self, frames: np.ndarray, heroes: np.ndarray) -> np.ndarray:
        team_idx = (heroes >= 5).astype(np.int64)
        return np.concatenate(
            [self.obs[frames, heroes], self.goal_enc[frames, team_idx]], axis=1
        ).astype(np.float64)

    def transitions(self):
        """Row view used by contract tests (frame, hero, obs, goal, ...)."""
        from dataclasses import dataclass

        @dataclass
        class Transition:
            frame: int
            hero_id: int
            observation: np.ndarray
            goal: np.ndarray
            action: int
            log_prob: float
            rewards: np.ndarray
            values: np.ndarray
            done: bool

        T = len(self)
        for t in range(T):
            for h in range(10):
                yield Transition(
                    frame=t,
                    hero_id=h,
                    observation=self.obs[t, h],
                    goal=self.goals[t, 0 if h < 5 else 1],
                    action=int(self.actions[t, h]),
                    log_prob=float(self.logps[t, h]),
                    rewards=self.rewards[t, h],
                    values=self.values[t, h],
                    done=t == T - 1,
                )


DEFAULT_LINEUP_POOL = (
    ("marksman", "mage", "warrior", "assassin", "supporter"),
    ("marksman", "supporter", "warrior", "assassin", "supporter"),
    ("marksman", "mage", "warrior", "assassin", "supporter"),
)


def collect_rollouts(
    policy_spec: nets.NetSpec,
    policy_params: nets.NetParams,
    meta_model: meta.MetaModel | None,
    env_config: EnvConfig,
    ppo_config: PPOConfig,
    n_games: int,
    seed: int,
    lineups: tuple | None = None,
    record_macro_audit: bool = False,
) -> list[RolloutGame]:
    """Self-play games with per-window goal refresh.

    When meta_model is None (baseline mode) the goal feature block stays
    zero and the goal reward head stays zero.
    """
    if ppo_config.goal_refresh_frames < 1:
        raise ShapeError("goal refresh interval must be >= 1")
    pool = lineups or DEFAULT_LINEUP_POOL
    ss = np.random.SeedSequence(seed)
    games = []
    for i, child in enumerate(ss.spawn(n_games)):
        game_seed = int(child.generate_state(1)[0])
        lineup = list(pool[i % len(pool)])
        games.append(
            _play_rollout_game(
                policy_spec,
                policy_params,
                meta_model,
                env_config,
                ppo_config,
                lineup,
                game_seed,
            )
        )
    return games


def _play_rollout_game(
    policy_spec,
    policy_params,
    meta_model,
    env_config: EnvConfig,
    ppo_config: PPOConfig,
    lineup: list,
    seed: int,
) -> RolloutGame:
    state = E.new_game(lineup, lineup, seed, env_config)
    rng = np.random.default_rng(seed)
    N = ppo_config.goal_refresh_frames
    guided = meta_model is not None

    obs_rows, goal_rows, enc_rows = [], [], []
    act_rows, logp_rows, rew_rows, val_rows = [], [], [], []
    cur_goals = np.zeros((2, macro.MACRO_DIM), dtype=np.int16)
    cur_enc = np.zeros((2, macro.GOAL_ONEHOT_DIM), dtype=np.float32)

    lineup_names = [r.value for r in state.lineup(E.BLUE)], [r.value for r in state.lineup(E.RED)]
    macro_now = np.stack([macro.extract_macro_state(state, t) for t in E.TEAMS])

    while not state.done:
        obs = E.observe_all(state)
        if guided and state.frame % N == 0:
            for ti, team in enumerate(E.TEAMS):
                feats = macro.meta_features(
                    obs[0 if team == E.BLUE else 5],
                    lineup_names[ti],
                    lineup_names[1 - ti],
                )
                g = meta.sample_goal(meta_model, feats, ppo_config.temperature, rng)
                cur_goals[ti] = g
                cur_enc[ti] = macro.encode_goal(g)

        inputs = np.concatenate(
            [obs, np.repeat(cur_enc, 5, axis=0)], axis=1
        )
        logits, values = policy_forward(policy_spec, policy_params, inputs)
        action_idx, logps = sample_actions(logits, rng)
        actions = {h: to_hero_action(state, h, int(action_idx[h])) for h in E.HERO_IDS}

        _, rewards, _ = E.step(state, actions)
        macro_next = np.stack([macro.extract_macro_state(state, t) for t in E.TEAMS])
        if guided:
            for ti in range(2):
                r_goal = intrinsic_reward(macro_now[ti], macro_next[ti], cur_goals[ti])
                rewards[5 * ti : 5 * ti + 5, GOAL_HEAD_IDX] = r_goal
        macro_now = macro_next

        obs_rows.append(obs.astype(np.float32))
        goal_rows.append(cur_goals.copy())
        enc_rows.append(cur_enc.copy())
        act_rows.append(action_idx.astype(np.int16))
        logp_rows.append(logps)
        rew_rows.append(rewards)
        val_rows.append(values)

    return RolloutGame(
        obs=np.stack(obs_rows),
        goals=np.stack(goal_rows),
        goal_enc=np.stack(enc_rows),
        actions=np.stack(act_rows),
        logps=np.stack(logp_rows),
        rewards=np.stack(rew_rows),
        values=np.stack(val_rows),
        winner=state.winner,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# PPO update and training loop
# ---------------------------------------------------------------------------


def _surrogate_tensor(cache, actions, logp_old, advantages, tau, c):
    logits = cache.head(ACTION_HEAD)
    logp_new = nets.pick(nets.log_softmax(logits), actions)
    ratio = nets.exp(nets.sub(logp_new, nets.const(logp_old)))
    r_adv = nets.mul(ratio, nets.const(advantages))
    clip_adv = nets.mul(nets.clip(ratio, 1.0 - tau, 1.0 + tau), nets.const(advantages))
    standard = nets.minimum(clip_adv, r_adv)
    dual = nets.maximum(standard, nets.const(c * advantages))
    obj = nets.where(advantages >= 0.0, standard, dual)
    return nets.mean_all(obj), logits


def _entropy_tensor(logits):
    p = nets.softmax(logits)
    lp = nets.log_softmax(logits)
    return nets.mean_all(nets.neg(nets.sum_last(nets.mul(p, lp))))


def ppo_update(
    policy_spec: nets.NetSpec,
    policy_params: nets.NetParams,
    adam: nets.AdamState,
    games: list[RolloutGame],
    ppo_config: PPOConfig,
    rng: np.random.Generator,
) -> dict:
    """Minibatch epochs over one iteration's rollouts (in-place update)."""
    w = np.asarray(ppo_config.head_weights, dtype=np.float64)

    adv_all, ret_by_game = [], []
    index = []
    for gi, game in enumerate(games):
        adv, ret = compute_advantages(
            game.rewards, game.values, ppo_config.discount, ppo_config.gae_lambda, w
        )
        adv_all.append(adv.ravel())
        ret_by_game.append(ret)
        T = len(game)
        gg, tt, hh = np.meshgrid([gi], np.arange(T), np.arange(10), indexing="ij")
        index.append(np.stack([gg.ravel(), tt.ravel(), hh.ravel()], axis=1))
    index = np.concatenate(index)
    adv_flat = np.concatenate(adv_all)
    adv_flat = (adv_flat - adv_flat.mean()) / (adv_flat.std() + 1e-8)

    n = index.shape[0]
    stats = {"policy_objective": 0.0, "value_loss": 0.0, "entropy": 0.0}
    n_batches = 0
    for _ in range(ppo_config.epochs_per_batch):
        perm = rng.permutation(n)
        for start in range(0, n, ppo_config.minibatch_size):
            sel = perm[start : start + ppo_config.minibatch_size]
            if sel.size < 2:
                continue
            gidx, tidx, hidx = index[sel, 0], index[sel, 1], index[sel, 2]
            inputs = np.empty((sel.size, POLICY_INPUT_DIM))
            actions = np.empty(sel.size, dtype=np.int64)
            logp_old = np.empty(sel.size)
            returns = np.empty((sel.size, len(VALUE_HEADS)))
            for gi in np.unique(gidx):
                m = gidx == gi
                game = games[gi]
                inputs[m] = game.policy_inputs(tidx[m], hidx[m])
                actions[m] = game.actions[tidx[m], hidx[m]]
                logp_old[m] = game.logps[tidx[m], hidx[m]]
                returns[m] = ret_by_game[gi][tidx[m], hidx[m]]
            advantages = adv_flat[sel]

            _, cache = nets.forward(policy_spec, policy_params, inputs)
            obj, logits = _surrogate_tensor(
                cache, actions, logp_old, advantages, ppo_config.clip_tau, ppo_config.dual_clip_c
            )
            preds = nets.concat([cache.head(name) for name in VALUE_HEADS], axis=1)
            diff = nets.sub(preds, nets.const(returns))
            vloss = nets.mean_all(nets.sum_last(nets.mul(diff, diff)))
            ent = _entropy_tensor(logits)
            loss = nets.add(
                nets.add(nets.neg(obj), nets.mul_const(vloss, ppo_config.value_coef)),
                nets.mul_const(ent, -ppo_config.entropy_bonus),
            )
            if not np.isfinite(loss.value):
                raise NumericError(f"non-finite PPO loss {loss.value!r}; aborting")
            grads = nets.grad_from_scalar(loss, cache, policy_params)
            nets.adam_step(policy_params, grads, adam)

            stats["policy_objective"] += float(obj.value)
            stats["value_loss"] += float(vloss.value)
            stats["entropy"] += float(ent.value)
            n_batches += 1
    for k in stats:
        stats[k] /= max(n_batches, 1)
    return stats


def mean_episode_returns(games: list[RolloutGame]) -> np.ndarray:
    """Per-head return summed over frames, averaged over heroes and games."""
    per_game = [g.rewards.sum(axis=0).mean(axis=0) for g in games]
    return np.mean(per_game, axis=0)


def train_policy(
    env_config: EnvConfig,
    ppo_config: PPOConfig,
    meta_model: meta.MetaModel | None,
    iterations: int | None,
    seed: int,
    out_dir=None,
    resume: bool = False,
    progress=None,
) -> tuple[nets.NetSpec, nets.NetParams, list[dict]]:
    """Iterate collect -> update; optionally checkpoint/log for resume.

    meta_model None trains the goal-free baseline on the identical code
    path (zero goal features, zero goal reward).
    """
    from pathlib import Path

    from . import play

    iterations = ppo_config.iterations if iterations is None else iterations
    spec, params = new_policy(ppo_config, seed=seed)
    adam = nets.AdamState.for_params(params, lr=ppo_config.learning_rate)
    start_iter = 0
    history: list[dict] = []

    ckpt_path = Path(out_dir) / "policy_latest.ckpt" if out_dir is not None else None
    trainer_path = Path(ckpt_path).with_suffix(".trainer.npz") if ckpt_path else None
    if resume:
        if ckpt_path is None or not ckpt_path.exists():
            raise DataError("resume requested but no checkpoint directory/file present")
        spec, params, _ = nets.load_checkpoint(ckpt_path)
        st = np.load(trainer_path)
        adam = nets.AdamState.for_params(params, lr=ppo_config.learning_rate)
        adam.m, adam.v, adam.t = st["m"], st["v"], int(st["t"])
        start_iter = int(st["iteration"])

    mode = "baseline" if meta_model is None else "guided"
    for it in range(start_iter, iterations):
        iter_seed = int(np.random.SeedSequence([seed, it]).generate_state(1)[0])
        games = collect_rollouts(
            spec, params, meta_model, env_config, ppo_config,
            n_games=ppo_config.rollout_games, seed=iter_seed,
        )
        update_rng = np.random.default_rng(iter_seed + 1)
        stats = ppo_update(spec, params, adam, games, ppo_config, update_rng)
        returns = mean_episode_returns(games)
        row = {"iteration": it, "mode": mode}
        for name, val in zip(E.REWARD_HEADS, returns):
            row[f"return_{name}"] = float(val)
        row.update(stats)
        row["frames"] = int(sum(len(g) for g in games))
        row["probe_win_rate"] = play.probe_win_rate(
            spec, params, meta_model, env_config, ppo_config,
            n_games=ppo_config.probe_games, seed=iter_seed + 2,
        )
        history.append(row)
        if progress is not None:
            progress(row)
        if ckpt_path is not None:
            save_policy_checkpoint(ckpt_path, spec, params, meta_model is not None)
            np.savez(trainer_path, m=adam.m, v=adam.v, t=adam.t, iteration=it + 1)

    if ckpt_path is not None and iterations == start_iter:
        save_policy_checkpoint(ckpt_path, spec, params, meta_model is not None)
    return spec, params, history


def save_policy_checkpoint(path, spec: nets.NetSpec, params: nets.NetParams, guided: bool) -> None:
    nets.save_checkpoint(
        path, spec, params,
        extra={"kind": "policy", "guided": bool(guided), "action_dim": ACTION_DIM},
    )


def load_policy_checkpoint(path) -> tuple[nets.NetSpec, nets.NetParams, dict]:
    spec, params, extra = nets.load_checkpoint(path)
    if extra.get("kind") != "policy":
        raise DataError(f"{path}: not a policy checkpoint")
    return spec, params, extra
