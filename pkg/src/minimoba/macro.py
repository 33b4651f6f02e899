"""Macro-strategic state space: extraction, distances, label windowing.

A macro-state compresses a full game state into a 10-dimensional integer
vector per team: where each of the five heroes is (region index) and
what the team has collected (gold bucket, level sum, turrets, monsters,
minion waves).  Macro-goals live in the same space: a goal is simply a
macro-state the team should reach in the near future.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import env as E
from .errors import ConfigError, DataError, ShapeError

GOLD_BUCKET_SIZE = 500
LAYOUT_VERSION = 1

# Dimension layout: 5 hero region slots then 5 team resource tallies.
MACRO_NAMES = (
    "region_h0",
    "region_h1",
    "region_h2",
    "region_h3",
    "region_h4",
    "gold_bucket",
    "level_sum",
    "turrets_destroyed",
    "monsters_taken",
    "minion_waves",
)
MACRO_ARITIES = (9, 9, 9, 9, 9, 25, 76, 7, 31, 41)
MACRO_DIM = len(MACRO_NAMES)
N_REGION_DIMS = 5
GOAL_ONEHOT_DIM = sum(MACRO_ARITIES)

_OFFSETS = np.concatenate([[0], np.cumsum(MACRO_ARITIES)[:-1]])

LINEUP_ONEHOT_DIM = 2 * 5 * len(E.ROLES)
META_FEATURE_DIM = E.OBS_DIM + LINEUP_ONEHOT_DIM


def extract_macro_state(state: E.GameState, team: str) -> np.ndarray:
    """Map a game state to the team's macro vector (pure, total).

    Dead heroes report their own base region.
    """
    layout = state.layout
    base = layout.base_region(team)
    out = np.empty(MACRO_DIM, dtype=np.int64)
    for slot, hid in enumerate(state.hero_ids(team)):
        h = state.units[hid]
        out[slot] = layout.region_at(h.x, h.y) if h.alive else base
    c = state.counters[team]
    out[5] = min(state.team_gold(team) // GOLD_BUCKET_SIZE, MACRO_ARITIES[5] - 1)
    out[6] = min(state.team_level_sum(team), MACRO_ARITIES[6] - 1)
    out[7] = min(c.turrets_destroyed, MACRO_ARITIES[7] - 1)
    out[8] = min(c.monsters_taken, MACRO_ARITIES[8] - 1)
    out[9] = min(c.minions_killed // 3, MACRO_ARITIES[9] - 1)
    return out


def goal_distance(c: np.ndarray, g: np.ndarray, weights: np.ndarray | None = None) -> float:
    """Weighted L1 distance: 0/1 mismatch on region slots, |a-b| on tallies."""
    c = np.asarray(c)
    g = np.asarray(g)
    if c.shape != (MACRO_DIM,) or g.shape != (MACRO_DIM,):
        raise ShapeError(f"macro vectors must have shape ({MACRO_DIM},), got {c.shape} and {g.shape}")
    if weights is None:
        weights = np.ones(MACRO_DIM)
    elif np.asarray(weights).shape != (MACRO_DIM,):
        raise ShapeError("weights must match the macro dimension")
    per_dim = np.empty(MACRO_DIM, dtype=np.float64)
    per_dim[:N_REGION_DIMS] = c[:N_REGION_DIMS] != g[:N_REGION_DIMS]
    per_dim[N_REGION_DIMS:] = np.abs(c[N_REGION_DIMS:] - g[N_REGION_DIMS:])
    return float(np.dot(weights, per_dim))


def encode_goal(goal: np.ndarray) -> np.ndarray:
    """Concatenated per-dimension one-hot encoding of a macro vector."""
    goal = np.asarray(goal, dtype=np.int64)
    if goal.shape != (MACRO_DIM,):
        raise ShapeError(f"goal must have shape ({MACRO_DIM},), got {goal.shape}")
    out = np.zeros(GOAL_ONEHOT_DIM, dtype=np.float64)
    out[_OFFSETS + np.clip(goal, 0, np.array(MACRO_ARITIES) - 1)] = 1.0
    return out


def lineup_onehot(ally_roles, enemy_roles) -> np.ndarray:
    out = np.zeros(LINEUP_ONEHOT_DIM, dtype=np.float64)
    n = len(E.ROLES)
    for i, role in enumerate(list(ally_roles) + list(enemy_roles)):
        out[i * n + E.ROLE_INDEX[E.HeroRole(role)]] = 1.0
    return out


def role_indices(roles) -> np.ndarray:
    return np.array([E.ROLE_INDEX[E.HeroRole(r)] for r in roles], dtype=np.int64)


def meta_features(team_obs: np.ndarray, ally_roles, enemy_roles) -> np.ndarray:
    """Goal-predictor input: [hero unit slots | lineup one-hot | game stats].

    The lineup block sits between the per-hero slots and the remaining
    observation features so the network can treat it as its query path.
    """
    team_obs = np.asarray(team_obs, dtype=np.float64)
    if team_obs.shape != (E.OBS_DIM,):
        raise ShapeError(f"observation must have shape ({E.OBS_DIM},)")
    slots = team_obs[: 10 * E.HERO_FEATS]
    stats = team_obs[10 * E.HERO_FEATS :]
    return np.concatenate([slots, lineup_onehot(ally_roles, enemy_roles), stats])


# ---------------------------------------------------------------------------
# Label extraction
# ---------------------------------------------------------------------------


@dataclass
class LabeledExample:
    features: np.ndarray  # (META_FEATURE_DIM,)
    goal: np.ndarray  # (MACRO_DIM,) int
    aux: np.ndarray  # (5,) int role indices of the own lineup


def extract_labels(
    traj,
    team: str,
    c_frames: int,
    epsilon_frames: int,
    rng: np.random.Generator,
) -> list[LabeledExample]:
    """One example per frame t with t + C + eps within the trajectory.

    The goal label is the team's macro-state at t + C', with C' drawn
    uniformly from [C - eps, C + eps].  Too-short trajectories yield an
    empty list.
    """
    if epsilon_frames < 0 or c_frames <= epsilon_frames:
        raise ConfigError(f"need C > eps >= 0, got C={c_frames}, eps={epsilon_frames}")
    if traj.obs is None:
        raise DataError("trajectory was recorded without observations")

    last = len(traj) - 1
    horizon = c_frames + epsilon_frames
    if last < horizon:
        return []

    team_idx = 0 if team == E.BLUE else 1
    hero0 = 0 if team == E.BLUE else 5
    ally = traj.meta["blue_lineup"] if team == E.BLUE else traj.meta["red_lineup"]
    enemy = traj.meta["red_lineup"] if team == E.BLUE else traj.meta["blue_lineup"]
    lineup_block = lineup_onehot(ally, enemy)
    aux = role_indices(ally)

    macro_series = traj.macro[:, team_idx]
    n_slots = 10 * E.HERO_FEATS
    out = []
    for t in range(last - horizon + 1):
        c_prime = int(rng.integers(c_frames - epsilon_frames, c_frames + epsilon_frames + 1))
        obs = traj.obs[t, hero0].astype(np.float64)
        feats = np.concatenate([obs[:n_slots], lineup_block, obs[n_slots:]])
        out.append(
            LabeledExample(
                features=feats,
                goal=macro_series[t + c_prime].astype(np.int64),
                aux=aux,
            )
        )
    return out


# ---------------------------------------------------------------------------
# Dataset files
# ---------------------------------------------------------------------------


def write_dataset(
    examples: list[LabeledExample],
    path: str | Path,
    c_frames: int,
    epsilon_frames: int,
) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        header = {
            "type": "header",
            "macro_dim": MACRO_DIM,
            "arities": list(MACRO_ARITIES),
            "c_frames": c_frames,
            "epsilon_frames": epsilon_frames,
            "layout_version": LAYOUT_VERSION,
            "feature_dim": META_FEATURE_DIM,
            "count": len(examples),
        }
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for ex in examples:
            row = {
                "features": [round(float(v), 5) for v in ex.features],
                "goal": ex.goal.tolist(),
                "aux": ex.aux.tolist(),
            }
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def read_dataset(path: str | Path) -> tuple[dict, list[LabeledExample]]:
    with open(path) as fh:
        header = json.loads(fh.readline())
        if header.get("type") != "header":
            raise DataError(f"{path}: missing dataset header line")
        if header["layout_version"] != LAYOUT_VERSION:
            raise DataError(
                f"{path}: layout version {header['layout_version']} != {LAYOUT_VERSION}"
            )
        examples = []
        for line in fh:
            row = json.loads(line)
            examples.append(
                LabeledExample(
                    features=np.array(row["features"], dtype=np.float64),
                    goal=np.array(row["goal"], dtype=np.int64),
                    aux=np.array(row["aux"], dtype=np.int64),
                )
            )
    if header["count"] != len(examples):
        raise DataError(f"{path}: header count {header['count']} != {len(examples)} rows")
    return header, examples
