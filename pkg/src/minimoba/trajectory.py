"""Per-frame trajectory records and their JSONL serialization.

A trajectory stores one row per frame: the state snapshot (observations,
macro vectors, economy counters) plus the actions taken at that frame
and the resulting reward heads.  The final row holds the terminal state
with inert actions/rewards.  Observation logging is optional; demo
pipelines need it for label extraction, metric-only dumps usually skip
it to keep files small.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import env as E
from . import macro
from .errors import DataError


@dataclass
class Trajectory:
    meta: dict
    obs: np.ndarray | None  # (T, 10, OBS_DIM) float32, or None when not logged
    actions: np.ndarray  # (T, 10, 2) int32; last row inert
    rewards: np.ndarray  # (T, 10, N_HEADS) float64; last row zeros
    macro: np.ndarray  # (T, 2, MACRO_DIM) int32; [:, 0] blue, [:, 1] red
    gold: np.ndarray  # (T, 10) int32
    jungle: np.ndarray  # (T, 2, 2) int16; per team cumulative [near, far] kills
    done: bool
    winner: str | None

    def __len__(self) -> int:
        return self.actions.shape[0]

    def team_macro(self, team: str) -> np.ndarray:
        return self.macro[:, 0 if team == E.BLUE else 1]


class TrajectoryRecorder:
    """Accumulates rows while a game is stepped."""

    def __init__(self, state: E.GameState, meta: dict | None = None, include_obs: bool = True):
        self.meta = dict(meta or {})
        self.meta.setdefault("blue_lineup", [r.value for r in state.lineup(E.BLUE)])
        self.meta.setdefault("red_lineup", [r.value for r in state.lineup(E.RED)])
        self.include_obs = include_obs
        self._obs: list[np.ndarray] = []
        self._actions: list[np.ndarray] = []
        self._rewards: list[np.ndarray] = []
        self._macro: list[np.ndarray] = []
        self._gold: list[np.ndarray] = []
        self._jungle: list[np.ndarray] = []
        self.snapshot(state)

    def snapshot(self, state: E.GameState) -> None:
        if self.include_obs:
            self._obs.append(E.observe_all(state).astype(np.float32))
        self._macro.append(
            np.stack([macro.extract_macro_state(state, t) for t in E.TEAMS]).astype(np.int32)
        )
        self._gold.append(np.array([state.units[i].gold for i in E.HERO_IDS], dtype=np.int32))
        self._jungle.append(
            np.array(
                [
                    [state.counters[t].monsters_near, state.counters[t].monsters_far]
                    for t in E.TEAMS
                ],
                dtype=np.int16,
            )
        )

    def record_step(self, actions: dict[int, E.HeroAction], rewards: np.ndarray) -> None:
        enc = np.zeros((10, 2), dtype=np.int32)
        for hid, act in actions.items():
            enc[hid] = act.encode()
        self._actions.append(enc)
        self._rewards.append(np.asarray(rewards, dtype=np.float64))

    def finish(self, state: E.GameState) -> Trajectory:
        # Inert action/reward rows so every array has one row per snapshot.
        self._actions.append(np.zeros((10, 2), dtype=np.int32))
        self._rewards.append(np.zeros((10, E.N_HEADS), dtype=np.float64))
        return Trajectory(
            meta=self.meta,
            obs=np.stack(self._obs) if self.include_obs else None,
            actions=np.stack(self._actions),
            rewards=np.stack(self._rewards),
            macro=np.stack(self._macro),
            gold=np.stack(self._gold),
            jungle=np.stack(self._jungle),
            done=state.done,
            winner=state.winner,
        )


def write_jsonl(traj: Trajectory, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = len(traj)
    with open(path, "w") as fh:
        header = {
            "type": "header",
            "meta": traj.meta,
            "frames": n,
            "obs_dim": E.OBS_DIM if traj.obs is not None else 0,
            "macro_dim": macro.MACRO_DIM,
        }
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for t in range(n):
            row = {
                "frame": t,
                "actions": traj.actions[t].tolist(),
                "rewards": [[round(float(v), 9) for v in hero] for hero in traj.rewards[t]],
                "macro": {
                    "blue": traj.macro[t, 0].tolist(),
                    "red": traj.macro[t, 1].tolist(),
                },
                "gold": traj.gold[t].tolist(),
                "jungle": traj.jungle[t].tolist(),
                "done": bool(t == n - 1 and traj.done),
                "winner": traj.winner if t == n - 1 else None,
            }
            if traj.obs is not None:
                row["obs"] = [[round(float(v), 5) for v in hero] for hero in traj.obs[t]]
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def read_jsonl(path: str | Path) -> Trajectory:
    with open(path) as fh:
        header = json.loads(fh.readline())
        if header.get("type") != "header":
            raise DataError(f"{path}: missing trajectory header line")
        n = header["frames"]
        has_obs = header.get("obs_dim", 0) > 0
        obs = np.zeros((n, 10, E.OBS_DIM), dtype=np.float32) if has_obs else None
        actions = np.zeros((n, 10, 2), dtype=np.int32)
        rewards = np.zeros((n, 10, E.N_HEADS), dtype=np.float64)
        macro_arr = np.zeros((n, 2, macro.MACRO_DIM), dtype=np.int32)
        gold = np.zeros((n, 10), dtype=np.int32)
        jungle = np.zeros((n, 2, 2), dtype=np.int16)
        done = False
        winner = None
        count = 0
        for line in fh:
            row = json.loads(line)
            t = row["frame"]
            actions[t] = row["actions"]
            rewards[t] = row["rewards"]
            macro_arr[t, 0] = row["macro"]["blue"]
            macro_arr[t, 1] = row["macro"]["red"]
            gold[t] = row["gold"]
            jungle[t] = row["jungle"]
            if has_obs:
                obs[t] = row["obs"]
            if row["done"]:
                done = True
                winner = row["winner"]
            count += 1
        if count != n:
            raise DataError(f"{path}: header declares {n} frames, found {count}")
    return Trajectory(
        meta=header["meta"],
        obs=obs,
        actions=actions,
        rewards=rewards,
        macro=macro_arr,
        gold=gold,
        jungle=jungle,
        done=done,
        winner=winner,
    )
