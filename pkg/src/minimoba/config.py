"""Configuration objects for the whole pipeline.

Every experiment is driven by a single JSON document (one section per
stage) plus a master seed, so reruns are reproducible from the config
file alone.  CLI flags override config values; config values override
the defaults below.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

# One decision tick == one frame.  Wall-clock quantities in this file
# (label offsets, early windows) are specified in seconds and converted
# with this rate.
FRAMES_PER_SECOND = 12


@dataclass
class EnvConfig:
    """Map constants, unit stats, reward weights, respawn delays."""

    map_size: int = 24
    max_frames: int = 2000
    starting_gold: int = 100
    hero_respawn_frames: int = 50
    monster_respawn_frames: int = 200
    minion_wave_interval: int = 50
    minion_move_period: int = 2  # minions advance one cell every N frames

    # reward weights per head
    gold_weight: float = 0.005
    xp_weight: float = 0.001
    kill_weight: float = 1.0
    death_weight: float = -1.0
    hero_damage_weight: float = 0.002
    structure_damage_weight: float = 0.002
    turret_destroy_weight: float = 0.5
    win_weight: float = 2.5

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class DemoConfig:
    games_per_strategy: int = 12
    noise_rate: float = 0.05  # chance of a random legal move per decision
    # resource_grab raids far-side camps only during this opening window
    early_window_seconds: float = 20.0

    @property
    def early_window_frames(self) -> int:
        return int(round(self.early_window_seconds * FRAMES_PER_SECOND))


@dataclass
class LabelConfig:
    """Future-offset windowing for goal label extraction."""

    c_seconds: float = 30.0
    epsilon_seconds: float = 3.0

    @property
    def c_frames(self) -> int:
        return int(round(self.c_seconds * FRAMES_PER_SECOND))

    @property
    def epsilon_frames(self) -> int:
        return int(round(self.epsilon_seconds * FRAMES_PER_SECOND))


@dataclass
class MetaConfig:
    """Supervised goal-predictor training settings."""

    aux_weight: float = 1.0  # balance between goal loss and lineup auto-encoding
    focal_alpha: float = 0.75
    focal_gamma: float = 2.0
    learning_rate: float = 1e-4
    batch_size: int = 64
    epochs: int = 20
    eval_fraction: float = 0.1
    temperature: float = 1.0
    unit_embed: int = 32
    unit_hidden: tuple[int, ...] = (32, 32)
    query_hidden: tuple[int, ...] = (32,)
    stats_hidden: tuple[int, ...] = (32,)
    trunk_hidden: tuple[int, ...] = (64,)


@dataclass
class PPOConfig:
    """Dual-clip PPO and rollout collection settings."""

    clip_tau: float = 0.2
    dual_clip_c: float = 3.0
    discount: float = 0.995
    gae_lambda: float = 0.95
    goal_refresh_frames: int = 60  # goal held fixed for N frames
    head_weights: tuple[float, ...] = (1.0, 1.0, 1.0, 1.0, 1.0, 1.0)
    epochs_per_batch: int = 2
    minibatch_size: int = 512
    rollout_games: int = 4
    iterations: int = 60
    learning_rate: float = 1e-4
    entropy_bonus: float = 0.01
    value_coef: float = 0.5
    temperature: float = 1.0
    hidden: tuple[int, ...] = (64, 64)
    probe_games: int = 2  # per-iteration win-rate probe vs the scripted laner

    def __post_init__(self) -> None:
        if not 0.0 < self.clip_tau < 1.0:
            raise ValueError(f"clip_tau must lie in (0, 1), got {self.clip_tau}")
        if self.dual_clip_c <= 1.0 + self.clip_tau:
            raise ValueError("dual_clip_c must exceed 1 + clip_tau")
        if not 0.0 < self.discount <= 1.0:
            raise ValueError(f"discount must lie in (0, 1], got {self.discount}")
        if any(w < 0 for w in self.head_weights):
            raise ValueError("head weights must be non-negative")


@dataclass
class EvalConfig:
    games_per_pair: int = 200
    entropy_matches: int = 200
    dbi_matches_per_lineup: int = 50
    case_matches: int = 50
    embed_stride: int = 10
    elo_k_factor: float = 16.0
    elo_passes: int = 20


@dataclass
class RunConfig:
    seed: int = 0
    env: EnvConfig = field(default_factory=EnvConfig)
    demos: DemoConfig = field(default_factory=DemoConfig)
    labels: LabelConfig = field(default_factory=LabelConfig)
    meta: MetaConfig = field(default_factory=MetaConfig)
    ppo: PPOConfig = field(default_factory=PPOConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        cfg = cls()
        sections = {
            "env": EnvConfig,
            "demos": DemoConfig,
            "labels": LabelConfig,
            "meta": MetaConfig,
            "ppo": PPOConfig,
            "eval": EvalConfig,
        }
        for key, value in doc.items():
            if key == "seed":
                cfg.seed = int(value)
            elif key in sections:
                setattr(cfg, key, _build_section(sections[key], value))
            else:
                raise KeyError(f"unknown config section {key!r}")
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _build_section(section_cls, doc: dict):
    known = {f.name: f for f in fields(section_cls)}
    kwargs = {}
    for key, value in doc.items():
        if key not in known:
            raise KeyError(f"unknown {section_cls.__name__} field {key!r}")
        if isinstance(value, list):
            value = tuple(value)
        kwargs[key] = value
    return section_cls(**kwargs)
