"""Scripted strategy policies and demonstration generation.

Three hand-written team strategies stand in for expert replays: the
common three-lane split, a marksman-centric funnel where supporters
give up their farm, and an early jungle raid into the enemy-side camps.
Each is a declarative table (per role: ordered region objectives plus a
target-priority list) interpreted by one shared controller, with a
small chance of a random move per decision to mimic noisy play.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import env as E
from .config import DemoConfig, EnvConfig
from .errors import ConfigError
from .trajectory import Trajectory, TrajectoryRecorder

# Objective specs: ("lane", name) follow that lane's path toward the
# enemy base; ("jungle", "near"/"far") clear that side's camps;
# ("follow", role) shadow the first ally with that role.
Objective = tuple[str, str]


@dataclass(frozen=True)
class RoleRule:
    objectives: tuple[Objective, ...]
    targets: tuple[str, ...]  # attack priority by unit kind
    early_objectives: tuple[Objective, ...] | None = None


FARM_PRIORITY = ("minion", "monster", "turret", "crystal", "hero")
JUNGLE_PRIORITY = ("monster", "minion", "turret", "crystal", "hero")
HARASS_PRIORITY = ("hero",)


@dataclass(frozen=True)
class ScriptedStrategy:
    id: str
    rules: dict[E.HeroRole, RoleRule]
    lineup: tuple[E.HeroRole, ...]

    def rule_for(self, role: E.HeroRole) -> RoleRule:
        return self.rules[role]


def _laner(lane: str) -> RoleRule:
    return RoleRule(objectives=(("lane", lane),), targets=FARM_PRIORITY)


THREE_LANE = ScriptedStrategy(
    id="three_lane",
    rules={
        E.HeroRole.MARKSMAN: _laner("bot"),
        E.HeroRole.MAGE: _laner("mid"),
        E.HeroRole.WARRIOR: _laner("top"),
        E.HeroRole.TANK: _laner("top"),
        E.HeroRole.ASSASSIN: RoleRule(
            objectives=(("jungle", "near"), ("lane", "mid")), targets=JUNGLE_PRIORITY
        ),
        E.HeroRole.SUPPORTER: RoleRule(
            objectives=(("follow", "marksman"),), targets=HARASS_PRIORITY
        ),
    },
    lineup=(
        E.HeroRole.MARKSMAN,
        E.HeroRole.MAGE,
        E.HeroRole.WARRIOR,
        E.HeroRole.ASSASSIN,
        E.HeroRole.SUPPORTER,
    ),
)

MARKSMAN_CORE = ScriptedStrategy(
    id="marksman_core",
    rules={
        E.HeroRole.MARKSMAN: _laner("bot"),
        E.HeroRole.MAGE: _laner("mid"),
        E.HeroRole.WARRIOR: _laner("top"),
        E.HeroRole.TANK: _laner("top"),
        E.HeroRole.ASSASSIN: RoleRule(
            objectives=(("jungle", "near"), ("lane", "mid")), targets=JUNGLE_PRIORITY
        ),
        E.HeroRole.SUPPORTER: RoleRule(
            objectives=(("follow", "marksman"),), targets=HARASS_PRIORITY
        ),
    },
    # The mage seat is handed to a second supporter: the marksman keeps
    # both carries' farm while two escorts keep it alive.
    lineup=(
        E.HeroRole.MARKSMAN,
        E.HeroRole.SUPPORTER,
        E.HeroRole.WARRIOR,
        E.HeroRole.ASSASSIN,
        E.HeroRole.SUPPORTER,
    ),
)

RESOURCE_GRAB = ScriptedStrategy(
    id="resource_grab",
    rules={
        E.HeroRole.MARKSMAN: _laner("bot"),
        E.HeroRole.MAGE: _laner("mid"),
        E.HeroRole.WARRIOR: _laner("top"),
        E.HeroRole.TANK: _laner("top"),
        E.HeroRole.ASSASSIN: RoleRule(
            objectives=(("jungle", "near"), ("lane", "mid")),
            targets=JUNGLE_PRIORITY,
            early_objectives=(("jungle", "far"), ("jungle", "near")),
        ),
        E.HeroRole.SUPPORTER: RoleRule(
            objectives=(("follow", "marksman"),), targets=HARASS_PRIORITY
        ),
    },
    lineup=(
        E.HeroRole.MARKSMAN,
        E.HeroRole.MAGE,
        E.HeroRole.WARRIOR,
        E.HeroRole.ASSASSIN,
        E.HeroRole.SUPPORTER,
    ),
)

STRATEGIES = {s.id: s for s in (THREE_LANE, MARKSMAN_CORE, RESOURCE_GRAB)}


def get_strategy(strategy_id: str) -> ScriptedStrategy:
    try:
        return STRATEGIES[strategy_id]
    except KeyError:
        raise ConfigError(f"unknown strategy {strategy_id!r}; choose from {sorted(STRATEGIES)}")


# ---------------------------------------------------------------------------
# Policy interpreter
# ---------------------------------------------------------------------------


def _step_toward(hero: E.Unit, cell: tuple[int, int]) -> E.HeroAction:
    dx = int(np.sign(cell[0] - hero.x))
    dy = int(np.sign(cell[1] - hero.y))
    if dx == 0 and dy == 0:
        return E.NOOP
    return E.HeroAction.move(E.DIRECTIONS.index((dx, dy)))


def _pick_attack(state: E.GameState, hero: E.Unit, priority: tuple[str, ...]) -> E.HeroAction | None:
    in_range: dict[str, list[E.Unit]] = {}
    for u in state.units.values():
        if u.alive and u.team != hero.team and E._chebyshev(hero, u) <= hero.range:
            in_range.setdefault(u.kind, []).append(u)
    for kind in priority:
        group = in_range.get(kind)
        if group:
            return E.HeroAction.attack(min(group, key=lambda u: u.id).id)
    return None


def _escorted(state: E.GameState, hero: E.Unit, cell: tuple[int, int]) -> bool:
    """Advance into turret range only with an allied minion nearby."""
    danger = any(
        u.alive and u.kind == "turret" and u.team != hero.team
        and max(abs(u.x - cell[0]), abs(u.y - cell[1])) <= u.range + 1
        for u in state.units.values()
    )
    if not danger:
        return True
    return any(
        u.alive and u.kind == "minion" and u.team == hero.team and E._chebyshev(hero, u) <= 3
        for u in state.units.values()
    )


def _lane_move(state: E.GameState, hero: E.Unit, lane: str) -> E.HeroAction:
    path = state.layout.lane_paths[lane]
    dists = [max(abs(hero.x - x), abs(hero.y - y)) for x, y in path]
    idx = int(np.argmin(dists))
    if dists[idx] > 0:
        target = path[idx]
    else:
        nxt = idx + 1 if hero.team == E.BLUE else idx - 1
        if not 0 <= nxt < len(path):
            return E.NOOP
        target = path[nxt]
    if not _escorted(state, hero, target):
        return E.NOOP
    return _step_toward(hero, target)


def _jungle_move(state: E.GameState, hero: E.Unit, side: str) -> E.HeroAction | None:
    regions = (
        state.layout.near_jungle_regions(hero.team)
        if side == "near"
        else state.layout.far_jungle_regions(hero.team)
    )
    for mid, region, _cell in state.layout.camp_sites:
        if region in regions and state.units[mid].alive:
            m = state.units[mid]
            return _step_toward(hero, (m.x, m.y))
    return None  # no live camp on that side; fall through to next objective


def _follow_move(state: E.GameState, hero: E.Unit, role_name: str) -> E.HeroAction:
    role = E.HeroRole(role_name)
    allies = [u for u in state.heroes(hero.team) if u.role == role and u.id != hero.id]
    leader = allies[0] if allies else state.units[state.hero_ids(hero.team)[0]]
    if E._chebyshev(hero, leader) <= 1:
        return E.NOOP
    return _step_toward(hero, (leader.x, leader.y))


def scripted_policy_act(
    strategy: ScriptedStrategy,
    state: E.GameState,
    hero_id: int,
    rng: np.random.Generator | None = None,
    noise_rate: float = 0.0,
    early_window: int = 0,
) -> E.HeroAction:
    """Deterministic rule-table action (optionally with move noise)."""
    hero = state.units[hero_id]
    if not hero.alive:
        return E.NOOP

    if rng is not None and noise_rate > 0 and rng.random() < noise_rate:
        moves = [a for a in E.legal_actions(state, hero_id) if a.kind == E.MOVE_KIND]
        if moves:
            return moves[int(rng.integers(len(moves)))]

    rule = strategy.rule_for(hero.role)
    attack = _pick_attack(state, hero, rule.targets)
    if attack is not None:
        return attack

    objectives = rule.objectives
    if rule.early_objectives is not None and state.frame < early_window:
        objectives = rule.early_objectives
    for kind, arg in objectives:
        if kind == "lane":
            return _lane_move(state, hero, arg)
        if kind == "jungle":
            act = _jungle_move(state, hero, arg)
            if act is not None:
                return act
        elif kind == "follow":
            return _follow_move(state, hero, arg)
    return E.NOOP


# ---------------------------------------------------------------------------
# Demo generation
# ---------------------------------------------------------------------------


def play_scripted_game(
    strategy_blue: ScriptedStrategy,
    strategy_red: ScriptedStrategy,
    blue_lineup,
    red_lineup,
    seed: int,
    env_config: EnvConfig | None = None,
    noise_rate: float = 0.05,
    early_window: int = 240,
    include_obs: bool = True,
    meta: dict | None = None,
) -> Trajectory:
    """Play one scripted-vs-scripted game to completion and record it."""
    state = E.new_game(blue_lineup, red_lineup, seed, env_config)
    rng = np.random.default_rng(seed)
    recorder = TrajectoryRecorder(state, meta=meta, include_obs=include_obs)
    strategy_of = {E.BLUE: strategy_blue, E.RED: strategy_red}
    while not state.done:
        actions = {}
        for hid in E.HERO_IDS:
            actions[hid] = scripted_policy_act(
                strategy_of[state.units[hid].team],
                state,
                hid,
                rng=rng,
                noise_rate=noise_rate,
                early_window=early_window,
            )
        _, rewards, _ = E.step(state, actions)
        recorder.record_step(actions, rewards)
        recorder.snapshot(state)
    return recorder.finish(state)


def generate_demos(
    strategy: ScriptedStrategy | str,
    blue_lineup=None,
    red_lineup=None,
    n_games: int = 1,
    seed: int = 0,
    env_config: EnvConfig | None = None,
    demo_config: DemoConfig | None = None,
    include_obs: bool = True,
) -> list[Trajectory]:
    """n_games mirror matches of one strategy, seeds derived per game."""
    if isinstance(strategy, str):
        strategy = get_strategy(strategy)
    if n_games < 1:
        raise ConfigError(f"n_games must be >= 1, got {n_games}")
    demo_config = demo_config or DemoConfig()
    blue_lineup = list(blue_lineup) if blue_lineup is not None else list(strategy.lineup)
    red_lineup = list(red_lineup) if red_lineup is not None else list(strategy.lineup)

    game_seeds = derive_seeds(seed, n_games)
    out = []
    for i, game_seed in enumerate(game_seeds):
        out.append(
            play_scripted_game(
                strategy,
                strategy,
                blue_lineup,
                red_lineup,
                seed=game_seed,
                env_config=env_config,
                noise_rate=demo_config.noise_rate,
                early_window=demo_config.early_window_frames,
                include_obs=include_obs,
                meta={"strategy": strategy.id, "seed": game_seed, "game_index": i},
            )
        )
    return out


def derive_seeds(master_seed: int, n: int) -> list[int]:
    """Independent per-task integer seeds derived from one master seed."""
    ss = np.random.SeedSequence(master_seed)
    return [int(child.generate_state(1)[0]) for child in ss.spawn(n)]
