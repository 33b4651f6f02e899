"""Deterministic miniature MOBA environment.

Two teams of five role-typed heroes fight on a 24x24 cell map with three
lanes, four jungle areas, and two bases.  Minion waves march down the
lanes, turrets guard them, neutral monsters sit in jungle camps, and the
game ends when a base crystal falls (or at the frame cap).  One frame is
one decision tick; all ten heroes act simultaneously and the resolution
order is fixed by unit id, so a (seed, action sequence) pair replays to
bit-identical states.

Reward heads: farming, kda, damage, pushing, win_lose, goal.  The goal
head is left at zero here and filled by the RL layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .config import EnvConfig
from .errors import GameOverError, InvalidLineupError, NotFoundError

BLUE, RED, NEUTRAL = "blue", "red", "neutral"
TEAMS = (BLUE, RED)

# Region ids (fixed across any map size).
LANE_TOP, LANE_MID, LANE_BOT = 0, 1, 2
JUNGLE_TOP_BLUE, JUNGLE_TOP_RED = 3, 4
JUNGLE_BOT_BLUE, JUNGLE_BOT_RED = 5, 6
BASE_BLUE, BASE_RED = 7, 8
N_REGIONS = 9

REGION_KINDS = {
    LANE_TOP: "lane_top",
    LANE_MID: "lane_mid",
    LANE_BOT: "lane_bot",
    JUNGLE_TOP_BLUE: "jungle",
    JUNGLE_TOP_RED: "jungle",
    JUNGLE_BOT_BLUE: "jungle",
    JUNGLE_BOT_RED: "jungle",
    BASE_BLUE: "base_ally",
    BASE_RED: "base_enemy",
}
JUNGLE_REGIONS = (JUNGLE_TOP_BLUE, JUNGLE_TOP_RED, JUNGLE_BOT_BLUE, JUNGLE_BOT_RED)
LANE_NAMES = ("top", "mid", "bot")

# 180-degree map rotation: how each region reads from the red team's own
# frame.  Mirroring keeps macro vectors side-invariant (own base is
# always region 7, own-side jungle always 3/5, and so on).
MIRROR_REGION = {
    LANE_TOP: LANE_BOT,
    LANE_MID: LANE_MID,
    LANE_BOT: LANE_TOP,
    JUNGLE_TOP_BLUE: JUNGLE_BOT_RED,
    JUNGLE_TOP_RED: JUNGLE_BOT_BLUE,
    JUNGLE_BOT_BLUE: JUNGLE_TOP_RED,
    JUNGLE_BOT_RED: JUNGLE_TOP_BLUE,
    BASE_BLUE: BASE_RED,
    BASE_RED: BASE_BLUE,
}

# Reward head order; the goal head is appended by the RL layer.
REWARD_HEADS = ("farming", "kda", "damage", "pushing", "win_lose", "goal")
N_HEADS = len(REWARD_HEADS)
HEAD_INDEX = {name: i for i, name in enumerate(REWARD_HEADS)}

# 8-neighborhood move directions, indexed 0..7.
DIRECTIONS = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))


class HeroRole(str, Enum):
    MARKSMAN = "marksman"
    MAGE = "mage"
    WARRIOR = "warrior"
    TANK = "tank"
    ASSASSIN = "assassin"
    SUPPORTER = "supporter"


ROLES = tuple(HeroRole)
ROLE_INDEX = {role: i for i, role in enumerate(ROLES)}

# Per-role base stats: (max_hp, attack, range).
ROLE_STATS = {
    HeroRole.MARKSMAN: (300, 6, 3),
    HeroRole.MAGE: (280, 5, 2),
    HeroRole.WARRIOR: (420, 4, 1),
    HeroRole.TANK: (500, 3, 1),
    HeroRole.ASSASSIN: (340, 7, 1),
    HeroRole.SUPPORTER: (320, 3, 1),
}

MINION_STATS = {"max_hp": 60, "attack": 2, "range": 1, "gold": 40, "xp": 20}
MONSTER_STATS = {"max_hp": 120, "attack": 3, "range": 1, "gold": 60, "xp": 50}
TURRET_STATS = {"max_hp": 500, "attack": 8, "range": 2, "gold": 150, "xp": 60}
CRYSTAL_STATS = {"max_hp": 1200}
HERO_BOUNTY = {"gold": 200, "xp": 80}

XP_PER_LEVEL = 100
LEVEL_CAP = 15
ATTACK_PER_LEVEL = 1

# Fixed unit id blocks; minions get ids from MINION_ID_BASE upward.
HERO_IDS = tuple(range(10))
TURRET_ID_BASE = 10
CRYSTAL_ID = {BLUE: 22, RED: 23}
MONSTER_ID_BASE = 24
MINION_ID_BASE = 100

# Observation normalisation constants.
HERO_GOLD_NORM = 4000.0
TEAM_GOLD_NORM = 20000.0
LANE_MINION_NORM = 8.0
HERO_FEATS = 13
OBS_DIM = 10 * HERO_FEATS + 18 + 24 + 2 + 8 + 7  # = 189


def seconds_to_frames(seconds: float) -> int:
    from .config import FRAMES_PER_SECOND

    return int(round(seconds * FRAMES_PER_SECOND))


# ---------------------------------------------------------------------------
# Map layout
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MapLayout:
    """Static region partition plus lane paths and fixed site positions."""

    size: int
    region_of_cell: np.ndarray  # (size, size) int8, indexed [x, y]
    lane_paths: dict[str, tuple[tuple[int, int], ...]]  # blue base -> red base
    spawn_cells: dict[str, tuple[tuple[int, int], ...]]
    crystal_cells: dict[str, tuple[int, int]]
    turret_sites: tuple[tuple[int, str, str, tuple[int, int]], ...]  # (id, team, lane, cell)
    camp_sites: tuple[tuple[int, int, tuple[int, int]], ...]  # (id, region, cell)

    def region_at(self, x: int, y: int) -> int:
        return int(self.region_of_cell[x, y])

    def region_counts(self) -> dict[int, int]:
        vals, counts = np.unique(self.region_of_cell, return_counts=True)
        return {int(v): int(c) for v, c in zip(vals, counts)}

    def base_region(self, team: str) -> int:
        return BASE_BLUE if team == BLUE else BASE_RED

    def near_jungle_regions(self, team: str) -> tuple[int, int]:
        if team == BLUE:
            return (JUNGLE_TOP_BLUE, JUNGLE_BOT_BLUE)
        return (JUNGLE_TOP_RED, JUNGLE_BOT_RED)

    def far_jungle_regions(self, team: str) -> tuple[int, int]:
        return self.near_jungle_regions(enemy_of(team))


def enemy_of(team: str) -> str:
    return RED if team == BLUE else BLUE


def _classify_cell(x: int, y: int, s: int) -> int:
    base_span = 4
    band = 3
    if x + y <= base_span:
        return BASE_BLUE
    if (s - 1 - x) + (s - 1 - y) <= base_span:
        return BASE_RED
    if abs(x - y) <= 1:
        return LANE_MID
    if x < band or y >= s - band:
        return LANE_TOP
    if y < band or x >= s - band:
        return LANE_BOT
    blue_side = x + y <= s - 1
    if y > x:
        return JUNGLE_TOP_BLUE if blue_side else JUNGLE_TOP_RED
    return JUNGLE_BOT_BLUE if blue_side else JUNGLE_BOT_RED


def build_layout(size: int = 24) -> MapLayout:
    region = np.empty((size, size), dtype=np.int8)
    for x in range(size):
        for y in range(size):
            region[x, y] = _classify_cell(x, y, size)

    top = [(1, y) for y in range(1, size - 1)] + [(x, size - 2) for x in range(2, size - 1)]
    bot = [(x, 1) for x in range(1, size - 1)] + [(size - 2, y) for y in range(2, size - 1)]
    mid = [(i, i) for i in range(size)]
    crystal = {BLUE: (0, 0), RED: (size - 1, size - 1)}
    # Paths terminate on the enemy crystal so minions walk all the way in.
    paths = {
        "top": tuple(top + [crystal[RED]]),
        "mid": tuple(mid),
        "bot": tuple(bot + [crystal[RED]]),
    }

    turret_sites = []
    tid = TURRET_ID_BASE
    for lane in LANE_NAMES:
        path = paths[lane]
        n = len(path)
        for team, fracs in ((BLUE, (0.30, 0.42)), (RED, (0.58, 0.70))):
            for frac in fracs:
                turret_sites.append((tid, team, lane, path[int(n * frac)]))
                tid += 1

    camp_sites = (
        (MONSTER_ID_BASE + 0, JUNGLE_TOP_BLUE, (6, 13)),
        (MONSTER_ID_BASE + 1, JUNGLE_TOP_RED, (10, 17)),
        (MONSTER_ID_BASE + 2, JUNGLE_BOT_BLUE, (13, 6)),
        (MONSTER_ID_BASE + 3, JUNGLE_BOT_RED, (17, 10)),
    )

    spawns = {
        BLUE: ((0, 1), (1, 0), (0, 2), (2, 0), (1, 2)),
        RED: tuple((size - 1 - x, size - 1 - y) for x, y in ((0, 1), (1, 0), (0, 2), (2, 0), (1, 2))),
    }
    return MapLayout(
        size=size,
        region_of_cell=region,
        lane_paths=paths,
        spawn_cells=spawns,
        crystal_cells=crystal,
        turret_sites=tuple(turret_sites),
        camp_sites=camp_sites,
    )


_LAYOUT_CACHE: dict[int, MapLayout] = {}


def get_layout(size: int) -> MapLayout:
    if size not in _LAYOUT_CACHE:
        _LAYOUT_CACHE[size] = build_layout(size)
    return _LAYOUT_CACHE[size]


# ---------------------------------------------------------------------------
# Units and actions
# ---------------------------------------------------------------------------


@dataclass
class Unit:
    id: int
    kind: str  # hero | minion | monster | turret | crystal
    team: str
    x: int
    y: int
    hp: int
    max_hp: int
    attack: int
    range: int
    gold_bounty: int
    xp_bounty: int
    # hero-only fields
    role: HeroRole | None = None
    gold: int = 0
    level: int = 1
    xp: int = 0
    respawn_at: int | None = None
    # minion-only fields
    lane: str | None = None
    path_idx: int = 0
    # monster-only: camp region id
    camp_region: int | None = None

    @property
    def alive(self) -> bool:
        return self.hp > 0

    def effective_attack(self) -> int:
        if self.kind == "hero":
            return self.attack + ATTACK_PER_LEVEL * (self.level - 1)
        return self.attack

    def to_dict(self) -> dict:
        d = {
            "id": self.id,
            "kind": self.kind,
            "team": self.team,
            "x": self.x,
            "y": self.y,
            "hp": self.hp,
            "max_hp": self.max_hp,
            "attack": self.attack,
            "range": self.range,
            "gold_bounty": self.gold_bounty,
            "xp_bounty": self.xp_bounty,
        }
        if self.kind == "hero":
            d.update(
                role=self.role.value,
                gold=self.gold,
                level=self.level,
                xp=self.xp,
                respawn_at=self.respawn_at,
            )
        elif self.kind == "minion":
            d.update(lane=self.lane, path_idx=self.path_idx)
        elif self.kind == "monster":
            d.update(camp_region=self.camp_region, respawn_at=self.respawn_at)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Unit":
        u = cls(
            id=d["id"],
            kind=d["kind"],
            team=d["team"],
            x=d["x"],
            y=d["y"],
            hp=d["hp"],
            max_hp=d["max_hp"],
            attack=d["attack"],
            range=d["range"],
            gold_bounty=d["gold_bounty"],
            xp_bounty=d["xp_bounty"],
        )
        if u.kind == "hero":
            u.role = HeroRole(d["role"])
            u.gold = d["gold"]
            u.level = d["level"]
            u.xp = d["xp"]
            u.respawn_at = d["respawn_at"]
        elif u.kind == "minion":
            u.lane = d["lane"]
            u.path_idx = d["path_idx"]
        elif u.kind == "monster":
            u.camp_region = d["camp_region"]
            u.respawn_at = d["respawn_at"]
        return u


NOOP_KIND, MOVE_KIND, ATTACK_KIND = 0, 1, 2


@dataclass(frozen=True)
class HeroAction:
    kind: int  # NOOP_KIND | MOVE_KIND | ATTACK_KIND
    arg: int = 0  # direction index for moves, target unit id for attacks

    @classmethod
    def noop(cls) -> "HeroAction":
        return cls(NOOP_KIND)

    @classmethod
    def move(cls, direction: int) -> "HeroAction":
        if not 0 <= direction < 8:
            raise ValueError(f"move direction must be 0..7, got {direction}")
        return cls(MOVE_KIND, direction)

    @classmethod
    def attack(cls, target_id: int) -> "HeroAction":
        return cls(ATTACK_KIND, target_id)

    def encode(self) -> list[int]:
        return [self.kind, self.arg]

    @classmethod
    def decode(cls, pair: list[int]) -> "HeroAction":
        return cls(int(pair[0]), int(pair[1]))


NOOP = HeroAction.noop()


# ---------------------------------------------------------------------------
# Game state
# ---------------------------------------------------------------------------


@dataclass
class TeamCounters:
    """Hero-credited tallies used by the macro-state and case metrics."""

    turrets_destroyed: int = 0
    monsters_taken: int = 0
    monsters_near: int = 0
    monsters_far: int = 0
    minions_killed: int = 0

    def to_dict(self) -> dict:
        return {
            "turrets_destroyed": self.turrets_destroyed,
            "monsters_taken": self.monsters_taken,
            "monsters_near": self.monsters_near,
            "monsters_far": self.monsters_far,
            "minions_killed": self.minions_killed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TeamCounters":
        return cls(**d)


@dataclass
class GameState:
    config: EnvConfig
    layout: MapLayout
    frame: int
    units: dict[int, Unit]
    counters: dict[str, TeamCounters]
    rng: np.random.Generator
    done: bool = False
    winner: str | None = None
    minion_counter: int = MINION_ID_BASE
    # Events of the most recent step (transient; not serialized).
    last_events: list[dict] = field(default_factory=list)

    def heroes(self, team: str | None = None) -> list[Unit]:
        out = [self.units[i] for i in HERO_IDS]
        if team is not None:
            out = [u for u in out if u.team == team]
        return out

    def hero_ids(self, team: str) -> list[int]:
        return [i for i in HERO_IDS if self.units[i].team == team]

    def crystal(self, team: str) -> Unit:
        return self.units[CRYSTAL_ID[team]]

    def team_gold(self, team: str) -> int:
        return sum(u.gold for u in self.heroes(team))

    def team_level_sum(self, team: str) -> int:
        return sum(u.level for u in self.heroes(team))

    def lineup(self, team: str) -> list[HeroRole]:
        return [self.units[i].role for i in self.hero_ids(team)]

    def to_dict(self) -> dict:
        return {
            "frame": self.frame,
            "done": self.done,
            "winner": self.winner,
            "minion_counter": self.minion_counter,
            "map_size": self.layout.size,
            "config": self.config.to_dict(),
            "counters": {t: self.counters[t].to_dict() for t in TEAMS},
            "units": [self.units[i].to_dict() for i in sorted(self.units)],
            "rng": _rng_state_to_jsonable(self.rng),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GameState":
        cfg = EnvConfig(**d["config"])
        rng = np.random.default_rng(0)
        rng.bit_generator.state = _rng_state_from_jsonable(d["rng"])
        return cls(
            config=cfg,
            layout=get_layout(d["map_size"]),
            frame=d["frame"],
            units={u["id"]: Unit.from_dict(u) for u in d["units"]},
            counters={t: TeamCounters.from_dict(d["counters"][t]) for t in TEAMS},
            rng=rng,
            done=d["done"],
            winner=d["winner"],
            minion_counter=d["minion_counter"],
        )


def _rng_state_to_jsonable(rng: np.random.Generator) -> dict:
    st = rng.bit_generator.state
    return {
        "bit_generator": st["bit_generator"],
        "state": str(st["state"]["state"]),
        "inc": str(st["state"]["inc"]),
        "has_uint32": st["has_uint32"],
        "uinteger": st["uinteger"],
    }


def _rng_state_from_jsonable(d: dict) -> dict:
    return {
        "bit_generator": d["bit_generator"],
        "state": {"state": int(d["state"]), "inc": int(d["inc"])},
        "has_uint32": d["has_uint32"],
        "uinteger": d["uinteger"],
    }


# ---------------------------------------------------------------------------
# Game construction
# ---------------------------------------------------------------------------


def new_game(
    blue_lineup: list[HeroRole],
    red_lineup: list[HeroRole],
    seed: int,
    config: EnvConfig | None = None,
) -> GameState:
    """Build the initial state: heroes at base, camps stocked, turrets up."""
    config = config or EnvConfig()
    for name, lineup in (("blue", blue_lineup), ("red", red_lineup)):
        if len(lineup) != 5:
            raise InvalidLineupError(f"{name} lineup must have exactly 5 heroes, got {len(lineup)}")

    layout = get_layout(config.map_size)
    units: dict[int, Unit] = {}
    for slot, role in enumerate(blue_lineup):
        units[slot] = _make_hero(slot, BLUE, HeroRole(role), layout.spawn_cells[BLUE][slot], config)
    for slot, role in enumerate(red_lineup):
        units[5 + slot] = _make_hero(5 + slot, RED, HeroRole(role), layout.spawn_cells[RED][slot], config)

    for tid, team, lane, (x, y) in layout.turret_sites:
        units[tid] = Unit(
            id=tid, kind="turret", team=team, x=x, y=y,
            hp=TURRET_STATS["max_hp"], max_hp=TURRET_STATS["max_hp"],
            attack=TURRET_STATS["attack"], range=TURRET_STATS["range"],
            gold_bounty=TURRET_STATS["gold"], xp_bounty=TURRET_STATS["xp"],
            lane=lane,
        )
    for team in TEAMS:
        x, y = layout.crystal_cells[team]
        units[CRYSTAL_ID[team]] = Unit(
            id=CRYSTAL_ID[team], kind="crystal", team=team, x=x, y=y,
            hp=CRYSTAL_STATS["max_hp"], max_hp=CRYSTAL_STATS["max_hp"],
            attack=0, range=0, gold_bounty=0, xp_bounty=0,
        )
    for mid, region, (x, y) in layout.camp_sites:
        units[mid] = Unit(
            id=mid, kind="monster", team=NEUTRAL, x=x, y=y,
            hp=MONSTER_STATS["max_hp"], max_hp=MONSTER_STATS["max_hp"],
            attack=MONSTER_STATS["attack"], range=MONSTER_STATS["range"],
            gold_bounty=MONSTER_STATS["gold"], xp_bounty=MONSTER_STATS["xp"],
            camp_region=region,
        )

    return GameState(
        config=config,
        layout=layout,
        frame=0,
        units=units,
        counters={BLUE: TeamCounters(), RED: TeamCounters()},
        rng=np.random.default_rng(seed),
    )


def _make_hero(uid: int, team: str, role: HeroRole, cell: tuple[int, int], config: EnvConfig) -> Unit:
    max_hp, attack, rng_ = ROLE_STATS[role]
    return Unit(
        id=uid, kind="hero", team=team, x=cell[0], y=cell[1],
        hp=max_hp, max_hp=max_hp, attack=attack, range=rng_,
        gold_bounty=HERO_BOUNTY["gold"], xp_bounty=HERO_BOUNTY["xp"],
        role=role, gold=config.starting_gold, level=1, xp=0,
    )


# ---------------------------------------------------------------------------
# Stepping
# ---------------------------------------------------------------------------


def _chebyshev(a: Unit, b: Unit) -> int:
    return max(abs(a.x - b.x), abs(a.y - b.y))


class _Frame:
    """Per-step scratch: reward accumulators and the event log."""

    __slots__ = ("state", "rewards", "events", "cells")

    def __init__(self, state: GameState):
        self.state = state
        self.rewards = np.zeros((10, N_HEADS), dtype=np.float64)
        self.events: list[dict] = []
        self.cells: dict[tuple[int, int], list[int]] = {}
        for u in state.units.values():
            if u.alive:
                self.cells.setdefault((u.x, u.y), []).append(u.id)

    def enemies_in_range(self, unit: Unit, rng_: int, kinds: tuple[str, ...] | None = None) -> list[Unit]:
        state = self.state
        found = []
        for dx in range(-rng_, rng_ + 1):
            for dy in range(-rng_, rng_ + 1):
                ids = self.cells.get((unit.x + dx, unit.y + dy))
                if not ids:
                    continue
                for uid in ids:
                    other = state.units[uid]
                    if not other.alive or other.team == unit.team:
                        continue
                    if unit.team == NEUTRAL and other.kind != "hero":
                        continue  # monsters only fight heroes
                    if kinds is not None and other.kind not in kinds:
                        continue
                    found.append(other)
        found.sort(key=lambda u: u.id)
        return found


def step(state: GameState, actions: dict[int, HeroAction]) -> tuple[GameState, np.ndarray, bool]:
    """Advance one frame in place.

    Returns (state, rewards, done) where rewards is a (10, 6) array of
    per-hero reward heads.  Raises GameOverError on a finished game.
    """
    if state.done:
        raise GameOverError(f"game already finished at frame {state.frame}")

    frame = _Frame(state)
    _respawn_heroes(state, frame)
    _respawn_monsters(state, frame)
    if state.frame % state.config.minion_wave_interval == 0:
        _spawn_wave(state, frame)

    gold_before = {h.id: h.gold for h in state.heroes()}
    xp_before = {h.id: h.xp for h in state.heroes()}

    for hid in HERO_IDS:
        _apply_hero_action(state, frame, state.units[hid], actions.get(hid, NOOP))
    _npc_actions(state, frame)
    _cleanup_dead(state)

    for h in state.heroes():
        frame.rewards[h.id, HEAD_INDEX["farming"]] += (
            state.config.gold_weight * (h.gold - gold_before[h.id])
            + state.config.xp_weight * (h.xp - xp_before[h.id])
        )

    state.frame += 1
    _check_end(state, frame)
    state.last_events = frame.events
    return state, frame.rewards, state.done


def _respawn_heroes(state: GameState, frame: _Frame) -> None:
    for hid in HERO_IDS:
        h = state.units[hid]
        if h.respawn_at is not None and state.frame >= h.respawn_at:
            h.hp = h.max_hp
            h.respawn_at = None
            slot = hid % 5
            h.x, h.y = state.layout.spawn_cells[h.team][slot]
            frame.cells.setdefault((h.x, h.y), []).append(hid)


def _respawn_monsters(state: GameState, frame: _Frame) -> None:
    for mid, _region, (x, y) in state.layout.camp_sites:
        m = state.units[mid]
        if m.hp == 0 and m.respawn_at is not None and state.frame >= m.respawn_at:
            m.hp = m.max_hp
            m.respawn_at = None
            m.x, m.y = x, y
            frame.cells.setdefault((x, y), []).append(mid)


def _spawn_wave(state: GameState, frame: _Frame) -> None:
    for lane in LANE_NAMES:
        path = state.layout.lane_paths[lane]
        for team, idx in ((BLUE, 2), (RED, len(path) - 3)):
            uid = state.minion_counter
            state.minion_counter += 1
            x, y = path[idx]
            m = Unit(
                id=uid, kind="minion", team=team, x=x, y=y,
                hp=MINION_STATS["max_hp"], max_hp=MINION_STATS["max_hp"],
                attack=MINION_STATS["attack"], range=MINION_STATS["range"],
                gold_bounty=MINION_STATS["gold"], xp_bounty=MINION_STATS["xp"],
                lane=lane, path_idx=idx,
            )
            state.units[uid] = m
            frame.cells.setdefault((x, y), []).append(uid)


def _apply_hero_action(state: GameState, frame: _Frame, hero: Unit, action: HeroAction) -> None:
    if not hero.alive:
        return
    if action.kind == MOVE_KIND:
        dx, dy = DIRECTIONS[action.arg]
        nx, ny = hero.x + dx, hero.y + dy
        if 0 <= nx < state.layout.size and 0 <= ny < state.layout.size:
            frame.cells[(hero.x, hero.y)].remove(hero.id)
            hero.x, hero.y = nx, ny
            frame.cells.setdefault((nx, ny), []).append(hero.id)
    elif action.kind == ATTACK_KIND:
        target = state.units.get(action.arg)
        if (
            target is not None
            and target.alive
            and target.team != hero.team
            and _chebyshev(hero, target) <= hero.range
        ):
            frame.events.append(
                {"type": "attack", "attacker": hero.id, "target": target.id, "target_kind": target.kind}
            )
            _deal_damage(state, frame, hero, target)


def _npc_actions(state: GameState, frame: _Frame) -> None:
    npc_ids = [uid for uid, u in state.units.items() if u.kind != "hero" and u.alive]
    npc_ids.sort()
    for uid in npc_ids:
        u = state.units.get(uid)
        if u is None or not u.alive:
            continue
        if u.kind == "minion":
            _minion_act(state, frame, u)
        elif u.kind == "turret":
            targets = frame.enemies_in_range(u, u.range, kinds=("minion", "hero"))
            if targets:
                targets.sort(key=lambda t: (0 if t.kind == "minion" else 1, t.id))
                _deal_damage(state, frame, u, targets[0])
        elif u.kind == "monster":
            targets = frame.enemies_in_range(u, u.range, kinds=("hero",))
            if targets:
                _deal_damage(state, frame, u, targets[0])


_MINION_TARGET_PRIORITY = {"minion": 0, "turret": 1, "crystal": 2, "hero": 3}


def _minion_act(state: GameState, frame: _Frame, m: Unit) -> None:
    targets = frame.enemies_in_range(m, m.range, kinds=("minion", "turret", "crystal", "hero"))
    if targets:
        targets.sort(key=lambda t: (_MINION_TARGET_PRIORITY[t.kind], t.id))
        _deal_damage(state, frame, m, targets[0])
        return
    if state.frame % state.config.minion_move_period != 0:
        return
    path = state.layout.lane_paths[m.lane]
    nxt = m.path_idx + 1 if m.team == BLUE else m.path_idx - 1
    if 0 <= nxt < len(path):
        frame.cells[(m.x, m.y)].remove(m.id)
        m.path_idx = nxt
        m.x, m.y = path[nxt]
        frame.cells.setdefault((m.x, m.y), []).append(m.id)


def _deal_damage(state: GameState, frame: _Frame, attacker: Unit, target: Unit) -> None:
    dmg = min(attacker.effective_attack(), target.hp)
    target.hp -= dmg
    if attacker.kind == "hero":
        if target.kind == "hero":
            frame.rewards[attacker.id, HEAD_INDEX["damage"]] += state.config.hero_damage_weight * dmg
        elif target.kind in ("turret", "crystal"):
            frame.rewards[attacker.id, HEAD_INDEX["pushing"]] += state.config.structure_damage_weight * dmg
    if target.hp == 0:
        _on_kill(state, frame, attacker, target)


def _on_kill(state: GameState, frame: _Frame, killer: Unit, victim: Unit) -> None:
    if victim.kind != "crystal":
        frame.cells[(victim.x, victim.y)].remove(victim.id)
    if victim.kind == "hero":
        victim.respawn_at = state.frame + state.config.hero_respawn_frames
        frame.rewards[victim.id, HEAD_INDEX["kda"]] += state.config.death_weight
        frame.events.append({"type": "hero_death", "hero": victim.id, "killer": killer.id})
    elif victim.kind == "monster":
        victim.respawn_at = state.frame + state.config.monster_respawn_frames

    if killer.kind != "hero":
        return
    killer.gold += victim.gold_bounty
    killer.xp += victim.xp_bounty
    killer.level = min(1 + killer.xp // XP_PER_LEVEL, LEVEL_CAP)
    frame.events.append(
        {
            "type": "bounty",
            "hero": killer.id,
            "gold": victim.gold_bounty,
            "xp": victim.xp_bounty,
            "victim": victim.id,
            "victim_kind": victim.kind,
        }
    )
    counters = state.counters[killer.team]
    if victim.kind == "hero":
        frame.rewards[killer.id, HEAD_INDEX["kda"]] += state.config.kill_weight
    elif victim.kind == "minion":
        counters.minions_killed += 1
    elif victim.kind == "monster":
        counters.monsters_taken += 1
        if victim.camp_region in state.layout.near_jungle_regions(killer.team):
            counters.monsters_near += 1
        else:
            counters.monsters_far += 1
    elif victim.kind == "turret":
        counters.turrets_destroyed += 1
        frame.rewards[killer.id, HEAD_INDEX["pushing"]] += state.config.turret_destroy_weight
        frame.events.append({"type": "turret_down", "team": killer.team, "turret": victim.id})


def _cleanup_dead(state: GameState) -> None:
    dead_minions = [uid for uid, u in state.units.items() if u.kind == "minion" and not u.alive]
    for uid in dead_minions:
        del state.units[uid]
    dead_turrets = [uid for uid, u in state.units.items() if u.kind == "turret" and not u.alive]
    for uid in dead_turrets:
        del state.units[uid]


def _check_end(state: GameState, frame: _Frame) -> None:
    blue_c, red_c = state.crystal(BLUE), state.crystal(RED)
    if blue_c.hp == 0 or red_c.hp == 0:
        state.done = True
        if blue_c.hp == 0 and red_c.hp == 0:
            state.winner = None
        else:
            state.winner = RED if blue_c.hp == 0 else BLUE
    elif state.frame >= state.config.max_frames:
        state.done = True
        if blue_c.hp > red_c.hp:
            state.winner = BLUE
        elif red_c.hp > blue_c.hp:
            state.winner = RED
        else:
            state.winner = None
    if state.done and state.winner is not None:
        w = state.config.win_weight
        for h in state.heroes():
            sign = 1.0 if h.team == state.winner else -1.0
            frame.rewards[h.id, HEAD_INDEX["win_lose"]] += sign * w


# ---------------------------------------------------------------------------
# Observations and legal actions
# ---------------------------------------------------------------------------


def _team_view(state: GameState, team: str) -> np.ndarray:
    """Common observation block from one team's perspective (is_self unset)."""
    cfg = state.config
    layout = state.layout
    s1 = layout.size - 1
    enemy = enemy_of(team)
    out = np.zeros(OBS_DIM, dtype=np.float64)

    # Hero blocks: own team slots first, then enemy slots.
    pos = 0
    for uid in state.hero_ids(team) + state.hero_ids(enemy):
        h = state.units[uid]
        b = out[pos : pos + HERO_FEATS]
        if h.alive:
            b[1] = 1.0
            b[2] = h.hp / h.max_hp
            b[3] = h.x / s1
            b[4] = h.y / s1
        b[5] = (h.level - 1) / (LEVEL_CAP - 1)
        b[6] = min(h.gold / HERO_GOLD_NORM, 1.0)
        b[7 + ROLE_INDEX[h.role]] = 1.0
        pos += HERO_FEATS

    # Minion summaries per (side, lane): count, front-most position.
    minions: dict[tuple[str, str], list[Unit]] = {}
    for u in state.units.values():
        if u.kind == "minion" and u.alive:
            minions.setdefault((u.team, u.lane), []).append(u)
    for side in (team, enemy):
        for lane in LANE_NAMES:
            group = minions.get((side, lane))
            if group:
                out[pos] = min(len(group) / LANE_MINION_NORM, 1.0)
                front = max(group, key=lambda u: u.path_idx if u.team == BLUE else -u.path_idx)
                out[pos + 1] = front.x / s1
                out[pos + 2] = front.y / s1
            pos += 3

    # Turrets: own lanes (top, mid, bot; outer then inner), then enemy's.
    for side in (team, enemy):
        for tid, t_team, _lane, _cell in layout.turret_sites:
            if t_team != side:
                continue
            t = state.units.get(tid)
            if t is not None and t.alive:
                out[pos] = 1.0
                out[pos + 1] = t.hp / t.max_hp
            pos += 2

    for side in (team, enemy):
        out[pos] = state.crystal(side).hp / CRYSTAL_STATS["max_hp"]
        pos += 1

    # Monster camps: near-side camps first, then far-side; dead camp -> zeros.
    for region in layout.near_jungle_regions(team) + layout.far_jungle_regions(team):
        m = next(state.units[mid] for mid, reg, _ in layout.camp_sites if reg == region)
        if m.alive:
            out[pos] = 1.0
            out[pos + 1] = m.hp / m.max_hp
        pos += 2

    out[pos] = state.frame / cfg.max_frames
    out[pos + 1] = min(state.team_gold(team) / TEAM_GOLD_NORM, 1.0)
    out[pos + 2] = min(state.team_gold(enemy) / TEAM_GOLD_NORM, 1.0)
    out[pos + 3] = state.team_level_sum(team) / (5 * LEVEL_CAP)
    out[pos + 4] = state.team_level_sum(enemy) / (5 * LEVEL_CAP)
    out[pos + 5] = state.counters[team].turrets_destroyed / 6.0
    out[pos + 6] = state.counters[enemy].turrets_destroyed / 6.0
    assert pos + 7 == OBS_DIM
    return out


def observe(state: GameState, hero_id: int) -> np.ndarray:
    """Fixed-length normalized observation for one hero."""
    hero = state.units.get(hero_id)
    if hero is None or hero.kind != "hero":
        raise NotFoundError(f"no hero with id {hero_id}")
    view = _team_view(state, hero.team).copy()
    slot = state.hero_ids(hero.team).index(hero_id)
    view[slot * HERO_FEATS] = 1.0
    return view


def observe_all(state: GameState) -> np.ndarray:
    """Observations for all ten heroes, sharing the per-team view build."""
    views = {team: _team_view(state, team) for team in TEAMS}
    out = np.empty((10, OBS_DIM), dtype=np.float64)
    for hid in HERO_IDS:
        team = state.units[hid].team
        row = views[team].copy()
        row[(hid % 5) * HERO_FEATS] = 1.0
        out[hid] = row
    return out


def legal_actions(state: GameState, hero_id: int) -> list[HeroAction]:
    """Noop, in-bounds moves, and attacks on live hostile units in range."""
    hero = state.units.get(hero_id)
    if hero is None or hero.kind != "hero":
        raise NotFoundError(f"no hero with id {hero_id}")
    acts = [NOOP]
    if not hero.alive:
        return acts
    size = state.layout.size
    for d, (dx, dy) in enumerate(DIRECTIONS):
        if 0 <= hero.x + dx < size and 0 <= hero.y + dy < size:
            acts.append(HeroAction.move(d))
    for u in sorted(state.units.values(), key=lambda u: u.id):
        if u.alive and u.team != hero.team and _chebyshev(hero, u) <= hero.range:
            acts.append(HeroAction.attack(u.id))
    return acts
