"""Team controllers and match driving for evaluation and tournaments.

A team agent owns one side of a match: the scripted strategies, a
do-nothing bot (the macro-stationary reference for entropy comparisons),
or a trained policy (optionally goal-guided).  Matches record obs-free
trajectories by default, which is all the diversity metrics need.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import demos
from . import env as E
from . import macro, meta, rl
from .config import EnvConfig, PPOConfig
from .errors import ConfigError
from .trajectory import Trajectory, TrajectoryRecorder

SCRIPTED_AGENT_IDS = tuple(demos.STRATEGIES) + ("noop",)


class NoopTeamAgent:
    """Stands in base forever; its macro-state never changes."""

    name = "noop"
    needs_obs = False

    def reset(self, state: E.GameState, team: str, rng: np.random.Generator) -> None:
        self.hero_ids = state.hero_ids(team)

    def act(self, state: E.GameState, obs_all) -> dict[int, E.HeroAction]:
        return {h: E.NOOP for h in self.hero_ids}


class ScriptedTeamAgent:
    needs_obs = False

    def __init__(self, strategy, noise_rate: float = 0.05, early_window: int = 240):
        self.strategy = demos.get_strategy(strategy) if isinstance(strategy, str) else strategy
        self.noise_rate = noise_rate
        self.early_window = early_window
        self.name = self.strategy.id

    def reset(self, state: E.GameState, team: str, rng: np.random.Generator) -> None:
        self.hero_ids = state.hero_ids(team)
        self.rng = rng

    def act(self, state: E.GameState, obs_all) -> dict[int, E.HeroAction]:
        return {
            h: demos.scripted_policy_act(
                self.strategy, state, h,
                rng=self.rng, noise_rate=self.noise_rate, early_window=self.early_window,
            )
            for h in self.hero_ids
        }


class PolicyTeamAgent:
    """Trained policy side; resamples its goal every refresh interval."""

    needs_obs = True

    def __init__(
        self,
        spec,
        params,
        meta_model: meta.MetaModel | None = None,
        refresh_frames: int = 60,
        temperature: float = 1.0,
        name: str = "policy",
    ):
        self.spec = spec
        self.params = params
        self.meta_model = meta_model
        self.refresh_frames = refresh_frames
        self.temperature = temperature
        self.name = name

    def reset(self, state: E.GameState, team: str, rng: np.random.Generator) -> None:
        self.team = team
        self.hero_ids = state.hero_ids(team)
        self.rng = rng
        self.ally_lineup = [r.value for r in state.lineup(team)]
        self.enemy_lineup = [r.value for r in state.lineup(E.enemy_of(team))]
        self.goal_enc = np.zeros(macro.GOAL_ONEHOT_DIM)

    def act(self, state: E.GameState, obs_all: np.ndarray) -> dict[int, E.HeroAction]:
        if self.meta_model is not None and state.frame % self.refresh_frames == 0:
            feats = macro.meta_features(
                obs_all[self.hero_ids[0]], self.ally_lineup, self.enemy_lineup
            )
            goal = meta.sample_goal(self.meta_model, feats, self.temperature, self.rng)
            self.goal_enc = macro.encode_goal(goal)
        obs = obs_all[self.hero_ids]
        inputs = np.concatenate([obs, np.tile(self.goal_enc, (5, 1))], axis=1)
        logits, _ = rl.policy_forward(self.spec, self.params, inputs)
        idx, _ = rl.sample_actions(logits, self.rng)
        return {h: rl.to_hero_action(state, h, int(a)) for h, a in zip(self.hero_ids, idx)}


def make_team_agent(
    agent_spec: str,
    meta_model: meta.MetaModel | None = None,
    temperature: float = 1.0,
    refresh_frames: int = 60,
    noise_rate: float = 0.05,
    early_window: int = 240,
):
    """Resolve an agent id: a scripted strategy name, "noop", or a
    policy checkpoint path."""
    if agent_spec == "noop":
        return NoopTeamAgent()
    if agent_spec in demos.STRATEGIES:
        return ScriptedTeamAgent(agent_spec, noise_rate=noise_rate, early_window=early_window)
    path = Path(agent_spec)
    if not path.exists():
        raise ConfigError(
            f"unknown agent {agent_spec!r}: not a scripted id {SCRIPTED_AGENT_IDS} or checkpoint path"
        )
    spec, params, extra = rl.load_policy_checkpoint(path)
    guided = bool(extra.get("guided"))
    if guided and meta_model is None:
        raise ConfigError(f"{agent_spec} is goal-guided but no goal-predictor checkpoint was given")
    return PolicyTeamAgent(
        spec,
        params,
        meta_model=meta_model if guided else None,
        refresh_frames=refresh_frames,
        temperature=temperature,
        name=path.stem,
    )


def play_game(
    blue_agent,
    red_agent,
    blue_lineup,
    red_lineup,
    seed: int,
    env_config: EnvConfig | None = None,
    record: bool = True,
    include_obs: bool = False,
) -> tuple[str | None, int, Trajectory | None]:
    """One match; returns (winner, frames, trajectory or None)."""
    state = E.new_game(blue_lineup, red_lineup, seed, env_config)
    ss = np.random.SeedSequence(seed)
    rng_blue, rng_red = (np.random.default_rng(c) for c in ss.spawn(2))
    blue_agent.reset(state, E.BLUE, rng_blue)
    red_agent.reset(state, E.RED, rng_red)

    recorder = None
    if record:
        recorder = TrajectoryRecorder(
            state,
            meta={"blue_agent": blue_agent.name, "red_agent": red_agent.name, "seed": seed},
            include_obs=include_obs,
        )
    needs_obs = blue_agent.needs_obs or red_agent.needs_obs
    while not state.done:
        obs_all = E.observe_all(state) if needs_obs else None
        actions = blue_agent.act(state, obs_all)
        actions.update(red_agent.act(state, obs_all))
        _, rewards, _ = E.step(state, actions)
        if recorder is not None:
            recorder.record_step(actions, rewards)
            recorder.snapshot(state)
    traj = recorder.finish(state) if recorder is not None else None
    return state.winner, state.frame, traj


def play_series(
    agent_factory,
    opponent_factory,
    lineup,
    opponent_lineup,
    n_games: int,
    seed: int,
    env_config: EnvConfig | None = None,
    include_obs: bool = False,
    alternate_sides: bool = True,
) -> tuple[list[Trajectory], list[str | None]]:
    """n matches of agent vs opponent; returns the AGENT-side trajectories.

    Each trajectory's meta records which side the agent held so metric
    code can pull the right team.
    """
    trajs, outcomes = [], []
    seeds = demos.derive_seeds(seed, n_games)
    for i, game_seed in enumerate(seeds):
        agent, opp = agent_factory(), opponent_factory()
        agent_is_blue = (i % 2 == 0) or not alternate_sides
        if agent_is_blue:
            winner, _, traj = play_game(
                agent, opp, lineup, opponent_lineup, game_seed, env_config, include_obs=include_obs
            )
        else:
            winner, _, traj = play_game(
                opp, agent, opponent_lineup, lineup, game_seed, env_config, include_obs=include_obs
            )
        traj.meta["agent_team"] = E.BLUE if agent_is_blue else E.RED
        traj.meta["agent"] = agent.name
        trajs.append(traj)
        if winner is None:
            outcomes.append(None)
        else:
            agent_team = E.BLUE if agent_is_blue else E.RED
            outcomes.append("agent" if winner == agent_team else "opponent")
    return trajs, outcomes


def probe_win_rate(
    policy_spec,
    policy_params,
    meta_model,
    env_config: EnvConfig,
    ppo_config: PPOConfig,
    n_games: int,
    seed: int,
) -> float:
    """Win rate of the current policy against the scripted laner (draw = 0.5)."""
    if n_games <= 0:
        return float("nan")
    lineup = list(demos.THREE_LANE.lineup)
    score = 0.0
    seeds = demos.derive_seeds(seed, n_games)
    for i, game_seed in enumerate(seeds):
        agent = PolicyTeamAgent(
            policy_spec, policy_params, meta_model,
            refresh_frames=ppo_config.goal_refresh_frames,
            temperature=ppo_config.temperature,
        )
        opponent = ScriptedTeamAgent(demos.THREE_LANE)
        if i % 2 == 0:
            winner, _, _ = play_game(agent, opponent, lineup, lineup, game_seed, env_config, record=False)
            mine = E.BLUE
        else:
            winner, _, _ = play_game(opponent, agent, lineup, lineup, game_seed, env_config, record=False)
            mine = E.RED
        if winner is None:
            score += 0.5
        elif winner == mine:
            score += 1.0
    return score / n_games


def run_tournament(
    agent_specs: dict[str, str],
    games_per_pair: int,
    seed: int,
    env_config: EnvConfig | None = None,
    meta_model: meta.MetaModel | None = None,
    lineup=None,
    temperature: float = 1.0,
    refresh_frames: int = 60,
    dump_dir=None,
):
    """Round-robin with alternating sides; draws resolved by a coin flip
    derived from the match seed.  Returns a list of metrics.MatchResult.

    With dump_dir set, every game's obs-free trajectory is written there
    for later metric reports.
    """
    from . import metrics
    from .trajectory import write_jsonl

    names = sorted(agent_specs)
    if len(names) < 2:
        raise ConfigError(f"tournament needs >= 2 agents, got {len(names)}")
    lineup = list(lineup or demos.THREE_LANE.lineup)
    if dump_dir is not None:
        dump_dir = Path(dump_dir)
        dump_dir.mkdir(parents=True, exist_ok=True)

    def factory(name):
        return make_team_agent(
            agent_specs[name],
            meta_model=meta_model,
            temperature=temperature,
            refresh_frames=refresh_frames,
        )

    results = []
    pair_index = 0
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            pair_seed = int(np.random.SeedSequence([seed, pair_index]).generate_state(1)[0])
            game_seeds = demos.derive_seeds(pair_seed, games_per_pair)
            for g, game_seed in enumerate(game_seeds):
                a_is_blue = g % 2 == 0
                blue, red = (factory(a), factory(b)) if a_is_blue else (factory(b), factory(a))
                winner_team, frames, traj = play_game(
                    blue, red, lineup, lineup, game_seed, env_config, record=dump_dir is not None
                )
                if winner_team is None:
                    flip = np.random.default_rng(game_seed ^ 0x5EED).random()
                    winner = "a" if flip < 0.5 else "b"
                else:
                    a_team = E.BLUE if a_is_blue else E.RED
                    winner = "a" if winner_team == a_team else "b"
                results.append(
                    metrics.MatchResult(
                        agent_a=a, agent_b=b, winner=winner, frames=frames, seed=game_seed
                    )
                )
                if dump_dir is not None:
                    write_jsonl(traj, dump_dir / f"match_{pair_index:03d}_{g:04d}.jsonl")
            pair_index += 1
    return results
