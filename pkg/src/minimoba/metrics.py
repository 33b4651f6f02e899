"""Diversity and capability metrics over logged matches.

Covers the evaluation suite: Shannon entropy of the visited macro-state
distribution, the Davies-Bouldin index over per-lineup macro clusters,
iterated Elo from round-robin results, marksman economy and jungle-raid
case statistics, and a CSV export of raw macro vectors for external
projection tools.
"""

from __future__ import annotations

import csv
import json
import math
from collections import Counter
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import env as E
from . import macro
from .errors import DataError
from .trajectory import Trajectory


@dataclass
class MatchResult:
    agent_a: str
    agent_b: str
    winner: str  # "a" or "b"; draws are resolved upstream
    frames: int
    seed: int

    def to_dict(self) -> dict:
        return asdict(self)


def write_results_jsonl(results: list[MatchResult], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for r in results:
            fh.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")


def read_results_jsonl(path: str | Path) -> list[MatchResult]:
    out = []
    with open(path) as fh:
        for line in fh:
            out.append(MatchResult(**json.loads(line)))
    return out


def _team_index(traj: Trajectory, team: str | None) -> int:
    if team is None:
        team = traj.meta.get("agent_team", E.BLUE)
    return 0 if team == E.BLUE else 1


@dataclass
class TrajectoryView:
    """One team's side of a logged game, tagged with its agent label."""

    traj: Trajectory
    team: str
    agent: str

    @property
    def team_idx(self) -> int:
        return 0 if self.team == E.BLUE else 1

    @property
    def macro_series(self) -> np.ndarray:
        return self.traj.macro[:, self.team_idx]

    @property
    def lineup(self):
        return self.traj.meta["blue_lineup" if self.team_idx == 0 else "red_lineup"]


def agent_views(trajectories: list[Trajectory]) -> list[TrajectoryView]:
    """Expand logs into per-agent views.

    Single-agent evaluation logs (meta carries agent/agent_team) yield
    one view; tournament dumps (blue_agent/red_agent) yield two.
    """
    views = []
    for t in trajectories:
        if "agent_team" in t.meta:
            views.append(TrajectoryView(t, t.meta["agent_team"], t.meta.get("agent", "unknown")))
        else:
            views.append(TrajectoryView(t, E.BLUE, t.meta.get("blue_agent", "unknown")))
            views.append(TrajectoryView(t, E.RED, t.meta.get("red_agent", "unknown")))
    return views


def _as_views(trajectories, team: str | None) -> list[TrajectoryView]:
    out = []
    for t in trajectories:
        if isinstance(t, TrajectoryView):
            out.append(t)
            continue
        side = team or t.meta.get("agent_team", E.BLUE)
        out.append(TrajectoryView(t, side, t.meta.get("agent", "unknown")))
    return out


# ---------------------------------------------------------------------------
# Macro-state entropy
# ---------------------------------------------------------------------------


def macro_state_entropy(trajectories: list, team: str | None = None) -> float:
    """Natural-log Shannon entropy of the pooled macro-state distribution.

    Pools the given team's quantized macro vector over every frame of
    every trajectory; team None uses each trajectory's own agent side.
    """
    if not trajectories:
        raise DataError("no trajectories given")
    counts: Counter = Counter()
    for view in _as_views(trajectories, team):
        counts.update(map(tuple, view.macro_series.tolist()))
    total = sum(counts.values())
    return -sum((c / total) * math.log(c / total) for c in counts.values())


def entropy_of_distribution(probs) -> float:
    """Entropy of an explicit distribution (test oracle helper)."""
    return -sum(p * math.log(p) for p in probs if p > 0)


# ---------------------------------------------------------------------------
# Davies-Bouldin index
# ---------------------------------------------------------------------------


def davies_bouldin(points: list[tuple[np.ndarray, str]]) -> float:
    """DBI with mean-distance scatter and Euclidean centroid separation.

    Lower is better (tighter clusters, wider separation).  Requires at
    least two labels with two points each; coincident centroids are an
    error because the ratio degenerates.
    """
    groups: dict[str, list[np.ndarray]] = {}
    for vec, label in points:
        groups.setdefault(label, []).append(np.asarray(vec, dtype=np.float64))
    if len(groups) < 2:
        raise DataError(f"need >= 2 labels, got {len(groups)}")
    labels = sorted(groups)
    for label in labels:
        if len(groups[label]) < 2:
            raise DataError(f"label {label!r} has fewer than 2 points")

    centroids = {lb: np.mean(groups[lb], axis=0) for lb in labels}
    scatter = {
        lb: float(np.mean([np.linalg.norm(x - centroids[lb]) for x in groups[lb]]))
        for lb in labels
    }
    worst = []
    for i, a in enumerate(labels):
        ratios = []
        for j, b in enumerate(labels):
            if i == j:
                continue
            gap = float(np.linalg.norm(centroids[a] - centroids[b]))
            if gap == 0.0:
                raise DataError(f"degenerate clusters: {a!r} and {b!r} share a centroid")
            ratios.append((scatter[a] + scatter[b]) / gap)
        worst.append(max(ratios))
    return float(np.mean(worst))


def lineup_macro_points(
    trajectories: list, stride: int = 10, team: str | None = None
) -> list[tuple[np.ndarray, str]]:
    """(macro vector, lineup label) samples for cluster-validity scoring."""
    points = []
    for view in _as_views(trajectories, team):
        label = lineup_label(view.lineup)
        series = view.macro_series
        for t in range(0, series.shape[0], stride):
            points.append((series[t].astype(np.float64), label))
    return points


def lineup_label(roles) -> str:
    return "-".join(str(r)[:3] for r in roles)


# ---------------------------------------------------------------------------
# Elo
# ---------------------------------------------------------------------------


def elo_scores(
    results: list[MatchResult],
    k_factor: float = 16.0,
    passes: int = 20,
    seed: int = 0,
    agents: list[str] | None = None,
) -> dict[str, float]:
    """Iterated sequential Elo over shuffled replay passes, mean-anchored at 1500."""
    if not results:
        raise DataError("no match results")
    table: dict[str, float] = {}
    for r in results:
        table.setdefault(r.agent_a, 1500.0)
        table.setdefault(r.agent_b, 1500.0)
    if agents is not None:
        unknown = set(table) - set(agents)
        if unknown:
            raise DataError(f"results reference unknown agents: {sorted(unknown)}")
        for a in agents:
            table.setdefault(a, 1500.0)

    rng = np.random.default_rng(seed)
    order = np.arange(len(results))
    for _ in range(passes):
        rng.shuffle(order)
        for idx in order:
            r = results[idx]
            ra, rb = table[r.agent_a], table[r.agent_b]
            expected_a = 1.0 / (1.0 + 10.0 ** ((rb - ra) / 400.0))
            score_a = 1.0 if r.winner == "a" else 0.0
            table[r.agent_a] = ra + k_factor * (score_a - expected_a)
            table[r.agent_b] = rb + k_factor * ((1.0 - score_a) - (1.0 - expected_a))
    shift = 1500.0 - float(np.mean(list(table.values())))
    return {a: s + shift for a, s in sorted(table.items())}


def pair_record(results: list[MatchResult], a: str, b: str) -> tuple[int, int]:
    """(wins of a, games) over the a-vs-b subset."""
    wins = games = 0
    for r in results:
        if {r.agent_a, r.agent_b} == {a, b}:
            games += 1
            winner_name = r.agent_a if r.winner == "a" else r.agent_b
            if winner_name == a:
                wins += 1
    return wins, games


def wilson_interval(wins: int, n: int, z: float = 1.96) -> tuple[float, float]:
    """95% score interval for a binomial proportion."""
    if n == 0:
        return (0.0, 1.0)
    p = wins / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return (center - half, center + half)


# ---------------------------------------------------------------------------
# Case statistics
# ---------------------------------------------------------------------------


def case_stats(
    trajectories: list[Trajectory],
    marksman_slot: int = 0,
    early_window: int = 240,
    team: str | None = None,
) -> dict:
    """Marksman economy series and early jungle-raid counts.

    money_rate[t] = marksman gold / own-team gold; money_diff[t] =
    marksman gold - mean enemy gold.  Both series are averaged over the
    matches (truncated to the shortest).  near/far are the team's
    cumulative hero-credited monster kills inside the early window,
    averaged per match.
    """
    if not trajectories:
        raise DataError("no trajectories given")
    views = _as_views(trajectories, team)
    min_len = min(len(v.traj) for v in views)
    rates = np.zeros((len(views), min_len))
    diffs = np.zeros((len(views), min_len))
    near, far = [], []
    for i, view in enumerate(views):
        ti = view.team_idx
        traj = view.traj
        lineup = view.lineup
        if E.HeroRole(lineup[marksman_slot]) != E.HeroRole.MARKSMAN:
            raise DataError(
                f"slot {marksman_slot} holds {lineup[marksman_slot]!r}, not a marksman"
            )
        own = traj.gold[:min_len, 5 * ti : 5 * ti + 5].astype(np.float64)
        enemy = traj.gold[:min_len, 5 * (1 - ti) : 5 * (1 - ti) + 5].astype(np.float64)
        rates[i] = own[:, marksman_slot] / own.sum(axis=1)
        diffs[i] = own[:, marksman_slot] - enemy.mean(axis=1)
        w = min(early_window, len(traj) - 1)
        near.append(float(traj.jungle[w, ti, 0]))
        far.append(float(traj.jungle[w, ti, 1]))
    return {
        "money_rate": rates.mean(axis=0).tolist(),
        "money_diff": diffs.mean(axis=0).tolist(),
        "near_monsters": float(np.mean(near)),
        "far_monsters": float(np.mean(far)),
        "total_monsters": float(np.mean(near) + np.mean(far)),
    }


# ---------------------------------------------------------------------------
# Macro-state embedding export
# ---------------------------------------------------------------------------


def embed_macro_states(
    trajectories: list[Trajectory],
    out_path: str | Path,
    stride: int = 1,
    team: str | None = None,
) -> int:
    """One CSV row per sampled frame: macro components, agent, lineup.

    Returns the number of rows written; projection/plotting is external.
    """
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    rows = 0
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([*(f"c_{name}" for name in macro.MACRO_NAMES), "agent", "lineup"])
        for view in _as_views(trajectories, team):
            label = lineup_label(view.lineup)
            series = view.macro_series
            for t in range(0, series.shape[0], stride):
                writer.writerow([*series[t].tolist(), view.agent, label])
                rows += 1
    return rows
