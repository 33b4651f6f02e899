"""Command-line pipeline: demos -> labels -> goal predictor -> RL ->
tournaments -> metric reports.

Every command is a pure function of (config, seed, input files): rerun
with the same inputs and you get byte-identical outputs.  Exit codes:
0 success, 1 usage/config, 2 data, 3 numeric divergence.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import demos
from . import env as E
from . import macro, meta, metrics, play, rl, trajectory
from .config import RunConfig
from .errors import ConfigError, DataError, MiniMobaError, NumericError


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig.load(args.config) if args.config else RunConfig()
        if args.seed is not None:
            cfg.seed = args.seed
        return args.handler(args, cfg)
    except (ConfigError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except MiniMobaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="minimoba",
        description="Miniature MOBA pipeline: demos, goal prediction, RL, diversity reports",
    )
    parser.add_argument("--config", help="run config JSON (defaults built in)")
    parser.add_argument("--seed", type=int, default=None, help="master seed override")
    parser.add_argument("--workers", type=int, default=1, help="parallel game workers")
    parser.add_argument("--out", default="runs", help="output directory")
    sub = parser.add_subparsers(required=True)

    p = sub.add_parser("gen-demos", help="generate scripted demonstration games")
    p.add_argument("--strategy", default="mixed", choices=[*demos.STRATEGIES, "mixed"])
    p.add_argument("--games", type=int, default=None, help="games per strategy")
    p.set_defaults(handler=cmd_gen_demos)

    p = sub.add_parser("extract", help="extract goal labels from demos")
    p.add_argument("--demos", required=True, help="demo directory (with manifests)")
    p.add_argument("--out-file", default=None, help="dataset path (default <out>/dataset.jsonl)")
    p.set_defaults(handler=cmd_extract)

    p = sub.add_parser("train-meta", help="train the goal predictor")
    p.add_argument("--dataset", required=True)
    p.add_argument("--epochs", type=int, default=None)
    p.set_defaults(handler=cmd_train_meta)

    p = sub.add_parser("train-rl", help="train a policy by self-play PPO")
    p.add_argument("--mode", choices=["guided", "baseline"], required=True)
    p.add_argument("--meta", default=None, help="goal-predictor checkpoint (guided mode)")
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--resume", action="store_true")
    p.set_defaults(handler=cmd_train_rl)

    p = sub.add_parser("tournament", help="round-robin matches between agents")
    p.add_argument(
        "--agents",
        required=True,
        help="comma-separated name=spec pairs; spec = scripted id, 'noop', or checkpoint path",
    )
    p.add_argument("--games-per-pair", type=int, default=None)
    p.add_argument("--meta", default=None, help="goal predictor for guided checkpoints")
    p.add_argument("--dump-trajectories", action="store_true")
    p.set_defaults(handler=cmd_tournament)

    p = sub.add_parser("report", help="compute diversity/capability metrics")
    p.add_argument("--trajectories", default=None, help="directory of trajectory JSONL files")
    p.add_argument("--results", default=None, help="match-result JSONL")
    p.add_argument("--embed-stride", type=int, default=None)
    p.set_defaults(handler=cmd_report)

    return parser


# ---------------------------------------------------------------------------
# gen-demos
# ---------------------------------------------------------------------------


def _gen_one_demo(task) -> tuple[int, str]:
    strategy_id, seed, env_doc, noise, early, path = task
    from .config import EnvConfig

    strat = demos.get_strategy(strategy_id)
    traj = demos.play_scripted_game(
        strat,
        strat,
        list(strat.lineup),
        list(strat.lineup),
        seed=seed,
        env_config=EnvConfig(**env_doc),
        noise_rate=noise,
        early_window=early,
        include_obs=True,
        meta={"strategy": strategy_id, "seed": seed},
    )
    trajectory.write_jsonl(traj, path)
    return task[1], str(path)


def cmd_gen_demos(args, cfg: RunConfig) -> int:
    strategies = list(demos.STRATEGIES) if args.strategy == "mixed" else [args.strategy]
    games = args.games if args.games is not None else cfg.demos.games_per_strategy
    out_root = Path(args.out) / "demos"
    for si, strategy_id in enumerate(strategies):
        strat = demos.get_strategy(strategy_id)
        sdir = out_root / strategy_id
        sdir.mkdir(parents=True, exist_ok=True)
        seeds = demos.derive_seeds(cfg.seed + si, games)
        tasks = [
            (
                strategy_id,
                seeds[i],
                cfg.env.to_dict(),
                cfg.demos.noise_rate,
                cfg.demos.early_window_frames,
                str(sdir / f"demo_{i:04d}.jsonl"),
            )
            for i in range(games)
        ]
        _parallel_run(_gen_one_demo, tasks, args.workers)
        manifest = {
            "strategy": strategy_id,
            "blue_lineup": [r.value for r in strat.lineup],
            "red_lineup": [r.value for r in strat.lineup],
            "seeds": seeds,
            "game_count": games,
            "files": [f"demo_{i:04d}.jsonl" for i in range(games)],
        }
        with open(sdir / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"wrote {games} {strategy_id} demos to {sdir}")
    return 0


def _parallel_run(fn, tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


# ---------------------------------------------------------------------------
# extract
# ---------------------------------------------------------------------------


def cmd_extract(args, cfg: RunConfig) -> int:
    demo_dir = Path(args.demos)
    manifests = sorted(demo_dir.glob("**/manifest.json"))
    out_file = Path(args.out_file) if args.out_file else Path(args.out) / "dataset.jsonl"
    c_frames = cfg.labels.c_frames
    eps_frames = cfg.labels.epsilon_frames

    examples: list[macro.LabeledExample] = []
    if not manifests:
        print(f"warning: no demo manifests under {demo_dir}; writing empty dataset", file=sys.stderr)
    idx = 0
    for manifest_path in manifests:
        with open(manifest_path) as fh:
            manifest = json.load(fh)
        for fname in manifest["files"]:
            traj = trajectory.read_jsonl(manifest_path.parent / fname)
            for team in E.TEAMS:
                rng = np.random.default_rng(
                    np.random.SeedSequence([cfg.seed, 1000 + idx]).generate_state(1)[0]
                )
                examples.extend(macro.extract_labels(traj, team, c_frames, eps_frames, rng))
                idx += 1
    macro.write_dataset(examples, out_file, c_frames, eps_frames)
    print(f"wrote {len(examples)} examples to {out_file} (C={c_frames}f, eps={eps_frames}f)")
    return 0


# ---------------------------------------------------------------------------
# training commands
# ---------------------------------------------------------------------------


def cmd_train_meta(args, cfg: RunConfig) -> int:
    header, examples = macro.read_dataset(args.dataset)
    if args.epochs is not None:
        cfg.meta.epochs = args.epochs
    model, history = meta.train_meta(examples, cfg.meta, seed=cfg.seed)
    out_dir = Path(args.out) / "meta"
    meta.save_meta_checkpoint(out_dir / "meta.ckpt", model)
    meta.write_history_csv(history, out_dir / "metrics.csv")
    final = history[-1]
    print(
        f"trained goal predictor: eval_loss={final['eval_loss']:.4f} "
        f"(checkpoint {out_dir / 'meta.ckpt'})"
    )
    return 0


def cmd_train_rl(args, cfg: RunConfig) -> int:
    meta_model = None
    if args.mode == "guided":
        if not args.meta:
            raise ConfigError("guided mode needs --meta <checkpoint>")
        meta_model = meta.load_meta_checkpoint(args.meta)
    elif args.meta:
        print("warning: --meta is ignored in baseline mode", file=sys.stderr)

    out_dir = Path(args.out) / f"rl_{args.mode}"
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "training.csv"
    if not args.resume and csv_path.exists():
        csv_path.unlink()

    def log_row(row: dict) -> None:
        new_file = not csv_path.exists()
        with open(csv_path, "a") as fh:
            if new_file:
                fh.write(",".join(row.keys()) + "\n")
            fh.write(",".join(str(v) for v in row.values()) + "\n")
        print(
            f"iter {row['iteration']}: probe_win={row['probe_win_rate']:.2f} "
            f"obj={row['policy_objective']:.4f} vloss={row['value_loss']:.4f}"
        )

    rl.train_policy(
        cfg.env,
        cfg.ppo,
        meta_model,
        iterations=args.iterations,
        seed=cfg.seed,
        out_dir=out_dir,
        resume=args.resume,
        progress=log_row,
    )
    print(f"checkpoint: {out_dir / 'policy_latest.ckpt'}")
    return 0


# ---------------------------------------------------------------------------
# tournament
# ---------------------------------------------------------------------------


def cmd_tournament(args, cfg: RunConfig) -> int:
    specs = {}
    for chunk in args.agents.split(","):
        if "=" not in chunk:
            raise ConfigError(f"agent spec {chunk!r} must look like name=spec")
        name, spec = chunk.split("=", 1)
        specs[name.strip()] = spec.strip()
    meta_model = meta.load_meta_checkpoint(args.meta) if args.meta else None
    games = args.games_per_pair if args.games_per_pair is not None else cfg.eval.games_per_pair
    out = Path(args.out)
    results = play.run_tournament(
        specs,
        games_per_pair=games,
        seed=cfg.seed,
        env_config=cfg.env,
        meta_model=meta_model,
        temperature=cfg.ppo.temperature,
        refresh_frames=cfg.ppo.goal_refresh_frames,
        dump_dir=out / "trajectories" if args.dump_trajectories else None,
    )
    out.mkdir(parents=True, exist_ok=True)
    metrics.write_results_jsonl(results, out / "results.jsonl")
    table = metrics.elo_scores(
        results, k_factor=cfg.eval.elo_k_factor, passes=cfg.eval.elo_passes, seed=cfg.seed
    )
    for agent, score in sorted(table.items(), key=lambda kv: -kv[1]):
        print(f"{agent:>20}: {score:7.1f}")
    print(f"wrote {len(results)} results to {out / 'results.jsonl'}")
    return 0


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


def cmd_report(args, cfg: RunConfig) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report: dict = {"entropy": {}, "dbi": {}, "elo": None, "case_stats": {}}

    trajs: list[trajectory.Trajectory] = []
    if args.trajectories:
        for path in sorted(Path(args.trajectories).glob("**/*.jsonl")):
            trajs.append(trajectory.read_jsonl(path))
    by_agent: dict[str, list] = {}
    for view in metrics.agent_views(trajs):
        by_agent.setdefault(view.agent, []).append(view)

    for agent, group in sorted(by_agent.items()):
        report["entropy"][agent] = metrics.macro_state_entropy(group)
        lineups = {metrics.lineup_label(v.lineup) for v in group}
        if len(lineups) >= 2:
            try:
                report["dbi"][agent] = metrics.davies_bouldin(
                    metrics.lineup_macro_points(group, stride=cfg.eval.embed_stride)
                )
            except DataError:
                report["dbi"][agent] = None
        else:
            report["dbi"][agent] = None
        try:
            report["case_stats"][agent] = metrics.case_stats(
                group, marksman_slot=0, early_window=cfg.demos.early_window_frames
            )
        except DataError:
            report["case_stats"][agent] = None

    if args.results:
        results = metrics.read_results_jsonl(args.results)
        report["elo"] = metrics.elo_scores(
            results, k_factor=cfg.eval.elo_k_factor, passes=cfg.eval.elo_passes, seed=cfg.seed
        )

    if trajs:
        stride = args.embed_stride if args.embed_stride is not None else cfg.eval.embed_stride
        rows = metrics.embed_macro_states(
            metrics.agent_views(trajs), out / "macro_embedding.csv", stride=stride
        )
        report["embedding_rows"] = rows

    with open(out / "report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"report: {out / 'report.json'}")
    for agent, h in sorted(report["entropy"].items()):
        print(f"  entropy[{agent}] = {h:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
