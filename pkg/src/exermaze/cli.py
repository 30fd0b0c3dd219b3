"""Command-line harness: pretraining, the adaptation experiment, serving,
grid validation and maze rendering.

Every command takes --seed where randomness is involved and is fully
reproducible from it; metrics files are byte-identical across runs with the
same seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass

from .dqn import (
    DifficultyEstimator,
    DqnAgent,
    TrainConfig,
    evaluate,
    generate_episode,
    load_checkpoint,
    pretrain,
    save_checkpoint,
)
from .grid import RoomGrid, default_grid, validate_grid
from .maze import from_json as maze_from_json
from .maze import render_ascii
from .rng import SplitMix64, derive_seed
from .sim import PROFILES, PlayerProfile, get_profile, load_profile


def _load_grid(spec: str) -> RoomGrid:
    if spec == "default":
        return default_grid()
    with open(spec, encoding="utf-8") as fh:
        return RoomGrid.from_json(fh.read())


def _load_player(spec: str) -> PlayerProfile:
    if spec.lower() in PROFILES:
        return get_profile(spec)
    return load_profile(spec)


def write_metrics_csv(path: str, metrics) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["episode", "rating", "abs_error", "epsilon", "loss"])
        for m in metrics:
            loss = "" if m.loss is None else repr(m.loss)
            writer.writerow([m.episode, m.rating, m.abs_error, repr(m.epsilon), loss])


def spearman_rank_correlation(xs, ys) -> float:
    """Spearman rho with average ranks for ties."""

    def ranks(values):
        order = sorted(range(len(values)), key=lambda i: values[i])
        out = [0.0] * len(values)
        i = 0
        while i < len(order):
            j = i
            while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
                j += 1
            averaged = (i + j) / 2.0 + 1.0
            for k in range(i, j + 1):
                out[order[k]] = averaged
            i = j + 1
        return out

    if len(xs) != len(ys) or len(xs) < 2:
        raise ValueError("need two sequences of equal length >= 2")
    rx, ry = ranks(xs), ranks(ys)
    mx = sum(rx) / len(rx)
    my = sum(ry) / len(ry)
    num = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    den = (
        sum((a - mx) ** 2 for a in rx) * sum((b - my) ** 2 for b in ry)
    ) ** 0.5
    return num / den if den else 0.0


@dataclass
class ExperimentRound:
    round: int
    rating: int
    rooms: int
    mean_effort: float
    mean_steps: float
    difficulty: float  # mean_effort + mean_steps
    rating_offset: float


def run_experiment(
    agent: DqnAgent, player: PlayerProfile, rounds: int, seed: int
) -> list[ExperimentRound]:
    """The study protocol with a simulated player: serve a maze greedily,
    let the player rate it, fold the rating in, repeat."""
    rater = DifficultyEstimator(
        player, agent.config.n_runs, derive_seed(seed, "experiment-rater")
    )
    rng = SplitMix64(derive_seed(seed, "experiment-serve"))
    rows: list[ExperimentRound] = []
    for round_no in range(1, rounds + 1):
        maze, transitions, _ = generate_episode(
            agent.net,
            agent.grid,
            0.0,
            agent.config,
            rng,
            agent.estimator,
            difficulty_shift=agent.rating_offset,
        )
        rating = rater.rating(maze)
        estimate = rater.estimate(maze)
        rows.append(
            ExperimentRound(
                round=round_no,
                rating=rating,
                rooms=len(maze.connected),
                mean_effort=estimate.mean_effort,
                mean_steps=estimate.mean_steps,
                difficulty=estimate.mean_effort + estimate.mean_steps,
                rating_offset=agent.rating_offset,
            )
        )
        agent.online_update(transitions, rating)
    return rows


def cmd_pretrain(args) -> int:
    grid = _load_grid(args.grid)
    profile = _load_player(args.profile)
    config = TrainConfig(pretrain_episodes=args.episodes, seed=args.seed)
    agent, metrics = pretrain(grid, profile, config)
    save_checkpoint(agent, args.out)
    if args.metrics:
        write_metrics_csv(args.metrics, metrics)
    result = evaluate(agent, n_mazes=args.eval_mazes, seed=args.eval_seed)
    print(f"checkpoint: {args.out}")
    print(f"episodes: {args.episodes}")
    print(
        f"greedy mean |rating - {config.target_rating}| over "
        f"{args.eval_mazes} evaluation mazes: {result.mean_abs_error:.3f}"
    )
    return 0


def cmd_experiment(args) -> int:
    agent = load_checkpoint(args.ckpt)
    first = _load_player(args.first_profile)
    if first != agent.profile:
        print(
            f"error: checkpoint was pretrained on profile "
            f"{agent.profile.name!r}, not {first.name!r}",
            file=sys.stderr,
        )
        return 2
    player = _load_player(args.second_profile)
    rows = run_experiment(agent, player, rounds=args.ratings, seed=args.seed)
    target = agent.config.target_rating

    print("round,rating,rooms,mean_effort,mean_steps,difficulty,rating_offset")
    for row in rows:
        print(
            f"{row.round},{row.rating},{row.rooms},{row.mean_effort:.2f},"
            f"{row.mean_steps:.2f},{row.difficulty:.2f},{row.rating_offset:+.3f}"
        )
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["round", "rating", "rooms", "mean_effort", "mean_steps", "difficulty", "rating_offset"]
            )
            for row in rows:
                writer.writerow(
                    [row.round, row.rating, row.rooms, repr(row.mean_effort),
                     repr(row.mean_steps), repr(row.difficulty), repr(row.rating_offset)]
                )

    rho = spearman_rank_correlation(
        [row.round for row in rows], [row.difficulty for row in rows]
    )
    half = len(rows) // 2
    early = sum(abs(row.rating - target) for row in rows[:half]) / half
    late = sum(abs(row.rating - target) for row in rows[half:]) / (len(rows) - half)
    within = sum(1 for row in rows if abs(row.rating - target) <= 1)
    print(f"spearman(round, difficulty): {rho:+.3f}")
    print(f"mean |rating - {target}|: first half {early:.3f} -> second half {late:.3f}"
          f" ({'decreased' if late < early else 'did not decrease'})")
    print(f"rounds within |rating - {target}| <= 1: {within}/{len(rows)}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app, load_service_config

    config = load_service_config(
        args.config,
        checkpoint=args.ckpt,
        checkpoint_dir=args.checkpoint_dir,
        host=args.host,
        port=args.port,
    )
    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    return 0


def cmd_validate_grid(args) -> int:
    grid = _load_grid(args.grid)
    report = validate_grid(grid)
    print(report.summary())
    return 0 if report.ok else 1


def cmd_render(args) -> int:
    with open(args.maze, encoding="utf-8") as fh:
        maze = maze_from_json(fh.read())
    print(render_ascii(maze))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="exermaze",
        description="Adaptive exercise-maze generation: train, experiment, serve.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pretrain", help="train an agent against the player simulation")
    p.add_argument("--grid", default="default", help="grid JSON file or 'default'")
    p.add_argument("--profile", default="average", help="profile name or JSON config file")
    p.add_argument("--episodes", type=int, default=20000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.add_argument("--metrics", help="per-episode metrics CSV output path")
    p.add_argument("--eval-mazes", type=int, default=100)
    p.add_argument("--eval-seed", type=int, default=99)
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("experiment", help="simulated adaptation study: serve, rate, update")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--first-profile", required=True, help="profile the checkpoint was pretrained on")
    p.add_argument("--second-profile", required=True, help="profile that plays and rates")
    p.add_argument("--ratings", type=int, default=10, help="number of serve/rate rounds")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", help="optional CSV output path")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("serve", help="run the HTTP adaptation service")
    p.add_argument("--ckpt", help="base checkpoint (or via config/env)")
    p.add_argument("--config", help="service config JSON file")
    p.add_argument("--checkpoint-dir", help="directory for per-session checkpoints")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("validate-grid", help="validate a grid layout")
    p.add_argument("grid", help="grid JSON file or 'default'")
    p.set_defaults(func=cmd_validate_grid)

    p = sub.add_parser("render", help="print a text-art view of a maze document")
    p.add_argument("maze", help="maze JSON file")
    p.set_defaults(func=cmd_render)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
