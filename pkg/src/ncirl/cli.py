"""Command-line front end: generate, solve, simulate, benchmark, export.

Exit codes: 0 success, 2 invalid arguments or input files, 3 solver or
runtime failure, 4 refusing to overwrite existing output (pass --force).
When no --seed is given, the NCIRL_SEED environment variable is used
before falling back to 0.
"""

from __future__ import annotations

import csv
import json
import os
import sys
from pathlib import Path

import click
import jsonschema
import numpy as np

from . import io as ncirl_io
from .environments.attack_graph import (
    GraphParams,
    compile_game,
    random_attack_graph,
    to_dot,
)
from .exceptions import GameValidationError, NcirlError
from .harness import merge_config, rollout, run_benchmark
from .solver import NCPBVISolver

EXIT_INVALID = 2
EXIT_RUNTIME = 3
EXIT_EXISTS = 4


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _default_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    env = os.environ.get("NCIRL_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            _fail(EXIT_INVALID, f"NCIRL_SEED must be an integer, got {env!r}")
    return 0


def _check_overwrite(paths, force: bool):
    existing = [str(p) for p in paths if Path(p).exists()]
    if existing and not force:
        _fail(
            EXIT_EXISTS,
            "output exists, pass --force to overwrite: " + ", ".join(existing),
        )


@click.group()
def cli():
    """Solver and benchmark tools for intent-uncertain security games."""


@cli.command()
@click.option("--nodes", "-n", default=6, show_default=True, type=int)
@click.option("--intents", default=10, show_default=True, type=int)
@click.option("--roots", default=1, show_default=True, type=int)
@click.option("--beta", default=0.8, show_default=True, type=float)
@click.option("--horizon", default=None, type=int,
              help="Stage count; defaults to the node count.")
@click.option("--discount", default=1.0, show_default=True, type=float)
@click.option("--attacker-budget", default=1, show_default=True, type=int)
@click.option("--defender-budget", default=1, show_default=True, type=int)
@click.option("--state-cap", default=200, show_default=True, type=int)
@click.option("--seed", default=None, type=int)
@click.option("--out", "-o", "out_dir", required=True,
              type=click.Path(file_okay=False))
@click.option("--force", is_flag=True)
def generate(nodes, intents, roots, beta, horizon, discount, attacker_budget,
             defender_budget, state_cap, seed, out_dir, force):
    """Sample an attack graph and write graph.json, game.json, graph.dot."""
    seed = _default_seed(seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    targets = [out / "graph.json", out / "game.json", out / "graph.dot"]
    _check_overwrite(targets, force)
    try:
        graph = random_attack_graph(
            GraphParams(n_nodes=nodes, n_intents=intents, n_roots=roots,
                        beta=beta),
            seed=seed,
        )
        game = compile_game(
            graph,
            horizon=horizon if horizon is not None else nodes,
            discount=discount,
            attacker_budget=attacker_budget,
            defender_budget=defender_budget,
            state_cap=state_cap,
        )
    except (ValueError, GameValidationError) as e:
        _fail(EXIT_INVALID, str(e))
    except NcirlError as e:
        _fail(EXIT_RUNTIME, str(e))
    with open(targets[0], "w") as fh:
        json.dump(graph.to_dict(), fh, sort_keys=True)
        fh.write("\n")
    ncirl_io.save_game(game, targets[1])
    targets[2].write_text(to_dot(graph))
    click.echo(
        f"generated {nodes}-node graph (seed {seed}): "
        f"{len(graph.exploits)} exploits, {game.n_states} states"
    )


@cli.command()
@click.option("--game", "game_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "-o", "out_path", required=True,
              type=click.Path(dir_okay=False))
@click.option("--config", "config_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="JSON object of solver parameters.")
@click.option("--rounds", default=None, type=int)
@click.option("--sweeps", default=None, type=int)
@click.option("--resume", is_flag=True,
              help="Continue from an existing checkpoint at --out.")
@click.option("--force", is_flag=True)
def solve(game_path, out_path, config_path, rounds, sweeps, resume, force):
    """Fit the point-based solver and write a checkpoint."""
    try:
        game = ncirl_io.load_game(game_path)
    except (json.JSONDecodeError, jsonschema.ValidationError,
            GameValidationError) as e:
        _fail(EXIT_INVALID, f"cannot load game: {e}")
    params = {}
    if config_path:
        with open(config_path) as fh:
            try:
                params = json.load(fh)
            except json.JSONDecodeError as e:
                _fail(EXIT_INVALID, f"bad solver config: {e}")
    if rounds is not None:
        params["n_rounds"] = rounds
    if sweeps is not None:
        params["n_sweeps"] = sweeps
    known = set(NCPBVISolver().get_params())
    unknown = set(params) - known
    if unknown:
        _fail(EXIT_INVALID, f"unknown solver parameters: {sorted(unknown)}")
    if resume and Path(out_path).exists():
        try:
            solver = ncirl_io.load_checkpoint(out_path, game)
        except (json.JSONDecodeError, GameValidationError, KeyError) as e:
            _fail(EXIT_INVALID, f"cannot resume from checkpoint: {e}")
        solver.set_params(**params)
    else:
        _check_overwrite([out_path], force or resume)
        solver = NCPBVISolver(**params)
    try:
        solver.fit(game)
    except GameValidationError as e:
        _fail(EXIT_INVALID, str(e))
    except NcirlError as e:
        _fail(EXIT_RUNTIME, str(e))
    ncirl_io.save_checkpoint(solver, out_path)
    b0 = solver.initial_belief_
    values = [
        solver.primal_value(s, b0)
        for s in range(game.n_states)
        if game.state_marginal[s] > 0
    ]
    click.echo(
        f"solved: {solver._completed_rounds} rounds, "
        f"start-state value(s) {[round(v, 6) for v in values]}"
    )


@cli.command()
@click.option("--game", "game_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--checkpoint", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--intent", default="random",
              help='Intent index or "random".')
@click.option("--episodes", default=1, show_default=True, type=int)
@click.option("--horizon", default=None, type=int)
@click.option("--seed", default=None, type=int)
@click.option("--out", "-o", "out_path", required=True,
              type=click.Path(dir_okay=False))
@click.option("--force", is_flag=True)
def simulate(game_path, checkpoint, intent, episodes, horizon, seed, out_path,
             force):
    """Roll out the solved agent pair and write episode traces."""
    seed = _default_seed(seed)
    _check_overwrite([out_path], force)
    try:
        game = ncirl_io.load_game(game_path)
        solver = ncirl_io.load_checkpoint(checkpoint, game)
    except (json.JSONDecodeError, jsonschema.ValidationError,
            GameValidationError, KeyError) as e:
        _fail(EXIT_INVALID, str(e))
    if intent != "random":
        try:
            intent = int(intent)
        except ValueError:
            _fail(EXIT_INVALID, f"bad intent {intent!r}")
        if not 0 <= intent < game.n_intents:
            _fail(EXIT_INVALID, f"intent index {intent} out of range")
    rng = np.random.default_rng(seed)
    traces = []
    try:
        for ep in range(episodes):
            k = (
                int(rng.choice(game.n_intents, p=game.intent_marginal))
                if intent == "random"
                else intent
            )
            traces.append(
                rollout(
                    game,
                    solver.attacker_agent(k),
                    solver.defender_agent(),
                    intent=k,
                    seed=int(rng.integers(0, 2**31)),
                    horizon=horizon,
                )
            )
    except (ValueError, NcirlError) as e:
        _fail(EXIT_RUNTIME, str(e))
    ncirl_io.save_traces(traces, out_path)
    rewards = [t.total_reward for t in traces]
    click.echo(
        f"simulated {episodes} episode(s), mean reward "
        f"{float(np.mean(rewards)):.6f}"
    )


@cli.command()
@click.option("--config", "config_path", default=None,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "-o", "out_dir", required=True,
              type=click.Path(file_okay=False))
@click.option("--jobs", default=1, show_default=True, type=int)
@click.option("--seed", default=None, type=int,
              help="Overrides the config seed.")
@click.option("--force", is_flag=True)
def benchmark(config_path, out_dir, jobs, seed, force):
    """Run the defense comparison sweep; write benchmark.csv, summary.json."""
    config = {}
    if config_path:
        with open(config_path) as fh:
            try:
                config = json.load(fh)
            except json.JSONDecodeError as e:
                _fail(EXIT_INVALID, f"bad benchmark config: {e}")
    try:
        jsonschema.validate(config, ncirl_io._schema("benchmark.schema.json"))
    except jsonschema.ValidationError as e:
        _fail(EXIT_INVALID, f"bad benchmark config: {e.message}")
    if seed is not None:
        config["seed"] = seed
    elif "seed" not in config:
        config["seed"] = _default_seed(None)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    targets = [out / "benchmark.csv", out / "summary.json"]
    _check_overwrite(targets, force)
    try:
        merged = merge_config(config)
        result = run_benchmark(merged, jobs=jobs)
    except NcirlError as e:
        _fail(EXIT_INVALID, str(e))
    result.write_csv(targets[0])
    result.write_summary(targets[1])
    if result.summary["failures"]:
        click.echo(
            f"warning: {len(result.summary['failures'])} instance(s) failed",
            err=True,
        )
    for size, stats in result.summary["per_size"].items():
        click.echo(
            f"size {size}: adaptive defense {stats['ncirl']['mean']} "
            f"vs static {stats['mairl']['mean']}"
        )


@cli.command()
@click.option("--checkpoint", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--game", "game_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "-o", "out_dir", required=True,
              type=click.Path(file_okay=False))
@click.option("--force", is_flag=True)
def export(checkpoint, game_path, out_dir, force):
    """Dump the stored value sets from a checkpoint to CSV."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    target = out / "value_sets.csv"
    _check_overwrite([target], force)
    try:
        game = ncirl_io.load_game(game_path)
        solver = ncirl_io.load_checkpoint(checkpoint, game)
    except (json.JSONDecodeError, jsonschema.ValidationError,
            GameValidationError, KeyError) as e:
        _fail(EXIT_INVALID, str(e))
    with open(target, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["side", "stage", "state", "kind", "index", "vector",
                         "value"])
        for side, stages in (("primal", solver.primal_stages_),
                             ("dual", solver.dual_stages_)):
            for t, stage in enumerate(stages):
                for s, ps in enumerate(stage):
                    for k, v in enumerate(ps.corner_values):
                        vec = "|".join(
                            repr(float(x)) for x in np.eye(ps.dim)[k]
                        )
                        writer.writerow(
                            [side, t, game.states[s], "corner", k, vec,
                             repr(float(v))]
                        )
                    for i, (vec, val) in enumerate(zip(ps.vectors, ps.values)):
                        writer.writerow(
                            [side, t, game.states[s], "point", i,
                             "|".join(repr(float(x)) for x in vec),
                             repr(float(val))]
                        )
    click.echo(f"wrote {target}")


def main():
    cli(prog_name="ncirl")


if __name__ == "__main__":
    main()
