"""Episode simulation, exact policy evaluation, and the benchmark loop.

Rollouts sample full episodes from paired agents; the expected-value mode
instead enumerates the whole outcome tree (cloning agents down each
branch), which is exact and deterministic for small games. The benchmark
compares two defense arms on the same instances: the intent-adaptive
defense produced by the two-sided point solver, and a static defense that
best-responds to one (possibly wrong) inferred intent with complete
information. Attacker rewards are normalized per instance by the true
intent's total node value so sizes are comparable.

CSV output contains only deterministic fields (no timings), sorted on a
fixed key, so identical configurations produce byte-identical files;
wall-clock numbers go to the JSON summary only.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .agents import TableAgent
from .environments.attack_graph import GraphParams, compile_game, random_attack_graph
from .environments.patrolling import patrolling_game
from .exceptions import NcirlError
from .game import GameSpec
from .matrix_game import shapley_solve
from .solver import NCPBVISolver


# -- fixed-intent agents -----------------------------------------------------


def mairl_defender(
    game: GameSpec,
    inferred_intent: int,
    tol: float = 1e-9,
    backend: str | None = None,
) -> TableAgent:
    """Defense that assumes the attacker's intent was identified offline:
    the complete-information equilibrium defense for that single intent.
    The returned agent holds strategies only, not the intent hypothesis."""
    table = shapley_solve(
        game.restrict_to_intent(inferred_intent), tol=tol, backend=backend
    )
    return TableAgent(
        table.defender_strategies,
        role="defender",
        horizon=game.horizon,
        stage_indexed=game.horizon is not None,
    )


def complete_info_attacker(
    game: GameSpec,
    intent: int,
    tol: float = 1e-9,
    backend: str | None = None,
) -> TableAgent:
    """Equilibrium attack for a single intent under complete information."""
    table = shapley_solve(
        game.restrict_to_intent(intent), tol=tol, backend=backend
    )
    return TableAgent(
        table.attacker_strategies,
        role="attacker",
        horizon=game.horizon,
        stage_indexed=game.horizon is not None,
    )


# -- episode simulation ------------------------------------------------------


@dataclass(frozen=True)
class StageRecord:
    stage: int
    state: int
    attacker_action: int
    defender_action: int
    successor: int
    reward: float
    belief: np.ndarray | None
    zeta: np.ndarray | None


@dataclass(frozen=True)
class RolloutTrace:
    seed: int
    intent: int
    initial_state: int
    records: tuple[StageRecord, ...]
    total_reward: float

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "intent": self.intent,
            "initial_state": self.initial_state,
            "total_reward": self.total_reward,
            "stages": [
                {
                    "stage": r.stage,
                    "state": r.state,
                    "attacker_action": r.attacker_action,
                    "defender_action": r.defender_action,
                    "successor": r.successor,
                    "reward": r.reward,
                    "belief": None if r.belief is None else list(r.belief),
                    "zeta": None if r.zeta is None else list(r.zeta),
                }
                for r in self.records
            ],
        }


def _initial_state_distribution(game: GameSpec, intent: int) -> np.ndarray:
    col = game.prior[:, intent]
    total = col.sum()
    if total <= 0.0:
        raise NcirlError(f"intent {intent} has zero prior probability")
    return col / total


def rollout(
    game: GameSpec,
    attacker,
    defender,
    intent: int,
    seed: int,
    horizon: int | None = None,
    initial_state: int | None = None,
) -> RolloutTrace:
    """Sample one episode; the per-stage discount accumulates into
    ``total_reward``. Agent information snapshots (belief or penalty
    vector) are recorded when the agent exposes them."""
    rng = np.random.default_rng(seed)
    if horizon is None:
        horizon = game.horizon
    if horizon is None:
        raise ValueError("unbounded game: pass an explicit rollout horizon")
    if initial_state is None:
        dist = _initial_state_distribution(game, intent)
        initial_state = int(rng.choice(game.n_states, p=dist))
    attacker.reset(initial_state)
    defender.reset(initial_state)
    s = initial_state
    records = []
    total = 0.0
    weight = 1.0
    for t in range(horizon):
        belief = getattr(attacker, "belief", None)
        zeta = getattr(defender, "zeta", None)
        a = attacker.act(rng)
        d = defender.act(rng)
        row = game.transitions[s][a, d]
        s1 = int(rng.choice(game.n_states, p=row))
        r = float(game.rewards[s][a, d, s1, intent])
        total += weight * r
        weight *= game.discount
        attacker.observe(a, d, s1)
        defender.observe(a, s1)
        records.append(
            StageRecord(
                stage=t,
                state=s,
                attacker_action=a,
                defender_action=d,
                successor=s1,
                reward=r,
                belief=None if belief is None else np.array(belief),
                zeta=None if zeta is None else np.array(zeta),
            )
        )
        s = s1
    return RolloutTrace(
        seed=seed,
        intent=intent,
        initial_state=initial_state,
        records=tuple(records),
        total_reward=total,
    )


def expected_total_reward(
    game: GameSpec,
    attacker,
    defender,
    intent: int,
    horizon: int | None = None,
    initial_state: int | None = None,
    prob_tol: float = 1e-12,
) -> float:
    """Exact expected accumulated reward for the agent pair, conditioned on
    the realized intent, by enumerating every positive-probability branch
    of the episode tree with cloned agents."""
    if horizon is None:
        horizon = game.horizon
    if horizon is None:
        raise ValueError("unbounded game: pass an explicit evaluation horizon")

    def branch(att, dfd, s, depth):
        if depth == horizon:
            return 0.0
        xa = att.action_distribution()
        xd = dfd.action_distribution()
        total = 0.0
        for a in np.flatnonzero(xa > prob_tol):
            for d in np.flatnonzero(xd > prob_tol):
                row = game.transitions[s][a, d]
                for s1 in np.flatnonzero(row > prob_tol):
                    p = float(xa[a] * xd[d] * row[s1])
                    att2, dfd2 = att.clone(), dfd.clone()
                    att2.observe(int(a), int(d), int(s1))
                    dfd2.observe(int(a), int(s1))
                    r = float(game.rewards[s][a, d, s1, intent])
                    total += p * (
                        r
                        + game.discount * branch(att2, dfd2, int(s1), depth + 1)
                    )
        return total

    if initial_state is not None:
        starts = [(int(initial_state), 1.0)]
    else:
        dist = _initial_state_distribution(game, intent)
        starts = [(int(s), float(p)) for s, p in enumerate(dist) if p > prob_tol]
    value = 0.0
    for s0, p0 in starts:
        attacker.reset(s0)
        defender.reset(s0)
        value += p0 * branch(attacker, defender, s0, 0)
    return value


# -- benchmark ---------------------------------------------------------------

DEFAULT_BENCHMARK_CONFIG: dict = {
    "environment": "attack_graph",
    "sizes": [6],
    "instances": 20,
    "seed": 0,
    "horizon": None,
    "discount": 1.0,
    "n_intents": 10,
    "n_roots": 1,
    "beta": 0.8,
    "value_density": 1.0,
    "attack_cost": 0.01,
    "defense_cost": 0.01,
    "attacker_budget": 1,
    "defender_budget": 1,
    "state_cap": 200,
    "evaluation": "rollout",
    "rollouts": 20,
    "true_intent": "random",
    "inferred_intent": "random",
    "solver": {},
}

CSV_COLUMNS = (
    "size",
    "instance",
    "method",
    "rollout",
    "true_intent",
    "inferred_intent",
    "reward",
    "normalized_reward",
)


def merge_config(config: dict | None) -> dict:
    merged = {k: (dict(v) if isinstance(v, dict) else v)
              for k, v in DEFAULT_BENCHMARK_CONFIG.items()}
    for key, value in (config or {}).items():
        if key not in merged:
            raise NcirlError(f"unknown benchmark config key {key!r}")
        if key == "solver":
            merged["solver"] = dict(value)
        else:
            merged[key] = value
    return merged


def _instance_seed(*parts) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(p) for p in parts])


def _draw_intent(setting, nk: int, rng: np.random.Generator) -> int:
    if setting == "random":
        return int(rng.integers(0, nk))
    k = int(setting)
    if not 0 <= k < nk:
        raise NcirlError(f"intent index {k} out of range")
    return k


def _build_instance(config: dict, size: int, instance: int):
    if config["environment"] == "patrolling":
        game = patrolling_game()
        return game, 1.0, None
    seed = int(_instance_seed(config["seed"], size, instance).generate_state(1)[0])
    params = GraphParams(
        n_nodes=size,
        n_intents=config["n_intents"],
        n_roots=config["n_roots"],
        beta=config["beta"],
        value_density=config["value_density"],
        attack_cost=config["attack_cost"],
        defense_cost=config["defense_cost"],
    )
    graph = random_attack_graph(params, seed=seed)
    horizon = config["horizon"] if config["horizon"] is not None else size
    game = compile_game(
        graph,
        horizon=horizon,
        discount=config["discount"],
        attacker_budget=config["attacker_budget"],
        defender_budget=config["defender_budget"],
        state_cap=config["state_cap"],
    )
    return game, None, graph


def _run_instance(config: dict, size: int, instance: int) -> dict:
    started = time.perf_counter()
    game, norm, graph = _build_instance(config, size, instance)
    nk = game.n_intents
    rng = np.random.default_rng(_instance_seed(config["seed"], size, instance, 1))
    true_k = _draw_intent(config["true_intent"], nk, rng)
    inferred_k = _draw_intent(config["inferred_intent"], nk, rng)
    if norm is None:
        norm = float(graph.node_values[true_k].sum())
    if norm <= 0.0:
        norm = 1.0

    solver = NCPBVISolver(**config["solver"]).fit(game)
    arms = {
        "ncirl": (solver.attacker_agent(true_k), solver.defender_agent()),
        "mairl": (
            complete_info_attacker(game, true_k),
            mairl_defender(game, inferred_k),
        ),
    }
    solve_seconds = time.perf_counter() - started

    rows = []
    for arm_id, (method, (attacker, defender)) in enumerate(sorted(arms.items())):
        if config["evaluation"] == "expected":
            reward = expected_total_reward(game, attacker, defender, true_k)
            rewards = [reward]
        else:
            rewards = []
            for rep in range(config["rollouts"]):
                rep_seed = int(
                    _instance_seed(
                        config["seed"], size, instance, 2 + arm_id, rep
                    ).generate_state(1)[0]
                )
                trace = rollout(game, attacker, defender, true_k, seed=rep_seed)
                rewards.append(trace.total_reward)
        for rep, reward in enumerate(rewards):
            rows.append(
                {
                    "size": size,
                    "instance": instance,
                    "method": method,
                    "rollout": rep,
                    "true_intent": true_k,
                    "inferred_intent": inferred_k if method == "mairl" else -1,
                    "reward": reward,
                    "normalized_reward": reward / norm,
                }
            )
    return {
        "rows": rows,
        "size": size,
        "instance": instance,
        "seconds": time.perf_counter() - started,
        "solve_seconds": solve_seconds,
        "n_states": game.n_states,
    }


@dataclass
class BenchmarkResult:
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def write_csv(self, path) -> None:
        ordered = sorted(
            self.rows,
            key=lambda r: (r["size"], r["instance"], r["method"], r["rollout"]),
        )
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for row in ordered:
                writer.writerow(
                    [
                        row["size"],
                        row["instance"],
                        row["method"],
                        row["rollout"],
                        row["true_intent"],
                        row["inferred_intent"],
                        repr(float(row["reward"])),
                        repr(float(row["normalized_reward"])),
                    ]
                )

    def write_summary(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary, fh, indent=2, sort_keys=True)
            fh.write("\n")


def run_benchmark(config: dict | None = None, jobs: int = 1) -> BenchmarkResult:
    """Run every (size, instance) cell of the configured sweep and
    aggregate per-size arm means. Instance failures are recorded in the
    summary and excluded from aggregation rather than aborting the run."""
    config = merge_config(config)
    tasks = [
        (size, instance)
        for size in config["sizes"]
        for instance in range(config["instances"])
    ]
    outcomes = []
    failures = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(_run_instance, config, size, instance)
                for size, instance in tasks
            ]
            for (size, instance), fut in zip(tasks, futures):
                try:
                    outcomes.append(fut.result())
                except Exception as exc:  # noqa: BLE001 - recorded, not fatal
                    failures.append(
                        {"size": size, "instance": instance, "error": str(exc)}
                    )
    else:
        for size, instance in tasks:
            try:
                outcomes.append(_run_instance(config, size, instance))
            except Exception as exc:  # noqa: BLE001 - recorded, not fatal
                failures.append(
                    {"size": size, "instance": instance, "error": str(exc)}
                )

    result = BenchmarkResult()
    for out in outcomes:
        result.rows.extend(out["rows"])

    per_size: dict = {}
    for size in config["sizes"]:
        stats = {}
        for method in ("ncirl", "mairl"):
            vals = np.array(
                [
                    r["normalized_reward"]
                    for r in result.rows
                    if r["size"] == size and r["method"] == method
                ]
            )
            stats[method] = {
                "mean": float(vals.mean()) if vals.size else None,
                "stderr": (
                    float(vals.std(ddof=1) / np.sqrt(vals.size))
                    if vals.size > 1
                    else 0.0
                ),
                "n": int(vals.size),
            }
        if stats["mairl"]["mean"] not in (None, 0.0) and stats["ncirl"]["mean"] is not None:
            stats["relative_reduction"] = 1.0 - (
                stats["ncirl"]["mean"] / stats["mairl"]["mean"]
            )
        per_size[str(size)] = stats

    result.summary = {
        "config": config,
        "per_size": per_size,
        "failures": failures,
        "instances_completed": len(outcomes),
        "runtime_seconds": {
            "total": float(sum(o["seconds"] for o in outcomes)),
            "solve": float(sum(o["solve_seconds"] for o in outcomes)),
        },
        "state_counts": {
            f"{o['size']}/{o['instance']}": o["n_states"] for o in outcomes
        },
    }
    return result
