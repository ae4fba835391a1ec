"""JSON interchange for games, solver checkpoints, and episode traces.

The game format stores transition and reward tables sparsely (nonzero
entries only) with integer indices into the name lists; files are
validated against the shipped JSON schema on load so malformed input
fails with a clear message instead of a deep traceback.
"""

from __future__ import annotations

import json
from importlib import resources

import jsonschema
import numpy as np

from .exceptions import GameValidationError
from .game import GameSpec, check_game
from .points import PointSet
from .solver import NCPBVISolver

GAME_FORMAT = "ncirl-game-v1"
CHECKPOINT_FORMAT = "ncirl-checkpoint-v1"


def _schema(name: str) -> dict:
    path = resources.files("ncirl.schemas").joinpath(name)
    return json.loads(path.read_text())


def game_to_dict(spec: GameSpec) -> dict:
    transitions = []
    rewards = []
    for s in range(spec.n_states):
        t = spec.transitions[s]
        for a, d, s1 in zip(*np.nonzero(t)):
            transitions.append(
                [int(s), int(a), int(d), int(s1), float(t[a, d, s1])]
            )
        r = spec.rewards[s]
        for a, d, s1, k in zip(*np.nonzero(r)):
            rewards.append(
                [int(s), int(a), int(d), int(s1), int(k), float(r[a, d, s1, k])]
            )
    return {
        "format": GAME_FORMAT,
        "states": list(spec.states),
        "attacker_actions": [list(x) for x in spec.attacker_actions],
        "defender_actions": [list(x) for x in spec.defender_actions],
        "intents": list(spec.intents),
        "transitions": transitions,
        "rewards": rewards,
        "prior": spec.prior.tolist(),
        "discount": spec.discount,
        "horizon": spec.horizon,
        "metadata": spec.metadata,
    }


def game_from_dict(data: dict) -> GameSpec:
    jsonschema.validate(data, _schema("game.schema.json"))
    ns = len(data["states"])
    nk = len(data["intents"])
    na = [len(x) for x in data["attacker_actions"]]
    nd = [len(x) for x in data["defender_actions"]]
    if len(data["attacker_actions"]) != ns or len(data["defender_actions"]) != ns:
        raise GameValidationError(["action lists must match the state count"])
    transitions = [np.zeros((na[s], nd[s], ns)) for s in range(ns)]
    rewards = [np.zeros((na[s], nd[s], ns, nk)) for s in range(ns)]
    try:
        for s, a, d, s1, p in data["transitions"]:
            transitions[s][a, d, s1] = p
        for s, a, d, s1, k, v in data["rewards"]:
            rewards[s][a, d, s1, k] = v
    except IndexError as e:
        raise GameValidationError([f"sparse entry out of range: {e}"]) from e
    return check_game(
        GameSpec(
            states=tuple(data["states"]),
            attacker_actions=tuple(tuple(x) for x in data["attacker_actions"]),
            defender_actions=tuple(tuple(x) for x in data["defender_actions"]),
            transitions=tuple(transitions),
            intents=tuple(data["intents"]),
            rewards=tuple(rewards),
            prior=np.asarray(data["prior"], dtype=np.float64),
            discount=float(data["discount"]),
            horizon=data.get("horizon"),
            metadata=data.get("metadata") or {},
        )
    )


def save_game(spec: GameSpec, path) -> None:
    with open(path, "w") as fh:
        json.dump(game_to_dict(spec), fh, sort_keys=True)
        fh.write("\n")


def load_game(path) -> GameSpec:
    with open(path) as fh:
        return game_from_dict(json.load(fh))


# -- checkpoints -------------------------------------------------------------


def _sets_to_json(stages):
    return [
        [
            {
                "corners": ps.corner_values.tolist(),
                "points": [
                    {"vector": vec.tolist(), "value": float(val)}
                    for vec, val in zip(ps.vectors, ps.values)
                ],
            }
            for ps in stage
        ]
        for stage in stages
    ]


def _sets_from_json(data):
    stages = []
    for stage in data:
        sets = []
        for entry in stage:
            ps = PointSet(corner_values=np.asarray(entry["corners"]))
            for point in entry["points"]:
                ps.vectors = np.vstack(
                    [ps.vectors, np.asarray(point["vector"], dtype=np.float64)]
                )
                ps.values = np.append(ps.values, float(point["value"]))
            sets.append(ps)
        stages.append(sets)
    return stages


def save_checkpoint(solver: NCPBVISolver, path) -> None:
    payload = {
        "format": CHECKPOINT_FORMAT,
        "params": solver.get_params(),
        "completed_rounds": solver._completed_rounds,
        "initial_belief": solver.initial_belief_.tolist(),
        "primal": _sets_to_json(solver.primal_stages_),
        "dual": _sets_to_json(solver.dual_stages_),
        "diagnostics": _jsonable(solver.diagnostics_),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path, game: GameSpec) -> NCPBVISolver:
    with open(path) as fh:
        data = json.load(fh)
    if data.get("format") != CHECKPOINT_FORMAT:
        raise GameValidationError(
            [f"not a checkpoint file: format={data.get('format')!r}"]
        )
    params = data["params"]
    params["sides"] = tuple(params.get("sides", ("primal", "dual")))
    solver = NCPBVISolver(**params)
    solver.restore(
        game,
        _sets_from_json(data["primal"]),
        _sets_from_json(data["dual"]),
        completed_rounds=int(data["completed_rounds"]),
        initial_belief=np.asarray(data["initial_belief"], dtype=np.float64),
        diagnostics=data["diagnostics"],
    )
    return solver


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def save_traces(traces, path) -> None:
    with open(path, "w") as fh:
        json.dump([t.to_dict() for t in traces], fh, sort_keys=True)
        fh.write("\n")
