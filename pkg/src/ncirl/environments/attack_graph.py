"""Random attack graphs and their compilation into stage games.

A graph is a DAG over security conditions. Exploits require a set of
already-enabled precondition nodes and, when attempted and not blocked,
enable their postcondition node with a fixed success probability. The
attacker privately values subsets of the non-root nodes (one normalized
value profile per intent); the defender can block a bounded number of
exploits per stage. Game states are the reachable enabled-node sets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from ..exceptions import NcirlError
from ..game import GameSpec, check_game


@dataclass(frozen=True)
class GraphParams:
    """Generator knobs for :func:`random_attack_graph`."""

    n_nodes: int = 6
    n_intents: int = 10
    n_roots: int = 1
    beta: float = 0.8
    max_preconditions: int = 3
    max_out_degree: int = 3
    max_exploits_per_node: int = 2
    value_density: float = 1.0
    attack_cost: float = 0.01
    defense_cost: float = 0.01


@dataclass(frozen=True)
class AttackGraph:
    """A generated instance: exploits are ``(preconditions, postcondition)``
    pairs over node indices; ``node_values[k, j]`` is intent ``k``'s value
    for enabling node ``j`` (zero on roots, rows sum to one)."""

    n_nodes: int
    roots: tuple[int, ...]
    exploits: tuple[tuple[tuple[int, ...], int], ...]
    beta: float
    node_values: np.ndarray
    intents: tuple[str, ...]
    attack_cost: float = 0.01
    defense_cost: float = 0.01
    seed: int | None = None

    def __post_init__(self):
        vals = np.asarray(self.node_values, dtype=np.float64)
        vals.flags.writeable = False
        object.__setattr__(self, "node_values", vals)

    def to_dict(self) -> dict:
        return {
            "n_nodes": self.n_nodes,
            "roots": list(self.roots),
            "exploits": [
                {"preconditions": list(pre), "postcondition": post}
                for pre, post in self.exploits
            ],
            "beta": self.beta,
            "node_values": self.node_values.tolist(),
            "intents": list(self.intents),
            "attack_cost": self.attack_cost,
            "defense_cost": self.defense_cost,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AttackGraph":
        return cls(
            n_nodes=int(data["n_nodes"]),
            roots=tuple(data["roots"]),
            exploits=tuple(
                (tuple(e["preconditions"]), int(e["postcondition"]))
                for e in data["exploits"]
            ),
            beta=float(data["beta"]),
            node_values=np.asarray(data["node_values"], dtype=np.float64),
            intents=tuple(data["intents"]),
            attack_cost=float(data["attack_cost"]),
            defense_cost=float(data["defense_cost"]),
            seed=data.get("seed"),
        )


def random_attack_graph(
    params: GraphParams = GraphParams(), seed: int = 0
) -> AttackGraph:
    """Sample a connected DAG instance. Nodes are created in topological
    order; every non-root node gets at least one exploit whose
    preconditions are earlier nodes, respecting the degree caps softly
    (the first precondition ignores the out-degree cap so the graph stays
    connected)."""
    rng = np.random.default_rng(seed)
    n = params.n_nodes
    if params.n_roots >= n:
        raise ValueError("need at least one non-root node")
    roots = tuple(range(params.n_roots))
    out_degree = np.zeros(n, dtype=int)
    exploits: list[tuple[tuple[int, ...], int]] = []
    for j in range(params.n_roots, n):
        n_exploits = 1 + int(rng.integers(0, params.max_exploits_per_node))
        for _ in range(n_exploits):
            earlier = np.arange(j)
            open_slots = earlier[out_degree[earlier] < params.max_out_degree]
            pool = open_slots if open_slots.size else earlier
            first = int(rng.choice(pool))
            pre = {first}
            n_extra = int(
                rng.integers(0, min(params.max_preconditions, j))
            )
            extras = open_slots[open_slots != first]
            if n_extra and extras.size:
                take = rng.choice(
                    extras, size=min(n_extra, extras.size), replace=False
                )
                pre.update(int(x) for x in take)
            key = (tuple(sorted(pre)), j)
            if key in exploits:
                continue
            exploits.append(key)
            for p in key[0]:
                out_degree[p] += 1

    non_roots = np.arange(params.n_roots, n)
    values = np.zeros((params.n_intents, n))
    for k in range(params.n_intents):
        care = rng.random(non_roots.size) < params.value_density
        if not care.any():
            care[int(rng.integers(0, non_roots.size))] = True
        raw = rng.random(non_roots.size) * care
        values[k, non_roots] = raw / raw.sum()
    return AttackGraph(
        n_nodes=n,
        roots=roots,
        exploits=tuple(exploits),
        beta=params.beta,
        node_values=values,
        intents=tuple(f"intent-{k}" for k in range(params.n_intents)),
        attack_cost=params.attack_cost,
        defense_cost=params.defense_cost,
        seed=seed,
    )


def _attemptable(graph: AttackGraph, enabled: frozenset) -> list[int]:
    out = []
    for e, (pre, post) in enumerate(graph.exploits):
        if post not in enabled and all(p in enabled for p in pre):
            out.append(e)
    return out


def reachable_states(graph: AttackGraph, state_cap: int = 200) -> list[frozenset]:
    """Enumerate enabled-node sets reachable from the root set, in
    deterministic breadth-first order."""
    start = frozenset(graph.roots)
    seen = {start}
    order = [start]
    queue = [start]
    while queue:
        s = queue.pop(0)
        for e in _attemptable(graph, s):
            s1 = s | {graph.exploits[e][1]}
            if s1 not in seen:
                seen.add(s1)
                order.append(s1)
                queue.append(s1)
                if len(order) > state_cap:
                    raise NcirlError(
                        f"reachable state count exceeds cap {state_cap}"
                    )
    return order


def _action_sets(attemptable: list[int], budget: int) -> list[tuple[int, ...]]:
    acts: list[tuple[int, ...]] = [()]
    for size in range(1, budget + 1):
        acts.extend(combinations(attemptable, size))
    return acts


def compile_game(
    graph: AttackGraph,
    horizon: int | None = None,
    discount: float = 0.9,
    attacker_budget: int = 1,
    defender_budget: int = 1,
    state_cap: int = 200,
) -> GameSpec:
    """Expand the graph into an explicit stage game.

    Actions are subsets of currently attemptable exploits up to each
    side's budget (the empty subset is always available). Blocked exploits
    fail for the stage; unblocked attempts succeed independently. Rewards
    are newly-enabled node values minus per-attempt and per-block costs.
    States with nothing left to attempt are absorbing with zero reward.
    """
    states = reachable_states(graph, state_cap=state_cap)
    index = {s: i for i, s in enumerate(states)}
    ns = len(states)
    nk = len(graph.intents)

    names = tuple(
        "{" + ",".join(str(x) for x in sorted(s)) + "}" for s in states
    )
    att_actions, def_actions = [], []
    transitions, rewards = [], []
    for s in states:
        attemptable = _attemptable(graph, s)
        a_sets = _action_sets(attemptable, attacker_budget)
        d_sets = _action_sets(attemptable, defender_budget)
        att_actions.append(
            tuple("pass" if not a else "exploit:" + "+".join(map(str, a))
                  for a in a_sets)
        )
        def_actions.append(
            tuple("pass" if not d else "block:" + "+".join(map(str, d))
                  for d in d_sets)
        )
        t = np.zeros((len(a_sets), len(d_sets), ns))
        r = np.zeros((len(a_sets), len(d_sets), ns, nk))
        for ai, attempt in enumerate(a_sets):
            for di, blocked in enumerate(d_sets):
                live = [e for e in attempt if e not in blocked]
                cost = (
                    -graph.attack_cost * len(attempt)
                    + graph.defense_cost * len(blocked)
                )
                for succeed in range(1 << len(live)):
                    prob = 1.0
                    new_nodes = set()
                    for bit, e in enumerate(live):
                        if succeed >> bit & 1:
                            prob *= graph.beta
                            new_nodes.add(graph.exploits[e][1])
                        else:
                            prob *= 1.0 - graph.beta
                    s1 = index[s | new_nodes]
                    t[ai, di, s1] += prob
                    gain = graph.node_values[:, sorted(new_nodes)].sum(axis=1)
                    r[ai, di, s1, :] = gain + cost
        transitions.append(t)
        rewards.append(r)

    prior = np.zeros((ns, nk))
    prior[index[frozenset(graph.roots)], :] = 1.0 / nk
    return check_game(
        GameSpec(
            states=names,
            attacker_actions=tuple(att_actions),
            defender_actions=tuple(def_actions),
            transitions=tuple(transitions),
            intents=graph.intents,
            rewards=tuple(rewards),
            prior=prior,
            discount=discount,
            horizon=horizon,
            metadata={"graph": graph.to_dict()},
        )
    )


def to_dot(graph: AttackGraph) -> str:
    """Graphviz rendering: condition nodes plus one box per exploit."""
    lines = ["digraph attack_graph {"]
    for j in range(graph.n_nodes):
        shape = "doublecircle" if j in graph.roots else "circle"
        mean_val = float(graph.node_values[:, j].mean())
        lines.append(
            f'  n{j} [shape={shape} label="n{j}\\n{mean_val:.3f}"];'
        )
    for e, (pre, post) in enumerate(graph.exploits):
        lines.append(f'  e{e} [shape=box label="e{e}"];')
        for p in pre:
            lines.append(f"  n{p} -> e{e};")
        lines.append(f"  e{e} -> n{post};")
    lines.append("}")
    return "\n".join(lines) + "\n"
