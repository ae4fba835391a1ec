from .patrolling import patrolling_game
from .attack_graph import (
    AttackGraph,
    GraphParams,
    compile_game,
    random_attack_graph,
    to_dot,
)

__all__ = [
    "patrolling_game",
    "AttackGraph",
    "GraphParams",
    "compile_game",
    "random_attack_graph",
    "to_dot",
]
