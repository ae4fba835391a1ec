"""Solver library and benchmark harness for two-player zero-sum Markov
games in which one player privately knows a reward-relevant intent.

Public surface: the game model (:class:`GameSpec`), Bayesian intent
inference, zero-sum stage and stochastic game solvers, the two-sided
point-based solver (:class:`NCPBVISolver`) with its online agents, attack
graph and patrolling environments, and the simulation/benchmark harness.
"""

from .belief import unnormalized_posterior_weight, update_belief
from .environments import (
    AttackGraph,
    GraphParams,
    compile_game,
    patrolling_game,
    random_attack_graph,
)
from .exceptions import (
    GameValidationError,
    InfeasibleBackup,
    LpInfeasible,
    LpUnbounded,
    NcirlError,
    NumericalFailure,
    StaleAgentState,
    ZeroProbabilityObservation,
)
from .game import GameSpec, check_game, make_game, validate_game
from .harness import (
    complete_info_attacker,
    expected_total_reward,
    mairl_defender,
    rollout,
    run_benchmark,
)
from .lp import LpProblem, solve_lp, to_lp_format
from .matrix_game import (
    MatrixGameSolution,
    StateValueTable,
    matrix_game_value,
    shapley_solve,
    solve_matrix_game,
)
from .points import PointSet
from .solver import NCPBVISolver, select_initial_zeta

__version__ = "0.1.0"

__all__ = [
    "AttackGraph",
    "GameSpec",
    "GameValidationError",
    "GraphParams",
    "InfeasibleBackup",
    "LpInfeasible",
    "LpProblem",
    "LpUnbounded",
    "MatrixGameSolution",
    "NCPBVISolver",
    "NcirlError",
    "NumericalFailure",
    "PointSet",
    "StaleAgentState",
    "StateValueTable",
    "ZeroProbabilityObservation",
    "check_game",
    "compile_game",
    "complete_info_attacker",
    "expected_total_reward",
    "mairl_defender",
    "make_game",
    "matrix_game_value",
    "patrolling_game",
    "random_attack_graph",
    "rollout",
    "run_benchmark",
    "select_initial_zeta",
    "shapley_solve",
    "solve_lp",
    "solve_matrix_game",
    "to_lp_format",
    "unnormalized_posterior_weight",
    "update_belief",
    "validate_game",
]
