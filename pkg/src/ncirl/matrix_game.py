"""Zero-sum matrix games and complete-information stochastic game values.

The stage solver poses the minimax problem as a pair of linear programs.
Because optimal strategy sets are often degenerate polytopes, an optional
refinement pass re-optimizes a secondary objective (payoff against a
uniform opponent) over the optimal face; this pins a canonical equilibrium
deterministically, which matters when downstream golden values depend on
which optimum is played.

The stochastic-game solver iterates the one-stage value operator to a fixed
point (unbounded horizon) or by backward induction (finite horizon).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .game import GameSpec
from .lp import DEFAULT_TOL, LpProblem, solve_lp

REFINE_SLACK = 1e-9


@dataclass(frozen=True)
class MatrixGameSolution:
    value: float
    row_strategy: np.ndarray
    col_strategy: np.ndarray


def _row_lp(payoff: np.ndarray) -> LpProblem:
    n_rows, n_cols = payoff.shape
    lp = LpProblem("matrix-game-row")
    x = lp.add_variables(n_rows, prefix="x", nonneg=True)
    v = lp.add_variable("v")
    for j in range(n_cols):
        lp.add_row(
            np.append(x, v), np.append(-payoff[:, j], 1.0), "<=", 0.0
        )
    lp.add_row(x, np.ones(n_rows), "==", 1.0)
    lp.set_objective("max", [v], [1.0])
    return lp


def matrix_game_value(payoff: np.ndarray, tol: float = DEFAULT_TOL,
                      backend: str | None = None) -> float:
    """Minimax value only; cheaper than recovering both strategies."""
    payoff = np.asarray(payoff, dtype=np.float64)
    return solve_lp(_row_lp(payoff), tol=tol, backend=backend).value


def solve_matrix_game(
    payoff: np.ndarray,
    refine: bool = True,
    tol: float = DEFAULT_TOL,
    backend: str | None = None,
) -> MatrixGameSolution:
    """Equilibrium of the zero-sum game where the row player maximizes.

    With ``refine`` the returned strategies additionally maximize (resp.
    minimize) the payoff against a uniform opponent among all minimax
    strategies, which selects one equilibrium reproducibly even when the
    optimal face has positive dimension.
    """
    payoff = np.asarray(payoff, dtype=np.float64)
    n_rows, n_cols = payoff.shape
    scale = max(1.0, float(np.max(np.abs(payoff))))

    sol = solve_lp(_row_lp(payoff), tol=tol, backend=backend)
    value = sol.value
    row = sol.x[:n_rows]

    lp = LpProblem("matrix-game-col")
    y = lp.add_variables(n_cols, prefix="y", nonneg=True)
    u = lp.add_variable("u")
    for i in range(n_rows):
        lp.add_row(np.append(y, u), np.append(payoff[i, :], -1.0), "<=", 0.0)
    lp.add_row(y, np.ones(n_cols), "==", 1.0)
    lp.set_objective("min", [u], [1.0])
    col = solve_lp(lp, tol=tol, backend=backend).x[:n_cols]

    if refine:
        slack = REFINE_SLACK * scale
        lp = LpProblem("matrix-game-row-refine")
        x = lp.add_variables(n_rows, prefix="x", nonneg=True)
        for j in range(n_cols):
            lp.add_row(x, payoff[:, j], ">=", value - slack)
        lp.add_row(x, np.ones(n_rows), "==", 1.0)
        lp.set_objective("max", x, payoff.mean(axis=1))
        row = solve_lp(lp, tol=tol, backend=backend).x[:n_rows]

        lp = LpProblem("matrix-game-col-refine")
        y = lp.add_variables(n_cols, prefix="y", nonneg=True)
        for i in range(n_rows):
            lp.add_row(y, payoff[i, :], "<=", value + slack)
        lp.add_row(y, np.ones(n_cols), "==", 1.0)
        lp.set_objective("min", y, payoff.mean(axis=0))
        col = solve_lp(lp, tol=tol, backend=backend).x[:n_cols]

    row = _normalize(row)
    col = _normalize(col)
    return MatrixGameSolution(value=value, row_strategy=row, col_strategy=col)


def _normalize(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, None)
    total = x.sum()
    return x / total if total > 0 else np.full_like(x, 1.0 / len(x))


@dataclass(frozen=True)
class StateValueTable:
    """Values and stage strategies of a complete-information game.

    For unbounded horizon ``values`` has shape ``(n_states,)`` and the
    strategy lists hold one array per state. For horizon ``H`` the values
    have shape ``(H + 1, n_states)`` (row ``H`` is the terminal zero) and
    the strategy lists hold one per-state list for each stage.
    """

    values: np.ndarray
    attacker_strategies: list
    defender_strategies: list
    sweeps: int
    residual: float
    deltas: np.ndarray


def _stage_payoffs(game: GameSpec, cont: np.ndarray) -> list[np.ndarray]:
    out = []
    for s in range(game.n_states):
        m = game.stage_rewards[s][:, :, 0]
        if game.discount > 0.0:
            m = m + game.discount * (game.transitions[s] @ cont)
        out.append(m)
    return out


def shapley_solve(
    game: GameSpec,
    tol: float = 1e-9,
    max_sweeps: int = 100_000,
    refine: bool = True,
    backend: str | None = None,
) -> StateValueTable:
    """Solve a complete-information zero-sum stochastic game.

    ``game`` must carry a single intent (see
    :meth:`GameSpec.restrict_to_intent`). Values are first iterated without
    strategy recovery; strategies come from one final refined pass.
    """
    if game.n_intents != 1:
        raise ValueError("shapley_solve expects a single-intent game")
    lp_tol = min(DEFAULT_TOL, tol)
    if game.horizon is not None:
        H = game.horizon
        values = np.zeros((H + 1, game.n_states))
        att, dfd = [], []
        deltas = []
        for t in range(H - 1, -1, -1):
            payoffs = _stage_payoffs(game, values[t + 1])
            sols = [
                solve_matrix_game(m, refine=refine, tol=lp_tol, backend=backend)
                for m in payoffs
            ]
            values[t] = [s.value for s in sols]
            att.insert(0, [s.row_strategy for s in sols])
            dfd.insert(0, [s.col_strategy for s in sols])
            deltas.append(float(np.max(np.abs(values[t] - values[t + 1]))))
        return StateValueTable(
            values=values,
            attacker_strategies=att,
            defender_strategies=dfd,
            sweeps=H,
            residual=0.0,
            deltas=np.asarray(deltas),
        )

    v = np.zeros(game.n_states)
    deltas = []
    residual = np.inf
    for sweep in range(max_sweeps):
        payoffs = _stage_payoffs(game, v)
        v_new = np.array(
            [matrix_game_value(m, tol=lp_tol, backend=backend) for m in payoffs]
        )
        residual = float(np.max(np.abs(v_new - v)))
        deltas.append(residual)
        v = v_new
        if residual <= tol:
            break
    payoffs = _stage_payoffs(game, v)
    sols = [
        solve_matrix_game(m, refine=refine, tol=lp_tol, backend=backend)
        for m in payoffs
    ]
    return StateValueTable(
        values=v,
        attacker_strategies=[s.row_strategy for s in sols],
        defender_strategies=[s.col_strategy for s in sols],
        sweeps=len(deltas),
        residual=residual,
        deltas=np.asarray(deltas),
    )
