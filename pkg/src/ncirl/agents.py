"""Online play protocols for solved policies.

All agents follow the same episode protocol: ``reset`` to an initial
state, then alternate querying the stage action (``action_distribution``
or sampling via ``act``) with feeding back the stage outcome through
``observe``. Querying computes and caches the stage solution; ``observe``
consumes it. Observing twice, or before any query, raises
:class:`~ncirl.exceptions.StaleAgentState`, as does playing past a finite
horizon.

The two solver-backed agents keep the information partition honest by
construction: the attacker holds its intent and a belief; the defender
holds only a penalty vector and never sees the intent, the belief, or the
attacker's strategy object.
"""

from __future__ import annotations

import numpy as np

from . import dual, primal
from .belief import update_belief
from .exceptions import StaleAgentState, ZeroProbabilityObservation


class _EpisodeProtocol:
    """Shared stage bookkeeping: phase tracking, sampling, horizon guard."""

    def __init__(self, horizon: int | None):
        self._horizon = horizon
        self.state: int | None = None
        self.stage = 0
        self._cache = None

    def _reset_protocol(self, state: int):
        self.state = int(state)
        self.stage = 0
        self._cache = None

    def _ensure_stage(self):
        if self.state is None:
            raise StaleAgentState("agent was never reset")
        if self._horizon is not None and self.stage >= self._horizon:
            raise StaleAgentState("episode horizon exhausted")
        if self._cache is None:
            self._cache = self._solve_stage()
        return self._cache

    def _consume(self):
        if self._cache is None:
            raise StaleAgentState(
                "observe called with no pending stage solution"
            )
        cache, self._cache = self._cache, None
        self.stage += 1
        return cache

    def act(self, rng: np.random.Generator) -> int:
        dist = self.action_distribution()
        return int(rng.choice(len(dist), p=dist))

    def action_distribution(self) -> np.ndarray:  # pragma: no cover
        raise NotImplementedError


class AttackerAgent(_EpisodeProtocol):
    """Informed maximizer: plays the intent slice of the stage LP strategy
    and keeps the public belief in sync with its own observed action."""

    def __init__(self, solver, intent: int):
        super().__init__(solver.horizon_)
        self._solver = solver
        self.intent = int(intent)
        self.belief: np.ndarray | None = None

    def reset(self, state: int):
        self._reset_protocol(state)
        self.belief = self._solver.game_.initial_belief(state)
        return self

    def _solve_stage(self):
        return primal.solve_backup(
            self._solver.game_,
            self._solver.primal_continuation(self.stage),
            self.state,
            self.belief,
            refine=True,
            tol=self._solver.lp_tol,
            backend=self._solver.lp_backend,
        )

    def action_distribution(self) -> np.ndarray:
        return self._ensure_stage().strategy[self.intent]

    def observe(self, attacker_action: int, defender_action: int, successor: int):
        res = self._consume()
        self.belief = update_belief(res.strategy, self.belief, attacker_action)
        self.state = int(successor)

    def clone(self) -> "AttackerAgent":
        other = AttackerAgent(self._solver, self.intent)
        other.state = self.state
        other.stage = self.stage
        other._cache = self._cache
        other.belief = None if self.belief is None else self.belief.copy()
        return other


class DefenderAgent(_EpisodeProtocol):
    """Uninformed minimizer: plays the dual stage LP mixture and rolls its
    penalty vector forward along the observed (action, successor) branch."""

    def __init__(self, solver):
        super().__init__(solver.horizon_)
        self._solver = solver
        self.zeta: np.ndarray | None = None

    def reset(self, state: int, zeta: np.ndarray | None = None):
        self._reset_protocol(state)
        if zeta is None:
            zeta = self._solver.initial_zeta(state)
        self.zeta = np.asarray(zeta, dtype=np.float64)
        return self

    def _solve_stage(self):
        return dual.solve_backup(
            self._solver.game_,
            self._solver.dual_continuation(self.stage),
            self.state,
            self.zeta,
            refine=True,
            tol=self._solver.lp_tol,
            backend=self._solver.lp_backend,
        )

    def action_distribution(self) -> np.ndarray:
        return self._ensure_stage().strategy

    def observe(self, attacker_action: int, successor: int):
        res = self._consume()
        where = np.flatnonzero(res.successors == int(successor))
        if where.size == 0:
            raise ZeroProbabilityObservation(
                f"successor {successor} is unreachable from state {self.state}"
            )
        self.zeta = res.penalties[int(attacker_action), int(where[0])].copy()
        self.state = int(successor)

    def clone(self) -> "DefenderAgent":
        other = DefenderAgent(self._solver)
        other.state = self.state
        other.stage = self.stage
        other._cache = self._cache
        other.zeta = None if self.zeta is None else self.zeta.copy()
        return other


class TableAgent(_EpisodeProtocol):
    """Plays fixed per-state strategies from a complete-information solve
    (stage-indexed when the table came from a finite-horizon solve)."""

    def __init__(self, strategies, role: str, horizon: int | None,
                 stage_indexed: bool):
        super().__init__(horizon)
        if role not in ("attacker", "defender"):
            raise ValueError(f"unknown role {role!r}")
        self.role = role
        self._strategies = strategies
        self._stage_indexed = stage_indexed

    def reset(self, state: int):
        self._reset_protocol(state)
        return self

    def _solve_stage(self):
        if self._stage_indexed:
            return np.asarray(self._strategies[self.stage][self.state])
        return np.asarray(self._strategies[self.state])

    def action_distribution(self) -> np.ndarray:
        return self._ensure_stage()

    def observe(self, *transition):
        self._consume()
        self.state = int(transition[-1])

    def clone(self) -> "TableAgent":
        other = TableAgent(
            self._strategies, self.role, self._horizon, self._stage_indexed
        )
        other.state = self.state
        other.stage = self.stage
        other._cache = self._cache
        return other
