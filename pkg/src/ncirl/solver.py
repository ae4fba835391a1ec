"""Point-based value iteration over both information parameterizations.

The solver grows and sweeps attacker-side belief sets and defender-side
penalty sets independently (the two parameterizations bound the same game
from the informed and uninformed player's perspective respectively). Each
round runs up to ``n_sweeps`` value sweeps followed by one expansion of
the stored point sets from reachable information states.

Unbounded-horizon games keep one set per state and sweep it against
itself; finite-horizon games keep one set per (stage, state) and sweep
backward, with a zero terminal value on the attacker side and the exact
largest-penalty-entry terminal on the defender side.

Attacker corner values are initialized exactly from the per-intent
complete-information game values; defender corners start at a pessimistic
constant and are refined by the sweeps.
"""

from __future__ import annotations

import time
from itertools import combinations

import numpy as np
from sklearn.base import BaseEstimator

from . import dual, primal
from .dual import TERMINAL_MAX
from .game import GameSpec, check_game
from .lp import lp_solve_count
from .matrix_game import shapley_solve
from .points import PointSet

GRID_SCALES = (0.0, 0.25, 0.5, 1.0, 2.0)


def simplex_grid(dim: int, resolution: int) -> np.ndarray:
    """All nonnegative rational points with denominator ``resolution`` on
    the unit simplex (stars and bars enumeration, lexicographic order)."""
    pts = []
    for bars in combinations(range(resolution + dim - 1), dim - 1):
        prev, counts = -1, []
        for b in bars:
            counts.append(b - prev - 1)
            prev = b
        counts.append(resolution + dim - 2 - prev)
        pts.append(counts)
    return np.asarray(pts, dtype=np.float64) / resolution


def select_initial_zeta(
    sets0: list[PointSet],
    s0: int,
    belief: np.ndarray,
    resolution: int | None = None,
) -> np.ndarray:
    """Initial defender penalty vector at the start state.

    Minimizes the conjugate gap (interpolated defender value minus the
    belief-weighted penalty) over a candidate pool: every stored vector at
    the start state plus scaled simplex grids over the corner directions.
    Ties break lexicographically on the vector entries so that identical
    inputs select identical vectors.
    """
    ps = sets0[s0]
    dim = ps.dim
    if resolution is None:
        resolution = 8 if dim <= 3 else (4 if dim <= 6 else 2)
    scale = max(1.0, float(np.max(np.abs(ps.corner_values))))
    pool = [np.zeros(dim)]
    pool.extend(np.eye(dim) * scale)
    pool.extend(ps.vectors)
    grid = simplex_grid(dim, resolution)
    for mult in GRID_SCALES:
        if mult > 0.0:
            pool.extend(grid * (mult * scale))
    best = None
    for z in pool:
        score = dual.sawtooth(ps, z) - float(np.dot(belief, z))
        key = (round(score, 9), tuple(np.round(z, 12)))
        if best is None or key < best[0]:
            best = (key, z)
    return np.array(best[1])


class NCPBVISolver(BaseEstimator):
    """Two-sided point-based solver for intent-uncertain zero-sum games.

    Parameters mirror the algorithm's knobs: ``n_rounds`` expansion rounds
    of at most ``n_sweeps`` value sweeps each; ``dedup_tol``/``interior_cap``
    bound the stored sets; ``expand_cap`` caps defender-side insertions per
    origin; ``expand_metric`` scores attacker-side candidates by distance
    to the originating belief (``"origin"``) or to the nearest stored point
    (``"nearest"``).
    """

    def __init__(
        self,
        n_rounds: int = 10,
        n_sweeps: int = 20,
        sweep_tol: float = 1e-9,
        lp_tol: float = 1e-9,
        lp_backend: str | None = None,
        dedup_tol: float = 1e-3,
        interior_cap: int = 200,
        expand_cap: int = 8,
        expand_metric: str = "origin",
        shapley_tol: float = 1e-9,
        sides: tuple = ("primal", "dual"),
    ):
        self.n_rounds = n_rounds
        self.n_sweeps = n_sweeps
        self.sweep_tol = sweep_tol
        self.lp_tol = lp_tol
        self.lp_backend = lp_backend
        self.dedup_tol = dedup_tol
        self.interior_cap = interior_cap
        self.expand_cap = expand_cap
        self.expand_metric = expand_metric
        self.shapley_tol = shapley_tol
        self.sides = sides

    # -- fitting -------------------------------------------------------------

    def fit(self, game: GameSpec, initial_belief: np.ndarray | None = None):
        check_game(game)
        if self.n_rounds < 1 or self.n_sweeps < 1:
            raise ValueError("n_rounds and n_sweeps must be at least 1")
        started = time.perf_counter()
        if not getattr(self, "_restored", False):
            self._initialize(game, initial_belief)
        self._restored = False
        start = self._completed_rounds
        for rnd in range(start, self.n_rounds):
            if "primal" in self.sides:
                self._primal_round()
            if "dual" in self.sides:
                self._dual_round()
            self._completed_rounds = rnd + 1
        self.diagnostics_["fit_seconds"] += time.perf_counter() - started
        return self

    def _initialize(self, game: GameSpec, initial_belief):
        self.game_ = game
        nk = game.n_intents
        ns = game.n_states
        if initial_belief is None:
            initial_belief = game.intent_marginal
        self.initial_belief_ = np.asarray(initial_belief, dtype=np.float64)
        self.horizon_ = game.horizon
        n_stages = 1 if game.horizon is None else game.horizon
        self.shapley_tables_ = [
            shapley_solve(
                game.restrict_to_intent(k),
                tol=self.shapley_tol,
                refine=False,
                backend=self.lp_backend,
            )
            for k in range(nk)
        ]

        def corner_vec(stage, s):
            if game.horizon is None:
                return np.array(
                    [self.shapley_tables_[k].values[s] for k in range(nk)]
                )
            return np.array(
                [self.shapley_tables_[k].values[stage][s] for k in range(nk)]
            )

        self.primal_stages_ = []
        self.dual_stages_ = []
        if game.horizon is None:
            dual_corner = 1.0 + game.r_max / (1.0 - game.discount)
        for t in range(n_stages):
            prim = []
            for s in range(ns):
                ps = PointSet(corner_values=corner_vec(t, s))
                b0 = self.initial_belief_
                ps.add(b0, primal.sawtooth(ps, b0), dedup_tol=self.dedup_tol)
                prim.append(ps)
            self.primal_stages_.append(prim)
            if game.horizon is not None:
                dual_corner = 1.0 + game.r_max * (game.horizon - t)
            self.dual_stages_.append(
                [PointSet.constant(nk, dual_corner) for _ in range(ns)]
            )
        self._terminal_primal = [PointSet.zeros(nk) for _ in range(ns)]
        self._completed_rounds = 0
        self.diagnostics_ = {
            side: {"sweep_deltas": [], "insertions": [], "set_sizes": []}
            for side in ("primal", "dual")
        }
        self.diagnostics_["fit_seconds"] = 0.0
        self.diagnostics_["lp_solves_start"] = lp_solve_count()

    # -- continuations -------------------------------------------------------

    def primal_continuation(self, stage: int) -> list[PointSet]:
        if self.horizon_ is None:
            return self.primal_stages_[0]
        if stage + 1 < self.horizon_:
            return self.primal_stages_[stage + 1]
        return self._terminal_primal

    def dual_continuation(self, stage: int):
        if self.horizon_ is None:
            return self.dual_stages_[0]
        if stage + 1 < self.horizon_:
            return self.dual_stages_[stage + 1]
        return TERMINAL_MAX

    # -- rounds --------------------------------------------------------------

    def _stages_backward(self):
        return range(len(self.primal_stages_) - 1, -1, -1)

    def _primal_round(self):
        diag = self.diagnostics_["primal"]
        deltas = []
        for _ in range(self.n_sweeps):
            delta = 0.0
            for t in self._stages_backward():
                delta = max(
                    delta,
                    primal.update(
                        self.game_,
                        self.primal_stages_[t],
                        self.primal_continuation(t),
                        tol=self.lp_tol,
                        backend=self.lp_backend,
                    ),
                )
            deltas.append(delta)
            if delta <= self.sweep_tol:
                break
        inserted = 0
        for t in self._stages_backward():
            if self.horizon_ is not None and t + 1 >= self.horizon_:
                continue
            inserted += primal.expand(
                self.game_,
                self.primal_stages_[t],
                self.primal_continuation(t),
                insert_at="origin" if self.horizon_ is None else "successor",
                metric=self.expand_metric,
                dedup_tol=self.dedup_tol,
                tol=self.lp_tol,
                backend=self.lp_backend,
            )
        for stage in self.primal_stages_:
            for ps in stage:
                ps.enforce_cap(self.interior_cap)
        diag["sweep_deltas"].append(deltas)
        diag["insertions"].append(inserted)
        diag["set_sizes"].append(self._sizes(self.primal_stages_))

    def _dual_round(self):
        diag = self.diagnostics_["dual"]
        deltas = []
        for _ in range(self.n_sweeps):
            delta = 0.0
            for t in self._stages_backward():
                delta = max(
                    delta,
                    dual.update(
                        self.game_,
                        self.dual_stages_[t],
                        self.dual_continuation(t),
                        tol=self.lp_tol,
                        backend=self.lp_backend,
                    ),
                )
            deltas.append(delta)
            if delta <= self.sweep_tol:
                break
        inserted = 0
        for t in self._stages_backward():
            if self.horizon_ is not None and t + 1 >= self.horizon_:
                continue
            inserted += dual.expand(
                self.game_,
                self.dual_stages_[t],
                self.dual_continuation(t),
                cap_per_origin=self.expand_cap,
                dedup_tol=self.dedup_tol,
                tol=self.lp_tol,
                backend=self.lp_backend,
            )
        for stage in self.dual_stages_:
            for ps in stage:
                ps.enforce_cap(self.interior_cap)
        diag["sweep_deltas"].append(deltas)
        diag["insertions"].append(inserted)
        diag["set_sizes"].append(self._sizes(self.dual_stages_))

    @staticmethod
    def _sizes(stages):
        return [sum(ps.n_points for ps in stage) for stage in stages]

    # -- fitted queries ------------------------------------------------------

    def _require_fitted(self):
        if not hasattr(self, "primal_stages_"):
            from sklearn.exceptions import NotFittedError

            raise NotFittedError("solver is not fitted; call fit(game) first")

    def primal_value(self, s: int, belief: np.ndarray, stage: int = 0) -> float:
        self._require_fitted()
        t = 0 if self.horizon_ is None else min(stage, self.horizon_ - 1)
        return primal.sawtooth(self.primal_stages_[t][s], belief)

    def dual_value(self, s: int, zeta: np.ndarray, stage: int = 0) -> float:
        self._require_fitted()
        t = 0 if self.horizon_ is None else min(stage, self.horizon_ - 1)
        return dual.sawtooth(self.dual_stages_[t][s], zeta)

    def initial_zeta(self, s0: int, belief: np.ndarray | None = None) -> np.ndarray:
        self._require_fitted()
        if belief is None:
            belief = self.game_.initial_belief(s0)
        return select_initial_zeta(self.dual_stages_[0], s0, belief)

    def attacker_agent(self, intent: int):
        self._require_fitted()
        from .agents import AttackerAgent

        return AttackerAgent(self, intent)

    def defender_agent(self):
        self._require_fitted()
        from .agents import DefenderAgent

        return DefenderAgent(self)

    # -- checkpointing -------------------------------------------------------

    def restore(
        self,
        game: GameSpec,
        primal_stages,
        dual_stages,
        completed_rounds: int,
        initial_belief=None,
        diagnostics=None,
    ):
        """Adopt previously fitted sets so that :meth:`fit` continues from
        ``completed_rounds`` instead of starting over."""
        self._initialize(game, initial_belief)
        self.primal_stages_ = primal_stages
        self.dual_stages_ = dual_stages
        self._completed_rounds = int(completed_rounds)
        if diagnostics is not None:
            self.diagnostics_ = diagnostics
        self._restored = True
        return self
