"""Attacker-side point-based backup: stage LP, sweep, and expansion.

The informed player's value is concave in the intent belief. Each state
stores corner values plus belief points (:class:`~ncirl.points.PointSet`);
:func:`sawtooth` interpolates them along rays through stored points, which
is a sound lower interpolation for a concave function and is positively
homogeneous of degree one, so the stage LP can apply it directly to
unnormalized posterior masses.

The stage LP maximizes a guarantee ``V`` over joint action weights
``A[k, a]`` (intent-conditional strategy scaled by the belief), subject to:
one guarantee row per defender action combining expected stage reward with
discounted successor values; mass-balance equalities defining unnormalized
successor posteriors; interpolation rows tying each successor value
variable to the continuation point set; and per-intent weight totals equal
to the belief. The corner-only interpolation row is emitted only when a
successor set has no positive-excess stored point, otherwise it would
dominate every stored-point row and the stored points would never bind.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InfeasibleBackup, LpInfeasible
from .game import GameSpec
from .lp import LpProblem, solve_lp
from .points import PointSet

REFINE_SLACK = 1e-7


def sawtooth(points: PointSet, weights: np.ndarray) -> float:
    """Interpolated value at a nonnegative (not necessarily normalized)
    weight vector: the minimum over stored points with positive excess of
    the ray interpolation, falling back to the corner combination when no
    stored point has positive excess."""
    w = np.asarray(weights, dtype=np.float64)
    c = points.corner_values
    base = float(c @ w)
    best = None
    for q, v in zip(points.vectors, points.values):
        excess = v - float(c @ q)
        if excess <= 0.0:
            continue
        support = q > 0.0
        if not support.any():
            continue
        cand = base + float(np.min(w[support] / q[support])) * excess
        if best is None or cand < best:
            best = cand
    return base if best is None else best


def _interp_rows(lp: LpProblem, cont: PointSet, value_var: int,
                 vec_vars: np.ndarray) -> None:
    c = cont.corner_values
    emitted = False
    for q, v in zip(cont.vectors, cont.values):
        excess = v - float(c @ q)
        if excess <= 0.0:
            continue
        support = np.flatnonzero(q > 0.0)
        if support.size == 0:
            continue
        emitted = True
        for k in support:
            coef = -c.copy()
            coef[k] -= excess / q[k]
            lp.add_row(
                np.append(value_var, vec_vars), np.append(1.0, coef), "<=", 0.0
            )
    if not emitted:
        lp.add_row(np.append(value_var, vec_vars), np.append(1.0, -c), "<=", 0.0)


@dataclass
class _Layout:
    A: np.ndarray
    V: int
    V_ds: np.ndarray
    b_ds: np.ndarray
    succ: np.ndarray


def build_backup(
    game: GameSpec, continuation: list[PointSet], s: int, belief: np.ndarray
) -> tuple[LpProblem, _Layout]:
    """Assemble the attacker stage LP at ``(s, belief)``."""
    nk = game.n_intents
    na = game.n_attacker_actions(s)
    nd = game.n_defender_actions(s)
    succ = game.successor_sets[s]
    nsucc = len(succ)
    gamma = game.discount
    P = game.stage_rewards[s]
    T = game.transitions[s]

    lp = LpProblem(f"attacker-backup[{game.states[s]}]")
    A = lp.add_variables(nk * na, prefix="A", nonneg=True).reshape(nk, na)
    V = lp.add_variable("V")
    V_ds = lp.add_variables(nd * nsucc, prefix="Vc").reshape(nd, nsucc)
    b_ds = lp.add_variables(nd * nsucc * nk, prefix="bc", nonneg=True).reshape(
        nd, nsucc, nk
    )

    for d in range(nd):
        idx = np.concatenate(([V], A.ravel(), V_ds[d]))
        coef = np.concatenate(
            ([1.0], -P[:, d, :].T.ravel(), np.full(nsucc, -gamma))
        )
        lp.add_row(idx, coef, "<=", 0.0)
    for d in range(nd):
        for j, s1 in enumerate(succ):
            for k in range(nk):
                lp.add_row(
                    np.append(b_ds[d, j, k], A[k]),
                    np.append(1.0, -T[:, d, s1]),
                    "==",
                    0.0,
                )
            _interp_rows(lp, continuation[s1], V_ds[d, j], b_ds[d, j])
    for k in range(nk):
        lp.add_row(A[k], np.ones(na), "==", float(belief[k]))
    lp.set_objective("max", [V], [1.0])
    return lp, _Layout(A=A, V=V, V_ds=V_ds, b_ds=b_ds, succ=succ)


@dataclass(frozen=True)
class BackupResult:
    value: float
    strategy: np.ndarray
    joint: np.ndarray
    successor_values: np.ndarray
    posterior_masses: np.ndarray
    successors: np.ndarray


def solve_backup(
    game: GameSpec,
    continuation: list[PointSet],
    s: int,
    belief: np.ndarray,
    refine: bool = False,
    tol: float = 1e-9,
    backend: str | None = None,
) -> BackupResult:
    """Solve the stage LP; optionally re-optimize the strategy against a
    uniform defender over the optimal face (canonical equilibrium pick)."""
    belief = np.asarray(belief, dtype=np.float64)
    lp, L = build_backup(game, continuation, s, belief)
    try:
        sol = solve_lp(lp, tol=tol, backend=backend)
    except LpInfeasible as e:
        raise InfeasibleBackup(str(e)) from e
    value = sol.value
    x = sol.x
    if refine:
        nd = game.n_defender_actions(s)
        nsucc = len(L.succ)
        P = game.stage_rewards[s]
        lp.add_row([L.V], [1.0], ">=",
                   value - REFINE_SLACK * max(1.0, abs(value)))
        idx = [np.tile(L.A.ravel(), nd), L.V_ds.ravel()]
        coef = [
            np.concatenate([P[:, d, :].T.ravel() for d in range(nd)]) / nd,
            np.full(nd * nsucc, game.discount / nd),
        ]
        lp.set_objective("max", np.concatenate(idx), np.concatenate(coef))
        try:
            x = solve_lp(lp, tol=tol, backend=backend).x
        except LpInfeasible as e:
            raise InfeasibleBackup(str(e)) from e
    joint = x[L.A]
    nk, na = joint.shape
    strategy = np.empty_like(joint)
    for k in range(nk):
        row = np.clip(joint[k], 0.0, None)
        total = row.sum()
        strategy[k] = row / total if total > 0 else np.full(na, 1.0 / na)
    return BackupResult(
        value=value,
        strategy=strategy,
        joint=joint,
        successor_values=x[L.V_ds],
        posterior_masses=x[L.b_ds],
        successors=L.succ,
    )


def update(
    game: GameSpec,
    sets: list[PointSet],
    continuation: list[PointSet],
    tol: float = 1e-9,
    backend: str | None = None,
) -> float:
    """One sweep: re-solve every stored pair's value in place. With
    ``continuation is sets`` this is the self-referential (unbounded
    horizon) sweep; a stage solver passes the next stage's sets instead.
    Returns the largest absolute value change."""
    max_delta = 0.0
    for s in range(game.n_states):
        ps = sets[s]
        eye = np.eye(ps.dim)
        for k in range(ps.dim):
            res = solve_backup(game, continuation, s, eye[k], tol=tol,
                               backend=backend)
            max_delta = max(max_delta, abs(res.value - ps.corner_values[k]))
            ps.corner_values[k] = res.value
        for i in range(ps.n_points):
            res = solve_backup(game, continuation, s, ps.vectors[i], tol=tol,
                               backend=backend)
            max_delta = max(max_delta, abs(res.value - ps.values[i]))
            ps.values[i] = res.value
    return max_delta


def expand(
    game: GameSpec,
    sets: list[PointSet],
    continuation: list[PointSet],
    insert_at: str = "origin",
    metric: str = "origin",
    dedup_tol: float = 1e-3,
    tol: float = 1e-9,
    backend: str | None = None,
) -> int:
    """Grow the belief sets from the reachable posteriors.

    For every stored belief, solve the stage LP and form the posterior for
    each attacker action with positive mass; the candidate scoring the
    largest L1 distance (to the originating belief, or to the nearest
    stored point with ``metric="nearest"``) is inserted. ``insert_at``
    selects the originating state's set (self-referential mode) or every
    reachable successor's continuation set (stage-indexed mode). Returns
    the number of insertions."""
    inserted = 0
    for s in range(game.n_states):
        T = game.transitions[s]
        for i in range(sets[s].n_points):
            b = sets[s].vectors[i]
            res = solve_backup(game, continuation, s, b, refine=True, tol=tol,
                               backend=backend)
            best = None
            for a in range(game.n_attacker_actions(s)):
                mass = res.joint[:, a].sum()
                if mass <= 1e-12:
                    continue
                post = res.joint[:, a] / mass
                if metric == "nearest":
                    if insert_at == "origin":
                        score = sets[s].nearest_distance(post)
                    else:
                        reach = np.flatnonzero(T[a].sum(axis=0) > 0.0)
                        score = max(
                            continuation[s1].nearest_distance(post)
                            for s1 in reach
                        )
                else:
                    score = float(np.abs(post - b).sum())
                if best is None or score > best[0]:
                    best = (score, a, post)
            if best is None:
                continue
            _, a, post = best
            if insert_at == "origin":
                targets = [sets[s]]
            else:
                reach = np.flatnonzero(T[a].sum(axis=0) > 0.0)
                targets = [continuation[s1] for s1 in reach]
            for ps in targets:
                if ps.add(post, sawtooth(ps, post), dedup_tol=dedup_tol):
                    inserted += 1
    return inserted
