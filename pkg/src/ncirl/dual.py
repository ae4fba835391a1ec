"""Defender-side point-based backup on the penalty-vector parameterization.

The uninformed player tracks no belief. Its information state is a
nonnegative penalty vector with one entry per intent: the value of the
defender's problem at penalty ``z`` is the worst case over intents of the
attacker's payoff plus the entry ``z[k]``, so play against the penalty
dynamics secures the original game from the defender's side. The value is
convex and positively homogeneous in ``z``; :func:`sawtooth` interpolates
stored points from above (maximum over negative-excess stored points,
corner combination as fallback).

The stage LP minimizes a guarantee ``W`` over the defender mixture and the
successor penalty vectors ``lam[a, s1]``: one row per (attacker action,
intent) pair combines the current penalty entry, the mixed stage reward,
and the discounted successor terms; interpolation rows tie each successor
value variable to the continuation set from above. With no continuation
sets (stage-indexed terminal) the successor value is exactly the largest
penalty entry, expressed by one row per intent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InfeasibleBackup, LpInfeasible
from .game import GameSpec
from .lp import LpProblem, solve_lp
from .points import PointSet

REFINE_SLACK = 1e-7
REFINE_PENALTY_WEIGHT = 1e-6

TERMINAL_MAX = object()
"""Continuation sentinel: terminal value equals the largest penalty entry."""


def sawtooth(points: PointSet, zeta: np.ndarray) -> float:
    """Interpolated value at a nonnegative penalty vector: the maximum over
    stored points with negative excess of the ray interpolation, falling
    back to the corner combination when no stored point qualifies."""
    z = np.asarray(zeta, dtype=np.float64)
    c = points.corner_values
    base = float(c @ z)
    best = None
    for q, v in zip(points.vectors, points.values):
        excess = v - float(c @ q)
        if excess >= 0.0:
            continue
        support = q > 0.0
        if not support.any():
            continue
        cand = base + float(np.min(z[support] / q[support])) * excess
        if best is None or cand > best:
            best = cand
    return base if best is None else best


def _interp_rows(lp: LpProblem, cont, value_var: int, vec_vars: np.ndarray) -> None:
    if cont is TERMINAL_MAX:
        for k in range(len(vec_vars)):
            lp.add_row([value_var, vec_vars[k]], [1.0, -1.0], ">=", 0.0)
        return
    c = cont.corner_values
    emitted = False
    for q, v in zip(cont.vectors, cont.values):
        excess = v - float(c @ q)
        if excess >= 0.0:
            continue
        support = np.flatnonzero(q > 0.0)
        if support.size == 0:
            continue
        emitted = True
        for k in support:
            coef = -c.copy()
            coef[k] -= excess / q[k]
            lp.add_row(
                np.append(value_var, vec_vars), np.append(1.0, coef), ">=", 0.0
            )
    if not emitted:
        lp.add_row(np.append(value_var, vec_vars), np.append(1.0, -c), ">=", 0.0)


@dataclass
class _Layout:
    D: np.ndarray
    W: int
    W_as: np.ndarray
    lam: np.ndarray
    succ: np.ndarray


def build_backup(
    game: GameSpec, continuation, s: int, zeta: np.ndarray
) -> tuple[LpProblem, _Layout]:
    """Assemble the defender stage LP at ``(s, zeta)``. ``continuation`` is
    a per-state list of point sets or :data:`TERMINAL_MAX`."""
    nk = game.n_intents
    na = game.n_attacker_actions(s)
    nd = game.n_defender_actions(s)
    succ = game.successor_sets[s]
    nsucc = len(succ)
    gamma = game.discount
    P = game.stage_rewards[s]

    lp = LpProblem(f"defender-backup[{game.states[s]}]")
    D = lp.add_variables(nd, prefix="D", nonneg=True)
    W = lp.add_variable("W")
    W_as = lp.add_variables(na * nsucc, prefix="Wc").reshape(na, nsucc)
    lam = lp.add_variables(na * nsucc * nk, prefix="lam", nonneg=True).reshape(
        na, nsucc, nk
    )

    for a in range(na):
        for k in range(nk):
            idx = np.concatenate(([W], D, W_as[a], lam[a, :, k]))
            coef = np.concatenate(
                (
                    [1.0],
                    -P[a, :, k],
                    np.full(nsucc, -gamma),
                    np.full(nsucc, gamma),
                )
            )
            lp.add_row(idx, coef, ">=", float(zeta[k]))
    for a in range(na):
        for j, s1 in enumerate(succ):
            cont = continuation if continuation is TERMINAL_MAX else continuation[s1]
            _interp_rows(lp, cont, W_as[a, j], lam[a, j])
    lp.add_row(D, np.ones(nd), "==", 1.0)
    lp.set_objective("min", [W], [1.0])
    return lp, _Layout(D=D, W=W, W_as=W_as, lam=lam, succ=succ)


@dataclass(frozen=True)
class BackupResult:
    value: float
    strategy: np.ndarray
    successor_values: np.ndarray
    penalties: np.ndarray
    successors: np.ndarray


def solve_backup(
    game: GameSpec,
    continuation,
    s: int,
    zeta: np.ndarray,
    refine: bool = False,
    tol: float = 1e-9,
    backend: str | None = None,
) -> BackupResult:
    """Solve the stage LP; optionally re-optimize over the optimal face for
    the mixture best against a uniform (action, intent) threat, with a tiny
    penalty-mass term that picks a canonical successor penalty split."""
    zeta = np.asarray(zeta, dtype=np.float64)
    lp, L = build_backup(game, continuation, s, zeta)
    try:
        sol = solve_lp(lp, tol=tol, backend=backend)
    except LpInfeasible as e:
        raise InfeasibleBackup(str(e)) from e
    value = sol.value
    x = sol.x
    if refine:
        P = game.stage_rewards[s]
        lp.add_row([L.W], [1.0], "<=",
                   value + REFINE_SLACK * max(1.0, abs(value)))
        idx = np.concatenate((L.D, L.lam.ravel()))
        coef = np.concatenate(
            (
                P.mean(axis=(0, 2)),
                np.full(L.lam.size, REFINE_PENALTY_WEIGHT),
            )
        )
        lp.set_objective("min", idx, coef)
        try:
            x = solve_lp(lp, tol=tol, backend=backend).x
        except LpInfeasible as e:
            raise InfeasibleBackup(str(e)) from e
    mix = np.clip(x[L.D], 0.0, None)
    total = mix.sum()
    mix = mix / total if total > 0 else np.full(len(mix), 1.0 / len(mix))
    return BackupResult(
        value=value,
        strategy=mix,
        successor_values=x[L.W_as],
        penalties=np.clip(x[L.lam], 0.0, None),
        successors=L.succ,
    )


def update(
    game: GameSpec,
    sets: list[PointSet],
    continuation,
    tol: float = 1e-9,
    backend: str | None = None,
) -> float:
    """One sweep re-solving every stored pair's value in place; returns the
    largest absolute change."""
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
    continuation,
    cap_per_origin: int = 8,
    dedup_tol: float = 1e-3,
    tol: float = 1e-9,
    backend: str | None = None,
) -> int:
    """Grow the penalty sets from the optimal successor penalty splits.

    Every stored vector (corners included; unlike posteriors, penalty
    splits from corner solves are informative) produces one candidate per
    (attacker action, successor); candidates land in the successor state's
    continuation set, largest L1 novelty first, at most ``cap_per_origin``
    insertions per origin. With a terminal continuation there is nothing to
    grow. Returns the number of insertions."""
    if continuation is TERMINAL_MAX:
        return 0
    inserted = 0
    for s in range(game.n_states):
        ps = sets[s]
        origins = list(np.eye(ps.dim)) + list(ps.vectors)
        for origin in origins:
            res = solve_backup(game, continuation, s, origin, refine=True,
                               tol=tol, backend=backend)
            cands = []
            for a in range(game.n_attacker_actions(s)):
                for j, s1 in enumerate(res.successors):
                    vec = res.penalties[a, j]
                    novelty = continuation[s1].nearest_distance(vec)
                    cands.append((-novelty, a, j, s1, vec))
            cands.sort(key=lambda t: (t[0], t[1], t[2]))
            used = 0
            for _, a, j, s1, vec in cands:
                if used >= cap_per_origin:
                    break
                target = continuation[s1]
                if target.add(vec, sawtooth(target, vec), dedup_tol=dedup_tol):
                    inserted += 1
                    used += 1
    return inserted
