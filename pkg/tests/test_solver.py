"""Solver orchestration: initialization, rounds, queries, checkpointing."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from ncirl import (
    NCPBVISolver,
    PointSet,
    matrix_game_value,
    patrolling_game,
    select_initial_zeta,
    shapley_solve,
)
from ncirl.solver import simplex_grid

from conftest import build_random_game

UNIFORM2 = np.array([0.5, 0.5])


def test_simplex_grid_enumeration():
    grid = simplex_grid(2, 4)
    assert grid.shape == (5, 2)
    np.testing.assert_allclose(grid.sum(axis=1), 1.0)
    grid3 = simplex_grid(3, 2)
    assert grid3.shape == (6, 3)
    assert len({tuple(row) for row in grid3}) == 6


def test_sklearn_estimator_contract():
    solver = NCPBVISolver(n_rounds=3, dedup_tol=1e-4)
    params = solver.get_params()
    assert params["n_rounds"] == 3
    assert params["dedup_tol"] == 1e-4
    cloned = clone(solver)
    assert cloned.get_params() == params
    solver.set_params(n_sweeps=7)
    assert solver.n_sweeps == 7


def test_queries_require_fit():
    solver = NCPBVISolver()
    with pytest.raises(NotFittedError):
        solver.primal_value(0, UNIFORM2)
    with pytest.raises(NotFittedError):
        solver.defender_agent()


def test_rejects_nonpositive_budgets():
    game = patrolling_game()
    with pytest.raises(ValueError):
        NCPBVISolver(n_rounds=0).fit(game)
    with pytest.raises(ValueError):
        NCPBVISolver(n_sweeps=0).fit(game)


def _fit_patrolling(**kwargs):
    defaults = dict(n_rounds=1, n_sweeps=3)
    defaults.update(kwargs)
    return NCPBVISolver(**defaults).fit(patrolling_game())


def test_patrolling_attacker_values_by_stage():
    solver = _fit_patrolling()
    for s in range(4):
        assert solver.primal_value(s, np.eye(2)[0], stage=1) == pytest.approx(
            1.0 / 3.0, abs=1e-6
        )
        assert solver.primal_value(s, UNIFORM2, stage=1) == pytest.approx(
            0.5, abs=1e-6
        )
        assert solver.primal_value(s, np.eye(2)[0], stage=0) == pytest.approx(
            2.0 / 3.0, abs=1e-6
        )
        assert solver.primal_value(s, UNIFORM2, stage=0) == pytest.approx(
            7.0 / 8.0, abs=1e-6
        )


def test_patrolling_defender_corners_are_stage_worst_case():
    # the defender recursion spends no penalty on these rewards, so its
    # corner values settle at the one-stage worst case against the loaded
    # intent regardless of stage
    solver = _fit_patrolling()
    for t in range(2):
        for s in range(4):
            np.testing.assert_allclose(
                solver.dual_stages_[t][s].corner_values,
                [4.0 / 3.0, 4.0 / 3.0],
                atol=1e-6,
            )


def test_patrolling_initial_zeta_is_zero():
    solver = _fit_patrolling()
    for s in range(4):
        np.testing.assert_allclose(solver.initial_zeta(s), np.zeros(2))


def test_select_initial_zeta_picks_cheap_stored_vector():
    ps = PointSet(corner_values=np.array([2.0, 2.0]))
    ps.add(np.array([0.7, 0.3]), 0.5)
    z = select_initial_zeta([ps], 0, np.array([1.0, 0.0]))
    np.testing.assert_allclose(z, [0.7, 0.3])
    z2 = select_initial_zeta([ps], 0, np.array([1.0, 0.0]))
    np.testing.assert_array_equal(z, z2)


def test_single_intent_corners_track_complete_info_values():
    game = build_random_game(nk=1, discount=0.85, seed=33, reward_lo=0.0)
    table = shapley_solve(game, tol=1e-10)
    solver = NCPBVISolver(n_rounds=1, n_sweeps=5, shapley_tol=1e-10).fit(game)
    for s in range(game.n_states):
        assert solver.primal_value(s, np.ones(1)) == pytest.approx(
            table.values[s], abs=1e-6
        )
        # the defender corner is myopic: one stage of worst case plus the
        # unit penalty, with the continuation contributing nothing
        stage = matrix_game_value(game.stage_rewards[s][:, :, 0])
        assert solver.dual_stages_[0][s].corner_values[0] == pytest.approx(
            1.0 + stage, abs=1e-6
        )


def test_corner_values_stay_on_complete_info_solution():
    game = build_random_game(nk=2, discount=0.7, seed=34, reward_lo=0.0)
    tables = [shapley_solve(game.restrict_to_intent(k), tol=1e-10)
              for k in range(2)]
    solver = NCPBVISolver(n_rounds=2, n_sweeps=10, shapley_tol=1e-10).fit(game)
    for s in range(game.n_states):
        for k in range(2):
            assert solver.primal_stages_[0][s].corner_values[k] == pytest.approx(
                tables[k].values[s], abs=5e-3
            )


def test_initial_belief_is_seeded_into_primal_sets():
    game = build_random_game(nk=3, discount=0.5, seed=35, reward_lo=0.0)
    solver = NCPBVISolver(n_rounds=1, n_sweeps=2).fit(game)
    b0 = game.intent_marginal
    for s in range(game.n_states):
        assert solver.primal_stages_[0][s].nearest_distance(b0) <= 1e-9


def test_diagnostics_structure():
    solver = NCPBVISolver(n_rounds=2, n_sweeps=2).fit(patrolling_game())
    diag = solver.diagnostics_
    for side in ("primal", "dual"):
        assert len(diag[side]["sweep_deltas"]) == 2
        assert len(diag[side]["insertions"]) == 2
        assert len(diag[side]["set_sizes"]) == 2
    assert diag["fit_seconds"] > 0.0


def test_sides_restriction_skips_other_parameterization():
    game = patrolling_game()
    solver = NCPBVISolver(n_rounds=1, n_sweeps=2, sides=("primal",)).fit(game)
    assert solver.diagnostics_["dual"]["sweep_deltas"] == []
    # dual corners keep their pessimistic initialization
    assert solver.dual_stages_[0][0].corner_values[0] == pytest.approx(
        1.0 + game.r_max * 2
    )


def _snapshot(stages):
    return [[ps.copy() for ps in stage] for stage in stages]


def test_restore_continues_where_fit_left_off():
    game = build_random_game(nk=2, discount=0.6, seed=36, reward_lo=0.0)
    full = NCPBVISolver(n_rounds=2, n_sweeps=3).fit(game)

    half = NCPBVISolver(n_rounds=1, n_sweeps=3).fit(game)
    resumed = NCPBVISolver(n_rounds=2, n_sweeps=3).restore(
        game,
        _snapshot(half.primal_stages_),
        _snapshot(half.dual_stages_),
        completed_rounds=1,
    ).fit(game)

    for t in range(len(full.primal_stages_)):
        for s in range(game.n_states):
            a, b = full.primal_stages_[t][s], resumed.primal_stages_[t][s]
            np.testing.assert_allclose(a.corner_values, b.corner_values,
                                       atol=1e-12)
            np.testing.assert_allclose(a.vectors, b.vectors, atol=1e-12)
            np.testing.assert_allclose(a.values, b.values, atol=1e-12)
            c, d = full.dual_stages_[t][s], resumed.dual_stages_[t][s]
            np.testing.assert_allclose(c.corner_values, d.corner_values,
                                       atol=1e-12)
    assert resumed._completed_rounds == 2


def test_restore_with_matching_rounds_is_noop_fit():
    game = patrolling_game()
    fitted = NCPBVISolver(n_rounds=1, n_sweeps=2).fit(game)
    before = _snapshot(fitted.primal_stages_)
    again = NCPBVISolver(n_rounds=1, n_sweeps=2).restore(
        game,
        fitted.primal_stages_,
        fitted.dual_stages_,
        completed_rounds=1,
    ).fit(game)
    for t, stage in enumerate(before):
        for s, ps in enumerate(stage):
            np.testing.assert_array_equal(
                ps.corner_values, again.primal_stages_[t][s].corner_values
            )
