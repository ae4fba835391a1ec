"""Defender-side interpolation, penalty stage LP and expansion."""

import numpy as np
import pytest

from ncirl import GameSpec, PointSet, matrix_game_value, patrolling_game
from ncirl.dual import (
    TERMINAL_MAX,
    expand,
    sawtooth,
    solve_backup,
    update,
)

from conftest import build_random_game
from oracles import grid_defender_minimax, sawtooth_upper


def _traced_set():
    ps = PointSet(corner_values=np.array([2.0, 4.0]))
    ps.add(np.array([1.0, 1.0]), 5.0)
    return ps


def test_hand_traced_interpolation_at_stored_point():
    assert sawtooth(_traced_set(), np.array([1.0, 1.0])) == pytest.approx(
        5.0, abs=0
    )


def test_hand_traced_interpolation_off_support():
    assert sawtooth(_traced_set(), np.array([1.0, 0.0])) == pytest.approx(
        2.0, abs=0
    )


def test_empty_set_falls_back_to_corner_combination():
    ps = PointSet(corner_values=np.array([2.0, 4.0]))
    rng = np.random.default_rng(1)
    for _ in range(10):
        z = rng.uniform(0.0, 2.0, size=2)
        assert sawtooth(ps, z) == pytest.approx(float(ps.corner_values @ z))


def test_positive_homogeneity():
    rng = np.random.default_rng(15)
    ps = PointSet(corner_values=rng.uniform(1.0, 3.0, size=3))
    for _ in range(4):
        q = rng.uniform(0.1, 1.0, size=3)
        ps.add(q, float(ps.corner_values @ q) - rng.uniform(0.0, 0.5))
    for _ in range(50):
        z = rng.uniform(0.0, 1.0, size=3)
        t = rng.uniform(0.0, 3.0)
        assert sawtooth(ps, t * z) == pytest.approx(t * sawtooth(ps, z), abs=1e-9)


def test_matches_reference_transcription_on_random_inputs():
    rng = np.random.default_rng(78)
    for _ in range(100):
        dim = int(rng.integers(2, 5))
        ps = PointSet(corner_values=rng.uniform(0.5, 3.0, size=dim))
        pairs = []
        for _ in range(rng.integers(0, 5)):
            q = rng.uniform(0.05, 1.0, size=dim)
            v = float(ps.corner_values @ q) + rng.uniform(-1.0, 1.0)
            ps.vectors = np.vstack([ps.vectors, q[None, :]])
            ps.values = np.append(ps.values, v)
            pairs.append((q, v))
        z = rng.uniform(0.0, 1.5, size=dim)
        assert sawtooth(ps, z) == pytest.approx(
            sawtooth_upper(ps.corner_values, pairs, z), abs=1e-12
        )


def test_single_intent_zero_penalty_equals_matrix_value():
    game = build_random_game(nk=1, discount=0.0, seed=40)
    for s in range(game.n_states):
        res = solve_backup(game, TERMINAL_MAX, s, np.zeros(1))
        expected = matrix_game_value(game.stage_rewards[s][:, :, 0])
        assert res.value == pytest.approx(expected, abs=1e-8)


def test_zero_discount_matches_grid_search():
    game = build_random_game(ns=2, na=2, nd=2, nk=2, discount=0.0, seed=41)
    rng = np.random.default_rng(41)
    for _ in range(5):
        zeta = rng.uniform(0.0, 1.0, size=2)
        for s in range(game.n_states):
            res = solve_backup(game, TERMINAL_MAX, s, zeta)
            mats = [game.stage_rewards[s][:, :, k] for k in range(2)]
            grid = grid_defender_minimax(mats, zeta, resolution=400)
            # the gridded mixture can only be worse than the LP optimum
            assert grid >= res.value - 1e-9
            assert grid - res.value <= 5e-3


def test_zero_discount_uniform_shift_identity():
    game = build_random_game(ns=2, nk=3, discount=0.0, seed=42)
    rng = np.random.default_rng(42)
    for _ in range(5):
        zeta = rng.uniform(0.0, 1.0, size=3)
        shift = rng.uniform(0.0, 2.0)
        for s in range(game.n_states):
            v0 = solve_backup(game, TERMINAL_MAX, s, zeta).value
            v1 = solve_backup(game, TERMINAL_MAX, s, zeta + shift).value
            assert v1 == pytest.approx(v0 + shift, abs=1e-6)


def test_terminal_value_of_zero_reward_game_is_max_entry():
    ns, na, nd, nk = 2, 2, 2, 3
    t = np.zeros((na, nd, ns))
    t[:, :, 1] = 1.0
    game = GameSpec(
        states=("s0", "s1"),
        attacker_actions=(("a0", "a1"),) * ns,
        defender_actions=(("d0", "d1"),) * ns,
        transitions=(t, t),
        intents=tuple(f"k{k}" for k in range(nk)),
        rewards=(np.zeros((na, nd, ns, nk)),) * ns,
        prior=np.full((ns, nk), 1.0 / (ns * nk)),
        discount=1.0,
        horizon=3,
    )
    rng = np.random.default_rng(5)
    for _ in range(10):
        zeta = rng.uniform(0.0, 2.0, size=nk)
        res = solve_backup(game, TERMINAL_MAX, 0, zeta)
        assert res.value == pytest.approx(float(zeta.max()), abs=1e-8)


def test_strategy_is_distribution_and_result_shapes():
    game = build_random_game(nk=2, na=3, nd=4, discount=0.5, seed=44)
    sets = [PointSet.constant(2, 2.0) for _ in range(game.n_states)]
    res = solve_backup(game, sets, 0, np.array([0.7, 0.2]), refine=True)
    assert res.strategy.shape == (4,)
    assert res.strategy.sum() == pytest.approx(1.0, abs=1e-9)
    assert np.all(res.strategy >= -1e-12)
    nsucc = len(res.successors)
    assert res.successor_values.shape == (3, nsucc)
    assert res.penalties.shape == (3, nsucc, 2)
    assert np.all(res.penalties >= 0.0)


def test_worst_case_guarantee_dominates_every_complete_info_value():
    game = build_random_game(nk=3, discount=0.0, seed=46)
    for s in range(game.n_states):
        value = solve_backup(game, TERMINAL_MAX, s, np.zeros(3)).value
        per_intent = [
            matrix_game_value(game.stage_rewards[s][:, :, k]) for k in range(3)
        ]
        assert value >= max(per_intent) - 1e-8


def test_patrolling_loaded_penalty_concentrates_defense():
    # once observed play has loaded the penalty onto the museum-heavy
    # intent, the one-stage defense from the both-at-museum state is to
    # stay put at the museum, conceding exactly 4/3
    game = patrolling_game()
    res = solve_backup(game, TERMINAL_MAX, 0, np.array([1.0, 0.0]), refine=True)
    assert res.value == pytest.approx(4.0 / 3.0, abs=1e-8)
    assert res.strategy[0] == pytest.approx(1.0, abs=1e-8)


def test_patrolling_unloaded_penalty_splits_defense():
    game = patrolling_game()
    res = solve_backup(game, TERMINAL_MAX, 0, np.zeros(2), refine=True)
    assert res.value == pytest.approx(0.5, abs=1e-8)
    np.testing.assert_allclose(res.strategy, [0.5, 0.5], atol=1e-5)


def test_update_against_static_continuation_is_idempotent():
    game = patrolling_game()
    sets = [PointSet.zeros(2) for _ in range(4)]
    first = update(game, sets, TERMINAL_MAX)
    assert first > 0.0
    assert update(game, sets, TERMINAL_MAX) == pytest.approx(0.0, abs=1e-12)


def _settled_sets(game, sweeps=5):
    sets = [PointSet.zeros(game.n_intents) for _ in range(game.n_states)]
    update(game, sets, TERMINAL_MAX)
    for _ in range(sweeps):
        update(game, sets, sets)
    return sets


def test_nonnegative_rewards_never_spend_penalty():
    # with nonnegative rewards every stored defender value dominates its
    # own penalty coordinates, so shifting penalty onto successors cannot
    # relax any guarantee row: the optimal split is identically zero and
    # expansion has nothing to insert
    for seed in (0, 1, 2):
        game = build_random_game(nk=2, discount=0.9, seed=seed,
                                 reward_lo=0.0, reward_hi=1.0)
        sets = _settled_sets(game)
        res = solve_backup(game, sets, 0, np.array([1.0, 0.0]))
        assert res.penalties.sum() == pytest.approx(0.0, abs=1e-8)
        assert expand(game, sets, sets) == 0
        assert all(ps.n_points == 0 for ps in sets)


def test_cheap_stored_direction_buys_penalty_and_expands():
    # a stored continuation value below its own ray coordinate for one
    # intent makes penalty mass profitable; the optimal split follows that
    # ray and expansion stores the reachable splits
    game = build_random_game(nk=2, discount=0.9, seed=3,
                             reward_lo=0.0, reward_hi=1.0)
    sets = _settled_sets(game, sweeps=4)
    ray = np.array([0.7, 0.3])
    for ps in sets:
        ps.add(ray, 0.5)
    plain = solve_backup(game, sets, 0, np.array([1.0, 0.0]))
    assert plain.penalties.sum() > 0.1
    corner_only = [PointSet(corner_values=ps.corner_values.copy())
                   for ps in sets]
    baseline = solve_backup(game, corner_only, 0, np.array([1.0, 0.0]))
    assert plain.value < baseline.value - 1e-6

    work = [ps.copy() for ps in sets]
    n = expand(game, work, work)
    assert n > 0
    for before, after in zip(sets, work):
        assert after.n_points >= before.n_points
        for vec in after.vectors[before.n_points:]:
            # inserted splits follow the cheap ray's direction
            assert vec[0] * ray[1] == pytest.approx(vec[1] * ray[0], abs=1e-6)


def test_expansion_cap_limits_insertions():
    game = build_random_game(nk=2, discount=0.9, seed=3,
                             reward_lo=0.0, reward_hi=1.0)
    sets = _settled_sets(game, sweeps=4)
    for ps in sets:
        ps.add(np.array([0.7, 0.3]), 0.5)
    capped = [ps.copy() for ps in sets]
    assert expand(game, capped, capped, cap_per_origin=0) == 0
    assert all(ps.n_points == 1 for ps in capped)
    one = [ps.copy() for ps in sets]
    n_origins = sum(ps.dim + ps.n_points for ps in sets)
    assert expand(game, one, one, cap_per_origin=1) <= n_origins


def test_expand_with_terminal_continuation_is_noop():
    game = patrolling_game()
    sets = [PointSet.zeros(2) for _ in range(4)]
    update(game, sets, TERMINAL_MAX)
    assert expand(game, sets, TERMINAL_MAX) == 0
