"""Patrolling and attack-graph environments."""

import numpy as np
import pytest

from ncirl import (
    AttackGraph,
    GraphParams,
    NcirlError,
    compile_game,
    patrolling_game,
    random_attack_graph,
    validate_game,
)
from ncirl.environments.attack_graph import reachable_states, to_dot


# -- patrolling ---------------------------------------------------------------


def test_patrolling_shape_and_prior():
    game = patrolling_game()
    assert game.n_states == 4
    assert game.n_intents == 2
    assert game.horizon == 2
    assert game.discount == 1.0
    np.testing.assert_allclose(game.prior, np.full((4, 2), 1.0 / 8.0))
    assert validate_game(game) == []


def _state_index(game, name):
    return game.states.index(name)


def test_patrolling_rewards_match_site_table():
    game = patrolling_game()
    # reward depends on the successor: attacker alone at the museum earns
    # its museum weight, shared sites halve the haul
    s_mg = _state_index(game, "museum|gallery")
    s_gg = _state_index(game, "gallery|gallery")
    for s in range(4):
        r = game.rewards[s]
        t = game.transitions[s]
        for a in range(2):
            for d in range(2):
                s1 = int(np.argmax(t[a, d]))
                if s1 == s_mg:
                    assert r[a, d, s1, 0] == pytest.approx(2.0 / 3.0)
                if s1 == s_gg:
                    assert r[a, d, s1, 1] == pytest.approx((1 - 1.0 / 3.0) / 2.0)


def test_patrolling_transitions_are_deterministic_moves():
    game = patrolling_game()
    s_mm = _state_index(game, "museum|museum")
    s_gm = _state_index(game, "gallery|museum")
    a_switch = game.attacker_actions[s_mm].index("switch")
    d_stay = game.defender_actions[s_mm].index("stay")
    row = game.transitions[s_mm][a_switch, d_stay]
    assert row[s_gm] == pytest.approx(1.0)
    assert row.sum() == pytest.approx(1.0)
    for s in range(4):
        assert np.all(
            np.isin(game.transitions[s], (0.0, 1.0))
        ), "moves must be deterministic"


def test_patrolling_intent_weights_configurable():
    game = patrolling_game(intent_weights=(0.9,), horizon=3)
    assert game.n_intents == 1
    assert game.horizon == 3


# -- attack graph generation --------------------------------------------------


def test_generation_deterministic_per_seed():
    a = random_attack_graph(GraphParams(n_nodes=7), seed=5)
    b = random_attack_graph(GraphParams(n_nodes=7), seed=5)
    c = random_attack_graph(GraphParams(n_nodes=7), seed=6)
    assert a.to_dict() == b.to_dict()
    assert a.to_dict() != c.to_dict()


def test_generated_graphs_are_acyclic_with_bounded_degrees():
    for seed in range(12):
        g = random_attack_graph(GraphParams(n_nodes=8), seed=seed)
        in_deg = np.zeros(g.n_nodes, dtype=int)
        out_deg = np.zeros(g.n_nodes, dtype=int)
        for pre, post in g.exploits:
            # exploits only point forward in creation order, hence acyclic
            assert all(p < post for p in pre)
            in_deg[post] += 1
            for p in pre:
                out_deg[p] += 1
        assert np.all(in_deg <= 3)
        assert np.all(out_deg <= 3)
        # every non-root node is the postcondition of at least one exploit
        posts = {post for _, post in g.exploits}
        for j in range(g.n_nodes):
            if j not in g.roots:
                assert j in posts


def test_intent_values_are_normalized_profiles():
    g = random_attack_graph(GraphParams(n_nodes=6, n_intents=10), seed=3)
    assert len(g.intents) == 10
    assert g.node_values.shape == (10, 6)
    np.testing.assert_allclose(g.node_values.sum(axis=1), 1.0, atol=1e-12)
    for r in g.roots:
        np.testing.assert_array_equal(g.node_values[:, r], 0.0)
    assert np.all(g.node_values >= 0.0)
    # dense default: every non-root node carries value for every intent
    non_roots = [j for j in range(6) if j not in g.roots]
    assert np.all(g.node_values[:, non_roots] > 0.0)


def test_graph_dict_roundtrip():
    g = random_attack_graph(GraphParams(n_nodes=6), seed=9)
    again = AttackGraph.from_dict(g.to_dict())
    assert again.to_dict() == g.to_dict()


def test_dot_export_mentions_every_exploit():
    g = random_attack_graph(GraphParams(n_nodes=6), seed=1)
    text = to_dot(g)
    assert text.startswith("digraph")
    for e in range(len(g.exploits)):
        assert f"e{e}" in text


# -- compilation --------------------------------------------------------------


def _single_edge_graph(beta=0.8):
    return AttackGraph(
        n_nodes=2,
        roots=(0,),
        exploits=(((0,), 1),),
        beta=beta,
        node_values=np.array([[0.0, 1.0]]),
        intents=("only",),
    )


def test_single_edge_transition_golden():
    game = compile_game(_single_edge_graph(), horizon=2, discount=1.0)
    assert game.n_states == 2
    s0 = 0
    a_attack = game.attacker_actions[s0].index("exploit:0")
    d_pass = game.defender_actions[s0].index("pass")
    d_block = game.defender_actions[s0].index("block:0")
    row = game.transitions[s0][a_attack, d_pass]
    np.testing.assert_allclose(row, [0.2, 0.8], atol=1e-12)
    row = game.transitions[s0][a_attack, d_block]
    np.testing.assert_allclose(row, [1.0, 0.0], atol=1e-12)
    # successful capture pays the node value net of the attempt cost
    assert game.rewards[s0][a_attack, d_pass, 1, 0] == pytest.approx(1.0 - 0.01)
    # blocked attempt pays both sides' action costs
    assert game.rewards[s0][a_attack, d_block, 0, 0] == pytest.approx(
        -0.01 + 0.01
    )


def test_progress_free_states_absorb_with_zero_reward():
    game = compile_game(_single_edge_graph(), horizon=3, discount=1.0)
    s_full = 1
    assert game.attacker_actions[s_full] == ("pass",)
    assert game.defender_actions[s_full] == ("pass",)
    np.testing.assert_allclose(game.transitions[s_full][0, 0], [0.0, 1.0])
    np.testing.assert_array_equal(game.rewards[s_full][0, 0], 0.0)


def test_state_count_matches_independent_reachability():
    g = random_attack_graph(GraphParams(n_nodes=7), seed=2)
    game = compile_game(g, horizon=3, discount=1.0)

    # plain fixed-point closure, no queue bookkeeping
    sets = {frozenset(g.roots)}
    while True:
        grown = set(sets)
        for s in sets:
            for pre, post in g.exploits:
                if post not in s and all(p in s for p in pre):
                    grown.add(s | {post})
        if grown == sets:
            break
        sets = grown
    assert game.n_states == len(sets)


def test_enabled_sets_grow_monotonically():
    g = random_attack_graph(GraphParams(n_nodes=6), seed=4)
    game = compile_game(g, horizon=3, discount=1.0)
    sizes = [name.count(",") for name in game.states]
    for s in range(game.n_states):
        for s1 in game.successor_sets[s]:
            assert sizes[s1] >= sizes[s]


def test_reward_decomposition_identity():
    g = random_attack_graph(GraphParams(n_nodes=6), seed=8)
    game = compile_game(g, horizon=3, discount=1.0)
    states = reachable_states(g)
    for s in range(game.n_states):
        for ai, a_name in enumerate(game.attacker_actions[s]):
            n_attempt = 0 if a_name == "pass" else len(a_name.split("+"))
            for di, d_name in enumerate(game.defender_actions[s]):
                n_block = 0 if d_name == "pass" else len(d_name.split("+"))
                for s1 in range(game.n_states):
                    if game.transitions[s][ai, di, s1] <= 0.0:
                        continue
                    new_nodes = sorted(states[s1] - states[s])
                    gain = g.node_values[:, new_nodes].sum(axis=1)
                    expected = gain - 0.01 * n_attempt + 0.01 * n_block
                    np.testing.assert_allclose(
                        game.rewards[s][ai, di, s1], expected, atol=1e-12
                    )


def test_state_cap_enforced():
    g = random_attack_graph(GraphParams(n_nodes=8), seed=0)
    with pytest.raises(NcirlError, match="cap"):
        compile_game(g, horizon=3, state_cap=3)


def test_compiled_game_validates():
    g = random_attack_graph(GraphParams(n_nodes=6), seed=12)
    game = compile_game(g, horizon=6, discount=1.0)
    assert validate_game(game) == []
    assert game.metadata["graph"]["n_nodes"] == 6
