"""Shared fixtures: small random game instances and the patrolling game."""

import numpy as np
import pytest

from ncirl import make_game, patrolling_game


def build_random_game(
    ns=2, na=2, nd=2, nk=2, discount=0.9, horizon=None, seed=0, reward_lo=-1.0,
    reward_hi=1.0,
):
    """A dense random game with Dirichlet transition rows and uniform prior."""
    rng = np.random.default_rng(seed)
    transitions = [rng.dirichlet(np.ones(ns), size=(na, nd)) for _ in range(ns)]
    rewards = [
        rng.uniform(reward_lo, reward_hi, size=(na, nd, ns, nk)) for _ in range(ns)
    ]
    prior = np.full((ns, nk), 1.0 / (ns * nk))
    return make_game(
        states=tuple(f"s{i}" for i in range(ns)),
        attacker_actions=tuple(tuple(f"a{j}" for j in range(na)) for _ in range(ns)),
        defender_actions=tuple(tuple(f"d{j}" for j in range(nd)) for _ in range(ns)),
        transitions=transitions,
        intents=tuple(f"k{j}" for j in range(nk)),
        rewards=rewards,
        prior=prior,
        discount=discount,
        horizon=horizon,
    )


@pytest.fixture
def patrol_game():
    return patrolling_game()


@pytest.fixture
def small_game():
    return build_random_game(seed=11)
