"""Two-location patrolling game with a private target preference.

An attacker and a patroller each occupy one of two sites (a museum and a
gallery) and simultaneously choose to stay or switch. The attacker's
intent is a weight ``w`` on the museum: being at the museum alone is worth
``w``, together with the patroller ``w/2``; the gallery mirrors with
``1 - w``. Rewards accrue on the successor location pair, movement is
deterministic, and the default setup plays two undiscounted stages from a
uniform prior over location pairs and intents.
"""

from __future__ import annotations

import numpy as np

from ..game import GameSpec, check_game

LOCATIONS = ("museum", "gallery")
ACTIONS = ("stay", "switch")


def _move(loc: int, action: int) -> int:
    return loc if action == 0 else 1 - loc


def patrolling_game(
    intent_weights: tuple[float, ...] = (2.0 / 3.0, 1.0 / 3.0),
    horizon: int | None = 2,
    discount: float = 1.0,
) -> GameSpec:
    """Build the patrolling game; intent ``k`` weights the museum by
    ``intent_weights[k]``. State names are ``"<attacker>|<patroller>"``."""
    weights = tuple(float(w) for w in intent_weights)
    nk = len(weights)
    states = [
        f"{LOCATIONS[la]}|{LOCATIONS[ld]}" for la in range(2) for ld in range(2)
    ]
    ns = len(states)

    def site_value(la: int, ld: int, w: float) -> float:
        alone = w if la == 0 else 1.0 - w
        return alone / 2.0 if la == ld else alone

    transitions = []
    rewards = []
    for la in range(2):
        for ld in range(2):
            t = np.zeros((2, 2, ns))
            r = np.zeros((2, 2, ns, nk))
            for a in range(2):
                for d in range(2):
                    la1, ld1 = _move(la, a), _move(ld, d)
                    s1 = la1 * 2 + ld1
                    t[a, d, s1] = 1.0
                    for k, w in enumerate(weights):
                        r[a, d, s1, k] = site_value(la1, ld1, w)
            transitions.append(t)
            rewards.append(r)

    return check_game(
        GameSpec(
            states=tuple(states),
            attacker_actions=tuple(ACTIONS for _ in range(ns)),
            defender_actions=tuple(ACTIONS for _ in range(ns)),
            transitions=tuple(transitions),
            intents=tuple(f"museum-weight={w:g}" for w in weights),
            rewards=tuple(rewards),
            prior=np.full((ns, nk), 1.0 / (ns * nk)),
            discount=discount,
            horizon=horizon,
        )
    )
