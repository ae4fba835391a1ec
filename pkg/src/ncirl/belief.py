"""Bayesian intent inference from observed attacker actions.

After each stage both players see the attacker's realized action. Because
the attacker's (possibly intent-conditional) stage strategy is common
knowledge in equilibrium analysis, the intent posterior depends only on the
acting strategy and the observed action: the defender's action and the
successor state enter the joint likelihood through factors shared by every
intent, so they cancel on normalization.
"""

from __future__ import annotations

import numpy as np

from .exceptions import ZeroProbabilityObservation


def update_belief(
    strategy: np.ndarray, belief: np.ndarray, action: int
) -> np.ndarray:
    """Posterior over intents after seeing the attacker play ``action``.

    ``strategy[k, a]`` is the probability that an attacker of intent ``k``
    plays action ``a`` in the current state; ``belief`` is the prior over
    intents. Raises :class:`ZeroProbabilityObservation` when the observed
    action has zero probability under every intent in the belief's support.
    """
    strategy = np.asarray(strategy, dtype=np.float64)
    belief = np.asarray(belief, dtype=np.float64)
    weights = belief * strategy[:, action]
    total = weights.sum()
    if total <= 0.0:
        raise ZeroProbabilityObservation(
            f"action {action} has zero probability under the current belief"
        )
    return weights / total


def unnormalized_posterior_weight(
    strategy: np.ndarray,
    belief: np.ndarray,
    action: int,
    successor: int,
    transition_row: np.ndarray,
) -> np.ndarray:
    """Joint weight vector ``belief * strategy[:, action] * P(successor)``.

    ``transition_row`` is the successor distribution for the realized action
    pair. The transition factor is intent-independent, so these weights
    renormalize to the same posterior as :func:`update_belief`; they are the
    natural quantities inside the stage linear programs, where the mass also
    matters.
    """
    strategy = np.asarray(strategy, dtype=np.float64)
    belief = np.asarray(belief, dtype=np.float64)
    row = np.asarray(transition_row, dtype=np.float64)
    return belief * strategy[:, action] * row[successor]
