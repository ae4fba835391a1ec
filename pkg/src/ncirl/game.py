"""Two-player zero-sum Markov game model with one-sided intent uncertainty.

A game couples a finite state space with per-state action sets for an
attacker (the maximizer, who privately knows an intent parameter drawn once
at the start) and a defender (the minimizer, who only knows the prior).
Moves are simultaneous; both players observe the realized action pair and
the successor state after every stage.

The model is plain data: construction checks shapes hard, while the
stochastic-consistency checks live in :func:`validate_game` which reports
violations as data so tooling can surface all of them at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .exceptions import GameValidationError

_ATOL = 1e-9


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.asarray(arr, dtype=np.float64)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class GameSpec:
    """Immutable description of one game instance.

    Per-state arrays are indexed ``[a, d, s1]`` for transitions and
    ``[a, d, s1, k]`` for rewards, where ``a``/``d`` index the state's own
    action lists, ``s1`` indexes the global state list and ``k`` the intent
    list. ``prior`` is a joint distribution over (state, intent) pairs.
    """

    states: tuple[str, ...]
    attacker_actions: tuple[tuple[str, ...], ...]
    defender_actions: tuple[tuple[str, ...], ...]
    transitions: tuple[np.ndarray, ...]
    intents: tuple[str, ...]
    rewards: tuple[np.ndarray, ...]
    prior: np.ndarray
    discount: float
    horizon: int | None = None
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        ns, nk = len(self.states), len(self.intents)
        if ns == 0:
            raise ValueError("game needs at least one state")
        if nk == 0:
            raise ValueError("game needs at least one intent")
        if len(self.attacker_actions) != ns or len(self.defender_actions) != ns:
            raise ValueError("per-state action lists must match the state count")
        if len(self.transitions) != ns or len(self.rewards) != ns:
            raise ValueError("per-state tables must match the state count")
        trans = []
        rew = []
        for s in range(ns):
            na, nd = len(self.attacker_actions[s]), len(self.defender_actions[s])
            if na == 0 or nd == 0:
                raise ValueError(f"state {self.states[s]!r} has an empty action set")
            t = np.asarray(self.transitions[s], dtype=np.float64)
            r = np.asarray(self.rewards[s], dtype=np.float64)
            if t.shape != (na, nd, ns):
                raise ValueError(
                    f"transition table for state {self.states[s]!r} has shape "
                    f"{t.shape}, expected {(na, nd, ns)}"
                )
            if r.shape != (na, nd, ns, nk):
                raise ValueError(
                    f"reward table for state {self.states[s]!r} has shape "
                    f"{r.shape}, expected {(na, nd, ns, nk)}"
                )
            trans.append(_freeze(t))
            rew.append(_freeze(r))
        p = np.asarray(self.prior, dtype=np.float64)
        if p.shape != (ns, nk):
            raise ValueError(f"prior has shape {p.shape}, expected {(ns, nk)}")
        object.__setattr__(self, "transitions", tuple(trans))
        object.__setattr__(self, "rewards", tuple(rew))
        object.__setattr__(self, "prior", _freeze(p))
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "intents", tuple(self.intents))
        object.__setattr__(
            self, "attacker_actions", tuple(tuple(x) for x in self.attacker_actions)
        )
        object.__setattr__(
            self, "defender_actions", tuple(tuple(x) for x in self.defender_actions)
        )

    # -- sizes ---------------------------------------------------------------

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_intents(self) -> int:
        return len(self.intents)

    def n_attacker_actions(self, s: int) -> int:
        return len(self.attacker_actions[s])

    def n_defender_actions(self, s: int) -> int:
        return len(self.defender_actions[s])

    # -- derived tables ------------------------------------------------------

    @cached_property
    def r_max(self) -> float:
        """Largest absolute reward entry; scales initial value estimates."""
        return max(float(np.max(np.abs(r))) if r.size else 0.0 for r in self.rewards)

    @cached_property
    def stage_rewards(self) -> tuple[np.ndarray, ...]:
        """Per state: expected immediate reward ``[a, d, k]`` under the
        transition kernel (the successor dimension marginalized out)."""
        out = []
        for s in range(self.n_states):
            table = np.einsum(
                "ads,adsk->adk", self.transitions[s], self.rewards[s]
            )
            out.append(_freeze(table))
        return tuple(out)

    @cached_property
    def successor_sets(self) -> tuple[np.ndarray, ...]:
        """Per state: sorted indices of states reachable in one stage under
        any action pair."""
        out = []
        for s in range(self.n_states):
            mass = self.transitions[s].sum(axis=(0, 1))
            out.append(np.flatnonzero(mass > 0.0))
        return tuple(out)

    @cached_property
    def intent_marginal(self) -> np.ndarray:
        """Prior marginal over intents."""
        return _freeze(self.prior.sum(axis=0))

    @cached_property
    def state_marginal(self) -> np.ndarray:
        """Prior marginal over initial states."""
        return _freeze(self.prior.sum(axis=1))

    def initial_belief(self, s: int | None = None) -> np.ndarray:
        """Common-knowledge intent belief, conditioned on the initial state
        when the prior correlates the two."""
        if s is None:
            return np.array(self.intent_marginal)
        row = self.prior[s]
        total = row.sum()
        if total <= 0.0:
            return np.array(self.intent_marginal)
        return row / total

    # -- views ---------------------------------------------------------------

    def restrict_to_intent(self, k: int) -> "GameSpec":
        """Complete-information view: the same dynamics with the reward of a
        single intent and a point-mass intent prior."""
        rewards = tuple(r[:, :, :, k : k + 1] for r in self.rewards)
        marginal = self.state_marginal
        prior = marginal.reshape(-1, 1) / max(marginal.sum(), 1.0)
        return GameSpec(
            states=self.states,
            attacker_actions=self.attacker_actions,
            defender_actions=self.defender_actions,
            transitions=self.transitions,
            intents=(self.intents[k],),
            rewards=rewards,
            prior=prior,
            discount=self.discount,
            horizon=self.horizon,
        )


def validate_game(spec: GameSpec) -> list[str]:
    """Collect stochastic-consistency violations; empty list means valid."""
    bad = []
    for s in range(spec.n_states):
        t = spec.transitions[s]
        if np.any(t < -_ATOL):
            bad.append(f"state {spec.states[s]!r}: negative transition probability")
        rows = t.sum(axis=2)
        if not np.allclose(rows, 1.0, atol=1e-6):
            bad.append(
                f"state {spec.states[s]!r}: transition rows must each sum to 1"
            )
        if not np.all(np.isfinite(spec.rewards[s])):
            bad.append(f"state {spec.states[s]!r}: non-finite reward entry")
    if np.any(spec.prior < -_ATOL):
        bad.append("prior has a negative entry")
    if not np.isclose(spec.prior.sum(), 1.0, atol=1e-6):
        bad.append("prior must sum to 1")
    if spec.horizon is None:
        if not 0.0 <= spec.discount < 1.0:
            bad.append("discount must lie in [0, 1) for unbounded horizon")
    else:
        if spec.horizon < 1:
            bad.append("horizon must be a positive stage count")
        if not 0.0 <= spec.discount <= 1.0:
            bad.append("discount must lie in [0, 1]")
    return bad


def check_game(spec: GameSpec) -> GameSpec:
    """Raise :class:`GameValidationError` if the game is inconsistent."""
    violations = validate_game(spec)
    if violations:
        raise GameValidationError(violations)
    return spec


def make_game(**kwargs) -> GameSpec:
    """Build a :class:`GameSpec` and validate it in one step."""
    return check_game(GameSpec(**kwargs))
