"""Exception types raised by the solver library.

Everything recoverable derives from NcirlError so callers (and the CLI) can
distinguish library failures from programming errors.
"""


class NcirlError(Exception):
    """Base class for all library-specific errors."""


class GameValidationError(NcirlError, ValueError):
    """A game description failed validation.

    Carries the full list of violation messages so callers can report all
    problems at once instead of fixing them one at a time.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        msg = "invalid game description:\n" + "\n".join(
            f"  - {v}" for v in self.violations
        )
        super().__init__(msg)


class LpError(NcirlError):
    """Base class for linear-program solver failures."""


class LpInfeasible(LpError):
    """The linear program admits no feasible point."""


class LpUnbounded(LpError):
    """The linear program's objective is unbounded over the feasible set."""


class NumericalFailure(LpError):
    """The backend failed for numerical reasons (not infeasible/unbounded)."""


class InfeasibleBackup(NcirlError):
    """A stage backup LP was infeasible.

    The backup programs are feasible for every well-formed value set, so this
    signals corrupted or inconsistent stored sets rather than bad user input.
    """


class ZeroProbabilityObservation(NcirlError):
    """A belief update was conditioned on a probability-zero observation."""


class StaleAgentState(NcirlError):
    """An online agent was queried out of protocol order.

    Agents alternate act and observe within an episode; skipping an observe
    or observing twice leaves the internal information state stale.
    """
