"""Sparse linear-program container and interchangeable solve backends.

Every optimization in the library (stage games, backup operators) is posed
as an :class:`LpProblem` and handed to :func:`solve_lp`, so the backend is a
single seam. The default backend is HiGHS via :mod:`scipy.optimize.linprog`,
which is deterministic for fixed input and fast enough for the benchmark
budgets. A self-contained dense two-phase simplex (Bland's rule, so it
cannot cycle) is kept as a second backend; it is exercised against HiGHS in
the test suite and available when an environment lacks a working scipy
HiGHS build.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse
from scipy.optimize import linprog

from .exceptions import LpInfeasible, LpUnbounded, NumericalFailure

DEFAULT_BACKEND = "highs"
DEFAULT_TOL = 1e-9

_RELATIONS = ("<=", ">=", "==")

_solve_count = 0


def lp_solve_count() -> int:
    """Process-wide count of LP solves; used by solver diagnostics."""
    return _solve_count


class LpProblem:
    """A linear program assembled row by row with sparse coefficients."""

    def __init__(self, name: str = "lp"):
        self.name = name
        self._nonneg: list[bool] = []
        self._names: list[str] = []
        self.rows: list[tuple[np.ndarray, np.ndarray, str, float]] = []
        self.sense: str = "min"
        self._obj_idx: np.ndarray = np.zeros(0, dtype=np.intp)
        self._obj_coef: np.ndarray = np.zeros(0)

    @property
    def n_variables(self) -> int:
        return len(self._nonneg)

    def variable_name(self, j: int) -> str:
        return self._names[j]

    def is_nonneg(self, j: int) -> bool:
        return self._nonneg[j]

    def add_variable(self, name: str | None = None, nonneg: bool = False) -> int:
        j = len(self._nonneg)
        self._nonneg.append(bool(nonneg))
        self._names.append(name if name is not None else f"x{j}")
        return j

    def add_variables(
        self, count: int, prefix: str = "x", nonneg: bool = False
    ) -> np.ndarray:
        start = len(self._nonneg)
        self._nonneg.extend([bool(nonneg)] * count)
        self._names.extend(f"{prefix}{start + i}" for i in range(count))
        return np.arange(start, start + count, dtype=np.intp)

    def add_row(self, idx, coef, relation: str, rhs: float) -> None:
        if relation not in _RELATIONS:
            raise ValueError(f"unknown relation {relation!r}")
        idx = np.asarray(idx, dtype=np.intp)
        coef = np.asarray(coef, dtype=np.float64)
        if idx.shape != coef.shape:
            raise ValueError("index and coefficient arrays must align")
        self.rows.append((idx, coef, relation, float(rhs)))

    def set_objective(self, sense: str, idx, coef) -> None:
        if sense not in ("min", "max"):
            raise ValueError(f"unknown sense {sense!r}")
        self.sense = sense
        self._obj_idx = np.asarray(idx, dtype=np.intp)
        self._obj_coef = np.asarray(coef, dtype=np.float64)

    def objective_vector(self) -> np.ndarray:
        c = np.zeros(self.n_variables)
        np.add.at(c, self._obj_idx, self._obj_coef)
        return c


@dataclass(frozen=True)
class LpSolution:
    value: float
    x: np.ndarray
    iterations: int = 0
    backend: str = DEFAULT_BACKEND


def solve_lp(
    problem: LpProblem,
    tol: float = DEFAULT_TOL,
    backend: str | None = None,
) -> LpSolution:
    """Solve to optimality or raise an :class:`~ncirl.exceptions.LpError`."""
    global _solve_count
    _solve_count += 1
    backend = backend or DEFAULT_BACKEND
    if backend == "highs":
        return _solve_highs(problem, tol)
    if backend == "dense":
        return _solve_dense(problem, tol)
    raise ValueError(f"unknown LP backend {backend!r}")


# -- HiGHS via scipy ---------------------------------------------------------


def _scipy_matrices(problem: LpProblem):
    ub_i, ub_j, ub_v, ub_rhs = [], [], [], []
    eq_i, eq_j, eq_v, eq_rhs = [], [], [], []
    for idx, coef, rel, rhs in problem.rows:
        if rel == "==":
            eq_i.append(np.full(idx.shape, len(eq_rhs), dtype=np.intp))
            eq_j.append(idx)
            eq_v.append(coef)
            eq_rhs.append(rhs)
        else:
            sign = 1.0 if rel == "<=" else -1.0
            ub_i.append(np.full(idx.shape, len(ub_rhs), dtype=np.intp))
            ub_j.append(idx)
            ub_v.append(sign * coef)
            ub_rhs.append(sign * rhs)
    n = problem.n_variables

    def _stack(ii, jj, vv, nrows):
        if not ii:
            return None
        return scipy.sparse.csr_matrix(
            (np.concatenate(vv), (np.concatenate(ii), np.concatenate(jj))),
            shape=(nrows, n),
        )

    A_ub = _stack(ub_i, ub_j, ub_v, len(ub_rhs))
    A_eq = _stack(eq_i, eq_j, eq_v, len(eq_rhs))
    b_ub = np.asarray(ub_rhs) if ub_rhs else None
    b_eq = np.asarray(eq_rhs) if eq_rhs else None
    return A_ub, b_ub, A_eq, b_eq


def _solve_highs(problem: LpProblem, tol: float) -> LpSolution:
    c = problem.objective_vector()
    sign = -1.0 if problem.sense == "max" else 1.0
    A_ub, b_ub, A_eq, b_eq = _scipy_matrices(problem)
    bounds = [(0.0, None) if nn else (None, None) for nn in problem._nonneg]
    res = linprog(
        sign * c,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=bounds,
        method="highs",
        options={
            "presolve": True,
            "primal_feasibility_tolerance": max(tol, 1e-10),
            "dual_feasibility_tolerance": max(tol, 1e-10),
        },
    )
    if res.status == 2:
        raise LpInfeasible(f"{problem.name}: infeasible")
    if res.status == 3:
        raise LpUnbounded(f"{problem.name}: unbounded")
    if res.status != 0:
        raise NumericalFailure(f"{problem.name}: backend status {res.status}")
    x = np.asarray(res.x, dtype=np.float64)
    return LpSolution(value=float(c @ x), x=x, iterations=int(res.nit), backend="highs")


# -- embedded dense simplex --------------------------------------------------


def _solve_dense(problem: LpProblem, tol: float) -> LpSolution:
    """Two-phase tableau simplex with Bland's rule on a dense standard form.

    Free variables are split into differences of nonnegative pairs; rows are
    converted to equalities with slack columns and nonnegative right-hand
    sides before artificial variables complete the starting basis.
    """
    n_orig = problem.n_variables
    col_of = np.zeros(n_orig, dtype=np.intp)
    neg_col = np.full(n_orig, -1, dtype=np.intp)
    ncols = 0
    for j in range(n_orig):
        col_of[j] = ncols
        ncols += 1
        if not problem._nonneg[j]:
            neg_col[j] = ncols
            ncols += 1
    m = len(problem.rows)
    n_slack = sum(1 for _, _, rel, _ in problem.rows if rel != "==")
    A = np.zeros((m, ncols + n_slack))
    b = np.zeros(m)
    slack_at = ncols
    for r, (idx, coef, rel, rhs) in enumerate(problem.rows):
        for j, v in zip(idx, coef):
            A[r, col_of[j]] += v
            if neg_col[j] >= 0:
                A[r, neg_col[j]] -= v
        b[r] = rhs
        if rel == "<=":
            A[r, slack_at] = 1.0
            slack_at += 1
        elif rel == ">=":
            A[r, slack_at] = -1.0
            slack_at += 1
    n_total = ncols + n_slack
    flip = b < 0.0
    A[flip] *= -1.0
    b[flip] *= -1.0

    c_orig = problem.objective_vector()
    sign = -1.0 if problem.sense == "max" else 1.0
    c = np.zeros(n_total)
    for j in range(n_orig):
        c[col_of[j]] += sign * c_orig[j]
        if neg_col[j] >= 0:
            c[neg_col[j]] -= sign * c_orig[j]

    # phase 1: artificial basis
    T = np.zeros((m + 1, n_total + m + 1))
    T[:m, :n_total] = A
    T[:m, n_total : n_total + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :n_total] = -A.sum(axis=0)
    T[m, -1] = -b.sum()
    basis = list(range(n_total, n_total + m))
    iters = _bland(T, basis, n_total + m, tol)
    if T[m, -1] < -1e-7:
        raise LpInfeasible(f"{problem.name}: infeasible (phase 1)")
    for r in range(m):
        if basis[r] >= n_total:
            # drive the artificial out; a zero pivot row is redundant
            pivot_col = next(
                (j for j in range(n_total) if abs(T[r, j]) > tol), None
            )
            if pivot_col is not None:
                _pivot(T, basis, r, pivot_col)

    # phase 2: restore the true costs over the real columns
    keep = [r for r in range(m) if basis[r] < n_total]
    T2 = np.zeros((len(keep) + 1, n_total + 1))
    T2[: len(keep), :n_total] = T[keep][:, :n_total]
    T2[: len(keep), -1] = T[keep][:, -1]
    basis2 = [basis[r] for r in keep]
    T2[-1, :n_total] = c
    for r, j in enumerate(basis2):
        if abs(T2[-1, j]) > 0.0:
            T2[-1] -= T2[-1, j] * T2[r]
    iters += _bland(T2, basis2, n_total, tol, name=problem.name)

    x_cols = np.zeros(n_total)
    for r, j in enumerate(basis2):
        x_cols[j] = T2[r, -1]
    x = np.zeros(n_orig)
    for j in range(n_orig):
        x[j] = x_cols[col_of[j]]
        if neg_col[j] >= 0:
            x[j] -= x_cols[neg_col[j]]
    return LpSolution(
        value=float(c_orig @ x), x=x, iterations=iters, backend="dense"
    )


def _pivot(T: np.ndarray, basis: list[int], row: int, col: int) -> None:
    T[row] /= T[row, col]
    factors = T[:, col].copy()
    factors[row] = 0.0
    T -= np.outer(factors, T[row])
    basis[row] = col


def _bland(
    T: np.ndarray, basis: list[int], n_cols: int, tol: float, name: str = "lp"
) -> int:
    """Minimize the tableau's cost row in place; Bland's rule terminates
    without cycling. Returns the iteration count."""
    m = T.shape[0] - 1
    max_iter = 50 * (m + n_cols + 10)
    for it in range(max_iter):
        col = -1
        for j in range(n_cols):
            if T[-1, j] < -tol:
                col = j
                break
        if col < 0:
            return it
        best_ratio, row = None, -1
        for r in range(m):
            if T[r, col] > tol:
                ratio = T[r, -1] / T[r, col]
                if (
                    best_ratio is None
                    or ratio < best_ratio - tol
                    or (abs(ratio - best_ratio) <= tol and basis[r] < basis[row])
                ):
                    best_ratio, row = ratio, r
        if row < 0:
            raise LpUnbounded(f"{name}: unbounded")
        _pivot(T, basis, row, col)
    raise NumericalFailure(f"{name}: simplex iteration limit reached")


# -- textual dump ------------------------------------------------------------


def to_lp_format(problem: LpProblem) -> str:
    """Render the program in CPLEX LP text format for offline inspection."""

    def _terms(idx, coef):
        parts = []
        for j, v in zip(idx, coef):
            op = "-" if v < 0 else "+"
            parts.append(f"{op} {abs(v):.12g} {problem.variable_name(j)}")
        if not parts:
            return "0"
        first = parts[0]
        first = first[2:] if first.startswith("+ ") else "-" + first[2:]
        return " ".join([first] + parts[1:])

    lines = [f"\\ Problem: {problem.name}"]
    lines.append("Maximize" if problem.sense == "max" else "Minimize")
    lines.append(f" obj: {_terms(problem._obj_idx, problem._obj_coef)}")
    lines.append("Subject To")
    for r, (idx, coef, rel, rhs) in enumerate(problem.rows):
        op = {"<=": "<=", ">=": ">=", "==": "="}[rel]
        lines.append(f" c{r}: {_terms(idx, coef)} {op} {rhs:.12g}")
    free = [j for j in range(problem.n_variables) if not problem.is_nonneg(j)]
    if free:
        lines.append("Bounds")
        lines.extend(f" {problem.variable_name(j)} free" for j in free)
    lines.append("End")
    return "\n".join(lines) + "\n"
