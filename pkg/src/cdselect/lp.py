"""Dense LP engine for Dantzig-type problems.

Solves  min c'z  s.t.  l <= A z <= u,  z >= 0  with a bounded-variable
revised simplex. Range rows are handled natively through one slack per row
bounded by the range width, so two-sided correlation constraints cost a
single row each. Phase 1 uses artificial variables; entering ties break
toward the lowest column index and Bland's rule kicks in after a run of
degenerate pivots, which keeps solves deterministic and cycle-free.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .types import DataError, DesignMatrix, NumericalError

DEFAULT_LP_TOL = 1e-9
_REFACTOR_EVERY = 64
_DEGENERATE_RUN_LIMIT = 40


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration-limit"


@dataclass
class LpProblem:
    """min objective'z subject to lower_bounds <= A z <= upper_bounds, z >= 0."""

    objective: np.ndarray
    constraint_matrix: np.ndarray
    lower_bounds: np.ndarray
    upper_bounds: np.ndarray

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=np.float64)
        self.constraint_matrix = np.asarray(self.constraint_matrix, dtype=np.float64)
        self.lower_bounds = np.asarray(self.lower_bounds, dtype=np.float64)
        self.upper_bounds = np.asarray(self.upper_bounds, dtype=np.float64)
        k, m = self.constraint_matrix.shape
        if self.objective.shape != (m,):
            raise DataError(f"objective length {self.objective.shape} != columns {m}")
        if self.lower_bounds.shape != (k,) or self.upper_bounds.shape != (k,):
            raise DataError("bound vectors must match the constraint row count")
        for name, arr in (
            ("objective", self.objective),
            ("constraint_matrix", self.constraint_matrix),
            ("lower_bounds", self.lower_bounds),
            ("upper_bounds", self.upper_bounds),
        ):
            if not np.all(np.isfinite(arr)):
                raise DataError(f"{name} contains non-finite entries")
        if np.any(self.lower_bounds > self.upper_bounds):
            raise DataError("lower_bounds must not exceed upper_bounds")

    @property
    def num_rows(self) -> int:
        return self.constraint_matrix.shape[0]

    @property
    def num_vars(self) -> int:
        return self.constraint_matrix.shape[1]


@dataclass
class LpSolution:
    z: np.ndarray
    objective_value: float
    status: LpStatus
    iterations: int
    duals: np.ndarray | None = None
    gap: float = 0.0

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


# variable states
_BASIC, _AT_LO, _AT_HI = 0, 1, 2


class _Tableau:
    """Revised-simplex working state over the equality system [A I | art] x = u."""

    def __init__(self, problem: LpProblem, tol: float):
        A, u, l = problem.constraint_matrix, problem.upper_bounds, problem.lower_bounds
        k, m = A.shape
        rng = u - l
        art_rows = []
        art_signs = []
        vstat = np.full(m + k, _AT_LO, dtype=np.int8)
        basis = np.empty(k, dtype=np.int64)
        for i in range(k):
            if 0.0 <= u[i] <= rng[i]:
                basis[i] = m + i  # slack basic at u[i]
                vstat[m + i] = _BASIC
            elif u[i] < 0.0:
                art_rows.append(i)
                art_signs.append(-1.0)  # slack pinned at 0
            else:  # l[i] > 0
                art_rows.append(i)
                art_signs.append(1.0)
                vstat[m + i] = _AT_HI  # slack pinned at its range width
        n_art = len(art_rows)
        T = np.zeros((k, m + k + n_art))
        T[:, :m] = A
        T[np.arange(k), m + np.arange(k)] = 1.0
        for a, (i, g) in enumerate(zip(art_rows, art_signs)):
            T[i, m + k + a] = g
            basis[i] = m + k + a
        self.T = T
        self.k, self.m = k, m
        self.n_total = m + k + n_art
        self.n_art = n_art
        self.lo = np.zeros(self.n_total)
        self.hi = np.concatenate([np.full(m, np.inf), rng, np.full(n_art, np.inf)])
        self.vstat = np.concatenate([vstat, np.full(n_art, _BASIC, dtype=np.int8)])
        self.basis = basis
        self.rhs = u
        self.tol = tol
        self.frozen = np.zeros(self.n_total, dtype=bool)
        self.Binv = None
        self.xB = None
        self.refactor()

    def refactor(self):
        B = self.T[:, self.basis]
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:  # basis kept invertible by pivot rule
            raise NumericalError("singular simplex basis") from exc
        self.xB = self.Binv @ self._effective_rhs()

    def _effective_rhs(self) -> np.ndarray:
        at_hi = np.flatnonzero(self.vstat == _AT_HI)
        b = self.rhs.copy()
        if at_hi.size:
            b -= self.T[:, at_hi] @ self.hi[at_hi]
        return b

    def nonbasic_values(self) -> np.ndarray:
        x = np.where(self.vstat == _AT_HI, self.hi, self.lo)
        x[self.basis] = self.xB
        return x

    def duals(self, c: np.ndarray) -> np.ndarray:
        return c[self.basis] @ self.Binv

    def run(self, c: np.ndarray, max_iters: int) -> tuple[str, int]:
        """Iterate to optimality for cost vector c. Returns (status, iterations)."""
        tol = self.tol
        iters = 0
        degenerate_run = 0
        bland = False
        since_refactor = 0
        while iters < max_iters:
            y = c[self.basis] @ self.Binv
            d = c - y @ self.T
            at_lo = self.vstat == _AT_LO
            at_hi = self.vstat == _AT_HI
            movable = ~self.frozen & (self.hi - self.lo > 0)
            viol = np.where(at_lo & movable, -d, 0.0) + np.where(at_hi & movable, d, 0.0)
            candidates = np.flatnonzero(viol > tol)
            if candidates.size == 0:
                return "optimal", iters
            if bland:
                e = int(candidates[0])
            else:
                e = int(candidates[np.argmax(viol[candidates])])
            sigma = 1.0 if self.vstat[e] == _AT_LO else -1.0
            w = self.Binv @ self.T[:, e]
            move = sigma * w
            lo_b, hi_b = self.lo[self.basis], self.hi[self.basis]
            with np.errstate(divide="ignore", invalid="ignore"):
                dec = np.where(move > tol, (self.xB - lo_b) / np.where(move > tol, move, 1.0), np.inf)
                inc = np.where(move < -tol, (hi_b - self.xB) / np.where(move < -tol, -move, 1.0), np.inf)
            limits = np.minimum(dec, inc)
            limits = np.maximum(limits, 0.0)  # degenerate bases can sit slightly past a bound
            t_basic = limits.min() if limits.size else np.inf
            t_own = self.hi[e] - self.lo[e]
            step = min(t_basic, t_own)
            if not np.isfinite(step):
                return "unbounded", iters
            iters += 1
            if step <= tol:
                degenerate_run += 1
                if degenerate_run > _DEGENERATE_RUN_LIMIT:
                    bland = True
            else:
                degenerate_run = 0
                bland = False
            if t_own < t_basic - tol:
                # bound flip: entering variable crosses to its other bound
                self.vstat[e] = _AT_HI if self.vstat[e] == _AT_LO else _AT_LO
                self.xB = self.xB - move * step
                since_refactor += 1
            else:
                tied = np.flatnonzero(limits <= step + tol)
                if tied.size == 0:
                    tied = np.array([int(np.argmin(limits))])
                r = int(tied[np.argmin(self.basis[tied])])
                leaving = int(self.basis[r])
                # leaving lands on whichever of its bounds the ratio test hit
                leaves_to_hi = move[r] < 0
                self.xB = self.xB - move * step
                entering_value = (self.lo[e] if sigma > 0 else self.hi[e]) + sigma * step
                pivot = w[r]
                if abs(pivot) < 1e-12:
                    self.refactor()
                    w = self.Binv @ self.T[:, e]
                    pivot = w[r]
                    if abs(pivot) < 1e-12:
                        raise NumericalError("zero pivot in simplex update")
                prow = self.Binv[r] / pivot
                self.Binv -= np.outer(w, prow)
                self.Binv[r] = prow
                self.basis[r] = e
                self.xB[r] = entering_value
                self.vstat[e] = _BASIC
                self.vstat[leaving] = _AT_HI if leaves_to_hi else _AT_LO
                if leaving >= self.m + self.k:
                    self.frozen[leaving] = True  # artificial never re-enters
                since_refactor += 1
            if since_refactor >= _REFACTOR_EVERY:
                self.refactor()
                since_refactor = 0
        return "iteration-limit", iters


def solve_lp(problem: LpProblem, tol: float = DEFAULT_LP_TOL, max_iters: int | None = None) -> LpSolution:
    """Solve the LP to a certified vertex optimum.

    Returns statuses instead of raising for infeasible/unbounded/capped runs.
    On an optimal solve the net row duals (positive when the lower bound
    binds) and the primal-dual gap are attached to the solution.
    """
    k, m = problem.num_rows, problem.num_vars
    if max_iters is None:
        max_iters = 50 * (m + k)
    tab = _Tableau(problem, tol)
    total_iters = 0
    if tab.n_art:
        c1 = np.zeros(tab.n_total)
        c1[m + k:] = 1.0
        status, it = tab.run(c1, max_iters)
        total_iters += it
        if status == "iteration-limit":
            return _finish(problem, tab, LpStatus.ITERATION_LIMIT, total_iters)
        art_level = float(c1 @ tab.nonbasic_values())
        if art_level > max(tol, tol * np.abs(problem.upper_bounds).sum()) * 10:
            return _finish(problem, tab, LpStatus.INFEASIBLE, total_iters)
        tab.hi[m + k:] = 0.0  # pin artificials for phase 2
        tab.frozen[m + k:] = True
    c2 = np.zeros(tab.n_total)
    c2[:m] = problem.objective
    status, it = tab.run(c2, max_iters)
    total_iters += it
    mapping = {
        "optimal": LpStatus.OPTIMAL,
        "unbounded": LpStatus.UNBOUNDED,
        "iteration-limit": LpStatus.ITERATION_LIMIT,
    }
    return _finish(problem, tab, mapping[status], total_iters, cost=c2)


def _finish(problem, tab, status, iterations, cost=None) -> LpSolution:
    x = tab.nonbasic_values()
    z = x[: tab.m].copy()
    z[np.abs(z) < tab.tol] = 0.0
    obj = float(problem.objective @ z)
    duals = None
    gap = np.inf
    if status is LpStatus.OPTIMAL and cost is not None:
        y = tab.duals(cost)
        duals = y.copy()
        dual_obj = float(
            problem.lower_bounds @ np.maximum(y, 0.0)
            - problem.upper_bounds @ np.maximum(-y, 0.0)
        )
        gap = obj - dual_obj
        scale = 1.0 + abs(obj)
        if abs(gap) > 1e3 * tab.tol * scale:
            raise NumericalError(f"optimality gap {gap:.3e} exceeds certificate tolerance")
    return LpSolution(z=z, objective_value=obj, status=status, iterations=iterations,
                      duals=duals, gap=gap)


def feasibility_residual(problem: LpProblem, z: np.ndarray) -> float:
    """Largest violation of the row ranges and the z >= 0 bounds."""
    act = problem.constraint_matrix @ z
    row = np.maximum(problem.lower_bounds - act, act - problem.upper_bounds)
    return float(max(row.max(initial=0.0), (-z).max(initial=0.0), 0.0))


def dantzig_lp_reformulation(design: DesignMatrix, y: np.ndarray, bounds: np.ndarray) -> LpProblem:
    """Rewrite min ||beta||_1 s.t. |n^-1 X'(y - X beta)| <= bounds as an LP.

    The coefficient vector splits as beta = u - v with u, v >= 0, giving 2p
    variables with objective sum(u + v) and one range row per coordinate:
    c - b <= G(u - v) <= c + b where G = n^-1 X'X and c = n^-1 X'y.
    """
    if not design.column_scaled:
        raise DataError("design must be column_scaled before the Dantzig reformulation")
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (design.n,):
        raise DataError(f"response length {y.shape} != design rows {design.n}")
    b = np.asarray(bounds, dtype=np.float64)
    if b.shape != (design.p,):
        raise DataError(f"bounds length {b.shape} != design columns {design.p}")
    if np.any(b < 0):
        raise DataError("bounds must be nonnegative")
    X = design.values
    G = X.T @ X / design.n
    c = X.T @ y / design.n
    A = np.hstack([G, -G])
    return LpProblem(
        objective=np.ones(2 * design.p),
        constraint_matrix=A,
        lower_bounds=c - b,
        upper_bounds=c + b,
    )


def repair_split(z: np.ndarray) -> np.ndarray:
    """Cancel shared mass between the u/v halves of a split solution.

    Keeps beta = u - v and feasibility intact while restoring the minimal-L1
    representation (min(u_j, v_j) = 0 for all j).
    """
    m = z.size // 2
    u, v = z[:m].copy(), z[m:].copy()
    t = np.minimum(u, v)
    return np.concatenate([u - t, v - t])


def beta_from_split(z: np.ndarray) -> np.ndarray:
    m = z.size // 2
    return z[:m] - z[m:]
