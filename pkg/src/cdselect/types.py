"""Shared numerical data model: design matrices, problems, estimates, configs.

All containers are plain dataclasses over float64 numpy arrays. They are
treated as immutable after construction; anything that needs a variant
builds a new instance.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

COLUMN_NORM_RTOL = 1e-8


class CdsError(Exception):
    """Base class for errors raised by this package."""


class DataError(CdsError):
    """Invalid or degenerate input data (bad shapes, constant columns, ...)."""


class ConfigError(CdsError):
    """Invalid configuration (rejected at construction)."""


class NumericalError(CdsError):
    """A numerical routine failed in a way that should never happen."""


class EnumerationBudgetError(CdsError):
    """Subset enumeration would exceed the configured budget."""


def _as_float_vector(x, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise DataError(f"{name} must be one-dimensional, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise DataError(f"{name} contains non-finite entries")
    return v


@dataclass
class DesignMatrix:
    """Dense n-by-p design with per-column scale metadata.

    ``scales`` holds the multiplier applied to each raw column (scaled =
    raw * scale), so coefficients in scaled units map back to raw units via
    ``beta_raw = beta_scaled * scales``. ``centers`` is set when columns
    were centered before scaling.
    """

    values: np.ndarray
    column_scaled: bool = False
    scales: np.ndarray | None = None
    centers: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise DataError(f"design must be a matrix, got shape {self.values.shape}")
        n, p = self.values.shape
        if n < 1 or p < 1:
            raise DataError(f"design needs n >= 1 and p >= 1, got {n}x{p}")
        if not np.all(np.isfinite(self.values)):
            raise DataError("design contains non-finite entries")
        if self.column_scaled:
            norms = np.linalg.norm(self.values, axis=0)
            root_n = np.sqrt(n)
            bad = np.flatnonzero(np.abs(norms - root_n) > COLUMN_NORM_RTOL * root_n)
            if bad.size:
                raise DataError(
                    f"column_scaled is set but column {bad[0]} has norm "
                    f"{norms[bad[0]]:.12g}, expected sqrt(n) = {root_n:.12g}"
                )

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


def rescale_columns(design: DesignMatrix, center: bool = False) -> DesignMatrix:
    """Rescale every column to L2-norm sqrt(n), optionally centering first.

    Idempotent up to floating noise. Raises :class:`DataError` naming the
    offending column when a (centered) column has zero norm.
    """
    X = design.values
    n = design.n
    centers = None
    if center:
        centers = X.mean(axis=0)
        X = X - centers
        if design.centers is not None:
            centers = design.centers + centers
    norms = np.linalg.norm(X, axis=0)
    zero = np.flatnonzero(norms <= 0.0)
    if zero.size:
        kind = "constant" if center else "zero-norm"
        raise DataError(f"cannot rescale {kind} column {zero[0]}")
    factors = np.sqrt(n) / norms
    scales = factors if design.scales is None else design.scales * factors
    if not center and design.centers is not None:
        centers = design.centers
    return DesignMatrix(
        values=X * factors,
        column_scaled=True,
        scales=scales,
        centers=centers,
    )


def standardize_response(y) -> tuple[np.ndarray, float, float]:
    """Center and scale a response to mean 0, variance 1 (population n convention).

    Returns ``(standardized, mean, sd)`` so the transform can be inverted.
    """
    v = _as_float_vector(y, "response")
    if v.size < 2:
        raise DataError("response standardization needs length >= 2")
    mean = float(v.mean())
    sd = float(np.sqrt(np.mean((v - mean) ** 2)))
    if sd <= 0.0:
        raise DataError("cannot standardize a constant response")
    return (v - mean) / sd, mean, sd


@dataclass
class TrueModel:
    """Ground-truth coefficients with their support and noise level."""

    beta0: np.ndarray
    sigma: float = 0.0
    support: np.ndarray = field(init=False)
    s: int = field(init=False)

    def __post_init__(self):
        self.beta0 = _as_float_vector(self.beta0, "beta0")
        if self.sigma < 0:
            raise DataError(f"sigma must be >= 0, got {self.sigma}")
        self.support = np.flatnonzero(self.beta0)
        self.s = int(self.support.size)


@dataclass
class RegressionProblem:
    """A design matrix, response vector, and optional ground truth."""

    design: DesignMatrix
    response: np.ndarray
    truth: TrueModel | None = None

    def __post_init__(self):
        self.response = _as_float_vector(self.response, "response")
        if self.response.size != self.design.n:
            raise DataError(
                f"response length {self.response.size} != design rows {self.design.n}"
            )
        if self.truth is not None and self.truth.beta0.size != self.design.p:
            raise DataError(
                f"truth length {self.truth.beta0.size} != design columns {self.design.p}"
            )
        self._xty = None

    @property
    def n(self) -> int:
        return self.design.n

    @property
    def p(self) -> int:
        return self.design.p

    @property
    def xty(self) -> np.ndarray:
        if self._xty is None:
            self._xty = self.design.values.T @ self.response / self.n
        return self._xty

    @property
    def lambda_max(self) -> float:
        """Head of the lambda1 grid: max absolute residual correlation at beta = 0."""
        return float(np.max(np.abs(self.xty)))

    def residual_correlations(self, beta: np.ndarray | None = None) -> np.ndarray:
        """n^-1 X'(y - X beta), the correlation vector the Dantzig constraints bound."""
        if beta is None:
            return self.xty.copy()
        X = self.design.values
        nnz = np.flatnonzero(beta)
        if nnz.size == 0:
            return self.xty.copy()
        # restrict the first product to the support; the second is inherently dense
        fitted = X[:, nnz] @ beta[nnz]
        return (X.T @ (self.response - fitted)) / self.n


@dataclass
class CdsConfig:
    """Regularization triple plus solver tolerances and iteration caps.

    ``lambda0`` bounds residual correlations on the support, entries of
    ``lambda1_grid`` bound them off support, and ``lam`` is the minimum
    magnitude a nonzero coefficient must reach (the constrained space).
    """

    lambda0: float
    lam: float
    lambda1_grid: np.ndarray
    cv_folds: int = 5
    max_active_iters: int = 100
    feas_tol: float = 1e-8
    lp_tol: float = 1e-9

    def __post_init__(self):
        self.lambda1_grid = _as_float_vector(np.atleast_1d(self.lambda1_grid), "lambda1_grid")
        if self.lambda0 < 0:
            raise ConfigError(f"lambda0 must be >= 0, got {self.lambda0}")
        if self.lam < 0:
            raise ConfigError(f"lam must be >= 0, got {self.lam}")
        if np.any(self.lambda1_grid <= 0):
            raise ConfigError("lambda1_grid entries must be positive")
        if self.lambda1_grid.size > 1 and np.any(np.diff(self.lambda1_grid) >= 0):
            raise ConfigError("lambda1_grid must be strictly decreasing")
        if self.lambda0 > float(self.lambda1_grid[-1]):
            raise ConfigError(
                f"lambda0 = {self.lambda0} exceeds the smallest grid value "
                f"{self.lambda1_grid[-1]}; the method assumes lambda0 <= lambda1"
            )
        if self.cv_folds < 2:
            raise ConfigError(f"cv_folds must be >= 2, got {self.cv_folds}")
        if self.max_active_iters < 1:
            raise ConfigError("max_active_iters must be >= 1")
        if self.feas_tol <= 0 or self.lp_tol <= 0:
            raise ConfigError("tolerances must be positive")


@dataclass
class SparseEstimate:
    """A coefficient vector with exact-zero off-support entries and run diagnostics."""

    beta: np.ndarray
    iterations: int = 0
    converged: bool = True
    feasibility_residual: float = 0.0
    support: np.ndarray = field(init=False)
    l1_norm: float = field(init=False)

    def __post_init__(self):
        self.beta = _as_float_vector(self.beta, "beta")
        self.support = np.flatnonzero(self.beta)
        self.l1_norm = float(np.abs(self.beta).sum())


def snap_small(beta: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Copy beta with entries below tol in magnitude stored as literal 0.0."""
    out = np.asarray(beta, dtype=np.float64).copy()
    out[np.abs(out) < tol] = 0.0
    return out


def in_constrained_space(beta: np.ndarray, lam: float) -> bool:
    """True iff every entry is exactly zero or at least lam in magnitude."""
    nz = beta[beta != 0.0]
    return bool(np.all(np.abs(nz) >= lam))


class StopReason(enum.Enum):
    GRID_EXHAUSTED = "grid-exhausted"
    LEFT_B_LAMBDA = "left-B-lambda"
    ITERATION_CAP = "iteration-cap"


@dataclass
class SolutionPath:
    """Estimates along a strictly decreasing lambda1 grid, with early-stop marker."""

    entries: list[tuple[float, SparseEstimate]]
    stopped_early: bool = False
    stop_reason: StopReason = StopReason.GRID_EXHAUSTED
    annotations: dict | None = None

    def __post_init__(self):
        lam1 = [lv for lv, _ in self.entries]
        if any(b >= a for a, b in zip(lam1, lam1[1:])):
            raise DataError("path lambda1 values must be strictly decreasing")

    @property
    def lambda1_values(self) -> np.ndarray:
        return np.array([lv for lv, _ in self.entries])

    def estimate_at(self, lambda1: float) -> SparseEstimate | None:
        for lv, est in self.entries:
            if lv == lambda1:
                return est
        return None
