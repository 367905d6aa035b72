"""Sparse regression of derivatives onto the candidate library.

Solves dX = Theta(X) Xi column by column.  The workhorse is sequential
thresholded least squares: start from the full least-squares solution,
zero every coefficient below the threshold, re-solve restricted to the
survivors, and repeat until the support stops changing.  Ordinary least
squares and coordinate-descent LASSO are provided as baselines.
"""

from __future__ import annotations

import json
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError
from .library import LibraryMatrix, LibrarySpec, build_matrix, enumerate_terms
from .model import Mode, SparseModel, TimeSeriesDataset, default_state_names

__all__ = [
    "StlsqConfig",
    "LassoConfig",
    "FitReport",
    "least_squares",
    "stlsq",
    "lasso_cd",
    "fit",
]


@dataclass(frozen=True)
class StlsqConfig:
    """Threshold, iteration cap and convergence policy for the
    threshold/re-solve loop.

    ``convergence="support_stable"`` stops as soon as thresholding removes
    nothing; ``"fixed_iterations"`` runs the full iteration count like the
    classic ten-pass loop (extra passes past a stable support are no-ops
    and are skipped without changing the result).
    """

    threshold: float
    max_iterations: int = 10
    convergence: str = "support_stable"

    def __post_init__(self) -> None:
        if self.threshold < 0:
            raise ConfigError("threshold must be nonnegative")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be at least 1")
        if self.convergence not in ("support_stable", "fixed_iterations"):
            raise ConfigError(f"unknown convergence policy {self.convergence!r}")


@dataclass(frozen=True)
class LassoConfig:
    """L1 weight and stopping rule for coordinate descent."""

    lambda1: float
    tol: float = 1e-10
    max_sweeps: int = 10_000

    def __post_init__(self) -> None:
        if self.lambda1 < 0:
            raise ConfigError("lambda1 must be nonnegative")
        if self.tol <= 0:
            raise ConfigError("tol must be positive")
        if self.max_sweeps < 1:
            raise ConfigError("max_sweeps must be at least 1")


@dataclass
class FitReport:
    """Per-equation diagnostics of a fit."""

    iterations_used: list[int] = field(default_factory=list)
    residual_norm: list[float] = field(default_factory=list)
    nnz: list[int] = field(default_factory=list)
    condition_estimate: list[float | None] = field(default_factory=list)
    converged: list[bool] = field(default_factory=list)
    empty_support: list[bool] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2)


def least_squares(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Minimum-norm least-squares solution of A xi = b.

    Singular values below max(m, p) * eps * sigma_max are treated as zero,
    pinning the rank cutoff that a backslash-style solve leaves to the
    environment.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or A.size == 0:
        raise DataError("least_squares needs a nonempty 2-d matrix")
    rcond = max(A.shape) * np.finfo(float).eps
    xi, *_ = np.linalg.lstsq(A, b, rcond=rcond)
    return xi


def _stlsq_column(Theta: np.ndarray, y: np.ndarray, cfg: StlsqConfig):
    """One equation of the threshold/re-solve loop.

    Returns (xi, iterations, converged, empty, active_mask).  The active
    set can only shrink: thresholding removes columns and the re-solve is
    restricted to survivors.
    """
    p = Theta.shape[1]
    xi = least_squares(Theta, y)
    active = np.ones(p, dtype=bool)
    iterations = 0
    for _ in range(cfg.max_iterations):
        iterations += 1
        keep = active & (np.abs(xi) >= cfg.threshold)
        if not keep.any():
            return np.zeros(p), iterations, True, True, keep
        if np.array_equal(keep, active):
            # fixed point: a re-solve on the same support reproduces xi
            return xi, iterations, True, False, active
        active = keep
        xi = np.zeros(p)
        xi[active] = least_squares(Theta[:, active], y)
    return xi, iterations, False, False, active


def stlsq(
    Theta: LibraryMatrix | np.ndarray,
    dX: np.ndarray,
    cfg: StlsqConfig,
    state_names: tuple[str, ...] | None = None,
    mode: Mode = Mode.CONTINUOUS,
) -> tuple[SparseModel, FitReport]:
    """Sequential thresholded least squares, independently per equation.

    All returned nonzeros satisfy |xi| >= threshold except when an
    iteration empties a support entirely, in which case that column is
    returned as zero and flagged in the report.

    A raw matrix may be passed in place of an evaluated library; its
    columns are then labelled as plain linear terms of the regressor
    variables, which only coincide with the model's own states when the
    regressors are the state data itself.
    """
    if isinstance(Theta, LibraryMatrix):
        terms, values = Theta.terms, Theta.values
    else:
        # raw matrix: label columns as plain linear terms
        values = np.asarray(Theta, dtype=float)
        terms = enumerate_terms(
            LibrarySpec(n_states=values.shape[1], poly_order=1, include_constant=False))
    dX = np.asarray(dX, dtype=float)
    if dX.ndim == 1:
        dX = dX.reshape(-1, 1)
    if dX.shape[0] != values.shape[0]:
        raise DataError("Theta and dX must have the same number of rows")
    n = dX.shape[1]
    names = tuple(state_names) if state_names else default_state_names(n)

    def solve(k: int):
        return _stlsq_column(values, dX[:, k], cfg)

    threads = _n_threads()
    if threads > 1 and n > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(solve, range(n)))
    else:
        results = [solve(k) for k in range(n)]

    coef = np.column_stack([r[0] for r in results])
    report = FitReport()
    for k, (xi, iters, conv, empty, active) in enumerate(results):
        report.iterations_used.append(iters)
        report.residual_norm.append(float(np.linalg.norm(values @ xi - dX[:, k])))
        report.nnz.append(int(np.count_nonzero(xi)))
        if active.any():
            report.condition_estimate.append(float(np.linalg.cond(values[:, active])))
        else:
            report.condition_estimate.append(None)
        report.converged.append(bool(conv))
        report.empty_support.append(bool(empty))
    model = SparseModel(terms=terms, coefficients=coef, state_names=names, mode=mode)
    return model, report


def _soft_threshold(z: float, t: float) -> float:
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


def lasso_cd(Theta: LibraryMatrix | np.ndarray, y: np.ndarray, cfg: LassoConfig) -> np.ndarray:
    """Cyclic coordinate descent for ||Theta xi - y||^2 + lambda1 ||xi||_1.

    Columns are scaled to unit norm internally and the scaling is undone
    on return; a coordinate dies when |a^T r| <= lambda1 / 2.  Stops when
    the largest coefficient change in a sweep drops below ``tol``; warns
    and returns the best iterate if ``max_sweeps`` is exhausted first.
    """
    A = Theta.values if isinstance(Theta, LibraryMatrix) else np.asarray(Theta, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if A.ndim != 2 or A.shape[0] != y.shape[0]:
        raise DataError("Theta and y must have matching rows")
    norms = np.linalg.norm(A, axis=0)
    live = norms > 0
    An = np.where(live, norms, 1.0)
    A = A / An
    p = A.shape[1]
    xi = np.zeros(p)
    r = y.copy()
    half = cfg.lambda1 / 2.0
    for _ in range(cfg.max_sweeps):
        delta = 0.0
        for j in range(p):
            if not live[j]:
                continue
            old = xi[j]
            rho = A[:, j] @ r + old  # unit-norm column: a^T a = 1
            new = _soft_threshold(rho, half)
            if new != old:
                r += A[:, j] * (old - new)
                xi[j] = new
                delta = max(delta, abs(new - old))
        if delta < cfg.tol:
            break
    else:
        warnings.warn("lasso_cd: not converged within max_sweeps, returning best iterate")
    return xi / An


def fit(
    dataset: TimeSeriesDataset,
    spec: LibrarySpec,
    cfg: StlsqConfig | LassoConfig,
    mode: Mode = Mode.CONTINUOUS,
) -> tuple[SparseModel, FitReport]:
    """Fit an identified model to a dataset.

    Continuous mode regresses the stored derivatives onto the library;
    discrete mode regresses next states onto the library of current
    states, pairing samples within each trajectory segment so that no
    derivative is ever computed.
    """
    if spec.n_states != dataset.n_states:
        raise ConfigError(
            f"library expects {spec.n_states} states, dataset has {dataset.n_states}")
    if mode is Mode.CONTINUOUS:
        if dataset.derivatives is None:
            raise DataError(
                "continuous-time fit needs derivatives; compute them with "
                "the differentiation module (central_difference or tv_derivative)")
        X, target = dataset.states, dataset.derivatives
    else:
        if dataset.n_samples < 2:
            raise DataError("discrete-time fit needs at least two samples")
        firsts, nexts = [], []
        for sl in dataset.segment_slices():
            seg = dataset.states[sl]
            if seg.shape[0] >= 2:
                firsts.append(seg[:-1])
                nexts.append(seg[1:])
        if not firsts:
            raise DataError("no segment has two or more samples")
        X = np.vstack(firsts)
        target = np.vstack(nexts)
    if X.shape[0] <= spec.n_terms:
        raise DataError(
            f"{X.shape[0]} samples do not overdetermine {spec.n_terms} library terms")
    theta = build_matrix(spec, X)
    if isinstance(cfg, StlsqConfig):
        return stlsq(theta, target, cfg, state_names=dataset.state_names, mode=mode)
    coef = np.column_stack(
        [lasso_cd(theta, target[:, k], cfg) for k in range(target.shape[1])])
    model = SparseModel(
        terms=theta.terms, coefficients=coef, state_names=dataset.state_names, mode=mode)
    report = FitReport()
    for k in range(coef.shape[1]):
        xi = coef[:, k]
        report.iterations_used.append(0)
        report.residual_norm.append(float(np.linalg.norm(theta.values @ xi - target[:, k])))
        report.nnz.append(int(np.count_nonzero(xi)))
        active = xi != 0
        report.condition_estimate.append(
            float(np.linalg.cond(theta.values[:, active])) if active.any() else None)
        report.converged.append(True)
        report.empty_support.append(not active.any())
    return model, report


def _n_threads() -> int:
    try:
        return max(1, int(os.environ.get("SINDYKIT_THREADS", "1")))
    except ValueError:
        return 1
