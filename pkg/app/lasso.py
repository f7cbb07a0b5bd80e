"""LASSO regression by cyclic coordinate descent with time-ordered cross-validation.

The design is standardized with the population std before fitting and the
solution is mapped back to the original feature scale. Columns with zero
variance cannot be standardized; they are dropped with a warning and carry a
coefficient of exactly 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from app.core.errors import DegenerateTarget, MissingFeature, NotConverged, SeriesMismatch
from app.core.models import FeatureMatrix, LassoModel, ReturnSeries
from app.logger import log_debug, log_warning


@dataclass(frozen=True)
class _Design:
    columns: tuple[str, ...]
    z: np.ndarray          # standardized kept columns (n x kept)
    yc: np.ndarray         # centered target
    y_mean: float
    means: np.ndarray      # per original column
    stds: np.ndarray       # per original column, 0 for dropped columns
    keep: np.ndarray       # bool mask over original columns

    @property
    def n(self) -> int:
        return len(self.yc)

    @property
    def dropped(self) -> tuple[str, ...]:
        return tuple(name for name, kept in zip(self.columns, self.keep) if not kept)


@dataclass(frozen=True)
class LassoCvResult:
    best_lambda: float
    model: LassoModel
    lambdas: tuple[float, ...]
    cv_mse: tuple[float, ...]
    folds: int
    seed: int


def _check_aligned(x: FeatureMatrix, y: ReturnSeries) -> None:
    if x.shape[0] != len(y):
        raise SeriesMismatch(f"X has {x.shape[0]} rows but y has {len(y)}")
    if x.dates != y.dates:
        raise SeriesMismatch("X and y are not aligned on the same dates")
    if len(y) < 2:
        raise ValueError("LASSO needs at least two observations")


def _prepare(
    values: np.ndarray,
    target: np.ndarray,
    columns: Sequence[str],
    *,
    warn: bool = True,
) -> _Design:
    means = values.mean(axis=0)
    stds = values.std(axis=0)
    keep = np.ptp(values, axis=0) > 0
    stds = np.where(keep, stds, 0.0)
    z = (values[:, keep] - means[keep]) / stds[keep]
    y_mean = float(target.mean())
    design = _Design(
        columns=tuple(columns),
        z=z,
        yc=target - y_mean,
        y_mean=y_mean,
        means=means,
        stds=stds,
        keep=keep,
    )
    if warn and design.dropped:
        log_warning(
            "lasso",
            f"zero_variance_features_dropped: count={len(design.dropped)} "
            f"features='{','.join(design.dropped)}'",
        )
    return design


def _objective(design: _Design, beta: np.ndarray, lam: float) -> float:
    residual = design.yc - design.z @ beta
    return float(residual @ residual / (2 * design.n) + lam * np.abs(beta).sum())


def _soft_threshold(value: float, threshold: float) -> float:
    if value > threshold:
        return value - threshold
    if value < -threshold:
        return value + threshold
    return 0.0


def _coordinate_descent(
    design: _Design,
    lam: float,
    beta: np.ndarray,
    tol: float,
    max_iter: int,
) -> tuple[np.ndarray, int, bool, list[float]]:
    n = design.n
    z = design.z
    beta = beta.copy()
    residual = design.yc - z @ beta
    column_norms = (z * z).sum(axis=0) / n
    objective_path = [_objective(design, beta, lam)]

    sweeps = 0
    converged = False
    for sweeps in range(1, max_iter + 1):
        max_change = 0.0
        for j in range(z.shape[1]):
            old = beta[j]
            rho = float(z[:, j] @ residual) / n + column_norms[j] * old
            new = _soft_threshold(rho, lam) / column_norms[j]
            if new != old:
                residual -= z[:, j] * (new - old)
                beta[j] = new
                max_change = max(max_change, abs(new - old))
        objective_path.append(_objective(design, beta, lam))
        if max_change < tol:
            converged = True
            break

    return beta, sweeps, converged, objective_path


def _to_model(
    design: _Design,
    lam: float,
    beta: np.ndarray,
    n_iter: int,
    converged: bool,
    objective_path: list[float],
) -> LassoModel:
    coefficients = np.zeros(len(design.columns))
    coefficients[design.keep] = beta / design.stds[design.keep]
    intercept = design.y_mean - float(coefficients @ design.means)
    return LassoModel(
        coefficients={
            name: float(value) for name, value in zip(design.columns, coefficients)
        },
        intercept=intercept,
        lam=float(lam),
        standardization={
            name: (float(mean), float(std))
            for name, mean, std in zip(design.columns, design.means, design.stds)
        },
        converged=converged,
        n_iter=n_iter,
        objective_path=tuple(objective_path),
        dropped_features=design.dropped,
    )


def _solve(
    design: _Design,
    lam: float,
    tol: float,
    max_iter: int,
    *,
    warm_start: np.ndarray | None = None,
    strict: bool = False,
) -> tuple[LassoModel, np.ndarray]:
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    if tol <= 0 or max_iter < 1:
        raise ValueError("tol must be > 0 and max_iter >= 1")
    start = np.zeros(design.z.shape[1]) if warm_start is None else warm_start
    beta, sweeps, converged, path = _coordinate_descent(design, lam, start, tol, max_iter)
    if not converged:
        if strict:
            raise NotConverged(sweeps, f"lambda={lam!r} tol={tol!r}")
        log_warning("lasso", f"not_converged: lambda={lam!r} sweeps={sweeps} tol={tol!r}")
    return _to_model(design, lam, beta, sweeps, converged, path), beta


def lambda_max(x: FeatureMatrix, y: ReturnSeries) -> float:
    """Smallest penalty at which every coefficient is zero: ``max_j |<z_j, yc>| / n``."""
    _check_aligned(x, y)
    if np.ptp(y.returns) == 0:
        raise DegenerateTarget("target is constant")
    design = _prepare(x.values, y.returns, x.columns, warn=False)
    if design.z.shape[1] == 0:
        return 0.0
    return float(np.max(np.abs(design.z.T @ design.yc)) / design.n)


def fit_lasso(
    x: FeatureMatrix,
    y: ReturnSeries,
    lam: float,
    tol: float = 1e-10,
    max_iter: int = 100000,
    *,
    strict: bool = False,
) -> LassoModel:
    """Minimize ``(1/2n)||yc - Z b||^2 + lam ||b||_1`` on the standardized design.

    Running out of sweeps returns a model flagged ``converged=False``;
    ``strict`` raises ``NotConverged`` instead.
    """
    _check_aligned(x, y)
    design = _prepare(x.values, y.returns, x.columns)
    model, _ = _solve(design, lam, tol, max_iter, strict=strict)
    return model


def lasso_path(
    x: FeatureMatrix,
    y: ReturnSeries,
    lambdas: Iterable[float],
    tol: float = 1e-10,
    max_iter: int = 100000,
) -> list[LassoModel]:
    """Models along a descending grid, each warm-started from the previous one."""
    _check_aligned(x, y)
    grid = sorted(set(float(lam) for lam in lambdas), reverse=True)
    if not grid:
        raise ValueError("lambda grid must be non-empty")
    design = _prepare(x.values, y.returns, x.columns)
    models = []
    beta = None
    for lam in grid:
        model, beta = _solve(design, lam, tol, max_iter, warm_start=beta)
        models.append(model)
    return models


def lambda_grid(
    x: FeatureMatrix,
    y: ReturnSeries,
    n_lambdas: int = 50,
    min_ratio: float = 1e-3,
) -> tuple[float, ...]:
    """Geometric grid from ``lambda_max`` down to ``lambda_max * min_ratio``."""
    if n_lambdas < 1 or not 0 < min_ratio < 1:
        raise ValueError("n_lambdas must be >= 1 and min_ratio in (0, 1)")
    top = lambda_max(x, y)
    if top == 0.0:
        return (0.0,)
    return tuple(float(lam) for lam in np.geomspace(top, top * min_ratio, n_lambdas))


def predict_linear(model: LassoModel, x: FeatureMatrix) -> np.ndarray:
    missing = [name for name in model.features if name not in x.columns]
    if missing:
        raise MissingFeature(f"features missing from X: {missing}")
    prediction = np.full(x.shape[0], model.intercept)
    for name, coefficient in model.coefficients.items():
        if coefficient != 0.0:
            prediction = prediction + coefficient * x.column(name)
    return prediction


def cv_lasso(
    x: FeatureMatrix,
    y: ReturnSeries,
    lambdas: Iterable[float] | None = None,
    k: int = 5,
    seed: int = 0,
    *,
    n_lambdas: int = 50,
    lambda_min_ratio: float = 1e-3,
    tol: float = 1e-10,
    max_iter: int = 100000,
) -> LassoCvResult:
    """Contiguous-block k-fold CV over a descending grid; refit at the best lambda.

    Folds follow time order and involve no randomness; ``seed`` is recorded so
    the result carries the stage seed it was run under. Equal validation
    errors resolve to the larger lambda.
    """
    _check_aligned(x, y)
    n = len(y)
    if k < 2:
        raise ValueError("k must be >= 2")
    if n < k:
        raise ValueError(f"{n} observations cannot fill {k} folds")

    if lambdas is None:
        grid = lambda_grid(x, y, n_lambdas, lambda_min_ratio)
    else:
        grid = tuple(sorted(set(float(lam) for lam in lambdas), reverse=True))
    if not grid:
        raise ValueError("lambda grid must be non-empty")

    fold_mse = np.zeros((k, len(grid)))
    for fold, validation in enumerate(np.array_split(np.arange(n), k)):
        train = np.setdiff1d(np.arange(n), validation)
        design = _prepare(x.values[train], y.returns[train], x.columns, warn=False)
        held_out = x.select_rows(validation)
        beta = None
        for i, lam in enumerate(grid):
            model, beta = _solve(design, lam, tol, max_iter, warm_start=beta)
            residual = y.returns[validation] - predict_linear(model, held_out)
            fold_mse[fold, i] = float(residual @ residual) / len(validation)
        log_debug("lasso", f"cv_fold_done: fold={fold} train={len(train)} valid={len(validation)}")

    cv_mse = fold_mse.mean(axis=0)
    best = 0
    for i in range(1, len(grid)):
        if cv_mse[i] < cv_mse[best]:
            best = i

    model = fit_lasso(x, y, grid[best], tol, max_iter)
    return LassoCvResult(
        best_lambda=grid[best],
        model=model,
        lambdas=grid,
        cv_mse=tuple(float(value) for value in cv_mse),
        folds=k,
        seed=seed,
    )
