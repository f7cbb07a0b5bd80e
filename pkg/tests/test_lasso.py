import datetime as dt

import numpy as np
import pytest
from scipy.linalg import hadamard

from app.core.errors import DegenerateTarget, MissingFeature, NotConverged, SeriesMismatch
from app.core.models import FeatureMatrix, ReturnSeries
from app.lasso import cv_lasso, fit_lasso, lambda_grid, lambda_max, lasso_path, predict_linear

START = dt.date(2019, 1, 1)


def _dates(n):
    return tuple(START + dt.timedelta(days=i) for i in range(n))


def _data(x, y, columns=None):
    x = np.asarray(x, dtype=float)
    columns = columns or tuple(f"f{j}" for j in range(x.shape[1]))
    dates = _dates(x.shape[0])
    return (
        FeatureMatrix(dates=dates, columns=columns, values=x),
        ReturnSeries(dates=dates, returns=np.asarray(y, dtype=float)),
    )


def _sample(seed=0, n=60, noise=0.0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, 5))
    y = 0.5 + 2.0 * x[:, 0] - 1.5 * x[:, 3] + noise * rng.standard_normal(n)
    return _data(x, y)


def _kkt_gaps(x: FeatureMatrix, y: ReturnSeries, model) -> list[float]:
    """Violation of the standardized-scale optimality conditions per kept column."""
    values = x.values
    n = values.shape[0]
    residual = y.returns - predict_linear(model, x)
    gaps = []
    for j, name in enumerate(x.columns):
        mean, std = model.standardization[name]
        if std == 0.0:
            continue
        z = (values[:, j] - mean) / std
        gradient = float(z @ residual) / n
        beta = model.coefficients[name] * std
        if beta == 0.0:
            gaps.append(max(0.0, abs(gradient) - model.lam))
        else:
            gaps.append(abs(gradient - model.lam * np.sign(beta)))
    return gaps


def test_fit_lasso_recovers_noiseless_coefficients_with_tiny_penalty():
    x, y = _sample()

    model = fit_lasso(x, y, lam=1e-8)

    assert model.converged
    assert model.coefficients["f0"] == pytest.approx(2.0, abs=1e-5)
    assert model.coefficients["f3"] == pytest.approx(-1.5, abs=1e-5)
    for name in ("f1", "f2", "f4"):
        assert model.coefficients[name] == pytest.approx(0.0, abs=1e-5)
    assert model.intercept == pytest.approx(0.5, abs=1e-5)


def test_fit_lasso_at_lambda_max_is_all_zero():
    x, y = _sample(noise=0.3)
    top = lambda_max(x, y)

    model = fit_lasso(x, y, lam=top * (1 + 1e-9))

    assert model.nonzero_count == 0
    assert model.intercept == pytest.approx(float(np.mean(y.returns)))
    assert fit_lasso(x, y, lam=top * 0.9).nonzero_count >= 1


def test_fit_lasso_satisfies_optimality_conditions():
    for seed in range(5):
        x, y = _sample(seed=seed, noise=0.5)
        lam = lambda_max(x, y) * 0.2

        model = fit_lasso(x, y, lam=lam, tol=1e-12)

        assert max(_kkt_gaps(x, y, model)) < 1e-6


def test_fit_lasso_objective_never_increases():
    x, y = _sample(seed=3, noise=0.5)

    model = fit_lasso(x, y, lam=0.05)

    path = np.array(model.objective_path)
    assert np.all(np.diff(path) <= 1e-12)


def test_fit_lasso_drops_zero_variance_columns():
    rng = np.random.default_rng(1)
    values = np.column_stack([rng.standard_normal(20), np.full(20, 3.0)])
    x, y = _data(values, 2.0 * values[:, 0], columns=("signal", "constant"))

    model = fit_lasso(x, y, lam=1e-6)

    assert model.dropped_features == ("constant",)
    assert model.coefficients["constant"] == 0.0
    assert model.standardization["constant"] == (3.0, 0.0)


def test_fit_lasso_flags_or_raises_on_non_convergence():
    x, y = _sample(noise=0.5)

    model = fit_lasso(x, y, lam=1e-4, tol=1e-14, max_iter=1)

    assert model.converged is False
    with pytest.raises(NotConverged):
        fit_lasso(x, y, lam=1e-4, tol=1e-14, max_iter=1, strict=True)


def test_lambda_max_rejects_constant_target_and_misaligned_inputs():
    x, _ = _sample()
    constant = ReturnSeries(dates=x.dates, returns=np.zeros(x.shape[0]))

    with pytest.raises(DegenerateTarget):
        lambda_max(x, constant)
    with pytest.raises(SeriesMismatch):
        lambda_max(x, ReturnSeries(dates=x.dates[:-1], returns=np.ones(x.shape[0] - 1)))


def test_lambda_grid_is_descending_geometric():
    x, y = _sample(noise=0.3)

    grid = lambda_grid(x, y, n_lambdas=10, min_ratio=0.01)

    assert len(grid) == 10
    assert grid[0] == pytest.approx(lambda_max(x, y))
    assert grid[-1] == pytest.approx(lambda_max(x, y) * 0.01)
    assert all(a > b for a, b in zip(grid, grid[1:]))


def test_lasso_path_support_grows_as_penalty_shrinks():
    x, y = _sample(noise=0.2)

    models = lasso_path(x, y, lambda_grid(x, y, n_lambdas=15))

    counts = [model.nonzero_count for model in models]
    assert all(abs(value) < 1e-9 for value in models[0].coefficients.values())
    assert counts[-1] >= 2
    assert [model.lam for model in models] == sorted((m.lam for m in models), reverse=True)


def test_predict_linear_requires_every_model_feature():
    x, y = _sample()
    model = fit_lasso(x, y, lam=0.01)
    narrower = FeatureMatrix(dates=x.dates, columns=("f0",), values=x.values[:, :1])

    with pytest.raises(MissingFeature):
        predict_linear(model, narrower)


def test_cv_lasso_selects_a_grid_value_and_refits_on_all_rows():
    x, y = _sample(seed=4, n=80, noise=0.3)

    result = cv_lasso(x, y, k=4, seed=17, n_lambdas=12)

    assert result.best_lambda in result.lambdas
    assert len(result.cv_mse) == 12
    assert result.cv_mse[result.lambdas.index(result.best_lambda)] == min(result.cv_mse)
    assert result.model.lam == result.best_lambda
    assert result.model.coefficients["f0"] > 1.0
    assert result.seed == 17
    assert result.folds == 4


def test_cv_lasso_is_deterministic_and_prefers_larger_lambda_on_ties():
    x, y = _sample(seed=5, noise=0.3)

    first = cv_lasso(x, y, lambdas=[10.0, 5.0], k=3)
    second = cv_lasso(x, y, lambdas=[5.0, 10.0], k=3)

    # both penalties exceed lambda_max, so every fold predicts the training mean
    assert first.cv_mse[0] == first.cv_mse[1]
    assert first.best_lambda == 10.0
    assert first.cv_mse == second.cv_mse
    assert first.model.coefficients == second.model.coefficients


def test_cv_lasso_needs_enough_rows():
    x, y = _sample(n=3)

    with pytest.raises(ValueError):
        cv_lasso(x, y, k=5)


def test_cv_lasso_averages_fold_errors_over_uneven_folds():
    y_values = np.array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 20.0])
    x, y = _data(np.arange(7.0).reshape(7, 1) ** 2, y_values)

    result = cv_lasso(x, y, lambdas=[1e6], k=3)

    # a penalty this large keeps every coefficient at zero, so each fold predicts its training mean
    fold_errors = []
    for validation in ([0, 1, 2], [3, 4], [5, 6]):
        train = np.setdiff1d(np.arange(7), validation)
        residual = y_values[validation] - y_values[train].mean()
        fold_errors.append(float(residual @ residual) / len(validation))
    assert result.cv_mse[0] == pytest.approx(np.mean(fold_errors), rel=1e-12)
    assert result.cv_mse[0] == pytest.approx(66.36305555555556, rel=1e-9)


def test_fit_lasso_satisfies_optimality_conditions_on_many_random_problems():
    rng = np.random.default_rng(404)
    for _ in range(100):
        n = int(rng.integers(20, 51))
        p = int(rng.integers(1, 11))
        values = rng.standard_normal((n, p))
        truth = rng.standard_normal(p) * (rng.random(p) < 0.5)
        x, y = _data(values, values @ truth + rng.standard_normal(n))
        lam = lambda_max(x, y) * float(rng.uniform(0.05, 0.95))

        model = fit_lasso(x, y, lam=lam, tol=1e-12)

        assert model.converged
        assert max(_kkt_gaps(x, y, model)) < 1e-6


def test_fit_lasso_soft_thresholds_an_orthonormal_design():
    # Hadamard columns other than the first have mean 0 and population std 1
    values = hadamard(8)[:, 1:6].astype(float)
    rng = np.random.default_rng(9)
    target = rng.standard_normal(8)
    x, y = _data(values, target)
    lam = lambda_max(x, y) * 0.4
    correlations = values.T @ (target - target.mean()) / 8

    model = fit_lasso(x, y, lam=lam, tol=1e-14)

    expected = np.sign(correlations) * np.maximum(np.abs(correlations) - lam, 0.0)
    assert [model.coefficients[name] for name in x.columns] == pytest.approx(
        expected.tolist(), abs=1e-8
    )
    assert model.intercept == pytest.approx(float(target.mean()), abs=1e-12)
