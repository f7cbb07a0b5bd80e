from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd

from app.bayes import effective_sample_size, mc_standard_error, posterior_summary
from app.core.constants import DEFAULT_QUANTILES
from app.lasso import lasso_path, predict_linear
from app.logger import log_info
from app.services.artifact_service import write_json, write_records, write_table
from app.services.pipeline_context import PipelineContext


def lasso_model_payload(ctx: PipelineContext) -> dict:
    result = ctx.lasso_cv
    model = result.model
    return {
        "lambda": model.lam,
        "intercept": model.intercept,
        "coefficients": dict(model.coefficients),
        "nonzero": model.nonzero_count,
        "standardization": {
            name: {"mean": mean, "std": std}
            for name, (mean, std) in model.standardization.items()
        },
        "dropped_features": list(model.dropped_features),
        "converged": model.converged,
        "sweeps": model.n_iter,
        "cv": {
            "folds": result.folds,
            "seed": result.seed,
            "best_lambda": result.best_lambda,
        },
        "horizon": ctx.config.horizon,
    }


def run_fit_lasso(ctx: PipelineContext) -> list[Path]:
    cfg = ctx.config.lasso
    x, y = ctx.regression_data
    result = ctx.lasso_cv
    path = lasso_path(x, y, result.lambdas, cfg.tol, cfg.max_iter)
    predicted = predict_linear(result.model, x)

    log_info(
        "lasso",
        f"lasso_selected: lambda={result.best_lambda!r} nonzero={result.model.nonzero_count} "
        f"grid={len(result.lambdas)} folds={result.folds}",
    )
    out = ctx.output_dir
    return [
        write_json(out, "lasso_model.json", lasso_model_payload(ctx)),
        write_records(
            out,
            "lasso_cv.csv",
            (
                {"lambda": lam, "cv_mse": mse, "nonzero": model.nonzero_count}
                for lam, mse, model in zip(result.lambdas, result.cv_mse, path)
            ),
            ["lambda", "cv_mse", "nonzero"],
        ),
        write_records(
            out,
            "lasso_predictions.csv",
            (
                {"date": day, "actual": actual, "predicted": fitted}
                for day, actual, fitted in zip(y.dates, y.returns, predicted)
            ),
            ["date", "actual", "predicted"],
        ),
    ]


def run_fit_bayes(ctx: PipelineContext) -> list[Path]:
    samples = ctx.posterior
    cfg = ctx.config.bayes

    draws = pd.DataFrame(samples.draws, columns=list(samples.param_names))
    draws.insert(0, "draw", np.tile(np.arange(samples.draws_per_chain), samples.chains))
    draws.insert(0, "chain", np.repeat(np.arange(samples.chains), samples.draws_per_chain))

    summary = posterior_summary(samples, DEFAULT_QUANTILES).reset_index()

    diagnostics = {
        "seed": samples.seed,
        "chains": samples.chains,
        "iterations": cfg.iterations,
        "burn_in": cfg.burn_in,
        "thin": cfg.thin,
        "draws_per_chain": samples.draws_per_chain,
        "likelihood": cfg.prior.likelihood,
        "coef_prior": cfg.prior.coef_prior,
        "acceptance": {name: list(rates) for name, rates in samples.acceptance.items()},
        "parameters": {
            name: {
                "rhat": samples.rhat[name],
                "ess": effective_sample_size(samples.chain_draws(name)),
                "mcse": mc_standard_error(samples.chain_draws(name)),
                "mean": float(samples.column(name).mean()),
            }
            for name in samples.param_names
        },
    }
    log_info(
        "bayes",
        f"posterior_sampled: params={len(samples.param_names)} draws={samples.draws.shape[0]} "
        f"max_rhat={max(samples.rhat.values())!r}",
    )

    out = ctx.output_dir
    return [
        write_table(out, "posterior_draws.csv", draws),
        write_table(out, "posterior_summary.csv", summary),
        write_json(out, "bayes_diagnostics.json", diagnostics),
    ]
