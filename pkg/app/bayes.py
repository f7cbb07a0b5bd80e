"""Bayesian linear regression of returns on tweet features by Metropolis-within-Gibbs.

Blocks per iteration:

* coefficients (intercept and slopes jointly), random walk preconditioned by
  the Gaussian approximation of the posterior around its ridge mode;
* ``log sigma`` unless the scale is fixed;
* ``log(nu - 2)`` when the Student-t degrees of freedom are sampled.

Step sizes adapt during burn-in toward the target acceptance band and are
frozen afterwards. Chain ``c`` draws from ``default_rng([seed, c])``, so chains
are independent streams and the draws are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import pandas as pd
from scipy import stats

from app.core.constants import DEFAULT_QUANTILES
from app.core.errors import ChainDiverged, SeriesMismatch
from app.core.models import FeatureMatrix, McmcConfig, PosteriorSamples, PriorSpec, ReturnSeries
from app.logger import log_debug, log_warning

INTERCEPT = "intercept"
SIGMA = "sigma"
NU = "nu"

STEP_SHRINK = 0.7
STEP_GROW = 1.3
START_SPREAD = 2.0


@dataclass(frozen=True)
class _Problem:
    z: np.ndarray            # n x (1 + p), first column is the intercept
    y: np.ndarray
    prior: PriorSpec
    feature_names: tuple[str, ...]

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def param_names(self) -> tuple[str, ...]:
        names = (INTERCEPT, *self.feature_names)
        if self.prior.samples_sigma:
            names += (SIGMA,)
        if self.prior.likelihood == "student_t":
            names += (NU,)
        return names


@dataclass
class _ChainState:
    theta: np.ndarray
    log_sigma: float
    log_nu_excess: float
    log_post: float


def _design(x: FeatureMatrix, *, standardize: bool) -> np.ndarray:
    values = np.array(x.values, dtype=float)
    if standardize:
        means = values.mean(axis=0)
        stds = values.std(axis=0)
        constant = np.ptp(values, axis=0) == 0
        if np.any(constant):
            names = [name for name, flag in zip(x.columns, constant) if flag]
            log_warning(
                "bayes",
                f"zero_variance_features_kept: count={len(names)} "
                f"features='{','.join(names)}' posterior=prior",
            )
        values = (values - means) / np.where(constant, 1.0, stds)
    return np.column_stack([np.ones(values.shape[0]), values])


def _log_posterior(problem: _Problem, theta, log_sigma, log_nu_excess) -> float:
    prior = problem.prior
    sigma = prior.sigma_fixed if not prior.samples_sigma else float(np.exp(log_sigma))
    residual = problem.y - problem.z @ theta

    if prior.likelihood == "gaussian":
        log_lik = stats.norm.logpdf(residual, scale=sigma).sum()
    else:
        nu = prior.nu_fixed if not prior.samples_nu else 2.0 + float(np.exp(log_nu_excess))
        log_lik = stats.t.logpdf(residual, df=nu, scale=sigma).sum()

    coefs = theta[1:]
    if prior.coef_prior == "gaussian":
        log_prior = stats.norm.logpdf(coefs, scale=prior.coef_scale).sum()
    else:
        log_prior = stats.laplace.logpdf(coefs, scale=prior.coef_scale).sum()
    log_prior += stats.norm.logpdf(theta[0], scale=prior.intercept_scale)

    if prior.samples_sigma:
        # sampled on log scale: + log sigma for the change of variables
        log_prior += stats.halfnorm.logpdf(sigma, scale=prior.sigma_scale) + log_sigma
    if prior.samples_nu:
        excess = float(np.exp(log_nu_excess))
        log_prior += stats.expon.logpdf(excess, scale=1.0 / prior.nu_rate) + log_nu_excess

    return float(log_lik + log_prior)


def _prior_precision(problem: _Problem) -> np.ndarray:
    prior = problem.prior
    # laplace(b) has variance 2 b^2
    coef_var = prior.coef_scale**2 * (2.0 if prior.coef_prior == "laplace" else 1.0)
    diagonal = np.full(problem.z.shape[1], 1.0 / coef_var)
    diagonal[0] = 1.0 / prior.intercept_scale**2
    return np.diag(diagonal)


def _ridge_mode(problem: _Problem) -> tuple[np.ndarray, np.ndarray, float]:
    """Gaussian-approximation mode, covariance and residual scale."""
    z, y = problem.z, problem.y
    precision = _prior_precision(problem)
    if problem.prior.sigma_fixed is not None:
        noise_var = problem.prior.sigma_fixed**2
    else:
        noise_var = max(float(np.var(y)), 1e-12)
        theta = np.linalg.solve(z.T @ z / noise_var + precision, z.T @ y / noise_var)
        noise_var = max(float(np.mean((y - z @ theta) ** 2)), 1e-12 * max(float(np.var(y)), 1.0))
    cov = np.linalg.inv(z.T @ z / noise_var + precision)
    theta = cov @ (z.T @ y / noise_var)
    return theta, (cov + cov.T) / 2.0, float(np.sqrt(noise_var))


def _adapt(step: float, accepted: int, window: int, band: tuple[float, float]) -> float:
    rate = accepted / window
    if rate < band[0]:
        return step * STEP_SHRINK
    if rate > band[1]:
        return step * STEP_GROW
    return step


def _metropolis(
    current: float,
    proposal_log_post: float,
    rng: np.random.Generator,
) -> bool:
    if np.isnan(proposal_log_post):
        raise ChainDiverged("log-posterior evaluated to NaN")
    if proposal_log_post == -np.inf:
        return False
    return np.log(rng.random()) < proposal_log_post - current


def _run_chain(
    problem: _Problem,
    cfg: McmcConfig,
    chain: int,
    mode: np.ndarray,
    chol: np.ndarray,
    sigma_hat: float,
) -> tuple[np.ndarray, dict[str, float]]:
    prior = problem.prior
    rng = np.random.default_rng([cfg.seed, chain])
    dim = len(mode)

    theta = mode + START_SPREAD * chol @ rng.standard_normal(dim)
    log_sigma = float(np.log(sigma_hat) + 0.5 * rng.standard_normal()) if prior.samples_sigma else 0.0
    if prior.samples_nu:
        log_nu_excess = float(np.log(1.0 / prior.nu_rate) + 0.5 * rng.standard_normal())
    else:
        log_nu_excess = 0.0
    state = _ChainState(theta, log_sigma, log_nu_excess, 0.0)
    state.log_post = _log_posterior(problem, state.theta, state.log_sigma, state.log_nu_excess)
    if not np.isfinite(state.log_post):
        raise ChainDiverged(f"chain {chain} starts at a non-finite log-posterior")

    steps = {
        "coefficients": cfg.initial_step,
        "sigma": 2.4 / np.sqrt(2.0 * problem.n),
        "nu": cfg.initial_step,
    }
    blocks: list[tuple[str, Callable[[], bool]]] = []

    def propose_theta() -> bool:
        candidate = state.theta + steps["coefficients"] * (chol @ rng.standard_normal(dim))
        log_post = _log_posterior(problem, candidate, state.log_sigma, state.log_nu_excess)
        if _metropolis(state.log_post, log_post, rng):
            state.theta, state.log_post = candidate, log_post
            return True
        return False

    def propose_sigma() -> bool:
        candidate = state.log_sigma + steps["sigma"] * rng.standard_normal()
        log_post = _log_posterior(problem, state.theta, candidate, state.log_nu_excess)
        if _metropolis(state.log_post, log_post, rng):
            state.log_sigma, state.log_post = candidate, log_post
            return True
        return False

    def propose_nu() -> bool:
        candidate = state.log_nu_excess + steps["nu"] * rng.standard_normal()
        log_post = _log_posterior(problem, state.theta, state.log_sigma, candidate)
        if _metropolis(state.log_post, log_post, rng):
            state.log_nu_excess, state.log_post = candidate, log_post
            return True
        return False

    blocks.append(("coefficients", propose_theta))
    if prior.samples_sigma:
        blocks.append(("sigma", propose_sigma))
    if prior.samples_nu:
        blocks.append(("nu", propose_nu))

    window = {name: 0 for name, _ in blocks}
    kept_accepts = {name: 0 for name, _ in blocks}
    draws = np.empty((cfg.kept_per_chain, len(problem.param_names)))
    kept = 0

    for iteration in range(cfg.iterations):
        burning = iteration < cfg.burn_in
        for name, propose in blocks:
            accepted = propose()
            if burning:
                window[name] += accepted
            else:
                kept_accepts[name] += accepted
        if not np.isfinite(state.log_post):
            raise ChainDiverged(f"chain {chain} diverged at iteration {iteration}")

        if burning and (iteration + 1) % cfg.adapt_interval == 0:
            for name in window:
                steps[name] = _adapt(steps[name], window[name], cfg.adapt_interval, cfg.target_acceptance)
                window[name] = 0
        elif not burning and (iteration - cfg.burn_in + 1) % cfg.thin == 0:
            row = list(state.theta)
            if prior.samples_sigma:
                row.append(np.exp(state.log_sigma))
            if prior.likelihood == "student_t":
                row.append(prior.nu_fixed if not prior.samples_nu else 2.0 + np.exp(state.log_nu_excess))
            draws[kept] = row
            kept += 1

    post_burn = cfg.iterations - cfg.burn_in
    acceptance = {name: count / post_burn for name, count in kept_accepts.items()}
    log_debug(
        "bayes",
        f"chain_done: chain={chain} "
        + " ".join(f"accept_{name}={rate:.3f}" for name, rate in acceptance.items()),
    )
    return draws, acceptance


def fit_bayes(
    x: FeatureMatrix,
    y: ReturnSeries,
    prior: PriorSpec | None = None,
    cfg: McmcConfig | None = None,
    *,
    standardize: bool = True,
) -> PosteriorSamples:
    """Posterior draws for intercept, slopes, sigma and nu.

    With ``standardize`` the slopes refer to standardized feature columns;
    zero-variance columns are centered and kept, so their posterior is the prior.
    """
    prior = prior or PriorSpec()
    cfg = cfg or McmcConfig()
    if x.shape[0] != len(y) or x.dates != y.dates:
        raise SeriesMismatch("X and y are not aligned on the same dates")
    if len(y) < 2:
        raise ValueError("Bayesian regression needs at least two observations")

    problem = _Problem(
        z=_design(x, standardize=standardize),
        y=np.array(y.returns, dtype=float),
        prior=prior,
        feature_names=x.columns,
    )
    mode, cov, sigma_hat = _ridge_mode(problem)
    chol = np.linalg.cholesky(cov)

    chain_draws = []
    acceptance: dict[str, list[float]] = {}
    for chain in range(cfg.chains):
        draws, rates = _run_chain(problem, cfg, chain, mode, chol, sigma_hat)
        chain_draws.append(draws)
        for name, rate in rates.items():
            acceptance.setdefault(name, []).append(rate)

    stacked = np.vstack(chain_draws)
    names = problem.param_names
    rhat = {
        name: split_rhat(np.stack([draws[:, j] for draws in chain_draws]))
        for j, name in enumerate(names)
    }
    worst = max(rhat.values())
    if worst > 1.05:
        log_warning("bayes", f"rhat_high: max_rhat={worst:.4f} chains={cfg.chains}")

    return PosteriorSamples(
        param_names=names,
        draws=stacked,
        chains=cfg.chains,
        seed=cfg.seed,
        acceptance={name: tuple(rates) for name, rates in acceptance.items()},
        rhat=rhat,
    )


# -------------------------
# Diagnostics
# -------------------------

def split_rhat(chains: np.ndarray) -> float:
    """Split-R-hat over an ``(m, n)`` array of per-chain draws."""
    chains = np.asarray(chains, dtype=float)
    if chains.ndim != 2 or chains.shape[1] < 4:
        raise ValueError("split_rhat needs an (m, n) array with n >= 4")
    half = chains.shape[1] // 2
    halves = np.vstack([chains[:, :half], chains[:, -half:]])
    within = float(halves.var(axis=1, ddof=1).mean())
    between = half * float(halves.mean(axis=1).var(ddof=1))
    if within == 0.0:
        return 1.0 if between == 0.0 else float("inf")
    pooled = (half - 1) / half * within + between / half
    return float(np.sqrt(pooled / within))


def _batch_means_variance(chains: np.ndarray) -> float:
    """Asymptotic variance of the chain mean by non-overlapping batch means."""
    per_chain = chains.shape[1]
    batches = max(int(np.floor(np.sqrt(per_chain))), 2)
    size = per_chain // batches
    if size < 1:
        raise ValueError("too few draws for batch means")
    trimmed = chains[:, : batches * size].reshape(chains.shape[0], batches, size)
    batch_means = trimmed.mean(axis=2)
    return float(size * batch_means.var(axis=1, ddof=1).mean())


def _as_chains(draws) -> np.ndarray:
    draws = np.asarray(draws, dtype=float)
    return draws.reshape(1, -1) if draws.ndim == 1 else draws


def effective_sample_size(draws) -> float:
    """Batch-means ESS of a 1-D draw vector or an ``(m, n)`` chain array."""
    chains = _as_chains(draws)
    total = chains.size
    variance = float(chains.var(ddof=1))
    asymptotic = _batch_means_variance(chains)
    if asymptotic == 0.0:
        return float(total)
    return float(total * variance / asymptotic)


def mc_standard_error(draws) -> float:
    """Monte-Carlo standard error of the posterior mean (batch means)."""
    chains = _as_chains(draws)
    return float(np.sqrt(_batch_means_variance(chains) / chains.size))


def quantile_label(q: float) -> str:
    return f"q{q * 100:g}"


def posterior_summary(
    samples: PosteriorSamples,
    quantiles: Sequence[float] = DEFAULT_QUANTILES,
) -> pd.DataFrame:
    """Empirical quantiles per parameter (linear interpolation) plus split-R-hat.

    Rows are indexed by parameter name; columns are ``q2.5``-style labels and
    ``rhat``.
    """
    quantiles = [float(q) for q in quantiles]
    if not quantiles or any(not 0.0 <= q <= 1.0 for q in quantiles):
        raise ValueError("quantiles must be a non-empty list within [0, 1]")
    values = np.quantile(samples.draws, quantiles, axis=0, method="linear")
    table = pd.DataFrame(
        values.T,
        index=pd.Index(samples.param_names, name="param"),
        columns=[quantile_label(q) for q in quantiles],
    )
    table["rhat"] = [float(samples.rhat.get(name, np.nan)) for name in samples.param_names]
    return table
