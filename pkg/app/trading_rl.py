"""Episodic replay of the feature/return history and a Q-learning trading agent.

Positions are ``flat`` or ``long``: ``buy`` opens the long, ``sell`` closes it
and ``hold`` keeps the current position. Acting at step t earns
``position_{t+1} * r_{t+1} - cost * [position changed]``, so the observation
at t never sees the return it is rewarded with.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from app.core.errors import EpisodeFinished, Misaligned
from app.core.models import (
    ACTIONS,
    AgentState,
    EpisodeLog,
    FeatureMatrix,
    MarketEnv,
    QModel,
    ReturnSeries,
)
from app.logger import log_debug


@dataclass(frozen=True)
class QLearningParams:
    episodes: int = 500
    alpha: float = 0.1
    alpha_decay: float = 0.0
    gamma: float = 0.9
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay: float = 0.99
    mode: str = "tabular"
    bins: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")
        if not 0 < self.alpha <= 1 or self.alpha_decay < 0:
            raise ValueError("alpha must lie in (0, 1] and alpha_decay >= 0")
        if not 0 <= self.gamma <= 1:
            raise ValueError("gamma must lie in [0, 1]")
        for name in ("epsilon_start", "epsilon_end", "epsilon_decay"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")

    def epsilon(self, episode: int) -> float:
        return max(self.epsilon_end, self.epsilon_start * self.epsilon_decay**episode)


@dataclass(frozen=True)
class Evaluation:
    cum_return: float
    trades: int
    positions: tuple[str, ...]


def make_env(
    x: FeatureMatrix,
    r: ReturnSeries,
    cost: float = 0.0,
    *,
    episode_length: int | None = None,
) -> MarketEnv:
    if x.dates != r.dates:
        raise Misaligned("feature and return dates differ")
    return MarketEnv(
        dates=x.dates,
        features=x.values,
        returns=r.returns,
        transaction_cost=cost,
        episode_length=episode_length,
        feature_names=x.columns,
    )


def reset(env: MarketEnv, start: int = 0, *, full: bool = False) -> AgentState:
    """Flat position at ``start``; ``full`` runs to the last step regardless of episode length."""
    steps = env.length - 1 - start if full else env.steps_per_episode
    terminal = start + steps
    if start < 0 or terminal > env.length - 1 or steps < 1:
        raise ValueError(f"episode starting at {start} does not fit the environment")
    return AgentState(
        t=start,
        position="flat",
        observation=tuple(float(v) for v in env.features[start]),
        terminal_t=terminal,
    )


def step(env: MarketEnv, state: AgentState, action: str) -> tuple[AgentState, float, bool]:
    if state.t >= state.terminal_t:
        raise EpisodeFinished(f"step {state.t} is terminal")
    if action not in ACTIONS:
        raise ValueError(f"action must be one of {ACTIONS}")

    if action == "buy":
        position = "long"
    elif action == "sell":
        position = "flat"
    else:
        position = state.position
    changed = position != state.position

    t = state.t + 1
    exposure = 1.0 if position == "long" else 0.0
    reward = exposure * float(env.returns[t]) - (env.transaction_cost if changed else 0.0)
    next_state = AgentState(
        t=t,
        position=position,
        observation=tuple(float(v) for v in env.features[t]),
        terminal_t=state.terminal_t,
    )
    return next_state, reward, t == state.terminal_t


# -------------------------
# Value functions
# -------------------------

def init_q_model(env: MarketEnv, mode: str = "tabular", bins: int = 3) -> QModel:
    """Empty model; bin edges span the observed range of each feature."""
    model = QModel(
        mode=mode,
        bins=bins,
        low=env.features.min(axis=0).copy(),
        high=env.features.max(axis=0).copy(),
    )
    if mode == "linear":
        size = env.features.shape[1] + 2
        model.weights = {action: np.zeros(size) for action in ACTIONS}
    return model


def discretize(model: QModel, observation) -> tuple[int, ...]:
    """Equal-width bin index per feature, clipped to ``[0, bins - 1]``."""
    observation = np.asarray(observation, dtype=float)
    span = model.high - model.low
    scaled = np.divide(
        observation - model.low,
        span / model.bins,
        out=np.zeros_like(observation),
        where=span > 0,
    )
    return tuple(int(i) for i in np.clip(np.floor(scaled), 0, model.bins - 1))


def linear_features(state: AgentState) -> np.ndarray:
    """Observation, long indicator and bias."""
    return np.array([*state.observation, 1.0 if state.position == "long" else 0.0, 1.0])


def _table_key(model: QModel, state: AgentState, action: str):
    return discretize(model, state.observation), state.position, action


def q_values(model: QModel, state: AgentState) -> np.ndarray:
    if model.mode == "tabular":
        return np.array([
            model.table.get(_table_key(model, state, action), 0.0) for action in ACTIONS
        ])
    phi = linear_features(state)
    return np.array([float(model.weights[action] @ phi) for action in ACTIONS])


def greedy_action(model: QModel, state: AgentState) -> str:
    """Highest-valued action; ties go to the earliest of buy, hold, sell."""
    return ACTIONS[int(np.argmax(q_values(model, state)))]


def _update(
    model: QModel,
    state: AgentState,
    action: str,
    target: float,
    alpha: float,
    visits: Counter,
    alpha_decay: float,
) -> None:
    if model.mode == "tabular":
        key = _table_key(model, state, action)
        rate = alpha / (1.0 + alpha_decay * visits[key])
        visits[key] += 1
        current = model.table.get(key, 0.0)
        model.table[key] = current + rate * (target - current)
        return
    rate = alpha / (1.0 + alpha_decay * visits[action])
    visits[action] += 1
    phi = linear_features(state)
    error = target - float(model.weights[action] @ phi)
    model.weights[action] = model.weights[action] + rate * error * phi


def train_q(env: MarketEnv, hp: QLearningParams) -> tuple[QModel, EpisodeLog]:
    """Epsilon-greedy Q-learning; tabular updates or semi-gradient TD(0) for linear."""
    rng = np.random.default_rng(hp.seed)
    model = init_q_model(env, hp.mode, hp.bins)
    visits: Counter = Counter()
    max_start = env.length - 1 - env.steps_per_episode

    cum_returns, trade_counts, epsilons = [], [], []
    for episode in range(hp.episodes):
        epsilon = hp.epsilon(episode)
        start = int(rng.integers(0, max_start + 1)) if max_start > 0 else 0
        state = reset(env, start)
        total, trades, done = 0.0, 0, False
        while not done:
            if rng.random() < epsilon:
                action = ACTIONS[int(rng.integers(len(ACTIONS)))]
            else:
                action = greedy_action(model, state)
            next_state, reward, done = step(env, state, action)
            target = reward if done else reward + hp.gamma * float(np.max(q_values(model, next_state)))
            _update(model, state, action, target, hp.alpha, visits, hp.alpha_decay)
            trades += next_state.position != state.position
            total += reward
            state = next_state

        cum_returns.append(total)
        trade_counts.append(trades)
        epsilons.append(epsilon)

    log_debug(
        "qlearn",
        f"training_done: episodes={hp.episodes} mode='{hp.mode}' "
        f"last_return={cum_returns[-1]!r}",
    )
    return model, EpisodeLog(
        cum_returns=tuple(cum_returns),
        trades=tuple(trade_counts),
        epsilons=tuple(epsilons),
    )


def evaluate(env: MarketEnv, model: QModel) -> Evaluation:
    """One greedy pass over the whole series from step 0."""
    state = reset(env, 0, full=True)
    total, trades, done = 0.0, 0, False
    positions = [state.position]
    while not done:
        next_state, reward, done = step(env, state, greedy_action(model, state))
        trades += next_state.position != state.position
        total += reward
        state = next_state
        positions.append(state.position)
    return Evaluation(cum_return=total, trades=trades, positions=tuple(positions))


def oracle_return(env: MarketEnv) -> float:
    """Best achievable return without shorting at zero cost: ``sum max(r_{t+1}, 0)``."""
    return float(np.maximum(env.returns[1:], 0.0).sum())
