from __future__ import annotations

from pathlib import Path

import numpy as np

from app.core.formatters import join_items
from app.core.models import QModel
from app.logger import log_info
from app.services.artifact_service import format_cell, write_json, write_records
from app.services.pipeline_context import PipelineContext
from app.trading_rl import evaluate, oracle_return


def q_model_payload(model: QModel, feature_names) -> dict:
    payload = {
        "mode": model.mode,
        "bins": model.bins,
        "features": list(feature_names),
        "low": model.low,
        "high": model.high,
    }
    if model.mode == "tabular":
        payload["table"] = [
            {
                "bins": join_items(format_cell(i) for i in bins),
                "position": position,
                "action": action,
                "value": value,
            }
            for (bins, position, action), value in sorted(model.table.items())
        ]
    else:
        payload["weights"] = {action: weights for action, weights in model.weights.items()}
    return payload


def run_qlearn(ctx: PipelineContext) -> list[Path]:
    env = ctx.market_env
    model, log = ctx.q_training
    evaluation = evaluate(env, model)
    buy_and_hold = float(np.sum(env.returns[1:])) - env.transaction_cost

    log_info(
        "qlearn",
        f"agent_evaluated: return={evaluation.cum_return!r} trades={evaluation.trades} "
        f"oracle={oracle_return(env)!r} episodes={log.episodes}",
    )
    out = ctx.output_dir
    return [
        write_records(
            out,
            "episode_log.csv",
            (
                {"episode": i, "cum_return": r, "trades": t, "epsilon": e}
                for i, (r, t, e) in enumerate(zip(log.cum_returns, log.trades, log.epsilons), start=1)
            ),
            ["episode", "cum_return", "trades", "epsilon"],
        ),
        write_json(out, "q_model.json", q_model_payload(model, env.feature_names)),
        write_json(
            out,
            "qlearn_evaluation.json",
            {
                "seed": ctx.seed_for("qlearn"),
                "steps": env.length - 1,
                "cum_return": evaluation.cum_return,
                "trades": evaluation.trades,
                "oracle_return": oracle_return(env),
                "buy_and_hold_return": buy_and_hold,
                "positions": list(evaluation.positions),
                "transaction_cost": env.transaction_cost,
            },
        ),
    ]
