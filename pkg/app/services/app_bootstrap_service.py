from __future__ import annotations

import sys
import traceback
from collections.abc import Callable

from app.logger import init_logger, load_app_config, log_error, log_info
from app.version import APP_VERSION


def build_logging_config(
    log_level: str | None,
    *,
    load_app_config_func: Callable[[], dict] = load_app_config,
) -> dict:
    cfg = load_app_config_func()
    if log_level:
        cfg.setdefault("logging", {})["level"] = log_level.upper()
    return cfg


def build_unhandled_exception_hook(
    *,
    log_error_func: Callable[[str, str], None] = log_error,
    fallback_hook: Callable = sys.__excepthook__,
):
    def handle_unhandled_exception(exc_type, exc_value, exc_traceback):
        formatted = "".join(
            traceback.format_exception(exc_type, exc_value, exc_traceback)
        ).strip()
        log_error_func("cli", f"unhandled_exception: {formatted}")
        fallback_hook(exc_type, exc_value, exc_traceback)

    return handle_unhandled_exception


def start_application(
    command: str,
    *,
    log_level: str | None = None,
    init_logger_func: Callable[..., None] = init_logger,
    load_app_config_func: Callable[[], dict] = load_app_config,
    log_info_func: Callable[[str, str], None] = log_info,
    log_error_func: Callable[[str, str], None] = log_error,
    set_exception_hook_func: Callable[[Callable], None] | None = None,
    fallback_exception_hook: Callable = sys.__excepthook__,
) -> None:
    init_logger_func(
        build_logging_config(log_level, load_app_config_func=load_app_config_func),
        force=True,
    )
    log_info_func("cli", f"tweet_signal_started: version='{APP_VERSION}' command='{command}'")
    exception_hook = build_unhandled_exception_hook(
        log_error_func=log_error_func,
        fallback_hook=fallback_exception_hook,
    )
    if set_exception_hook_func is None:
        sys.excepthook = exception_hook
    else:
        set_exception_hook_func(exception_hook)
