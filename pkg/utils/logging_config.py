"""
Structured logging for campaigns and their worker processes.

Everything goes to stderr through structlog; stdout is reserved for the
summary table.
"""

import logging
import sys
from contextlib import contextmanager
from typing import Any, Dict, Iterator, List, Optional

import structlog

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def _processors(json_format: bool) -> List[Any]:
    chain: List[Any] = [
        structlog.contextvars.merge_contextvars,
        structlog.stdlib.add_logger_name,
        structlog.processors.add_log_level,
        structlog.processors.TimeStamper(fmt="iso"),
        structlog.processors.StackInfoRenderer(),
    ]
    if json_format:
        chain += [structlog.processors.format_exc_info, structlog.processors.JSONRenderer(sort_keys=True)]
    else:
        chain.append(structlog.dev.ConsoleRenderer(colors=sys.stderr.isatty()))
    return chain


def configure_logging(
    log_level: str = "INFO",
    json_format: bool = False,
    log_file: Optional[str] = None,
) -> None:
    """
    Configure structlog on top of the stdlib root logger.

    Safe to call repeatedly; the last call wins.

    Args:
        log_level: One of LOG_LEVELS (unknown names fall back to INFO)
        json_format: Render one JSON object per line (batch runs)
        log_file: Optional file that receives a copy of every record
    """
    level = getattr(logging, log_level.upper(), logging.INFO)
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file, encoding="utf-8"))
    logging.basicConfig(format="%(message)s", level=level, handlers=handlers, force=True)

    structlog.configure(
        processors=_processors(json_format),
        wrapper_class=structlog.stdlib.BoundLogger,
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=False,
    )


def configure_worker_logging(log_level: str, json_format: bool, context: Dict[str, Any]) -> None:
    """Process-pool initializer: the parent's settings plus its bound campaign context."""
    configure_logging(log_level=log_level, json_format=json_format)
    bind_context(**context)


def get_logger(name: str = __name__) -> structlog.stdlib.BoundLogger:
    return structlog.get_logger(name)


def bind_context(**kwargs: Any) -> None:
    """Attach key-values to every later record in this context."""
    structlog.contextvars.bind_contextvars(**kwargs)


def current_context() -> Dict[str, Any]:
    """Copy of the bound context, for handing to worker processes."""
    return dict(structlog.contextvars.get_contextvars())


@contextmanager
def campaign_context(**kwargs: Any) -> Iterator[None]:
    """
    Bind campaign identifiers (scenario, seed, ...) for the duration of a block.

    Keys bound before the block are restored afterwards.
    """
    with structlog.contextvars.bound_contextvars(**kwargs):
        yield
