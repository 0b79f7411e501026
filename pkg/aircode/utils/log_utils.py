import logging
from contextlib import contextmanager
from typing import Iterable, Union

LoggerLike = Union[str, logging.Logger]


def _as_logger(logger: LoggerLike) -> logging.Logger:
    if isinstance(logger, logging.Logger):
        return logger
    return logging.getLogger(logger)


@contextmanager
def loglevel(loggers: Iterable[LoggerLike], level: int):
    """Temporarily set the level of several loggers, e.g. to silence per-trial decoder output in sweeps."""
    resolved = [_as_logger(logger) for logger in loggers]
    original_levels = [logger.level for logger in resolved]
    for logger in resolved:
        logger.setLevel(level)
    try:
        yield resolved
    finally:
        for logger, original_level in zip(resolved, original_levels):
            logger.setLevel(original_level)
