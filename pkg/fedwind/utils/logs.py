from __future__ import annotations

import logging
import sys

logger = logging.getLogger(__name__)

# third-party loggers that flood DEBUG output
_NOISY = ("matplotlib", "PIL")


def configure_logging(verbosity: int, log_file: str | None = None) -> None:
    """Root logging for the CLI: WARNING, ``-v`` INFO, ``-vv`` DEBUG.

    Logs go to stderr (stdout carries the JSON summary) and, optionally, to
    ``log_file``. Calling it again replaces the previous handlers.
    """
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG)

    handlers: list[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file, encoding="utf-8"))

    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)-8s %(name)s: %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
        handlers=handlers,
        force=True,
    )
    for name in _NOISY:
        logging.getLogger(name).setLevel(max(level, logging.INFO))
    logger.debug("Logging configured (level=%s, file=%s)", logging.getLevelName(level), log_file)


__all__ = ["configure_logging"]
