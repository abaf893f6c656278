"""Logger factory shared by all stages."""

import logging

from utils.config import Config

_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"
_configured = False


def get_logger(name: str) -> logging.Logger:
    """Return a module logger, configuring the root handler once."""
    global _configured
    if not _configured:
        logging.basicConfig(level=getattr(logging, Config.LOG_LEVEL, logging.INFO), format=_FORMAT)
        _configured = True
    return logging.getLogger(name)
