import logging
import logging.config
import os
from typing import Optional

import yaml

DEFAULT_LOGGING_CFG_PATH = os.path.join(os.path.dirname(os.path.abspath(__file__)), "configs", "logging.cfg.yml")
LOGGING_CFG_ENV = "RUITENBURG_LOGGING_CFG"


def get_logger(logging_cfg_path: Optional[str] = None) -> logging.Logger:
    """
    Apply a dictConfig YAML and return the first logger it declares.

    The path is taken from the argument, then ``RUITENBURG_LOGGING_CFG``,
    then the packaged ``configs/logging.cfg.yml``.
    """
    path = logging_cfg_path or os.environ.get(LOGGING_CFG_ENV) or DEFAULT_LOGGING_CFG_PATH
    with open(path, "r", encoding="utf-8") as stream:
        config = yaml.safe_load(stream)
    loggers = config.get("loggers") or {}
    if not loggers:
        raise ValueError(f"Logging config {path} declares no loggers")
    logging.config.dictConfig(config)
    return logging.getLogger(next(iter(loggers)))


logger = get_logger()


def set_verbosity(verbose: int = 0, quiet: bool = False) -> None:
    """Adjust the package logger level from CLI flags."""
    if quiet:
        logger.setLevel(logging.WARNING)
    elif verbose > 0:
        logger.setLevel(logging.DEBUG)
