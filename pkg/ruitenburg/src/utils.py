from __future__ import annotations

import json
import math
import os
from typing import Callable, Hashable, Optional, TypeVar

import yaml

from ruitenburg.src.logger_download import logger

BASE_DIR = os.path.dirname(os.path.abspath(__file__))
CONFIG_PATH = os.path.join(BASE_DIR, "configs")
EXPERIMENT_CFG_PATH = os.path.join(CONFIG_PATH, "experiment.cfg.yml")

with open(os.path.join(CONFIG_PATH, "messages.json"), "r", encoding="utf-8") as f:
    reply_messages = json.load(f)

State = TypeVar("State", bound=Hashable)


def get_reply_text(key: str, **kwargs) -> str:
    """
    Fetch a user-facing text from messages.json, formatting it with kwargs.
    """
    text = reply_messages[key]
    return text.format(**kwargs) if kwargs else text


def load_experiment_defaults(profile: str = "default", config_path: str = EXPERIMENT_CFG_PATH) -> dict:
    """
    Read one profile of experiment defaults from the YAML config.

    Parameters
    ----------
    profile : str
        Top-level key in the YAML file (``default`` or ``smoke``).
    config_path : str
        Path to the YAML file.

    Returns
    -------
    dict
        Raw values, validated later by ``ExperimentConfig``.
    """
    with open(config_path, "r", encoding="utf-8") as stream:
        profiles = yaml.safe_load(stream)
    if profile not in profiles:
        raise ValueError(f"Unknown experiment profile '{profile}', expected one of {sorted(profiles)}")
    return dict(profiles[profile])


def find_index_period(
    step: Callable[[State], State], start: State, t_max: int
) -> tuple[list[State], Optional[int], Optional[int]]:
    """
    Iterate ``step`` from ``start`` until a state repeats.

    All visited states are kept in a dict, so the returned (index, period)
    is the lexicographically least pair: the first repeated state ``s_t``
    equals ``s_N`` with ``N < t`` and the period is ``t - N``.

    Returns
    -------
    tuple
        The visited states ``s_0 .. s_{t-1}`` and (index, period), or
        (None, None) when ``t_max`` steps pass without a repeat.
    """
    states = [start]
    seen = {start: 0}
    current = start
    for t in range(1, t_max + 1):
        current = step(current)
        if current in seen:
            first = seen[current]
            return states, first, t - first
        seen[current] = t
        states.append(current)
    logger.debug(f"No repeat within {t_max} steps")
    return states, None, None


def lcm_upto(k: int) -> int:
    """lcm(1, ..., k) as an exact integer."""
    return math.lcm(*range(1, k + 1)) if k > 0 else 1


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def bits_of(mask: int) -> list[int]:
    """Indices of the set bits of ``mask`` in increasing order."""
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out
