from __future__ import annotations

import itertools
from typing import Optional, Sequence

import numpy as np

from ruitenburg.src.evaluation import (
    BisimType,
    Evaluation,
    bisim_type,
    kripke_valuations,
    model_from_masks,
    truncate,
)
from ruitenburg.src.formula import BOTTOM, And, Formula, Implies, Or, Var
from ruitenburg.src.iteration import CombinedModel
from ruitenburg.src.logger_download import logger
from ruitenburg.src.poset import RootedPoset, powerset_labels, random_rooted_poset

CONNECTIVES = (And, Or, Implies)


def spawn_rngs(seed: int, n: int) -> list[np.random.Generator]:
    """Independent generators derived from one seed, one per experiment."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def atoms(names: Sequence[str]) -> list[Formula]:
    return [BOTTOM] + [Var(name) for name in sorted(names)]


def enumerate_formulas(names: Sequence[str], max_connectives: int) -> list[Formula]:
    """Every formula over ``names`` and bottom with at most ``max_connectives`` binary connectives."""
    by_size: list[list[Formula]] = [atoms(names)]
    for size in range(1, max_connectives + 1):
        level = []
        for left_size in range(size):
            right_size = size - 1 - left_size
            for ctor in CONNECTIVES:
                for left, right in itertools.product(by_size[left_size], by_size[right_size]):
                    level.append(ctor(left, right))
        by_size.append(level)
    return [f for level in by_size for f in level]


def random_formula(rng: np.random.Generator, names: Sequence[str], connectives: int) -> Formula:
    """A random tree with exactly ``connectives`` binary nodes."""
    leaves = atoms(names)
    if connectives == 0:
        return leaves[int(rng.integers(len(leaves)))]
    ctor = CONNECTIVES[int(rng.integers(len(CONNECTIVES)))]
    left = int(rng.integers(connectives))
    return ctor(random_formula(rng, names, left), random_formula(rng, names, connectives - 1 - left))


def random_corpus(rng: np.random.Generator, n: int, names: Sequence[str], max_connectives: int) -> list[Formula]:
    return [random_formula(rng, names, int(rng.integers(max_connectives + 1))) for _ in range(n)]


def random_downset(rng: np.random.Generator, poset: RootedPoset, density: float = 0.35) -> int:
    picked = sum(1 << p for p in range(poset.size) if rng.random() < density)
    return poset.downset_closure(picked)


def random_combined_model(
    rng: np.random.Generator, parameters: Sequence[str], max_points: int, x: str = "x"
) -> CombinedModel:
    size = int(rng.integers(1, max_points + 1))
    poset = random_rooted_poset(rng, size)
    masks = {name: random_downset(rng, poset) for name in sorted(parameters)}
    return CombinedModel.from_masks(poset, parameters, masks, random_downset(rng, poset), x)


def random_presentation_model(rng: np.random.Generator, max_points: int) -> Evaluation:
    """
    Random Kripke model over ``{a, b}`` with ``a`` below every point and
    ``a`` contained in ``b``.
    """
    size = int(rng.integers(1, max_points + 1))
    poset = random_rooted_poset(rng, size)
    minimal = poset.mask_of(poset.minimal())
    a = poset.downset_closure(minimal | random_downset(rng, poset, density=0.2))
    b = poset.downset_closure(a | random_downset(rng, poset, density=0.3))
    return model_from_masks(poset, powerset_labels(("a", "b")), {"a": a, "b": b})


def all_combined_models(parameters: Sequence[str], max_points: int, x: str = "x") -> list[CombinedModel]:
    """Every combined model up to ``max_points`` points, posets up to isomorphism."""
    parameters = tuple(sorted(set(parameters)))
    out = []
    for domain, masks in kripke_valuations(parameters + (x,), max_points):
        x_mask = masks.pop(x)
        out.append(CombinedModel.from_masks(domain, parameters, masks, x_mask, x))
    return out


def graded_pairs(
    models: Sequence[CombinedModel],
    depth: int,
    limit: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> list[tuple[CombinedModel, CombinedModel]]:
    """
    Pairs that are ``depth``-equivalent but told apart at ``depth + 1``.

    Models are grouped by their depth type; inside a group one
    representative is kept per deeper type and every two of them form a
    pair. More than ``limit`` pairs are subsampled with ``rng``.
    """
    groups: dict[BisimType, dict[BisimType, CombinedModel]] = {}
    for m in models:
        u = m.as_evaluation()
        deeper = bisim_type(u, depth + 1)
        groups.setdefault(truncate(deeper, depth), {}).setdefault(deeper, m)
    pairs = []
    for split in groups.values():
        pairs += list(itertools.combinations(split.values(), 2))
    if limit is not None and len(pairs) > limit:
        rng = rng or np.random.default_rng(0)
        picks = sorted(int(i) for i in rng.choice(len(pairs), size=limit, replace=False))
        pairs = [pairs[i] for i in picks]
    logger.debug(f"{len(pairs)} pairs equivalent at depth {depth} and split at depth {depth + 1}")
    return pairs
