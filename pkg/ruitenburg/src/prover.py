from __future__ import annotations

import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ruitenburg.src.evaluation import Evaluation, kripke_valuations, model_from_masks
from ruitenburg.src.formula import (
    BOTTOM,
    And,
    Bottom,
    Formula,
    Implies,
    Or,
    Var,
    nodes,
    variables,
)
from ruitenburg.src.logger_download import logger
from ruitenburg.src.poset import DownsetAlgebra, RootedPoset, format_model, powerset_labels

MAX_CPC_VARIABLES = 24
CPC_CHUNK_BITS = 20
CLASSICAL_FILTER_VARIABLES = 12

sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))


class ProverBudgetExceeded(RuntimeError):
    pass


class TruthTableBudgetExceeded(RuntimeError):
    pass


Sequent = tuple[frozenset, Formula]


class Prover:
    """
    Backward proof search in a contraction-free intuitionistic sequent calculus.

    Invertible rules are applied first; the two non-invertible choices
    (a disjunct on the right, or a nested implication on the left) are
    tried afterwards. Left implications are split by the shape of their
    antecedent, which makes every branch terminate without loop checks.
    Finished sequents are cached with the antecedent as a set.

    Parameters
    ----------
    budget : int, optional
        Maximum number of sequents expanded per query.
    cache_cap : int, optional
        Stop adding cache entries beyond this size.
    classical_filter : bool
        Reject classically invalid formulas with a truth table before searching.
    """

    def __init__(
        self,
        budget: Optional[int] = None,
        cache_cap: Optional[int] = None,
        classical_filter: bool = True,
    ):
        self.budget = budget
        self.cache_cap = cache_cap
        self.classical_filter = classical_filter
        self.cache: dict[Sequent, bool] = {}
        self.expanded = 0

    def prove(self, a: Formula) -> bool:
        if (
            self.classical_filter
            and len(variables(a)) <= CLASSICAL_FILTER_VARIABLES
            and not prove_cpc(a)
        ):
            return False
        self.expanded = 0
        try:
            return self._prove(frozenset(), a)
        except ProverBudgetExceeded:
            logger.warning(f"Prover budget of {self.budget} sequents exhausted on a formula of size {len(nodes(a))}")
            raise

    def equivalent(self, a: Formula, b: Formula) -> bool:
        if a == b:
            return True
        return self.prove(Implies(a, b)) and self.prove(Implies(b, a))

    def _prove(self, gamma: frozenset, goal: Formula) -> bool:
        key = (gamma, goal)
        cached = self.cache.get(key)
        if cached is not None:
            return cached
        self.expanded += 1
        if self.budget is not None and self.expanded > self.budget:
            raise ProverBudgetExceeded(f"more than {self.budget} sequents expanded; raise the budget")
        result = self._search(gamma, goal)
        if self.cache_cap is None or len(self.cache) < self.cache_cap:
            self.cache[key] = result
        return result

    def _search(self, gamma: frozenset, goal: Formula) -> bool:
        if BOTTOM in gamma or goal in gamma:
            return True

        for f in gamma:
            if isinstance(f, And):
                return self._prove(gamma - {f} | {f.left, f.right}, goal)
            if isinstance(f, Or):
                rest = gamma - {f}
                return self._prove(rest | {f.left}, goal) and self._prove(rest | {f.right}, goal)
            if isinstance(f, Implies):
                ante, cons = f.left, f.right
                if isinstance(ante, Var) and ante in gamma:
                    return self._prove(gamma - {f} | {cons}, goal)
                if isinstance(ante, Bottom):
                    return self._prove(gamma - {f}, goal)
                if isinstance(ante, And):
                    return self._prove(gamma - {f} | {Implies(ante.left, Implies(ante.right, cons))}, goal)
                if isinstance(ante, Or):
                    return self._prove(gamma - {f} | {Implies(ante.left, cons), Implies(ante.right, cons)}, goal)

        if isinstance(goal, And):
            return self._prove(gamma, goal.left) and self._prove(gamma, goal.right)
        if isinstance(goal, Implies):
            return self._prove(gamma | {goal.left}, goal.right)

        if isinstance(goal, Or) and (self._prove(gamma, goal.left) or self._prove(gamma, goal.right)):
            return True
        for f in gamma:
            if isinstance(f, Implies) and isinstance(f.left, Implies):
                c, d, b = f.left.left, f.left.right, f.right
                rest = gamma - {f}
                if self._prove(rest | {Implies(d, b), c}, d) and self._prove(rest | {b}, goal):
                    return True
        return False


_default_prover = Prover()


def configure(budget: Optional[int] = None, cache_cap: Optional[int] = None) -> Prover:
    """Replace the process-wide prover (and its cache)."""
    global _default_prover
    _default_prover = Prover(budget=budget, cache_cap=cache_cap)
    return _default_prover


def prove_ipc(a: Formula, prover: Optional[Prover] = None) -> bool:
    return (prover or _default_prover).prove(a)


def equiv_ipc(a: Formula, b: Formula, prover: Optional[Prover] = None) -> bool:
    return (prover or _default_prover).equivalent(a, b)


def prove_cpc(a: Formula) -> bool:
    """Truth-table check, vectorised over blocks of assignments."""
    names = sorted(variables(a))
    k = len(names)
    if k > MAX_CPC_VARIABLES:
        raise TruthTableBudgetExceeded(f"{k} variables exceed the truth-table cap of {MAX_CPC_VARIABLES}")
    total = 1 << k
    chunk = 1 << min(k, CPC_CHUNK_BITS)
    order = nodes(a)
    for start in range(0, total, chunk):
        rows = np.arange(start, min(start + chunk, total), dtype=np.int64)
        values: dict[int, np.ndarray] = {}
        for f in order:
            if isinstance(f, Var):
                value = ((rows >> names.index(f.name)) & 1).astype(bool)
            elif isinstance(f, Bottom):
                value = np.zeros(rows.shape, dtype=bool)
            elif isinstance(f, And):
                value = values[id(f.left)] & values[id(f.right)]
            elif isinstance(f, Or):
                value = values[id(f.left)] | values[id(f.right)]
            else:
                value = ~values[id(f.left)] | values[id(f.right)]
            values[id(f)] = value
        if not values[id(a)].all():
            return False
    return True


# countermodel oracle


@dataclass(frozen=True)
class Countermodel:
    """A Kripke model whose root does not force ``target``."""

    model: Evaluation
    target: Formula

    @property
    def poset(self) -> RootedPoset:
        return self.model.domain

    def to_text(self) -> str:
        labels = {p: self.model.value(p) for p in range(self.poset.size) if self.model.value(p)}
        return format_model(self.poset, labels=labels)


def countermodel(a: Formula, max_points: int) -> Optional[Countermodel]:
    """
    Smallest refuting Kripke model up to ``max_points`` points.

    Absence is evidence only; a formula may need a larger model.
    """
    names = tuple(sorted(variables(a)))
    labels = powerset_labels(names)
    for domain, masks in kripke_valuations(names, max_points):
        if not DownsetAlgebra(domain).evaluate(a, masks) >> domain.root & 1:
            return Countermodel(model_from_masks(domain, labels, masks), a)
    return None
