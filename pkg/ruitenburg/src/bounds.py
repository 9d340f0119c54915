from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from ruitenburg.src.evaluation import Evaluation, label_variables
from ruitenburg.src.formula import Formula, variables
from ruitenburg.src.iteration import IterationTrace, combined_labels
from ruitenburg.src.logger_download import logger
from ruitenburg.src.poset import DownsetAlgebra, LabelPoset
from ruitenburg.src.schemas import EndoExperimentReport, PropertyReport
from ruitenburg.src.utils import find_index_period, lcm_upto

MAX_COUNTEREXAMPLE_BITS = 16
MAX_CLASSICAL_T = 6


@dataclass(frozen=True)
class LabelTrace:
    """Iterates of a map on evaluations over one poset, as label indices per point."""

    labels: LabelPoset
    states: tuple[tuple[int, ...], ...]
    index: Optional[int]
    period: Optional[int]
    formula_induced: bool = False

    @classmethod
    def from_iteration(cls, trace: IterationTrace) -> "LabelTrace":
        v = trace.model.v.values
        states = tuple(tuple(v[p] * 2 + (mask >> p & 1) for p in range(len(v))) for mask in trace.states)
        return cls(combined_labels(trace.model.v.labels), states, trace.index, trace.period, True)

    @property
    def complete(self) -> bool:
        return self.index is not None


@dataclass(frozen=True)
class ViewSet:
    point: int
    labels: frozenset


def _as_label_trace(trace: Union[IterationTrace, LabelTrace]) -> LabelTrace:
    return LabelTrace.from_iteration(trace) if isinstance(trace, IterationTrace) else trace


def view_set(trace: Union[IterationTrace, LabelTrace, Sequence[Sequence[int]]], p: int) -> ViewSet:
    """Labels taken by point ``p`` along the iteration."""
    if isinstance(trace, (IterationTrace, LabelTrace)):
        states = _as_label_trace(trace).states
    else:
        states = trace
    return ViewSet(p, frozenset(state[p] for state in states))


def substitution_trace(substitution: Mapping[str, Formula], model: Evaluation, t_max: int) -> LabelTrace:
    """
    Iterate a simultaneous substitution on a Kripke model: each substituted
    variable becomes true where its formula is forced, the others stay.
    """
    names = tuple(sorted(label_variables(model.labels)))
    missing = set().union(*(variables(f) for f in substitution.values())) - set(names)
    if missing or set(substitution) - set(names):
        raise ValueError(f"Substitution mentions variables outside the model labels: {sorted(missing)}")
    algebra = DownsetAlgebra(model.domain)
    masks = model.variable_masks()

    def step(state: tuple[int, ...]) -> tuple[int, ...]:
        env = dict(zip(names, state))
        return tuple(
            algebra.evaluate(substitution[name], env) if name in substitution else env[name] for name in names
        )

    visited, index, period = find_index_period(step, tuple(masks[name] for name in names), t_max)
    labels = model.labels
    states = []
    for state in visited:
        row = []
        for p in range(model.domain.size):
            row.append(labels.index(frozenset(n for n, m in zip(names, state) if m >> p & 1)))
        states.append(tuple(row))
    return LabelTrace(labels, tuple(states), index, period)


def check_period_bound(trace: Union[IterationTrace, LabelTrace]) -> PropertyReport:
    """The period is at most ``K!`` for the view set of the whole model and at most ``|L|!``."""
    trace = _as_label_trace(trace)
    report = PropertyReport(name="period_bound", checked=1)
    if not trace.complete:
        report.violation(f"trace incomplete after {len(trace.states)} states")
        return report
    size = len(trace.states[0])
    seen = frozenset().union(*(view_set(trace, p).labels for p in range(size)))
    k = len(seen)
    if trace.period > math.factorial(k):
        report.violation(f"period {trace.period} exceeds {k}! for a view set of {k} labels")
    if trace.period > math.factorial(trace.labels.size):
        report.violation(f"period {trace.period} exceeds {trace.labels.size}!")
    if trace.formula_induced and trace.period > 2:
        report.violation(f"one-variable substitution with period {trace.period}")
    return report


def factorial_inequality(m: int, n: int) -> bool:
    """``n * m! <= (m + n - 1)!``."""
    if m < 1 or n < 1:
        raise ValueError(f"factorial_inequality needs positive arguments, got ({m}, {n})")
    return n * math.factorial(m) <= math.factorial(m + n - 1)


def _orbit(table: np.ndarray, start: int) -> list[int]:
    out = [start]
    current = int(table[start])
    while current != start:
        out.append(current)
        current = int(table[current])
    return out


def nonmonotone_counterexample(n: int) -> tuple[np.ndarray, int]:
    """
    A bijection on bit-words of length ``n`` whose period is ``2**n``.

    Word ``(w, x)`` is coded as ``code(w) * 2 + x``. The map on words of
    length ``i + 1`` moves ``w`` by the map on length ``i`` and flips ``x``
    only at the last word of the orbit of the all-zeros word.
    """
    if not 1 <= n <= MAX_COUNTEREXAMPLE_BITS:
        raise ValueError(f"n must be between 1 and {MAX_COUNTEREXAMPLE_BITS}, got {n}")
    table = np.array([1, 0], dtype=np.int64)
    for i in range(1, n):
        size = 1 << i
        last = _orbit(table, 0)[size - 1]
        words = np.arange(size, dtype=np.int64)
        extended = np.empty(2 * size, dtype=np.int64)
        extended[words * 2] = table[words] * 2
        extended[words * 2 + 1] = table[words] * 2 + 1
        extended[last * 2] = table[last] * 2 + 1
        extended[last * 2 + 1] = table[last] * 2
        table = extended
    _, index, period = find_index_period(lambda w: int(table[w]), 0, (1 << n) + 1)
    logger.debug(f"Counterexample on {n} bits: index {index} period {period}")
    return table, period


def function_index_period(table: Sequence[int]) -> tuple[int, int]:
    """Index and period of the powers of a function on ``0 .. k-1``, by iterating the whole function."""
    table = np.asarray(table, dtype=np.int64)
    limit = math.factorial(len(table)) + len(table) + 1

    def step(state: tuple[int, ...]) -> tuple[int, ...]:
        return tuple(int(table[s]) for s in state)

    _, index, period = find_index_period(step, tuple(range(len(table))), limit)
    return index, period


def global_index_period(table: Sequence[int]) -> tuple[int, int]:
    """Max of the tail lengths and lcm of the cycle lengths over all starting points."""
    index, period = 0, 1
    for start in range(len(table)):
        _, tail, cycle = find_index_period(lambda s: int(table[s]), start, len(table) + 1)
        index = max(index, tail)
        period = math.lcm(period, cycle)
    return index, period


def classical_table(g: Sequence[Sequence[int]]) -> np.ndarray:
    """``f(t, b) = (t, g[t][b])`` on ``T x 2`` coded as ``t * 2 + b``."""
    return np.array([t * 2 + g[t][b] for t in range(len(g)) for b in (0, 1)], dtype=np.int64)


THREE_COMPONENTS = ((0, 1), (1, 0), (1, 1))


def classical_f3(t_size: int) -> PropertyReport:
    """``f^3 = f`` for every ``f = <pi_0, g>`` on ``T x 2``, and the max/lcm rule on a fixture."""
    if not 1 <= t_size <= MAX_CLASSICAL_T:
        raise ValueError(f"t_size must be between 1 and {MAX_CLASSICAL_T}, got {t_size}")
    report = PropertyReport(name=f"classical_f3[t={t_size}]")
    bit_maps = list(itertools.product((0, 1), repeat=2))
    for g in itertools.product(bit_maps, repeat=t_size):
        f = classical_table(g)
        report.checked += 1
        if not np.array_equal(f[f[f]], f):
            report.violation(f"f^3 != f for g={g}")
        if global_index_period(f) != function_index_period(f):
            report.violation(f"max/lcm rule fails for g={g}")
    report.checked += 1
    fixture = classical_table(THREE_COMPONENTS)
    if global_index_period(fixture) != (1, 2) or function_index_period(fixture) != (1, 2):
        report.violation("three-component fixture does not have index 1 and period 2")
    return report


def boolean_endo_experiment(
    n: int, samples: int = 0, rng: Optional[np.random.Generator] = None
) -> EndoExperimentReport:
    """
    Index and period of maps on a ``2**n``-point set; exhaustive for
    ``n <= 2``, otherwise ``samples`` random maps.
    """
    k = 1 << n
    report = EndoExperimentReport(name=f"boolean_endo[n={n}]")
    bound = lcm_upto(k)
    if bound > math.factorial(k):
        report.violation(f"lcm(1..{k}) exceeds {k}!")
    if n <= 2:
        tables = (np.array(t, dtype=np.int64) for t in itertools.product(range(k), repeat=k))
    else:
        rng = rng or np.random.default_rng(0)
        tables = (rng.integers(0, k, size=k) for _ in range(samples))
    for table in tables:
        index, period = global_index_period(table)
        report.checked += 1
        report.observe(index, period)
        if period > bound:
            report.violation(f"period {period} exceeds lcm(1..{k}) = {bound}")
    report.notes.append(f"max index {report.max_index}, max period {report.max_period}, lcm bound {bound}")
    return report
