from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Mapping, Optional

from ruitenburg.src.evaluation import (
    Evaluation,
    count_classes,
    equiv_n,
    kripke_valuations,
    label_variables,
    model_from_masks,
    point_types,
)
from ruitenburg.src.formula import (
    BOTTOM,
    Formula,
    PositivityError,
    degree,
    iterate_formula,
    iterates,
    occurs_only_positively,
    substitute,
    variables,
)
from ruitenburg.src.logger_download import logger
from ruitenburg.src.poset import (
    TWO,
    DownsetAlgebra,
    LabelPoset,
    ModelText,
    RootedPoset,
    format_model,
    powerset_labels,
    product_labels,
)
from ruitenburg.src.prover import Prover, equiv_ipc
from ruitenburg.src.schemas import PropertyReport
from ruitenburg.src.utils import bits_of, find_index_period, get_reply_text

REFUTATION_POINTS = 3
REFUTATION_MAX_VARIABLES = 3


class VariableMismatchError(ValueError):
    pass


class IndexSearchExhausted(RuntimeError):
    pass


class FixpointError(RuntimeError):
    pass


@lru_cache(maxsize=None)
def combined_labels(v_labels: LabelPoset) -> LabelPoset:
    """Label poset of the pairs (v(p), u(p)); index ``i * 2 + bit``."""
    return product_labels(v_labels, TWO)


def _two_valued(domain: RootedPoset, mask: int, check: bool = False) -> Evaluation:
    return Evaluation(domain, TWO, [mask >> p & 1 for p in range(domain.size)], check=check)


@dataclass(frozen=True)
class CombinedModel:
    """
    A model split into the fixed part ``v`` (over the powerset of the
    parameters) and the x-part ``u`` over TWO, where ``u(p) = 1`` means
    ``p`` forces ``x``.
    """

    v: Evaluation
    u: Evaluation
    x: str = "x"

    def __post_init__(self):
        if self.v.domain != self.u.domain:
            raise ValueError("The two parts of a combined model must share their poset")
        if self.u.labels != TWO:
            raise ValueError("The x-part must be an evaluation over TWO")
        if self.x in label_variables(self.v.labels):
            raise VariableMismatchError(f"{self.x!r} is both the iterated variable and a parameter")

    @classmethod
    def from_masks(
        cls,
        domain: RootedPoset,
        parameters: Iterable[str],
        masks: Mapping[str, int],
        x_mask: int,
        x: str = "x",
    ) -> "CombinedModel":
        labels = powerset_labels(tuple(sorted(set(parameters))))
        full = {name: masks.get(name, 0) for name in labels.elements[-1]}
        v = model_from_masks(domain, labels, full)
        if not v.is_order_preserving():
            raise ValueError("Parameter sets must be downward closed")
        return cls(v, _two_valued(domain, x_mask, check=True), x)

    @classmethod
    def from_model_text(
        cls, text: ModelText, parameters: Optional[Iterable[str]] = None, x: str = "x"
    ) -> "CombinedModel":
        names = set(parameters or ())
        for label in text.labels.values():
            names |= label
        names.discard(x)
        masks = {name: 0 for name in names}
        x_mask = 0
        for p, label in text.labels.items():
            for name in label:
                if name == x:
                    x_mask |= 1 << p
                else:
                    masks[name] |= 1 << p
        for p, bit in text.bits.items():
            x_mask = x_mask | (1 << p) if bit else x_mask & ~(1 << p)
        return cls.from_masks(text.poset, names, masks, x_mask, x)

    @property
    def poset(self) -> RootedPoset:
        return self.v.domain

    @property
    def parameters(self) -> frozenset[str]:
        return label_variables(self.v.labels)

    @property
    def x_mask(self) -> int:
        return sum(1 << p for p, bit in enumerate(self.u.values) if bit)

    def env(self, x_mask: Optional[int] = None) -> dict[str, int]:
        masks = self.v.variable_masks()
        masks[self.x] = self.x_mask if x_mask is None else x_mask
        return masks

    def with_x_mask(self, mask: int) -> "CombinedModel":
        return CombinedModel(self.v, _two_valued(self.poset, mask), self.x)

    def restrict(self, p: int) -> "CombinedModel":
        return CombinedModel(self.v.restrict(p), self.u.restrict(p), self.x)

    def as_evaluation(self) -> Evaluation:
        """The same model as one evaluation over ``combined_labels``."""
        values = [vi * 2 + ui for vi, ui in zip(self.v.values, self.u.values)]
        return Evaluation(self.poset, combined_labels(self.v.labels), values, check=False)

    def to_text(self) -> str:
        labels = {p: self.v.value(p) for p in range(self.poset.size) if self.v.value(p)}
        bits = {p: 1 for p in bits_of(self.x_mask)}
        return format_model(self.poset, labels=labels, bits=bits)


def _check_variables(a: Formula, m: CombinedModel) -> None:
    extra = variables(a) - m.parameters - {m.x}
    if extra:
        raise VariableMismatchError(
            f"Formula uses {sorted(extra)} outside x={m.x!r} and parameters {sorted(m.parameters)}"
        )


def chi_mask(a: Formula, m: CombinedModel) -> int:
    _check_variables(a, m)
    return DownsetAlgebra(m.poset).evaluate(a, m.env())


def chi(a: Formula, m: CombinedModel) -> Evaluation:
    """The x-part after one substitution step: the points forcing ``a``."""
    return _two_valued(m.poset, chi_mask(a, m))


def psi(a: Formula, m: CombinedModel) -> CombinedModel:
    return m.with_x_mask(chi_mask(a, m))


# traces


@dataclass(frozen=True)
class IterationTrace:
    """
    The x-parts ``u_0, u_1, ...`` of the iterates of ``psi``, as bitmasks.

    When the trace is complete, ``states`` holds ``u_0 .. u_{N+k-1}`` and
    every later state is read off through the period.
    """

    formula: Formula
    model: CombinedModel
    states: tuple[int, ...]
    index: Optional[int]
    period: Optional[int]
    b_index: int

    @property
    def complete(self) -> bool:
        return self.index is not None

    def state(self, s: int) -> int:
        if s < len(self.states):
            return self.states[s]
        if not self.complete:
            raise IndexError(f"Step {s} is past an incomplete trace of {len(self.states)} states")
        return self.states[self.index + (s - self.index) % self.period]

    def model_at(self, s: int) -> CombinedModel:
        return self.model.with_x_mask(self.state(s))

    @cached_property
    def first_periodic_steps(self) -> tuple[Optional[int], ...]:
        """Per point, the first step at which its downset is 2-periodic."""
        last = self.index if self.complete else len(self.states) - 3
        out = []
        for p in range(self.model.poset.size):
            out.append(next((s for s in range(last + 1) if is_periodic_point(self, p, s)), None))
        return tuple(out)

    def to_lines(self) -> list[str]:
        size = self.model.poset.size
        lines = ["".join(str(mask >> p & 1) for p in range(size)) for mask in self.states]
        if self.complete:
            lines.append(f"index {self.index} period {self.period}")
        else:
            lines.append(get_reply_text("incomplete_trace", steps=len(self.states) - 1))
        return lines


def iterate_psi(a: Formula, m: CombinedModel, t_max: int) -> IterationTrace:
    if t_max < 1:
        raise ValueError(f"t_max must be positive, got {t_max}")
    _check_variables(a, m)
    algebra = DownsetAlgebra(m.poset)
    env = m.env()

    def step(mask: int) -> int:
        env[m.x] = mask
        return algebra.evaluate(a, env)

    states, index, period = find_index_period(step, m.x_mask, t_max)
    if index is None:
        logger.debug(f"Trace of {a} on {m.poset.size} points incomplete after {t_max} steps")
    return IterationTrace(a, m, tuple(states), index, period, max(1, degree(a)))


def is_periodic_point(trace: IterationTrace, p: int, s: int) -> bool:
    """``u_s`` and ``u_{s+2}`` agree on the downset of ``p``."""
    down = trace.model.poset.down_masks[p]
    return (trace.state(s) ^ trace.state(s + 2)) & down == 0


def _full_trace(a: Formula, m: CombinedModel) -> IterationTrace:
    return iterate_psi(a, m, (1 << m.poset.size) + 2)


def check_lemma_period(a: Formula, m: CombinedModel) -> PropertyReport:
    """
    At a point whose strict downset is periodic, either the point is periodic
    now or after one step; and a non-periodic point forcing x stops forcing it.
    """
    trace = _full_trace(a, m)
    report = PropertyReport(name="lemma_period")
    poset = m.poset
    u0, u1 = trace.state(0), trace.state(1)
    for p in range(poset.size):
        if not all(is_periodic_point(trace, q, 0) for q in poset.strictly_below(p)):
            continue
        report.checked += 1
        if is_periodic_point(trace, p, 0):
            continue
        if not is_periodic_point(trace, p, 1):
            report.violation(f"{a}: point {p} is periodic neither at step 0 nor at step 1")
        if u0 >> p & 1 and u1 >> p & 1:
            report.violation(f"{a}: non-periodic point {p} keeps x after one step")
    return report


def rank(trace: IterationTrace, p: int, s: int) -> int:
    """Distinct pairs of depth ``n-1`` types of ``(v, u_s)`` and ``(v, u_{s+1})`` over periodic points below ``p``."""
    depth = trace.b_index - 1
    now = point_types(trace.model_at(s).as_evaluation(), depth)
    after = point_types(trace.model_at(s + 1).as_evaluation(), depth)
    pairs = {
        (now[q], after[q]) for q in trace.model.poset.below(p) if is_periodic_point(trace, q, s)
    }
    return len(pairs)


def check_lemma_minrank(trace: IterationTrace, s: int = 0, horizon: int = 4) -> PropertyReport:
    """
    At a non-periodic point of minimal rank whose non-periodic downset carries
    one constant label, all non-periodic points below it stay n-equivalent
    for ``horizon`` further steps.
    """
    report = PropertyReport(name="lemma_minrank")
    poset = trace.model.poset
    n = trace.b_index
    nonperiodic = [p for p in range(poset.size) if not is_periodic_point(trace, p, s)]
    ranks = {p: rank(trace, p, s) for p in nonperiodic}
    start = trace.model_at(s).as_evaluation()
    for p in nonperiodic:
        lower = [q for q in nonperiodic if poset.le(q, p)]
        if any(ranks[q] != ranks[p] for q in lower):
            continue
        if len({start.values[q] for q in lower}) != 1:
            continue
        report.checked += 1
        for m in range(horizon + 1):
            types = point_types(trace.model_at(s + m).as_evaluation(), n)
            if len({types[q] for q in lower}) != 1:
                report.violation(f"{trace.formula}: points below {p} split after {m} steps")
                break
    return report


def check_height_periodicity(trace: IterationTrace) -> PropertyReport:
    """After height(P) steps every point is 2-periodic."""
    report = PropertyReport(name="index_from_height", checked=1)
    h = trace.model.poset.height()
    if trace.state(h) != trace.state(h + 2):
        report.violation(f"{trace.formula}: not 2-periodic after {h} steps on {trace.model.poset.size} points")
    return report


def check_index_decreases(a: Formula, m1: CombinedModel, m2: CombinedModel, k: int) -> PropertyReport:
    """``(n+k)``-equivalent inputs give ``k``-equivalent images, with ``n = max(1, degree(a))``."""
    report = PropertyReport(name="index_decreases")
    n = max(1, degree(a))
    if not equiv_n(m1.as_evaluation(), m2.as_evaluation(), n + k):
        return report
    report.checked += 1
    if not equiv_n(psi(a, m1).as_evaluation(), psi(a, m2).as_evaluation(), k):
        report.violation(f"{a}: {n + k}-equivalent models have images that are not {k}-equivalent")
    if chi(a, m1).root_label != chi(a, m2).root_label:
        report.violation(f"{a}: {n}-equivalent models disagree on the root after one step")
    return report


def check_duality_bridge(a: Formula, m: CombinedModel, i_max: int) -> PropertyReport:
    """Forcing ``A^i`` at the root agrees with the root of the i-th step."""
    report = PropertyReport(name="duality_bridge")
    trace = iterate_psi(a, m, i_max + 1)
    algebra = DownsetAlgebra(m.poset)
    env = m.env()
    root = m.poset.root
    for i, power in enumerate(itertools.islice(iterates(a, m.x), i_max), start=1):
        report.checked += 1
        forced = algebra.evaluate(power, env) >> root & 1
        if forced != trace.state(i) >> root & 1:
            report.violation(f"{a}: power {i} disagrees with step {i} at the root")
    return report


# Ruitenburg index


def semantic_refutations(
    a: Formula, x: str, n_cap: int, max_points: int = REFUTATION_POINTS
) -> tuple[frozenset[int], frozenset[int]]:
    """
    Values of N ruled out by a small model: those with ``A^{N+2}`` and
    ``A^N`` forced at different points somewhere, and those with
    ``A^{N+1}`` and ``A^N`` different.

    The truth set of ``A^i`` is the i-th iterate of the x-step started
    from the truth set of ``x``.
    """
    names = variables(a) | {x}
    if len(names) > REFUTATION_MAX_VARIABLES:
        max_points = min(max_points, 2)
    not_two, not_one = set(), set()
    for domain, masks in kripke_valuations(names, max_points):
        algebra = DownsetAlgebra(domain)
        env = dict(masks)

        def step(mask: int) -> int:
            env[x] = mask
            return algebra.evaluate(a, env)

        _, index, period = find_index_period(step, masks[x], (1 << domain.size) + 1)
        for n in range(1, n_cap + 1):
            if n < index or 2 % period:
                not_two.add(n)
            if n < index or period != 1:
                not_one.add(n)
    return frozenset(not_two), frozenset(not_one)


def semantic_lower_bound(a: Formula, x: str, n_cap: int, max_points: int = REFUTATION_POINTS) -> int:
    refuted, _ = semantic_refutations(a, x, n_cap, max_points)
    return next((n for n in range(1, n_cap + 1) if n not in refuted), n_cap + 1)


def ruitenburg_index(
    a: Formula,
    x: str,
    n_cap: int,
    prover: Optional[Prover] = None,
    refute_points: int = REFUTATION_POINTS,
) -> tuple[int, int]:
    """
    Least ``N >= 1`` with ``A^{N+2}`` equivalent to ``A^N``, and the period.

    Candidates refuted on small models are skipped before the prover is
    asked.

    Raises
    ------
    IndexSearchExhausted
        When no ``N <= n_cap`` works; this points at a budget problem.
    """
    not_two, not_one = semantic_refutations(a, x, n_cap, refute_points)
    powers = list(itertools.islice(iterates(a, x), n_cap + 2))
    for n in range(1, n_cap + 1):
        if n in not_two:
            continue
        if equiv_ipc(powers[n + 1], powers[n - 1], prover):
            period = 2 if n in not_one or not equiv_ipc(powers[n], powers[n - 1], prover) else 1
            logger.debug(f"Index of {a} in {x}: N={n} period={period}")
            return n, period
    raise IndexSearchExhausted(f"No index up to {n_cap} for {a}; check the prover budget")


def fixpoint_check(a: Formula, x: str, n_cap: int, prover: Optional[Prover] = None) -> Formula:
    """``A^N(_|_/x)`` for the index ``N``, verified to be a fixpoint of ``A``."""
    if not occurs_only_positively(a, x):
        raise PositivityError(f"{x} occurs negatively in {a}")
    n, _ = ruitenburg_index(a, x, n_cap, prover)
    b = substitute(iterate_formula(a, x, n), {x: BOTTOM})
    if not equiv_ipc(substitute(a, {x: b}), b, prover):
        raise FixpointError(f"A^{n}(_|_) is not a fixpoint of {a}")
    return b


def index_bound(label_height: int, max_rank: int) -> int:
    """Steps after which every point is periodic: 1 for height 1, plus ``2 * max_rank`` per extra level."""
    if label_height < 1:
        raise ValueError(f"label height must be positive, got {label_height}")
    return 1 + 2 * max_rank * (label_height - 1)


def max_rank_estimate(v_labels: LabelPoset, n: int, max_width: int) -> int:
    """Square of the number of depth ``n-1`` classes over the combined labels."""
    classes = count_classes(combined_labels(v_labels), n - 1, max_width)
    return classes * classes
