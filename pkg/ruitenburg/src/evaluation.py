from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Optional, Sequence

from ruitenburg.src.formula import Formula, variables
from ruitenburg.src.logger_download import logger
from ruitenburg.src.poset import (
    DownsetAlgebra,
    LabelPoset,
    RootedPoset,
    monotone_maps,
    powerset_labels,
    rooted_posets,
)
from ruitenburg.src.utils import popcount

DEFAULT_CLASS_CAP = 50000


class UnknownVariableError(KeyError):
    pass


class WidthBudgetExceeded(RuntimeError):
    pass


class Evaluation:
    """
    An order-preserving map from a rooted poset into a label poset.

    ``values[p]`` is the index of the label of point ``p`` in
    ``labels.elements``. For Kripke models the labels are
    ``powerset_labels(vars)``, so a point below another carries a
    superset of its variables.
    """

    __slots__ = ("domain", "labels", "values", "_hash")

    def __init__(self, domain: RootedPoset, labels: LabelPoset, values: Sequence[int], check: bool = True):
        values = tuple(int(v) for v in values)
        if len(values) != domain.size:
            raise ValueError(f"Evaluation has {len(values)} values for {domain.size} points")
        self.domain = domain
        self.labels = labels
        self.values = values
        self._hash = hash((domain.leq.tobytes(), domain.size, values, labels.size))
        if check and not self.is_order_preserving():
            raise ValueError("Evaluation is not order-preserving")

    @classmethod
    def from_elements(cls, domain: RootedPoset, labels: LabelPoset, elements: Sequence, check: bool = True):
        return cls(domain, labels, [labels.index(e) for e in elements], check=check)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Evaluation)
            and self.values == other.values
            and self.labels.elements == other.labels.elements
            and self.domain == other.domain
        )

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        shown = [self.labels.elements[v] for v in self.values]
        return f"Evaluation(covers={self.domain.covers()}, root={self.domain.root}, values={shown})"

    def is_order_preserving(self) -> bool:
        d, l, v = self.domain, self.labels, self.values
        return all(l.le(v[i], v[j]) for j in range(d.size) for i in d.below(j))

    def value(self, p: int):
        return self.labels.elements[self.values[p]]

    @property
    def root_value(self):
        return self.value(self.domain.root)

    @property
    def root_label(self) -> int:
        return self.values[self.domain.root]

    def restrict(self, p: int) -> "Evaluation":
        points = self.domain.below(p)
        return Evaluation(self.domain.downset(p), self.labels, [self.values[q] for q in points], check=False)

    def variable_masks(self) -> dict[str, int]:
        """For powerset labels: the set of points carrying each variable."""
        masks = {name: 0 for name in label_variables(self.labels)}
        for p, v in enumerate(self.values):
            for name in self.labels.elements[v]:
                masks[name] |= 1 << p
        return masks


def label_variables(labels: LabelPoset) -> frozenset[str]:
    out: frozenset[str] = frozenset()
    for element in labels.elements:
        out |= element
    return out


def kripke_model(
    domain: RootedPoset, valuation: Mapping[int, Iterable[str]], names: Optional[Iterable[str]] = None
) -> Evaluation:
    """Evaluation over ``powerset_labels(names)`` with ``valuation[p]`` the variables true at ``p``."""
    labels_at = {p: frozenset(valuation.get(p, ())) for p in range(domain.size)}
    names = tuple(sorted(set(names) if names is not None else set().union(*labels_at.values())))
    labels = powerset_labels(names)
    return Evaluation.from_elements(domain, labels, [labels_at[p] for p in range(domain.size)])


def model_from_masks(domain: RootedPoset, labels: LabelPoset, masks: Mapping[str, int]) -> Evaluation:
    elements = [frozenset(name for name, m in masks.items() if m >> p & 1) for p in range(domain.size)]
    return Evaluation.from_elements(domain, labels, elements, check=False)


def truth_set(u: Evaluation, a: Formula) -> int:
    """Bitmask of the points of ``u`` forcing ``a``."""
    known = label_variables(u.labels)
    missing = variables(a) - known
    if missing:
        raise UnknownVariableError(f"Variables {sorted(missing)} are not in the label set {sorted(known)}")
    return DownsetAlgebra(u.domain).evaluate(a, u.variable_masks())


def forces(u: Evaluation, a: Formula, p: Optional[int] = None) -> bool:
    """Forcing at ``p`` (the root by default); implication looks at every point below."""
    point = u.domain.root if p is None else p
    return bool(truth_set(u, a) >> point & 1)


# bounded bisimulation types


@dataclass(frozen=True, eq=False)
class BisimType:
    """
    Canonical invariant of an evaluation up to the n-round game.

    Depth 0 is the root label; depth ``k+1`` pairs the root label with the
    set of depth-``k`` types of all points. Children are kept sorted by
    ``code``, and instances are interned, so equal types are usually the
    same object.
    """

    depth: int
    label: int
    children: tuple["BisimType", ...]
    code: tuple = field(repr=False)
    _hash: int = field(repr=False)

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        return (
            isinstance(other, BisimType)
            and self._hash == other._hash
            and self.depth == other.depth
            and self.code == other.code
        )

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: "BisimType") -> bool:
        return (self.depth, self.code) < (other.depth, other.code)

    @property
    def members(self) -> frozenset["BisimType"]:
        return frozenset(self.children)

    def describe(self, labels: Optional[LabelPoset] = None) -> str:
        shown = labels.elements[self.label] if labels is not None else self.label
        if isinstance(shown, frozenset):
            shown = "{" + ",".join(sorted(shown)) + "}"
        if self.depth == 0:
            return str(shown)
        return f"({shown}; " + " ".join(c.describe(labels) for c in self.children) + ")"


_TYPE_TABLE: dict[tuple, BisimType] = {}
_TYPE_LOCK = threading.Lock()


def make_type(depth: int, label: int, children: Iterable[BisimType] = ()) -> BisimType:
    """Insert-or-get in the process-wide type table."""
    ordered = tuple(sorted(set(children))) if depth > 0 else ()
    key = (depth, label, ordered)
    found = _TYPE_TABLE.get(key)
    if found is not None:
        return found
    code = (label, tuple(c.code for c in ordered))
    with _TYPE_LOCK:
        return _TYPE_TABLE.setdefault(key, BisimType(depth, label, ordered, code, hash((depth, code))))


@lru_cache(maxsize=1 << 16)
def truncate(t: BisimType, m: int) -> BisimType:
    """The depth-``m`` type determined by ``t`` (``m <= t.depth``)."""
    if m > t.depth:
        raise ValueError(f"Cannot raise a depth-{t.depth} type to depth {m}")
    if m == t.depth:
        return t
    if m == 0:
        return make_type(0, t.label)
    return make_type(m, t.label, (truncate(c, m - 1) for c in t.children))


@lru_cache(maxsize=1 << 14)
def point_types(u: Evaluation, n: int) -> tuple[BisimType, ...]:
    """Depth-``n`` type of every restriction ``u_p``."""
    current = tuple(make_type(0, v) for v in u.values)
    for k in range(1, n + 1):
        current = tuple(
            make_type(k, u.values[p], (current[q] for q in u.domain.below(p))) for p in range(u.domain.size)
        )
    return current


def bisim_type(u: Evaluation, n: int) -> BisimType:
    return point_types(u, n)[u.domain.root]


def _same_labels(u: Evaluation, v: Evaluation) -> None:
    if u.labels.elements != v.labels.elements:
        raise ValueError("Evaluations are over different label posets")


def equiv_n(u: Evaluation, v: Evaluation, n: int) -> bool:
    _same_labels(u, v)
    return bisim_type(u, n) == bisim_type(v, n)


def type_leq(s: BisimType, t: BisimType, labels: LabelPoset) -> bool:
    """The order between classes: labels at depth 0, inclusion of member sets above."""
    if s.depth == 0:
        return labels.le(s.label, t.label)
    return s.members <= t.members


def leq_n(v: Evaluation, u: Evaluation, n: int) -> bool:
    """``v <=_n u``: every point of ``v`` has a point of ``u`` of the same depth-(n-1) type."""
    _same_labels(u, v)
    return type_leq(bisim_type(v, n), bisim_type(u, n), u.labels)


# representatives


def graft_evaluation(label: int, children: Sequence[Evaluation], labels: LabelPoset) -> Evaluation:
    domain, _ = RootedPoset.graft([c.domain for c in children])
    values = [label]
    for child in children:
        values += list(child.values)
    return Evaluation(domain, labels, values, check=False)


def graft_type(label: int, child_types: Sequence[BisimType], n: int) -> BisimType:
    """Depth-``n`` type of a new root over subtrees with the given depth-``n`` types."""
    if n == 0:
        return make_type(0, label)
    root_below = graft_type(label, [truncate(c, n - 1) for c in child_types], n - 1)
    members = {root_below}
    for c in child_types:
        members.update(c.children)
    return make_type(n, label, members)


def reduced_trees(
    l: LabelPoset, n: int, max_width: int, class_cap: int = DEFAULT_CLASS_CAP
) -> list[Evaluation]:
    """
    Tree-shaped evaluations of height at most ``n+1``, one per depth-``n`` type.

    Subtrees at each level are themselves representatives, so siblings are
    pairwise inequivalent; ``max_width`` bounds the number of children.

    Raises
    ------
    WidthBudgetExceeded
        When more than ``class_cap`` classes appear at one level.
    """
    found: dict[BisimType, Evaluation] = {}
    for label in range(l.size):
        leaf = Evaluation(RootedPoset.single(), l, [label], check=False)
        found.setdefault(bisim_type(leaf, n), leaf)
    for height in range(2, n + 2):
        previous = sorted(found.items())
        for label in range(l.size):
            candidates = [(t, e) for t, e in previous if l.le(e.root_label, label)]
            for width in range(1, max_width + 1):
                for combo in itertools.combinations(candidates, width):
                    t = graft_type(label, [c[0] for c in combo], n)
                    if t not in found:
                        found[t] = graft_evaluation(label, [c[1] for c in combo], l)
                        if len(found) > class_cap:
                            raise WidthBudgetExceeded(
                                f"More than {class_cap} classes at depth {n}; lower max_width or n"
                            )
        logger.debug(f"reduced_trees: {len(found)} classes after height {height}")
    return [found[t] for t in sorted(found)]


def count_classes(l: LabelPoset, n: int, max_width: int) -> int:
    return len(reduced_trees(l, n, max_width))


# exhaustive pools


def all_evaluations(labels: LabelPoset, max_points: int) -> Iterator[Evaluation]:
    """Every evaluation on every rooted poset up to ``max_points`` points (posets up to isomorphism)."""
    for size in range(1, max_points + 1):
        for domain in rooted_posets(size):
            for values in monotone_maps(domain, labels):
                yield Evaluation(domain, labels, values, check=False)


def kripke_valuations(names: Iterable[str], max_points: int) -> Iterator[tuple[RootedPoset, dict[str, int]]]:
    """
    Rooted posets with one downset per variable, ordered by poset size and
    then by the total number of (point, variable) labels.
    """
    names = tuple(sorted(set(names)))
    for size in range(1, max_points + 1):
        for domain in rooted_posets(size):
            combos = list(itertools.product(domain.downsets(), repeat=len(names)))
            combos.sort(key=lambda masks: (sum(popcount(m) for m in masks), masks))
            for masks in combos:
                yield domain, dict(zip(names, masks))


def kripke_models(names: Iterable[str], max_points: int) -> Iterator[Evaluation]:
    names = tuple(sorted(set(names)))
    labels = powerset_labels(names)
    for domain, masks in kripke_valuations(names, max_points):
        yield model_from_masks(domain, labels, masks)
