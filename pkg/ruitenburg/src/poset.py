from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Hashable, Iterable, Iterator, Mapping, Optional, Sequence

import numpy as np

from ruitenburg.src.formula import And, Bottom, Formula, Implies, Or, Var, nodes
from ruitenburg.src.logger_download import logger
from ruitenburg.src.utils import bits_of, popcount

CANONICAL_PERMUTATION_CAP = 40320


class PosetError(ValueError):
    pass


class NotOrderPreservingError(PosetError):
    pass


class ModelFormatError(ValueError):
    pass


def _transitive_closure(leq: np.ndarray) -> np.ndarray:
    closure = leq.copy()
    for k in range(closure.shape[0]):
        closure |= np.outer(closure[:, k], closure[k, :])
    return closure


class FinitePoset:
    """
    A finite poset on the points ``0 .. size-1``.

    The order is held as a read-only boolean matrix with ``leq[i, j]``
    meaning ``i <= j``. Downsets and upsets of single points are also kept
    as integer bitmasks, which is what the Heyting operations work on.

    Parameters
    ----------
    leq : array-like
        Square boolean matrix of the full relation.
    elements : sequence, optional
        Hashable names of the points (label posets use these); defaults to
        the point indices.
    check : bool
        Verify reflexivity, antisymmetry and transitivity.
    """

    def __init__(self, leq, elements: Optional[Sequence[Hashable]] = None, check: bool = True):
        leq = np.array(leq, dtype=bool)
        if leq.ndim != 2 or leq.shape[0] != leq.shape[1]:
            raise PosetError(f"Order relation must be a square matrix, got shape {leq.shape}")
        n = leq.shape[0]
        if check:
            if not leq.diagonal().all():
                raise PosetError("Relation is not reflexive")
            if (leq & leq.T & ~np.eye(n, dtype=bool)).any():
                raise PosetError("Relation is not antisymmetric")
            if (_transitive_closure(leq) & ~leq).any():
                raise PosetError("Relation is not transitive")
        leq.setflags(write=False)
        self.leq = leq
        self.size = n
        self.elements = tuple(range(n)) if elements is None else tuple(elements)
        if len(self.elements) != n:
            raise PosetError(f"Got {len(self.elements)} element names for {n} points")
        self._index = {e: i for i, e in enumerate(self.elements)}
        self.down_masks = tuple(sum(1 << i for i in range(n) if leq[i, j]) for j in range(n))
        self.up_masks = tuple(sum(1 << j for j in range(n) if leq[i, j]) for i in range(n))
        self.full_mask = (1 << n) - 1

    @classmethod
    def from_covers(cls, size: int, covers: Iterable[tuple[int, int]], elements=None):
        """Build from pairs ``(i, j)`` meaning ``i <= j``, closing transitively."""
        leq = np.eye(size, dtype=bool)
        for i, j in covers:
            leq[i, j] = True
        closure = _transitive_closure(leq)
        if (closure & closure.T & ~np.eye(size, dtype=bool)).any():
            raise PosetError("Cover edges contain a cycle")
        return cls(closure, elements=elements, check=False)

    def __len__(self) -> int:
        return self.size

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FinitePoset)
            and self.elements == other.elements
            and np.array_equal(self.leq, other.leq)
        )

    def __hash__(self) -> int:
        return hash((self.elements, self.leq.tobytes()))

    def __repr__(self) -> str:
        return f"{type(self).__name__}(size={self.size}, covers={self.covers()})"

    def le(self, i: int, j: int) -> bool:
        return bool(self.leq[i, j])

    def index(self, element: Hashable) -> int:
        return self._index[element]

    def below(self, j: int) -> list[int]:
        return bits_of(self.down_masks[j])

    def strictly_below(self, j: int) -> list[int]:
        return bits_of(self.down_masks[j] & ~(1 << j))

    def covers(self) -> list[tuple[int, int]]:
        strict = self.leq & ~np.eye(self.size, dtype=bool)
        through = (strict.astype(np.int64) @ strict.astype(np.int64)) > 0
        cover = strict & ~through
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(cover))]

    @property
    def point_heights(self) -> tuple[int, ...]:
        """Length of the longest chain with maximum at each point."""
        cached = getattr(self, "_point_heights", None)
        if cached is None:
            heights = [0] * self.size
            for j in sorted(range(self.size), key=lambda p: popcount(self.down_masks[p])):
                heights[j] = 1 + max((heights[i] for i in self.strictly_below(j)), default=0)
            cached = tuple(heights)
            self._point_heights = cached
        return cached

    def height(self) -> int:
        return max(self.point_heights, default=0)

    def is_downset(self, mask: int) -> bool:
        return all(self.down_masks[p] & ~mask == 0 for p in bits_of(mask))

    def downset_closure(self, mask: int) -> int:
        out = 0
        for p in bits_of(mask):
            out |= self.down_masks[p]
        return out

    def maximal(self, mask: int) -> list[int]:
        return [p for p in bits_of(mask) if self.up_masks[p] & mask == 1 << p]

    def minimal(self) -> list[int]:
        return [p for p in range(self.size) if self.down_masks[p] == 1 << p]

    def downsets(self) -> list[int]:
        """All downward closed subsets as bitmasks, ordered by size then value."""
        order = sorted(range(self.size), key=lambda p: (self.point_heights[p], p))
        found = [0]
        for p in order:
            below = self.down_masks[p] & ~(1 << p)
            found += [mask | (1 << p) for mask in found if mask & below == below]
        return sorted(found, key=lambda m: (popcount(m), m))

    def mask_of(self, points: Iterable[int]) -> int:
        return sum(1 << p for p in set(points))


class RootedPoset(FinitePoset):
    """A finite poset with a greatest element, the root."""

    def __init__(self, leq, elements=None, check: bool = True):
        super().__init__(leq, elements=elements, check=check)
        roots = [j for j in range(self.size) if self.down_masks[j] == self.full_mask]
        if not roots:
            raise PosetError("Poset has no greatest element")
        self.root = roots[0]

    def downset(self, q: int) -> "RootedPoset":
        """The sub-poset on ``{q' : q' <= q}``; point ``i`` of it is ``self.below(q)[i]``."""
        points = self.below(q)
        return RootedPoset(self.leq[np.ix_(points, points)], check=False)

    @classmethod
    def single(cls) -> "RootedPoset":
        return cls(np.ones((1, 1), dtype=bool), check=False)

    @classmethod
    def chain(cls, n: int) -> "RootedPoset":
        """Chain with root 0 on top and point ``n-1`` at the bottom."""
        idx = np.arange(n)
        return cls(idx[:, None] >= idx[None, :], check=False)

    @classmethod
    def graft(cls, children: Sequence["RootedPoset"]) -> tuple["RootedPoset", list[int]]:
        """
        Put a new root (point 0) above the disjoint union of ``children``.

        Returns the poset and the offset of each child's point 0.
        """
        offsets, size = [], 1
        for child in children:
            offsets.append(size)
            size += child.size
        leq = np.zeros((size, size), dtype=bool)
        leq[:, 0] = True
        for child, offset in zip(children, offsets):
            leq[offset : offset + child.size, offset : offset + child.size] = child.leq
        return cls(leq, check=False), offsets


def add_top(poset: FinitePoset) -> RootedPoset:
    """New greatest point appended as the last index."""
    n = poset.size
    leq = np.zeros((n + 1, n + 1), dtype=bool)
    leq[:n, :n] = poset.leq
    leq[:, n] = True
    return RootedPoset(leq, check=False)


# Heyting algebra of downsets


class DownsetAlgebra:
    """
    Downward closed subsets of a finite poset as a Heyting algebra.

    Elements are bitmasks; ``implies`` keeps the points whose whole downset
    avoids ``a & ~b``, which is the Kripke clause for implication.
    """

    def __init__(self, poset: FinitePoset):
        self.poset = poset
        self.bottom = 0
        self.top = poset.full_mask

    def meet(self, a: int, b: int) -> int:
        return a & b

    def join(self, a: int, b: int) -> int:
        return a | b

    def implies(self, a: int, b: int) -> int:
        bad = a & ~b
        out = 0
        for p, down in enumerate(self.poset.down_masks):
            if down & bad == 0:
                out |= 1 << p
        return out

    def evaluate(self, formula: Formula, env: Mapping[str, int]) -> int:
        """Value of ``formula`` with variables read from ``env``; raises KeyError on a missing one."""
        values: dict[int, int] = {}
        for f in nodes(formula):
            if isinstance(f, Var):
                value = env[f.name]
            elif isinstance(f, Bottom):
                value = self.bottom
            elif isinstance(f, And):
                value = values[id(f.left)] & values[id(f.right)]
            elif isinstance(f, Or):
                value = values[id(f.left)] | values[id(f.right)]
            elif isinstance(f, Implies):
                value = self.implies(values[id(f.left)], values[id(f.right)])
            else:
                raise TypeError(f"Unknown formula node {f!r}")
            values[id(f)] = value
        return values[id(formula)]


# maps


@dataclass(frozen=True)
class PosetMap:
    source: FinitePoset
    target: FinitePoset
    mapping: tuple[int, ...]

    def __post_init__(self):
        if len(self.mapping) != self.source.size:
            raise PosetError(f"Map has {len(self.mapping)} values for {self.source.size} points")

    def __call__(self, point: int) -> int:
        return self.mapping[point]

    def is_order_preserving(self) -> bool:
        f = self.mapping
        return all(
            self.target.le(f[i], f[j])
            for i in range(self.source.size)
            for j in bits_of(self.source.up_masks[i])
        )

    def image_mask(self, mask: int) -> int:
        out = 0
        for p in bits_of(mask):
            out |= 1 << self.mapping[p]
        return out

    def preimage_mask(self, mask: int) -> int:
        return sum(1 << q for q, p in enumerate(self.mapping) if mask >> p & 1)


def is_open(f: PosetMap) -> bool:
    """Every target point below an image is hit from below."""
    if not f.is_order_preserving():
        raise NotOrderPreservingError("Openness is only defined for order-preserving maps")
    for q in range(f.source.size):
        needed = f.target.down_masks[f(q)]
        if f.image_mask(f.source.down_masks[q]) & needed != needed:
            return False
    return True


def compose(g: PosetMap, f: PosetMap) -> PosetMap:
    """``g`` after ``f``."""
    return PosetMap(f.source, g.target, tuple(g(f(q)) for q in range(f.source.size)))


# label posets

LabelPoset = FinitePoset

TWO = FinitePoset([[True, False], [True, True]], elements=(0, 1))


@lru_cache(maxsize=None)
def powerset_labels(variables: tuple[str, ...]) -> LabelPoset:
    """Subsets of ``variables`` ordered by reverse inclusion (bigger sets are lower)."""
    names = tuple(sorted(set(variables)))
    subsets = [frozenset(c) for r in range(len(names) + 1) for c in itertools.combinations(names, r)]
    leq = np.array([[a >= b for b in subsets] for a in subsets], dtype=bool)
    return FinitePoset(leq, elements=subsets, check=False)


def product_labels(l1: LabelPoset, l2: LabelPoset) -> LabelPoset:
    elements = [(a, b) for a in l1.elements for b in l2.elements]
    leq = np.kron(l1.leq.astype(np.int8), l2.leq.astype(np.int8)) > 0
    return FinitePoset(leq, elements=elements, check=False)


def monotone_maps(source: FinitePoset, target: FinitePoset) -> Iterator[tuple[int, ...]]:
    """All order-preserving maps, as tuples of target indices, in lexicographic order."""
    n = source.size
    values = [0] * n
    order = sorted(range(n), key=lambda p: (source.point_heights[p], p))
    position = {p: i for i, p in enumerate(order)}

    def extend(k: int) -> Iterator[tuple[int, ...]]:
        if k == n:
            yield tuple(values)
            return
        p = order[k]
        lower = [values[q] for q in source.strictly_below(p)]
        upper = [values[q] for q in bits_of(source.up_masks[p]) if q != p and position[q] < k]
        for v in range(target.size):
            if all(target.le(w, v) for w in lower) and all(target.le(v, w) for w in upper):
                values[p] = v
                yield from extend(k + 1)

    yield from extend(0)


# canonical forms and enumeration up to isomorphism


def _refined_colors(poset: FinitePoset) -> list[int]:
    covers = poset.covers()
    lower = {p: [] for p in range(poset.size)}
    upper = {p: [] for p in range(poset.size)}
    for i, j in covers:
        lower[j].append(i)
        upper[i].append(j)
    heights = poset.point_heights
    raw = [
        (-heights[p], popcount(poset.down_masks[p]), popcount(poset.up_masks[p]), len(lower[p]))
        for p in range(poset.size)
    ]
    colors = _rank(raw)
    while True:
        raw = [
            (
                colors[p],
                tuple(sorted(colors[q] for q in lower[p])),
                tuple(sorted(colors[q] for q in upper[p])),
            )
            for p in range(poset.size)
        ]
        refined = _rank(raw)
        if len(set(refined)) == len(set(colors)):
            return refined
        colors = refined


def _rank(keys: list) -> list[int]:
    distinct = sorted(set(keys))
    position = {k: i for i, k in enumerate(distinct)}
    return [position[k] for k in keys]


def canonical_order(poset: FinitePoset) -> tuple[bytes, tuple[int, ...]]:
    """
    A canonical labelling of ``poset``.

    Points are sorted by a refined invariant (height first, greatest points
    first, so a root lands on index 0); ties are broken by the
    lexicographically least relation matrix over all permutations inside
    the tied classes.

    Returns
    -------
    tuple
        The canonical code and the order (new index -> old index).
    """
    colors = _refined_colors(poset)
    groups: dict[int, list[int]] = {}
    for p in sorted(range(poset.size), key=lambda p: (colors[p], p)):
        groups.setdefault(colors[p], []).append(p)
    classes = [groups[c] for c in sorted(groups)]
    work = math.prod(math.factorial(len(c)) for c in classes)
    if work > CANONICAL_PERMUTATION_CAP:
        logger.warning(f"Canonical form needs {work} permutations for a {poset.size}-point poset")
    best_code, best_order = None, None
    for choice in itertools.product(*(itertools.permutations(c) for c in classes)):
        order = [p for block in choice for p in block]
        code = poset.leq[np.ix_(order, order)].tobytes()
        if best_code is None or code < best_code:
            best_code, best_order = code, tuple(order)
    return best_code, best_order


def reorder(poset: FinitePoset, order: Sequence[int]):
    order = list(order)
    cls = RootedPoset if isinstance(poset, RootedPoset) else FinitePoset
    return cls(poset.leq[np.ix_(order, order)], check=False)


@lru_cache(maxsize=None)
def posets_of_size(n: int) -> tuple[FinitePoset, ...]:
    """All posets on ``n`` points up to isomorphism, canonically ordered."""
    if n == 0:
        return (FinitePoset(np.zeros((0, 0), dtype=bool), check=False),)
    found: dict[bytes, FinitePoset] = {}
    for smaller in posets_of_size(n - 1):
        m = smaller.size
        for down in smaller.downsets():
            # the new point sits below exactly the complement of a downset
            upset = smaller.full_mask & ~down
            leq = np.zeros((n, n), dtype=bool)
            leq[:m, :m] = smaller.leq
            leq[m, m] = True
            for j in bits_of(upset):
                leq[m, j] = True
            candidate = FinitePoset(leq, check=False)
            code, order = canonical_order(candidate)
            if code not in found:
                found[code] = reorder(candidate, order)
    logger.debug(f"Enumerated {len(found)} posets on {n} points")
    return tuple(found[code] for code in sorted(found))


@lru_cache(maxsize=None)
def rooted_posets(n: int) -> tuple[RootedPoset, ...]:
    """All rooted posets on ``n`` points up to isomorphism; the root is point 0."""
    if n < 1:
        return ()
    out = []
    for base in posets_of_size(n - 1):
        rooted = add_top(base)
        _, order = canonical_order(rooted)
        out.append(reorder(rooted, order))
    return tuple(out)


def random_rooted_poset(rng: np.random.Generator, n: int) -> RootedPoset:
    """Random rooted poset with root 0; each later point picks a nonempty set of points above it."""
    covers = []
    for p in range(1, n):
        k = int(rng.integers(1, min(p, 3) + 1))
        parents = rng.choice(p, size=k, replace=False)
        covers += [(p, int(q)) for q in parents]
    return RootedPoset.from_covers(n, covers)


# model text format


@dataclass
class ModelText:
    poset: RootedPoset
    labels: dict[int, frozenset[str]] = field(default_factory=dict)
    bits: dict[int, int] = field(default_factory=dict)


def parse_model(text: str) -> ModelText:
    """
    Read the line format::

        poset 3
        le 1 0
        le 2 1
        label 2 x y
        label2 2 1

    ``le i j`` lines give the covering relation (``i`` below ``j``); point 0
    must be the root.
    """
    size, covers, labels, bits = None, [], {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *args = line.split()
        try:
            if head == "poset":
                size = int(args[0])
            elif head == "le":
                covers.append((int(args[0]), int(args[1])))
            elif head == "label":
                labels[int(args[0])] = frozenset(args[1:])
            elif head == "label2":
                if args[1] not in ("0", "1"):
                    raise ModelFormatError(f"line {lineno}: label2 value must be 0 or 1")
                bits[int(args[0])] = int(args[1])
            else:
                raise ModelFormatError(f"line {lineno}: unknown directive {head!r}")
        except (IndexError, ValueError) as e:
            if isinstance(e, ModelFormatError):
                raise
            raise ModelFormatError(f"line {lineno}: cannot read {line!r}") from e
    if size is None or size < 1:
        raise ModelFormatError("missing or empty 'poset n' header")
    points = [p for pair in covers for p in pair] + list(labels) + list(bits)
    if any(p < 0 or p >= size for p in points):
        raise ModelFormatError(f"point index out of range for poset of size {size}")
    try:
        poset = RootedPoset(FinitePoset.from_covers(size, covers).leq, check=False)
    except PosetError as e:
        raise ModelFormatError(str(e)) from e
    if poset.root != 0:
        raise ModelFormatError(f"point 0 must be the root, found root {poset.root}")
    return ModelText(poset, labels, bits)


def format_model(
    poset: RootedPoset,
    labels: Optional[Mapping[int, Iterable[str]]] = None,
    bits: Optional[Mapping[int, int]] = None,
) -> str:
    """Inverse of ``parse_model``; the poset must already have its root at point 0."""
    if poset.root != 0:
        raise ModelFormatError("format_model expects the root at point 0")
    lines = [f"poset {poset.size}"]
    lines += [f"le {i} {j}" for i, j in sorted(poset.covers())]
    for p in sorted(labels or {}):
        lines.append(" ".join(["label", str(p), *sorted(labels[p])]).rstrip())
    for p in sorted(bits or {}):
        lines.append(f"label2 {p} {bits[p]}")
    return "\n".join(lines)
