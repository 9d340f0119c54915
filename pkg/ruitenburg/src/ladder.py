from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Optional

from ruitenburg.src.evaluation import Evaluation
from ruitenburg.src.formula import BOTTOM, And, Formula, Implies, Or, Var, iff, neg, substitute, top
from ruitenburg.src.logger_download import logger
from ruitenburg.src.poset import DownsetAlgebra, FinitePoset, PosetMap, is_open
from ruitenburg.src.prover import Prover, prove_ipc
from ruitenburg.src.schemas import PropertyReport

A, B = Var("a"), Var("b")

EMPTY, FULL, PRINCIPAL, PAIR = "empty", "full", "principal", "pair"


class LadderTruncationError(RuntimeError):
    pass


class OpenMapError(RuntimeError):
    pass


class PresentationViolation(ValueError):
    def __init__(self, point: int):
        super().__init__(f"point {point} does not force ~~a & (a -> b)")
        self.point = point


class NormalFormError(ValueError):
    pass


def ladder_le(n: int, m: int) -> bool:
    return n == -1 or (n >= 0 and (n <= m - 2 or n == m))


class LadderPoset(FinitePoset):
    """
    The points ``-1 .. k`` of the ladder; ``-1`` is the least point and
    ``n <= m`` holds for ``n <= m - 2`` or ``n == m``.

    Internally point ``n`` has index ``n + 1``. Not rooted.
    """

    def __init__(self, k: int):
        if k < 3:
            raise ValueError(f"Ladder truncation level must be at least 3, got {k}")
        points = list(range(-1, k + 1))
        super().__init__([[ladder_le(n, m) for m in points] for n in points], elements=points)
        self.k = k

    def down(self, n: int) -> int:
        return self.down_masks[n + 1]

    def mask_of_points(self, points: Iterable[int]) -> int:
        return self.mask_of(n + 1 for n in points)

    def points_of(self, mask: int) -> list[int]:
        return [self.elements[i] for i in range(self.size) if mask >> i & 1]

    def generator_env(self) -> dict[str, int]:
        return {"a": self.down(-1), "b": self.down(0)}


@lru_cache(maxsize=None)
def ladder_poset(k: int) -> LadderPoset:
    return LadderPoset(k)


@dataclass(frozen=True)
class LadderDownset:
    """A downset of the ladder in normal form: empty, full, ``down(n)`` or ``down(n) + down(n+1)``."""

    kind: str
    n: Optional[int] = None

    @classmethod
    def principal(cls, n: int) -> "LadderDownset":
        return cls(PRINCIPAL, n)

    @classmethod
    def pair(cls, n: int) -> "LadderDownset":
        return cls(PAIR, n)

    @classmethod
    def classify(cls, poset: LadderPoset, mask: int) -> "LadderDownset":
        if not poset.is_downset(mask):
            raise NormalFormError(f"{poset.points_of(mask)} is not a downset")
        if mask == 0:
            return cls(EMPTY)
        if mask == poset.full_mask:
            return cls(FULL)
        tops = sorted(poset.elements[i] for i in poset.maximal(mask))
        if len(tops) == 1:
            return cls(PRINCIPAL, tops[0])
        if len(tops) == 2 and tops[1] == tops[0] + 1:
            return cls(PAIR, tops[0])
        raise NormalFormError(f"downset with maximal points {tops} has no normal form")

    def to_mask(self, poset: LadderPoset) -> int:
        if self.kind == EMPTY:
            return 0
        if self.kind == FULL:
            return poset.full_mask
        if self.kind == PRINCIPAL:
            return poset.down(self.n)
        return poset.down(self.n) | poset.down(self.n + 1)

    def __str__(self) -> str:
        if self.kind == EMPTY:
            return "empty"
        if self.kind == FULL:
            return "full"
        if self.kind == PRINCIPAL:
            return f"down({self.n})"
        return f"down({self.n})+down({self.n + 1})"


# generators


@lru_cache(maxsize=None)
def generator_formula(n: int) -> Formula:
    """The formula over ``a, b`` whose value in the ladder is ``down(n)``."""
    if n < -1:
        raise ValueError(f"Ladder points start at -1, got {n}")
    if n == -1:
        return A
    if n == 0:
        return B
    if n == 1:
        return Implies(B, A)
    if n == 2:
        return Implies(Implies(B, A), B)
    if n == 3:
        return Implies(Implies(Implies(B, A), B), B)
    return Implies(generator_formula(n - 1), Or(generator_formula(n - 4), generator_formula(n - 3)))


def evaluate_in_ladder(k: int, formula: Formula, env: Optional[Mapping[str, int]] = None) -> int:
    poset = ladder_poset(k)
    return DownsetAlgebra(poset).evaluate(formula, env or poset.generator_env())


def eval_generator(k: int, n: int) -> LadderDownset:
    if n > k:
        raise ValueError(f"Point {n} lies outside the ladder truncated at {k}")
    return LadderDownset.classify(ladder_poset(k), evaluate_in_ladder(k, generator_formula(n)))


def check_generators(k: int, upto: Optional[int] = None) -> PropertyReport:
    report = PropertyReport(name=f"ladder_generators[k={k}]")
    for n in range(-1, (k if upto is None else upto) + 1):
        report.checked += 1
        if eval_generator(k, n) != LadderDownset.principal(n):
            report.violation(f"generator {n} evaluates to {eval_generator(k, n)}")
    return report


def vee_vee(d: LadderDownset) -> int:
    if d.kind == PRINCIPAL:
        return d.n
    if d.kind == PAIR:
        return d.n + 3
    raise NormalFormError(f"vee_vee is undefined on the {d.kind} downset")


def normal_form_downsets(k: int) -> list[LadderDownset]:
    """Every nonempty proper downset of ``LadderPoset(k)``."""
    poset = ladder_poset(k)
    out = []
    for mask in poset.downsets():
        if mask not in (0, poset.full_mask):
            out.append(LadderDownset.classify(poset, mask))
    return out


def check_vee_vee(k: int) -> PropertyReport:
    """A principal downset goes to its top; a pair goes to the point whose strict downset it is."""
    report = PropertyReport(name=f"vee_vee[k={k}]")
    poset = ladder_poset(k)
    for d in normal_form_downsets(k):
        target = vee_vee(d)
        report.checked += 1
        if d.kind == PRINCIPAL:
            if target != d.n:
                report.violation(f"vee_vee({d}) = {target}")
            continue
        if target > k:
            continue
        strict = poset.down(target) & ~(1 << (target + 1))
        if strict != d.to_mask(poset):
            report.violation(f"vee_vee({d}) = {target} does not sit directly over it")
    return report


# the shifting endomorphism


def ladder_endo(k: int) -> PosetMap:
    """``n -> n - 2``, with everything below 2 sent to ``-1``."""
    poset = ladder_poset(k)
    mapping = tuple((-1 if n < 2 else n - 2) + 1 for n in poset.elements)
    f = PosetMap(poset, poset, mapping)
    if not is_open(f):
        raise OpenMapError(f"shift map on the ladder truncated at {k} is not open")
    return f


def inverse_image_iterates(k: int, d: LadderDownset, t: int) -> list[LadderDownset]:
    """
    ``f^-1(d), f^-2(d), ..., f^-t(d)`` for the shift map ``f``.

    Raises
    ------
    LadderTruncationError
        When a set reaches past ``k - 2``, where the truncated preimage
        would miss points above ``k``.
    """
    poset = ladder_poset(k)
    f = ladder_endo(k)
    current = d.to_mask(poset)
    out = []
    for i in range(t):
        if d.kind != FULL and any(n > k - 2 for n in poset.points_of(current)):
            raise LadderTruncationError(f"iterate {i} of {d} reaches past {k - 2}; raise k")
        current = f.preimage_mask(current)
        out.append(LadderDownset.classify(poset, current))
    return out


def check_non_periodic(k: int, d: LadderDownset, t: int) -> PropertyReport:
    """Iterates are pairwise distinct and strictly increasing."""
    report = PropertyReport(name=f"inverse_image[{d}]", checked=1)
    poset = ladder_poset(k)
    masks = [d.to_mask(poset)] + [e.to_mask(poset) for e in inverse_image_iterates(k, d, t)]
    for before, after in zip(masks, masks[1:]):
        if before & ~after or before == after:
            report.violation(f"iterates of {d} are not strictly increasing")
            break
    if len(set(masks)) != len(masks):
        report.violation(f"iterates of {d} repeat")
    return report


# open maps from models of the presentation

PRESENTATION = And(neg(neg(A)), Implies(A, B))


def star_construction(m: Evaluation) -> PosetMap:
    """
    Open map from the frame of ``m`` into the ladder that keeps the values
    of ``a`` and ``b``, built upwards from the minimal points.

    Raises
    ------
    PresentationViolation
        At the first point that does not force ``~~a & (a -> b)``.
    """
    domain = m.domain
    masks = m.variable_masks()
    env = {"a": masks.get("a", 0), "b": masks.get("b", 0)}
    valid = DownsetAlgebra(domain).evaluate(PRESENTATION, env)
    for p in range(domain.size):
        if not valid >> p & 1:
            raise PresentationViolation(p)
    k = 3 * domain.size + 4
    poset = ladder_poset(k)

    def forces_a(p: int) -> bool:
        return bool(env["a"] >> p & 1)

    def forces_b(p: int) -> bool:
        return bool(env["b"] >> p & 1)

    image: dict[int, int] = {}
    for p in sorted(range(domain.size), key=lambda q: (domain.point_heights[q], q)):
        lower = domain.strictly_below(p)
        if forces_a(p):
            image[p] = -1
        elif forces_b(p):
            image[p] = 0
        elif all(forces_a(q) for q in lower):
            image[p] = 1
        elif all(forces_b(q) for q in lower):
            image[p] = 2
        else:
            generated = poset.downset_closure(poset.mask_of_points(image[q] for q in lower))
            image[p] = vee_vee(LadderDownset.classify(poset, generated))
    f = PosetMap(domain, poset, tuple(image[p] + 1 for p in range(domain.size)))
    if not is_open(f):
        raise OpenMapError("constructed map is not open")
    for p in range(domain.size):
        if (image[p] == -1) != forces_a(p) or (image[p] in (-1, 0)) != forces_b(p):
            raise OpenMapError(f"constructed map changes the values of a, b at point {p}")
    return f


def default_sigma() -> dict[str, Formula]:
    lem_a = Implies(neg(neg(A)), A)
    return {"a": lem_a, "b": Implies(Implies(lem_a, B), B)}


def projectivity_check(
    sigma: Optional[Mapping[str, Formula]] = None,
    presentation: Optional[Formula] = None,
    prover: Optional[Prover] = None,
) -> bool:
    """
    ``sigma`` sends the presentation to a theorem and is the identity
    modulo it.
    """
    sigma = dict(default_sigma() if sigma is None else sigma)
    presentation = PRESENTATION if presentation is None else presentation
    conditions = [
        substitute(presentation, sigma),
        Implies(presentation, iff(A, sigma["a"])),
        Implies(presentation, iff(B, sigma["b"])),
    ]
    for i, condition in enumerate(conditions, start=1):
        if not prove_ipc(condition, prover):
            logger.debug(f"Projectivity condition {i} fails")
            return False
    return True


# lifting the shift to the free algebra


def downset_term(d: LadderDownset) -> Formula:
    if d.kind == EMPTY:
        return BOTTOM
    if d.kind == FULL:
        return top()
    if d.kind == PRINCIPAL:
        return generator_formula(d.n)
    return Or(generator_formula(d.n), generator_formula(d.n + 1))


def lifted_substitution(k: int) -> dict[str, Formula]:
    """Substitution on ``a, b`` that acts on the ladder as the inverse image of the shift."""
    sigma = default_sigma()
    out = {}
    for name, start in (("a", LadderDownset.principal(-1)), ("b", LadderDownset.principal(0))):
        (image,) = inverse_image_iterates(k, start, 1)
        out[name] = substitute(downset_term(image), sigma)
    return out


def check_lift(k: int, t: int) -> PropertyReport:
    """Powers of the lifted substitution evaluate to the inverse-image iterates of ``a`` and ``b``."""
    report = PropertyReport(name=f"lifted_substitution[k={k}]")
    poset = ladder_poset(k)
    tau = lifted_substitution(k)
    for name, start in (("a", LadderDownset.principal(-1)), ("b", LadderDownset.principal(0))):
        expected = inverse_image_iterates(k, start, t)
        current: Formula = Var(name)
        seen = []
        for i in range(t):
            current = substitute(current, tau)
            value = LadderDownset.classify(poset, evaluate_in_ladder(k, current))
            report.checked += 1
            if value != expected[i]:
                report.violation(f"power {i + 1} of the lift sends {name} to {value}, expected {expected[i]}")
            seen.append(value)
        if len(set(seen)) != len(seen):
            report.violation(f"powers of the lift repeat on {name}")
    return report
