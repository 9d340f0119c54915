from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from ruitenburg.src.evaluation import (
    BisimType,
    Evaluation,
    all_evaluations,
    bisim_type,
    leq_n,
    point_types,
    reduced_trees,
    type_leq,
)
from ruitenburg.src.logger_download import logger
from ruitenburg.src.poset import DownsetAlgebra, LabelPoset
from ruitenburg.src.schemas import PropertyReport

NFORM_CAVEAT = (
    "quantifiers range over a finite universe; agreement is conditional on the "
    "universe containing a representative of every class"
)


class NotDownwardClosedError(ValueError):
    pass


@dataclass(frozen=True)
class Subpresheaf:
    """
    A family of evaluations over ``labels`` given by a membership test.

    ``b_index`` is the declared depth at which membership is decided. When
    ``generators`` is set, membership is "below one of them at that depth".
    """

    labels: LabelPoset
    contains: Callable[[Evaluation], bool] = field(compare=False)
    b_index: int
    generators: Optional[tuple[Evaluation, ...]] = None
    name: str = ""

    def __call__(self, u: Evaluation) -> bool:
        return self.contains(u)


def label_mask(labels: LabelPoset, d: Iterable) -> int:
    return labels.mask_of(labels.index(e) for e in d)


def _downset_mask(labels: LabelPoset, d: Iterable) -> int:
    mask = label_mask(labels, d)
    if not labels.is_downset(mask):
        raise NotDownwardClosedError(f"{sorted(map(str, d))} is not downward closed in the label poset")
    return mask


def iota_member(d: Iterable, u: Evaluation) -> bool:
    """Whether the root label of ``u`` lies in the downset ``d`` of label elements."""
    return bool(_downset_mask(u.labels, d) >> u.root_label & 1)


def iota(labels: LabelPoset, d: Iterable) -> Subpresheaf:
    d = list(d)
    mask = _downset_mask(labels, d)
    return Subpresheaf(labels, lambda u: bool(mask >> u.root_label & 1), 0, name=f"iota{d}")


def down_n_member(u: Evaluation, n: int, v: Evaluation) -> bool:
    return leq_n(v, u, n)


def down_n(u: Evaluation, n: int) -> Subpresheaf:
    return from_generators(u.labels, [u], n)


def from_generators(labels: LabelPoset, generators: Sequence[Evaluation], n: int) -> Subpresheaf:
    """Union of the ``n``-downsets of the generators."""
    gens = tuple(generators)

    def contains(v: Evaluation) -> bool:
        return any(leq_n(v, g, n) for g in gens)

    return Subpresheaf(labels, contains, n, generators=gens, name=f"down{n}x{len(gens)}")


def everything(labels: LabelPoset) -> Subpresheaf:
    return Subpresheaf(labels, lambda u: True, 0, name="everything")


def nothing(labels: LabelPoset) -> Subpresheaf:
    return Subpresheaf(labels, lambda u: False, 0, name="nothing")


def _same_labels(s: Subpresheaf, t: Subpresheaf) -> None:
    if s.labels != t.labels:
        raise ValueError("Subpresheaves over different label posets")


def heyting_implies(s: Subpresheaf, t: Subpresheaf) -> Subpresheaf:
    """Every restriction in ``s`` is also in ``t``."""
    _same_labels(s, t)

    def contains(u: Evaluation) -> bool:
        return all(not s(u.restrict(p)) or t(u.restrict(p)) for p in range(u.domain.size))

    return Subpresheaf(s.labels, contains, max(s.b_index, t.b_index) + 1, name=f"({s.name} -> {t.name})")


def union(s: Subpresheaf, t: Subpresheaf) -> Subpresheaf:
    _same_labels(s, t)
    return Subpresheaf(
        s.labels, lambda u: s(u) or t(u), max(s.b_index, t.b_index), name=f"({s.name} | {t.name})"
    )


def intersection(s: Subpresheaf, t: Subpresheaf) -> Subpresheaf:
    _same_labels(s, t)
    return Subpresheaf(
        s.labels, lambda u: s(u) and t(u), max(s.b_index, t.b_index), name=f"({s.name} & {t.name})"
    )


def ev_map(x: Subpresheaf, f: Evaluation) -> int:
    """Bitmask of the points ``p`` of the domain of ``f`` with ``f_p`` in ``x``."""
    return sum(1 << p for p in range(f.domain.size) if x(f.restrict(p)))


# checks


def check_restriction_closed(s: Subpresheaf, pool: Iterable[Evaluation]) -> PropertyReport:
    report = PropertyReport(name=f"restriction_closed[{s.name}]")
    for u in pool:
        if not s(u):
            continue
        report.checked += 1
        for p in range(u.domain.size):
            if not s(u.restrict(p)):
                report.violation(f"{s.name}: member loses membership when restricted to point {p}")
                break
    return report


def has_b_index(s: Subpresheaf, n: int, pool: Iterable[Evaluation]) -> PropertyReport:
    """Membership is constant on every ``n``-equivalence class met in ``pool``."""
    report = PropertyReport(name=f"b_index[{s.name}, {n}]")
    seen: dict[BisimType, bool] = {}
    for u in pool:
        report.checked += 1
        t = bisim_type(u, n)
        member = s(u)
        if seen.setdefault(t, member) != member:
            report.violation(f"{s.name}: membership differs inside one {n}-class")
    return report


def has_leq_index(s: Subpresheaf, n: int, pool: Iterable[Evaluation]) -> PropertyReport:
    """Membership is downward closed along ``<=_n`` inside ``pool``."""
    report = PropertyReport(name=f"leq_index[{s.name}, {n}]")
    members: dict[BisimType, bool] = {}
    for u in pool:
        members.setdefault(bisim_type(u, n), s(u))
    inside = [t for t, member in members.items() if member]
    labels = s.labels
    for t, member in members.items():
        if member:
            continue
        report.checked += 1
        if any(type_leq(t, w, labels) for w in inside):
            report.violation(f"{s.name}: a non-member lies {n}-below a member")
    return report


def check_ev_morphism(s: Subpresheaf, t: Subpresheaf, f: Evaluation) -> PropertyReport:
    """``ev_f`` against the downset algebra of the domain of ``f``."""
    report = PropertyReport(name="ev_morphism", checked=1)
    algebra = DownsetAlgebra(f.domain)
    es, et = ev_map(s, f), ev_map(t, f)
    expected = {
        "implies": (ev_map(heyting_implies(s, t), f), algebra.implies(es, et)),
        "union": (ev_map(union(s, t), f), es | et),
        "intersection": (ev_map(intersection(s, t), f), es & et),
        "nothing": (ev_map(nothing(s.labels), f), algebra.bottom),
        "everything": (ev_map(everything(s.labels), f), algebra.top),
    }
    for op, (got, want) in expected.items():
        if got != want:
            report.violation(f"ev does not commute with {op} for {s.name}, {t.name}")
    return report


def check_iota_triangle(d: Iterable, f: Evaluation) -> PropertyReport:
    """``ev_f(iota(d))`` is the preimage of ``d`` under ``f``."""
    d = list(d)
    report = PropertyReport(name="iota_triangle", checked=1)
    mask = label_mask(f.labels, d)
    preimage = sum(1 << p for p, value in enumerate(f.values) if mask >> value & 1)
    if ev_map(iota(f.labels, d), f) != preimage:
        report.violation(f"ev of iota{d} differs from the preimage")
    return report


def nform_universe(labels: LabelPoset, n: int, max_points: int, max_width: int) -> list[Evaluation]:
    return reduced_trees(labels, n, max_width) + list(all_evaluations(labels, max_points))


def check_nform(
    u: Evaluation, n: int, universe: Iterable[Evaluation], pool: Iterable[Evaluation]
) -> PropertyReport:
    """
    Compare ``z <=_{n+1} u`` with the right-hand side of the normal-form
    equation, for every ``z`` in ``pool``.

    The right-hand side is the intersection, over every ``v`` not
    ``n``-equivalent to any ``u_p``, of the implications from the
    ``n``-downset of ``v`` to the union of the ``n``-downsets of the ``w``
    with ``v`` not ``n``-below ``w``. ``v`` and ``w`` range over the types
    met in ``universe``.
    """
    labels = u.labels
    report = PropertyReport(name=f"nform[n={n}]", notes=[NFORM_CAVEAT])
    types = sorted({bisim_type(e, n) for e in universe})
    realised = set(point_types(u, n))
    blocked = [
        (v, [w for w in types if not type_leq(v, w, labels)]) for v in types if v not in realised
    ]
    logger.debug(f"nform: {len(types)} universe classes, {len(blocked)} excluded")

    def right_side(z: Evaluation) -> bool:
        for tz in point_types(z, n):
            for v, witnesses in blocked:
                if type_leq(tz, v, labels) and not any(type_leq(tz, w, labels) for w in witnesses):
                    return False
        return True

    for z in pool:
        report.checked += 1
        if leq_n(z, u, n + 1) != right_side(z):
            report.violation(f"mismatch on {z!r}")
    return report
