import pytest

from ruitenburg.src.dualitylite import (
    NotDownwardClosedError,
    check_ev_morphism,
    check_iota_triangle,
    check_nform,
    check_restriction_closed,
    down_n,
    down_n_member,
    everything,
    ev_map,
    from_generators,
    has_b_index,
    has_leq_index,
    heyting_implies,
    intersection,
    iota,
    iota_member,
    nform_universe,
    nothing,
    union,
)
from ruitenburg.src.evaluation import Evaluation, all_evaluations
from ruitenburg.src.poset import TWO, RootedPoset, powerset_labels

POOL = list(all_evaluations(TWO, 3))
SMALL = list(all_evaluations(TWO, 2))


class TestIota:
    def test_membership_reads_the_root_label(self):
        low = Evaluation(RootedPoset.chain(2), TWO, [1, 1])
        mixed = Evaluation(RootedPoset.chain(2), TWO, [0, 1])
        assert iota_member([1], low)
        assert not iota_member([1], mixed)
        assert iota(TWO, [0, 1])(mixed)

    def test_rejects_sets_that_are_not_downsets(self):
        with pytest.raises(NotDownwardClosedError):
            iota(TWO, [0])
        labels = powerset_labels(("x",))
        iota(labels, [frozenset({"x"})])
        with pytest.raises(NotDownwardClosedError):
            iota(labels, [frozenset()])

    @pytest.mark.parametrize("d", [[], [1], [0, 1]])
    def test_triangle(self, d):
        for f in POOL:
            assert check_iota_triangle(d, f).ok


class TestSubpresheaves:
    @pytest.mark.parametrize("n", [0, 1, 2])
    def test_down_n_is_restriction_closed(self, n):
        for u in SMALL:
            assert check_restriction_closed(down_n(u, n), POOL).ok

    @pytest.mark.parametrize("n", [0, 1, 2])
    def test_down_n_has_its_indices(self, n):
        for u in SMALL:
            s = down_n(u, n)
            assert s.b_index == n
            assert has_b_index(s, n, POOL).ok
            assert has_leq_index(s, n, POOL).ok

    def test_member_agrees_with_generators(self):
        u = SMALL[-1]
        s = from_generators(TWO, [u], 1)
        assert all(s(v) == down_n_member(u, 1, v) for v in POOL)

    def test_implication_raises_the_index(self):
        s = iota(TWO, [1])
        t = down_n(SMALL[0], 1)
        assert heyting_implies(s, t).b_index == 2
        assert union(s, t).b_index == 1
        assert check_restriction_closed(heyting_implies(s, t), POOL).ok

    def test_constants(self):
        assert all(everything(TWO)(u) for u in POOL)
        assert not any(nothing(TWO)(u) for u in POOL)

    def test_different_labels_are_rejected(self):
        with pytest.raises(ValueError):
            union(everything(TWO), everything(powerset_labels(("x",))))


class TestEvaluationMap:
    def test_ev_of_iota_on_a_chain(self):
        f = Evaluation(RootedPoset.chain(3), TWO, [0, 1, 1])
        assert ev_map(iota(TWO, [1]), f) == 0b110

    def test_ev_is_a_heyting_morphism(self):
        subs = [iota(TWO, [1]), everything(TWO)] + [down_n(u, n) for u in SMALL for n in (0, 1)]
        for f in POOL:
            for s in subs:
                for t in subs:
                    assert check_ev_morphism(s, t, f).ok

    def test_intersection(self):
        s = iota(TWO, [1])
        f = Evaluation(RootedPoset.chain(2), TWO, [0, 1])
        assert ev_map(intersection(s, everything(TWO)), f) == ev_map(s, f)


class TestNormalForm:
    @pytest.mark.parametrize("n", [0, 1])
    def test_no_mismatch_with_a_complete_universe(self, n):
        universe = nform_universe(TWO, n, 3, 4)
        for u in SMALL:
            report = check_nform(u, n, universe, POOL)
            assert report.checked == len(POOL)
            assert report.ok, report.violations
            assert report.notes
