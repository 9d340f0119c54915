import numpy as np
import pytest
from hypothesis import given, settings

from ruitenburg.src.formula import parse
from ruitenburg.src.poset import (
    TWO,
    DownsetAlgebra,
    FinitePoset,
    ModelFormatError,
    NotOrderPreservingError,
    PosetError,
    PosetMap,
    RootedPoset,
    add_top,
    canonical_order,
    compose,
    format_model,
    is_open,
    monotone_maps,
    parse_model,
    posets_of_size,
    powerset_labels,
    product_labels,
    random_rooted_poset,
    reorder,
    rooted_posets,
)
from tests.strategies import rooted_poset


class TestFinitePoset:
    def test_rejects_non_orders(self):
        with pytest.raises(PosetError):
            FinitePoset([[False, False], [False, True]])
        with pytest.raises(PosetError):
            FinitePoset([[True, True], [True, True]])
        with pytest.raises(PosetError):
            FinitePoset([[True, True, False], [False, True, True], [False, False, True]])

    def test_rooted_needs_greatest_element(self):
        with pytest.raises(PosetError):
            RootedPoset(np.eye(2, dtype=bool))

    def test_chain(self, chain3):
        assert chain3.root == 0
        assert chain3.below(0) == [0, 1, 2]
        assert chain3.strictly_below(1) == [2]
        assert chain3.height() == 3
        assert chain3.covers() == [(1, 0), (2, 1)]

    def test_downsets_of_fork(self, fork):
        assert fork.downsets() == [0, 0b010, 0b100, 0b110, 0b111]
        assert fork.minimal() == [1, 2]
        assert fork.maximal(0b110) == [1, 2]
        assert fork.downset_closure(0b001) == 0b111

    def test_graft_offsets(self):
        poset, offsets = RootedPoset.graft([RootedPoset.chain(2), RootedPoset.single()])
        assert offsets == [1, 3]
        assert poset.root == 0
        assert poset.le(2, 1) and not poset.le(3, 1)

    def test_downset_subposet(self, chain3, fork):
        sub = chain3.downset(1)
        assert sub.size == 2
        assert sub.root == 0 and sub.le(1, 0)
        assert fork.downset(2).size == 1

    @settings(max_examples=100, deadline=None)
    @given(poset=rooted_poset(5))
    def test_downset_of_root_is_whole(self, poset):
        assert poset.downset(poset.root) == poset
        for q in range(poset.size):
            sub = poset.downset(q)
            assert sub.size == len(poset.below(q))
            assert sub.downset(sub.root) == sub
            assert sub.height() == poset.point_heights[q]

    def test_add_top(self):
        rooted = add_top(FinitePoset(np.eye(2, dtype=bool)))
        assert rooted.root == 2


class TestEnumeration:
    @pytest.mark.parametrize("n, count", [(1, 1), (2, 1), (3, 2), (4, 5), (5, 16), (6, 63)])
    def test_rooted_poset_counts(self, n, count):
        assert len(rooted_posets(n)) == count

    def test_poset_counts(self):
        assert [len(posets_of_size(n)) for n in range(5)] == [1, 1, 2, 5, 16]

    def test_root_is_point_zero(self):
        assert all(p.root == 0 for n in range(1, 6) for p in rooted_posets(n))

    def test_canonical_form_ignores_point_names(self, fork):
        code, _ = canonical_order(fork)
        swapped = reorder(fork, [0, 2, 1])
        assert canonical_order(swapped)[0] == code
        moved = reorder(fork, [1, 0, 2])
        assert canonical_order(moved)[0] == code

    def test_random_rooted_poset(self, rng):
        for n in range(1, 8):
            poset = random_rooted_poset(rng, n)
            assert poset.size == n
            assert poset.root == 0


class TestDownsetAlgebra:
    def test_implication_on_chain(self, chain3):
        algebra = DownsetAlgebra(chain3)
        assert algebra.implies(0b100, 0) == 0
        assert algebra.implies(0, 0) == chain3.full_mask
        assert algebra.implies(0b110, 0b100) == 0b100

    def test_excluded_middle_fails_on_fork(self, fork):
        algebra = DownsetAlgebra(fork)
        value = algebra.evaluate(parse("x | ~x"), {"x": 0b010})
        assert not value >> fork.root & 1

    @settings(max_examples=100, deadline=None)
    @given(poset=rooted_poset(5))
    def test_values_are_downsets(self, poset):
        algebra = DownsetAlgebra(poset)
        for a in poset.downsets():
            for b in poset.downsets():
                assert poset.is_downset(algebra.implies(a, b))
                # residuation: c <= a -> b iff c & a <= b
                for c in poset.downsets():
                    assert (c & ~algebra.implies(a, b) == 0) == (c & a & ~b == 0)

    def test_unknown_variable(self, fork):
        with pytest.raises(KeyError):
            DownsetAlgebra(fork).evaluate(parse("x -> z"), {"x": 0})


class TestMaps:
    def test_open_map_onto_point(self, fork):
        f = PosetMap(fork, RootedPoset.single(), (0, 0, 0))
        assert is_open(f)

    def test_not_open(self, chain3):
        # the 2-chain onto the top two points of the 3-chain misses the bottom
        two_chain = RootedPoset.chain(2)
        f = PosetMap(two_chain, chain3, (0, 1))
        assert f.is_order_preserving()
        assert not is_open(f)

    def test_is_open_requires_monotone(self, chain3):
        f = PosetMap(chain3, chain3, (2, 1, 0))
        with pytest.raises(NotOrderPreservingError):
            is_open(f)

    def test_preimage(self, fork):
        f = PosetMap(fork, TWO, (0, 1, 0))
        assert f.preimage_mask(0b10) == 0b010
        assert f.image_mask(0b101) == 0b01

    def test_composition_of_open_maps_is_open(self, fork, chain3):
        collapse = PosetMap(chain3, RootedPoset.chain(2), (0, 1, 1))
        onto_point = PosetMap(RootedPoset.chain(2), RootedPoset.single(), (0, 0))
        assert is_open(collapse) and is_open(onto_point)
        assert is_open(compose(onto_point, collapse))


class TestLabels:
    def test_powerset_order_is_reverse_inclusion(self):
        labels = powerset_labels(("x", "y"))
        assert labels.size == 4
        both = labels.index(frozenset({"x", "y"}))
        empty = labels.index(frozenset())
        assert labels.le(both, empty)
        assert not labels.le(empty, both)

    def test_product_order_is_componentwise(self):
        labels = product_labels(TWO, TWO)
        assert labels.size == 4
        assert labels.elements[2] == (1, 0)
        assert labels.le(labels.index((1, 1)), labels.index((0, 0)))
        assert not labels.le(labels.index((0, 1)), labels.index((1, 0)))

    def test_monotone_maps_into_two(self, chain3):
        maps = list(monotone_maps(chain3, TWO))
        # forcing is downward persistent: a cut below some point
        assert len(maps) == 4
        assert all(TWO.le(m[1], m[0]) and TWO.le(m[2], m[1]) for m in maps)


class TestModelText:
    TEXT = "poset 3\nle 1 0\nle 2 1\nlabel 2 x y\nlabel 1 x\nlabel2 2 1\n"

    def test_parse(self):
        model = parse_model(self.TEXT)
        assert model.poset.size == 3
        assert model.poset.le(2, 0)
        assert model.labels[2] == frozenset({"x", "y"})
        assert model.bits == {2: 1}

    def test_format_round_trip(self):
        model = parse_model(self.TEXT)
        text = format_model(model.poset, model.labels, model.bits)
        again = parse_model(text)
        assert again.poset == model.poset
        assert again.labels == model.labels
        assert again.bits == model.bits

    @pytest.mark.parametrize(
        "text",
        [
            "le 1 0\n",
            "poset 2\nle 0 1\n",
            "poset 2\nle 1 5\n",
            "poset 2\nedge 1 0\n",
            "poset 2\nle 1 0\nlabel2 1 3\n",
            "poset 2\nle 1 0\nle 0 1\n",
        ],
    )
    def test_malformed(self, text):
        with pytest.raises(ModelFormatError):
            parse_model(text)
