import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ruitenburg.src.evaluation import (
    Evaluation,
    UnknownVariableError,
    WidthBudgetExceeded,
    all_evaluations,
    bisim_type,
    count_classes,
    equiv_n,
    forces,
    graft_evaluation,
    graft_type,
    kripke_model,
    kripke_models,
    kripke_valuations,
    leq_n,
    point_types,
    reduced_trees,
    truncate,
    truth_set,
)
from ruitenburg.src.formula import parse
from ruitenburg.src.poset import TWO, RootedPoset, powerset_labels
from tests.strategies import evaluation_of, small_kripke_model, two_valued


class TestEvaluation:
    def test_order_preservation_is_checked(self, chain3):
        Evaluation(chain3, TWO, [0, 1, 1])
        with pytest.raises(ValueError):
            Evaluation(chain3, TWO, [1, 0, 0])

    def test_restrict(self, chain3):
        u = Evaluation(chain3, TWO, [0, 0, 1])
        below = u.restrict(1)
        assert below.domain.size == 2
        assert below.values == (0, 1)
        assert below.root_label == 0

    def test_variable_masks(self, fork):
        u = evaluation_of(fork, ("x", "y"), {1: {"x", "y"}, 2: {"y"}})
        assert u.variable_masks() == {"x": 0b010, "y": 0b110}

    def test_kripke_model_infers_names(self, fork):
        u = kripke_model(fork, {1: {"x"}})
        assert u.labels == powerset_labels(("x",))
        assert u.root_value == frozenset()


class TestForcing:
    def test_double_negation_on_a_chain(self):
        u = evaluation_of(RootedPoset.chain(2), ("x",), {1: {"x"}})
        assert forces(u, parse("~~x"))
        assert not forces(u, parse("x"))
        assert not forces(u, parse("~~x -> x"))
        assert forces(u, parse("x"), p=1)

    def test_excluded_middle_on_a_fork(self, fork):
        u = evaluation_of(fork, ("x",), {1: {"x"}})
        assert truth_set(u, parse("x | ~x")) == 0b110

    def test_unknown_variable(self, fork):
        u = evaluation_of(fork, ("x",), {})
        with pytest.raises(UnknownVariableError):
            truth_set(u, parse("x -> y"))

    @settings(max_examples=200, deadline=None)
    @given(u=small_kripke_model())
    def test_truth_sets_are_downward_closed(self, u):
        for text in ("x -> y", "~x | y", "(x -> y) -> x"):
            assert u.domain.is_downset(truth_set(u, parse(text)))


class TestBisimulation:
    def test_bisimilar_models(self, fork):
        u = evaluation_of(fork, ("x",), {1: {"x"}, 2: {"x"}})
        v = evaluation_of(RootedPoset.chain(2), ("x",), {1: {"x"}})
        assert all(equiv_n(u, v, n) for n in range(4))

    def test_depth_separates(self):
        deep = evaluation_of(RootedPoset.chain(3), ("x", "y"), {1: {"y"}, 2: {"x", "y"}})
        shallow = evaluation_of(RootedPoset.chain(2), ("x", "y"), {1: {"x", "y"}})
        assert equiv_n(deep, shallow, 0)
        assert not equiv_n(deep, shallow, 1)
        assert leq_n(shallow, deep, 1)
        assert not leq_n(deep, shallow, 1)

    def test_leq_zero_compares_root_labels(self):
        low = evaluation_of(RootedPoset.single(), ("x",), {0: {"x"}})
        high = evaluation_of(RootedPoset.single(), ("x",), {})
        assert leq_n(low, high, 0)
        assert not leq_n(high, low, 0)

    def test_truncate(self, chain3):
        u = Evaluation(chain3, TWO, [0, 0, 1])
        assert truncate(bisim_type(u, 3), 1) == bisim_type(u, 1)
        with pytest.raises(ValueError):
            truncate(bisim_type(u, 1), 2)

    def test_describe(self):
        u = Evaluation(RootedPoset.chain(2), TWO, [0, 1])
        assert bisim_type(u, 0).describe(TWO) == "0"
        assert bisim_type(u, 1).describe(TWO).startswith("(0; ")

    @settings(max_examples=150, deadline=None)
    @given(children=st.lists(two_valued(2), min_size=1, max_size=3), n=st.integers(min_value=0, max_value=3))
    def test_graft_type_matches_grafted_model(self, children, n):
        grafted = graft_evaluation(0, children, TWO)
        assert graft_type(0, [bisim_type(c, n) for c in children], n) == bisim_type(grafted, n)

    @settings(max_examples=100, deadline=None)
    @given(u=two_valued(3), n=st.integers(min_value=0, max_value=3))
    def test_types_of_restrictions(self, u, n):
        types = point_types(u, n)
        for p in range(u.domain.size):
            assert types[p] == bisim_type(u.restrict(p), n)


class TestRepresentatives:
    def test_class_counts_over_two(self):
        assert count_classes(TWO, 0, 4) == 2
        assert count_classes(TWO, 1, 4) == 3

    def test_one_tree_per_class(self):
        trees = reduced_trees(TWO, 2, 4)
        types = [bisim_type(t, 2) for t in trees]
        assert len(set(types)) == len(types)

    @pytest.mark.parametrize("n", [1, 2])
    def test_trees_cover_small_models(self, n):
        covered = {bisim_type(t, n) for t in reduced_trees(TWO, n, 4)}
        assert {bisim_type(u, n) for u in all_evaluations(TWO, 5)} <= covered

    def test_width_budget(self):
        with pytest.raises(WidthBudgetExceeded):
            reduced_trees(powerset_labels(("x", "y")), 2, 4, class_cap=10)


class TestPools:
    def test_all_evaluations_over_two(self):
        assert len(list(all_evaluations(TWO, 1))) == 2
        assert len(list(all_evaluations(TWO, 2))) == 5

    def test_kripke_valuations_start_small(self):
        domain, masks = next(iter(kripke_valuations(("x", "y"), 3)))
        assert domain.size == 1
        assert masks == {"x": 0, "y": 0}

    def test_kripke_models_are_persistent(self):
        assert all(u.is_order_preserving() for u in kripke_models(("x", "y"), 3))
