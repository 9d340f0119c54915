import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ruitenburg.src.bounds import (
    LabelTrace,
    boolean_endo_experiment,
    check_period_bound,
    classical_f3,
    classical_table,
    factorial_inequality,
    function_index_period,
    global_index_period,
    nonmonotone_counterexample,
    substitution_trace,
    view_set,
)
from ruitenburg.src.formula import Var, parse
from ruitenburg.src.iteration import CombinedModel, iterate_psi
from ruitenburg.src.poset import RootedPoset
from tests.strategies import combined_model, evaluation_of, formulas

ROTATION = {"p": Var("q"), "q": Var("r"), "r": Var("p")}


class TestViewSets:
    def test_plain_sequences(self):
        assert view_set([[0, 1], [1, 1], [0, 1]], 0).labels == frozenset({0, 1})
        assert view_set([[0, 1], [1, 1]], 1).labels == frozenset({1})

    def test_from_an_iteration(self):
        m = CombinedModel.from_masks(RootedPoset.chain(2), (), {}, 0b10)
        trace = LabelTrace.from_iteration(iterate_psi(parse("~x"), m, 8))
        assert trace.formula_induced
        assert (trace.index, trace.period) == (1, 2)
        assert view_set(trace, 0).labels == frozenset({0, 1})
        assert check_period_bound(trace).ok

    @settings(max_examples=150, deadline=None)
    @given(a=formulas(), m=combined_model())
    def test_formula_periods_are_bounded(self, a, m):
        assert check_period_bound(iterate_psi(a, m, (1 << m.poset.size) + 2)).ok


class TestSubstitutionTrace:
    def test_rotation_has_period_three(self):
        model = evaluation_of(RootedPoset.single(), ("p", "q", "r"), {0: {"p"}})
        trace = substitution_trace(ROTATION, model, 16)
        assert (trace.index, trace.period) == (0, 3)
        assert len(view_set(trace, 0).labels) == 3
        assert check_period_bound(trace).ok

    def test_unchanged_variables_stay(self):
        model = evaluation_of(RootedPoset.chain(2), ("p", "q"), {1: {"p", "q"}})
        trace = substitution_trace({"p": parse("~q")}, model, 8)
        assert trace.period == 1
        assert trace.index == 1

    def test_unknown_variables(self):
        model = evaluation_of(RootedPoset.single(), ("p",), {})
        with pytest.raises(ValueError):
            substitution_trace({"p": Var("z")}, model, 4)


class TestCombinatorics:
    @pytest.mark.parametrize("n", range(1, 7))
    def test_counterexample_period(self, n):
        table, period = nonmonotone_counterexample(n)
        assert period == 1 << n
        assert sorted(table.tolist()) == list(range(1 << n))

    @pytest.mark.parametrize("n", range(1, 6))
    def test_extension_moves_words_by_the_previous_map(self, n):
        previous, _ = nonmonotone_counterexample(n)
        table, _ = nonmonotone_counterexample(n + 1)
        assert (table // 2).tolist() == np.repeat(previous, 2).tolist()
        # x flips at exactly one word
        flipped = [w for w in range(1 << n) if table[2 * w] % 2 == 1]
        assert len(flipped) == 1

    def test_counterexample_range(self):
        with pytest.raises(ValueError):
            nonmonotone_counterexample(0)

    @settings(max_examples=100)
    @given(m=st.integers(min_value=1, max_value=12), n=st.integers(min_value=1, max_value=12))
    def test_factorial_inequality(self, m, n):
        assert factorial_inequality(m, n)

    def test_factorial_inequality_needs_positive_arguments(self):
        with pytest.raises(ValueError):
            factorial_inequality(0, 1)

    def test_global_against_function(self):
        table = [1, 2, 0, 0]
        assert global_index_period(table) == (1, 3)
        assert function_index_period(table) == (1, 3)

    @settings(max_examples=100, deadline=None)
    @given(table=st.lists(st.integers(min_value=0, max_value=5), min_size=6, max_size=6))
    def test_max_lcm_rule(self, table):
        assert global_index_period(table) == function_index_period(table)


class TestClassical:
    def test_table(self):
        assert classical_table(((0, 1), (1, 0))).tolist() == [0, 1, 3, 2]

    def test_f3(self):
        report = classical_f3(4)
        assert report.checked == 4**4 + 1
        assert report.ok

    def test_t_size_range(self):
        with pytest.raises(ValueError):
            classical_f3(7)


class TestBooleanEndo:
    def test_one_bit(self):
        report = boolean_endo_experiment(1)
        assert report.checked == 4
        assert (report.max_index, report.max_period) == (1, 2)

    def test_two_bits(self):
        report = boolean_endo_experiment(2)
        assert report.checked == 256
        assert report.ok
        assert (report.max_index, report.max_period) == (3, 4)

    def test_sampled(self):
        report = boolean_endo_experiment(3, samples=50, rng=np.random.default_rng(7))
        assert report.checked == 50
        assert report.ok
        assert report.max_period <= 15
