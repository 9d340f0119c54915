import pytest
from hypothesis import given, settings

from ruitenburg.src.corpus import enumerate_formulas
from ruitenburg.src.evaluation import forces
from ruitenburg.src.formula import Implies, Or, Var, iff, neg, parse
from ruitenburg.src.poset import parse_model
from ruitenburg.src.prover import (
    Prover,
    ProverBudgetExceeded,
    TruthTableBudgetExceeded,
    countermodel,
    equiv_ipc,
    prove_cpc,
    prove_ipc,
)
from tests.strategies import formulas

UNFILTERED = Prover(budget=2_000_000, classical_filter=False)

THEOREMS = [
    "x -> x",
    "x -> y -> x",
    "(x -> y -> z) -> (x -> y) -> x -> z",
    "x & y -> y & x",
    "x | y -> y | x",
    "~~~x -> ~x",
    "~~(x | ~x)",
    "((x -> y) -> x) -> ~~x",
    "(x | y -> z) <-> (x -> z) & (y -> z)",
    "_|_ -> x",
]

NON_THEOREMS = [
    "x | ~x",
    "~~x -> x",
    "((x -> y) -> x) -> x",
    "(x -> y) | (y -> x)",
    "~x | ~~x",
    "x",
]


class TestProveIpc:
    @pytest.mark.parametrize("text", THEOREMS)
    def test_theorems(self, text):
        assert prove_ipc(parse(text))

    @pytest.mark.parametrize("text", NON_THEOREMS)
    def test_non_theorems(self, text):
        assert not prove_ipc(parse(text))

    def test_without_classical_filter(self):
        prover = Prover(classical_filter=False)
        assert prover.prove(parse("~~(x | ~x)"))
        assert not prover.prove(parse("x | ~x"))

    def test_equivalence(self):
        x = Var("x")
        assert equiv_ipc(neg(x), neg(neg(neg(x))))
        assert not equiv_ipc(x, neg(neg(x)))

    def test_budget(self):
        prover = Prover(budget=3, classical_filter=False)
        with pytest.raises(ProverBudgetExceeded):
            prover.prove(parse("(x -> y -> z) -> (x -> y) -> x -> z"))

    def test_cache_is_capped(self):
        prover = Prover(cache_cap=5)
        prover.prove(parse("(x | y -> z) <-> (x -> z) & (y -> z)"))
        assert len(prover.cache) <= 5

    def test_closed_under_modus_ponens(self):
        corpus = enumerate_formulas(("x", "y"), 1)
        proved = [a for a in corpus if UNFILTERED.prove(a)]
        assert proved
        for a in proved:
            for b in corpus:
                if UNFILTERED.prove(Implies(a, b)):
                    assert UNFILTERED.prove(b)


class TestProveCpc:
    def test_classical_laws(self):
        assert prove_cpc(parse("x | ~x"))
        assert prove_cpc(parse("((x -> y) -> x) -> x"))
        assert not prove_cpc(parse("x -> y"))

    def test_variable_cap(self):
        big = Var("v0")
        for i in range(1, 25):
            big = Or(Var(f"v{i}"), big)
        with pytest.raises(TruthTableBudgetExceeded):
            prove_cpc(big)

    @settings(max_examples=200, deadline=None)
    @given(a=formulas())
    def test_glivenko(self, a):
        assert prove_cpc(a) == UNFILTERED.prove(neg(neg(a)))

    def test_glivenko_on_small_formulas(self):
        for a in enumerate_formulas(("x", "y"), 2):
            assert prove_cpc(a) == UNFILTERED.prove(neg(neg(a)))

    @settings(max_examples=200, deadline=None)
    @given(a=formulas())
    def test_intuitionistic_implies_classical(self, a):
        if UNFILTERED.prove(a):
            assert prove_cpc(a)


class TestCountermodel:
    def test_double_negation_needs_two_points(self):
        found = countermodel(parse("~~x -> x"), 4)
        assert found is not None
        assert found.poset.size == 2
        assert not forces(found.model, found.target)

    def test_excluded_middle(self):
        found = countermodel(parse("x | ~x"), 4)
        assert found.poset.size == 2

    def test_weak_excluded_middle_needs_a_fork(self):
        found = countermodel(parse("~x | ~~x"), 4)
        assert found.poset.size == 3
        assert len(found.poset.minimal()) == 2

    def test_none_for_theorems(self):
        assert countermodel(parse("x -> x"), 3) is None

    def test_text_parses_back(self):
        found = countermodel(parse("~~x -> x"), 3)
        model = parse_model(found.to_text())
        assert model.poset == found.poset

    @settings(max_examples=100, deadline=None)
    @given(a=formulas(max_leaves=6))
    def test_agrees_with_prover(self, a):
        found = countermodel(a, 3)
        if UNFILTERED.prove(a):
            assert found is None
        elif found is not None:
            assert not forces(found.model, a)

    def test_iff_of_equivalents(self):
        assert prove_ipc(iff(parse("~x"), parse("~~~x")))
