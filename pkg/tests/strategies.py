"""Hypothesis strategies shared by the test modules."""

from hypothesis import strategies as st

from ruitenburg.src.evaluation import Evaluation, model_from_masks
from ruitenburg.src.formula import BOTTOM, And, Implies, Or, Var
from ruitenburg.src.iteration import CombinedModel
from ruitenburg.src.poset import TWO, RootedPoset, monotone_maps, powerset_labels, rooted_posets

VARIABLES = ("x", "y")


def formulas(names=VARIABLES, max_leaves: int = 8):
    """Formulas over ``names`` and bottom."""
    leaves = st.sampled_from([BOTTOM] + [Var(n) for n in names])

    def extend(children):
        return st.builds(
            lambda ctor, left, right: ctor(left, right),
            st.sampled_from([And, Or, Implies]),
            children,
            children,
        )

    return st.recursive(leaves, extend, max_leaves=max_leaves)


@st.composite
def rooted_poset(draw, max_points: int = 4):
    size = draw(st.integers(min_value=1, max_value=max_points))
    return draw(st.sampled_from(rooted_posets(size)))


@st.composite
def small_kripke_model(draw, names=VARIABLES, max_points: int = 4):
    poset = draw(rooted_poset(max_points))
    masks = {name: draw(st.sampled_from(poset.downsets())) for name in names}
    return model_from_masks(poset, powerset_labels(tuple(names)), masks)


@st.composite
def two_valued(draw, max_points: int = 3):
    poset = draw(rooted_poset(max_points))
    values = draw(st.sampled_from(list(monotone_maps(poset, TWO))))
    return Evaluation(poset, TWO, values)


@st.composite
def combined_model(draw, parameters=("y",), max_points: int = 4):
    poset = draw(rooted_poset(max_points))
    masks = {name: draw(st.sampled_from(poset.downsets())) for name in parameters}
    return CombinedModel.from_masks(poset, parameters, masks, draw(st.sampled_from(poset.downsets())))


def evaluation_of(domain: RootedPoset, names, valuation) -> Evaluation:
    """Kripke model from ``{point: variables true there}``."""
    labels = powerset_labels(tuple(names))
    return Evaluation.from_elements(domain, labels, [frozenset(valuation.get(p, ())) for p in range(domain.size)])
