from __future__ import annotations

from typing import Callable, List, Optional

import pandas as pd
from pydantic import BaseModel

from ruitenburg.src.bounds import (
    LabelTrace,
    boolean_endo_experiment,
    check_period_bound,
    classical_f3,
    factorial_inequality,
    nonmonotone_counterexample,
    substitution_trace,
)
from ruitenburg.src.corpus import (
    all_combined_models,
    enumerate_formulas,
    graded_pairs,
    random_combined_model,
    random_corpus,
    random_downset,
    random_formula,
    random_presentation_model,
    spawn_rngs,
)
from ruitenburg.src.dualitylite import (
    check_ev_morphism,
    check_iota_triangle,
    check_nform,
    check_restriction_closed,
    down_n,
    has_b_index,
    has_leq_index,
    heyting_implies,
    intersection,
    iota,
    nform_universe,
    union,
)
from ruitenburg.src.evaluation import all_evaluations, bisim_type, forces, kripke_models, model_from_masks
from ruitenburg.src.formula import Formula, Implies, Var, degree, iff, iterate_formula, neg, to_text
from ruitenburg.src.iteration import (
    CombinedModel,
    IndexSearchExhausted,
    IterationTrace,
    check_duality_bridge,
    check_height_periodicity,
    check_index_decreases,
    check_lemma_minrank,
    check_lemma_period,
    index_bound,
    iterate_psi,
    max_rank_estimate,
    ruitenburg_index,
)
from ruitenburg.src.ladder import (
    LadderDownset,
    OpenMapError,
    check_generators,
    check_lift,
    check_non_periodic,
    check_vee_vee,
    ladder_endo,
    projectivity_check,
    star_construction,
)
from ruitenburg.src.logger_download import logger
from ruitenburg.src.poset import TWO, powerset_labels, random_rooted_poset
from ruitenburg.src.prover import Prover, ProverBudgetExceeded, countermodel, prove_cpc
from ruitenburg.src.schemas import ExperimentConfig, PropertyReport
from ruitenburg.src.worker import run_parallel

CORPUS_VARIABLES = ("x", "y")
PARAMETERS = ("y",)
INDEX_DECREASE_FORMULAS = 10
INDEX_DECREASE_K = 2
GRADED_POINTS = 4
BRIDGE_POWERS = 6
DEGREE_POINTS = 4
DEGREE_LIMIT = 2
ORACLE_DEGREE = 3
DUALITY_POINTS = 3
LADDER_K = 12
LADDER_GENERATORS = 10
LADDER_ITERATES = 4
BOUND_ARGUMENT = 12
BOOLEAN_BITS = 2
CLASSICAL_T = 4
SUBSTITUTION_VARIABLES = ("p", "q", "r")


def _index_task(item: tuple[Formula, int]) -> tuple[Optional[int], Optional[int], Optional[str]]:
    a, cap = item
    try:
        n, period = ruitenburg_index(a, "x", cap)
    except (IndexSearchExhausted, ProverBudgetExceeded) as e:
        return None, None, str(e)
    return n, period, None


_UNFILTERED_PROVERS: dict[tuple[Optional[int], Optional[int]], Prover] = {}


def unfiltered_prover(budget: Optional[int], cache_cap: Optional[int]) -> Prover:
    """Per-process prover that always searches, without the truth-table shortcut."""
    key = (budget, cache_cap)
    prover = _UNFILTERED_PROVERS.get(key)
    if prover is None:
        prover = Prover(budget=budget, cache_cap=cache_cap, classical_filter=False)
        _UNFILTERED_PROVERS[key] = prover
    return prover


def _oracle_task(
    item: tuple[Formula, int, Optional[int], Optional[int]],
) -> tuple[bool, Optional[int], Optional[str]]:
    a, max_points, budget, cache_cap = item
    try:
        provable = unfiltered_prover(budget, cache_cap).prove(a)
    except ProverBudgetExceeded as e:
        return False, None, str(e)
    found = countermodel(a, max_points)
    return provable, None if found is None else found.poset.size, None


class SuiteReport(BaseModel):
    seed: int
    experiments: List[PropertyReport]

    @property
    def ok(self) -> bool:
        return all(e.ok for e in self.experiments)

    def table(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {"experiment": e.name, "checked": e.checked, "violations": len(e.violations)}
                for e in self.experiments
            ]
        )

    def to_lines(self) -> list[str]:
        lines = [f"seed {self.seed}"]
        lines += [e.summary_line() for e in self.experiments]
        lines.append(self.table().to_string(index=False))
        for e in self.experiments:
            lines += [f"{e.name}: {note}" for note in e.notes]
            lines += [f"{e.name} VIOLATION: {v}" for v in e.violations]
        return lines


class SuiteBuilder:
    """
    Runs every acceptance experiment at the scale given by the config.

    Each experiment draws from its own random stream, so changing the size
    of one experiment does not move the samples of another.
    """

    def __init__(self, config: ExperimentConfig):
        self.config = config
        (
            self.rng_corpus,
            self.rng_models,
            self.rng_pairs,
            self.rng_star,
            self.rng_bounds,
        ) = spawn_rngs(config.seed, 5)
        self._corpus: Optional[list[Formula]] = None
        self._samples: Optional[list[tuple[Formula, CombinedModel]]] = None
        self._traces: Optional[list[IterationTrace]] = None

    @property
    def corpus(self) -> list[Formula]:
        if self._corpus is None:
            exhaustive = enumerate_formulas(CORPUS_VARIABLES, self.config.max_connectives)
            sampled = random_corpus(
                self.rng_corpus, self.config.corpus_size, CORPUS_VARIABLES, self.config.random_connectives
            )
            self._corpus = exhaustive + sampled
            logger.info(f"[Suite] Corpus of {len(exhaustive)} enumerated and {len(sampled)} random formulas")
        return self._corpus

    @property
    def samples(self) -> list[tuple[Formula, CombinedModel]]:
        if self._samples is None:
            corpus = self.corpus
            self._samples = []
            for _ in range(self.config.model_samples):
                a = corpus[int(self.rng_models.integers(len(corpus)))]
                m = random_combined_model(self.rng_models, PARAMETERS, self.config.model_points)
                self._samples.append((a, m))
        return self._samples

    @property
    def traces(self) -> list[IterationTrace]:
        if self._traces is None:
            self._traces = [iterate_psi(a, m, (1 << m.poset.size) + 2) for a, m in self.samples]
        return self._traces

    # experiments

    def _ruitenburg_property(self) -> PropertyReport:
        report = PropertyReport(name="ruitenburg_index")
        cap = self.config.index_cap
        results = run_parallel(
            _index_task,
            [(a, cap) for a in self.corpus],
            workers=self.config.workers,
            budget=self.config.budget,
            cache_cap=self.config.cache_cap,
        )
        largest = 0
        for a, (n, period, error) in zip(self.corpus, results):
            report.checked += 1
            if error is not None:
                report.violation(f"{a}: {error}")
            elif period not in (1, 2) or n > cap:
                report.violation(f"{a}: N={n} period={period}")
            else:
                largest = max(largest, n)
        report.notes.append(f"largest index {largest}")
        return report

    def _classical(self) -> PropertyReport:
        report = PropertyReport(name="classical")
        for a in self.corpus:
            report.checked += 1
            if not prove_cpc(iff(iterate_formula(a, "x", 3), a)):
                report.violation(f"{a}: A^3 and A differ classically")
        for t in range(1, CLASSICAL_T + 1):
            report.merge(classical_f3(t))
        return report

    def _glivenko(self) -> PropertyReport:
        report = PropertyReport(name="glivenko", checked=3)
        prover = unfiltered_prover(self.config.budget, self.config.cache_cap)
        x = Var("x")
        if not prover.equivalent(neg(x), neg(neg(neg(x)))):
            report.violation("~x and ~~~x are not equivalent")
        if prover.equivalent(x, neg(neg(x))):
            report.violation("x and ~~x are equivalent")
        found = countermodel(Implies(neg(neg(x)), x), 2)
        if found is None or found.poset.size != 2:
            report.violation("no two-point countermodel to ~~x -> x")
        for a in self.corpus:
            report.checked += 1
            if prove_cpc(a) != prover.prove(neg(neg(a))):
                report.violation(f"{a}: classical validity differs from provability of its double negation")
        return report

    def _height_periodicity(self) -> PropertyReport:
        report = PropertyReport(name="index_from_height")
        for trace in self.traces:
            report.merge(check_height_periodicity(trace))
        labels = powerset_labels(PARAMETERS)
        rank = max_rank_estimate(labels, 1, self.config.max_width)
        report.notes.append(f"structural index bound for degree 1: {index_bound(labels.height(), rank)}")
        return report

    def _lemma_period(self) -> PropertyReport:
        report = PropertyReport(name="lemma_period")
        minrank = PropertyReport(name="lemma_minrank")
        for (a, m), trace in zip(self.samples, self.traces):
            report.merge(check_lemma_period(a, m))
            minrank.merge(check_lemma_minrank(trace))
        report.notes.append(f"minimal-rank spot checks: {minrank.checked}")
        report.violations.extend(minrank.violations)
        return report

    def _index_decreases(self) -> PropertyReport:
        report = PropertyReport(name="index_decreases")
        corpus = self.corpus
        models = all_combined_models(PARAMETERS, min(self.config.max_points, GRADED_POINTS))
        pairs_at: dict[int, list[tuple[CombinedModel, CombinedModel]]] = {}
        picks = self.rng_pairs.choice(len(corpus), size=min(INDEX_DECREASE_FORMULAS, len(corpus)), replace=False)
        for i in sorted(int(i) for i in picks):
            a = corpus[i]
            n = max(1, degree(a))
            for k in range(INDEX_DECREASE_K + 1):
                if n + k not in pairs_at:
                    pairs_at[n + k] = graded_pairs(models, n + k, self.config.pair_samples, self.rng_pairs)
                for m1, m2 in pairs_at[n + k]:
                    report.merge(check_index_decreases(a, m1, m2, k))
        # every graded pair is (n+k)-equivalent, so checked counts the nontrivial pairs
        if report.checked == 0:
            report.violation("no model pair is equivalent at depth n+k and split one level deeper")
        report.notes.append(f"pairs equivalent at depth n+k but split at n+k+1: {report.checked}")
        return report

    def _degree_correspondence(self) -> PropertyReport:
        report = PropertyReport(name="degree_correspondence")
        points = min(DEGREE_POINTS, self.config.max_points)
        pool = list(kripke_models(CORPUS_VARIABLES, points))
        types = {n: [bisim_type(u, n) for u in pool] for n in range(DEGREE_LIMIT + 1)}
        for a in self.corpus:
            n = degree(a)
            if n > DEGREE_LIMIT:
                continue
            report.checked += 1
            verdicts: dict = {}
            for u, t in zip(pool, types[n]):
                forced = forces(u, a)
                if verdicts.setdefault(t, forced) != forced:
                    report.violation(f"{a}: {n}-equivalent models disagree at the root")
                    break
        return report

    def _duality_bridge(self) -> PropertyReport:
        report = PropertyReport(name="duality_bridge")
        for a, m in self.samples:
            report.merge(check_duality_bridge(a, m, BRIDGE_POWERS))
        return report

    def _ladder(self) -> PropertyReport:
        report = PropertyReport(name="ladder")
        report.merge(check_generators(LADDER_K, LADDER_GENERATORS))
        report.merge(check_vee_vee(LADDER_K))
        report.checked += 1
        try:
            ladder_endo(LADDER_K)
        except OpenMapError as e:
            report.violation(str(e))
        report.merge(check_non_periodic(LADDER_K, LadderDownset.principal(0), LADDER_ITERATES))
        report.merge(check_lift(LADDER_K, LADDER_ITERATES))
        for _ in range(self.config.star_samples):
            m = random_presentation_model(self.rng_star, self.config.model_points)
            report.checked += 1
            try:
                star_construction(m)
            except OpenMapError as e:
                report.violation(str(e))
        report.checked += 1
        if not projectivity_check():
            report.violation("projectivity substitution fails")
        return report

    def _bounds(self) -> PropertyReport:
        report = PropertyReport(name="bounds")
        for trace in self.traces:
            report.merge(check_period_bound(trace))
        for m in range(1, BOUND_ARGUMENT + 1):
            for n in range(1, BOUND_ARGUMENT + 1):
                report.checked += 1
                if not factorial_inequality(m, n):
                    report.violation(f"factorial inequality fails at ({m}, {n})")
        for n in range(1, BOUND_ARGUMENT + 1):
            report.checked += 1
            _, period = nonmonotone_counterexample(n)
            if period != 1 << n:
                report.violation(f"counterexample on {n} bits has period {period}")
        for n in range(BOOLEAN_BITS + 1):
            report.merge(boolean_endo_experiment(n))
        for trace in self._substitution_traces():
            report.merge(check_period_bound(trace))
        return report

    def _substitution_traces(self) -> list[LabelTrace]:
        """Simultaneous substitutions in three variables: a rotation and random ones."""
        names = SUBSTITUTION_VARIABLES
        labels = powerset_labels(names)
        rotation = {"p": Var("q"), "q": Var("r"), "r": Var("p")}
        rng = self.rng_bounds
        traces = []
        for i in range(max(1, self.config.model_samples // 10)):
            poset = random_rooted_poset(rng, int(rng.integers(1, self.config.model_points + 1)))
            model = model_from_masks(poset, labels, {name: random_downset(rng, poset) for name in names})
            if i % 2 == 0:
                substitution = rotation
            else:
                substitution = {name: random_formula(rng, names, int(rng.integers(4))) for name in names}
            traces.append(substitution_trace(substitution, model, 1 << (len(names) * poset.size + 1)))
        return traces

    def _dualitylite(self) -> PropertyReport:
        report = PropertyReport(name="dualitylite")
        pool = list(all_evaluations(TWO, DUALITY_POINTS))
        family = [iota(TWO, []), iota(TWO, [1]), iota(TWO, [0, 1])]
        family += [down_n(u, n) for u in pool[:6] for n in (0, 1)]
        pairs = [(s, t) for s in family[:5] for t in family[:5]]
        for s, t in pairs:
            for combined in (heyting_implies(s, t), union(s, t), intersection(s, t)):
                report.merge(check_restriction_closed(combined, pool))
                report.merge(has_b_index(combined, combined.b_index, pool))
            for f in pool:
                report.merge(check_ev_morphism(s, t, f))
        for s in family:
            report.merge(has_leq_index(s, s.b_index, pool))
        for f in pool:
            report.merge(check_iota_triangle([1], f))
        for n in (0, 1):
            universe = nform_universe(TWO, n, DUALITY_POINTS, self.config.max_width)
            for u in pool:
                report.merge(check_nform(u, n, universe, pool))
        return report

    def _prover_oracle(self) -> PropertyReport:
        report = PropertyReport(name="prover_oracle")
        points = self.config.max_points
        results = run_parallel(
            _oracle_task,
            [(a, points, self.config.budget, self.config.cache_cap) for a in self.corpus],
            workers=self.config.workers,
            budget=self.config.budget,
            cache_cap=self.config.cache_cap,
        )
        escapes = 0
        for a, (provable, size, error) in zip(self.corpus, results):
            report.checked += 1
            if error is not None:
                report.violation(f"{a}: {error}")
            elif provable and size is not None:
                report.violation(f"{a}: provable but refuted on {size} points")
            elif not provable and size is None and degree(a) <= ORACLE_DEGREE:
                escapes += 1
                logger.warning(f"No countermodel with at most {points} points for unprovable {to_text(a)}")
        report.notes.append(f"unprovable formulas without a small countermodel: {escapes}")
        return report

    def build(self) -> SuiteReport:
        processing_steps: list[tuple[str, Callable[[], PropertyReport]]] = [
            ("Ruitenburg index over the corpus", self._ruitenburg_property),
            ("Classical case", self._classical),
            ("Negation spot checks", self._glivenko),
            ("Periodicity after height(P) steps", self._height_periodicity),
            ("Periodic points lemma", self._lemma_period),
            ("Index decrease under psi", self._index_decreases),
            ("Degree against bisimulation depth", self._degree_correspondence),
            ("Powers against iterates", self._duality_bridge),
            ("Ladder", self._ladder),
            ("Period bounds", self._bounds),
            ("Subpresheaf operations", self._dualitylite),
            ("Prover against countermodels", self._prover_oracle),
        ]
        experiments = []
        for title, step in processing_steps:
            logger.info(f"[Suite] Processing step: {title}")
            result = step()
            logger.info(f"[Suite] {result.summary_line()}")
            experiments.append(result)
        return SuiteReport(seed=self.config.seed, experiments=experiments)

