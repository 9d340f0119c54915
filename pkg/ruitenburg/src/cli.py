from __future__ import annotations

import argparse
import os
from typing import Callable, Optional, Sequence

import numpy as np
import pandas as pd

from ruitenburg.src.bounds import (
    LabelTrace,
    boolean_endo_experiment,
    check_period_bound,
    classical_f3,
    nonmonotone_counterexample,
    view_set,
)
from ruitenburg.src.dualitylite import check_nform, nform_universe
from ruitenburg.src.evaluation import (
    Evaluation,
    WidthBudgetExceeded,
    all_evaluations,
    bisim_type,
    count_classes,
    equiv_n,
    kripke_model,
)
from ruitenburg.src.formula import parse, to_text, variables
from ruitenburg.src.iteration import CombinedModel, fixpoint_check, iterate_psi, ruitenburg_index
from ruitenburg.src.ladder import (
    LadderDownset,
    eval_generator,
    generator_formula,
    inverse_image_iterates,
)
from ruitenburg.src.logger_download import logger, set_verbosity
from ruitenburg.src.poset import TWO, parse_model
from ruitenburg.src.prover import configure, countermodel, equiv_ipc, prove_cpc, prove_ipc
from ruitenburg.src.report_builder import SuiteBuilder
from ruitenburg.src.schemas import ExperimentConfig
from ruitenburg.src.utils import get_reply_text, load_experiment_defaults

EXIT_OK, EXIT_VIOLATIONS, EXIT_ERROR = 0, 1, 2

ENV_OVERRIDES = {
    "seed": "RUITENBURG_SEED",
    "budget": "RUITENBURG_BUDGET",
    "max_points": "RUITENBURG_MAX_POINTS",
    "corpus_size": "RUITENBURG_CORPUS_SIZE",
    "workers": "RUITENBURG_WORKERS",
    "out": "RUITENBURG_OUT",
}
FLAG_OVERRIDES = ("seed", "budget", "max_points", "corpus_size", "workers", "out")
NFORM_POOL_POINTS = 3

Outcome = tuple[int, list[str]]


class CliError(ValueError):
    pass


def _bool(value: bool) -> str:
    return "true" if value else "false"


def _read_model(path: Optional[str], command: str):
    if not path:
        raise CliError(get_reply_text("missing_model", command=command))
    with open(path, "r", encoding="utf-8") as stream:
        return parse_model(stream.read())


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int)
    common.add_argument("--max-points", type=int, dest="max_points")
    common.add_argument("--budget", type=int)
    common.add_argument("--corpus-size", type=int, dest="corpus_size")
    common.add_argument("--workers", type=int)
    common.add_argument("--out")
    common.add_argument("--profile", default="default")
    common.add_argument("-v", "--verbose", action="count", default=0)
    common.add_argument("-q", "--quiet", action="store_true")

    parser = argparse.ArgumentParser(prog="ruitenburg", description=get_reply_text("help_description"))
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, parents=[common], help=get_reply_text(f"{name}_description"))

    p = add("prove")
    p.add_argument("formula")
    p.add_argument("--logic", choices=("ipc", "cpc"), default="ipc")

    p = add("equiv")
    p.add_argument("left")
    p.add_argument("right")

    p = add("countermodel")
    p.add_argument("formula")

    p = add("ruitenburg")
    p.add_argument("formula")
    p.add_argument("--x", default="x")
    p.add_argument("--cap", type=int)
    p.add_argument("--fixpoint", action="store_true")

    p = add("iterate")
    p.add_argument("formula")
    p.add_argument("--x", default="x")
    p.add_argument("--model")
    p.add_argument("--t-max", type=int, dest="t_max")

    p = add("bisim")
    p.add_argument("--model")
    p.add_argument("--other")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--max-width", type=int, dest="max_width")

    p = add("nform")
    p.add_argument("--n", type=int, default=1)

    p = add("ladder")
    p.add_argument("--k", type=int, default=12)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--t", type=int, default=3)

    p = add("bounds")
    p.add_argument("target", choices=("view", "counterexample", "classical", "boolean"))
    p.add_argument("formula", nargs="?")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--x", default="x")
    p.add_argument("--model")

    add("suite")
    return parser


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    """YAML profile, then ``RUITENBURG_*`` environment values, then flags."""
    values = load_experiment_defaults(args.profile)
    for key, env_name in ENV_OVERRIDES.items():
        raw = os.environ.get(env_name)
        if raw:
            values[key] = raw
    for key in FLAG_OVERRIDES:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    return ExperimentConfig(**values)


class RuitenburgCli:
    """Dispatches one parsed command line to its handler."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.handlers: dict[str, Callable[[argparse.Namespace], Outcome]] = {
            "prove": self.prove,
            "equiv": self.equiv,
            "countermodel": self.countermodel,
            "ruitenburg": self.ruitenburg,
            "iterate": self.iterate,
            "bisim": self.bisim,
            "nform": self.nform,
            "ladder": self.ladder,
            "bounds": self.bounds,
            "suite": self.suite,
        }

    def prove(self, args: argparse.Namespace) -> Outcome:
        a = parse(args.formula)
        provable = prove_cpc(a) if args.logic == "cpc" else prove_ipc(a)
        return EXIT_OK, [f"provable: {_bool(provable)}"]

    def equiv(self, args: argparse.Namespace) -> Outcome:
        return EXIT_OK, [f"equivalent: {_bool(equiv_ipc(parse(args.left), parse(args.right)))}"]

    def countermodel(self, args: argparse.Namespace) -> Outcome:
        found = countermodel(parse(args.formula), self.config.max_points)
        if found is None:
            return EXIT_OK, [get_reply_text("no_countermodel")]
        return EXIT_OK, found.to_text().splitlines()

    def ruitenburg(self, args: argparse.Namespace) -> Outcome:
        a = parse(args.formula)
        cap = args.cap or self.config.index_cap
        n, period = ruitenburg_index(a, args.x, cap)
        lines = [f"N={n} period={period}"]
        if args.fixpoint:
            lines.append(f"fixpoint: {to_text(fixpoint_check(a, args.x, cap))}")
        return EXIT_OK, lines

    def _combined_model(self, a, x: str, path: Optional[str], command: str) -> CombinedModel:
        return CombinedModel.from_model_text(_read_model(path, command), variables(a) - {x}, x)

    def iterate(self, args: argparse.Namespace) -> Outcome:
        a = parse(args.formula)
        m = self._combined_model(a, args.x, args.model, "iterate")
        trace = iterate_psi(a, m, args.t_max or self.config.t_max)
        return EXIT_OK, trace.to_lines()

    def bisim(self, args: argparse.Namespace) -> Outcome:
        first = _read_model(args.model, "bisim")
        texts = [first] + ([_read_model(args.other, "bisim")] if args.other else [])
        names = set()
        for text in texts:
            for label in text.labels.values():
                names |= label
        models: list[Evaluation] = [kripke_model(t.poset, t.labels, names) for t in texts]
        labels = models[0].labels
        lines = [f"type: {bisim_type(u, args.n).describe(labels)}" for u in models]
        if args.other:
            lines.append(f"equivalent: {_bool(equiv_n(models[0], models[1], args.n))}")
        width = args.max_width or self.config.max_width
        try:
            lines.append(f"classes: {count_classes(labels, args.n, width)}")
        except WidthBudgetExceeded as e:
            logger.warning(str(e))
            lines.append("classes: over budget")
        return EXIT_OK, lines

    def nform(self, args: argparse.Namespace) -> Outcome:
        pool = list(all_evaluations(TWO, NFORM_POOL_POINTS))
        universe = nform_universe(TWO, args.n, NFORM_POOL_POINTS, self.config.max_width)
        mismatches, checked = 0, 0
        for u in pool:
            report = check_nform(u, args.n, universe, pool)
            checked += report.checked
            mismatches += len(report.violations)
        lines = [f"nform checked: {checked}", f"nform mismatches: {mismatches}"]
        return (EXIT_VIOLATIONS if mismatches else EXIT_OK), lines

    def ladder(self, args: argparse.Namespace) -> Outcome:
        rows = []
        for n in range(-1, args.n + 1):
            value = eval_generator(args.k, n)
            rows.append(
                {
                    "n": n,
                    "formula": to_text(generator_formula(n)),
                    "downset": str(value),
                    "match": value == LadderDownset.principal(n),
                }
            )
        table = pd.DataFrame(rows)
        lines = table.to_string(index=False).splitlines()
        start = LadderDownset.principal(0)
        iterates = inverse_image_iterates(args.k, start, args.t)
        lines.append(f"iterates of {start}: " + ", ".join(str(d) for d in iterates))
        return (EXIT_OK if table["match"].all() else EXIT_VIOLATIONS), lines

    def bounds(self, args: argparse.Namespace) -> Outcome:
        if args.target == "view":
            if not args.formula:
                raise CliError("bounds view needs a formula")
            a = parse(args.formula)
            trace = iterate_psi(a, self._combined_model(a, args.x, args.model, "bounds view"), self.config.t_max)
            label_trace = LabelTrace.from_iteration(trace)
            lines = [
                f"point {p}: view set of {len(view_set(label_trace, p).labels)} labels"
                for p in range(trace.model.poset.size)
            ]
            report = check_period_bound(label_trace)
        elif args.target == "counterexample":
            _, period = nonmonotone_counterexample(args.n)
            ok = period == 1 << args.n
            lines = [f"counterexample bits {args.n} period {period}"]
            return (EXIT_OK if ok else EXIT_VIOLATIONS), lines
        elif args.target == "classical":
            report = classical_f3(args.n)
            lines = []
        else:
            rng = np.random.default_rng(self.config.seed)
            report = boolean_endo_experiment(args.n, self.config.star_samples, rng)
            lines = list(report.notes)
        lines.append(report.summary_line())
        lines += [f"VIOLATION: {v}" for v in report.violations]
        return (EXIT_OK if report.ok else EXIT_VIOLATIONS), lines

    def suite(self, args: argparse.Namespace) -> Outcome:
        report = SuiteBuilder(self.config).build()
        return (EXIT_OK if report.ok else EXIT_VIOLATIONS), report.to_lines()

    def dispatch(self, args: argparse.Namespace) -> Outcome:
        return self.handlers[args.command](args)


def run(argv: Optional[Sequence[str]] = None) -> tuple[int, list[str], Optional[str]]:
    """
    Parse ``argv``, run the command and return ``(exit code, report lines, out path)``.

    Library errors (formula syntax, model format, prover budget, missing
    files) become exit code 2 with a one-line diagnostic.
    """
    args = build_parser().parse_args(argv)
    set_verbosity(args.verbose, args.quiet)
    try:
        config = build_config(args)
        configure(budget=config.budget, cache_cap=config.cache_cap)
        code, lines = RuitenburgCli(config).dispatch(args)
    except (ValueError, KeyError, RuntimeError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_ERROR, [get_reply_text("error_prefix", message=e)], None
    return code, lines, config.out
