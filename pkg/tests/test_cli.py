import pytest

from ruitenburg.main import main
from ruitenburg.src.cli import EXIT_ERROR, EXIT_OK, build_config, build_parser, run
from ruitenburg.src.prover import configure

CHAIN = "poset 2\nle 1 0\nlabel 1 x\n"
FORK = "poset 3\nle 1 0\nle 2 0\nlabel 1 x\nlabel 2 x\n"


@pytest.fixture(autouse=True)
def restore_prover():
    yield
    configure(budget=2_000_000)


@pytest.fixture
def chain_file(tmp_path):
    path = tmp_path / "chain.model"
    path.write_text(CHAIN, encoding="utf-8")
    return str(path)


class TestConfig:
    def test_flags_override_profile(self):
        args = build_parser().parse_args(["prove", "x", "--profile", "smoke", "--budget", "99"])
        config = build_config(args)
        assert config.budget == 99
        assert config.seed == 7

    def test_full_profile(self):
        config = build_config(build_parser().parse_args(["suite", "--profile", "full"]))
        assert (config.max_points, config.max_connectives) == (8, 5)

    def test_environment_overrides_profile(self, monkeypatch):
        monkeypatch.setenv("RUITENBURG_SEED", "11")
        assert build_config(build_parser().parse_args(["prove", "x"])).seed == 11

    def test_invalid_environment_value(self, monkeypatch):
        monkeypatch.setenv("RUITENBURG_SEED", "-1")
        code, lines, _ = run(["prove", "x"])
        assert code == EXIT_ERROR
        assert lines[0].startswith("error: ")


class TestDecisionCommands:
    def test_prove(self):
        assert run(["prove", "x -> x"]) == (EXIT_OK, ["provable: true"], None)
        assert run(["prove", "x | ~x"])[1] == ["provable: false"]
        assert run(["prove", "x | ~x", "--logic", "cpc"])[1] == ["provable: true"]

    def test_equiv(self):
        assert run(["equiv", "~x", "~~~x"])[1] == ["equivalent: true"]

    def test_countermodel(self):
        code, lines, _ = run(["countermodel", "~~x -> x"])
        assert code == EXIT_OK
        assert lines == ["poset 2", "le 1 0", "label 1 x"]
        assert run(["countermodel", "x -> x"])[1] == ["countermodel: none"]

    def test_syntax_error(self):
        code, lines, _ = run(["prove", "x &"])
        assert code == EXIT_ERROR
        assert lines[0].startswith("error: syntax error at offset")


class TestIterationCommands:
    def test_ruitenburg(self):
        assert run(["ruitenburg", "~x"])[1] == ["N=1 period=2"]

    def test_fixpoint(self):
        lines = run(["ruitenburg", "y -> x", "--fixpoint"])[1]
        assert lines == ["N=1 period=1", "fixpoint: ~y"]

    def test_iterate(self, chain_file):
        code, lines, _ = run(["iterate", "~x", "--model", chain_file])
        assert code == EXIT_OK
        assert lines == ["01", "00", "11", "index 1 period 2"]

    def test_iterate_needs_a_model(self):
        code, lines, _ = run(["iterate", "~x"])
        assert code == EXIT_ERROR
        assert lines == ["error: the iterate subcommand needs --model FILE"]

    def test_missing_model_file(self, tmp_path):
        code, _, _ = run(["iterate", "~x", "--model", str(tmp_path / "absent.model")])
        assert code == EXIT_ERROR


class TestModelCommands:
    def test_bisim(self, chain_file, tmp_path):
        other = tmp_path / "fork.model"
        other.write_text(FORK, encoding="utf-8")
        code, lines, _ = run(["bisim", "--model", chain_file, "--other", str(other), "--n", "2"])
        assert code == EXIT_OK
        assert lines[0].startswith("type: (")
        assert "equivalent: true" in lines

    def test_class_count(self, chain_file):
        lines = run(["bisim", "--model", chain_file, "--n", "1"])[1]
        assert lines[-1] == "classes: 3"

    def test_nform(self):
        code, lines, _ = run(["nform", "--n", "1"])
        assert code == EXIT_OK
        assert lines == ["nform checked: 196", "nform mismatches: 0"]


class TestLadderAndBounds:
    def test_ladder(self):
        code, lines, _ = run(["ladder", "--k", "12", "--n", "8"])
        assert code == EXIT_OK
        assert "down(8)" in lines[-2] and "True" in lines[-2]
        assert lines[-1] == "iterates of down(0): down(1)+down(2), down(3)+down(4), down(5)+down(6)"

    def test_counterexample(self):
        assert run(["bounds", "counterexample", "--n", "3"]) == (
            EXIT_OK,
            ["counterexample bits 3 period 8"],
            None,
        )

    def test_classical(self):
        assert run(["bounds", "classical", "--n", "3"])[1] == ["classical_f3[t=3] checked=65 violations=0"]

    def test_boolean(self):
        lines = run(["bounds", "boolean", "--n", "1"])[1]
        assert lines == ["max index 1, max period 2, lcm bound 2", "boolean_endo[n=1] checked=4 violations=0"]

    def test_view(self, chain_file):
        code, lines, _ = run(["bounds", "view", "~x", "--model", chain_file])
        assert code == EXIT_OK
        assert lines[-1] == "period_bound checked=1 violations=0"

    def test_view_needs_a_formula(self):
        assert run(["bounds", "view"])[0] == EXIT_ERROR


class TestMain:
    def test_writes_the_report(self, tmp_path):
        out = tmp_path / "report.txt"
        assert main(["prove", "x -> x", "--out", str(out)]) == EXIT_OK
        assert out.read_text(encoding="utf-8") == "provable: true\n"

    def test_stdout(self, capsys):
        assert main(["equiv", "x", "~~x"]) == EXIT_OK
        assert capsys.readouterr().out == "equivalent: false\n"
