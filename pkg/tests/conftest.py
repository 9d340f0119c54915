import numpy as np
import pytest

from ruitenburg.src.poset import RootedPoset
from ruitenburg.src.prover import configure
from ruitenburg.src.schemas import ExperimentConfig
from ruitenburg.src.utils import load_experiment_defaults


@pytest.fixture(scope="session", autouse=True)
def fresh_prover():
    """One prover with a generous budget for the whole run."""
    configure(budget=2_000_000)
    yield


@pytest.fixture
def smoke_config() -> ExperimentConfig:
    return ExperimentConfig(**load_experiment_defaults("smoke"))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def chain3() -> RootedPoset:
    """Root 0 over 1 over 2."""
    return RootedPoset.chain(3)


@pytest.fixture
def fork() -> RootedPoset:
    """Root 0 over two incomparable minimal points 1 and 2."""
    return RootedPoset.graft([RootedPoset.single(), RootedPoset.single()])[0]
