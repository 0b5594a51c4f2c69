import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fairclust.algorithms import relax_and_reduce
from fairclust.corpus import desk_corpus, rounding_corpus
from fairclust.instance import make_instance
from fairclust.oracle import brute_force_opt

settings.register_profile("ci", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")

LINE = [0.0, 1.0, 3.0, 7.0]


def line4(p=2.0, q=1.0, k=2, weights=((1, 1, 0, 0), (0, 0, 1, 1))):
    return make_instance(coords=LINE, weights=np.array(weights, dtype=float), k=k, p=p, q=q, name="line4")


@pytest.fixture(scope="session")
def corpus():
    return desk_corpus()


@pytest.fixture(scope="session")
def relaxed(corpus):
    """name -> (sol, red) for every desk instance."""
    return {inst.name: relax_and_reduce(inst) for inst in corpus}


@pytest.fixture(scope="session")
def optima(corpus):
    return {inst.name: brute_force_opt(inst, use_cache=False).optimum for inst in corpus}


@pytest.fixture(scope="session")
def rcorpus():
    return rounding_corpus()


@pytest.fixture(scope="session")
def rrelaxed(rcorpus):
    return {inst.name: relax_and_reduce(inst) for inst in rcorpus}


ACCEPTANCE: dict = {}


def record_acceptance(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[n] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
