import numpy as np
import pytest

from lftm import kernels
from lftm.synthetic import block_embeddings, planted_corpus, random_corpus

_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    if request.param == "numba" and kernels.numba_backend is None:
        pytest.skip("numba not installed")
    previous = kernels.backend_name()
    kernels.set_backend(request.param)
    yield request.param
    kernels.set_backend(previous)


@pytest.fixture(scope="session")
def planted():
    return planted_corpus(seed=0)


@pytest.fixture(scope="session")
def planted_omega():
    return block_embeddings(seed=0)


@pytest.fixture(scope="session")
def small_corpus():
    return random_corpus(n_docs=12, V=7, max_len=5, seed=3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def acceptance(request):
    """report(criterion, passed, detail): collected and printed after the run."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def report(criterion, passed, detail=""):
        status = passed if isinstance(passed, str) else ("PASS" if passed else "FAIL")
        lines.append(f"[{status}] criterion {criterion}: {detail}")

    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
