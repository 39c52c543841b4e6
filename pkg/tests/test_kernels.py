import os
import subprocess
import sys

import numpy as np
import pytest

from lftm import kernels
from lftm.baseline_samplers import Hyperparams
from lftm.lf_models import train
from lftm.synthetic import block_embeddings, planted_corpus

pytestmark = pytest.mark.skipif(kernels.numba_backend is None, reason="numba not installed")


@pytest.mark.parametrize("kind", ["lda", "dmm", "lf-lda", "lf-dmm"])
def test_backends_produce_identical_trajectories(kind):
    corpus = planted_corpus(n_docs=60, seed=3)
    omega = block_embeddings(seed=3)
    hp = Hyperparams(T=3, lam=0.6, seed=8, baseline_iters=15, lf_iters=5)
    out = {}
    before = kernels.backend_name()
    try:
        for name in ("numba", "numpy"):
            kernels.set_backend(name)
            m = train(corpus, hp, kind, omega)
            out[name] = (m.state.z.copy(), m.state.s.copy(), m.tau.copy())
    finally:
        kernels.set_backend(before)
    for a, b in zip(out["numba"], out["numpy"]):
        np.testing.assert_array_equal(a, b)


def test_set_backend_rejects_unknown():
    with pytest.raises(ValueError):
        kernels.set_backend("fortran")


@pytest.mark.parametrize("value, expected", [("1", "numpy"), ("true", "numpy"), ("0", "numba"), ("", "numba")])
def test_env_flag_selects_backend(value, expected):
    env = dict(os.environ, LFTM_DISABLE_NUMBA=value)
    out = subprocess.run([sys.executable, "-c", "from lftm import kernels; print(kernels.backend_name())"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == expected
