import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hallmhd import kernels
from hallmhd.grid import GridSpec, packed_modes

needs_cython = pytest.mark.skipif("cython" not in kernels.available_backends(),
                                  reason="compiled kernels not built")


def random_complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def naive_trapezoid(sources, decay, h):
    """Direct O(M^2) composite trapezoid, independent of the recurrence."""
    M = sources.shape[0] - 1
    out = np.zeros_like(sources)
    for m in range(1, M + 1):
        w = np.full(m + 1, h)
        w[0] = w[-1] = h / 2
        out[m] = sum(w[j] * decay ** (m - j) * sources[j] for j in range(m + 1))
    return out


@pytest.fixture(scope="module")
def modes():
    return packed_modes(GridSpec(8))


class TestPythonKernels:
    def test_trapezoid_matches_direct_sum(self, rng):
        src = random_complex(rng, (9, 3, 40))
        decay = rng.uniform(0.1, 1.0, 40)
        got = kernels.duhamel_trapezoid(src, decay, 0.125, backend="python")
        np.testing.assert_allclose(got, naive_trapezoid(src, decay, 0.125), atol=1e-13)

    def test_trapezoid_first_node_zero(self, rng):
        src = random_complex(rng, (5, 3, 7))
        assert not np.any(kernels.duhamel_trapezoid(src, np.ones(7), 0.1, backend="python")[0])

    @pytest.mark.parametrize("with_curl", [False, True])
    def test_projection_is_solenoidal(self, rng, modes, with_curl):
        n = modes["kd1"].size
        out = kernels.project_divergence(random_complex(rng, (3, 3, n)), modes["kd1"],
                                         modes["kd2"], modes["kd3"], modes["inv_ksq"],
                                         with_curl, backend="python")
        kdot = modes["kd1"] * out[0] + modes["kd2"] * out[1] + modes["kd3"] * out[2]
        assert np.max(np.abs(kdot)) < 1e-12

    def test_unknown_backend(self):
        with pytest.raises(ValueError, match="unknown backend"):
            kernels.duhamel_trapezoid(np.zeros((2, 3, 1), complex), np.ones(1), 1.0,
                                      backend="fortran")


@needs_cython
class TestBackendEquivalence:
    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**31), with_curl=st.booleans())
    def test_project_divergence(self, seed, with_curl):
        m = packed_modes(GridSpec(8))
        t = random_complex(np.random.default_rng(seed), (3, 3, m["kd1"].size))
        args = (t, m["kd1"], m["kd2"], m["kd3"], m["inv_ksq"], with_curl)
        a = kernels.project_divergence(*args, backend="python")
        b = kernels.project_divergence(*args, backend="cython")
        np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-13)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**31), nodes=st.integers(2, 20),
           h=st.floats(1e-4, 1.0))
    def test_duhamel_trapezoid(self, seed, nodes, h):
        r = np.random.default_rng(seed)
        src = random_complex(r, (nodes, 3, 17))
        decay = r.uniform(0.0, 1.0, 17)
        a = kernels.duhamel_trapezoid(src, decay, h, backend="python")
        b = kernels.duhamel_trapezoid(src, decay, h, backend="cython")
        np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-13)


def test_pure_environment_forces_fallback():
    env = dict(os.environ, HALLMHD_PURE="1")
    out = subprocess.run([sys.executable, "-c", "from hallmhd import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
