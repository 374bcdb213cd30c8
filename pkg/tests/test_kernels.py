import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liouville_pt import _kernels as k

needs_numba = pytest.mark.skipif(not k.HAVE_NUMBA, reason="numba not installed")


def lower(rng, d):
    z = np.tril(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)), -1)
    return z + np.diag(1.0 + rng.random(d))


def test_layout_diagonal_then_pairs():
    a = np.array([[1.0, 0], [2 + 3j, 4]], dtype=complex)
    np.testing.assert_array_equal(k.pack_lower_numpy(a), [1.0, 4.0, 2.0, 3.0])


@pytest.mark.parametrize("d", [1, 2, 5, 9])
def test_pack_unpack_round_trip(rng, d):
    a = lower(rng, d)
    np.testing.assert_array_equal(k.unpack_lower_numpy(k.pack_lower_numpy(a), d), a)
    np.testing.assert_array_equal(k.unpack_lower(k.pack_lower(a), d), a)


def test_unpack_hermitian(rng):
    h = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    h = h + h.conj().T
    np.testing.assert_allclose(k.unpack_hermitian(k.pack_lower(h), 4), h, atol=1e-15)


@needs_numba
@pytest.mark.parametrize("d", [1, 3, 6])
def test_numba_matches_numpy(rng, d):
    z = lower(rng, d)
    x = k.pack_lower_numpy(z)
    np.testing.assert_array_equal(k.pack_lower_numba(z), x)
    np.testing.assert_array_equal(k.unpack_lower_numba(x, d), k.unpack_lower_numpy(x, d))
    np.testing.assert_allclose(k.z0_matrix_numba(z), k.z0_matrix_numpy(z), atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(d=st.integers(1, 5), seed=st.integers(0, 2**32 - 1))
def test_z0_matrix_is_the_real_linear_map(d, seed):
    rng = np.random.default_rng(seed)
    z = lower(rng, d)
    x = lower(rng, d)
    direct = z @ x.conj().T + x @ z.conj().T
    via_matrix = k.unpack_hermitian(k.z0_matrix(z) @ k.pack_lower(x), d)
    np.testing.assert_allclose(via_matrix, direct, atol=1e-12)


def test_disable_flag_selects_numpy():
    env = dict(os.environ, LIOUVILLE_PT_DISABLE_NUMBA="1")
    code = "from liouville_pt import _kernels as k; print(k.USE_NUMBA)"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "False"
