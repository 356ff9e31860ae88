import math

import numpy as np
import pytest
from scipy import special

from vgpdiag.numerics import (bessel_i1, block_eigh, block_eigvals, check_hermitian, gf2_circuits,
                              gf2_rank, hermitian_eigvals, jacobi_eigh, log_bessel_i1, log_trace_exp,
                              seeded_rng, trace_exp)


def _random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2


def test_jacobi_matches_lapack():
    rng = seeded_rng(0)
    for n in (2, 5, 9):
        a = _random_hermitian(rng, n)
        w, v = jacobi_eigh(a)
        assert np.allclose(np.sort(w), hermitian_eigvals(a), atol=1e-10)
        assert np.allclose(a @ v, v * w, atol=1e-9)


def test_block_eigvals_on_block_diagonal():
    rng = seeded_rng(1)
    blocks = [_random_hermitian(rng, k) for k in (30, 40, 20)]
    a = np.zeros((90, 90), dtype=complex)
    off = 0
    for b in blocks:
        a[off:off + len(b), off:off + len(b)] = b
        off += len(b)
    perm = rng.permutation(90)
    a = a[np.ix_(perm, perm)]
    assert np.allclose(block_eigvals(a), hermitian_eigvals(a), atol=1e-10)
    parts = block_eigh(a)
    assert sum(len(idx) for idx, _, _ in parts) == 90


def test_check_hermitian_rejects():
    with pytest.raises(ValueError):
        check_hermitian(np.array([[0, 1], [0, 0]]))


def test_trace_exp_stable():
    a = np.diag([1000.0, 999.0])
    assert math.isclose(log_trace_exp(a, 1.0), 1000 + math.log1p(math.exp(-1)), rel_tol=1e-14)
    assert math.isclose(trace_exp(np.zeros((3, 3)), 2.0), 3.0)


def test_gf2_rank_and_circuits():
    masks = [0b011, 0b110, 0b101, 0b111]
    assert gf2_rank(masks) == 3
    circuits = gf2_circuits(masks, 4)
    assert (0, 1, 2) in circuits
    assert all((j, j) in circuits for j in range(4))
    for c in circuits:
        acc = 0
        for j in c:
            acc ^= masks[j]
        assert acc == 0
    with pytest.raises(ValueError):
        gf2_circuits([0, 1], 3)


def test_bessel_against_scipy():
    for x in (1e-8, 0.3, 2.0, 17.0, 40.0, 400.0):
        assert math.isclose(bessel_i1(x), special.i1(x), rel_tol=1e-13)
        assert math.isclose(log_bessel_i1(x), math.log(special.i1e(x)) + x, rel_tol=1e-13)


def test_seeded_rng_reproducible():
    assert seeded_rng(5).integers(0, 1 << 30) == seeded_rng(5).integers(0, 1 << 30)
