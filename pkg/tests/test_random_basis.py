import math

import numpy as np
import pytest

from vgpdiag.diagnostics import calF
from vgpdiag.models import heisenberg_edges
from vgpdiag.numerics import seeded_rng
from vgpdiag.pauli import to_dense
from vgpdiag.random_basis import (concentration_probe, draw_pauli_tuple, expected_calF_formula,
                                  haar_unitary, pauli_tuple_calF, pauli_tuple_hamiltonian,
                                  random_pauli_formula)


def test_haar_unitary_is_unitary_and_uniform_phases():
    rng = seeded_rng(0)
    u = haar_unitary(8, rng)
    assert np.allclose(u @ u.conj().T, np.eye(8), atol=1e-12)
    # first-column moments of a Haar unitary: E|u_00|^2 = 1/D
    vals = [abs(haar_unitary(4, rng)[0, 0]) ** 2 for _ in range(4000)]
    assert np.mean(vals) == pytest.approx(0.25, abs=0.01)


def test_formula_fields():
    mat = to_dense(heisenberg_edges(4, [(0, 1), (1, 2), (2, 3)], [1, 1, 1]))
    rep = expected_calF_formula(mat)
    d = mat.shape[0]
    fro = np.linalg.norm(mat)
    assert rep.mu == pytest.approx(fro * math.sqrt(math.pi) / (2 * d))
    assert rep.formula_value > math.exp(rep.lambda_star)
    with pytest.raises(ValueError):
        expected_calF_formula(np.zeros((4, 4)))


def test_pauli_tuple_calF_matches_dense():
    rng = seeded_rng(1)
    terms, _ = draw_pauli_tuple(4, 3, rng)
    coeffs = [0.7, -0.4, 1.1]
    h = pauli_tuple_hamiltonian(4, terms, coeffs)
    assert pauli_tuple_calF(4, [x for x, _ in terms], coeffs) == pytest.approx(calF(to_dense(h)), rel=1e-12)


def test_single_term_exact_value():
    # one string: the M-image is |c| X-string, whose trace exponential is D cosh(c)
    n, c = 5, 0.8
    assert pauli_tuple_calF(n, [0b10110], [c]) == pytest.approx((1 << n) * math.cosh(c))
    assert random_pauli_formula(n, [c]) > (1 << n) * math.cosh(c)


def test_concentration_probe_needs_samples():
    mat = to_dense(heisenberg_edges(3, [(0, 1), (1, 2)], [1, 1]))
    with pytest.raises(ValueError):
        concentration_probe(mat, 10, seeded_rng(0))
    q = concentration_probe(mat, 40, seeded_rng(0))
    assert 0 <= q[0.5] <= q[0.9]
