import numpy as np
import pytest

from vgpdiag.pauli import (ParseError, PauliSum, PauliTerm, SizeCapError, conjugate_pauli,
                           conjugate_xstring, parse_hamiltonian, pauli_from_letters, pauli_matrix,
                           serialize_hamiltonian, to_dense)

X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0, -1.0]).astype(complex)
I2 = np.eye(2)


def kron_sites(ops):
    """Site 0 is the least significant bit, so it is the rightmost factor."""
    out = np.eye(1)
    for op in ops:
        out = np.kron(op, out)
    return out


def test_single_letters_match_textbook():
    for letter, mat in (("X", X), ("Y", Y), ("Z", Z)):
        assert np.allclose(to_dense(PauliSum(1, [pauli_from_letters(1.0, [(letter, 0)])])), mat)


def test_multi_site_ordering():
    term = pauli_from_letters(0.5, [("X", 0), ("Y", 2)])
    expected = 0.5 * kron_sites([X, I2, Y])
    assert np.allclose(to_dense(PauliSum(3, [term])), expected)


def test_parse_serialize_roundtrip():
    text = "N=3\n0.5 X0 Z1\n-1.25 Y2\n# comment\n2 Z0 Z2\n"
    h = parse_hamiltonian(text)
    again = parse_hamiltonian(serialize_hamiltonian(h))
    assert again.coeffs() == h.coeffs()
    assert np.allclose(to_dense(again), to_dense(h))


@pytest.mark.parametrize("text", ["0.5 X0\n", "N=2\n1 X2\n", "N=2\n1 X0 Z0\n", "N=2\nfoo X0\n",
                                  "N=2\n1 W0\n", "N=2\nN=3\n"])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse_hamiltonian(text)


def test_like_terms_merge_and_cancel():
    h = PauliSum(2, [PauliTerm(1.0, 1, 0), PauliTerm(-1.0, 1, 0), PauliTerm(2.0, 0, 3)])
    assert len(h) == 1


def test_dense_cap():
    with pytest.raises(SizeCapError):
        to_dense(PauliSum(13, [PauliTerm(1.0, 1, 0)]))


def test_conjugations_match_dense():
    rng = np.random.default_rng(0)
    n = 3
    h = PauliSum(n, [PauliTerm(float(rng.normal()), int(rng.integers(0, 8)), int(rng.integers(0, 8)))
                     for _ in range(8)])
    mat = to_dense(h)
    for x, z in ((5, 0), (0, 3), (6, 5)):
        p = pauli_matrix(n, x, z)
        assert np.allclose(to_dense(conjugate_pauli(h, x, z)), p @ mat @ p.conj().T)
    p = pauli_matrix(n, 3, 0)
    assert np.allclose(to_dense(conjugate_xstring(h, 3)), p @ mat @ p)
