"""Random Hamiltonian generators shared by the test modules."""
from __future__ import annotations

import numpy as np

from vgpdiag.pauli import PauliSum, PauliTerm, conjugate_pauli


def random_generic(n: int, rng: np.random.Generator, terms: int) -> PauliSum:
    """Uniform (x, z) words with coefficients in [-1, 1]."""
    words = rng.integers(1, 1 << (2 * n), size=terms)
    return PauliSum(n, [PauliTerm(float(rng.uniform(-1, 1)), int(w) & ((1 << n) - 1), int(w) >> n)
                        for w in words])


def random_stoquastic(n: int, rng: np.random.Generator, terms: int) -> PauliSum:
    """Nonpositive X-strings plus arbitrary Z-strings: stoquastic by construction."""
    out = []
    for _ in range(terms):
        x = int(rng.integers(1, 1 << n))
        out.append(PauliTerm(-float(rng.uniform(0.1, 1)), x, 0))
        out.append(PauliTerm(float(rng.uniform(-1, 1)), 0, int(rng.integers(1, 1 << n))))
    return PauliSum(n, out)


def random_real_xz(n: int, rng: np.random.Generator, terms: int) -> PauliSum:
    """Real strings built from X and Z only (no Y) with random signs."""
    out = []
    for _ in range(terms):
        x = int(rng.integers(1, 1 << n))
        z = int(rng.integers(0, 1 << n)) & ~x
        out.append(PauliTerm(float(rng.uniform(-1, 1)), x, z))
    return PauliSum(n, out)


def random_pauli_sum(rng: np.random.Generator, max_n: int = 5) -> PauliSum:
    """Mixture of generic, disguised stoquastic and real X/Z sums."""
    n = int(rng.integers(2, max_n + 1))
    kind = int(rng.integers(0, 4))
    terms = int(rng.integers(2, 2 * n + 1))
    if kind == 0:
        return random_generic(n, rng, terms)
    if kind == 1:
        h = random_stoquastic(n, rng, max(1, terms // 2))
        return conjugate_pauli(h, int(rng.integers(0, 1 << n)), int(rng.integers(0, 1 << n)))
    if kind == 2:
        return random_real_xz(n, rng, terms)
    # few single flips: sparse graphs where cycles are rare
    return PauliSum(n, [PauliTerm(float(rng.uniform(-1, 1)), 1 << int(rng.integers(0, n)),
                                  int(rng.integers(0, 1 << n))) for _ in range(terms)])
