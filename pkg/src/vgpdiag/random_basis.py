"""Random-basis statistics of calF(H, U) = tr e^{M(U H U^dagger)}."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .diagnostics import log_calF
from .numerics import bessel_i1, check_hermitian
from .pauli import PauliSum, PauliTerm


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Ginibre matrix, QR, then fix the phases of R's diagonal."""
    if dim < 2:
        raise ValueError("dim must be >= 2")
    g = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(g)
    d = np.diag(r)
    return q * (d / np.abs(d))[None, :]


@dataclass
class RandomBasisReport:
    sigma2: float
    mu: float
    lambda_star: float
    formula_value: float
    empirical_mean: float = float("nan")
    empirical_stderr: float = float("nan")
    rel_error: float = float("nan")
    samples: int = 0
    dim: int = 0

    def to_dict(self) -> dict:
        return {"sigma2": self.sigma2, "mu": self.mu, "lambda_star": self.lambda_star,
                "formula_value": self.formula_value, "empirical_mean": self.empirical_mean,
                "empirical_stderr": self.empirical_stderr, "rel_error": self.rel_error,
                "samples": self.samples}


def expected_calF_formula(h: np.ndarray) -> RandomBasisReport:
    """Closed form e^{lambda*} + (D-1) I_1(2 sigma sqrt(D)) / (sigma sqrt(D))."""
    h = check_hermitian(h)
    dim = h.shape[0]
    fro = float(np.linalg.norm(h))
    if fro == 0:
        raise ValueError("zero Hamiltonian has no random-basis statistics")
    sigma2 = (2 - math.pi / 2) * fro ** 2 / (2 * dim ** 2)
    mu = fro * math.sqrt(math.pi) / (2 * dim)
    lam = -mu + mu * dim + sigma2 / mu
    sigma = math.sqrt(sigma2)
    arg = 2 * sigma * math.sqrt(dim)
    bulk = (dim - 1) * bessel_i1(arg) / (sigma * math.sqrt(dim))
    return RandomBasisReport(sigma2, mu, lam, math.exp(lam) + bulk, dim=dim)


def empirical_expected_calF(h: np.ndarray, samples: int, rng: np.random.Generator) -> Tuple[float, float]:
    """Sample mean and standard error of calF(H, U) over Haar U."""
    if samples < 2:
        raise ValueError("samples must be >= 2")
    vals = empirical_samples(h, samples, rng)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))


def empirical_samples(h: np.ndarray, samples: int, rng: np.random.Generator) -> np.ndarray:
    h = check_hermitian(h)
    return np.array([math.exp(log_calF(h, haar_unitary(h.shape[0], rng))) for _ in range(samples)])


def compare_formula(h: np.ndarray, samples: int, rng: np.random.Generator) -> RandomBasisReport:
    rep = expected_calF_formula(h)
    mean, err = empirical_expected_calF(h, samples, rng)
    rep.empirical_mean, rep.empirical_stderr, rep.samples = mean, err, samples
    rep.rel_error = abs(rep.formula_value - mean) / mean
    return rep


def concentration_probe(h: np.ndarray, samples: int, rng: np.random.Generator,
                        quantiles: Sequence[float] = (0.5, 0.9)) -> Dict[float, float]:
    """Quantiles of |calF(U) - mean| / mean over Haar samples."""
    if samples < 30:
        raise ValueError("concentration probe needs at least 30 samples")
    vals = empirical_samples(h, samples, rng)
    dev = np.abs(vals - vals.mean()) / vals.mean()
    return {float(q): float(np.quantile(dev, q)) for q in quantiles}


# ---------------------------------------------------------------- random Pauli tuples

@dataclass
class RandomPauliResult:
    n: int
    m: int
    coeffs: Tuple[float, ...]
    empirical_mean: float
    stderr: float
    formula: float
    accepted: int
    rejected: int
    values: List[float] = field(default_factory=list, repr=False)

    @property
    def rel_error(self) -> float:
        return abs(self.empirical_mean - self.formula) / self.formula


def random_pauli_formula(n: int, coeffs: Sequence[float]) -> float:
    c = np.abs(np.asarray(coeffs, dtype=float))
    return math.exp(c.sum()) + ((1 << n) - 1) * float(np.prod(np.cosh(c)))


def pauli_tuple_calF(n: int, x_supports: Sequence[int], coeffs: Sequence[float]) -> float:
    """tr e^{M(H)} from the eigenvalues sum_j |c_j| (-1)^{z . s_j} (distinct nonzero X-supports)."""
    z = np.arange(1 << n, dtype=np.uint64)
    lam = np.zeros(len(z))
    for s, c in zip(x_supports, coeffs):
        par = np.bitwise_count(z & np.uint64(s)) & 1
        lam += abs(c) * (1.0 - 2.0 * par)
    top = lam.max()
    return float(math.exp(top) * np.sum(np.exp(lam - top)))


def draw_pauli_tuple(n: int, m: int, rng: np.random.Generator, max_tries: int = 10000):
    """m Pauli strings with uniformly drawn nonzero (x, z) words, conditioned on
    distinct nonzero X-supports.  Returns (terms as (x, z) pairs, rejected draws)."""
    if (1 << n) - 1 < m:
        raise ValueError(f"N={n} cannot host {m} distinct X-supports")
    rejected = 0
    for _ in range(max_tries):
        words = rng.integers(1, 1 << (2 * n), size=m)
        xs = [int(w) & ((1 << n) - 1) for w in words]
        if 0 in xs or len(set(xs)) < m:
            rejected += 1
            continue
        return [(int(w) & ((1 << n) - 1), int(w) >> n) for w in words], rejected
    raise RuntimeError(f"rejection sampling did not produce a valid tuple in {max_tries} draws")


def pauli_tuple_hamiltonian(n: int, terms: Sequence[Tuple[int, int]], coeffs: Sequence[float]) -> PauliSum:
    return PauliSum(n, [PauliTerm(float(c), x, z) for (x, z), c in zip(terms, coeffs)])


def random_pauli_experiment(n: int, m: int, coeffs: Sequence[float], trials: int,
                            rng: np.random.Generator) -> RandomPauliResult:
    """Mean of calF(H, 1) over random Pauli tuples without duplicate X-supports."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if len(coeffs) != m:
        raise ValueError("need one coefficient per term")
    vals = []
    rejected = 0
    for _ in range(trials):
        terms, rej = draw_pauli_tuple(n, m, rng)
        rejected += rej
        vals.append(pauli_tuple_calF(n, [x for x, _ in terms], coeffs))
    arr = np.array(vals)
    err = float(arr.std(ddof=1) / math.sqrt(trials)) if trials > 1 else float("inf")
    return RandomPauliResult(n, m, tuple(float(c) for c in coeffs), float(arr.mean()), err,
                             random_pauli_formula(n, coeffs), trials, rejected, vals)


RANDOM_BASIS_COLUMNS = ["N", "dim", "samples", "formula", "empirical", "stderr", "rel_error"]


def random_basis_rows(fixtures: Sequence[Tuple[int, np.ndarray]], samples: int,
                      rng: np.random.Generator) -> List[dict]:
    rows = []
    for n, h in fixtures:
        rep = compare_formula(h, samples, rng)
        rows.append({"N": n, "dim": h.shape[0], "samples": samples, "formula": rep.formula_value,
                     "empirical": rep.empirical_mean, "stderr": rep.empirical_stderr,
                     "rel_error": rep.rel_error})
    return rows
