"""Pauli-string Hamiltonians: parsing, serialization, dense matrices and conjugations.

Basis convention: state index is a binary word with spin 0 as the least significant
bit; bit value 0 is spin up (Z = +1).  A string is stored as an (x_mask, z_mask) pair:
X sets the x bit, Z the z bit, Y both.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Tuple

import numpy as np

DENSE_CAP = 12


class ParseError(ValueError):
    def __init__(self, line: int, msg: str):
        super().__init__(f"line {line}: {msg}")
        self.line = line


class SizeCapError(ValueError):
    """A requested object exceeds a configured size cap."""


def popcount(x: int) -> int:
    return bin(x).count("1")


def parity_array(values: np.ndarray) -> np.ndarray:
    """(-1)^popcount(v) elementwise for a uint64 array."""
    bits = np.bitwise_count(values.astype(np.uint64))
    return 1.0 - 2.0 * (bits & 1)


@dataclass(frozen=True)
class PauliTerm:
    coeff: float
    x_mask: int
    z_mask: int

    def letter(self, site: int) -> str:
        xb = (self.x_mask >> site) & 1
        zb = (self.z_mask >> site) & 1
        return "IXZY"[xb + 2 * zb]

    def letters(self, n: int) -> str:
        return "".join(self.letter(i) for i in range(n))

    @property
    def key(self) -> Tuple[int, int]:
        return (self.x_mask, self.z_mask)

    @property
    def n_y(self) -> int:
        return popcount(self.x_mask & self.z_mask)

    def label(self) -> str:
        parts = []
        mask = self.x_mask | self.z_mask
        site = 0
        while mask >> site:
            if (mask >> site) & 1:
                parts.append(f"{self.letter(site)}{site}")
            site += 1
        return " ".join(parts)


@dataclass
class PauliSum:
    n_spins: int
    terms: List[PauliTerm] = field(default_factory=list)

    def __post_init__(self):
        if self.n_spins < 1:
            raise ValueError("n_spins must be positive")
        full = (1 << self.n_spins) - 1
        merged: Dict[Tuple[int, int], float] = {}
        for t in self.terms:
            if (t.x_mask | t.z_mask) & ~full:
                raise ValueError("site index out of range")
            if not math.isfinite(t.coeff):
                raise ValueError("non-finite coefficient")
            merged[t.key] = merged.get(t.key, 0.0) + float(t.coeff)
        self.terms = [PauliTerm(c, x, z) for (x, z), c in merged.items() if c != 0.0]
        self.terms.sort(key=lambda t: _sort_key(t, self.n_spins))

    def __len__(self):
        return len(self.terms)

    def coeffs(self) -> Dict[Tuple[int, int], float]:
        return {t.key: t.coeff for t in self.terms}

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if other.n_spins != self.n_spins:
            raise ValueError("spin count mismatch")
        return PauliSum(self.n_spins, self.terms + other.terms)

    def scaled(self, s: float) -> "PauliSum":
        return PauliSum(self.n_spins, [PauliTerm(t.coeff * s, t.x_mask, t.z_mask) for t in self.terms])

    def frobenius_norm(self) -> float:
        return math.sqrt((1 << self.n_spins) * sum(t.coeff ** 2 for t in self.terms))


def _sort_key(t: PauliTerm, n: int):
    return t.letters(n)


# ---------------------------------------------------------------- text format

_TOKEN = re.compile(r"^([XYZ])(\d+)$")


def parse_hamiltonian(text: str) -> PauliSum:
    n = None
    terms: List[PauliTerm] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("N="):
            if n is not None:
                raise ParseError(lineno, "duplicate N declaration")
            try:
                n = int(line[2:])
            except ValueError:
                raise ParseError(lineno, f"malformed N declaration {line!r}") from None
            if n < 1:
                raise ParseError(lineno, "N must be positive")
            continue
        if n is None:
            raise ParseError(lineno, "N= declaration must come first")
        tokens = line.split()
        try:
            coeff = float(tokens[0])
        except ValueError:
            raise ParseError(lineno, f"malformed coefficient {tokens[0]!r}") from None
        if not math.isfinite(coeff):
            raise ParseError(lineno, "coefficient must be finite")
        x = z = 0
        for tok in tokens[1:]:
            m = _TOKEN.match(tok)
            if not m:
                raise ParseError(lineno, f"malformed token {tok!r}")
            letter, site = m.group(1), int(m.group(2))
            if site >= n:
                raise ParseError(lineno, f"site index out of range: {site} >= {n}")
            bit = 1 << site
            if (x | z) & bit:
                raise ParseError(lineno, f"site {site} repeated in one term")
            if letter in "XY":
                x |= bit
            if letter in "ZY":
                z |= bit
        terms.append(PauliTerm(coeff, x, z))
    if n is None:
        raise ParseError(0, "missing N= declaration")
    return PauliSum(n, terms)


def serialize_hamiltonian(h: PauliSum) -> str:
    lines = [f"N={h.n_spins}"]
    for t in h.terms:
        label = t.label()
        lines.append(f"{t.coeff!r} {label}".rstrip())
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- dense

def term_action(t: PauliTerm, states: np.ndarray):
    """Return (targets, amplitudes) with P|z> = amp |target>."""
    sign = parity_array(states & t.z_mask)
    amp = (1j) ** t.n_y * sign
    return states ^ t.x_mask, amp


def to_dense(h: PauliSum, cap: int = DENSE_CAP) -> np.ndarray:
    if h.n_spins > cap:
        raise SizeCapError(f"N={h.n_spins} exceeds dense cap {cap}")
    dim = 1 << h.n_spins
    states = np.arange(dim, dtype=np.uint64)
    mat = np.zeros((dim, dim), dtype=complex)
    for t in h.terms:
        tgt, amp = term_action(t, states)
        mat[tgt.astype(np.int64), states.astype(np.int64)] += t.coeff * amp
    # cancellations between strings leave rounding residues; make them exact zeros
    scale = sum(abs(t.coeff) for t in h.terms)
    mat[np.abs(mat) <= 1e-13 * scale] = 0.0
    return mat


def pauli_matrix(n: int, x_mask: int, z_mask: int) -> np.ndarray:
    return to_dense(PauliSum(n, [PauliTerm(1.0, x_mask, z_mask)]), cap=max(n, DENSE_CAP))


# ---------------------------------------------------------------- conjugations

def conjugate_diagonal(h, phases) -> np.ndarray:
    """Phi H Phi^dagger for Phi = diag(exp(i*phases))."""
    mat = to_dense(h) if isinstance(h, PauliSum) else np.asarray(h, dtype=complex)
    phases = np.asarray(phases, dtype=float)
    if phases.shape != (mat.shape[0],):
        raise ValueError(f"expected {mat.shape[0]} phases, got {phases.shape}")
    ph = np.exp(1j * phases)
    return ph[:, None] * mat * ph.conj()[None, :]


def conjugate_xstring(h: PauliSum, mask: int) -> PauliSum:
    """P H P for P the product of X over mask: Y/Z letters under the mask flip sign."""
    if mask >> h.n_spins:
        raise ValueError("mask exceeds N bits")
    out = [PauliTerm(t.coeff * (-1) ** popcount(t.z_mask & mask), t.x_mask, t.z_mask)
           for t in h.terms]
    return PauliSum(h.n_spins, out)


def conjugate_pauli(h: PauliSum, x_mask: int, z_mask: int) -> PauliSum:
    """P H P^dagger for a Pauli string P: anticommuting terms flip sign."""
    out = []
    for t in h.terms:
        anti = popcount(t.x_mask & z_mask) + popcount(t.z_mask & x_mask)
        out.append(PauliTerm(t.coeff * (-1) ** anti, t.x_mask, t.z_mask))
    return PauliSum(h.n_spins, out)


def pauli_from_letters(coeff: float, letters: Iterable[Tuple[str, int]]) -> PauliTerm:
    x = z = 0
    for letter, site in letters:
        bit = 1 << site
        if letter in "XY":
            x |= bit
        if letter in "ZY":
            z |= bit
    return PauliTerm(coeff, x, z)
