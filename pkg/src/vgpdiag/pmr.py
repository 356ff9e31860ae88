"""Permutation matrix representation H = D_0 + sum_j D_j P_j.

P_j flips the spins in x_mask_j; D_j is a polynomial in Z operators with complex
coefficients.  A Y letter is written as (-i Z) X at its site, so a Pauli string with
masks (x, z) and n_y Y letters contributes coeff * (-i)^n_y at z-mask z of D for x.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from .pauli import DENSE_CAP, PauliSum, PauliTerm, SizeCapError, parity_array, popcount


# evaluations smaller than this fraction of sum |h_S| are cancellations, set to 0
SNAP = 1e-13


@dataclass
class ZPolynomial:
    terms: Dict[int, complex] = field(default_factory=dict)

    def scale(self) -> float:
        return sum(abs(c) for c in self.terms.values())

    def add(self, mask: int, coeff: complex):
        self.terms[mask] = self.terms.get(mask, 0j) + coeff

    def cleaned(self) -> "ZPolynomial":
        return ZPolynomial({m: c for m, c in self.terms.items() if c != 0})

    def support(self) -> int:
        s = 0
        for m in self.terms:
            s |= m
        return s

    def values(self, states: np.ndarray) -> np.ndarray:
        out = np.zeros(len(states), dtype=complex)
        for m, c in self.terms.items():
            out += c * parity_array(states & m)
        out[np.abs(out) <= SNAP * self.scale()] = 0.0
        return out

    def __call__(self, z: int) -> complex:
        return eval_diagonal(self, z)


def eval_diagonal(d: ZPolynomial, z: int) -> complex:
    """sum_S h_S prod_{l in S} alpha_l with alpha_l = +1 for bit 0, -1 for bit 1."""
    total = 0j
    scale = 0.0
    for m, c in d.terms.items():
        total += -c if popcount(z & m) & 1 else c
        scale += abs(c)
    return 0j if abs(total) <= SNAP * scale else total


@dataclass
class PMRForm:
    n_spins: int
    d0: ZPolynomial
    offdiag: List[Tuple[int, ZPolynomial]]
    _tables: Dict[str, np.ndarray] = field(default_factory=dict, repr=False, compare=False)

    @property
    def masks(self) -> List[int]:
        return [m for m, _ in self.offdiag]

    def diag_table(self) -> np.ndarray:
        """Real diagonal energies E_z for every state (cached)."""
        if "d0" not in self._tables:
            self._check_cap()
            states = np.arange(1 << self.n_spins, dtype=np.uint64)
            self._tables["d0"] = self.d0.values(states).real
        return self._tables["d0"]

    def weight_table(self) -> np.ndarray:
        """Array (M, 2^N): entry [j, z'] = d_j(z'), the weight of the edge into z'."""
        if "w" not in self._tables:
            self._check_cap()
            states = np.arange(1 << self.n_spins, dtype=np.uint64)
            rows = [d.values(states) for _, d in self.offdiag]
            self._tables["w"] = np.array(rows).reshape(len(rows), 1 << self.n_spins)
        return self._tables["w"]

    def _check_cap(self, cap: int = 20):
        if self.n_spins > cap:
            raise SizeCapError(f"N={self.n_spins} too large for state tables")

    def to_json(self) -> str:
        return json.dumps(pmr_to_dict(self))


def pmr_decompose(h: PauliSum) -> PMRForm:
    d0 = ZPolynomial()
    groups: Dict[int, ZPolynomial] = {}
    for t in h.terms:
        coeff = t.coeff * (-1j) ** t.n_y
        if t.x_mask == 0:
            d0.add(t.z_mask, coeff)
        else:
            groups.setdefault(t.x_mask, ZPolynomial()).add(t.z_mask, coeff)
    off = [(m, groups[m].cleaned()) for m in sorted(groups)]
    off = [(m, d) for m, d in off if d.terms]
    return PMRForm(h.n_spins, d0.cleaned(), off)


def edge_weight(p: PMRForm, j: int, z: int) -> Tuple[int, complex]:
    """(z', <z'|D_j P_j|z>) with z' = z XOR x_mask_j."""
    mask, d = p.offdiag[j]
    zp = z ^ mask
    return zp, eval_diagonal(d, zp)


def pmr_to_dense(p: PMRForm, cap: int = DENSE_CAP) -> np.ndarray:
    if p.n_spins > cap:
        raise SizeCapError(f"N={p.n_spins} exceeds dense cap {cap}")
    dim = 1 << p.n_spins
    states = np.arange(dim, dtype=np.uint64)
    mat = np.zeros((dim, dim), dtype=complex)
    idx = states.astype(np.int64)
    mat[idx, idx] = p.d0.values(states)
    for mask, d in p.offdiag:
        tgt = (states ^ np.uint64(mask)).astype(np.int64)
        mat[tgt, idx] += d.values(tgt.astype(np.uint64))
    return mat


def pmr_to_paulisum(p: PMRForm, tol: float = 1e-12) -> PauliSum:
    """Inverse of pmr_decompose for Hermitian forms (imaginary residues must vanish)."""
    terms = []
    for mask, d in [(0, p.d0)] + list(p.offdiag):
        for zm, c in d.terms.items():
            coeff = c * (1j) ** popcount(zm & mask)
            if abs(coeff.imag) > tol * max(1.0, abs(coeff)):
                raise ValueError(f"form is not Hermitian at x={mask:b} z={zm:b}: {coeff}")
            if coeff.real != 0.0:
                terms.append(PauliTerm(coeff.real, mask, zm))
    return PauliSum(p.n_spins, terms)


def _poly_list(d: ZPolynomial):
    return [[int(m), float(c.real), float(c.imag)] for m, c in sorted(d.terms.items())]


def pmr_to_dict(p: PMRForm) -> dict:
    return {"n": p.n_spins, "d0": _poly_list(p.d0),
            "off": [{"p_mask": int(m), "d": _poly_list(d)} for m, d in p.offdiag]}
