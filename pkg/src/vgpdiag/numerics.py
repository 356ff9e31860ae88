"""Numeric kernel: Hermitian spectra, traces of exponentials, GF(2) circuits, I_1, RNG."""
from __future__ import annotations

import math
from typing import List, Sequence

import numpy as np

HERMITIAN_TOL = 1e-9


class NotHermitianError(ValueError):
    pass


def check_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise NotHermitianError(f"expected a square matrix, got shape {a.shape}")
    asym = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
    scale = max(1.0, float(np.max(np.abs(a))))
    if asym > tol * scale:
        raise NotHermitianError(f"matrix is not Hermitian: max asymmetry {asym:.3e}")
    return a


def _real_if_possible(a: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(a) and not np.any(a.imag):
        return a.real
    return a


def hermitian_eigvals(a: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of a Hermitian matrix (LAPACK)."""
    a = _real_if_possible(check_hermitian(a))
    return np.linalg.eigvalsh(a)


def hermitian_eigh(a: np.ndarray):
    a = _real_if_possible(check_hermitian(a))
    return np.linalg.eigh(a)


def jacobi_eigh(a: np.ndarray, tol: float = 1e-14, max_sweeps: int = 100):
    """Cyclic complex Jacobi eigensolver; slow, used as an independent cross-check."""
    a = np.array(check_hermitian(a), dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    norm = np.linalg.norm(a)
    for _ in range(max_sweeps):
        off = np.sqrt(max(np.sum(np.abs(a) ** 2) - np.sum(np.abs(np.diag(a)) ** 2), 0.0))
        if off <= tol * max(norm, 1e-300):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < 1e-300:
                    continue
                # remove the phase so the 2x2 block is real symmetric
                phase = apq / abs(apq)
                app, aqq = a[p, p].real, a[q, q].real
                theta = 0.5 * math.atan2(2.0 * abs(apq), aqq - app)
                c, s = math.cos(theta), math.sin(theta)
                rot = np.eye(n, dtype=complex)
                rot[p, p] = c
                rot[q, q] = c
                rot[p, q] = s * phase
                rot[q, p] = -s * np.conj(phase)
                # columns p,q only
                cols = a[:, [p, q]] @ rot[np.ix_([p, q], [p, q])]
                a[:, [p, q]] = cols
                rows = rot[np.ix_([p, q], [p, q])].conj().T @ a[[p, q], :]
                a[[p, q], :] = rows
                v[:, [p, q]] = v[:, [p, q]] @ rot[np.ix_([p, q], [p, q])]
    w = np.diag(a).real
    order = np.argsort(w)
    return w[order], v[:, order]


def block_eigvals(a: np.ndarray) -> np.ndarray:
    """Eigenvalues computed block by block over the connected components of the sparsity pattern."""
    from scipy.sparse.csgraph import connected_components

    a = _real_if_possible(check_hermitian(a))
    n = a.shape[0]
    if n <= 64:
        return np.linalg.eigvalsh(a)
    ncomp, labels = connected_components(a != 0, directed=False)
    if ncomp == 1:
        return np.linalg.eigvalsh(a)
    out = []
    for c in range(ncomp):
        idx = np.flatnonzero(labels == c)
        out.append(np.linalg.eigvalsh(a[np.ix_(idx, idx)]))
    return np.sort(np.concatenate(out))


def block_eigh(a: np.ndarray):
    """[(indices, eigenvalues, eigenvectors)] per connected component of the sparsity pattern."""
    from scipy.sparse.csgraph import connected_components

    a = _real_if_possible(check_hermitian(a))
    ncomp, labels = connected_components(a != 0, directed=False)
    out = []
    for c in range(ncomp):
        idx = np.flatnonzero(labels == c)
        w, v = np.linalg.eigh(a[np.ix_(idx, idx)])
        out.append((idx, w, v))
    return out


def log_trace_exp_from_eigvals(eigs: np.ndarray, scale: float) -> float:
    x = scale * np.asarray(eigs, dtype=float)
    top = float(np.max(x))
    return top + math.log(float(np.sum(np.exp(x - top))))


def log_trace_exp(a: np.ndarray, scale: float) -> float:
    """log tr e^{scale*A}, stable against overflow."""
    return log_trace_exp_from_eigvals(block_eigvals(a), scale)


def trace_exp(a: np.ndarray, scale: float) -> float:
    """tr e^{scale*A}; returns inf when the value overflows (use log_trace_exp)."""
    lv = log_trace_exp(a, scale)
    return math.exp(lv) if lv < 709.0 else math.inf


# ---------------------------------------------------------------- GF(2)

def _reduce(vec: int, basis: dict) -> int:
    while vec:
        top = vec.bit_length() - 1
        piv = basis.get(top)
        if piv is None:
            return vec
        vec ^= piv
    return 0


def gf2_rank(masks: Sequence[int]) -> int:
    basis: dict = {}
    for m in masks:
        r = _reduce(m, basis)
        if r:
            basis[r.bit_length() - 1] = r
    return len(basis)


def gf2_circuits(masks: Sequence[int], max_size: int, cap: int = 1_000_000) -> List[tuple]:
    """Circuits (minimal XOR-zero index sets) of size <= max_size, plus every (j, j) pair.

    Indices are 0-based. A circuit is an independent set I plus one later element
    equal to XOR(I); independence is tracked with an incremental echelon basis, and
    dependent prefixes are pruned since no circuit contains a dependent subset.
    """
    masks = [int(m) for m in masks]
    if any(m == 0 for m in masks):
        raise ValueError("masks must be nonzero")
    if max_size < 2:
        raise ValueError("max_size must be >= 2")
    m = len(masks)
    found: List[tuple] = []

    def dfs(start: int, chosen: list, acc: int, basis: dict):
        if len(found) > cap:
            raise RuntimeError(f"circuit count exceeds cap {cap}")
        if len(chosen) >= 1 and len(chosen) + 1 <= max_size:
            for e in range(chosen[-1] + 1, m):
                if masks[e] == acc:
                    found.append(tuple(chosen) + (e,))
        if len(chosen) + 2 > max_size:
            return
        for e in range(start, m):
            r = _reduce(masks[e], basis)
            if not r:
                continue
            nb = dict(basis)
            nb[r.bit_length() - 1] = r
            chosen.append(e)
            dfs(e + 1, chosen, acc ^ masks[e], nb)
            chosen.pop()

    dfs(0, [], 0, {})
    found.sort(key=lambda c: (len(c), c))
    return [(j, j) for j in range(m)] + found


# ---------------------------------------------------------------- Bessel I_1

def _i1_series(x: float) -> float:
    half = 0.5 * x
    term = half
    total = term
    k = 0
    while True:
        k += 1
        term *= half * half / (k * (k + 1))
        total += term
        if term < 1e-17 * total:
            return total


def _i1_asymptotic_sum(x: float) -> float:
    # sum_k (-1)^k prod_{j<=k}(4 - (2j-1)^2) / (k! (8x)^k)
    total, term = 1.0, 1.0
    for k in range(1, 30):
        term *= (4.0 - (2 * k - 1) ** 2) / (k * 8.0 * x)
        total += term * (-1) ** k
        if abs(term) < 1e-17:
            break
    return total


def _i1_asymptotic(x: float) -> float:
    return math.exp(x) / math.sqrt(2.0 * math.pi * x) * _i1_asymptotic_sum(x)


def bessel_i1(x: float) -> float:
    """Modified Bessel function I_1 for x >= 0."""
    x = float(x)
    if not math.isfinite(x) or x < 0:
        raise ValueError("bessel_i1 needs a finite x >= 0")
    if x == 0.0:
        return 0.0
    if x <= 60.0:
        return _i1_series(x)
    return _i1_asymptotic(x)


def log_bessel_i1(x: float) -> float:
    if x > 60.0:
        return x - 0.5 * math.log(2.0 * math.pi * x) + math.log(_i1_asymptotic_sum(x))
    return math.log(bessel_i1(x))


# ---------------------------------------------------------------- RNG

def seeded_rng(seed: int) -> np.random.Generator:
    """PCG64 stream; bit-identical across platforms for a given seed."""
    return np.random.Generator(np.random.PCG64(int(seed) & ((1 << 64) - 1)))
