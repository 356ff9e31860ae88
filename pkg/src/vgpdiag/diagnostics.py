"""Sign-problem functionals and the VGP verdict."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .graph import FundamentalCycle, all_components, build_graph, default_Q, enumerate_cycles
from .numerics import block_eigh, block_eigvals, check_hermitian, log_trace_exp, log_trace_exp_from_eigvals
from .pauli import PauliSum, to_dense
from .pmr import PMRForm, pmr_decompose

VGP_TOL = 1e-9


def off_diagonal(h: np.ndarray) -> np.ndarray:
    out = np.array(h, dtype=complex)
    np.fill_diagonal(out, 0.0)
    return out


def f_stoq(h: np.ndarray) -> float:
    """Frobenius distance between |H_off| and -H_off."""
    a = off_diagonal(check_hermitian(h))
    return float(np.linalg.norm(np.abs(a) + a))


def f_vgp(cycles: Sequence[FundamentalCycle]) -> float:
    """sum |D| (1 - cos theta), theta = arg((-1)^q D), over cycles with q >= 3."""
    return float(sum(c.violation for c in cycles if c.q >= 3))


def f_eta(h: np.ndarray, eta: float) -> float:
    """tr e^{eta |H_off|} - tr e^{-eta H_off}."""
    if eta < 0:
        raise ValueError("eta must be >= 0")
    a = off_diagonal(check_hermitian(h))
    ev_abs = block_eigvals(np.abs(a))
    ev_neg = block_eigvals(-a)
    # pair sorted spectra so identical spectra cancel term by term
    return float(np.sum(np.exp(eta * ev_neg) * np.expm1(eta * (ev_abs - ev_neg))))


def f_eta_scale(h: np.ndarray, eta: float) -> float:
    """tr e^{eta |H_off|}, the size of the rounding floor of f_eta."""
    return math.exp(log_trace_exp(np.abs(off_diagonal(h)), eta))


def spectral_vgp(h: np.ndarray, eta: float = 1.0, tol: float = VGP_TOL) -> bool:
    """VGP verdict from f_eta, tolerance taken relative to tr e^{eta |H_off|}."""
    return f_eta(h, eta) <= tol * max(1.0, f_eta_scale(h, eta))


def m_map(h: np.ndarray) -> np.ndarray:
    """M(X) = |X_off| - diag(X)."""
    h = check_hermitian(h)
    out = np.abs(off_diagonal(h))
    np.fill_diagonal(out, -np.real(np.diag(h)))
    return out


def log_calF(h: np.ndarray, u: Optional[np.ndarray] = None) -> float:
    h = np.asarray(h, dtype=complex)
    if u is not None:
        u = np.asarray(u)
        err = np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0]))
        if err > 1e-10 * max(1.0, math.sqrt(u.shape[0])):
            raise ValueError(f"U is not unitary (deviation {err:.2e})")
        h = u @ h @ u.conj().T
        h = 0.5 * (h + h.conj().T)
    return log_trace_exp(m_map(h), 1.0)


def calF(h: np.ndarray, u: Optional[np.ndarray] = None) -> float:
    """tr e^{M(U H U^dagger)}."""
    return math.exp(log_calF(h, u))


def exact_avg_sign(h: np.ndarray, beta: float) -> float:
    """tr e^{-beta H} / tr e^{beta M(H)}."""
    if beta <= 0:
        raise ValueError("beta must be > 0")
    h = check_hermitian(h)
    num = log_trace_exp(h, -beta)
    den = log_trace_exp(m_map(h), beta)
    return math.exp(num - den)


class SpectralCache:
    """Eigenvalues of H and M(H) kept for repeated beta evaluations."""

    def __init__(self, h: np.ndarray):
        h = check_hermitian(h)
        self.ev_h = block_eigvals(h)
        self.ev_m = block_eigvals(m_map(h))

    def avg_sign(self, beta: float) -> float:
        return math.exp(log_trace_exp_from_eigvals(self.ev_h, -beta)
                        - log_trace_exp_from_eigvals(self.ev_m, beta))


def exact_mean_order(h: np.ndarray, beta: float) -> float:
    """Mean expansion order under |W|: beta <|H_off|> in the ensemble of diag(H) - |H_off|."""
    h = check_hermitian(h)
    absoff = np.abs(off_diagonal(h))
    hb = np.diag(np.real(np.diag(h))) - absoff
    blocks = block_eigh(hb)
    e0 = min(float(w.min()) for _, w, _ in blocks)
    num = den = 0.0
    for idx, w, v in blocks:
        boltz = np.exp(-beta * (w - e0))
        expect = np.einsum("ik,ij,jk->k", v, absoff[np.ix_(idx, idx)], v)
        num += float(np.sum(boltz * expect))
        den += float(np.sum(boltz))
    return beta * num / den


# ---------------------------------------------------------------- sparse VGP check

def gauge_flux_residual(p: PMRForm) -> float:
    """Largest phase residual of -H_off after a spanning-tree diagonal gauge.

    Zero (to rounding) exactly when every closed walk satisfies the VGP condition;
    runs on the full state space without dense matrices.
    """
    return gauge_flux_witness(p)[2]


def gauge_flux_witness(p: PMRForm):
    """(z, z', residual) for the edge with the largest gauge residual."""
    n = p.n_spins
    dim = 1 << n
    if not p.offdiag:
        return 0, 0, 0.0
    wt = p.weight_table()
    masks = np.array(p.masks, dtype=np.int64)
    states = np.arange(dim, dtype=np.int64)
    phi = np.full(dim, np.nan)
    for root in range(dim):
        if not np.isnan(phi[root]):
            continue
        phi[root] = 0.0
        frontier = np.array([root], dtype=np.int64)
        while frontier.size:
            nxt_states, nxt_phase = [], []
            for j, m in enumerate(masks):
                tgt = frontier ^ m
                w = wt[j, tgt]
                ok = (w != 0) & np.isnan(phi[tgt])
                if ok.any():
                    nxt_states.append(tgt[ok])
                    nxt_phase.append(phi[frontier[ok]] - np.angle(-w[ok]))
            if not nxt_states:
                break
            cand = np.concatenate(nxt_states)
            ph = np.concatenate(nxt_phase)
            uniq, first = np.unique(cand, return_index=True)
            phi[uniq] = ph[first]
            frontier = uniq
    worst = (0, 0, 0.0)
    for j, m in enumerate(masks):
        tgt = states ^ m
        w = wt[j, tgt]
        nz = np.flatnonzero(w != 0)
        if nz.size:
            r = np.abs(np.angle(-w[nz] * np.exp(1j * (phi[tgt[nz]] - phi[nz]))))
            k = int(np.argmax(r))
            if r[k] > worst[2]:
                worst = (int(nz[k]), int(tgt[nz[k]]), float(r[k]))
    return worst


def weighted_flux_residual(p: PMRForm) -> float:
    """sum over edges of |w| (1 - cos r) after a maximum-weight spanning-forest gauge.

    The gauge follows the heaviest edges, so an edge's residual only involves
    edges at least as heavy; nearly vanishing edges cannot spoil the large ones.
    Zero exactly for VGP forms, and on the scale of f_eta otherwise.
    """
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import breadth_first_order, minimum_spanning_tree

    dim = 1 << p.n_spins
    if not p.offdiag:
        return 0.0
    wt = p.weight_table()
    states = np.arange(dim, dtype=np.int64)
    rows, cols, vals = [], [], []
    for j, m in enumerate(p.masks):
        tgt = states ^ m
        keep = (states < tgt) & (wt[j, tgt] != 0)
        rows.append(states[keep])
        cols.append(tgt[keep])
        vals.append(wt[j, tgt[keep]])
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    w = np.concatenate(vals)
    # edge a -> b carries <b|H|a> = w; MST on 1/|w| is the maximum-|w| forest
    tree = minimum_spanning_tree(coo_matrix((1.0 / np.abs(w), (r, c)), shape=(dim, dim)).tocsr())
    tree = tree + tree.T
    phase_of = {}
    for a, b, val in zip(r, c, w):
        phase_of[(int(a), int(b))] = float(np.angle(-val))
    phi = np.full(dim, np.nan)
    for root in range(dim):
        if not np.isnan(phi[root]):
            continue
        order, pred = breadth_first_order(tree, root, directed=False)
        phi[root] = 0.0
        for v in order[1:]:
            u = int(pred[v])
            v = int(v)
            # gauge so that -w e^{i(phi_b - phi_a)} is real positive on tree edges
            if (u, v) in phase_of:
                phi[v] = phi[u] - phase_of[(u, v)]
            else:
                phi[v] = phi[u] + phase_of[(v, u)]
    res = np.angle(-w * np.exp(1j * (phi[c] - phi[r])))
    return float(np.sum(np.abs(w) * (1 - np.cos(res))))


# ---------------------------------------------------------------- report

@dataclass
class DiagnosticReport:
    f_stoq: float
    f_vgp: float
    f_eta: float
    eta: float
    calF: float
    avg_sign: float
    vgp: bool
    witness: Optional[FundamentalCycle] = None
    cycles_checked: int = 0

    def to_dict(self) -> dict:
        return {"f_stoq": self.f_stoq, "f_vgp": self.f_vgp, "f_eta": self.f_eta, "eta": self.eta,
                "calF": self.calF, "avg_sign": self.avg_sign, "vgp": self.vgp,
                "witness": self.witness.to_dict() if self.witness else None}


def all_cycles(p: PMRForm, Q: int) -> List[FundamentalCycle]:
    cycles: List[FundamentalCycle] = []
    for g in all_components(lambda r: build_graph(p, r), p.n_spins):
        cycles += enumerate_cycles(g, Q)
    return cycles


def diagnose(h: PauliSum, eta: float = 1.0, Q: Optional[int] = None, tol: float = VGP_TOL) -> DiagnosticReport:
    """All functionals for one Hamiltonian; the verdict uses f_eta, the witness the cycles."""
    Q = default_Q(h.n_spins) if Q is None else Q
    dense = to_dense(h)
    p = pmr_decompose(h)
    cycles = all_cycles(p, Q)
    fv = f_vgp(cycles)
    fe = f_eta(dense, eta) if eta > 0 else 0.0
    vgp = fe <= tol * max(1.0, f_eta_scale(dense, eta))
    witness = None
    bad = [c for c in cycles if c.q >= 3 and c.violation > tol]
    if bad:
        witness = max(bad, key=lambda c: (c.violation, -c.q))
    return DiagnosticReport(
        f_stoq=f_stoq(dense), f_vgp=fv, f_eta=fe, eta=eta,
        calF=calF(dense), avg_sign=exact_avg_sign(dense, 1.0), vgp=vgp,
        witness=witness, cycles_checked=len(cycles))
