"""Structural VGP classifiers that avoid dense spectra.

check_dx_vgp handles Hamiltonians whose permutation masks are GF(2)-independent
(single-site flips being the common case).  Its state graph is a subgraph of a
hypercube whose axes are the masks, so cycles are built from small faces; the
check enumerates local spin configurations around interacting masks and tests
the phase of every chordless cycle of the local face graph.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .diagnostics import VGP_TOL, f_eta, f_eta_scale, gauge_flux_witness
from .models import ModelSpec, build_model, two_local_xx_model
from .numerics import gf2_circuits, gf2_rank
from .pauli import DENSE_CAP, PauliSum, to_dense
from .pmr import PMRForm, ZPolynomial, eval_diagonal, pmr_decompose

PHASE_TOL = 1e-9
METHODS = ("dx_theorem", "two_local_triangle", "parity_appendix_b", "spectral_fallback")


class PreconditionError(ValueError):
    """The structural check does not apply; use the spectral diagnostics instead."""

    def __init__(self, msg: str, circuit: Optional[tuple] = None):
        super().__init__(msg)
        self.circuit = circuit


@dataclass
class VgpVerdict:
    vgp: bool
    method: str
    violations: List[dict] = field(default_factory=list)
    details: Dict[str, object] = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"vgp": self.vgp, "method": self.method, "violations": self.violations}
        out.update(self.details)
        return out


def _bits(mask: int) -> List[int]:
    return [i for i in range(mask.bit_length()) if (mask >> i) & 1]


def _phase_residue(w: complex, q: int) -> float:
    return abs(cmath.phase((-1) ** q * w))


# ---------------------------------------------------------------- local face graphs

def _local_cycles(k: int) -> List[List[int]]:
    """All simple cycles (length >= 4) of the k-cube on vertex labels 0..2^k-1."""
    n = 1 << k
    adj = [[v ^ (1 << b) for b in range(k)] for v in range(n)]
    out = []
    for s in range(n):
        stack = [(s, [s])]
        while stack:
            v, path = stack.pop()
            for w in adj[v]:
                if w == s and len(path) >= 4 and path[1] < path[-1]:
                    out.append(path)
                elif w > s and w not in path:
                    stack.append((w, path + [w]))
    return out


_CUBE_CYCLES = {k: _local_cycles(k) for k in (2, 3)}


def _face_check(p: PMRForm, group: Sequence[int], need_zero_aware: bool) -> List[dict]:
    """Check every chordless cycle of the sub-hypercube spanned by masks in group.

    Spins outside the union support of the group are irrelevant to the edge
    weights, so enumerating the union support covers every placement.
    """
    masks = [p.offdiag[j][0] for j in group]
    polys = [p.offdiag[j][1] for j in group]
    support = 0
    for m, d in zip(masks, polys):
        support |= m | d.support()
    sites = _bits(support)
    k = len(group)
    # base configurations: every assignment of the union support, modulo the group flips
    n_loc = len(sites)
    local = np.arange(1 << n_loc, dtype=np.uint64)
    states = np.zeros(len(local), dtype=np.uint64)
    for b, s in enumerate(sites):
        states |= ((local >> np.uint64(b)) & np.uint64(1)) << np.uint64(s)
    # vertex v of the sub-cube at base z is z ^ (xor of masks selected by v)
    corner = np.zeros(1 << k, dtype=np.uint64)
    for v in range(1 << k):
        for a in range(k):
            if (v >> a) & 1:
                corner[v] ^= np.uint64(masks[a])
    # weight of edge into vertex v along axis a: d_a(state at v)
    w_in = np.empty((k, 1 << k, len(states)), dtype=complex)
    for a in range(k):
        for v in range(1 << k):
            w_in[a, v] = polys[a].values(states ^ corner[v])
    nonzero = w_in != 0
    violations = []
    for cyc in _CUBE_CYCLES[k]:
        q = len(cyc)
        prod = np.ones(len(states), dtype=complex)
        alive = np.ones(len(states), dtype=bool)
        for t in range(q):
            a_v, b_v = cyc[t], cyc[(t + 1) % q]
            axis = (a_v ^ b_v).bit_length() - 1
            prod *= w_in[axis, b_v]
            alive &= nonzero[axis, b_v]
        if q > 4 or k == 3:
            # longer cycles only count where they are chordless in the weighted graph
            if not need_zero_aware:
                continue
            alive &= _chordless(cyc, nonzero)
        if not alive.any():
            continue
        res = np.abs(np.angle((-1) ** q * prod[alive]))
        bad = np.flatnonzero(res > PHASE_TOL)
        if bad.size:
            idx = np.flatnonzero(alive)[bad[np.argmax(res[bad])]]
            z0 = int(states[idx] ^ corner[cyc[0]])
            z1 = int(states[idx] ^ corner[cyc[1]])
            violations.append({
                "sites": sites, "masks": masks, "cycle_length": q,
                "alpha": [(z0 >> s) & 1 for s in sites],
                "alpha_prime": [(z1 >> s) & 1 for s in sites],
                "phase_residue": float(res.max()),
            })
    return violations


def _chordless(cyc: Sequence[int], nonzero: np.ndarray) -> np.ndarray:
    """Per base state: True when no hypercube edge joins two non-consecutive cycle vertices."""
    q = len(cyc)
    ok = np.ones(nonzero.shape[2], dtype=bool)
    for s in range(q):
        for t in range(s + 2, q):
            if s == 0 and t == q - 1:
                continue
            diff = cyc[s] ^ cyc[t]
            if diff & (diff - 1) == 0:
                axis = diff.bit_length() - 1
                ok &= ~nonzero[axis, cyc[t]]
    return ok


def _interacts(p: PMRForm, j: int, k: int) -> bool:
    mj, dj = p.offdiag[j]
    mk, dk = p.offdiag[k]
    return bool((mk & dj.support()) or (mj & dk.support()))


def check_dx_vgp(p: PMRForm, k: Optional[int] = None) -> VgpVerdict:
    """Local face-phase check for independent permutation masks.

    k bounds the number of sites touched by any D_j P_j; None means no bound.
    """
    masks = p.masks
    rank = gf2_rank(masks) if masks else 0
    if rank < len(masks):
        circuits = [c for c in gf2_circuits(masks, rank + 1) if len(set(c)) > 1]
        raise PreconditionError(
            "permutation masks have a nontrivial identity product; use the spectral diagnostics",
            circuits[0] if circuits else None)
    if k is not None:
        for m, d in p.offdiag:
            width = bin(m | d.support()).count("1")
            if width > k:
                raise PreconditionError(f"term on mask {m:b} touches {width} sites > k={k}")
    n_terms = len(masks)
    nbrs = [set() for _ in range(n_terms)]
    by_site: Dict[int, List[int]] = {}
    for j, (m, d) in enumerate(p.offdiag):
        for s in _bits(m | d.support()):
            by_site.setdefault(s, []).append(j)
    for group in by_site.values():
        for a, b in combinations(group, 2):
            if _interacts(p, a, b):
                nbrs[a].add(b)
                nbrs[b].add(a)
    has_zero = any(_has_zero(d, m) for m, d in p.offdiag)
    violations: List[dict] = []
    checked = 0
    for a in range(n_terms):
        for b in sorted(nbrs[a]):
            if b > a:
                violations += _face_check(p, (a, b), False)
                checked += 1
    if has_zero:
        # zero weights can break squares apart; faces of 3-cubes catch the hexagons left behind
        seen = set()
        for b in range(n_terms):
            for a, c in combinations(sorted(nbrs[b]), 2):
                tri = tuple(sorted((a, b, c)))
                if tri not in seen:
                    seen.add(tri)
                    violations += _face_check(p, tri, True)
                    checked += 1
    return VgpVerdict(not violations, "dx_theorem", violations,
                      {"faces_checked": checked, "zero_weights": has_zero})


def _has_zero(d: ZPolynomial, mask: int) -> bool:
    sites = _bits(d.support())
    local = np.arange(1 << len(sites), dtype=np.uint64)
    states = np.zeros(len(local), dtype=np.uint64)
    for b, s in enumerate(sites):
        states |= ((local >> np.uint64(b)) & np.uint64(1)) << np.uint64(s)
    return bool(np.any(d.values(states) == 0))


# ---------------------------------------------------------------- two-local triangle

def check_2local_triangle(edge_params: Sequence[Tuple[int, int, float, float, float, float]],
                          tol: float = PHASE_TOL) -> VgpVerdict:
    """Triangle of X_iX_j terms with D_ij = h0 + i(h1 Z_i + h2 Z_j) + h3 Z_i Z_j."""
    if len(edge_params) != 3:
        raise ValueError("a triangle needs exactly three edges")
    sites = sorted({s for e in edge_params for s in e[:2]})
    if len(sites) != 3 or len({tuple(sorted(e[:2])) for e in edge_params}) != 3:
        raise ValueError("edges do not form a triangle")
    relabel = {s: k for k, s in enumerate(sites)}
    local = [(relabel[i], relabel[j], *map(float, rest)) for i, j, *rest in edge_params]
    live = [e for e in local if any(abs(x) > 0 for x in e[2:])]
    if len(live) < 3:
        h = two_local_xx_model(3, local)
        return check_spectral(h, tol, {"reason": "zero edge, no triangle"})
    if all(not math.isclose(e[3], e[4], rel_tol=0, abs_tol=1e-12) for e in live):
        viol = [{"edges": [[sites[e[0]], sites[e[1]]] for e in live],
                 "reason": "single-Z coefficients differ on every edge", "phase_residue": math.pi}]
        return VgpVerdict(False, "two_local_triangle", viol, {"case": 2})
    p = pmr_decompose(two_local_xx_model(3, local))
    by_mask = {m: d for m, d in p.offdiag}
    order = [(1 << e[0]) | (1 << e[1]) for e in local]
    violations = []
    zero_seen = False
    for z in range(8):
        w = 1 + 0j
        cur = z
        for m in order:
            cur ^= m
            w *= eval_diagonal(by_mask[m], cur)
        if w == 0:
            zero_seen = True
            continue
        res = _phase_residue(w, 3)
        if res > tol:
            violations.append({"sites": sites, "alpha": [(z >> b) & 1 for b in range(3)],
                               "imag": w.imag, "real": w.real, "phase_residue": res})
    details = {"case": 1 if all(math.isclose(e[3], e[4], abs_tol=1e-12) for e in live) else 0}
    if zero_seen:
        # missing triangle edges can leave chordless squares in a parity sector
        from .graph import all_components, build_graph, enumerate_cycles
        for g in all_components(lambda r: build_graph(p, r), 3):
            for c in enumerate_cycles(g, 4):
                if c.q == 4 and abs(c.phase) > tol:
                    violations.append({"sites": sites, "alpha": [(c.start >> b) & 1 for b in range(3)],
                                       "cycle_length": 4, "phase_residue": abs(c.phase)})
    return VgpVerdict(not violations, "two_local_triangle", violations, details)


# ---------------------------------------------------------------- modified Heisenberg

def check_spectral(h: PauliSum, tol: float, details: Optional[dict] = None) -> VgpVerdict:
    dense = to_dense(h)
    fe = f_eta(dense, 1.0)
    vgp = fe <= tol * max(1.0, f_eta_scale(dense, 1.0))
    violations = []
    if not vgp:
        z, nb, res = gauge_flux_witness(pmr_decompose(h))
        violations.append({"edge": [z, nb], "phase_residue": res})
    out = {"f_eta": fe}
    out.update(details or {})
    return VgpVerdict(vgp, "spectral_fallback", violations, out)


def check_tilde_heis(spec: ModelSpec, rng: Optional[np.random.Generator] = None,
                     tol: float = VGP_TOL, cross_check_max_n: int = 8) -> VgpVerdict:
    """Parity verdict for h0 > 0 and single-sign h1; spectral otherwise."""
    if spec.name != "tilde_heis":
        raise ValueError("check_tilde_heis needs a tilde_heis model")
    n, edges = spec.geometry_edges()
    params = dict(spec.params)
    if rng is not None:
        params.setdefault("h0", rng.uniform(0.5, 2.0, size=len(edges)))
        params.setdefault("h1", rng.uniform(0.1, 1.0, size=len(edges)))
    if "h0" not in params or "h1" not in params:
        raise ValueError("h0 and h1 must be given or drawn from an rng")
    h0 = np.broadcast_to(np.asarray(params["h0"], dtype=float), (len(edges),))
    h1 = np.broadcast_to(np.asarray(params["h1"], dtype=float), (len(edges),))
    full = ModelSpec(spec.name, n=spec.n, lattice=spec.lattice, periodic=spec.periodic,
                     edges=spec.edges, params={**params, "h0": h0, "h1": h1})
    h = build_model(full)
    same_sign = bool(np.all(h1 >= 0) or np.all(h1 <= 0))
    if not (np.all(h0 > 0) and same_sign):
        return check_spectral(h, tol, {"reason": "mixed-sign h1 or non-positive h0"})
    details: Dict[str, object] = {}
    if n <= min(cross_check_max_n, DENSE_CAP):
        dense = to_dense(h)
        fe = f_eta(dense, 1.0)
        details["f_eta"] = fe
        details["cross_check_agrees"] = bool(fe <= tol * max(1.0, f_eta_scale(dense, 1.0)))
    return VgpVerdict(True, "parity_appendix_b", [], details)
