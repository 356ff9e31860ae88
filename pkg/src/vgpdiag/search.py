"""Unit-cell search for VGP two-local Hamiltonians and periodic tiling checks.

The unit cell is a 2x2 block of sites (index y*2 + x) carrying X_iX_j bonds with
D_ij = h0 + i h1 (Z_i + Z_j) + h2 Z_i Z_j.  Tiling repeats each bond class over a
(2nx) x (2ny) periodic lattice; horizontal bonds take their class from the row
parity, vertical ones from the column parity, so inter-cell bonds reuse the
unit-cell parameters.  An optional diagonal bond frustrates the square plaquette.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .diagnostics import VGP_TOL, f_eta, weighted_flux_residual
from .pauli import DENSE_CAP, PauliSum, SizeCapError, to_dense
from .pmr import PMRForm, ZPolynomial, pmr_to_paulisum

UNIT_EDGES = [(0, 1), (2, 3), (0, 2), (1, 3)]
DIAGONAL_EDGE = (0, 3)
DEGENERATE_NORM = 1e-6
# walk-phase residual norm accepted as exact VGP
EXACT_RESIDUAL = 1e-10


@dataclass
class UnitCellParams:
    edges: List[Tuple[int, int, float, float, float]]
    rz_angles: np.ndarray = field(default_factory=lambda: np.zeros(4))

    def __post_init__(self):
        self.rz_angles = np.asarray(self.rz_angles, dtype=float)
        if self.rz_angles.shape != (4,):
            raise ValueError("need one rotation angle per unit-cell site")
        allowed = set(UNIT_EDGES) | {DIAGONAL_EDGE}
        for e in self.edges:
            if (e[0], e[1]) not in allowed:
                raise ValueError(f"edge {e[:2]} is not a unit-cell bond")
            if not all(math.isfinite(x) for x in e[2:]):
                raise ValueError("parameters must be finite")

    @property
    def vector(self) -> np.ndarray:
        return np.array([x for e in self.edges for x in e[2:]], dtype=float)

    @classmethod
    def from_vector(cls, vec, diagonal: bool = False, rz_angles=None) -> "UnitCellParams":
        bonds = UNIT_EDGES + ([DIAGONAL_EDGE] if diagonal else [])
        vec = np.asarray(vec, dtype=float).reshape(len(bonds), 3)
        edges = [(i, j, *map(float, row)) for (i, j), row in zip(bonds, vec)]
        return cls(edges, np.zeros(4) if rz_angles is None else rz_angles)

    @property
    def diagonal(self) -> bool:
        return any((e[0], e[1]) == DIAGONAL_EDGE for e in self.edges)

    def is_degenerate(self) -> bool:
        """All bonds carry (numerically) vanishing off-diagonal weight."""
        return all(math.sqrt(h0 ** 2 + 2 * h1 ** 2 + h2 ** 2) < DEGENERATE_NORM
                   for _, _, h0, h1, h2 in self.edges)

    def to_dict(self) -> dict:
        return {"edges": [list(e) for e in self.edges], "rz_angles": self.rz_angles.tolist()}


def _bond_poly(a: int, b: int, h0: float, h1: float, h2: float, alpha_a: float, alpha_b: float) -> ZPolynomial:
    """(h0 + i h1 (Z_a + Z_b) + h2 Z_a Z_b) * e^{-i alpha_a Z_a} e^{-i alpha_b Z_b}."""
    ma, mb = 1 << a, 1 << b
    base = {0: complex(h0), ma: 1j * h1, mb: 1j * h1, ma | mb: complex(h2)}
    rot = {0: math.cos(alpha_a) * math.cos(alpha_b) + 0j,
           ma: -1j * math.sin(alpha_a) * math.cos(alpha_b),
           mb: -1j * math.cos(alpha_a) * math.sin(alpha_b),
           ma | mb: -math.sin(alpha_a) * math.sin(alpha_b) + 0j}
    out: Dict[int, complex] = {}
    for m1, c1 in base.items():
        for m2, c2 in rot.items():
            out[m1 ^ m2] = out.get(m1 ^ m2, 0j) + c1 * c2
    return ZPolynomial({m: c for m, c in out.items() if abs(c) > 1e-15 * (abs(h0) + abs(h1) + abs(h2))})


def lattice_bonds(nx: int, ny: int, diagonal: bool = False) -> List[Tuple[int, int, Tuple[int, int]]]:
    """(site_a, site_b, unit-cell class) for a (2nx) x (2ny) periodic lattice."""
    if nx < 1 or ny < 1:
        raise ValueError("nx and ny must be >= 1")
    w, h = 2 * nx, 2 * ny
    bonds = []
    for y in range(h):
        for x in range(w):
            i = y * w + x
            if x + 1 < w or w > 2:
                bonds.append((i, y * w + (x + 1) % w, UNIT_EDGES[y % 2]))
            if y + 1 < h or h > 2:
                bonds.append((i, ((y + 1) % h) * w + x, UNIT_EDGES[2 + x % 2]))
            if diagonal and x % 2 == 0 and y % 2 == 0:
                bonds.append((i, (y + 1) * w + x + 1, DIAGONAL_EDGE))
    return bonds


def tile_pmr(params: UnitCellParams, nx: int, ny: int) -> PMRForm:
    w = 2 * nx
    n = 4 * nx * ny
    by_class = {(e[0], e[1]): e[2:] for e in params.edges}
    groups: Dict[int, ZPolynomial] = {}
    for a, b, cls in lattice_bonds(nx, ny, params.diagonal):
        if cls not in by_class:
            continue
        h0, h1, h2 = by_class[cls]
        sub_a = (a // w % 2) * 2 + a % w % 2
        sub_b = (b // w % 2) * 2 + b % w % 2
        poly = _bond_poly(a, b, h0, h1, h2, params.rz_angles[sub_a], params.rz_angles[sub_b])
        mask = (1 << a) | (1 << b)
        acc = groups.setdefault(mask, ZPolynomial())
        for m, c in poly.terms.items():
            acc.add(m, c)
    off = [(m, groups[m].cleaned()) for m in sorted(groups)]
    return PMRForm(n, ZPolynomial(), [(m, d) for m, d in off if d.terms])


def tile_periodic(params: UnitCellParams, nx: int, ny: int, cap: int = 20) -> PauliSum:
    """Translate every unit-cell bond over the periodic lattice."""
    if 4 * nx * ny > cap:
        raise SizeCapError(f"{4 * nx * ny} spins exceed the tiling cap {cap}")
    return pmr_to_paulisum(tile_pmr(params, nx, ny), tol=1e-10)


def unit_hamiltonian(params: UnitCellParams) -> PauliSum:
    return tile_periodic(params, 1, 1)


def unit_f_eta(params: UnitCellParams, eta: float = 1.0) -> float:
    return f_eta(to_dense(unit_hamiltonian(params)), eta)


def apply_rz_rotation(params: UnitCellParams, rng: Optional[np.random.Generator] = None,
                      angles: Optional[Sequence[float]] = None) -> UnitCellParams:
    """Conjugate by prod_i R_Z(alpha_i), one angle per sublattice site."""
    if angles is None:
        if rng is None:
            raise ValueError("need an rng or explicit angles")
        angles = rng.uniform(0, 2 * math.pi, size=4)
    return replace(params, rz_angles=np.asarray(params.rz_angles) + np.asarray(angles, dtype=float))


# ---------------------------------------------------------------- optimisation

@dataclass
class OptimizeResult:
    params: UnitCellParams
    f_eta: float
    converged: bool
    degenerate: bool
    restarts: int


def _objective(vec: np.ndarray, diagonal: bool) -> float:
    norm = np.linalg.norm(vec)
    if norm < 1e-12:
        return 1e6
    return unit_f_eta(UnitCellParams.from_vector(vec / norm, diagonal))


def _walk_orders(masks: Sequence[int]) -> List[Tuple[int, ...]]:
    """Every ordering of every circuit (length >= 3) of the unit-cell bond masks."""
    from itertools import permutations
    from .numerics import gf2_circuits
    out = []
    for c in gf2_circuits(masks, len(masks)):
        if len(set(c)) > 2 or len(c) > 2:
            out += list(permutations(c))
    return out


def _phase_residuals(vec: np.ndarray, diagonal: bool) -> np.ndarray:
    """sqrt(2|W|) sin(theta/2) for every closed walk through a circuit of bonds, plus a norm pin."""
    params = UnitCellParams.from_vector(vec, diagonal)
    p = tile_pmr(params, 1, 1)
    all_masks = [(1 << i) | (1 << j) for i, j, *_ in params.edges]
    pos = {m: k for k, (m, _) in enumerate(p.offdiag)}
    wt = p.weight_table()
    states = np.arange(16)
    out = []
    for order in _walk_orders(all_masks):
        if any(all_masks[k] not in pos for k in order):
            continue
        cur = states.copy()
        prod = np.ones(16, dtype=complex)
        for k in order:
            cur = cur ^ all_masks[k]
            prod *= wt[pos[all_masks[k]], cur]
        theta = np.angle((-1) ** len(order) * prod)
        # signed and smooth near theta = 0, unlike sqrt(1 - cos theta)
        out.append(np.sqrt(2 * np.abs(prod)) * np.sin(theta / 2))
    out.append([np.linalg.norm(vec) - 1.0])
    return np.concatenate(out)


def polish_unit_cell(vec: np.ndarray, diagonal: bool) -> np.ndarray:
    """Levenberg-Marquardt on the closed-walk phase residuals, started near a solution."""
    from scipy.optimize import least_squares
    res = least_squares(_phase_residuals, vec, args=(diagonal,), method="lm", xtol=1e-15, ftol=1e-15,
                        gtol=1e-15, max_nfev=2000)
    return res.x / np.linalg.norm(res.x)


def walk_residual(vec: np.ndarray, diagonal: bool = False) -> float:
    """Norm of the closed-walk phase residuals; zero exactly for VGP cells."""
    return float(np.linalg.norm(_phase_residuals(np.asarray(vec) / np.linalg.norm(vec), diagonal)))


def optimize_unit_cell(init: UnitCellParams, tol: float = VGP_TOL, max_iters: int = 20,
                       rng: Optional[np.random.Generator] = None, maxfev: int = 4000,
                       polish: bool = True) -> OptimizeResult:
    """Nelder-Mead on the unit-norm parameter vector, restarting from random points.

    With polish on, a point under tol is refined by least squares on the walk
    phases and only accepted once those residuals reach the rounding floor:
    near-misses that hide a phase behind a tiny weight pass tol on the cell but
    grow with the dimension of larger tilings.
    """
    from scipy.optimize import minimize

    diagonal = init.diagonal
    vec0 = init.vector
    if np.linalg.norm(vec0) < DEGENERATE_NORM:
        return OptimizeResult(init, unit_f_eta(init), True, True, 0)
    start = vec0 / np.linalg.norm(vec0)
    best = None
    attempts = 0
    for attempt in range(max(1, max_iters)):
        if attempt:
            if rng is None:
                break
            start = rng.uniform(-1, 1, size=vec0.size)
            start /= np.linalg.norm(start)
        attempts += 1
        vec, val = start, _objective(start, diagonal)
        if val > tol:
            res = minimize(_objective, start, args=(diagonal,), method="Nelder-Mead",
                           options={"xatol": 1e-12, "fatol": 1e-14, "maxfev": maxfev, "adaptive": True})
            vec, val = res.x / np.linalg.norm(res.x), float(res.fun)
        resid = walk_residual(vec, diagonal)
        if polish and val <= tol and resid > EXACT_RESIDUAL:
            cand = polish_unit_cell(vec, diagonal)
            r2, v2 = walk_residual(cand, diagonal), _objective(cand, diagonal)
            if r2 < resid and v2 <= tol:
                vec, val, resid = cand, v2, r2
        ok = val <= tol and (not polish or resid <= EXACT_RESIDUAL)
        if best is None or (ok, -val) > (best[0], -best[2]):
            best = (ok, vec, val)
        if ok:
            break
    ok, vec, val = best
    params = UnitCellParams.from_vector(vec, diagonal, init.rz_angles)
    return OptimizeResult(params, val, ok, params.is_degenerate(), attempts)


# ---------------------------------------------------------------- conjecture pipeline

DEFAULT_TILINGS = ((2, 1), (1, 2), (2, 2))


@dataclass
class ConjectureReport:
    instances: int
    unit_pass: int
    tiled_pass: int
    max_tiled_f_eta: float
    tol: float
    seeds: List[int] = field(default_factory=list)
    max_flux_residual: float = 0.0
    failures: List[dict] = field(default_factory=list)
    skipped: int = 0

    def to_dict(self) -> dict:
        return {"instances": self.instances, "unit_pass": self.unit_pass, "tiled_pass": self.tiled_pass,
                "max_tiled_f_eta": self.max_tiled_f_eta, "tol": self.tol, "seeds": self.seeds,
                "max_flux_residual": self.max_flux_residual, "skipped": self.skipped,
                "failures": self.failures}


def tiled_vgp(params: UnitCellParams, nx: int, ny: int, tol: float) -> Tuple[bool, float, str]:
    """(passes, value, how): dense f_eta within the dense cap, weighted gauge residual per state beyond it.

    The flux is summed over all 2^n states, so it is divided by the dimension; since
    tr e^{eta |H_off|} >= 2^n this is no looser than the relative f_eta verdict.
    """
    n = 4 * nx * ny
    if n <= DENSE_CAP:
        val = f_eta(to_dense(tile_periodic(params, nx, ny)), 1.0)
        return val < tol, val, "f_eta"
    res = weighted_flux_residual(tile_pmr(params, nx, ny)) / (1 << n)
    return res < tol, res, "flux"


def verify_conjecture(instances: int, tilings: Sequence[Tuple[int, int]] = DEFAULT_TILINGS,
                      tol: float = 1e-8, rng: Optional[np.random.Generator] = None,
                      diagonal: bool = False, extra_cells: Sequence[UnitCellParams] = (),
                      max_restarts: int = 20, unit_tol: float = VGP_TOL) -> ConjectureReport:
    """Optimise, rotate and tile unit cells; count unit and tiled passes."""
    if rng is None:
        raise ValueError("verify_conjecture needs an explicit rng")
    seeds = [int(s) for s in rng.integers(0, 2 ** 63 - 1, size=instances)]
    cells: List[Tuple[Optional[int], UnitCellParams, bool]] = []
    for s in seeds:
        local = np.random.Generator(np.random.PCG64(s))
        init = UnitCellParams.from_vector(local.uniform(-1, 1, size=15 if diagonal else 12), diagonal)
        opt = optimize_unit_cell(init, unit_tol, max_restarts, local)
        ok = opt.converged and not opt.degenerate
        cells.append((s, apply_rz_rotation(opt.params, local) if ok else opt.params, ok))
    for extra in extra_cells:
        cells.append((None, extra, True))
    rep = ConjectureReport(len(cells), 0, 0, 0.0, tol, seeds)
    for seed, params, ok in cells:
        if not ok or params.is_degenerate():
            continue
        if unit_f_eta(params) >= unit_tol:
            continue
        rep.unit_pass += 1
        all_ok = True
        for nx, ny in tilings:
            try:
                passed, val, how = tiled_vgp(params, nx, ny, tol)
            except (SizeCapError, MemoryError):
                rep.skipped += 1
                continue
            if how == "f_eta":
                rep.max_tiled_f_eta = max(rep.max_tiled_f_eta, val)
            else:
                rep.max_flux_residual = max(rep.max_flux_residual, val)
            if not passed:
                all_ok = False
                rep.failures.append({"seed": seed, "tiling": [nx, ny], how: val, "params": params.to_dict()})
        rep.tiled_pass += int(all_ok)
    return rep
