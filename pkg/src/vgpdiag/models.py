"""Named spin models expanded into Pauli sums."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .pauli import PauliSum, PauliTerm, pauli_from_letters

Edge = Tuple[int, int]

MODEL_NAMES = ("heisenberg_ladder", "h1", "h2", "h_hard", "tilde_heis", "unit_cell_2local")


class ModelError(ValueError):
    pass


# ---------------------------------------------------------------- geometry

def square_lattice(width: int, height: int, periodic: bool = False) -> List[Edge]:
    """Nearest-neighbour bonds, site index y*width + x. Wrap bonds need length > 2."""
    edges = []
    for y in range(height):
        for x in range(width):
            i = y * width + x
            if x + 1 < width:
                edges.append((i, i + 1))
            elif periodic and width > 2:
                edges.append((y * width, i))
            if y + 1 < height:
                edges.append((i, i + width))
            elif periodic and height > 2:
                edges.append((x, i))
    return edges


@dataclass
class Ladder:
    """Triangular ladder: site 2k on the lower leg, 2k+1 on the upper leg."""
    n: int
    periodic: bool = False

    def __post_init__(self):
        if self.n < 4 or self.n % 2:
            raise ModelError("ladder needs an even N >= 4")

    @property
    def rungs_count(self) -> int:
        return self.n // 2

    def plaquettes(self) -> List[int]:
        length = self.rungs_count
        return list(range(length if self.periodic and length > 2 else length - 1))

    def _nxt(self, k: int) -> int:
        return (k + 1) % self.rungs_count

    def rungs(self) -> List[Edge]:
        return [(2 * k, 2 * k + 1) for k in range(self.rungs_count)]

    def legs(self) -> List[Edge]:
        out = []
        for k in self.plaquettes():
            m = self._nxt(k)
            out += [(min(2 * k, 2 * m), max(2 * k, 2 * m)),
                    (min(2 * k + 1, 2 * m + 1), max(2 * k + 1, 2 * m + 1))]
        return out

    def diagonals(self) -> List[Edge]:
        out = []
        for k in self.plaquettes():
            m = self._nxt(k)
            out.append(tuple(sorted((2 * k, 2 * m + 1))))
        return out

    def edges(self) -> List[Edge]:
        return self.rungs() + self.legs() + self.diagonals()

    def triangles(self) -> List[Tuple[Edge, Edge, Edge]]:
        """Each plaquette splits into two triangles sharing its diagonal."""
        out = []
        for k in self.plaquettes():
            m = self._nxt(k)
            a, b, c, d = 2 * k, 2 * k + 1, 2 * m, 2 * m + 1
            diag = tuple(sorted((a, d)))
            out.append((tuple(sorted((a, b))), tuple(sorted((b, d))), diag))
            out.append((tuple(sorted((a, c))), tuple(sorted((c, d))), diag))
        return out

    def defect_diagonals(self, count: int) -> List[Edge]:
        """count defects spread evenly; a single defect sits in the middle."""
        diags = self.diagonals()
        p = len(diags)
        if count < 0 or count > p:
            raise ModelError(f"cannot place {count} defects on {p} diagonals")
        if count == 0:
            return []
        pos = sorted({int(round((k + 1) * (p + 1) / (count + 1))) - 1 for k in range(count)})
        pos = [min(max(x, 0), p - 1) for x in pos]
        if len(set(pos)) < count:
            pos = list(range(count))
        return [diags[x] for x in pos]


def neighbours(n: int, edges: Sequence[Edge]) -> List[List[int]]:
    nb: List[List[int]] = [[] for _ in range(n)]
    for i, j in edges:
        nb[i].append(j)
        nb[j].append(i)
    return [sorted(set(x)) for x in nb]


# ---------------------------------------------------------------- builders

def _zmask(sites) -> int:
    m = 0
    for s in sites:
        m |= 1 << s
    return m


def heisenberg_term(i: int, j: int, coupling: float) -> List[PauliTerm]:
    return [pauli_from_letters(coupling, [(p, i), (p, j)]) for p in "XYZ"]


def heisenberg_ladder(n: int, defects: Sequence[Edge] = (), periodic: bool = False) -> PauliSum:
    """-sum_edges S_i.S_j (Pauli form) with sign-flipped couplings on defect diagonals."""
    lad = Ladder(n, periodic)
    diag = set(lad.diagonals())
    terms: List[PauliTerm] = []
    for e in lad.edges():
        terms += heisenberg_term(*e, -1.0)
    for e in defects:
        e = tuple(sorted(e))
        if e not in diag:
            raise ModelError(f"defect {e} is not a ladder diagonal")
        terms += heisenberg_term(*e, 2.0)
    return PauliSum(n, terms)


def heisenberg_edges(n: int, edges: Sequence[Edge], couplings) -> PauliSum:
    terms: List[PauliTerm] = []
    for (i, j), c in zip(edges, couplings):
        terms += heisenberg_term(i, j, float(c))
    return PauliSum(n, terms)


def h1_model(n: int, edges: Sequence[Edge], couplings) -> PauliSum:
    """sum over ordered neighbour pairs (i, j) of J_ij (1 + Z_j) X_i."""
    terms: List[PauliTerm] = []
    for (i, j), c in zip(edges, couplings):
        for a, b in ((i, j), (j, i)):
            terms.append(PauliTerm(float(c), 1 << a, 0))
            terms.append(PauliTerm(float(c), 1 << a, 1 << b))
    return PauliSum(n, terms)


def h2_model(n: int, edges: Sequence[Edge], fields) -> PauliSum:
    """sum_i J_i (prod_{j ~ i} Z_j) X_i."""
    nb = neighbours(n, edges)
    return PauliSum(n, [PauliTerm(float(fields[i]), 1 << i, _zmask(nb[i])) for i in range(n)])


def h_hard_model(n: int, edges: Sequence[Edge], a, b, c) -> PauliSum:
    """sum_i (a + i b Z_i + c prod_{j ~ i} Z_j) X_i; i b Z_i X_i = -b Y_i."""
    nb = neighbours(n, edges)
    terms = []
    for i in range(n):
        terms.append(PauliTerm(float(a[i]), 1 << i, 0))
        terms.append(PauliTerm(-float(b[i]), 1 << i, 1 << i))
        terms.append(PauliTerm(float(c[i]), 1 << i, _zmask(nb[i])))
    return PauliSum(n, terms)


def tilde_heis_model(n: int, edges: Sequence[Edge], h0, h1, diag_coupling: float = -1.0) -> PauliSum:
    """D_0 + sum_edges [h0 (Z_i Z_j - 1) + i h1 (Z_i + Z_j)] X_i X_j.

    Expanded: -h0 (X_i X_j + Y_i Y_j) - h1 (Y_i X_j + X_i Y_j), with
    D_0 = diag_coupling * sum_edges Z_i Z_j.
    """
    terms = []
    for (i, j), a, b in zip(edges, h0, h1):
        terms.append(pauli_from_letters(-float(a), [("X", i), ("X", j)]))
        terms.append(pauli_from_letters(-float(a), [("Y", i), ("Y", j)]))
        terms.append(pauli_from_letters(-float(b), [("Y", i), ("X", j)]))
        terms.append(pauli_from_letters(-float(b), [("X", i), ("Y", j)]))
        if diag_coupling:
            terms.append(pauli_from_letters(diag_coupling, [("Z", i), ("Z", j)]))
    return PauliSum(n, terms)


def two_local_xx_model(n: int, edge_params: Sequence[Tuple[int, int, float, float, float, float]]) -> PauliSum:
    """sum_edges [h0 + i(h1 Z_i + h2 Z_j) + h3 Z_i Z_j] X_i X_j with real Pauli coefficients.

    Z_i X_i = i Y_i, so i h1 Z_i X_i X_j = -h1 Y_i X_j and h3 Z_i Z_j X_i X_j = -h3 Y_i Y_j.
    """
    terms = []
    for i, j, h0, h1, h2, h3 in edge_params:
        terms.append(pauli_from_letters(float(h0), [("X", i), ("X", j)]))
        terms.append(pauli_from_letters(-float(h1), [("Y", i), ("X", j)]))
        terms.append(pauli_from_letters(-float(h2), [("X", i), ("Y", j)]))
        terms.append(pauli_from_letters(-float(h3), [("Y", i), ("Y", j)]))
    return PauliSum(n, terms)


# ---------------------------------------------------------------- ModelSpec

@dataclass
class ModelSpec:
    name: str
    n: Optional[int] = None
    lattice: Optional[Tuple[int, int]] = None
    periodic: bool = False
    edges: Optional[List[Edge]] = None
    params: Dict[str, object] = field(default_factory=dict)

    def geometry_edges(self) -> Tuple[int, List[Edge]]:
        if self.edges is not None:
            if self.n is None:
                raise ModelError("explicit edges need N")
            bad = [e for e in self.edges if max(e) >= self.n or e[0] == e[1]]
            if bad:
                raise ModelError(f"edges out of range: {bad}")
            return self.n, list(self.edges)
        if self.lattice is not None:
            w, h = self.lattice
            n = w * h
            if self.n is not None and self.n != n:
                raise ModelError(f"--N {self.n} inconsistent with lattice {w}x{h}")
            return n, square_lattice(w, h, self.periodic)
        if self.n is not None:
            return self.n, Ladder(self.n, self.periodic).edges()
        raise ModelError("model needs N, a lattice or an edge list")


def _per(params: dict, key: str, count: int, default=None, rng=None, low=None, high=None) -> np.ndarray:
    val = params.get(key, default)
    if val is None:
        if rng is None:
            raise ModelError(f"missing parameter {key!r}")
        return rng.uniform(low, high, size=count)
    arr = np.atleast_1d(np.asarray(val, dtype=float))
    if arr.size == 1:
        return np.full(count, float(arr[0]))
    if arr.size != count:
        raise ModelError(f"parameter {key!r} needs {count} values, got {arr.size}")
    return arr


def build_model(spec: ModelSpec, rng: Optional[np.random.Generator] = None) -> PauliSum:
    """Expand a ModelSpec; unset random-valued parameters are drawn from rng."""
    p = spec.params
    name = spec.name
    if name not in MODEL_NAMES:
        raise ModelError(f"unknown model {name!r}; choose from {', '.join(MODEL_NAMES)}")
    if name == "heisenberg_ladder":
        if spec.n is None:
            raise ModelError("heisenberg_ladder needs N")
        lad = Ladder(spec.n, spec.periodic)
        defects = p.get("defect_edges")
        if defects is None:
            defects = lad.defect_diagonals(int(p.get("defects", 0)))
        return heisenberg_ladder(spec.n, [tuple(e) for e in defects], spec.periodic)
    n, edges = spec.geometry_edges()
    if name == "h1":
        return h1_model(n, edges, _per(p, "J", len(edges), 1.0))
    if name == "h2":
        return h2_model(n, edges, _per(p, "J", n, 1.0))
    if name == "h_hard":
        return h_hard_model(n, edges, _per(p, "a", n, 1.0), _per(p, "b", n, 0.0), _per(p, "c", n, 0.0))
    if name == "tilde_heis":
        h0 = _per(p, "h0", len(edges), None, rng, 0.5, 2.0)
        h1 = _per(p, "h1", len(edges), None, rng, 0.1, 1.0)
        return tilde_heis_model(n, edges, h0, h1, float(p.get("diag", -1.0)))
    # unit_cell_2local: per-edge h0, h1, h2 in the symmetric form
    h0 = _per(p, "h0", len(edges), None, rng, -1.0, 1.0)
    h1 = _per(p, "h1", len(edges), None, rng, -1.0, 1.0)
    h2 = _per(p, "h2", len(edges), None, rng, -1.0, 1.0)
    return two_local_xx_model(n, [(i, j, a, b, b, c) for (i, j), a, b, c in zip(edges, h0, h1, h2)])
