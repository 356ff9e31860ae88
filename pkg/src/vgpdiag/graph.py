"""Computational state graph, fundamental generators and chordless cycles."""
from __future__ import annotations

import cmath
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from .numerics import gf2_circuits
from .pmr import PMRForm, eval_diagonal

COMPONENT_CAP = 1 << 16
CYCLE_CAP = 500_000


class ComponentTooLarge(RuntimeError):
    def __init__(self, size: int, cap: int):
        super().__init__(f"component has more than {cap} states (reached {size})")
        self.size = size
        self.cap = cap


class CycleCountExceeded(RuntimeError):
    def __init__(self, count: int, cap: int):
        super().__init__(f"more than {cap} chordless cycles (reached {count}); lower Q or raise the cap")
        self.count = count
        self.cap = cap


@dataclass
class StateGraph:
    n_spins: int
    masks: List[int]
    component: List[int]
    adjacency: Dict[int, List[Tuple[int, int, complex]]]
    _nbrs: Dict[int, set] = field(default_factory=dict, repr=False)

    def neighbours(self, z: int) -> set:
        s = self._nbrs.get(z)
        if s is None:
            s = {nb for nb, _, _ in self.adjacency[z]}
            self._nbrs[z] = s
        return s

    def weight(self, a: int, b: int) -> complex:
        """<b|H|a> for adjacent states."""
        for nb, _, w in self.adjacency[a]:
            if nb == b:
                return w
        raise KeyError((a, b))

    def edge_count(self) -> int:
        return sum(len(v) for v in self.adjacency.values())


@dataclass(frozen=True)
class FundamentalCycle:
    start: int
    indices: Tuple[int, ...]
    weight: complex

    @property
    def q(self) -> int:
        return len(self.indices)

    @property
    def phase(self) -> float:
        """arg((-1)^q * weight), in (-pi, pi]."""
        return cmath.phase((-1) ** self.q * self.weight)

    @property
    def violation(self) -> float:
        return abs(self.weight) * (1.0 - math.cos(self.phase))

    def to_dict(self) -> dict:
        return {"start": self.start, "q": self.q, "indices": list(self.indices),
                "weight": [self.weight.real, self.weight.imag]}


# ---------------------------------------------------------------- construction

def _bfs(n: int, masks: Sequence[int], root: int, neighbours_fn, cap: int) -> StateGraph:
    if not 0 <= root < (1 << n):
        raise ValueError("root out of range")
    adjacency: Dict[int, List[Tuple[int, int, complex]]] = {}
    queue = deque([root])
    seen = {root}
    while queue:
        z = queue.popleft()
        edges = neighbours_fn(z)
        adjacency[z] = edges
        for nb, _, _ in edges:
            if nb not in seen:
                seen.add(nb)
                if len(seen) > cap:
                    raise ComponentTooLarge(len(seen), cap)
                queue.append(nb)
    comp = sorted(adjacency)
    return StateGraph(n, list(masks), comp, adjacency)


def build_graph(p: PMRForm, root: int, cap: int = COMPONENT_CAP) -> StateGraph:
    """Breadth-first closure of root under the permutations; zero-weight edges dropped."""
    masks = p.masks

    def nbrs(z):
        out = []
        for j, (mask, d) in enumerate(p.offdiag):
            zp = z ^ mask
            w = eval_diagonal(d, zp)
            if w != 0:
                out.append((zp, j, w))
        return out

    return _bfs(p.n_spins, masks, root, nbrs, cap)


def build_graph_dense(h: np.ndarray, root: int, cap: int = COMPONENT_CAP) -> StateGraph:
    """State graph of a dense matrix; permutation labels are the distinct XOR masks."""
    h = np.asarray(h)
    dim = h.shape[0]
    n = dim.bit_length() - 1
    rows, cols = np.nonzero(h)
    off = rows != cols
    masks = sorted({int(m) for m in (rows[off] ^ cols[off])})
    pos = {m: k for k, m in enumerate(masks)}

    def nbrs(z):
        col = h[:, z]
        idx = np.flatnonzero(col)
        return [(int(t), pos[int(t) ^ z], complex(col[t])) for t in idx if t != z]

    return _bfs(n, masks, root, nbrs, cap)


def all_components(builder, n: int) -> List[StateGraph]:
    """Cover every basis state with components produced by builder(root)."""
    graphs = []
    seen = np.zeros(1 << n, dtype=bool)
    for z in range(1 << n):
        if not seen[z]:
            g = builder(z)
            seen[g.component] = True
            graphs.append(g)
    return graphs


def fundamental_generators(p: PMRForm, max_len: int) -> List[tuple]:
    """Minimal identity-equivalent index multisets (matroid circuits plus (j, j) pairs)."""
    return gf2_circuits(p.masks, max_len)


# ---------------------------------------------------------------- cycles

def _canonical(g: StateGraph, verts: Sequence[int]) -> FundamentalCycle:
    q = len(verts)
    pos = {m: k for k, m in enumerate(g.masks)}
    best = None
    for seq in (list(verts), list(reversed(verts))):
        for r in range(q):
            walk = seq[r:] + seq[:r]
            idx = tuple(pos[walk[k] ^ walk[(k + 1) % q]] for k in range(q))
            key = (walk[0], idx)
            if best is None or key < best[0]:
                best = (key, walk)
    (start, idx), walk = best
    w = 1 + 0j
    for k in range(q):
        w *= g.weight(walk[k], walk[(k + 1) % q])
    return FundamentalCycle(start, idx, w)


def _two_cycles(g: StateGraph) -> List[FundamentalCycle]:
    out = []
    for a in g.component:
        for b, j, w in g.adjacency[a]:
            if a < b:
                out.append(FundamentalCycle(a, (j, j), w * g.weight(b, a)))
    return out


def induced_cycles(g: StateGraph, max_len: int, cap: int = CYCLE_CAP) -> List[List[int]]:
    """Vertex lists of chordless cycles of length 3..max_len, each reported once."""
    found: List[List[int]] = []
    for s in g.component:
        s_nb = g.neighbours(s)
        stack = [(s, [s])]
        # path = s, v1, ..., vk; extension w must avoid chords to v1..v_{k-1}
        while stack:
            v, path = stack.pop()
            for w in g.neighbours(v):
                if w <= s or w in path:
                    continue
                if any(w in g.neighbours(u) for u in path[1:-1]):
                    continue
                k = len(path)
                if w in s_nb:
                    if k >= 2 and path[1] < w:
                        found.append(path + [w])
                        if len(found) > cap:
                            raise CycleCountExceeded(len(found), cap)
                    if k >= 2:
                        continue
                if k + 1 < max_len:
                    stack.append((w, path + [w]))
    return found


def enumerate_cycles(g: StateGraph, Q: int, cap: int = CYCLE_CAP) -> List[FundamentalCycle]:
    """Chordless closed walks of length 2..Q in canonical form."""
    if Q < 2:
        raise ValueError("Q must be >= 2")
    cycles = _two_cycles(g)
    if Q >= 3:
        cycles += [_canonical(g, c) for c in induced_cycles(g, Q, cap)]
    cycles.sort(key=lambda c: (c.q, c.start, c.indices))
    return cycles


def default_Q(n: int) -> int:
    return min(2 * n, 12)


# ---------------------------------------------------------------- diameter

def graph_diameter(g: StateGraph) -> int:
    """Largest shortest-path distance in the component (unweighted)."""
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import shortest_path

    comp = g.component
    if len(comp) == 1:
        return 0
    pos = {z: k for k, z in enumerate(comp)}
    rows, cols = [], []
    for z in comp:
        for nb, _, _ in g.adjacency[z]:
            rows.append(pos[z])
            cols.append(pos[nb])
    mat = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(comp), len(comp)))
    dist = shortest_path(mat, unweighted=True, directed=False)
    if np.isinf(dist).any():
        raise ValueError("graph is not connected")
    return int(dist.max())


def bfs_eccentricities(g: StateGraph) -> Dict[int, int]:
    out = {}
    for s in g.component:
        dist = {s: 0}
        queue = deque([s])
        while queue:
            v = queue.popleft()
            for nb in g.neighbours(v):
                if nb not in dist:
                    dist[nb] = dist[v] + 1
                    queue.append(nb)
        out[s] = max(dist.values())
    return out


def cycles_csv(cycles: Iterable[FundamentalCycle]) -> str:
    lines = ["start,q,indices,weight_re,weight_im,phase"]
    for c in cycles:
        idx = " ".join(str(i) for i in c.indices)
        lines.append(f"{c.start},{c.q},{idx},{c.weight.real:.17g},{c.weight.imag:.17g},{c.phase:.17g}")
    return "\n".join(lines) + "\n"
