"""Off-diagonal series expansion QMC with divided-difference weights.

A configuration is a basis state z and an index sequence S = (i_1..i_q) whose
masks XOR to zero.  Its weight is the product of edge weights along the closed
walk times the divided difference of e^{-beta x} over the q+1 visited energies.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .numerics import gf2_circuits, gf2_rank, seeded_rng
from .pmr import PMRForm, eval_diagonal

# ---------------------------------------------------------------- divided differences


def log_divided_differences(beta: float, energies: Sequence[float]) -> Tuple[int, float]:
    """(sign, log|value|) of the divided difference of e^{-beta x} over energies.

    Corner entry of exp(-beta T), T upper bidiagonal with the energies on the
    diagonal and ones above.  Conjugating by diag((-1)^i) and shifting by the
    largest node gives a nonnegative matrix, so the Taylor sums and squarings
    below never cancel; the sign (-1)^q is restored at the end.
    """
    y = beta * np.asarray(energies, dtype=float)
    if y.size == 0:
        raise ValueError("need at least one node")
    q = y.size - 1
    c = float(y.max())
    if q == 0:
        return 1, -c
    if beta == 0:
        return (1 if q % 2 == 0 else -1), -math.inf
    diag = c - y
    norm = float(diag.max()) + 1.0
    s = max(0, int(math.ceil(math.log2(norm / 0.5))))
    scale = 2.0 ** -s
    p = np.diag(diag * scale) + np.diag(np.full(q, scale), 1)
    # Taylor series of exp(p); all terms are nonnegative
    out = np.eye(q + 1)
    term = np.eye(q + 1)
    for k in range(1, 200):
        term = term @ p / k
        out += term
        if k > q and np.all(term <= 1e-17 * out):
            break
    log_extra = 0.0
    for _ in range(s):
        out = out @ out
        top = out.max()
        if top > 1e150:
            out /= top
            log_extra += math.log(top)
    corner = out[0, q]
    if corner <= 0:
        return (1 if q % 2 == 0 else -1), -math.inf
    log_val = math.log(corner) + log_extra - c + q * math.log(beta)
    return (1 if q % 2 == 0 else -1), log_val


def divided_differences(beta: float, energies: Sequence[float]) -> float:
    """e^{-beta [E_0, ..., E_q]}; repeated nodes give the confluent limits."""
    sign, lv = log_divided_differences(beta, energies)
    return sign * math.exp(lv) if lv > -math.inf else 0.0


def divided_differences_explicit(beta: float, energies: Sequence[float]) -> float:
    """Distinct-node formula sum_j f(E_j) / prod_{k != j} (E_j - E_k)."""
    e = np.asarray(energies, dtype=float)
    total = 0.0
    for j in range(e.size):
        diff = np.delete(e[j] - e, j)
        total += math.exp(-beta * e[j]) / float(np.prod(diff))
    return total


# ---------------------------------------------------------------- weights


class OpenWalkError(ValueError):
    pass


def _walk(p: PMRForm, z: int, indices: Sequence[int]):
    masks = p.masks
    states = [z]
    cur = z
    prod = 1 + 0j
    for j in indices:
        cur ^= masks[j]
        prod *= eval_diagonal(p.offdiag[j][1], cur)
        states.append(cur)
    return states, prod


def config_weight(p: PMRForm, z: int, indices: Sequence[int], beta: float) -> complex:
    """D_(z,S) times e^{-beta [E_z0, ..., E_zq]} for a closed index sequence."""
    acc = 0
    for j in indices:
        acc ^= p.masks[j]
    if acc:
        raise OpenWalkError(f"sequence {tuple(indices)} does not close (residual mask {acc:b})")
    states, prod = _walk(p, z, indices)
    energies = [eval_diagonal(p.d0, s).real for s in states]
    return prod * divided_differences(beta, energies)


class BudgetExceeded(RuntimeError):
    pass


def _energy_levels(p: PMRForm, decimals: int = 12):
    table = p.diag_table()
    levels, ids = np.unique(np.round(table, decimals), return_inverse=True)
    return levels, ids.astype(np.int64)


def exact_partition_truncated(p: PMRForm, beta: float, q_max: int,
                              budget: int = 2_000_000) -> Tuple[float, float]:
    """(sum Re W, sum |W|) over every closed configuration with q <= q_max.

    Dynamic programming over (start, current state, energy-level counts); edge
    weight products are accumulated per key and multiplied by the divided
    difference of that key's energy multiset.
    """
    levels, ids = _energy_levels(p)
    wt = p.weight_table()
    masks = p.masks
    n_lv = len(levels)
    dim = 1 << p.n_spins
    dd_cache: Dict[tuple, float] = {}

    def dd(counts):
        v = dd_cache.get(counts)
        if v is None:
            nodes = np.repeat(levels, counts)
            v = divided_differences(beta, nodes)
            dd_cache[counts] = v
        return v

    sum_w = 0.0
    sum_abs = 0.0
    # layer: (start, cur, counts) -> [sum D, sum |D|]
    layer: Dict[tuple, List] = {}
    for z in range(dim):
        counts = [0] * n_lv
        counts[ids[z]] = 1
        layer[(z, z, tuple(counts))] = [1 + 0j, 1.0]
    for q in range(q_max + 1):
        for (start, cur, counts), (sd, sa) in layer.items():
            if start == cur:
                v = dd(counts)
                sum_w += (sd * v).real
                sum_abs += sa * abs(v)
        if q == q_max:
            break
        nxt: Dict[tuple, List] = defaultdict(lambda: [0j, 0.0])
        for (start, cur, counts), (sd, sa) in layer.items():
            for j, m in enumerate(masks):
                tgt = cur ^ m
                w = wt[j, tgt]
                if w == 0:
                    continue
                c = list(counts)
                c[ids[tgt]] += 1
                acc = nxt[(start, tgt, tuple(c))]
                acc[0] += sd * w
                acc[1] += sa * abs(w)
        layer = nxt
        if len(layer) > budget:
            raise BudgetExceeded(f"{len(layer)} partial sums at order {q + 1} exceed budget {budget}")
    return sum_w, sum_abs


def truncation_bound(p: PMRForm, beta: float, q_max: int, h_norm: float, off_norm: float) -> float:
    """First omitted-order bound (beta ||H_off||)^{q+1}/(q+1)! * dim * e^{beta ||H||}."""
    q = q_max + 1
    return (beta * off_norm) ** q / math.factorial(q) * (1 << p.n_spins) * math.exp(beta * h_norm)


# ---------------------------------------------------------------- Monte Carlo

MOVES = ("flip", "pair", "swap", "generator")


class QmcStall(RuntimeError):
    pass


@dataclass
class QmcConfig:
    beta: float
    sweeps: int = 10000
    thermalization: int = 1000
    seed: int = 0
    q_max: int = 200
    move_probs: Dict[str, float] = field(default_factory=lambda: {
        "flip": 0.25, "pair": 0.35, "swap": 0.2, "generator": 0.2})
    steps_per_sweep: Optional[int] = None
    stall_window: int = 200_000
    initial_state: int = 0
    generator_max_len: int = 6
    blocks: int = 32

    def validate(self):
        if not self.beta > 0:
            raise ValueError("beta must be > 0")
        if self.q_max < 2:
            raise ValueError("q_max must be >= 2")
        if self.sweeps < 1 or self.thermalization < 0:
            raise ValueError("sweeps must be >= 1 and thermalization >= 0")
        unknown = set(self.move_probs) - set(MOVES)
        if unknown:
            raise ValueError(f"unknown moves {sorted(unknown)}")
        if any(v < 0 for v in self.move_probs.values()) or abs(sum(self.move_probs.values()) - 1) > 1e-12:
            raise ValueError("move probabilities must be nonnegative and sum to 1")


@dataclass
class QmcStats:
    avg_sign: float
    sign_stderr: float
    avg_q: float
    q_stderr: float
    acceptance: Dict[str, float]
    samples: int
    nonpositive_samples: int
    min_sign: float
    block_signs: List[float] = field(default_factory=list, repr=False)
    block_qs: List[float] = field(default_factory=list, repr=False)
    ergodic_generators: bool = True

    def to_dict(self) -> dict:
        return {"avg_sign": self.avg_sign, "stderr": self.sign_stderr, "avg_q": self.avg_q,
                "avg_q_err": self.q_stderr, "acceptance": self.acceptance, "samples": self.samples,
                "nonpositive_samples": self.nonpositive_samples, "min_sign": self.min_sign}


def _block_stats(values: np.ndarray, blocks: int):
    nb = min(blocks, len(values))
    means = np.array([b.mean() for b in np.array_split(values, nb)])
    err = float(means.std(ddof=1) / math.sqrt(nb)) if nb > 1 else float("inf")
    return float(values.mean()), err, means


class _Chain:
    """Sequential Metropolis chain on |W|."""

    def __init__(self, p: PMRForm, cfg: QmcConfig):
        self.p = p
        self.cfg = cfg
        self.beta = cfg.beta
        self.masks = list(p.masks)
        self.m = len(self.masks)
        self.wt = p.weight_table() if self.m else np.zeros((0, 1 << p.n_spins), dtype=complex)
        self.levels, self.ids = _energy_levels(p)
        self.dd_cache: Dict[tuple, float] = {}
        self.rng = seeded_rng(cfg.seed)
        self.n = p.n_spins
        gens = [c for c in gf2_circuits(self.masks, min(max(cfg.generator_max_len, 2), max(self.m, 2)))
                if len(set(c)) > 1] if self.m else []
        self.generators = gens
        self.ergodic = self._generators_span(gens)
        self.z = cfg.initial_state
        self.seq: List[int] = []
        self.logw, self.phase = self._weight(self.z, self.seq)

    def _generators_span(self, gens) -> bool:
        kernel_dim = self.m - (gf2_rank(self.masks) if self.m else 0)
        if kernel_dim == 0:
            return True
        vecs = [sum(1 << j for j in g) for g in gens]
        return gf2_rank(vecs) == kernel_dim if vecs else False

    def _log_dd(self, key: tuple) -> float:
        v = self.dd_cache.get(key)
        if v is None:
            if len(self.dd_cache) > 500_000:
                self.dd_cache.clear()
            v = log_divided_differences(self.beta, self.levels[list(key)])[1]
            self.dd_cache[key] = v
        return v

    def _weight(self, z: int, seq: Sequence[int]) -> Tuple[float, float]:
        """(log|W|, arg W); log|W| = -inf for vanishing weights."""
        cur = z
        log_abs = 0.0
        phase = 0.0
        nodes = [self.ids[z]]
        wt = self.wt
        masks = self.masks
        for j in seq:
            cur ^= masks[j]
            w = wt[j, cur]
            if w == 0:
                return -math.inf, 0.0
            log_abs += math.log(abs(w))
            phase += math.atan2(w.imag, w.real)
            nodes.append(self.ids[cur])
        q = len(seq)
        log_abs += self._log_dd(tuple(sorted(nodes)))
        if q % 2:
            phase += math.pi
        return log_abs, phase

    def _accept(self, logw_new: float, log_factor: float) -> bool:
        if logw_new == -math.inf:
            return False
        r = logw_new - self.logw + log_factor
        return r >= 0 or self.rng.random() < math.exp(r)

    # moves return (proposed, accepted)
    def move_flip(self):
        z2 = self.z ^ (1 << int(self.rng.integers(self.n)))
        lw, ph = self._weight(z2, self.seq)
        if self._accept(lw, 0.0):
            self.z, self.logw, self.phase = z2, lw, ph
            return True
        return False

    def move_pair(self):
        if self.m == 0:
            return None
        q = len(self.seq)
        if self.rng.random() < 0.5:
            if q + 2 > self.cfg.q_max:
                return None
            k = int(self.rng.integers(q + 1))
            j = int(self.rng.integers(self.m))
            new = self.seq[:k] + [j, j] + self.seq[k:]
            log_factor = math.log(self.m)
        else:
            if q < 2:
                return None
            k = int(self.rng.integers(q - 1))
            if self.seq[k] != self.seq[k + 1]:
                return False
            new = self.seq[:k] + self.seq[k + 2:]
            log_factor = -math.log(self.m)
        lw, ph = self._weight(self.z, new)
        if self._accept(lw, log_factor):
            self.seq, self.logw, self.phase = new, lw, ph
            return True
        return False

    def move_swap(self):
        q = len(self.seq)
        if q < 2:
            return None
        k = int(self.rng.integers(q - 1))
        if self.seq[k] == self.seq[k + 1]:
            return None
        new = list(self.seq)
        new[k], new[k + 1] = new[k + 1], new[k]
        lw, ph = self._weight(self.z, new)
        if self._accept(lw, 0.0):
            self.seq, self.logw, self.phase = new, lw, ph
            return True
        return False

    def move_generator(self):
        if not self.generators:
            return None
        g = self.generators[int(self.rng.integers(len(self.generators)))]
        size = len(g)
        log_orders = math.lgamma(size + 1)
        q = len(self.seq)
        if self.rng.random() < 0.5:
            if q + size > self.cfg.q_max:
                return None
            k = int(self.rng.integers(q + 1))
            block = list(self.rng.permutation(g))
            new = self.seq[:k] + [int(x) for x in block] + self.seq[k:]
            log_factor = log_orders
        else:
            if q < size:
                return None
            k = int(self.rng.integers(q - size + 1))
            if sorted(self.seq[k:k + size]) != list(g):
                return False
            new = self.seq[:k] + self.seq[k + size:]
            log_factor = -log_orders
        lw, ph = self._weight(self.z, new)
        if self._accept(lw, log_factor):
            self.seq, self.logw, self.phase = new, lw, ph
            return True
        return False


def run_qmc(p: PMRForm, cfg: QmcConfig) -> QmcStats:
    """Metropolis sampling of |W|; sign estimator Re(W)/|W|, error bars by blocking."""
    cfg.validate()
    chain = _Chain(p, cfg)
    names = [k for k in MOVES if cfg.move_probs.get(k, 0) > 0]
    probs = np.array([cfg.move_probs[k] for k in names])
    probs = probs / probs.sum()
    fns = {k: getattr(chain, "move_" + k) for k in names}
    steps = cfg.steps_per_sweep or max(p.n_spins, 4)
    proposed = dict.fromkeys(MOVES, 0)
    accepted = dict.fromkeys(MOVES, 0)
    signs = np.empty(cfg.sweeps)
    qs = np.empty(cfg.sweeps)
    since_accept = 0
    nonpositive = 0
    total_sweeps = cfg.thermalization + cfg.sweeps
    # draw move choices per sweep in one call
    for sweep in range(total_sweeps):
        choice = chain.rng.choice(len(names), size=steps, p=probs)
        for c in choice:
            name = names[c]
            res = fns[name]()
            if res is None:
                continue
            proposed[name] += 1
            if res:
                accepted[name] += 1
                since_accept = 0
            else:
                since_accept += 1
                if since_accept >= cfg.stall_window:
                    raise QmcStall(f"no move accepted in {cfg.stall_window} attempts at sweep {sweep}")
        if sweep >= cfg.thermalization:
            k = sweep - cfg.thermalization
            s = math.cos(chain.phase)
            signs[k] = s
            qs[k] = len(chain.seq)
            if s < 1 - 1e-9:
                nonpositive += 1
    sign_mean, sign_err, sign_blocks = _block_stats(signs, cfg.blocks)
    q_mean, q_err, q_blocks = _block_stats(qs, cfg.blocks)
    acc = {"flip": _ratio(accepted["flip"], proposed["flip"]),
           "swap": _ratio(accepted["swap"], proposed["swap"]),
           "insert": _ratio(accepted["pair"] + accepted["generator"],
                            proposed["pair"] + proposed["generator"])}
    return QmcStats(sign_mean, sign_err, q_mean, q_err, acc, cfg.sweeps, nonpositive,
                    float(signs.min()), list(sign_blocks), list(q_blocks), chain.ergodic)


def _ratio(a: int, b: int) -> float:
    return a / b if b else 0.0


def merge_stats(stats: Sequence[QmcStats]) -> QmcStats:
    """Pool independent chains; error bars from the pooled block means."""
    if len(stats) == 1:
        return stats[0]
    sb = np.concatenate([s.block_signs for s in stats])
    qb = np.concatenate([s.block_qs for s in stats])
    weights = np.concatenate([[s.samples / len(s.block_signs)] * len(s.block_signs) for s in stats])
    sign = float(np.average(sb, weights=weights))
    q = float(np.average(qb, weights=weights))
    acc = {k: float(np.mean([s.acceptance[k] for s in stats])) for k in stats[0].acceptance}
    return QmcStats(sign, float(sb.std(ddof=1) / math.sqrt(len(sb))), q,
                    float(qb.std(ddof=1) / math.sqrt(len(qb))), acc,
                    sum(s.samples for s in stats), sum(s.nonpositive_samples for s in stats),
                    min(s.min_sign for s in stats), list(sb), list(qb),
                    all(s.ergodic_generators for s in stats))


def run_chains(p: PMRForm, cfg: QmcConfig, chains: int = 1) -> QmcStats:
    """Independent chains with seeds derived from cfg.seed, run in worker processes."""
    if chains <= 1:
        return run_qmc(p, cfg)
    from concurrent.futures import ProcessPoolExecutor
    from dataclasses import replace
    seeds = np.random.SeedSequence(cfg.seed).generate_state(chains, dtype=np.uint64)
    cfgs = [replace(cfg, seed=int(s)) for s in seeds]
    with ProcessPoolExecutor(max_workers=chains) as ex:
        results = list(ex.map(run_qmc, [p] * chains, cfgs))
    return merge_stats(results)


# ---------------------------------------------------------------- scans

SCAN_COLUMNS = ["model", "N", "beta", "Nd", "avg_sign", "stderr", "avg_q", "avg_q_err",
                "exact_avg_sign", "acc_insert", "acc_swap", "acc_flip"]
CYCLE_COLUMNS = ["n_vgp_cycles", "n_nonvgp_cycles", "cycle_ratio"]


@dataclass
class ScanPoint:
    model: str
    n: int
    nd: int
    pmr: PMRForm
    dense: Optional[np.ndarray] = None


def cycle_count_estimate(p: PMRForm, Q: int, tol: float = 1e-9) -> Tuple[int, int, float]:
    """Counts of VGP and non-VGP chordless cycles (q >= 3) and their normalized difference."""
    from .diagnostics import all_cycles
    cycles = [c for c in all_cycles(p, Q) if c.q >= 3]
    bad = sum(1 for c in cycles if abs(c.phase) > tol)
    good = len(cycles) - bad
    ratio = (good - bad) / len(cycles) if cycles else 1.0
    return good, bad, ratio


def scan(points: Sequence[ScanPoint], betas: Sequence[float], cfg: QmcConfig, chains: int = 1,
         cycle_counts: bool = False, Q: Optional[int] = None) -> List[dict]:
    """One row per (point, beta) with the QMC estimate and the exact ratio when available."""
    from dataclasses import replace
    from .diagnostics import SpectralCache
    rows = []
    for pt in points:
        cache = SpectralCache(pt.dense) if pt.dense is not None else None
        counts = cycle_count_estimate(pt.pmr, Q or min(2 * pt.n, 12)) if cycle_counts else None
        for beta in betas:
            st = run_chains(pt.pmr, replace(cfg, beta=float(beta)), chains)
            row = {"model": pt.model, "N": pt.n, "beta": float(beta), "Nd": pt.nd,
                   "avg_sign": st.avg_sign, "stderr": st.sign_stderr, "avg_q": st.avg_q,
                   "avg_q_err": st.q_stderr,
                   "exact_avg_sign": cache.avg_sign(beta) if cache else float("nan"),
                   "acc_insert": st.acceptance["insert"], "acc_swap": st.acceptance["swap"],
                   "acc_flip": st.acceptance["flip"]}
            if counts:
                row.update(dict(zip(CYCLE_COLUMNS, counts)))
            rows.append(row)
    return rows
