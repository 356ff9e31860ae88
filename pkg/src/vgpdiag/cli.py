"""Command-line front end: vgpdiag <command> [flags].

Exit codes: 0 success, 1 validation error, 2 size guard refusal (reason on stderr as JSON).
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .diagnostics import VGP_TOL, diagnose
from .graph import (ComponentTooLarge, CycleCountExceeded, all_components, build_graph,
                    fundamental_generators, graph_diameter)
from .io import emit_report
from .models import MODEL_NAMES, ModelError, ModelSpec, build_model, heisenberg_edges
from .numerics import seeded_rng
from .pauli import DENSE_CAP, PauliSum, SizeCapError, parse_hamiltonian, serialize_hamiltonian, to_dense
from .pmr import pmr_decompose, pmr_to_dict
from .qmc import SCAN_COLUMNS, CYCLE_COLUMNS, BudgetExceeded, QmcConfig, QmcStall, ScanPoint, scan
from .random_basis import RANDOM_BASIS_COLUMNS, random_basis_rows, random_pauli_experiment
from .search import DEFAULT_TILINGS, verify_conjecture
from .vgpcheck import (PreconditionError, check_2local_triangle, check_dx_vgp, check_spectral,
                       check_tilde_heis)

COMMANDS = ("describe", "diagnose", "check", "qmc", "scan", "random-basis", "conjecture")
RANDOMIZED = {"qmc", "scan", "random-basis", "conjecture"}
GUARDS = (SizeCapError, ComponentTooLarge, CycleCountExceeded, BudgetExceeded)


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


# ---------------------------------------------------------------- flag parsing

def _lattice(text: str) -> Tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        w, h = int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"lattice must look like WxH, got {text!r}")
    if w < 1 or h < 1:
        raise argparse.ArgumentTypeError("lattice sides must be positive")
    return w, h


def _edge_list(text: str) -> List[Tuple[int, int]]:
    out = []
    for tok in text.replace(";", ",").split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            a, b = tok.split("-")
            out.append((int(a), int(b)))
        except ValueError:
            raise argparse.ArgumentTypeError(f"edges must look like 0-1,1-2; got {tok!r}")
    return out


def _floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _params(items: Sequence[str]) -> Dict[str, object]:
    out: Dict[str, object] = {}
    for item in items:
        if "=" not in item:
            raise CliError(f"--param expects KEY=VALUE, got {item!r}")
        key, val = item.split("=", 1)
        key = key.strip()
        if key == "defect_edges":
            out[key] = _edge_list(val)
            continue
        vals = _floats(val)
        out[key] = vals[0] if len(vals) == 1 else vals
    return out


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--model", choices=MODEL_NAMES)
    src.add_argument("--hamiltonian", metavar="FILE")
    common.add_argument("--lattice", type=_lattice, metavar="WxH")
    common.add_argument("--periodic", action="store_true")
    common.add_argument("--edges", type=_edge_list, metavar="I-J,...")
    common.add_argument("--N", dest="n", type=int)
    common.add_argument("--defects", type=int, default=0)
    common.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    common.add_argument("--beta", type=float)
    common.add_argument("--eta", type=float, default=1.0)
    common.add_argument("--qmax", type=int, default=200)
    common.add_argument("--Q", dest="Q", type=int)
    common.add_argument("--tol", type=float)
    common.add_argument("--sweeps", type=int, default=10000)
    common.add_argument("--thermalization", type=int, default=1000)
    common.add_argument("--seed", type=int)
    common.add_argument("--samples", type=int)
    common.add_argument("--chains", type=int, default=1)
    common.add_argument("--out", metavar="PATH")
    common.add_argument("--format", choices=("json", "csv"))

    parser = _Parser(prog="vgpdiag", description="Sign-problem diagnostics for Pauli Hamiltonians.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("describe", parents=[common], help="Pauli and permutation-matrix summary")
    sub.add_parser("diagnose", parents=[common], help="f_stoq, f_vgp, f_eta and witness")
    p = sub.add_parser("check", parents=[common], help="structural VGP classifier")
    p.add_argument("--method", choices=("auto", "dx", "triangle", "parity", "spectral"), default="auto")
    sub.add_parser("qmc", parents=[common], help="one QMC run, CSV row")
    p = sub.add_parser("scan", parents=[common], help="QMC over sizes and temperatures")
    p.add_argument("--sizes", type=_ints)
    p.add_argument("--betas", type=_floats)
    p.add_argument("--cycle-counts", action="store_true")
    p = sub.add_parser("random-basis", parents=[common], help="Haar-basis and random-Pauli statistics")
    p.add_argument("--sizes", type=_ints)
    p.add_argument("--pauli", action="store_true", help="random Pauli tuples instead of Haar bases")
    p.add_argument("--terms", type=int, default=3)
    p.add_argument("--coeffs", type=_floats)
    p = sub.add_parser("conjecture", parents=[common], help="optimise, rotate and tile unit cells")
    p.add_argument("--diagonal", action="store_true")
    p.add_argument("--tilings", type=lambda t: [_lattice(x) for x in t.split(",")])
    return parser


# ---------------------------------------------------------------- input

def _spec(args, n: Optional[int] = None) -> ModelSpec:
    return ModelSpec(args.model, n=args.n if n is None else n, lattice=args.lattice,
                     periodic=args.periodic, edges=args.edges,
                     params={"defects": args.defects, **_params(args.param)})


def _load(args, rng=None, n: Optional[int] = None) -> PauliSum:
    if args.hamiltonian:
        with open(args.hamiltonian, encoding="utf-8") as fh:
            return parse_hamiltonian(fh.read())
    if not args.model:
        raise CliError("give exactly one of --model or --hamiltonian")
    return build_model(_spec(args, n), rng)


def _model_rng(args):
    return seeded_rng(args.seed) if args.seed is not None else None


def _triangle_params(h: PauliSum):
    """Edge parameters (i, j, h0, h1, h2, h3) when h is an XX-type triangle, else None."""
    edges: Dict[Tuple[int, int], List[float]] = {}
    for t in h.terms:
        if t.x_mask == 0:
            continue
        sites = [s for s in range(h.n_spins) if (t.x_mask >> s) & 1]
        if len(sites) != 2 or t.z_mask & ~t.x_mask:
            return None
        i, j = sites
        slot = {0: 0, 1 << i: 1, 1 << j: 2, t.x_mask: 3}[t.z_mask]
        vals = edges.setdefault((i, j), [0.0, 0.0, 0.0, 0.0])
        vals[slot] = t.coeff if slot == 0 else -t.coeff
    sites = {s for e in edges for s in e}
    if len(edges) != 3 or len(sites) != 3:
        return None
    return [(i, j, *v) for (i, j), v in sorted(edges.items())]


# ---------------------------------------------------------------- commands

def cmd_describe(args):
    h = _load(args, _model_rng(args))
    p = pmr_decompose(h)
    out = {"N": h.n_spins, "terms": len(h), "hamiltonian": serialize_hamiltonian(h).splitlines(),
           "pmr": pmr_to_dict(p), "generators": [list(g) for g in fundamental_generators(p, 6)]}
    if h.n_spins <= DENSE_CAP:
        comps = all_components(lambda r: build_graph(p, r), h.n_spins)
        out["components"] = [{"root": int(g.component[0]), "size": len(g.component),
                              "edges": g.edge_count() // 2, "diameter": graph_diameter(g)}
                             for g in comps]
    return out, None


def cmd_diagnose(args):
    h = _load(args, _model_rng(args))
    rep = diagnose(h, args.eta, args.Q, VGP_TOL if args.tol is None else args.tol)
    out = rep.to_dict()
    out["N"] = h.n_spins
    out["cycles_checked"] = rep.cycles_checked
    return out, None


def cmd_check(args):
    tol = VGP_TOL if args.tol is None else args.tol
    rng = _model_rng(args)
    if args.method == "parity" or (args.method == "auto" and args.model == "tilde_heis"):
        if args.model != "tilde_heis":
            raise CliError("--method parity needs --model tilde_heis")
        return check_tilde_heis(_spec(args), rng, tol).to_dict(), None
    h = _load(args, rng)
    if args.method == "spectral":
        return check_spectral(h, tol).to_dict(), None
    tri = _triangle_params(h)
    if args.method == "triangle" or (args.method == "auto" and tri is not None):
        if tri is None:
            raise CliError("Hamiltonian is not a two-local XX-type triangle")
        return check_2local_triangle(tri, tol).to_dict(), None
    p = pmr_decompose(h)
    try:
        return check_dx_vgp(p).to_dict(), None
    except PreconditionError as err:
        if args.method == "dx":
            raise CliError(f"{err} (circuit {list(err.circuit)})")
        out = check_spectral(h, tol, {"precondition": str(err)}).to_dict()
        return out, None


def _require_seed(args):
    if args.seed is None:
        raise CliError(f"{args.command} is randomized and needs --seed")


def _qmc_config(args, beta: float) -> QmcConfig:
    return QmcConfig(beta=beta, sweeps=args.sweeps, thermalization=args.thermalization,
                     seed=args.seed, q_max=args.qmax)


def _scan_points(args, sizes: Sequence[Optional[int]], rng) -> List[ScanPoint]:
    pts = []
    for n in sizes:
        h = _load(args, rng, n)
        name = args.model or "hamiltonian"
        dense = to_dense(h) if h.n_spins <= DENSE_CAP else None
        pts.append(ScanPoint(name, h.n_spins, args.defects, pmr_decompose(h), dense))
    return pts


def cmd_qmc(args):
    _require_seed(args)
    if args.beta is None:
        raise CliError("qmc needs --beta")
    rng = seeded_rng(args.seed)
    rows = scan(_scan_points(args, [args.n], rng), [args.beta], _qmc_config(args, args.beta), args.chains)
    return rows, SCAN_COLUMNS


def cmd_scan(args):
    _require_seed(args)
    sizes = args.sizes or [args.n]
    betas = args.betas or ([args.beta] if args.beta is not None else None)
    if not betas:
        raise CliError("scan needs --betas or --beta")
    rng = seeded_rng(args.seed)
    rows = scan(_scan_points(args, sizes, rng), betas, _qmc_config(args, betas[0]), args.chains,
                cycle_counts=args.cycle_counts, Q=args.Q)
    return rows, SCAN_COLUMNS + (CYCLE_COLUMNS if args.cycle_counts else [])


def cmd_random_basis(args):
    _require_seed(args)
    rng = seeded_rng(args.seed)
    sizes = args.sizes or ([args.n] if args.n else [4, 6, 8])
    if args.pauli:
        coeffs = args.coeffs or [1.0] * args.terms
        rows = []
        for n in sizes:
            res = random_pauli_experiment(n, len(coeffs), coeffs, args.samples or 500, rng)
            rows.append({"N": n, "M": res.m, "trials": res.accepted, "rejected": res.rejected,
                         "formula": res.formula, "empirical": res.empirical_mean,
                         "stderr": res.stderr, "rel_error": res.rel_error})
        return rows, None
    fixtures = []
    for n in sizes:
        if args.model or args.hamiltonian:
            h = _load(args, rng, n)
        else:
            # default fixture: open Heisenberg chain with couplings in [0.5, 1.5]
            if n is None or n < 2:
                raise CliError("random-basis needs --N or --sizes")
            h = heisenberg_edges(n, [(i, i + 1) for i in range(n - 1)], rng.uniform(0.5, 1.5, n - 1))
        fixtures.append((h.n_spins, to_dense(h)))
    return random_basis_rows(fixtures, args.samples or 30, rng), RANDOM_BASIS_COLUMNS


def cmd_conjecture(args):
    _require_seed(args)
    rep = verify_conjecture(args.samples or 50, args.tilings or DEFAULT_TILINGS,
                            1e-8 if args.tol is None else args.tol, seeded_rng(args.seed),
                            diagonal=args.diagonal)
    return rep.to_dict(), None


HANDLERS = {"describe": cmd_describe, "diagnose": cmd_diagnose, "check": cmd_check, "qmc": cmd_qmc,
            "scan": cmd_scan, "random-basis": cmd_random_basis, "conjecture": cmd_conjecture}
TABULAR = {"qmc", "scan", "random-basis"}


def _fail(code: int, kind: str, err: BaseException) -> int:
    sys.stderr.write(json.dumps({"error": kind, "type": type(err).__name__, "reason": str(err)}) + "\n")
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        fmt = args.format or ("csv" if args.command in TABULAR else "json")
        report, columns = HANDLERS[args.command](args)
        emit_report(report, fmt, args.out, columns)
    except GUARDS as err:
        return _fail(2, "guard", err)
    except (CliError, argparse.ArgumentTypeError, ModelError, PreconditionError, QmcStall,
            ValueError, OSError) as err:
        return _fail(1, "validation", err)
    return 0


if __name__ == "__main__":
    sys.exit(main())
