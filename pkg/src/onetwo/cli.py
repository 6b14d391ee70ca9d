"""Command-line front end.

Every report carries the package version, the root seed, a hash of the
experiment spec and the arithmetic mode.  Randomness comes from streams
derived from the root seed by a fixed counter, so a spec and seed give
byte-identical output.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import random
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, analysis, blocks, chain, dimer, model, pfaffian, spatial
from .hexlattice import LatticeError, parse_lattice
from .model import GuardError, InadmissibleError, Weights

STREAMS = {"boundary": 0, "sample": 1, "couple": 2, "pairs": 3}


class SpecError(ValueError):
    pass


def stream(seed, name):
    return np.random.default_rng([int(seed), STREAMS[name]])


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, float) and x == float("inf"):
        return "inf"
    return x


DENSE_MEMORY_GUARD = 6000


def spec_hash(args):
    keep = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out")}
    blob = json.dumps(_jsonable(keep), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


# -- spec resolution ---------------------------------------------------------

def resolve_weights(args):
    if getattr(args, "a", None) is not None:
        w = Weights(Fraction(args.a), Fraction(args.b), Fraction(args.c))
    else:
        try:
            w = Weights.parse(args.weights)
        except (ValueError, ZeroDivisionError) as exc:
            raise SpecError(str(exc)) from exc
    return w.in_mode(args.mode)


def resolve_boundary(g, args):
    text = args.boundary
    if text == "random":
        rng = random.Random(int(stream(args.seed, "boundary").integers(2**31)))
        return model.random_boundary(g, rng)
    if text == "alternating":
        return model.alternating_boundary(g)
    path = Path(text)
    if not path.exists():
        raise SpecError(f"boundary {text!r} is neither 'random', 'alternating' nor a file")
    data = json.loads(path.read_text())
    edges = data["boundary"] if isinstance(data, dict) else data
    b = model.mask_from_edges(edges)
    if b & ~g.boundary_mask:
        raise SpecError("boundary file lists non-boundary edges")
    return b


def setup(args):
    try:
        g = parse_lattice(args.lattice)
    except LatticeError as exc:
        raise SpecError(str(exc)) from exc
    w = resolve_weights(args)
    b = resolve_boundary(g, args)
    return g, w, b


def space_for(g, b, args, dense=False):
    space = model.enumerate_states(g, b, max_free=args.max_free)
    if not space.admissible:
        raise InadmissibleError("boundary condition admits no configuration")
    if len(space) > args.max_states:
        raise GuardError(f"{len(space)} states exceed --max-states {args.max_states}")
    # dense float matrices and their eigensolve need about 4 copies of n^2 doubles
    if dense and len(space) > args.max_dense:
        raise GuardError(f"{len(space)} states exceed --max-dense {args.max_dense}")
    return space


def header(args):
    return {"version": __version__, "seed": args.seed, "spec_hash": spec_hash(args),
            "mode": args.mode, "command": args.command}


def emit(args, report, csv_rows=None, csv_name=None):
    report = {**header(args), **report}
    text = json.dumps(_jsonable(report), indent=2, sort_keys=True)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{args.command}.json").write_text(text + "\n")
        if csv_rows is not None:
            with open(out / csv_name, "w", newline="") as fh:
                csv.writer(fh).writerows(csv_rows)
    print(text)
    return 0 if report.get("ok", True) else 1


# -- subcommands ---------------------------------------------------------------

def cmd_enumerate(args):
    g, w, b = setup(args)
    space = space_for(g, b, args)
    z = model.partition_function(g, w, b, space)
    rep = {"lattice": args.lattice, "boundary": model.present_edges(b), "states": len(space),
           "partition_function": z}
    if args.list:
        rep["configurations"] = [model.present_edges(s) for s in space.states]
    return emit(args, rep)


def _block_kernel(g, w, b, args):
    _, k, n = g.shape
    if args.chain == "strip":
        bs = blocks.strip_blocks(k, n, args.ell, g)
    elif args.chain == "square":
        bs = blocks.square_blocks(n, args.ell, g)
    else:
        bs = blocks.whole_block(g)
    return blocks.BlockKernel(bs, w, b)


def _matrix(g, w, b, space, args):
    if args.chain == "single":
        return chain.transition_matrix(chain.Kernel(g, w, b), space)
    return blocks.block_matrix(_block_kernel(g, w, b, args), space)


def cmd_sample(args):
    g, w, b = setup(args)
    space = space_for(g, b, args)
    rng = stream(args.seed, "sample")
    s = space.states[0]
    rows = [("step", "state")]
    counts = {}
    if args.chain == "single":
        traj = chain.run(chain.Kernel(g, w, b), s, args.steps, rng)
    else:
        kern = _block_kernel(g, w, b, args)

        def gen(s=s):
            for _ in range(args.steps):
                s = blocks.block_step(kern, s, rng)
                yield s
        traj = gen()
    for t, s in enumerate(traj, start=1):
        counts[s] = counts.get(s, 0) + 1
        if t % args.thin == 0:
            rows.append((t, s))
    pi = model.measure(g, w, b, space, mode="float")
    emp = np.array([counts.get(x, 0) for x in space.states], dtype=float) / args.steps
    rep = {"steps": args.steps, "chain": args.chain, "states": len(space),
           "tv_to_stationary": analysis.tv(emp, pi), "final_state": model.present_edges(s)}
    return emit(args, rep, rows, "trajectory.csv")


def cmd_tmix(args):
    g, w, b = setup(args)
    space = space_for(g, b, args, dense=True)
    P = _matrix(g, w, b, space, args)
    pi = np.array(model.measure(g, w, b, space, mode="float"))
    rep = analysis.report(P, pi, args.eps, args.curve)
    lo, hi = rep["sandwich"]["lower"], rep["sandwich"]["upper"]
    rep["in_sandwich"] = lo - 1e-9 <= rep["t_mix"] <= hi + 1e-9
    rep["ok"] = rep["in_sandwich"]
    rows = None
    if args.curve:
        rows = [("t", "d")] + list(enumerate(rep["d_curve"]))
    rep.update(states=len(space), chain=args.chain, eps=args.eps)
    return emit(args, rep, rows, "d_curve.csv")


def cmd_gap(args):
    g, w, b = setup(args)
    space = space_for(g, b, args, dense=True)
    P = _matrix(g, w, b, space, args)
    pi = np.array(model.measure(g, w, b, space, mode="float"))
    gamma, gamma_star = analysis.spectral_gap(P, pi)
    return emit(args, {"states": len(space), "chain": args.chain, "gamma": gamma,
                       "gamma_star": gamma_star, "t_rel": 1 / gamma_star})


COMPARE_GUARD = 200_000


def comparison(g, w, b, space, kernel2):
    """Congestion of dimer-derived paths for the single-move chain against a
    block chain sharing its stationary law."""
    P = chain.transition_matrix(chain.Kernel(g, w, b), space)
    P2 = blocks.block_matrix(kernel2, space)
    pi = np.array(model.measure(g, w, b, space, mode="float"))
    pairs = [(i, j) for i, j in zip(*np.nonzero(P2)) if i != j]
    if len(pairs) > COMPARE_GUARD:
        raise GuardError(f"{len(pairs)} block transitions need canonical paths "
                         f"(limit {COMPARE_GUARD})")
    paths = dimer.canonical_paths(g, space, pairs)
    B = analysis.congestion_ratio(P, pi, P2, pi, paths)
    gamma, _ = analysis.spectral_gap(P, pi)
    gamma2, _ = analysis.spectral_gap(P2, pi)
    bound = analysis.comparison_bound(pi, pi, B, gamma)
    return {"congestion": B, "gamma_single": gamma, "gamma_block": gamma2,
            "bound": bound, "slack": bound - gamma2, "ok": gamma2 <= bound + 1e-9}


def cmd_compare(args):
    g, w, b = setup(args)
    space = space_for(g, b, args, dense=True)
    if args.chain == "single":
        args.chain = "whole"
    rep = comparison(g, w, b, space, _block_kernel(g, w, b, args))
    rep.update(states=len(space), block_chain=args.chain)
    return emit(args, rep)


def cmd_couple(args):
    g, w, b = setup(args)
    space = space_for(g, b, args, dense=True)
    if args.chain == "single":
        raise SpecError("couple needs a block chain (--chain strip|square|whole)")
    kern = _block_kernel(g, w, b, args)
    prng = stream(args.seed, "pairs")
    pairs = []
    for i in prng.permutation(len(space)):
        s = space.states[int(i)]
        for m in dimer.legal_moves(g, s):
            pairs.append((s, dimer.apply_move(g, s, m)))
            break
        if len(pairs) >= args.pairs:
            break
    est = blocks.contraction_estimate(kern, pairs, stream(args.seed, "couple"), args.trials)
    P2 = blocks.block_matrix(kern, space)
    pi = np.array(model.measure(g, w, b, space, mode="float"))
    _, gamma_star = analysis.spectral_gap(P2, pi)
    theta, se = est["mean_ratio"], est["stderr"]
    rep = {"states": len(space), "theta": theta, "stderr": se, "gamma_star": gamma_star,
           "pairs": est["pairs"], "trials": est["trials"],
           "contracts": theta + 3 * se < 1,
           "ok": gamma_star >= 1 - theta - 3 * se}
    return emit(args, rep)


def cmd_check_f(args):
    w = resolve_weights(args)
    if args.epsilon == "saw":
        eps = spatial.threshold_from_counts(spatial.saw_counts(args.kmax))
    else:
        eps = float(Fraction(args.epsilon))
    res = spatial.condition_F(args.n, w, eps, route=args.route, max_n=args.max_n)
    return emit(args, {**res.to_json(), "weights": list(w.as_tuple())})


def cmd_saw(args):
    counts = spatial.saw_counts(args.kmax, guard=args.guard)
    lo, hi = spatial.connective_estimate(counts)
    return emit(args, {"counts": counts, "lower_anchor": lo, "upper_anchor": hi,
                       "threshold": 1 / hi, "preset": str(spatial.THEOREM_PRESET)})


def cmd_pfaffian(args):
    pg = pfaffian.PlainGraph.from_json(json.loads(Path(args.graph).read_text()))
    res = pfaffian.pfaffian_count(pg, mode=args.mode)
    return emit(args, {"count": res.value, "odd": res.odd, "vertices": pg.n, "edges": len(pg.edges)})


# smallest-space boundary on the 2x2 box (1170 states)
BOX22_BOUNDARY = 134234274


def validate_checks():
    """Fast property checks on the H1 and 2x2 fixtures: (name, passed)."""
    from .hexlattice import build_box

    out = []
    h1 = build_box(1, 1)
    b22 = build_box(2, 2)
    fixtures = [(h1, model.alternating_boundary(h1)), (b22, BOX22_BOUNDARY)]
    for w in (Weights(1, 1, 1), Weights(1, 2, 3), Weights(9, 1, 1)):
        for g, b in fixtures:
            space = model.enumerate_states(g, b)
            kern = chain.Kernel(g, w, b)
            P = chain.transition_matrix(kern, space, "rational")
            pi = model.measure(g, w, b, space, mode="rational")
            n = len(space)
            ok = all(pi[i] * P[i][j] == pi[j] * P[j][i]
                     for i in range(n) for j in range(i + 1, n) if P[i][j] or P[j][i])
            out.append((f"detailed balance box{g.shape[1:]} {w.as_tuple()}", ok))
            Pf = np.array([[float(x) for x in row] for row in P])
            pif = np.array([float(x) for x in pi])
            t = analysis.mixing_time(Pf, pif)
            lo, hi = analysis.relaxation_bounds(Pf, pif)
            out.append((f"sandwich box{g.shape[1:]} {w.as_tuple()}", lo - 1e-9 <= t <= hi + 1e-9))
            out.append((f"laziness box{g.shape[1:]} {w.as_tuple()}", float(np.diag(Pf).min()) >= 0.5))
    g, b = fixtures[1]
    z_enum = model.partition_function(g, Weights(1, 2, 3), b)
    z_pf = pfaffian.partition_function(g, Weights(1, 2, 3), b)
    out.append(("pfaffian partition function box(2,2)", z_enum == z_pf))
    out.append(("saw nu_1, nu_2", spatial.saw_counts(2, engine="python") == [16, 240]))
    return out


def cmd_validate(args):
    checks = validate_checks()
    for name, ok in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name}", file=sys.stderr)
    ok = all(p for _, p in checks)
    return emit(args, {"checks": {n: p for n, p in checks}, "passed": sum(p for _, p in checks),
                       "total": len(checks), "ok": ok})


# -- parser --------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--lattice", default="box:1,1", help="box:k,n | square:n | cylinder:n,h")
    common.add_argument("--weights", default="1,1,1", help="a,b,c")
    common.add_argument("--boundary", default="random", help="random | alternating | JSON file")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--mode", choices=("float", "rational"), default="float")
    common.add_argument("--out", default=None, help="directory for JSON/CSV reports")
    common.add_argument("--max-states", type=int, default=chain.DENSE_GUARD)
    common.add_argument("--max-dense", type=int, default=DENSE_MEMORY_GUARD,
                        help="state limit for commands that build dense matrices")
    common.add_argument("--max-free", type=int, default=model.DEFAULT_MAX_FREE)
    common.add_argument("--chain", choices=("single", "strip", "square", "whole"), default="single")
    common.add_argument("--ell", type=int, default=2)

    p = argparse.ArgumentParser(prog="onetwo", description="1-2 model chains on hexagonal lattices")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("enumerate", parents=[common])
    s.add_argument("--list", action="store_true")
    s.set_defaults(func=cmd_enumerate)

    s = sub.add_parser("sample", parents=[common])
    s.add_argument("--steps", type=int, default=10_000)
    s.add_argument("--thin", type=int, default=1)
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("tmix", parents=[common])
    s.add_argument("--eps", type=float, default=0.25)
    s.add_argument("--curve", type=int, default=0, help="emit d(t) for t <= CURVE")
    s.set_defaults(func=cmd_tmix)

    s = sub.add_parser("gap", parents=[common])
    s.set_defaults(func=cmd_gap)

    s = sub.add_parser("compare", parents=[common])
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("couple", parents=[common])
    s.add_argument("--pairs", type=int, default=5)
    s.add_argument("--trials", type=int, default=10_000)
    s.set_defaults(func=cmd_couple)

    s = sub.add_parser("check-f", parents=[common])
    s.add_argument("--n", type=int, default=1)
    s.add_argument("--a", default=None)
    s.add_argument("--b", default=None)
    s.add_argument("--c", default=None)
    s.add_argument("--epsilon", default="1/15", help="a number or 'saw' for the SAW threshold")
    s.add_argument("--route", choices=("enumeration", "pfaffian"), default="enumeration")
    s.add_argument("--max-n", type=int, default=spatial.F_GUARD_N)
    s.add_argument("--kmax", type=int, default=8)
    s.set_defaults(func=cmd_check_f)

    s = sub.add_parser("saw", parents=[common])
    s.add_argument("--kmax", type=int, default=8)
    s.add_argument("--guard", type=int, default=spatial.SAW_GUARD)
    s.set_defaults(func=cmd_saw)

    s = sub.add_parser("pfaffian", parents=[common])
    s.add_argument("--graph", required=True, help="PlainGraph JSON file")
    s.set_defaults(func=cmd_pfaffian)

    s = sub.add_parser("validate", parents=[common])
    s.set_defaults(func=cmd_validate)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "check-f":
        given = [x is not None for x in (args.a, args.b, args.c)]
        if any(given) and not all(given):
            parser.error("--a, --b and --c go together")
    try:
        return args.func(args)
    except GuardError as exc:
        msg = str(exc)
        if not msg.startswith("desk-scale guard"):
            msg = f"desk-scale guard: {msg}"
        print(f"error: {msg}", file=sys.stderr)
        return 3
    except (SpecError, InadmissibleError, LatticeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
