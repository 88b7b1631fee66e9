#!/usr/bin/env python3
"""CLI entrypoint for the subspace gap toolkit.

Usage examples are in the project README. This script supports subcommands:
- `gap` to compute δ, δ̂, γ (and optionally d̂) for two subspaces of a space file
- `algebra` for sums, intersections, quotients, annihilators and containment
- `tetrad index|verify|witness` for Fredholm indices and their stability checks
- `split` to run the splitting construction M = L ⊕ V_k ⊕ U_{n−k}
- `reldim` for relative dimensions and their stability under perturbation
- `morse indices|cgap|annihilator|certify` for symmetric forms
- `family` to walk a one-parameter family and check its invariant is constant
- `generate` to write a seeded random instance with its ground-truth manifest

Exit codes: 0 all asserted conclusions hold, 1 a hypothesis gate failed,
2 a conclusion failed with certified hypotheses, 3 input or usage error.
"""
import argparse
import json
import logging
import sys

from gapgeom import storage
from gapgeom.config import DEFAULT_SPLIT_A, RunConfig
from gapgeom.errors import GapsError, InputError
from gapgeom.family import KINDS, PathSpec, step_halving_check, walk_family
from gapgeom.generate import GENERATE_KINDS, generate
from gapgeom.metrics import gap_report
from gapgeom.morse import (
    MORSE_VARIANTS,
    annihilator_gap_certificate,
    c_gap,
    form_metrics,
    verify_morse_stability,
)
from gapgeom.normed import Subspace, subspace_algebra
from gapgeom.reldim import relative_dim, semi_compact_witness, verify_reldim_stability
from gapgeom.splitting import split
from gapgeom.tetrad import Tetrad, two_point_witness, verify_tetrad_stability
from gapgeom.verdict import combine_exit_codes

logger = logging.getLogger("gaps")

STATUS = {0: "passed", 1: "gate-failed", 2: "contradiction", 3: "error"}


def _run_info(cfg: RunConfig) -> dict:
    return {
        "command": cfg.command,
        "inputs": list(cfg.inputs),
        "seed": cfg.seed,
        "budget": cfg.budget,
        "refine_steps": cfg.refine_steps,
        "rank_tol": cfg.rank_tol,
    }


def _tetrad(sf, names: str) -> Tetrad:
    parts = sf.pick(names)
    if len(parts) == 2:
        return Tetrad.pair(*parts)
    if len(parts) != 4:
        raise InputError(f"--tetrad takes Y1,M,N,Y2 or M,N; got {names!r}")
    return Tetrad.build(*parts)


def _form(sf, ref: str):
    """A form named in the space file's "forms", or a form file path."""
    forms = sf.extra.get("forms") or {}
    if ref in forms:
        return storage.parse_form(forms[ref], sf)
    return storage.load_form(ref, sf)


def _optional(sf, name):
    return sf.get(name) if name else None


def _describe_result(result):
    if isinstance(result, Subspace):
        return {"dim": result.dim, "ambient": result.space.describe(), "basis": storage.encode_array(result.basis.T)}
    return result


def cmd_gap(args, cfg):
    sf = storage.load_space(args.space, cfg.rank_tol)
    M, N = sf.get(args.m), sf.get(args.n)
    rep = gap_report(M, N, budget=cfg.budget, seed=cfg.seed, refine_steps=cfg.refine_steps, hausdorff=args.hausdorff)
    dh = rep.delta_hat
    print(f"delta_hat({args.m},{args.n}) in [{dh.lo:.6g}, {dh.hi:.6g}] ({dh.method})")
    return {"space": sf.space.describe(), "m": args.m, "n": args.n, "report": rep.to_dict()}, 0


def cmd_algebra(args, cfg):
    sf = storage.load_space(args.space, cfg.rank_tol)
    A = sf.get(args.a)
    B = _optional(sf, args.b)
    result = subspace_algebra(A, B, args.op)
    out = _describe_result(result)
    print(f"{args.op}({args.a}{',' + args.b if args.b else ''}) = {out['dim'] if isinstance(out, dict) else out}")
    return {"op": args.op, "a": args.a, "b": args.b, "result": out}, 0


def cmd_tetrad(args, cfg):
    sf = storage.load_space(args.space, cfg.rank_tol)
    if args.action == "witness":
        M, N, L = sf.pick([args.m, args.n, args.l])
        w = two_point_witness(M, N, L, args.wa, args.wb, cfg.plan)
        print(f"witness: {w.kind or 'not found'}")
        return {"witness": w.to_dict()}, 0

    t = _tetrad(sf, args.tetrad)
    if args.action == "index":
        print(f"Index = {t.index} (cap excess {t.cap_excess}, sum deficit {t.sum_deficit})")
        return {"tetrad": t.to_dict()}, 0

    if not args.perturbed:
        raise InputError("tetrad verify needs --perturbed")
    tp = _tetrad(sf, args.perturbed)
    v = verify_tetrad_stability(t, tp, args.variant, V=_optional(sf, args.complement), plan=cfg.plan)
    print(f"{v.name}: {v.status}")
    return {"tetrad": t.to_dict(), "perturbed": tp.to_dict(), "verdict": v.to_dict()}, v.exit_code


def cmd_split(args, cfg):
    sf = storage.load_space(args.space, cfg.rank_tol)
    L, S, N = sf.get(args.l), sf.get(args.s), sf.get(args.n)
    result = split(L, S, N, a=args.a, plan=cfg.plan, strict=args.strict)
    print(f"split: k = {result.k} ({result.label}); " + ", ".join(f"{c.name} {c.status}" for c in result.checks))
    return {"result": result.to_dict()}, result.exit_code


def cmd_reldim(args, cfg):
    sf = storage.load_space(args.space, cfg.rank_tol)
    M, N = sf.get(args.m), sf.get(args.n)
    if args.k:
        K = storage.load_operator(args.k, sf.space)
    elif "K" in sf.extra:
        K = storage.parse_operator(sf.extra["K"], sf.space)
    else:
        K = semi_compact_witness(M, N)
    rep = relative_dim(M, N, K)
    print(f"[{args.m}-{args.n}] = {rep.value}")
    report = {"m": args.m, "n": args.n, "relative_dim": rep.to_dict()}
    if not args.verify:
        return report, 0
    if not (args.mprime and args.nprime):
        raise InputError("--verify needs --mprime and --nprime")
    v = verify_reldim_stability(M, N, sf.get(args.mprime), sf.get(args.nprime), K1=rep.K_used,
                                variant=args.verify, plan=cfg.plan)
    print(f"{v.name}: {v.status}")
    report["verdict"] = v.to_dict()
    return report, v.exit_code


def cmd_morse(args, cfg):
    sf = storage.load_space(args.space, cfg.rank_tol)
    Q = _form(sf, args.q)
    if args.action == "indices":
        plus, minus, zero = Q.indices
        norm_q, _ = form_metrics(Q, cfg.plan, gamma=False)
        print(f"m+ = {plus}, m- = {minus}, m0 = {zero}")
        return {"form": Q.to_dict(), "norm": norm_q.to_dict()}, 0

    if not args.r:
        raise InputError(f"morse {args.action} needs --r")
    R = _form(sf, args.r)
    if args.action == "cgap":
        rep = c_gap(Q, R, args.c, cfg.plan)
        print(f"delta_c (c={args.c:g}) in [{rep.value.lo:.6g}, {rep.value.hi:.6g}]")
        return {"c_gap": rep.to_dict()}, 0

    if args.action == "annihilator":
        if not (args.alpha and args.beta):
            raise InputError("morse annihilator needs --alpha and --beta")
        v = annihilator_gap_certificate(Q, R, sf.get(args.alpha), sf.get(args.beta), args.c, args.h, cfg.plan)
    else:
        v = verify_morse_stability(Q, R, args.variant, h=args.h, c=args.c,
                                   V0=_optional(sf, args.v0), W0=_optional(sf, args.w0),
                                   alpha=_optional(sf, args.alpha), beta=_optional(sf, args.beta),
                                   plan=cfg.plan)
    print(f"{v.name}: {v.status}")
    return {"Q": Q.to_dict(), "R": R.to_dict(), "verdict": v.to_dict()}, v.exit_code


def cmd_family(args, cfg):
    spec = PathSpec.from_json(storage.read_json(args.path), cfg.rank_tol)
    trace = walk_family(spec, args.kind, cfg.plan)
    verdicts = [trace.verdict]
    report = {"trace": trace.to_dict()}
    if args.halving:
        h = step_halving_check(spec, cfg.plan.child("halving"))
        verdicts.append(h)
        report["halving"] = h.to_dict()
    if args.csv:
        path = storage.save_trace_csv(trace.rows(), args.csv)
        print(f"Saved trace -> {path}")
    print(f"{trace.verdict.name}: {trace.verdict.status}, values {sorted(set(trace.values))}")
    return report, combine_exit_codes(verdicts)


def cmd_generate(args, cfg):
    instance = generate(args.kind, cfg.seed, args.size, field=args.field, p=args.p, eps=args.eps)
    if cfg.out:
        path = storage.save_instance(instance, cfg.out)
        print(f"Saved {args.kind} instance -> {path}")
    else:
        print(json.dumps(instance, sort_keys=True, indent=2))
    return None, 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=lambda s: int(s, 0), default=None, help="Seed (default: $GAPS_SEED or 0)")
    common.add_argument("--budget", type=int, default=None, help="Sampling budget for non-Euclidean norms")
    common.add_argument("--refine-steps", dest="refine", type=int, default=None, help="Local refinement steps")
    common.add_argument("--rank-tol", type=float, default=None, help="Rank tolerance for dimension counts")
    common.add_argument("--out", default=None, help="Write the JSON report here")
    common.add_argument("--ledger", default=None, help="Append a summary row to this CSV")
    common.add_argument("-v", "--verbose", action="store_true", help="Debug logging on stderr")

    p = argparse.ArgumentParser(description="Subspace gap geometry: gaps, indices and stability certificates")
    sub = p.add_subparsers(dest="cmd")

    gp = sub.add_parser("gap", parents=[common], help="Gap, minimum gap and Hausdorff distance")
    gp.add_argument("--space", required=True, help="Space file (JSON)")
    gp.add_argument("--m", required=True, help="Name of M")
    gp.add_argument("--n", required=True, help="Name of N")
    gp.add_argument("--hausdorff", action="store_true", help="Also compute the Hausdorff distance")
    gp.set_defaults(func=cmd_gap)

    ap = sub.add_parser("algebra", parents=[common], help="Subspace algebra")
    ap.add_argument("--space", required=True)
    ap.add_argument("--a", required=True, help="Name of A")
    ap.add_argument("--b", default=None, help="Name of B (not needed for annihilator)")
    ap.add_argument("--op", required=True, choices=["sum", "intersection", "quotient_dim", "annihilator", "contains"])
    ap.set_defaults(func=cmd_algebra)

    tp = sub.add_parser("tetrad", help="Fredholm tetrads")
    tsub = tp.add_subparsers(dest="action", required=True)
    for action in ("index", "verify", "witness"):
        ta = tsub.add_parser(action, parents=[common])
        ta.add_argument("--space", required=True)
        ta.set_defaults(func=cmd_tetrad, action=action)
        if action == "witness":
            ta.add_argument("--m", required=True)
            ta.add_argument("--n", required=True)
            ta.add_argument("--l", required=True, help="Proper subspace L of M")
            ta.add_argument("--wa", type=float, required=True, help="Bound a")
            ta.add_argument("--wb", type=float, required=True, help="Bound b")
            continue
        ta.add_argument("--tetrad", required=True, help="Y1,M,N,Y2 (or M,N for a pair)")
        if action == "verify":
            ta.add_argument("--perturbed", required=True, help="Y1p,Mp,Np,Y2p")
            ta.add_argument("--variant", default="1.2c", help="1.1a, 1.2c, 1.2d(m), finite-ext-a, ...")
            ta.add_argument("--complement", default=None, help="Name of V for finite-ext variants")

    sp = sub.add_parser("split", parents=[common], help="Splitting construction")
    sp.add_argument("--space", required=True)
    sp.add_argument("--l", required=True)
    sp.add_argument("--s", required=True)
    sp.add_argument("--n", required=True)
    sp.add_argument("--a", type=float, default=DEFAULT_SPLIT_A, help="Constant a in (0, sqrt(2)-1)")
    sp.add_argument("--strict", action="store_true", help="Fail on the first uncertified gate")
    sp.set_defaults(func=cmd_split)

    rp = sub.add_parser("reldim", parents=[common], help="Relative dimension [M-N]")
    rp.add_argument("--space", required=True)
    rp.add_argument("--m", required=True)
    rp.add_argument("--n", required=True)
    rp.add_argument("--k", default=None, help="Operator file for K (default: file's K, else P_N - I)")
    rp.add_argument("--verify", default=None, help="1.4c(m), 1.4d or 1.4e")
    rp.add_argument("--mprime", default=None)
    rp.add_argument("--nprime", default=None)
    rp.set_defaults(func=cmd_reldim)

    mp = sub.add_parser("morse", help="Symmetric forms")
    msub = mp.add_subparsers(dest="action", required=True)
    for action in ("indices", "cgap", "annihilator", "certify"):
        ma = msub.add_parser(action, parents=[common])
        ma.add_argument("--space", required=True)
        ma.add_argument("--q", required=True, help="Form file, or a name under the space file's forms")
        ma.add_argument("--r", default=None)
        ma.add_argument("--c", type=float, default=0.0)
        ma.add_argument("--h", type=int, default=1, choices=[1, -1])
        ma.add_argument("--variant", default="thm1.6", choices=list(MORSE_VARIANTS))
        ma.add_argument("--v0", default=None)
        ma.add_argument("--w0", default=None)
        ma.add_argument("--alpha", default=None)
        ma.add_argument("--beta", default=None)
        ma.set_defaults(func=cmd_morse, action=action)

    fp = sub.add_parser("family", parents=[common], help="Walk a one-parameter family")
    fp.add_argument("--path", required=True, help="Path file (JSON)")
    fp.add_argument("--kind", default="tetrad-index", choices=list(KINDS))
    fp.add_argument("--csv", default=None, help="Also export the trace as CSV")
    fp.add_argument("--halving", action="store_true", help="Run the step-halving continuity check")
    fp.set_defaults(func=cmd_family)

    gen = sub.add_parser("generate", parents=[common], help="Seeded random instance")
    gen.add_argument("--kind", required=True, choices=list(GENERATE_KINDS))
    gen.add_argument("--size", type=int, required=True, help="Ambient dimension")
    gen.add_argument("--field", default="real", choices=["real", "complex"])
    gen.add_argument("--p", default="2", help="Norm exponent (number or inf)")
    gen.add_argument("--eps", type=float, default=None, help="Perturbation size for primed copies")
    gen.set_defaults(func=cmd_generate)
    return p


def _setup_logging(verbose: bool):
    level = logging.DEBUG if verbose else logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    logging.getLogger().setLevel(level)


def main(argv=None) -> int:
    p = build_parser()
    try:
        args = p.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 3
    if not getattr(args, "cmd", None):
        p.print_help()
        return 3
    _setup_logging(args.verbose)

    cfg = None
    try:
        cfg = RunConfig.from_args(args)
        report, code = args.func(args, cfg)
    except GapsError as e:
        logger.error("%s", e)
        print(f"error: {e}", file=sys.stderr)
        report, code = {"error": str(e), "error_type": type(e).__name__}, e.exit_code
        verdict = getattr(e, "verdict", None)
        if verdict is not None:
            report["verdict"] = verdict.to_dict()

    if report is not None and cfg is not None:
        report = {**report, "run": _run_info(cfg), "exit_code": code, "status": STATUS[code]}
        if cfg.out:
            path = storage.save_report(report, cfg.out)
            print(f"Saved verdict -> {path}")
    if cfg is not None and cfg.ledger:
        storage.append_verdict_row({
            "command": cfg.command + (f" {args.action}" if getattr(args, "action", None) else ""),
            "status": STATUS[code],
            "exit_code": code,
            "seed": cfg.seed,
            "out": cfg.out or "",
        }, cfg.ledger)
    return code


if __name__ == "__main__":
    sys.exit(main())
