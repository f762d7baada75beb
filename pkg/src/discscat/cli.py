"""Command-line front end: forward, inverse, roundtrip and verify.

Exit codes: 0 success, 1 a checked invariant or tolerance failed, 2 invalid
input, 3 numerical failure.
"""
import argparse
import math
import os
import sys
from dataclasses import replace

import numpy as np

from . import io
from .errors import InvalidProblem, NonpositiveNorm, NumericalError, ValidationError
from .jost import jost_solution, wronskian
from .kernel import f0s_transform, f_eval
from .marchenko import (inverse_scattering, jump_consistency, kernel_difference, roundtrip,
                        solve_kernel_family)
from .scattering import forward_run, s_zero

WORKERS_ENV = "DISCSCAT_WORKERS"
EXIT_OK, EXIT_INVARIANT, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2, 3

WRONSKIAN_LAMBDAS = (0.5, 1.0, 2.0, 5.0, 10.0)
WRONSKIAN_TOL = 1e-6
SYMMETRY_TOL = 1e-8
SIMPLICITY_TOL = 1e-6
CANCEL_REL_TOL = 1e-5
CANCEL_ABS_TOL = 1e-8
DECAY_RATIO = 0.1
REFINE_SLACK = 1e-3
ZERO_TARGET_TOL = 1e-3


def default_workers():
    raw = os.environ.get(WORKERS_ENV, "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _apply_overrides(cfg, args):
    kw = {"workers": args.workers}
    if args.hx is not None:
        kw["h_x"] = args.hx
    if args.lambda_max is not None:
        kw["lambda_max"] = args.lambda_max
    if args.n_lambda is not None:
        kw["n_lambda"] = args.n_lambda
    if args.ymax is not None:
        kw["y_max"] = args.ymax
    return replace(cfg, **kw)


def _out(args, name):
    return os.path.join(args.out_dir, name)


def _check(name, value, threshold, passed=None, **extra):
    ok = bool(value < threshold) if passed is None else bool(passed)
    return {"name": name, "passed": ok, "value": value, "threshold": threshold, **extra}


# ---------------------------------------------------------------- forward

def cmd_forward(args):
    prob = io.load_problem(args.input, args.degenerate_alpha_ok)
    p, c, q = prob.density, prob.boundary, prob.potential
    cfg = _apply_overrides(prob.numerics, args).resolve(p, q)
    fr = forward_run(p, q, c, cfg)
    sd = fr.data
    doc = io.scattering_to_json(sd, p, c)
    doc["numerics"] = {"x_max": cfg.x_max, "h_x": cfg.h_x, "y_max": cfg.y_max}
    io.write_json(_out(args, "scattering.json"), doc)
    lam = sd.lambda_grid
    io.write_csv(_out(args, "scattering.csv"), ["lambda", "Re S", "Im S", "|S - S0|"],
                 [lam, sd.s_values.real, sd.s_values.imag, np.abs(sd.s_values - s_zero(p, c, lam))])
    print(f"forward: {lam.size} samples, bound states {list(sd.bound_states)}")
    return EXIT_OK


# ---------------------------------------------------------------- inverse

def _inverse_config(obj, args, p, sd):
    cfg = io.numerics_from_json(obj.get("numerics"))
    cfg = _apply_overrides(cfg, args)
    lam = sd.lambda_grid
    cfg = replace(cfg, lambda_max=float(np.max(np.abs(lam))), n_lambda=int(lam.size))
    return cfg.resolve(p, None)


def _kernel_outputs(args, kt):
    io.write_csv(_out(args, "cond.csv"), ["x", "cond"], [kt.x_nodes, kt.condition_numbers])
    if args.dump_kernel:
        kt.write_csv(_out(args, "kernel.csv"))


def cmd_inverse(args):
    obj = io.read_json(args.input)
    p = io.density_from_json(io._require(obj, "density", "scattering file"), args.degenerate_alpha_ok)
    c = io.boundary_from_json(io._require(obj, "boundary", "scattering file"))
    sd = io.scattering_from_json(obj)
    cfg = _inverse_config(obj, args, p, sd)
    q_rec, kt, tt = inverse_scattering(sd, p, c, cfg)
    jr = 0.0 if p.degenerate else jump_consistency(kt, q_rec, p, cfg)
    cfg2 = replace(cfg, h_x=cfg.h_x / 2.0)
    kt2 = solve_kernel_family(f0s_transform(sd, p, c, cfg2), p, cfg2)
    delta = kernel_difference(kt, kt2)
    io.write_csv(_out(args, "q_rec.csv"), ["x", "q_rec"], [q_rec.grid, q_rec.values])
    _kernel_outputs(args, kt)
    conds = kt.condition_numbers
    report = {"jump_residual": jr, "max_condition": float(np.max(conds)),
              "worst_condition_x": float(kt.x_nodes[int(np.argmax(conds))]),
              "condition_numbers": conds, "refinement_delta": delta,
              "singular_jumps": {"points": tt.jump_points, "sizes": tt.jump_sizes}}
    io.write_json(_out(args, "report.json"), report)
    print(f"inverse: max|q_rec| = {np.max(np.abs(q_rec.values)):.6g}, jump residual {jr:.3e}, "
          f"refinement delta {delta:.3e}")
    return EXIT_OK


# ---------------------------------------------------------------- roundtrip

def roundtrip_checks(rep, q, tol):
    d = rep.as_dict()
    zero = q.is_zero
    sup_tol = ZERO_TARGET_TOL if zero else tol["sup_error"]
    l1_tol = ZERO_TARGET_TOL if zero else tol["l1_error"]
    checks = [
        _check("sup_error", d["sup_error"], sup_tol, relative=not zero),
        _check("l1_error", d["l1_error"], l1_tol, relative=not zero),
        _check("jump_residual", d["jump_residual"], tol["jump_residual"]),
        _check("max_condition", d["max_condition"], tol["max_condition"]),
        _check("refinement_delta", d["refinement_delta"], tol["refinement_delta"]),
    ]
    if "refined_sup_error" in d:
        for key in ("sup_error", "l1_error"):
            coarse, fine = d[key], d[f"refined_{key}"]
            checks.append(_check(f"refined_{key}_non_increasing", fine - coarse, REFINE_SLACK,
                                 passed=fine <= coarse + REFINE_SLACK, coarse=coarse, refined=fine,
                                 strictly_decreased=fine < coarse))
    return checks


def cmd_roundtrip(args):
    prob = io.load_problem(args.input, args.degenerate_alpha_ok)
    p, c, q = prob.density, prob.boundary, prob.potential
    cfg = _apply_overrides(prob.numerics, args)
    rep = roundtrip(p, c, q, cfg, refine=True)
    checks = roundtrip_checks(rep, q, prob.tolerances)
    x = rep.q_rec.grid
    io.write_csv(_out(args, "q.csv"), ["x", "q", "q_rec"], [x, q(x), rep.q_rec.values])
    io.write_csv(_out(args, "cond.csv"), ["x", "cond"], [x, rep.condition_numbers])
    ok = all(ch["passed"] for ch in checks)
    io.write_json(_out(args, "report.json"), {**rep.as_dict(), "checks": checks, "passed": ok})
    for ch in checks:
        print(f"{'PASS' if ch['passed'] else 'FAIL'} {ch['name']}: {ch['value']:.6g} (< {ch['threshold']:g})")
    return EXIT_OK if ok else EXIT_INVARIANT


# ---------------------------------------------------------------- verify

def _decay_check(p, c, sd):
    """|S - S0| at the grid edge against its value near |lambda| = 1/a."""
    lam = sd.lambda_grid
    diff = np.abs(sd.s_values - s_zero(p, c, lam))
    edge = float(max(diff[0], diff[-1]))
    k = int(np.argmin(np.abs(np.abs(lam) - 1.0 / p.a)))
    mid = float(diff[k])
    floor_ = SYMMETRY_TOL
    if mid <= floor_:
        return _check("s_minus_s0_decay", edge, floor_, edge=edge, near_inverse_a=mid)
    return _check("s_minus_s0_decay", edge / mid, DECAY_RATIO, edge=edge, near_inverse_a=mid)


def cancellation_residual(tt, p, cfg, x_stride=5):
    """sup |F(x, y)| over x grid nodes and lattice y > mu+(x) kept inside the table,
    with max |F0(t)| over t >= 2 mu+(0) for scale."""
    h = cfg.h_x
    worst = 0.0
    for x in cfg.x_grid()[::x_stride]:
        mp, mm = (float(v) for v in p.mu_pm(x))
        n = int((tt.t_end - mp - max(mp, mm)) / h)
        if n < 2:
            continue
        y = mp + h * np.arange(1, n)
        worst = max(worst, float(np.max(np.abs(f_eval(tt, p, x, y)))))
    sel = tt.t_grid >= 2.0 * float(p.mu_pm(0.0)[0]) - 1e-9 * h
    scale = float(np.max(np.abs(tt.f0_values[sel])))
    return worst, scale


def verify_problem(prob, cfg):
    p, c, q = prob.density, prob.boundary, prob.potential
    checks = []
    for lam in WRONSKIAN_LAMBDAS:
        js = jost_solution(p, q, lam, cfg)
        w = wronskian(js)
        r = float(np.max(np.abs(w - 2j * lam)) / abs(2j * lam))
        checks.append(_check(f"wronskian_lambda_{lam:g}", r, WRONSKIAN_TOL))
    try:
        fr = forward_run(p, q, c, cfg, count_zeros=True)
    except NonpositiveNorm as err:
        checks.append(_check("norming_positive", math.nan, 0.0, passed=False, message=str(err)))
        return checks
    sd = fr.data
    checks.append(_check("s_symmetry", sd.symmetry_residual(), SYMMETRY_TOL))
    E = fr.E
    e_res = float(np.max(np.abs(np.conj(E) - E[::-1])) / np.max(np.abs(E)))
    checks.append(_check("e_symmetry", e_res, SYMMETRY_TOL))
    emin = float(np.min(np.abs(E)))
    checks.append(_check("e_nonzero_real_axis", emin, cfg.root_tol, passed=emin > cfg.root_tol))
    nb = len(fr.bound)
    checks.append(_check("zero_count", abs(nb - fr.zero_count), 1, passed=nb == fr.zero_count,
                         bisection=nb, argument_principle=fr.zero_count))
    slopes = [abs(b.dE_dmu) for b in fr.bound]
    smin = min(slopes) if slopes else math.inf
    checks.append(_check("zero_simplicity", smin, SIMPLICITY_TOL, passed=smin > SIMPLICITY_TOL))
    inv_m2 = [1.0 / b.m_k ** 2 for b in fr.bound]
    checks.append(_check("norming_positive", min(inv_m2) if inv_m2 else math.inf, 0.0,
                         passed=all(v > 0 for v in inv_m2)))
    checks.append(_decay_check(p, c, sd))
    if q.is_zero:
        tt = f0s_transform(sd, p, c, cfg)
        worst, scale = cancellation_residual(tt, p, cfg)
        ok = worst < CANCEL_ABS_TOL or worst < CANCEL_REL_TOL * scale
        checks.append(_check("zero_potential_cancellation", worst, max(CANCEL_ABS_TOL, CANCEL_REL_TOL * scale),
                             passed=ok, max_abs_f0=scale))
    return checks


def verify_scattering(obj, degenerate_ok):
    p = io.density_from_json(io._require(obj, "density", "scattering file"), degenerate_ok)
    c = io.boundary_from_json(io._require(obj, "boundary", "scattering file"))
    sd = io.scattering_from_json(obj)
    checks = [_check("s_symmetry", sd.symmetry_residual(), SYMMETRY_TOL)]
    m = sd.norming
    checks.append(_check("norming_positive", float(np.min(m)) if m.size else math.inf, 0.0,
                         passed=bool(np.all(m > 0))))
    checks.append(_decay_check(p, c, sd))
    return checks


def cmd_verify(args):
    obj = io.read_json(args.input)
    if isinstance(obj, dict) and "lambda_grid" in obj:
        checks = verify_scattering(obj, args.degenerate_alpha_ok)
    else:
        prob = io.problem_from_json(obj, args.degenerate_alpha_ok)
        cfg = _apply_overrides(prob.numerics, args).resolve(prob.density, prob.potential)
        checks = verify_problem(prob, cfg)
    ok = all(ch["passed"] for ch in checks)
    io.write_json(_out(args, "verification.json"), {"checks": checks, "passed": ok})
    for ch in checks:
        print(f"{'PASS' if ch['passed'] else 'FAIL'} {ch['name']}: {ch['value']:.6g}")
    return EXIT_OK if ok else EXIT_INVARIANT


# ---------------------------------------------------------------- parser

COMMANDS = {"forward": cmd_forward, "inverse": cmd_inverse, "roundtrip": cmd_roundtrip,
            "verify": cmd_verify}


def build_parser():
    ap = argparse.ArgumentParser(prog="discscat",
                                 description="Direct and inverse scattering for a half-line "
                                             "problem with a density jump.")
    sub = ap.add_subparsers(dest="command", required=True)
    helps = {"forward": "problem.json -> scattering.json, scattering.csv",
             "inverse": "scattering.json -> q_rec.csv, cond.csv, report.json",
             "roundtrip": "problem.json -> report.json, q.csv, cond.csv",
             "verify": "problem.json or scattering.json -> verification.json"}
    for name in COMMANDS:
        sp = sub.add_parser(name, help=helps[name])
        sp.add_argument("--input", required=True, help="input JSON file")
        sp.add_argument("--out-dir", default=".", help="output directory (created if missing)")
        sp.add_argument("--workers", type=int, default=default_workers(),
                        help=f"worker threads (default from ${WORKERS_ENV}, else 1)")
        sp.add_argument("--hx", type=float, default=None, help="spatial step h_x (must divide a)")
        sp.add_argument("--lambda-max", type=float, default=None, help="lambda grid half-width")
        sp.add_argument("--n-lambda", type=int, default=None, help="number of lambda samples (even)")
        sp.add_argument("--ymax", type=float, default=None, help="upper y truncation")
        sp.add_argument("--degenerate-alpha-ok", action="store_true",
                        help="allow alpha = 1 (validation mode without a density jump)")
        sp.add_argument("--dump-kernel", action="store_true", help="write the full (x, y, K) table")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.workers < 1:
            raise InvalidProblem("InvalidProblem: --workers must be >= 1")
        if not os.path.exists(args.input):
            raise InvalidProblem(f"InvalidProblem: input file {args.input} does not exist")
        os.makedirs(args.out_dir, exist_ok=True)
        return COMMANDS[args.command](args)
    except ValidationError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
