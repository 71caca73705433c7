"""Command-line front end.

Subcommands write plain CSV (or JSON summaries) whose first lines are a
``#`` header with the tool version, the resolved configuration and the
seed.  A run is fully determined by that header; the worker count is left
out because it never changes the numbers.

Exit codes: 0 success, 1 a verified property failed, 2 invalid input.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import BoundParams, SeriesControl, lower_bound_B
from .drift import estimate_F, upper_bound_1d, upper_bound_d
from .jumps import JumpDistribution, ZeroDrift, nearest_neighbour_1d, parse_jumps
from .parallel import default_workers

EXIT_OK, EXIT_PROPERTY, EXIT_INPUT = 0, 1, 2


class InputError(ValueError):
    pass


# --------------------------------------------------------------------------
# parsing helpers

def parse_grid(text: str) -> list[float]:
    """``"0.1,0.2"`` or an inclusive range ``"start:stop:step"``."""
    text = text.strip()
    if not text:
        return []
    if ":" in text:
        parts = [float(t) for t in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise InputError(f"range {text!r} must be start:stop:step with step > 0")
        a, b, h = parts
        n = int(math.floor((b - a) / h + 1e-9)) + 1
        return [round(a + i * h, 12) for i in range(max(n, 0))]
    return [float(t) for t in text.split(",") if t.strip()]


def parse_ints(text: str) -> list[int]:
    return [int(v) for v in parse_grid(text)]


def read_config(path: str) -> list[str]:
    """key=value lines (``#`` comments) turned into ``--key value`` flags."""
    argv = []
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{n}: expected key=value, got {line!r}")
        k, v = (t.strip() for t in line.split("=", 1))
        argv += [f"--{k.replace('_', '-')}", v]
    return argv


def _jumps(args) -> JumpDistribution:
    if getattr(args, "jumps", None):
        return parse_jumps(args.jumps)
    if args.q is None:
        raise InputError("give either --q or --jumps")
    q = float(args.q)
    if not 0.0 <= q <= 1.0:
        raise InputError(f"q must lie in [0, 1], got {q}")
    return nearest_neighbour_1d(q)


def _check_lams(lams, allow_zero=False):
    if not lams:
        raise InputError("lambda grid is empty")
    for lam in lams:
        if not math.isfinite(lam) or lam < 0 or (lam == 0 and not allow_zero):
            raise InputError(f"lambda must be positive and finite, got {lam}")


def _positive(name, v):
    if v < 1:
        raise InputError(f"{name} must be >= 1, got {v}")


# --------------------------------------------------------------------------
# output

def header_lines(command: str, args) -> list[str]:
    cfg = {k: v for k, v in sorted(vars(args).items())
           if k not in ("func", "out", "config", "workers", "command")}
    lines = [f"# arwlab {__version__}", f"# command: {command}", f"# seed: {args.seed}"]
    lines += [f"# {k}={v}" for k, v in cfg.items() if k != "seed"]
    return lines


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def render_csv(command: str, args, columns, rows) -> str:
    buf = io.StringIO()
    for line in header_lines(command, args):
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def render_json(command: str, args, payload: dict) -> str:
    meta = {"tool": f"arwlab {__version__}", "command": command, "seed": args.seed,
            "config": {k: _jsonable(v) for k, v in sorted(vars(args).items())
                       if k not in ("func", "out", "config", "workers", "command")}}
    return json.dumps({"header": meta, **_jsonable(payload)}, indent=2, sort_keys=False) + "\n"


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if math.isfinite(f) else str(f)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def emit(text: str, out: str | None, default_stdout=True):
    if out is None or out == "-":
        if default_stdout:
            sys.stdout.write(text)
        return
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    Path(out).write_text(text)


def side_path(out: str | None, suffix: str) -> str | None:
    if out is None or out == "-":
        return None
    p = Path(out)
    return str(p.with_name(p.stem + suffix))


# --------------------------------------------------------------------------
# commands

def cmd_bound(args) -> int:
    lams = parse_grid(args.lam)
    qs = parse_grid(args.q)
    _check_lams(lams)
    if not qs:
        raise InputError("q grid is empty")
    for q in qs:
        if not 0.0 <= q <= 1.0:
            raise InputError(f"q must lie in [0, 1], got {q}")
    ctl = SeriesControl(tol=args.tol, max_k=args.max_k)
    rows = []
    for lam in lams:
        for q in qs:
            r = lower_bound_B(BoundParams(lam, q), ctl)
            rows.append((lam, q, r.B, r.terms, r.trunc_error))
    emit(render_csv("bound", args, ["lambda", "q", "B", "terms", "trunc_error"], rows), args.out)
    return EXIT_OK


def cmd_estimate_f(args) -> int:
    lams = parse_grid(args.lam)
    _check_lams(lams)
    _positive("horizon", args.horizon)
    _positive("trials", args.trials)
    p = _jumps(args)
    cols = ["lambda", "dist", "horizon", "trials", "F_lower", "F_upper", "se_lower", "se_upper",
            "bound_1d_lo", "bound_1d_hi"]
    if args.nu0 is not None:
        if not 0.0 <= args.nu0 <= 1.0:
            raise InputError(f"nu0 must lie in [0, 1], got {args.nu0}")
        cols += ["nu0", "bound_d_lo", "bound_d_hi"]
    rows = []
    for lam in lams:
        f = estimate_F(lam, p, args.horizon, args.trials, args.seed)
        b1 = upper_bound_1d(lam, p, f) if p.dim == 1 else (math.nan, math.nan)
        row = [lam, p.describe(), args.horizon, args.trials, f.lower, f.upper, f.se_lower, f.se_upper,
               b1[0], b1[1]]
        if args.nu0 is not None:
            bd = upper_bound_d(args.nu0, f)
            row += [args.nu0, bd.lo, bd.hi]
        rows.append(row)
    emit(render_csv("estimate-f", args, cols, rows), args.out)
    return EXIT_OK


def cmd_phase(args) -> int:
    from .experiments.initial import InitialLaw
    from .experiments.phase import PhaseRow, detect_crossing, phase_sweep
    lam = float(args.lam)
    _check_lams([lam])
    mus = parse_grid(args.mu)
    Ls = parse_ints(args.L)
    if not mus:
        raise InputError("mu grid is empty")
    if not Ls:
        raise InputError("L list is empty")
    for L in Ls:
        _positive("L", L)
    _positive("trials", args.trials)
    law0 = InitialLaw(args.law, 0.0)
    for mu in mus:
        law0.with_mu(mu)
    p = _jumps(args)
    if p.dim != 1:
        raise InputError("phase sweeps use a 1D jump distribution")
    tab = phase_sweep(law0, lam, p, mus, Ls, args.trials, args.seed, c=args.c, policy=args.policy,
                      workers=args.workers)
    emit(render_csv("phase", args, PhaseRow.FIELDS, [r.values() for r in tab.rows]), args.out)
    summary = phase_summary(tab, lam, p, args)
    js = render_json("phase", args, summary)
    if side_path(args.out, ".summary.json"):
        emit(js, side_path(args.out, ".summary.json"))
    elif args.out in (None, "-"):
        sys.stdout.write(js)
    return EXIT_OK


def analytic_bracket(lam: float, p: JumpDistribution, horizon: int, trials: int, seed: int) -> dict:
    """[B(lam, q), 1 - F] with F bracketed by Monte Carlo (1D nearest neighbour)."""
    offs = dict(zip(p.offsets, p.probs))
    q = offs.get((1,), 0.0)
    B = lower_bound_B(BoundParams(lam, q)).B if set(p.offsets) <= {(1,), (-1,)} else math.nan
    try:
        f = estimate_F(lam, p, horizon, trials, seed)
        ub = upper_bound_1d(lam, p, f)
        return {"B": B, "upper_lo": ub.lo, "upper_hi": ub.hi, "F_lower": f.lower, "F_upper": f.upper,
                "F_se": max(f.se_lower, f.se_upper)}
    except ZeroDrift:
        return {"B": B, "upper_lo": None, "upper_hi": None, "F_lower": None, "F_upper": None, "F_se": None}


def phase_summary(tab, lam, p, args) -> dict:
    from .experiments.phase import detect_crossing
    cr = detect_crossing(tab)
    br = analytic_bracket(lam, p, args.f_horizon, args.f_trials, args.seed)
    return {"crossing": cr["crossing"], "mu_stable": cr["mu_stable"], "mu_decay": cr["mu_decay"],
            "decaying": cr["decaying"], "bracket": [br["B"], br["upper_hi"]], "bracket_detail": br,
            "budget_failures": int(sum(r.budget_failures for r in tab.rows))}


def cmd_trapezoid(args) -> int:
    from .experiments.initial import InitialLaw
    from .experiments.trapezoid import geometry_for, trapezoid_stabilize
    from .rng import derive_seed
    _check_lams([args.lam], allow_zero=True)
    law = InitialLaw(args.law, args.mu)
    p = parse_jumps(args.jumps)
    if p.dim != 2:
        raise InputError("trapezoid runs need a 2D jump distribution")
    Ls = parse_ints(args.L)
    if not Ls:
        raise InputError("L list is empty")
    _positive("runs", args.runs)
    cols = ["L", "run", "G", "W", "R", "R_tilde", "S_hat", "identity_ok", "confinement_violations",
            "side_exits", "ghosts", "moved", "unfinished"]
    rows, per_L = [], {}
    for L in Ls:
        geom = geometry_for(p, L, args.g, args.K, pilot_seed=args.seed)
        res = [trapezoid_stabilize(law, args.lam, p, geom, derive_seed(args.seed, L, r)) for r in range(args.runs)]
        for r, x in enumerate(res):
            rows.append([L, r, x.G, x.W, x.R, x.R_tilde, x.S_hat, x.G == x.W - x.R,
                         x.confinement_violations, x.side_exits, x.ghosts, x.moved, x.unfinished])
        per_L[str(L)] = trapezoid_summary(res, law.mu, geom)
    emit(render_csv("trapezoid", args, cols, rows), args.out)
    js = render_json("trapezoid", args, {"per_L": per_L})
    if side_path(args.out, ".summary.json"):
        emit(js, side_path(args.out, ".summary.json"))
    bad = any(not v["identity_exact"] or v["confinement_violations"] for v in per_L.values())
    return EXIT_PROPERTY if bad else EXIT_OK


def _mean_ci(xs):
    xs = np.asarray(xs, dtype=float)
    n = len(xs)
    m = float(xs.mean())
    se = float(xs.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return m, se


def trapezoid_summary(res, mu, geom) -> dict:
    R = [x.R for x in res]
    Rt = [x.R_tilde for x in res]
    W = [x.W for x in res]
    S = [mu * x.S_hat for x in res]
    mR, seR = _mean_ci(R)
    mRt, seRt = _mean_ci(Rt)
    mW, seW = _mean_ci(W)
    mS, seS = _mean_ci(S)
    z = 1.959963984540054
    return {
        "runs": len(res), "K": geom.K, "g": geom.g,
        "identity_exact": all(x.G == x.W - x.R for x in res),
        "confinement_violations": int(sum(x.confinement_violations for x in res)),
        "side_exits": int(sum(x.side_exits for x in res)),
        "mean_R": mR, "se_R": seR, "mean_R_tilde": mRt, "se_R_tilde": seRt,
        "R_tilde_dominates": mRt + z * math.hypot(seR, seRt) >= mR,
        "mean_W": mW, "se_W": seW, "mu_S_hat": mS, "se_mu_S_hat": seS,
        "W_matches_oracle": abs(mW - mS) <= z * math.hypot(seW, seS),
        "mean_G": float(np.mean([x.G for x in res])),
    }


def cmd_verify(args) -> int:
    from .contracts import CorruptedTapes, contract_suite, oracle_suite
    _positive("instances-per-cell", args.instances_per_cell)
    wrapper = CorruptedTapes if args.corrupt_tapes else None
    con = contract_suite(args.seed, args.instances_per_cell, wrapper)
    orc = oracle_suite()
    lines = header_lines("verify", args) + con.lines() + orc.lines()
    ok = con.passed and orc.passed
    lines.append("ALL PASS" if ok else "FAILURES FOUND")
    text = "\n".join(lines) + "\n"
    emit(text, args.out)
    if args.out not in (None, "-"):
        sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_PROPERTY


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="arwlab", description="Activated random walk laboratory")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="output path ('-' or omitted: stdout)")
        p.add_argument("--config", default=None, help="key=value file; flags override it")
        p.add_argument("--workers", type=int, default=default_workers())

    b = sub.add_parser("bound", help="analytic lower bound B(lambda, q)")
    common(b)
    b.add_argument("--lam", default="1")
    b.add_argument("--q", default="0:1:0.05")
    b.add_argument("--tol", type=float, default=1e-12)
    b.add_argument("--max-k", type=int, default=10_000)
    b.set_defaults(func=cmd_bound)

    f = sub.add_parser("estimate-f", help="Monte Carlo bracket for F(lambda, p)")
    common(f)
    f.add_argument("--lam", default="1")
    f.add_argument("--q", default=None)
    f.add_argument("--jumps", default=None, help="e.g. '1@0.7;-1@0.3' or '1:0@0.5;0:1@0.5'")
    f.add_argument("--horizon", type=int, default=1000)
    f.add_argument("--trials", type=int, default=100_000)
    f.add_argument("--nu0", type=float, default=None)
    f.set_defaults(func=cmd_estimate_f)

    ph = sub.add_parser("phase", help="fixation/activity sweep and crossing estimate")
    common(ph)
    ph.add_argument("--lam", default="1")
    ph.add_argument("--q", default="1")
    ph.add_argument("--jumps", default=None)
    ph.add_argument("--mu", default="0.1:0.9:0.05")
    ph.add_argument("--L", default="250,500,1000")
    ph.add_argument("--trials", type=int, default=200)
    ph.add_argument("--law", default="bernoulli", choices=["bernoulli", "poisson"])
    ph.add_argument("--c", type=float, default=0.05)
    ph.add_argument("--policy", default="fifo", choices=["fifo", "lifo", "sweep", "random"])
    ph.add_argument("--f-horizon", type=int, default=1000)
    ph.add_argument("--f-trials", type=int, default=100_000)
    ph.set_defaults(func=cmd_phase)

    t = sub.add_parser("trapezoid", help="2D trapezoid construction with ghosts")
    common(t)
    t.add_argument("--lam", type=float, default=0.5)
    t.add_argument("--jumps", default="1:0@0.7;-1:0@0.1;0:1@0.1;0:-1@0.1")
    t.add_argument("--mu", type=float, default=0.5)
    t.add_argument("--law", default="bernoulli", choices=["bernoulli", "poisson"])
    t.add_argument("--L", default="50,100")
    t.add_argument("--runs", type=int, default=250)
    t.add_argument("--g", type=float, default=4.0)
    t.add_argument("--K", type=int, default=None, help="ball radius; default from a pilot run")
    t.set_defaults(func=cmd_trapezoid)

    v = sub.add_parser("verify", help="randomized contract and oracle suite")
    common(v)
    v.add_argument("--instances-per-cell", type=int, default=25)
    v.add_argument("--corrupt-tapes", action="store_true",
                   help="test hook: make tape reads non-deterministic (the suite must then fail)")
    v.set_defaults(func=cmd_verify)
    return ap


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        pre = argparse.ArgumentParser(add_help=False)
        pre.add_argument("--config", default=None)
        known, _ = pre.parse_known_args(argv)
        if known.config and argv:
            argv = argv[:1] + read_config(known.config) + argv[1:]
    except (OSError, InputError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INPUT
    try:
        return args.func(args)
    except (InputError, ZeroDrift, ValueError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
