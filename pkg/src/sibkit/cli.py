"""Command-line entry point: ``sibkit <command> ...``.

Exit codes: 0 success, 1 usage or input error, 2 numerical failure
(non-convergence under ``--strict``).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import models, oracle, regions, sibsolver
from .models import (
    BinaryCascadeParams,
    GaussianCascadeParams,
    ModelError,
    SourceModel,
)
from .probcore import LabelError, StochasticityError, cond_entropy

log = logging.getLogger("sibkit")

SOLVER_COLUMNS = ["beta", "gamma", "restart", "converged", "iters",
                  "rate_bits", "dprime_bits", "leakage_bits"]
BOUND_COLUMNS = ["rate_bits", "distortion", "leakage_bits", "provenance"]
MERGE_COLUMNS = ["step", "merged_i", "merged_j", "card_v", "rate_bits", "dprime_bits",
                 "leakage_bits"]
LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- parsing helpers -------------------------------------------------------------

def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"not a number list: {text!r}") from None


def parse_beta_grid(text: str) -> list[float]:
    """``lo:hi:n`` log-spaced, or a comma list. ``0:0:1`` gives [0]."""
    if ":" not in text:
        return _floats(text)
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"grid must be lo:hi:n, got {text!r}")
    lo, hi = _floats(parts[0])[0], _floats(parts[1])[0]
    try:
        n = int(parts[2])
    except ValueError:
        raise UsageError(f"grid size must be an integer, got {parts[2]!r}") from None
    if n < 1:
        raise UsageError("grid size must be positive")
    if n == 1:
        return [lo]
    if lo <= 0 or hi <= 0:
        raise UsageError("log-spaced beta grid needs lo, hi > 0")
    return np.geomspace(lo, hi, n).tolist()


def parse_linear_grid(text: str) -> list[float]:
    """``lo:hi:n`` evenly spaced, or a comma list."""
    if ":" not in text:
        return _floats(text)
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"grid must be lo:hi:n, got {text!r}")
    lo, hi = _floats(parts[0])[0], _floats(parts[1])[0]
    try:
        n = int(parts[2])
    except ValueError:
        raise UsageError(f"grid size must be an integer, got {parts[2]!r}") from None
    if n < 1:
        raise UsageError("grid size must be positive")
    return [lo] if n == 1 else np.linspace(lo, hi, n).tolist()


def load_source(spec: str) -> SourceModel:
    """A model file path, ``binary:P,Q`` or ``gaussian:NX,NS,NP[,BINS]``."""
    if spec.startswith("binary:"):
        vals = _floats(spec.split(":", 1)[1])
        if len(vals) != 2:
            raise UsageError("binary model needs P,Q")
        return models.binary_cascade(BinaryCascadeParams(*vals))
    if spec.startswith("gaussian:"):
        vals = _floats(spec.split(":", 1)[1])
        if len(vals) not in (3, 4):
            raise UsageError("gaussian model needs NX,NS,NP[,BINS]")
        bins = int(vals[3]) if len(vals) == 4 else 64
        return models.gaussian_cascade_discretized(GaussianCascadeParams(*vals[:3]), bins)
    return models.load_model(spec)


# -- output ----------------------------------------------------------------------

def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".12g")
    return str(value)


def _json_value(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return float(format(v, ".12g")) if math.isfinite(v) else fmt(v)
    return value


def emit(columns: Sequence[str], rows: Sequence[Sequence], fmt_name: str, out: Optional[str]):
    if not rows:
        raise UsageError("nothing to write")
    if fmt_name == "json":
        doc = [{c: _json_value(v) for c, v in zip(columns, r)} for r in rows]
        text = json.dumps(doc, indent=1) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([fmt(v) for v in r])
        text = buf.getvalue()
    if out:
        try:
            Path(out).write_text(text)
        except OSError as exc:
            raise UsageError(f"cannot write {out}: {exc}") from exc
    else:
        sys.stdout.write(text)


def _bound_row(point: regions.TradeoffPoint):
    return [point.rate, point.payload, point.leakage, point.provenance]


# -- commands ---------------------------------------------------------------------

def cmd_model(args) -> int:
    if args.kind == "binary":
        model = models.binary_cascade(BinaryCascadeParams(args.p, args.q))
    elif args.kind == "gaussian":
        model = models.gaussian_cascade_discretized(
            GaussianCascadeParams(args.nx, args.ns, args.np), args.bins, args.span)
    else:
        if not args.path:
            raise UsageError("model file needs a path")
        model = models.load_model(args.path)
    text = models.dump_json(models.model_to_json(model), args.out)
    if not args.out:
        sys.stdout.write(text + "\n")
    return 0


def _aux(args) -> regions.AuxiliaryChoice:
    def ch(path):
        return models.load_channel(path) if path else None
    return regions.AuxiliaryChoice(ch_V=ch(args.ch_v), ch_U=ch(args.ch_u),
                                   ch_TV=ch(args.ch_tv), g=ch(args.g))


def _distortion(model: SourceModel, aux: regions.AuxiliaryChoice, loss: str) -> float:
    ch_v = aux.v_channel()
    if loss == "logloss":
        q = aux.g or regions.posterior_reconstruction(model, ch_v)
        joint = regions.extended_joint(model, aux)
        return regions.logloss_distortion(joint, q)
    g = aux.g or regions.map_reconstruction(model, ch_v)
    nyp = model.joint.label("Yp").cardinality
    return regions.inner_distortion(model, regions.AuxiliaryChoice(
        ch_V=ch_v, ch_U=aux.ch_U, g=g), regions.hamming_loss(nyp, g.output.cardinality))


def _print_terms(terms: dict):
    log.debug("leakage terms: %s", terms)
    sys.stderr.write(json.dumps({k: float(format(v, ".12g")) for k, v in terms.items()}) + "\n")


def cmd_region(args) -> int:
    model = load_source(args.model)
    if args.kind == "lossless":
        ch_u = models.load_channel(args.ch_u) if args.ch_u else None
        rate, leak = regions.lossless_inner(model, ch_u)
        point = regions.TradeoffPoint(rate, 0.0, leak, "inner", "distortion")
    elif args.kind == "logloss":
        if not args.ch_v:
            raise UsageError("logloss region needs --ch-v")
        point = regions.logloss_point(model, models.load_channel(args.ch_v))
    else:
        aux = _aux(args)
        outer = args.kind == "outer"
        if outer and aux.ch_TV is None:
            raise UsageError("outer bound needs --ch-tv")
        if not outer and aux.ch_V is None:
            raise UsageError("inner bound needs --ch-v")
        regions.check_cardinalities(model, aux)
        terms = regions.leakage_terms(model, aux, outer)
        if args.terms:
            _print_terms(terms)
        leak = regions.outer_leakage(model, aux) if outer else regions.inner_leakage(model, aux)
        if not leak.nonnegative:
            log.warning("leakage expression is negative (%.6g)", leak.value)
        point = regions.TradeoffPoint(regions.inner_rate(model, aux),
                                      _distortion(model, aux, args.loss),
                                      leak.value, args.kind, "distortion")
    emit(BOUND_COLUMNS, [_bound_row(point)], args.format, args.out)
    return 0


def _config(args, **over) -> sibsolver.SolverConfig:
    return sibsolver.SolverConfig(card_V=args.card_v, max_iters=args.max_iters, tol=args.tol,
                                  restarts=args.restarts, seed=args.seed, **over)


def cmd_solve(args) -> int:
    model = load_source(args.model)
    betas = parse_beta_grid(args.beta_grid)
    gammas = parse_linear_grid(args.gamma_grid)
    if not betas or not gammas:
        raise UsageError("empty beta or gamma grid")
    states = sibsolver.sweep_states(model, betas, gammas, _config(args), threads=args.threads)
    fr = sibsolver.states_to_frontier(states)
    idx = np.flatnonzero(fr.pareto_mask) if args.pareto_only else range(len(states))
    rows = [[s.beta, s.gamma, s.restart, s.converged, s.iters,
             s.triple.rate, s.triple.payload, s.triple.leakage]
            for s in (states[i] for i in idx)]
    emit(SOLVER_COLUMNS, rows, args.format, args.out)
    failed = sum(not s.converged for s in states)
    if failed:
        log.warning("%d of %d grid points did not converge", failed, len(states))
        if args.strict:
            return 2
    return 0


def cmd_agglomerate(args) -> int:
    model = load_source(args.model)
    st = sibsolver.agglomerate(model, args.dprime, args.leak)
    rows = [[0, -1, -1, model.joint.label("X").cardinality, *_identity_triple(model)]]
    rows += [[k + 1, e["merged"][0], e["merged"][1], e["card_V"], e["rate"], e["dprime"],
              e["leakage"]] for k, e in enumerate(st.merge_log)]
    emit(MERGE_COLUMNS, rows, args.format, args.out)
    return 0


def _identity_triple(model: SourceModel):
    problem = sibsolver.SIBProblem.from_model(model)
    return [float(t) for t in problem.triple(np.eye(problem.nx))]


def cmd_oracle(args) -> int:
    model = load_source(args.model)
    spec = oracle.GridSpec(args.card_v, args.resolution, args.max_channels)
    fr = oracle.grid_frontier(model, spec, threads=args.threads, keep_channels=False)
    if args.query:
        for q in args.query:
            vals = _floats(q)
            if len(vals) != 2:
                raise UsageError("--query takes R,L")
            sys.stdout.write(fmt(oracle.max_dprime(fr, *vals)) + "\n")
        return 0
    h_yp = cond_entropy(model.completed(), "Yp")
    idx = np.flatnonzero(fr.pareto_mask)
    idx = idx[np.lexsort((fr.leakage[idx], -fr.dprime[idx], fr.rate[idx]))]
    rows = [[fr.rate[i], max(h_yp - fr.dprime[i], 0.0), fr.leakage[i], "oracle"] for i in idx]
    emit(BOUND_COLUMNS, rows, args.format, args.out)
    return 0


def cmd_closedform(args) -> int:
    if args.kind == "binary":
        val = regions.binary_dprime_max(BinaryCascadeParams(args.p, args.q), args.rate, args.leak)
        sys.stdout.write(fmt(val) + "\n")
        return 0
    gp = GaussianCascadeParams(args.nx, args.ns, args.np)
    if args.kind == "gaussian":
        sys.stdout.write(fmt(regions.gaussian_dprime_max(gp, args.rate, args.leak)) + "\n")
    elif args.kind == "gaussian-dmin":
        sys.stdout.write(fmt(regions.gaussian_quadratic_dmin(gp, args.rate, args.leak)) + "\n")
    elif args.kind == "gaussian-region":
        if args.d is None:
            raise UsageError("gaussian-region needs --d")
        r, l = regions.gaussian_quadratic_region(gp, args.d)
        emit(BOUND_COLUMNS, [[r, args.d, l, "closedform"]], args.format, args.out)
    else:
        if not args.nq:
            raise UsageError("gaussian-triple needs --nq")
        rows = [_bound_row(regions.gaussian_achievable_triple(gp, nq)) for nq in _floats(args.nq)]
        emit(BOUND_COLUMNS, rows, args.format, args.out)
    return 0


# -- parser -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    out = _Parser(add_help=False)
    out.add_argument("--out", help="output path (default stdout)")
    out.add_argument("--format", choices=["csv", "json"], default="csv")
    src = _Parser(add_help=False)
    src.add_argument("--model", required=True,
                     help="model JSON file, binary:P,Q or gaussian:NX,NS,NP[,BINS]")
    par = _Parser(add_help=False)
    par.add_argument("--threads", type=int, default=1)
    par.add_argument("--seed", type=int, default=0)

    p = _Parser(prog="sibkit", description="Rate-distortion-leakage tradeoffs and the "
                                            "secure information bottleneck.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    m = sub.add_parser("model", help="build or re-export a source model as JSON")
    m.add_argument("kind", choices=["binary", "gaussian", "file"])
    m.add_argument("path", nargs="?")
    m.add_argument("--p", type=float, default=0.1)
    m.add_argument("--q", type=float, default=0.2)
    m.add_argument("--nx", type=float, default=1.0)
    m.add_argument("--ns", type=float, default=0.5)
    m.add_argument("--np", type=float, default=1.0)
    m.add_argument("--bins", type=int, default=64)
    m.add_argument("--span", type=float, default=5.0)
    m.add_argument("--out")
    m.set_defaults(func=cmd_model)

    r = sub.add_parser("region", parents=[src, out], help="evaluate a bound for given channels")
    r.add_argument("kind", choices=["inner", "outer", "lossless", "logloss"])
    r.add_argument("--ch-v")
    r.add_argument("--ch-u")
    r.add_argument("--ch-tv")
    r.add_argument("--g", help="reconstruction channel (V,Y) -> Yhat")
    r.add_argument("--loss", choices=["hamming", "logloss"], default="hamming")
    r.add_argument("--terms", action="store_true", help="print leakage terms to stderr")
    r.set_defaults(func=cmd_region)

    s = sub.add_parser("solve", parents=[src, out, par], help="secure IB sweep")
    s.add_argument("--beta-grid", default="0.1:100:20", help="lo:hi:n log-spaced, or a list")
    s.add_argument("--gamma-grid", default="0", help="lo:hi:n linear, or a list")
    s.add_argument("--card-v", type=int, default=2)
    s.add_argument("--restarts", type=int, default=8)
    s.add_argument("--tol", type=float, default=1e-9)
    s.add_argument("--max-iters", type=int, default=10000)
    s.add_argument("--strict", action="store_true", help="exit 2 if any point did not converge")
    s.add_argument("--pareto-only", action="store_true")
    s.set_defaults(func=cmd_solve)

    a = sub.add_parser("agglomerate", parents=[src, out], help="greedy merging from V = X")
    a.add_argument("--dprime", type=float, default=0.0)
    a.add_argument("--leak", type=float, default=math.inf)
    a.set_defaults(func=cmd_agglomerate)

    o = sub.add_parser("oracle", parents=[src, out, par], help="grid-search frontier")
    o.add_argument("--card-v", type=int, default=2)
    o.add_argument("--resolution", type=int, default=100)
    o.add_argument("--max-channels", type=int, default=1_000_000)
    o.add_argument("--query", action="append", metavar="R,L",
                   help="print max D' under these caps instead of the frontier")
    o.set_defaults(func=cmd_oracle)

    c = sub.add_parser("closedform", parents=[out], help="closed-form tradeoff functions")
    c.add_argument("kind", choices=["binary", "gaussian", "gaussian-region", "gaussian-dmin",
                                    "gaussian-triple"])
    c.add_argument("--p", type=float, default=0.1)
    c.add_argument("--q", type=float, default=0.2)
    c.add_argument("--nx", type=float, default=1.0)
    c.add_argument("--ns", type=float, default=0.5)
    c.add_argument("--np", type=float, default=1.0)
    c.add_argument("--rate", type=float, default=1.0)
    c.add_argument("--leak", type=float, default=1.0)
    c.add_argument("--d", type=float)
    c.add_argument("--nq", help="comma list of test-channel noise variances")
    c.set_defaults(func=cmd_closedform)
    return p


def _setup_logging():
    level = LOG_LEVELS.get(os.environ.get("SIBKIT_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def run(argv: Optional[Sequence[str]] = None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except UsageError as exc:
        sys.stderr.write(f"sibkit: error: {exc}\n")
        return 1
    except (ModelError, LabelError, StochasticityError, regions.RegionError,
            sibsolver.SolverError, oracle.CapExceeded, ValueError) as exc:
        sys.stderr.write(f"sibkit: {exc}\n")
        return 1
    except ArithmeticError as exc:
        sys.stderr.write(f"sibkit: numerical failure: {exc}\n")
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
