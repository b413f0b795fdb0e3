"""Command-line interface.

Subcommands
-----------
fit     fit a curve and write ``curve.csv``, ``weights.csv``, ``trace.csv``
        and ``fit.json`` into the output directory
detect  as ``fit``, plus ``outliers.csv`` with the weight-threshold split
score   rank the first N points to drop below the weight threshold while
        the error target is tightened; writes ``ranked.csv`` and ``fit.json``
synth   write a seeded synthetic dataset and its planted outlier indices

Exit status is 0 on success, 1 on a solver failure, 2 on bad input or
usage and 3 when the run stopped early with partial results. Errors are
reported on stderr as ``mewls: error [<class>]: <message>``.
"""

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from .bspline import KnotVector, design_matrix, make_uniform_knots
from .classify import DEFAULT_TOL_CLASSIFY, score_outliers, split_inliers_outliers
from .data import load_csv, normalize
from .exceptions import (
    InvalidThresholdError,
    MEWLSError,
    NonConvergenceError,
    RankDeficiencyError,
    SolverFailureError,
)
from .maxent import SolverConfig, fit_mewls, ols_state, squared_residuals
from .synth import NoiseSpec, gen_helix, gen_profile, gen_spiral

EXIT_OK = 0
EXIT_SOLVER = 1
EXIT_INPUT = 2
EXIT_PARTIAL = 3

_SOLVER_ERRORS = (NonConvergenceError, SolverFailureError, RankDeficiencyError)


class UsageError(MEWLSError, ValueError):
    """Invalid combination of command-line options."""

    error_class = "usage"


def _num(v):
    # Shortest repr that round-trips; identical runs give identical bytes.
    return repr(float(v))


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        wr.writerows(rows)


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _csv_list(text):
    return [c for c in (s.strip() for s in text.split(",")) if c != ""]


def _selector(text):
    return int(text) if text.lstrip("-").isdigit() else text


def _row_filter(text):
    for op in ("<=", ">=", "==", "!=", "<", ">"):
        col, sep, val = text.partition(op)
        if sep and col.strip() and val.strip():
            return (_selector(col.strip()), op, float(val))
    raise UsageError(f"cannot parse filter {text!r}; expected e.g. 'intensity<=65'")


def _add_input_args(p):
    p.add_argument("input", help="delimited text file with one row per sample")
    p.add_argument("--t-col", default="0",
                   help="parameter column (index or header name); 'row' uses the row number")
    p.add_argument("--y-cols", default=None,
                   help="comma-separated data columns (default: all but the parameter column)")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--header", action="store_true", help="first row holds column names")
    p.add_argument("--missing", default="NA,",
                   help="comma-separated missing-value markers; a trailing comma adds the empty cell")
    p.add_argument("--filter", default=None, metavar="EXPR",
                   help="keep rows satisfying e.g. 'intensity<=65'")


def _add_model_args(p):
    p.add_argument("--degree", type=int, default=3)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--n-basis", type=int, default=10, help="basis size on uniform knots")
    g.add_argument("--knots", default=None, help="comma-separated clamped knot vector on [0, 1]")
    p.add_argument("--r-final", type=float, default=100.0, help="final error reduction factor")
    p.add_argument("--stages", type=int, default=20, help="continuation stages")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--tol-constraint", type=float, default=1e-6)
    p.add_argument("--max-outer-iters", type=int, default=200)
    p.add_argument("--max-newton-iters", type=int, default=50)
    p.add_argument("--no-acceleration", action="store_true",
                   help="plain alternating sweeps without Newton steps")
    p.add_argument("--out", required=True, help="output directory")


def _add_curve_args(p):
    p.add_argument("--samples", type=int, default=512, help="curve samples")
    p.add_argument("--normalized", action="store_true",
                   help="write curve and parameters in normalized [0, 1] units")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mewls",
        description="Maximum-entropy weighted least-squares B-spline fitting.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a curve")
    _add_input_args(p)
    _add_model_args(p)
    _add_curve_args(p)

    p = sub.add_parser("detect", help="fit and split inliers from outliers")
    _add_input_args(p)
    _add_model_args(p)
    _add_curve_args(p)
    p.add_argument("--tol-classify", type=float, default=DEFAULT_TOL_CLASSIFY)

    p = sub.add_parser("score", help="rank outlier candidates by entry order")
    _add_input_args(p)
    _add_model_args(p)
    p.add_argument("--n-outliers", type=int, required=True)
    p.add_argument("--tol-classify", type=float, default=DEFAULT_TOL_CLASSIFY)

    p = sub.add_parser("synth", help="write a synthetic dataset")
    p.add_argument("kind", choices=["profile", "spiral", "helix"])
    p.add_argument("--out", required=True, help="CSV path")
    p.add_argument("--planted", default=None,
                   help="planted-index sidecar path (default: <out stem>.planted.csv)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=None, help="number of points (spiral, helix)")
    p.add_argument("--var", type=float, default=None, help="perturbation variance (spiral, helix)")
    p.add_argument("--a", type=float, default=1.0, help="spiral offset")
    p.add_argument("--b", type=float, default=4.0, help="spiral growth")
    p.add_argument("--radius", type=float, default=2.0, help="helix radius")
    p.add_argument("--pitch", type=float, default=1.0, help="helix pitch")
    p.add_argument("--m", type=int, default=100, help="perturbed helix points")
    p.add_argument("--n-inliers", type=int, default=32)
    p.add_argument("--n-outliers", type=int, default=12)
    return parser


def _load(args):
    t_col = None if args.t_col == "row" else _selector(args.t_col)
    y_cols = None if args.y_cols is None else [_selector(c) for c in _csv_list(args.y_cols)]
    missing = tuple(s.strip() for s in args.missing.split(","))
    row_filter = None if args.filter is None else _row_filter(args.filter)
    return load_csv(
        args.input,
        t_col=t_col,
        y_cols=y_cols,
        delimiter=args.delimiter,
        header=args.header,
        missing=missing,
        row_filter=row_filter,
    )


def _model(args):
    if args.knots is not None:
        kv = KnotVector(args.degree, [float(k) for k in _csv_list(args.knots)])
    else:
        kv = make_uniform_knots(args.degree, args.n_basis)
    if not args.r_final >= 1:
        raise UsageError("--r-final must be at least 1")
    if args.stages < 1:
        raise UsageError("--stages must be at least 1")
    try:
        cfg = SolverConfig(
            tol=args.tol,
            tol_constraint=args.tol_constraint,
            max_outer_iters=args.max_outer_iters,
            max_newton_iters=args.max_newton_iters,
            acceleration=None if args.no_acceleration else "newton",
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return kv, cfg


def _check_tol_classify(tol):
    if not 0 < tol < 1:
        raise InvalidThresholdError(f"--tol-classify must lie in (0, 1), got {tol!r}")


def _fit_json(kv, ds, state, cfg, args, converged, stages_completed, mse_uw, extra=None):
    coef = np.asarray(state.coef)
    doc = {
        "degree": kv.degree,
        "knots": [float(k) for k in kv.knots],
        "control_points": ds.transform.inverse_y(coef).tolist(),
        "control_points_normalized": coef.tolist(),
        "transform": ds.transform.to_dict(),
        "config": dict(
            cfg.to_dict(),
            r_final=float(args.r_final),
            n_stages=int(args.stages),
        ),
        "converged": bool(converged),
        "stages_completed": int(stages_completed),
        "mse_uw": float(mse_uw),
        "lambda2": float(state.lambda2),
        "entropy": float(state.entropy),
    }
    if extra:
        doc.update(extra)
    return doc


def _run_fit(args, detect=False):
    if detect:
        _check_tol_classify(args.tol_classify)
    if args.samples < 2:
        raise UsageError("--samples must be at least 2")
    kv, cfg = _model(args)
    raw = _load(args)
    ds = normalize(raw)
    A = design_matrix(kv, ds.t)
    result = fit_mewls(A, ds.y, args.r_final, args.stages, cfg)
    state = result.state
    os.makedirs(args.out, exist_ok=True)

    x = np.linspace(0.0, 1.0, args.samples)
    values = design_matrix(kv, x) @ np.asarray(state.coef)
    t_data = ds.t if args.normalized else raw.t[ds.index]
    if args.normalized:
        t_curve = x
    else:
        t_curve, values = ds.transform.inverse_t(x), ds.transform.inverse_y(values)
    comps = [f"y{j}" for j in range(values.shape[1])]
    _write_csv(
        os.path.join(args.out, "curve.csv"),
        ["t"] + comps,
        ([_num(tc)] + [_num(v) for v in row] for tc, row in zip(t_curve, values)),
    )

    r2 = squared_residuals(A, state.coef, ds.y)
    _write_csv(
        os.path.join(args.out, "weights.csv"),
        ["index", "t", "weight", "r2"],
        ([int(i), _num(tc), _num(wi), _num(ri)]
         for i, tc, wi, ri in zip(ds.index, t_data, state.weights, r2)),
    )
    _write_csv(
        os.path.join(args.out, "trace.csv"),
        ["stage", "r", "mse_target", "mse", "lambda2", "entropy", "iterations"],
        ([st.stage, _num(st.reduction_factor), _num(st.mse_target), _num(st.mse),
          _num(st.lambda2), _num(st.entropy), st.n_iter] for st in result.trace),
    )
    stages_completed = len(result.trace) - 1
    _write_json(
        os.path.join(args.out, "fit.json"),
        _fit_json(kv, ds, state, cfg, args, result.complete, stages_completed, result.mse_uw,
                  {"message": result.message}),
    )

    if detect:
        rep = split_inliers_outliers(state.weights, args.tol_classify)
        score = dict(zip(rep.outliers.tolist(), rep.scores.tolist()))
        _write_csv(
            os.path.join(args.out, "outliers.csv"),
            ["index", "t", "weight", "flagged", "score"],
            ([int(i), _num(tc), _num(wi), int(k in score), score.get(k, "")]
             for k, (i, tc, wi) in enumerate(zip(ds.index, t_data, state.weights))),
        )
        print(f"{rep.n_outliers} of {ds.n_points} points flagged "
              f"(threshold {rep.threshold:.6g})")
    if not result.complete:
        print(f"mewls: partial [infeasible-target]: {result.message}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def _run_score(args):
    _check_tol_classify(args.tol_classify)
    kv, cfg = _model(args)
    if args.r_final <= 1:
        raise UsageError("score needs --r-final > 1")
    raw = _load(args)
    ds = normalize(raw)
    if not 0 <= args.n_outliers < ds.n_points:
        raise UsageError(f"--n-outliers must lie in [0, {ds.n_points - 1}]")
    A = design_matrix(kv, ds.t)
    rep, state = score_outliers(
        A, ds.y, args.n_outliers, cfg, args.r_final, args.stages, args.tol_classify
    )
    os.makedirs(args.out, exist_ok=True)
    t_raw = raw.t[ds.index]
    order = np.argsort(rep.scores, kind="stable")
    _write_csv(
        os.path.join(args.out, "ranked.csv"),
        ["rank", "index", "t", "entry_r", "weight"],
        ([int(rep.scores[k]), int(ds.index[rep.outliers[k]]), _num(t_raw[rep.outliers[k]]),
          _num(rep.entry_factor[k]), _num(rep.weights[rep.outliers[k]])] for k in order),
    )
    mse_uw = ols_state(A, ds.y).mse_target
    _write_json(
        os.path.join(args.out, "fit.json"),
        _fit_json(kv, ds, state, cfg, args, rep.complete, state.stage, mse_uw,
                  {"r_reached": float(state.reduction_factor),
                   "n_ranked": rep.n_outliers}),
    )
    print(f"{rep.n_outliers} points ranked")
    if not rep.complete:
        print(f"mewls: partial [infeasible-target]: only {rep.n_outliers} of "
              f"{args.n_outliers} requested points were flagged", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def _run_synth(args):
    if args.kind == "profile":
        raw, planted = gen_profile(args.n_inliers, args.n_outliers, seed=args.seed)
    elif args.kind == "spiral":
        var = 30.0 if args.var is None else args.var
        box = ((-60.0, 60.0), (-60.0, 60.0))
        raw, planted = gen_spiral(args.n or 200, args.a, args.b, NoiseSpec(var, box, args.seed))
    else:
        var = 20.0 if args.var is None else args.var
        box = ((-4.0, 4.0),) * 3
        raw, planted = gen_helix(
            args.n or 400, args.radius, args.pitch, args.m, NoiseSpec(var, box, args.seed)
        )
    names = {1: ["y"], 2: ["x", "y"], 3: ["x", "y", "z"]}[raw.dim]
    _write_csv(
        args.out,
        ["t"] + names,
        ([_num(tv)] + [_num(v) for v in row] for tv, row in zip(raw.t, raw.y)),
    )
    side = args.planted or os.path.splitext(args.out)[0] + ".planted.csv"
    _write_csv(side, ["index"], ([int(i)] for i in planted))
    print(f"wrote {raw.n_points} points to {args.out}, {len(planted)} planted indices to {side}")
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "synth":
            return _run_synth(args)
        if args.command == "score":
            return _run_score(args)
        return _run_fit(args, detect=args.command == "detect")
    except _SOLVER_ERRORS as exc:
        print(f"mewls: error [{exc.error_class}]: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except MEWLSError as exc:
        print(f"mewls: error [{exc.error_class}]: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (OSError, ValueError) as exc:
        cls = "io" if isinstance(exc, OSError) else "invalid-argument"
        print(f"mewls: error [{cls}]: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
