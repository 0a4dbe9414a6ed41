"""Command-line interface: ``mopup <command> ...``.

Exit codes: 0 success, 1 a ``verify`` check failed, 2 configuration or
argument error (including unwritable output), 3 input parse error, 4
numerical failure in a decomposition.
"""

import argparse
import csv
import json
import sys

import numpy as np

from . import __version__
from .baselines import hooi_mpca_fit, hosvd_matrix_init
from .bench import (STUDIES, ConfigError, ExperimentConfig, run_study, summarize, write_csv,
                    write_summary_csv)
from .io import ParseError, read_sample_set, write_sample_set
from .linalg import Subspace, sin_theta
from .matrix import ApOptions, ap_fit, asc_init, denoise, objective, select_rank
from .model import (NOISE_FAMILIES, SCORE_DISTS, MatrixModelParams, MatrixSampleSet, NoiseSpec,
                    TensorModelParams, TensorSampleSet, derive_seed, random_subspace,
                    sample_matrix_set, sample_tensor_set)
from .tensor import ap_fit_tensor, hosvd_init

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_PARSE, EXIT_NUMERIC = 0, 1, 2, 3, 4

_ORDER_ALIASES = {"paper": "paper_jacobi", "gauss-seidel": "gauss_seidel"}


class UsageError(ValueError):
    pass


def _int_list(text):
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _common_parser():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="base random seed (default 0)")
    g.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                   help="worker threads for Monte-Carlo replicates (default 1)")
    g.add_argument("--deterministic", action="store_true", default=argparse.SUPPRESS,
                   help="force single-threaded, fixed-order execution")
    g.add_argument("--out", default=argparse.SUPPRESS, help="output path (default stdout)")
    g.add_argument("--format", choices=["csv"], default=argparse.SUPPRESS,
                   help="table output format")
    return p


def _solver_args(p, default_iter=100):
    p.add_argument("--max-iter", type=int, default=default_iter)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--update-order", choices=sorted(_ORDER_ALIASES), default="paper")


def build_parser():
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="mopup", parents=[common],
        description="Mode-wise principal subspace pursuit for matrix and tensor samples.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="draw a synthetic sample set")
    g.add_argument("--dims", type=_int_list, required=True, help="p1,p2[,p3,...]")
    g.add_argument("--rank", type=_int_list, required=True, help="r1,r2[,r3,...]")
    g.add_argument("-n", "--n", type=int, required=True, dest="n")
    g.add_argument("--noise", choices=NOISE_FAMILIES, default="gaussian")
    g.add_argument("--R", type=float, default=0.1, dest="R", help="noise scale")
    g.add_argument("--score-dist", choices=SCORE_DISTS, default="uniform_pm1")
    g.add_argument("--truth", help="write the true loadings to this JSON file")

    f = sub.add_parser("fit", parents=[common], help="ASC + AP on an MST1 file")
    f.add_argument("input")
    f.add_argument("--rank", type=_int_list, required=True, help="r1,r2")
    f.add_argument("--init", choices=["asc", "hosvd", "random", "file"], default="asc")
    f.add_argument("--init-file", help="loadings JSON for --init file")
    _solver_args(f)

    ft = sub.add_parser("fit-tensor", parents=[common], help="order-d AP on a TST1 file")
    ft.add_argument("input")
    ft.add_argument("--rank", type=_int_list, required=True, help="r1,...,rd")
    ft.add_argument("--init", choices=["hosvd", "random", "file"], default="hosvd")
    ft.add_argument("--init-file")
    _solver_args(ft)

    r = sub.add_parser("rank", parents=[common], help="BIC rank selection")
    r.add_argument("input")
    r.add_argument("--max-rank", type=_int_list, required=True, help="r1_max,r2_max")
    r.add_argument("--min-rank", type=_int_list, default=[1, 1], help="r1_min,r2_min")
    _solver_args(r, default_iter=10)

    d = sub.add_parser("denoise", parents=[common], help="denoise an MST1 file")
    d.add_argument("input")
    d.add_argument("--rank", type=_int_list, required=True, help="r1,r2")
    d.add_argument("--loadings", help="use these loadings (JSON) instead of fitting")
    _solver_args(d)

    b = sub.add_parser(
        "bench", parents=[common], help="run a Monte-Carlo study",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="study defaults (p2=30, r=(5,7), gaussian R=0.1, 10 AP iterations unless noted):\n"
               "  scale_p1       p1 in 30,40,50,60,80,100; n=256\n"
               "  scale_R        R in 0.001..5; p1=40, n=256\n"
               "  scale_n        n in 4,8,...,4096; p1=40\n"
               "  rank_bic       p1=p2=30, r=(3,4), n=5, grid 2..9, R in 0.05..0.2, 20 replicates\n"
               "  compare_mpca   R in 0.05,0.1,0.2; p1=40, n=64, 20 replicates\n"
               "  verify_bounds  sizes 5,10,20,30; 250 pairs each")
    b.add_argument("--study", choices=STUDIES)
    b.add_argument("--config", help="JSON experiment config")
    b.add_argument("--sweep", type=_float_list, help="comma-separated sweep values")
    b.add_argument("--replicates", type=int, help="replicates per sweep value")
    b.add_argument("--max-iter", type=int, help="AP iterations per fit")
    b.add_argument("--summary", help="also write per-sweep mean/std to this CSV")

    v = sub.add_parser("verify", parents=[common], help="run the theory oracle suites")
    v.add_argument("--suite", choices=["recovery", "minimizer", "bounds", "all"], default="all")
    v.add_argument("--instances", type=int, default=50)

    c = sub.add_parser("compare", parents=[common], help="MOP-UP vs MPCA vs HOSVD on an MST1 file")
    c.add_argument("input")
    c.add_argument("--rank", type=_int_list, required=True, help="r1,r2")
    c.add_argument("--truth", help="true loadings JSON; adds sin-theta errors")
    _solver_args(c)
    return parser


def _opts(args):
    return ApOptions(max_iter=args.max_iter, tol=args.tol,
                     update_order=_ORDER_ALIASES[args.update_order])


def _pair(values, name):
    if len(values) != 2:
        raise UsageError(f"{name} needs exactly two values, got {values}")
    return values


def _open_out(args):
    path = getattr(args, "out", None)
    if path is None:
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def _emit_json(args, obj):
    fh, close = _open_out(args)
    try:
        json.dump(obj, fh, indent=1)
        fh.write("\n")
    finally:
        if close:
            fh.close()


def _emit_rows(args, header, rows):
    fh, close = _open_out(args)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    finally:
        if close:
            fh.close()


def _load_loadings(path):
    try:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from None
    if "loadings" in d:
        return [Subspace(np.array(m)) for m in d["loadings"]]
    if "u" in d and "v" in d:
        return [Subspace(np.array(d["u"])), Subspace(np.array(d["v"]))]
    raise ParseError(f"{path}: expected keys 'u' and 'v' or 'loadings'")


def _read_matrix_set(path):
    s = read_sample_set(path)
    if not isinstance(s, MatrixSampleSet):
        raise UsageError(f"{path} holds tensor samples; use fit-tensor")
    return s


def cmd_generate(args):
    seed = getattr(args, "seed", 0)
    if len(args.dims) != len(args.rank) or len(args.dims) < 2:
        raise UsageError("--dims and --rank must have the same length >= 2")
    noise = NoiseSpec(args.noise, args.R)
    if len(args.dims) == 2:
        params = MatrixModelParams.random(*args.dims, *args.rank, derive_seed(seed, 0),
                                          score_dist=args.score_dist, noise=noise)
        s = sample_matrix_set(params, args.n, derive_seed(seed, 1))
        loads = [params.u, params.v]
    else:
        params = TensorModelParams.random(args.dims, args.rank, derive_seed(seed, 0),
                                          score_dist=args.score_dist, noise=noise)
        s = sample_tensor_set(params, args.n, derive_seed(seed, 1))
        loads = list(params.loadings)
    out = getattr(args, "out", None)
    if out is None:
        raise UsageError("generate needs --out")
    write_sample_set(s, out)
    if args.truth:
        with open(args.truth, "w", encoding="utf-8") as fh:
            json.dump({"loadings": [u.basis.tolist() for u in loads]}, fh)
    return EXIT_OK


def _fit_payload(loads, iterations, converged, steps, extra=None):
    d = {"iterations": iterations, "converged": converged, "step_trace": steps,
         "loadings": [u.basis.tolist() for u in loads]}
    d.update(extra or {})
    return d


def cmd_fit(args):
    s = _read_matrix_set(args.input)
    r1, r2 = _pair(args.rank, "--rank")
    seed = getattr(args, "seed", 0)
    if args.init == "asc":
        init = asc_init(s, r1, r2)
    elif args.init == "hosvd":
        init = hosvd_matrix_init(s, r1, r2)
    elif args.init == "random":
        init = (random_subspace(s.shape[0], r1, derive_seed(seed, 0)),
                random_subspace(s.shape[1], r2, derive_seed(seed, 1)))
    else:
        if not args.init_file:
            raise UsageError("--init file needs --init-file")
        init = tuple(_load_loadings(args.init_file))
    fit = ap_fit(s, r1, r2, init, _opts(args))
    _emit_json(args, _fit_payload([fit.u_hat, fit.v_hat], fit.iterations_run, fit.converged,
                                  fit.step_trace, {"objective_trace": fit.objective_trace}))
    return EXIT_OK


def cmd_fit_tensor(args):
    s = read_sample_set(args.input)
    if not isinstance(s, TensorSampleSet):
        raise UsageError(f"{args.input} holds matrix samples; use fit")
    seed = getattr(args, "seed", 0)
    if args.init == "hosvd":
        init = hosvd_init(s, args.rank)
    elif args.init == "random":
        init = [random_subspace(p, r, derive_seed(seed, k))
                for k, (p, r) in enumerate(zip(s.dims, args.rank))]
    else:
        if not args.init_file:
            raise UsageError("--init file needs --init-file")
        init = _load_loadings(args.init_file)
    fit = ap_fit_tensor(s, args.rank, init, _opts(args))
    _emit_json(args, _fit_payload(fit.loadings, fit.iterations_run, fit.converged, fit.step_trace))
    return EXIT_OK


def cmd_rank(args):
    s = _read_matrix_set(args.input)
    r1_max, r2_max = _pair(args.max_rank, "--max-rank")
    r1_min, r2_min = _pair(args.min_rank, "--min-rank")
    sel = select_rank(s, r1_max, r2_max, _opts(args), r1_min=r1_min, r2_min=r2_min)
    rows = [(a, b, repr(l), repr(sc), str((a, b) == sel.chosen).lower())
            for (a, b), l, sc in zip(sel.grid, sel.losses, sel.bic_scores)]
    _emit_rows(args, ["r1", "r2", "loss", "bic", "chosen"], rows)
    print(f"chosen rank: {sel.chosen[0]},{sel.chosen[1]}", file=sys.stderr)
    return EXIT_OK


def cmd_denoise(args):
    s = _read_matrix_set(args.input)
    r1, r2 = _pair(args.rank, "--rank")
    if args.loadings:
        u, v = _load_loadings(args.loadings)
    else:
        fit = ap_fit(s, r1, r2, asc_init(s, r1, r2), _opts(args))
        u, v = fit.u_hat, fit.v_hat
    out = getattr(args, "out", None)
    if out is None:
        raise UsageError("denoise needs --out")
    write_sample_set(MatrixSampleSet(denoise(s, u, v)), out)
    return EXIT_OK


def cmd_bench(args):
    overrides = dict(sweep=args.sweep, replicates=args.replicates, max_iter=args.max_iter,
                     base_seed=getattr(args, "seed", None))
    if args.config:
        cfg = ExperimentConfig.load(args.config, study=args.study, **overrides)
    elif args.study:
        cfg = ExperimentConfig.for_study(args.study, **overrides)
    else:
        raise UsageError("bench needs --study or --config")
    threads = 1 if getattr(args, "deterministic", False) else getattr(args, "threads", 1)
    out = getattr(args, "out", None) or cfg.output
    records = run_study(cfg, threads=threads, output=out)
    if out is None:
        write_csv(records, sys.stdout, cfg.study)
    summary = summarize(records)
    if args.summary:
        write_summary_csv(summary, args.summary)
    if summary.slope is not None:
        print(f"{cfg.study}: log-log slope {summary.slope:.4f} over {summary.slope_points} points",
              file=sys.stderr)
    return EXIT_OK


def cmd_verify(args):
    from .verify import run_suites
    results = run_suites(args.suite, instances=args.instances, seed=getattr(args, "seed", 0))
    rows = [(name, str(ok).lower(), detail) for name, ok, detail in results]
    _emit_rows(args, ["check", "passed", "detail"], rows)
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_CHECK_FAILED


def cmd_compare(args):
    s = _read_matrix_set(args.input)
    r1, r2 = _pair(args.rank, "--rank")
    opts = _opts(args)
    truth = _load_loadings(args.truth) if args.truth else None
    asc = asc_init(s, r1, r2)
    methods = {
        "mopup": ap_fit(s, r1, r2, asc, opts),
        "mpca": hooi_mpca_fit(s, r1, r2, opts=opts),
    }
    hosvd = hosvd_matrix_init(s, r1, r2)
    loads = {"mopup": (methods["mopup"].u_hat, methods["mopup"].v_hat),
             "mpca": (methods["mpca"].u_hat, methods["mpca"].v_hat),
             "hosvd": hosvd, "asc": asc}
    rows = []
    for name, (u, v) in loads.items():
        it = methods[name].iterations_run if name in methods else 0
        err = ""
        if truth:
            err = repr(max(sin_theta(truth[0], u), sin_theta(truth[1], v)))
        rows.append((name, repr(objective(s, u, v)), it, err))
    _emit_rows(args, ["method", "objective", "iterations", "err_max"], rows)
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate, "fit": cmd_fit, "fit-tensor": cmd_fit_tensor, "rank": cmd_rank,
    "denoise": cmd_denoise, "bench": cmd_bench, "verify": cmd_verify, "compare": cmd_compare,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except ParseError as exc:
        print(f"mopup: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except np.linalg.LinAlgError as exc:
        print(f"mopup: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, UsageError, ValueError) as exc:
        print(f"mopup: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"mopup: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
