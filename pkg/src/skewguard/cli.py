"""Command-line interface.

    skewguard oversample --method robrose --target 10 --seed 42 in.csv out.csv
    skewguard evaluate --train train.csv --test test.csv --method robrose
    skewguard bench --setting 2 --n0 900 --reps 100 --seed 1
    skewguard simulate --setting 2 --n0 900 --seed 1 data.csv

Every subcommand accepts ``--config FILE`` with ``key = value`` lines (keys
are the long flag names without dashes; hyphens or underscores both work).
Command-line flags override the file.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
Failures print one line ``error: <Category>: <message>`` on stderr.
"""
import argparse
import sys
import warnings

import numpy as np

from . import __version__, classify, metrics, resample, simbench
from .dataio import (
    SCALING_MODES,
    apply_scaling,
    atomic_write_text,
    fit_scaling,
    invert_scaling,
    read_csv,
    write_csv,
)
from .errors import InvalidConfig, SkewguardError
from .numkit import RngStream

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


class _Formatter(argparse.ArgumentDefaultsHelpFormatter):
    def __init__(self, prog):
        super().__init__(prog, max_help_position=34)


def _csv_list(text):
    return tuple(t.strip() for t in text.split(",") if t.strip()) if text else ()


def _int_list(text):
    try:
        return tuple(int(t) for t in _csv_list(text))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def read_config(path):
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def _common(p):
    p.add_argument("--config", metavar="FILE", default=None,
                   help="key = value file with defaults for any flag")
    p.add_argument("--seed", type=int, default=0, help="random seed")


def _oversampling_flags(p, default_method):
    methods = ("none",) + resample.METHODS if default_method == "none" else resample.METHODS
    p.add_argument("--method", choices=methods, default=default_method, help="oversampling method")
    _kernel_flags(p)


def _kernel_flags(p):
    p.add_argument("--target", type=float, default=10.0,
                   help="final minority size as a multiple of the original minority count")
    p.add_argument("--h", type=float, default=0.5, help="kernel shrink constant")
    p.add_argument("--cutoff-prob", type=float, default=0.999,
                   help="chi-square probability of the robROSE outlier cutoff")
    p.add_argument("--k", type=int, default=5, help="SMOTE neighbour count")
    p.add_argument("--smoothing-n", choices=("minority", "total"), default="minority",
                   help="row count used in the kernel smoothing constant")
    p.add_argument("--mcd-starts", type=int, default=500, help="FastMCD random starts")
    p.add_argument("--raw-mcd", action="store_true", default=False,
                   help="skip the FastMCD reweighting step")


def _data_flags(p):
    p.add_argument("--label", default="class", help="name of the 0/1 label column")
    p.add_argument("--categorical", type=_csv_list, default="",
                   help="comma-separated categorical columns")
    p.add_argument("--drop", type=_csv_list, default="",
                   help="comma-separated columns to ignore")
    p.add_argument("--log1p", type=_csv_list, default="",
                   help="comma-separated columns replaced by log(1 + value)")
    p.add_argument("--scaling", choices=SCALING_MODES, default="none",
                   help="feature scaling fitted on the training data")


def build_parser():
    parser = _Parser(prog="skewguard", description="Robust minority oversampling toolkit.",
                     formatter_class=_Formatter)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}",
                        help="show the version and exit")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    p = sub.add_parser("oversample", help="append synthetic minority rows to a CSV",
                       formatter_class=_Formatter)
    p.add_argument("input", help="input CSV with a header and a label column")
    p.add_argument("output", help="output CSV (gets a 'synthetic' provenance column)")
    _common(p)
    _data_flags(p)
    _oversampling_flags(p, "robrose")
    p.set_defaults(func=cmd_oversample)

    p = sub.add_parser("evaluate", help="fit logistic regression and report AUC/AUPRC",
                       formatter_class=_Formatter)
    p.add_argument("--train", default=None, help="training CSV")
    p.add_argument("--test", default=None, help="test CSV (same schema as --train)")
    p.add_argument("--data", default=None,
                   help="single CSV evaluated by repeated stratified k-fold instead of --train/--test")
    p.add_argument("--folds", type=int, default=2, help="folds per cross-validation repeat")
    p.add_argument("--repeats", type=int, default=5, help="cross-validation repeats")
    p.add_argument("--curves", metavar="DIR", default=None,
                   help="write roc.csv and pr.csv for the (first) evaluation here")
    p.add_argument("--report", metavar="FILE", default=None, help="write the metric summary CSV")
    _common(p)
    _data_flags(p)
    _oversampling_flags(p, "none")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="run the simulation benchmark",
                       formatter_class=_Formatter)
    p.add_argument("--setting", type=_int_list, default="1,2",
                   help="comma-separated simulation settings (1 clean, 2 contaminated)")
    p.add_argument("--n0", type=_int_list, default="900", help="comma-separated majority counts")
    p.add_argument("--n1", type=int, default=100, help="minority count")
    p.add_argument("--p", type=int, default=10, help="feature dimension")
    p.add_argument("--reps", type=int, default=100, help="repetitions per grid cell")
    p.add_argument("--methods", type=_csv_list, default=",".join(simbench.ALL_METHODS),
                   help="comma-separated subset of imbalanced,smote,rose,robrose")
    p.add_argument("--workers", type=int, default=None,
                   help="parallel processes; unset means CPU count capped by SKEWGUARD_THREADS")
    p.add_argument("--out-csv", default=None, help="write the report CSV here")
    p.add_argument("--out-table", default=None, help="write the text table here")
    _common(p)
    _kernel_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("simulate", help="write one simulated dataset to CSV",
                       formatter_class=_Formatter)
    p.add_argument("output", help="CSV for the full generated dataset")
    p.add_argument("--setting", type=int, choices=(1, 2), default=1, help="simulation setting")
    p.add_argument("--n0", type=int, default=900, help="majority count")
    p.add_argument("--n1", type=int, default=100, help="minority count")
    p.add_argument("--p", type=int, default=10, help="feature dimension")
    p.add_argument("--split", type=float, default=0.7, help="training fraction")
    p.add_argument("--train-out", default=None,
                   help="also write the (contaminated, for setting 2) training part here")
    p.add_argument("--test-out", default=None, help="also write the test part here")
    _common(p)
    p.set_defaults(func=cmd_simulate)
    return parser


def _oversample_config(args):
    return resample.OversampleConfig(
        m=args.target, h=args.h, cutoff_prob=args.cutoff_prob, k=args.k, seed=args.seed,
        smoothing_n=args.smoothing_n, mcd_starts=args.mcd_starts, reweight=not args.raw_mcd,
    )


def _read(args, path):
    return read_csv(path, label=args.label, categorical=args.categorical,
                    drop=args.drop, log1p=args.log1p)


def _rebalance_scaled(train, method, cfg, rng, scaling):
    """Oversample on scaled features, return rows in original units."""
    spec = fit_scaling(train, scaling)
    out, res = resample.rebalance(apply_scaling(train, spec), method, cfg, rng, return_result=True)
    return invert_scaling(out, spec), res


def cmd_oversample(args):
    d = _read(args, args.input)
    cfg = _oversample_config(args)
    out, res = _rebalance_scaled(d, args.method, cfg, RngStream(args.seed), args.scaling)
    if args.scaling != "none":
        # keep original rows bit-identical after the scale round trip
        X = np.array(out.X)
        X[: d.n] = d.X
        out = out.with_X(X)
    write_csv(out, args.output, provenance=True)
    excluded = [] if res is None else res.excluded.tolist()
    n_syn = out.n - d.n
    print(f"method={args.method} n1={d.n1} synthetic={n_syn} minority_total={out.n1}",
          file=sys.stderr)
    print(f"excluded_count={len(excluded)} excluded_rows={','.join(map(str, excluded))}",
          file=sys.stderr)
    return EXIT_OK


def _fit_score(train, test, args, rng):
    train.check_training()
    spec = fit_scaling(train, args.scaling)
    tr, te = apply_scaling(train, spec), apply_scaling(test, spec)
    if args.method != "none":
        tr = resample.rebalance(tr, args.method, _oversample_config(args), rng)
    model = classify.fit_logit(tr.X, tr.y)
    scores = classify.predict_proba(model, te.X)
    return metrics.roc_auc(scores, te.y), metrics.pr_auprc(scores, te.y)


def cmd_evaluate(args):
    rng = RngStream(args.seed)
    results = []
    if args.data:
        if args.train or args.test:
            raise UsageError("use either --data or --train/--test")
        d = _read(args, args.data)
        for r in range(args.repeats):
            folds = stratified_folds(d.y, args.folds, rng.fork("folds", r))
            for f, test_idx in enumerate(folds):
                train_idx = np.setdiff1d(np.arange(d.n), test_idx)
                results.append(_fit_score(d.take(train_idx), d.take(test_idx), args,
                                          rng.fork("fit", r, f)))
    else:
        if not (args.train and args.test):
            raise UsageError("evaluate needs --train and --test, or --data")
        train, test = _read(args, args.train), _read(args, args.test)
        if train.feature_names != test.feature_names:
            raise InvalidConfig("train and test CSVs have different feature columns")
        results.append(_fit_score(train, test, args, rng.fork("fit")))

    auc = np.array([r[0].area for r in results])
    auprc = np.array([r[1].area for r in results])
    lines = ["metric,mean,se,n"]
    for name, v in (("auc", auc), ("auprc", auprc)):
        se = float(v.std(ddof=1) / np.sqrt(v.size)) if v.size > 1 else float("nan")
        lines.append(f"{name},{v.mean():.10g},{se:.10g},{v.size}")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.report:
        atomic_write_text(args.report, text)
    if args.curves:
        import os

        os.makedirs(args.curves, exist_ok=True)
        metrics.write_curve_csv(results[0][0], os.path.join(args.curves, "roc.csv"))
        metrics.write_curve_csv(results[0][1], os.path.join(args.curves, "pr.csv"))
    return EXIT_OK


def stratified_folds(y, k, rng):
    """Row-index arrays of k folds, each class dealt round-robin after shuffling."""
    if k < 2:
        raise InvalidConfig("need at least 2 folds")
    folds = [[] for _ in range(k)]
    for c in (0, 1):
        idx = np.flatnonzero(np.asarray(y) == c)
        idx = idx[rng.fork("class", c).permutation(idx.size)]
        for i, row in enumerate(idx):
            folds[i % k].append(row)
    return [np.sort(np.asarray(f, dtype=np.intp)) for f in folds]


def cmd_bench(args):
    unknown = set(args.methods) - set(simbench.ALL_METHODS)
    if unknown:
        raise UsageError(f"unknown methods: {', '.join(sorted(unknown))}")
    specs = [
        simbench.setting_spec(s, n0, args.p, args.reps, args.seed, n1=args.n1)
        for s in args.setting
        for n0 in args.n0
    ]
    workers = args.workers if args.workers else simbench.default_workers()
    report = simbench.run_benchmark(specs, args.methods, _oversample_config(args),
                                    seed=args.seed, workers=workers)
    table = report.to_table()
    sys.stdout.write(table + "\n")
    if args.out_csv:
        report.write_csv(args.out_csv)
    if args.out_table:
        atomic_write_text(args.out_table, table + "\n")
    return EXIT_OK


def cmd_simulate(args):
    spec = simbench.setting_spec(args.setting, args.n0, args.p, 1, args.seed, n1=args.n1)
    spec = simbench.SimSpec(**{**spec.__dict__, "split": args.split})
    rng = RngStream(args.seed, 0)
    d = simbench.gen_setting(spec, rng.fork("generate"))
    write_csv(d, args.output)
    if args.train_out or args.test_out:
        train, test = simbench.stratified_split(d, spec.split, rng.fork("split"))
        train = simbench.contaminate(train, spec, rng.fork("contaminate"))
        if args.train_out:
            write_csv(train, args.train_out)
        if args.test_out:
            write_csv(test, args.test_out)
    return EXIT_OK


def _apply_config(parser, argv):
    """Re-parse with config-file values installed as subparser defaults."""
    args = parser.parse_args(argv)
    path = getattr(args, "config", None)
    if not path:
        return args
    values = read_config(path)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in values.items():
        if key not in known or key in ("config", "help"):
            raise UsageError(f"unknown config key {key!r}")
        action = known[key]
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            try:
                defaults[key] = action.type(raw)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"config key {key!r}: {exc}") from None
        else:
            defaults[key] = raw
        if action.choices is not None and defaults[key] not in action.choices:
            raise UsageError(f"config key {key!r}: {raw!r} not in {list(action.choices)}")
    sub.set_defaults(**defaults)
    for action in sub._actions:
        if action.dest in defaults and not action.option_strings:
            action.nargs = "?"
    return parser.parse_args(argv)


def main(argv=None):
    parser = build_parser()
    try:
        args = _apply_config(parser, sys.argv[1:] if argv is None else argv)
        if not getattr(args, "command", None):
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except UsageError as exc:
        print(f"error: UsageError: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SkewguardError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: IoError: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
