"""Command-line interface: encode, fit, predict, rules, eval.

Exit status is 0 on success, 1 on usage errors and 2 on data or model errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import persistence
from .dataset import ConstantImputer, Dataset, dump_csv, load_csv, variance_select
from .em import EmConfig, MultivariateBernoulliNBEM
from .evaluation import MODELS, BenchmarkConfig, run_benchmark
from .exceptions import KgBernoulliError
from .kg import encode_individuals, generate_features, parse_kb
from .mbnb import MbnbParams, MultivariateBernoulliNB, decide, posterior
from .mixture import HbmModel, fit_hbm, hbm_posterior, select_k
from .rules import extract_axiom, extract_disjunctive, extract_rule, render_file

logger = logging.getLogger("kgbernoulli")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _ranged(kind, lo=None, hi=None, lo_open=False, hi_open=False):
    def parse(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid {kind.__name__} value: {text!r}") from None
        if lo is not None and (v < lo or (lo_open and v == lo)):
            raise argparse.ArgumentTypeError(f"{v} is below the allowed range")
        if hi is not None and (v > hi or (hi_open and v == hi)):
            raise argparse.ArgumentTypeError(f"{v} is above the allowed range")
        return v
    return parse


def _int_list(text):
    """``2..10`` or ``2,3,5``."""
    try:
        if ".." in text:
            a, b = text.split("..")
            values = list(range(int(a), int(b) + 1))
        else:
            values = [int(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer list {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("integer list must be non-empty and positive")
    return values


alpha_t = _ranged(float, 0.0)
theta_t = _ranged(float, 0.5, 1.0)
axiom_theta_t = _ranged(float, 0.5, 1.0, True, True)
pos_int = _ranged(int, 1)
tol_t = _ranged(float, 0.0, lo_open=True)
cutoff_t = _ranged(float, 0.0, 0.25)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to standard error")
    p = _Parser(prog="kgbernoulli", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _add = sub.add_parser

    def add_parser(name, **kw):
        return _add(name, parents=[common], **kw)

    sub.add_parser = add_parser

    enc = sub.add_parser("encode", help="encode a knowledge base as a ternary CSV")
    enc.add_argument("kb")
    enc.add_argument("-o", "--output", required=True)
    enc.add_argument("--variance-cutoff", type=cutoff_t, default=None,
                     help="drop features whose known-cell variance is at most this value")

    fit = sub.add_parser("fit", help="fit a model on a labelled CSV")
    fit.add_argument("csv")
    fit.add_argument("--model", choices=MODELS, default="mbnb")
    fit.add_argument("-o", "--output", required=True)
    fit.add_argument("--alpha", type=alpha_t, default=1.0)
    fit.add_argument("--imputation", choices=["marginalize", "constant", "uninformative"], default="marginalize",
                     help="Unknown-input handling for --model mbnb")
    fit.add_argument("--no-phase2", action="store_true", help="mbnb-em: skip EM over unlabelled rows")
    fit.add_argument("--K", type=pos_int, default=None, help="hbm: mixture size (default: BIC over --k-grid)")
    fit.add_argument("--k-grid", type=_int_list, default=list(range(2, 11)))
    fit.add_argument("--restarts", type=pos_int, default=10)
    fit.add_argument("--variant", choices=["pipeline", "class_conditional"], default="pipeline")
    fit.add_argument("--tol", type=tol_t, default=1e-6)
    fit.add_argument("--max-iter", type=pos_int, default=200)
    fit.add_argument("--seed", type=int, default=42)

    pred = sub.add_parser("predict", help="add posterior and decision columns to a CSV")
    pred.add_argument("model")
    pred.add_argument("csv")
    pred.add_argument("-o", "--output", required=True)
    pred.add_argument("--theta", type=theta_t, default=0.5, help="confidence below which a decision is rejected")

    rules = sub.add_parser("rules", help="extract an axiom or rule set from a fitted model")
    rules.add_argument("model")
    rules.add_argument("--theta", type=axiom_theta_t, default=0.9)
    rules.add_argument("-o", "--output", required=True)
    rules.add_argument("--target", default="C", help="name of the target class")
    rules.add_argument("--form", choices=["axiom", "rule", "complement"], default="axiom",
                       help="naive Bayes models: what to extract")
    rules.add_argument("--simplified", action="store_true", help="keep only the more probable literal per feature")
    rules.add_argument("--data", help="labelled CSV used to estimate component links (pipeline hbm)")

    ev = sub.add_parser("eval", help="cross-validate models on random problems over a knowledge base")
    ev.add_argument("kb")
    ev.add_argument("--models", nargs="+", choices=MODELS, default=list(MODELS))
    ev.add_argument("-o", "--output", required=True)
    ev.add_argument("--folds", type=_ranged(int, 2), default=10)
    ev.add_argument("--problems", type=pos_int, default=10)
    ev.add_argument("--seed", type=int, default=42)
    ev.add_argument("--min-pos", type=pos_int, default=10)
    ev.add_argument("--min-neg", type=pos_int, default=10)
    ev.add_argument("--variance-cutoff", type=cutoff_t, default=0.01)
    ev.add_argument("--alpha", type=alpha_t, default=1.0)
    ev.add_argument("--imputation", choices=["marginalize", "constant", "uninformative"], default="uninformative",
                    help="Unknown-input handling for plain mbnb")
    ev.add_argument("--k-grid", type=_int_list, default=list(range(2, 11)))
    ev.add_argument("--restarts", type=pos_int, default=10)
    ev.add_argument("--variant", choices=["pipeline", "class_conditional"], default="pipeline")
    ev.add_argument("--tol", type=tol_t, default=1e-6)
    ev.add_argument("--max-iter", type=pos_int, default=200)
    return p


# ------------------------------------------------------------------ commands

def _read_dataset(path) -> Dataset:
    with open(path, "rb") as fh:
        return load_csv(fh)


def cmd_encode(args) -> None:
    kb = parse_kb(Path(args.kb).read_text(encoding="utf-8"))
    ds = encode_individuals(kb, generate_features(kb))
    if args.variance_cutoff is not None:
        ds = variance_select(ds, args.variance_cutoff)
    Path(args.output).write_text(dump_csv(ds), encoding="utf-8")
    logger.info("encoded %d individuals x %d features", ds.n_rows, ds.n_features)


def cmd_fit(args) -> None:
    ds = _read_dataset(args.csv)
    if ds.y is None:
        raise KgBernoulliError(f"{args.csv}: no 'label' column")
    names = ds.feature_names
    cfg = EmConfig(tol=args.tol, max_iter=args.max_iter, seed=args.seed, alpha=args.alpha)
    extra = {"model": args.model}
    if args.model == "mbnb":
        est = MultivariateBernoulliNB(alpha=args.alpha, imputation=args.imputation).fit(ds.X, ds.y, names)
        model = est.params_
        extra["imputation"] = {"strategy": args.imputation}
        if args.imputation != "marginalize":
            extra["imputation"]["fill"] = est.imputer_.fill_.tolist()
    elif args.model == "mbnb-em":
        est = MultivariateBernoulliNBEM(alpha=args.alpha, tol=args.tol, max_iter=args.max_iter,
                                        phase2=not args.no_phase2).fit(ds.X, ds.y, names)
        model = est.params_
    else:
        K = args.K
        if K is None:
            K, table = select_k(ds.X, args.k_grid, args.restarts, cfg)
            extra["bic"] = {str(k): row["bic"] for k, row in table.items()}
        model = fit_hbm(ds, K=K, restarts=args.restarts, alpha=args.alpha,
                        cfg=EmConfig(tol=args.tol, max_iter=args.max_iter, seed=args.seed),
                        variant=args.variant)
        extra["K"] = K
    persistence.save_model(model, args.output, **extra)


def _align(ds: Dataset, names) -> np.ndarray:
    col = {n: i for i, n in enumerate(ds.feature_names)}
    missing = [n for n in names if n not in col]
    if missing:
        raise KgBernoulliError(f"CSV lacks model features: {', '.join(missing)}")
    return ds.X[:, [col[n] for n in names]]


def _model_posterior(model, doc, ds: Dataset) -> np.ndarray:
    if isinstance(model, MbnbParams):
        X = _align(ds, model.feature_names)
        imp = doc.get("imputation") or {}
        if "fill" in imp:
            imputer = ConstantImputer()
            imputer.fill_ = np.asarray(imp["fill"], dtype=float)
            X = imputer.transform(X)
        return np.atleast_1d(posterior(model, X))
    if isinstance(model, HbmModel):
        return np.atleast_1d(hbm_posterior(model, _align(ds, model.top.feature_names)))
    raise KgBernoulliError(f"model kind {doc.get('kind')!r} cannot classify")


def cmd_predict(args) -> None:
    model, doc = persistence.load_model(args.model)
    ds = _read_dataset(args.csv)
    q = _model_posterior(model, doc, ds) if ds.n_rows else np.empty(0)
    decisions = [decide(float(v), args.theta).label.value for v in q]
    text = dump_csv(ds, {"posterior": [f"{v:.6f}" for v in q], "decision": decisions})
    Path(args.output).write_text(text, encoding="utf-8")


def cmd_rules(args) -> None:
    model, doc = persistence.load_model(args.model)
    kind = doc.get("model", doc["kind"])
    if isinstance(model, MbnbParams):
        if args.form == "axiom":
            obj = extract_axiom(model, args.target, args.theta)
        else:
            obj = extract_rule(model, args.target, args.simplified, complement=args.form == "complement")
    elif isinstance(model, HbmModel):
        ds = _read_dataset(args.data) if args.data else None
        obj = extract_disjunctive(model, args.target, args.theta, ds)
    else:
        raise KgBernoulliError(f"cannot extract rules from a {doc['kind']!r} model")
    theta = args.theta if not (isinstance(model, MbnbParams) and args.form != "axiom") else None
    Path(args.output).write_text(render_file(obj, kind, theta, simplified=args.simplified), encoding="utf-8")


def cmd_eval(args) -> None:
    kb = parse_kb(Path(args.kb).read_text(encoding="utf-8"))
    cfg = BenchmarkConfig(
        models=tuple(args.models), folds=args.folds, n_problems=args.problems, seed=args.seed,
        min_pos=args.min_pos, min_neg=args.min_neg, variance_cutoff=args.variance_cutoff,
        alpha=args.alpha, mbnb_imputation=args.imputation, k_grid=tuple(args.k_grid),
        restarts=args.restarts, hbm_variant=args.variant, tol=args.tol, max_iter=args.max_iter,
    )
    report = run_benchmark(kb, cfg, args.output)
    sys.stdout.write(report.table())


COMMANDS = {
    "encode": cmd_encode,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "rules": cmd_rules,
    "eval": cmd_eval,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except (KgBernoulliError, ValueError, KeyError, OSError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"kgbernoulli {args.command}: error: {msg}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
