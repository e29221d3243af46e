"""Command-line interface: fit, predict, evaluate, compare, inspect.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 training error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .bundle import ModelBundle, load_bundle, save_bundle
from .dataset import SplitSpec, drop_null_rows, load_csv, load_schema, train_test_split
from .ensemble import VotingRegressor, fit_model
from .errors import ConfigError, DataError, EmissionsError, TrainingError
from .forest import ForestModel
from .gbt import GbtModel
from .metrics import ComparisonConfig, MetricReport, compare_methods, mae, parse_methods
from .nn import MlpModel, count_parameters
from .preprocess import PreprocessPipeline

log = logging.getLogger("emissions_ml")

SEED_ENV = "EMISSIONS_ML_SEED"
DEFAULT_SEED = 42


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _widths(s: str):
    return tuple(int(x) for x in s.split(",") if x.strip())


def _add_data_args(p):
    p.add_argument("--data", required=True, help="input CSV")
    p.add_argument("--schema", required=True, help="JSON schema file")
    p.add_argument("--train-fraction", type=float, default=0.9)
    p.add_argument("--no-shuffle", action="store_true", help="split in file order")
    p.add_argument("--limit", type=int, default=None, help="subsample N rows after cleaning")
    p.add_argument("--seed", type=int, default=None, help=f"default ${SEED_ENV} or {DEFAULT_SEED}")
    p.add_argument("--threads", type=int, default=1, help="worker cap; never changes results")
    p.add_argument("--preset", choices=("full", "desk"), default="full",
                   help="hyperparameter defaults: full-size budgets or reduced desk-scale ones")


def _add_member_args(p):
    g = p.add_argument_group("per-learner hyperparameters")
    g.add_argument("--rf-n-estimators", type=int)
    g.add_argument("--rf-max-depth", type=int)
    g.add_argument("--rf-criterion", choices=("squared", "absolute"))
    g.add_argument("--rf-min-samples-leaf", type=int)
    g.add_argument("--rf-max-features-fraction", type=float)
    g.add_argument("--rf-no-bootstrap", action="store_true")
    g.add_argument("--gbt-n-estimators", type=int)
    g.add_argument("--gbt-learning-rate", type=float)
    g.add_argument("--gbt-max-depth", type=int)
    g.add_argument("--gbt-reg-lambda", type=float)
    g.add_argument("--gbt-gamma", type=float)
    g.add_argument("--gbt-min-child-weight", type=float)
    g.add_argument("--objective", default=None, help="gbt objective; reg:linear means squared error")
    g.add_argument("--mlp-learning-rate", type=float)
    g.add_argument("--hidden-widths", type=_widths, help="comma-separated hidden layer widths")
    g.add_argument("--epochs", type=int)
    g.add_argument("--batch-size", type=int)
    g.add_argument("--validation-split", type=float)


def _set(obj, **kw):
    kw = {k: v for k, v in kw.items() if v is not None}
    return replace(obj, **kw) if kw else obj


def build_configs(args, seed: int) -> ComparisonConfig:
    cfg = ComparisonConfig.desk() if args.preset == "desk" else ComparisonConfig.full()
    cfg = cfg.with_seed(seed)
    forest = _set(cfg.forest, n_estimators=args.rf_n_estimators,
                  max_features_fraction=args.rf_max_features_fraction,
                  tree=_set(cfg.forest.tree, max_depth=args.rf_max_depth, criterion=args.rf_criterion,
                            min_samples_leaf=args.rf_min_samples_leaf))
    if args.rf_no_bootstrap:
        forest = replace(forest, bootstrap=False)
    gbt = _set(cfg.gbt, n_estimators=args.gbt_n_estimators, learning_rate=args.gbt_learning_rate,
               max_depth=args.gbt_max_depth, reg_lambda=args.gbt_reg_lambda, gamma=args.gbt_gamma,
               min_child_weight=args.gbt_min_child_weight, objective=args.objective)
    mlp = _set(cfg.mlp, learning_rate=args.mlp_learning_rate, hidden_widths=args.hidden_widths,
               train=_set(cfg.mlp.train, epochs=args.epochs, batch_size=args.batch_size,
                          validation_split=args.validation_split))
    return replace(cfg, forest=forest, gbt=gbt, mlp=mlp)


def _apply_generic(cfg: ComparisonConfig, args) -> ComparisonConfig:
    """Unprefixed flags on ``fit`` target the selected single learner."""
    m = args.method
    if m == "random_forest":
        tree = _set(cfg.forest.tree, max_depth=args.max_depth, criterion=args.criterion,
                    min_samples_leaf=args.min_samples_leaf)
        return replace(cfg, forest=_set(cfg.forest, n_estimators=args.n_estimators, tree=tree))
    if m == "gbt":
        return replace(cfg, gbt=_set(cfg.gbt, n_estimators=args.n_estimators,
                                     learning_rate=args.learning_rate, max_depth=args.max_depth))
    if m == "mlp":
        return replace(cfg, mlp=_set(cfg.mlp, learning_rate=args.learning_rate))
    return cfg


def prepare_data(args, seed: int):
    schema_path = Path(args.schema)
    if not schema_path.exists():
        raise ConfigError(f"schema file not found: {schema_path}")
    if not Path(args.data).exists():
        raise ConfigError(f"data file not found: {args.data}")
    schema = load_schema(schema_path)
    table = drop_null_rows(load_csv(args.data, schema))
    if args.limit is not None:
        if args.limit < 2:
            raise ConfigError("--limit must be >= 2")
        if args.limit < table.n_rows:
            rng = np.random.default_rng([seed, 7])
            table = table.take(np.sort(rng.choice(table.n_rows, size=args.limit, replace=False)))
    split = SplitSpec(args.train_fraction, seed, not args.no_shuffle)
    train, test = train_test_split(table, split)
    log.info("%d rows after cleaning: %d train / %d test", table.n_rows, train.n_rows, test.n_rows)
    return schema, train, test


def _fit_guarded(fn, *a, **kw):
    try:
        return fn(*a, **kw)
    except EmissionsError:
        raise
    except (ArithmeticError, ValueError, MemoryError, np.linalg.LinAlgError) as exc:
        raise TrainingError(f"training failed: {exc}") from exc


def _seed(args) -> int:
    return args.seed if args.seed is not None else default_seed()


def cmd_fit(args) -> int:
    seed = _seed(args)
    schema, train, test = prepare_data(args, seed)
    cfg = _apply_generic(build_configs(args, seed), args)
    pipeline = PreprocessPipeline().fit(train)
    Xtr, ytr = pipeline.transform(train)
    Xte, yte = pipeline.transform(test)
    if args.method == "voting":
        members = [n for n in args.members.split(",") if n]
        for n in members:
            if n not in ("random_forest", "gbt", "mlp"):
                raise ConfigError(f"unknown voting member {n!r}")
        model = VotingRegressor([_fit_guarded(fit_model, cfg.member_config(n), Xtr, ytr, n_jobs=args.threads)
                                 for n in members])
    else:
        model = _fit_guarded(fit_model, cfg.member_config(args.method), Xtr, ytr, n_jobs=args.threads)
    for m in (model.members if isinstance(model, VotingRegressor) else [model]):
        if isinstance(m, MlpModel):
            log.info("mlp trainable parameters: %d", count_parameters(m.architecture))
            print(f"mlp trainable parameters: {count_parameters(m.architecture)}", file=sys.stderr)

    bundle = ModelBundle(list(schema), pipeline, model, seed)
    out = Path(args.out)
    save_bundle(bundle, out)
    metrics = {
        "method": args.method,
        "n_train": int(len(ytr)),
        "n_test": int(len(yte)),
        "train_mae": mae(model.predict(Xtr), ytr),
        "test_mae": mae(model.predict(Xte), yte),
        "n_features": pipeline.n_features_out,
    }
    Path(str(out) + ".metrics.json").write_text(json.dumps(metrics, indent=2) + "\n")
    if isinstance(model, MlpModel) and hasattr(model, "history_"):
        Path(str(out) + ".history.csv").write_text(model.history_.to_csv())
    print(json.dumps(metrics) if args.format == "json" else
          f"wrote {out}  train MAE {metrics['train_mae']:.4f}  test MAE {metrics['test_mae']:.4f}")
    return 0


def _load_input(bundle: ModelBundle, path):
    if not Path(path).exists():
        raise ConfigError(f"input file not found: {path}")
    table = load_csv(path, bundle.schema, require_target=False)
    for c in table.schema:
        if c.kind != "target" and table.missing[c.name].any():
            row = int(np.flatnonzero(table.missing[c.name])[0]) + 2
            raise DataError(f"column {c.name!r} has a missing or unparseable value at line {row}")
    return table


def cmd_predict(args) -> int:
    bundle = load_bundle(args.bundle)
    table = _load_input(bundle, args.input)
    pred = bundle.predict_table(table) if table.n_rows else np.zeros(0)
    out = sys.stdout if args.out in (None, "-") else open(args.out, "w", newline="", encoding="utf-8")
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["prediction"])
        for p in pred:
            w.writerow([repr(float(p))])
    finally:
        if out is not sys.stdout:
            out.close()
    target = table.target
    if target is not None and table.n_rows and not table.missing[target.name].any():
        print(f"MAE {mae(pred, table.columns[target.name]):.6f}", file=sys.stderr)
    return 0


def cmd_evaluate(args) -> int:
    bundle = load_bundle(args.bundle)
    table = drop_null_rows(load_csv(args.data, bundle.schema))
    X, y = bundle.pipeline.transform(table)
    r = MetricReport.from_predictions(bundle.model.model_type, bundle.model.predict(X), y)
    doc = {"method": r.method_name, "mae": r.mae, "mse": r.mse, "rmse": r.rmse, "n": r.n}
    if args.format == "json":
        print(json.dumps(doc, indent=2))
    elif args.format == "csv":
        print(",".join(doc))
        print(",".join(repr(v) if isinstance(v, float) else str(v) for v in doc.values()))
    else:
        print(f"{r.method_name}: MAE {r.mae:.4f}  MSE {r.mse:.4f}  RMSE {r.rmse:.4f}  n={r.n}")
    return 0


def cmd_compare(args) -> int:
    seed = _seed(args)
    _, train, test = prepare_data(args, seed)
    cfg = replace(build_configs(args, seed), methods=parse_methods(args.methods))
    table = _fit_guarded(compare_methods, train, test, cfg, n_jobs=args.threads,
                         track_memory=args.timings)
    sys.stdout.write(table.render(args.format, timings=args.timings))
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "comparison.csv").write_text(table.to_csv(args.timings))
        (out / "comparison.json").write_text(table.to_json(args.timings))
        (out / "comparison.txt").write_text(table.to_text())
    return 0


def _describe(model, indent=""):
    lines = [f"{indent}model_type: {model.model_type}"]
    if isinstance(model, ForestModel):
        c = model.config
        lines.append(f"{indent}trees: {len(model.trees)}  max_depth: {c.tree.max_depth}  "
                     f"criterion: {c.tree.criterion}  bootstrap: {c.bootstrap}")
    elif isinstance(model, GbtModel):
        c = model.config
        lines.append(f"{indent}rounds: {len(model.trees)}  learning_rate: {c.learning_rate}  "
                     f"max_depth: {c.max_depth}  base_score: {model.base_score:.6g}")
    elif isinstance(model, MlpModel):
        lines.append(f"{indent}layer_widths: {list(model.architecture.layer_widths)}  "
                     f"parameters: {count_parameters(model.architecture)}")
    elif isinstance(model, VotingRegressor):
        lines.append(f"{indent}weights: {model.weights}")
        for m in model.members:
            lines += _describe(m, indent + "  ")
    return lines


def cmd_inspect(args) -> int:
    b = load_bundle(args.bundle)
    if args.format == "json":
        print(json.dumps({
            "format_version": b.format_version, "created_at": b.created_at, "seed": b.seed,
            "model_type": b.model.model_type, "n_features": b.pipeline.n_features_out,
            "feature_names": b.pipeline.feature_names_out,
        }, indent=2))
        return 0
    print(f"bundle format {b.format_version}, created {b.created_at}, seed {b.seed}")
    print(f"schema: {', '.join(f'{c.name}:{c.kind}' for c in b.schema)}")
    print(f"encoded features: {b.pipeline.n_features_out}")
    print("\n".join(_describe(b.model)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="emissions-ml", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="clean, split, fit one model and write a bundle")
    _add_data_args(fit)
    _add_member_args(fit)
    fit.add_argument("--method", choices=("random_forest", "gbt", "mlp", "voting"), default="random_forest")
    fit.add_argument("--members", default="mlp,random_forest", help="voting members, comma-separated")
    fit.add_argument("--n-estimators", type=int)
    fit.add_argument("--max-depth", type=int)
    fit.add_argument("--criterion", choices=("squared", "absolute"))
    fit.add_argument("--min-samples-leaf", type=int)
    fit.add_argument("--learning-rate", type=float)
    fit.add_argument("--out", default="model.json")
    fit.add_argument("--format", choices=("text", "csv", "json"), default="text")
    fit.set_defaults(func=cmd_fit)

    pr = sub.add_parser("predict", help="predict a CSV with a saved bundle")
    pr.add_argument("--bundle", required=True)
    pr.add_argument("--input", required=True)
    pr.add_argument("--out", default="-")
    pr.set_defaults(func=cmd_predict)

    ev = sub.add_parser("evaluate", help="score a saved bundle on a labelled CSV")
    ev.add_argument("--bundle", required=True)
    ev.add_argument("--data", required=True)
    ev.add_argument("--format", choices=("text", "csv", "json"), default="text")
    ev.set_defaults(func=cmd_evaluate)

    cmp_ = sub.add_parser("compare", help="six-method MAE comparison table")
    _add_data_args(cmp_)
    _add_member_args(cmp_)
    cmp_.add_argument("--methods", default=",".join(m for m in (
        "random_forest", "gbt", "mlp", "mlp+gbt", "mlp+random_forest", "mlp+gbt+random_forest")))
    cmp_.add_argument("--format", choices=("text", "csv", "json"), default="text")
    cmp_.add_argument("--timings", action="store_true",
                      help="add fit_seconds/peak_mb to csv/json output (not reproducible)")
    cmp_.add_argument("--out-dir", default=None)
    cmp_.set_defaults(func=cmd_compare)

    ins = sub.add_parser("inspect", help="print a bundle summary")
    ins.add_argument("--bundle", required=True)
    ins.add_argument("--format", choices=("text", "json"), default="text")
    ins.set_defaults(func=cmd_inspect)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except EmissionsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
