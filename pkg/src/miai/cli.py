"""``miai`` command line: ``gen``, ``run`` and ``fixture-check``.

Exit codes: 0 success, 1 internal error (or a failed fixture check), 2 invalid input.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import yaml

from . import __version__
from .agreement import EXPECTED_LR_SIGN_MATCHES, FIXTURE_TOLERANCE, PublishedTables, check_fixture
from .dataset import DatasetError, generate_synthetic
from .explain_lime import LimeConfig
from .explain_shap import ShapConfig, ShapMode
from .models import ModelKind, TrainConfig
from .pipeline import RunConfig, StageError, SyntheticSource, run_protocol
from .report import write_report

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT = 0, 1, 2

log = logging.getLogger("miai")


class InputError(Exception):
    """Invalid user input; reported with exit code 2."""


def _model_list(values) -> list[ModelKind]:
    kinds = []
    for v in values or []:
        for part in str(v).split(","):
            if part.strip():
                kinds.append(ModelKind.parse(part))
    return kinds


def _add_run_arguments(p: argparse.ArgumentParser) -> None:
    src = p.add_argument_group("data")
    src.add_argument("--data", type=Path, help="CSV file; omit to generate synthetic data")
    src.add_argument("--rows", type=int, default=6471, help="synthetic rows (default %(default)s)")
    src.add_argument("--defaults", type=int, default=50, help="synthetic defaults (default %(default)s)")
    src.add_argument("--data-seed", type=int, help="synthetic generator seed (default: --seed)")
    src.add_argument("--split-ratio", type=float, default=0.8)

    run = p.add_argument_group("run")
    run.add_argument("--seed", type=int, default=42, help="seed for split, training and explainers")
    run.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    run.add_argument("--jobs", type=int, default=1, help="worker processes for explanations")
    run.add_argument("--model", action="append", metavar="KIND",
                     help="LR, DT, RF or GBT; repeat or comma-separate (default: all four)")
    run.add_argument("--explain-sample", type=int, metavar="N",
                     help="explain only the first N test rows")
    run.add_argument("--load-models", type=Path, metavar="DIR",
                     help="reuse <kind>.json models from a previous run instead of training")

    sh = p.add_argument_group("SHAP")
    sh.add_argument("--shap-exact", action="store_true",
                    help="exact enumeration; explains at most 100 rows unless --explain-sample is set")
    sh.add_argument("--shap-permutations", type=int, default=2000)
    sh.add_argument("--shap-background", type=int, default=100, help="background rows drawn from train")

    li = p.add_argument_group("LIME")
    li.add_argument("--lime-samples", type=int, default=5000)
    li.add_argument("--lime-kernel-width", type=float, help="default 0.75*sqrt(M)")
    li.add_argument("--lime-ridge", type=float, default=1e-3)
    li.add_argument("--lime-k-features", type=int, help="features kept by the surrogate (default all)")

    tr = p.add_argument_group("training")
    d = TrainConfig()
    tr.add_argument("--lr-learning-rate", type=float, default=d.lr_learning_rate)
    tr.add_argument("--lr-epochs", type=int, default=d.lr_epochs)
    tr.add_argument("--tree-max-depth", type=int, default=d.tree_max_depth)
    tr.add_argument("--tree-min-leaf", type=int, default=d.tree_min_leaf)
    tr.add_argument("--rf-n-trees", type=int, default=d.rf_n_trees)
    tr.add_argument("--rf-feature-fraction", type=float, default=d.rf_feature_fraction)
    tr.add_argument("--rf-no-bootstrap", action="store_true")
    tr.add_argument("--gbt-n-rounds", type=int, default=d.gbt_n_rounds)
    tr.add_argument("--gbt-learning-rate", type=float, default=d.gbt_learning_rate)
    tr.add_argument("--gbt-max-depth", type=int, default=d.gbt_max_depth)

    p.add_argument("--config", type=Path, help="YAML file of flag=value pairs; flags on the command line win")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="miai", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="write a synthetic dataset as CSV")
    gen.add_argument("--rows", type=int, default=6471)
    gen.add_argument("--defaults", type=int, default=50)
    gen.add_argument("--seed", type=int, default=42)
    gen.add_argument("-o", "--output", type=Path, help="output CSV (default: stdout)")

    run = sub.add_parser("run", help="train, evaluate, explain and score all models")
    _add_run_arguments(run)

    fx = sub.add_parser("fixture-check", help="recompute MIAI from the published attribution tables")
    fx.add_argument("--tolerance", type=float, default=FIXTURE_TOLERANCE)
    fx.add_argument("--lr-sign-matches", type=int, default=EXPECTED_LR_SIGN_MATCHES,
                    help="required LR LIME/SHAP sign-agreement count (default %(default)s)")
    fx.add_argument("--fixture", type=Path, help="alternative fixture JSON with the same layout")
    return parser


def _subparser(parser: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    return action.choices[name]


def load_config_file(path: Path, run_parser: argparse.ArgumentParser) -> dict:
    """Read a flat YAML mapping whose keys are ``run`` flag names (dashes or underscores)."""
    try:
        doc = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise InputError(f"config {path} is not valid YAML: {exc}") from exc
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise InputError(f"config {path} must be a flat key: value mapping")
    known = {a.dest: a for a in run_parser._actions if a.dest not in ("help", "config")}
    values = {}
    for key, value in doc.items():
        dest = str(key).lstrip("-").replace("-", "_")
        if dest not in known:
            raise InputError(f"unknown config key {key!r}")
        if isinstance(value, (dict, list)) and dest != "model":
            raise InputError(f"config key {key!r} must be a scalar")
        action = known[dest]
        if dest == "model":
            value = value if isinstance(value, list) else [value]
        elif value is not None and action.type is not None:
            value = action.type(value)
        values[dest] = value
    return values


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "run" and args.config is not None:
        run_parser = _subparser(parser, "run")
        run_parser.set_defaults(**load_config_file(args.config, run_parser))
        args = parser.parse_args(argv)
    return args


def run_config_from_args(args) -> RunConfig:
    if args.data is not None:
        data = args.data
        if not data.is_file():
            raise InputError(f"data file not found: {data}")
    else:
        data = SyntheticSource(args.rows, args.defaults, args.seed if args.data_seed is None else args.data_seed)
    try:
        train = TrainConfig(
            seed=args.seed,
            lr_learning_rate=args.lr_learning_rate,
            lr_epochs=args.lr_epochs,
            tree_max_depth=args.tree_max_depth,
            tree_min_leaf=args.tree_min_leaf,
            rf_n_trees=args.rf_n_trees,
            rf_feature_fraction=args.rf_feature_fraction,
            rf_bootstrap=not args.rf_no_bootstrap,
            gbt_n_rounds=args.gbt_n_rounds,
            gbt_learning_rate=args.gbt_learning_rate,
            gbt_max_depth=args.gbt_max_depth,
        )
        lime = LimeConfig(
            n_samples=args.lime_samples,
            kernel_width=args.lime_kernel_width,
            ridge_lambda=args.lime_ridge,
            k_features=args.lime_k_features,
            seed=args.seed,
        )
        shap = ShapConfig(
            mode=ShapMode.EXACT if args.shap_exact else ShapMode.SAMPLING,
            max_background=args.shap_background,
            n_permutations=args.shap_permutations,
            seed=args.seed,
        )
        return RunConfig(
            data=data,
            split_ratio=args.split_ratio,
            seed=args.seed,
            train=train,
            lime=lime,
            shap=shap,
            explain_sample=args.explain_sample,
            models=tuple(_model_list(args.model)) or RunConfig.models,
            out_dir=args.out,
            n_jobs=args.jobs,
            models_dir=args.load_models,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def cmd_generate(args) -> int:
    try:
        data = generate_synthetic(args.rows, args.defaults, args.seed)
    except DatasetError as exc:
        raise InputError(str(exc)) from exc
    if args.output is None:
        sys.stdout.write(data.to_csv_text())
    else:
        data.to_csv(args.output)
        log.info("wrote %d rows (%d defaults) to %s", len(data), data.n_defaults, args.output)
    return EXIT_OK


def _stage_exit_code(err: StageError) -> int:
    return EXIT_INPUT if isinstance(err.cause, (DatasetError, OSError, ValueError)) else EXIT_INTERNAL


def cmd_run(args) -> int:
    cfg = run_config_from_args(args)
    try:
        report = run_protocol(cfg)
    except StageError as err:
        print(f"miai run: stage '{err.stage}' failed: {err.cause}", file=sys.stderr)
        return _stage_exit_code(err)
    try:
        written = write_report(report, cfg.out_dir)
    except OSError as exc:
        print(f"miai run: stage 'report' failed: {exc}", file=sys.stderr)
        return EXIT_INPUT
    for k in report.kinds:
        print(f"{k.value:<4} AUC {report.roc[k].auc:.4f}  MIAI {report.miai[k].miai: .4f}")
    print(f"wrote {len(written)} files to {cfg.out_dir}")
    return EXIT_OK


def cmd_fixture_check(args) -> int:
    t0 = time.perf_counter()
    tables = None
    if args.fixture is not None:
        try:
            tables = PublishedTables.from_dict(json.loads(args.fixture.read_text(encoding="utf-8")))
        except (OSError, ValueError, KeyError) as exc:
            raise InputError(f"cannot read fixture {args.fixture}: {exc}") from exc
    result = check_fixture(tables, args.tolerance, args.lr_sign_matches)
    for line in result.lines():
        print(line)
    print(f"elapsed {time.perf_counter() - t0:.3f}s")
    if not result.passed:
        names = ", ".join(k.value for k in result.failing_models)
        print(f"fixture check failed: {names}", file=sys.stderr)
        return EXIT_INTERNAL
    print("fixture check passed")
    return EXIT_OK


COMMANDS = {"gen": cmd_generate, "run": cmd_run, "fixture-check": cmd_fixture_check}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except InputError as exc:
        print(f"miai: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:
        # argparse usage errors exit with 2 already
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"miai {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        print(f"miai {args.command}: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL
