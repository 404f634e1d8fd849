"""Command-line front end: ``train``, ``predict``, ``evaluate`` and ``benchmark``.

Exit codes: 0 success, 2 usage or validation error, 3 runtime failure.
Settings resolve as command-line flags, then the ``--config`` JSON file, then
built-in defaults.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import evaluate
from .criterion import ConfigurationError
from .data import DataError, PrepConfig, RawDataset, load_csv
from .model import Model, read_for_model
from .pipeline import INIT_POLICIES, TrainParams, canonical_method, fit

log = logging.getLogger("fracnb")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 2, 3

# config-file key -> (TrainParams attribute, type)
_PARAM_KEYS = {
    "method": ("method", str),
    "lambda": ("lam", float),
    "p": ("p", float),
    "delta": ("delta", float),
    "epsilon": ("epsilon", float),
    "max_iters": ("max_iters", int),
    "init": ("init", str),
    "seed": ("seed", int),
    "costs": ("costs", str),
}
_OTHER_KEYS = {"data": str, "target": str, "folds": int, "out": str, "model": str, "methods": str,
               "sweep": str, "max_parts": int}
CLI_METHODS = ("sg", "am", "sg.cf", "sg.ue", "ug.cf", "ug.ue", "cg.cf", "cg.ue", "snb", "fnb", "fnb+sg.cf",
               "nb", "null")


class UsageError(Exception):
    pass


def _common(p: argparse.ArgumentParser, *, training: bool):
    p.add_argument("--config", help="JSON file of default settings")
    p.add_argument("--data", help="CSV file with a header row")
    p.add_argument("--target", help="name of the class column")
    p.add_argument("--out", help="output directory")
    if training:
        p.add_argument("--method", choices=CLI_METHODS)
        p.add_argument("--lambda", dest="lambda_", type=float, metavar="LAMBDA")
        p.add_argument("--p", type=float)
        p.add_argument("--delta", type=float)
        p.add_argument("--epsilon", type=float)
        p.add_argument("--max-iters", dest="max_iters", type=int)
        p.add_argument("--init", choices=INIT_POLICIES)
        p.add_argument("--seed", type=int)
        p.add_argument("--costs", help="CSV of per-variable costs (name,cost)")
        p.add_argument("--max-parts", dest="max_parts", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fracnb", description="Weighted naive Bayes training and evaluation")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a model and write model.json and trace.csv")
    _common(p, training=True)

    p = sub.add_parser("predict", help="write per-instance class posteriors")
    _common(p, training=False)
    p.add_argument("--model", help="model JSON written by train")

    p = sub.add_parser("evaluate", help="score a saved model on labelled data")
    _common(p, training=False)
    p.add_argument("--model", help="model JSON written by train")

    p = sub.add_parser("benchmark", help="cross-validated comparison of methods")
    _common(p, training=True)
    p.add_argument("--methods", help="comma-separated method list (default: nb,snb,fnb,sg.cf)")
    p.add_argument("--folds", type=int)
    p.add_argument("--sweep", choices=tuple(evaluate.SWEEPS))
    p.add_argument("--threads", type=int, help="worker threads (default: FRACNB_THREADS or 1)")
    p.add_argument("--no-timing", action="store_true", help="leave train_seconds empty for byte-stable reports")
    return parser


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    known = set(_PARAM_KEYS) | set(_OTHER_KEYS)
    unknown = sorted(set(doc) - known)
    if unknown:
        raise UsageError(f"unknown config key(s): {', '.join(unknown)}")
    return doc


def resolve_settings(args: argparse.Namespace) -> dict:
    """Merge flags over the config file; ``None`` means unset."""
    settings = _load_config(getattr(args, "config", None))
    flags = dict(vars(args))
    if "lambda_" in flags:
        flags["lambda"] = flags.pop("lambda_")
    for key, value in flags.items():
        if value is not None and (key in _PARAM_KEYS or key in _OTHER_KEYS):
            settings[key] = value
    for key, typ in {**{k: t for k, (_, t) in _PARAM_KEYS.items()}, **_OTHER_KEYS}.items():
        if key in settings and settings[key] is not None:
            try:
                settings[key] = typ(settings[key])
            except (TypeError, ValueError) as exc:
                raise UsageError(f"bad value for {key}: {settings[key]!r}") from exc
    return settings


def train_params(settings: dict) -> TrainParams:
    kwargs = {attr: settings[key] for key, (attr, _) in _PARAM_KEYS.items() if key in settings}
    prep = PrepConfig(max_parts=settings.get("max_parts"))
    try:
        return TrainParams(prep=prep, **kwargs)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _need(settings, *keys):
    missing = [k for k in keys if not settings.get(k)]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + k for k in missing))


def _out_dir(settings) -> Path:
    out = Path(settings.get("out") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_search_trace(criteria, method: str, path):
    """Trace rows for the search methods: one per accepted candidate criterion."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["iteration", "stage", "objective", "L", "displacement", "criterion"])
        for i, c in enumerate(criteria):
            out.writerow([i, method, repr(float(c)), "", "", repr(float(c))])


def cmd_train(settings: dict) -> int:
    _need(settings, "data", "target")
    params = train_params(settings)
    raw = load_csv(settings["data"], settings["target"])
    result = fit(raw, params)
    out = _out_dir(settings)
    result.model.save(out / "model.json")
    trace_path = out / "trace.csv"
    if result.run is not None:
        result.run.write_trace(trace_path)
    elif result.search is not None:
        write_search_trace(result.search.subset_criteria, params.method, trace_path)
    else:
        write_search_trace([result.criterion], params.method, trace_path)
    print(f"method={params.method} criterion={result.criterion!r} "
          f"selected={result.model.selected_count}/{len(result.model.weights)} model={out / 'model.json'}")
    return EXIT_OK


def write_predictions(model: Model, proba: np.ndarray, fh):
    out = csv.writer(fh, lineterminator="\n")
    out.writerow(["id"] + [f"p_{c}" for c in model.classes] + ["label"])
    for i, row in enumerate(proba):
        out.writerow([i] + [repr(float(v)) for v in row] + [model.classes[int(np.argmax(row))]])


def cmd_predict(settings: dict) -> int:
    _need(settings, "model", "data")
    model = Model.load(settings["model"])
    raw = read_for_model(model, settings["data"])
    proba = model.predict_proba(raw) if raw.N else np.empty((0, len(model.classes)))
    if settings.get("out"):
        path = _out_dir(settings) / "predictions.csv"
        with open(path, "w", newline="") as fh:
            write_predictions(model, proba, fh)
    else:
        write_predictions(model, proba, sys.stdout)
    return EXIT_OK


def cmd_evaluate(settings: dict) -> int:
    _need(settings, "model", "data")
    model = Model.load(settings["model"])
    target = settings.get("target") or model.metadata.get("target")
    if not target:
        raise UsageError("missing required option: --target")
    raw = load_csv(settings["data"], target)
    unknown = sorted(set(raw.classes) - set(model.classes))
    if unknown:
        raise DataError(f"labels unseen in training: {', '.join(unknown)}")
    raw = replace_classes(raw, model.classes)
    acc, a, comp = evaluate.evaluate_model(model, raw)
    doc = {"acc": acc, "auc": None if np.isnan(a) else a, "compression": comp,
           "selected_vars": model.selected_count, "n": raw.N}
    text = json.dumps(doc, indent=1, sort_keys=True)
    if settings.get("out"):
        (_out_dir(settings) / "evaluation.json").write_text(text + "\n")
    print(text)
    return EXIT_OK


def replace_classes(raw, classes):
    """Re-index the target against the model's class order."""
    return RawDataset(raw.names, raw.kinds, raw.columns, raw.target, list(classes), raw.target_name)


def cmd_benchmark(settings: dict, threads=None, record_timing=True) -> int:
    _need(settings, "data", "target")
    params = train_params(settings)
    raw = load_csv(settings["data"], settings["target"])
    folds = settings.get("folds", 5)
    if settings.get("sweep"):
        methods = evaluate.sweep_entries(settings["sweep"], params)
    else:
        names = (settings.get("methods") or "nb,snb,fnb,sg.cf").split(",")
        try:
            methods = [canonical_method(m) for m in names if m.strip()]
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    reports = evaluate.benchmark(raw, methods, params, folds=folds, seed=params.seed,
                                 dataset_name=Path(settings["data"]).stem, threads=threads,
                                 record_timing=record_timing)
    out = _out_dir(settings)
    evaluate.write_report_csv(reports, out / "report.csv")
    evaluate.write_report_json(reports, out / "report.json")
    for method, s in evaluate.summarize(reports).items():
        print(f"{method:<28} acc={s['acc']['mean']:.4f} auc={_fmt_mean(s['auc'])} "
              f"vars={s['selected_vars']['mean']:.1f}")
    return EXIT_OK


def _fmt_mean(entry):
    return "nan" if entry["mean"] is None else f"{entry['mean']:.4f}"


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        settings = resolve_settings(args)
        if args.command == "train":
            code = cmd_train(settings)
        elif args.command == "predict":
            code = cmd_predict(settings)
        elif args.command == "evaluate":
            code = cmd_evaluate(settings)
        else:
            code = cmd_benchmark(settings, threads=args.threads, record_timing=not args.no_timing)
        sys.stdout.flush()
        return code
    except BrokenPipeError:
        # reader closed early, e.g. piped into head
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK
    except (UsageError, DataError, ConfigurationError) as exc:
        print(f"fracnb: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        log.debug("runtime failure", exc_info=True)
        print(f"fracnb: runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
