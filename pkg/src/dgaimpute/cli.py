"""Command-line entry point: ``dgaimpute {gen,train ae,train clf,impute,bench}``.

Every successful run writes a JSON manifest holding the resolved options;
passing that manifest back through ``--config`` repeats the run. Plain
``key=value`` files are accepted by ``--config`` as well. Explicit flags
override config values.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import __version__, autoenc, bench, classifier, imputer, mlp, synthgen
from .data import read_records, write_records
from .errors import DGAError
from .evo import GAConfig, PSOConfig

log = logging.getLogger("dgaimpute")


# ------------------------------------------------------------ arg types

def _int_at_least(lo):
    def conv(text):
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
        if v < lo:
            raise argparse.ArgumentTypeError(f"must be >= {lo}, got {v}")
        return v
    return conv


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {v}")
    return v


def _fraction(text):
    v = float(text)
    if not 0 <= v < 1:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1), got {v}")
    return v


def _k_list(text):
    try:
        ks = tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not ks or any(not 0 <= k <= 10 for k in ks):
        raise argparse.ArgumentTypeError("k values must lie in [0, 10]")
    return ks


def _optimizer_list(text):
    names = tuple(t.strip().lower() for t in text.split(",") if t.strip())
    bad = [n for n in names if n not in imputer.OPTIMIZERS]
    if not names or bad:
        raise argparse.ArgumentTypeError(
            f"unknown optimizer(s) {bad}; choose from {', '.join(imputer.OPTIMIZERS)}")
    return names


# --------------------------------------------------------------- parser

def _common(p, seed=True):
    p.add_argument("--config", help="key=value file or a previous run manifest (JSON)")
    if seed:
        p.add_argument("--seed", type=_int_at_least(0), default=0, help="master random seed")


def _train_flags(p, hidden, epochs):
    p.add_argument("--data", required=True, help="training CSV (complete records)")
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--hidden", type=_int_at_least(1), default=hidden, help="hidden units")
    p.add_argument("--epochs", type=_int_at_least(0), default=epochs, help="training epochs")
    p.add_argument("--method", choices=("scg", "gd"), default="scg", help="training algorithm")
    p.add_argument("--lr", type=_positive_float, default=0.1, help="learning rate (gd)")
    p.add_argument("--momentum", type=float, default=0.9, help="momentum (gd)")
    p.add_argument("--target-error", type=_positive_float, default=1e-4,
                   help="stop once the average error falls below this")
    p.add_argument("--tanh-gain", type=_positive_float, default=1.0, help="c in tanh(c*a)")
    _common(p)


def _impute_flags(p):
    p.add_argument("--mode", choices=imputer.MODES, default="full",
                   help="objective: full reconstruction or known variables only")
    p.add_argument("--tolerance", type=_positive_float, default=1e-3,
                   help="known-variable error below which no restart happens")
    p.add_argument("--restarts", type=_int_at_least(1), default=3, help="maximum optimizer runs")
    p.add_argument("--population", type=_int_at_least(2), default=20, help="GA population")
    p.add_argument("--generations", type=_int_at_least(1), default=25, help="GA generations")
    p.add_argument("--swarm", type=_int_at_least(1), default=20, help="PSO swarm size")
    p.add_argument("--iterations", type=_int_at_least(1), default=50, help="PSO iterations")
    p.add_argument("--jobs", type=_int_at_least(1), default=1,
                   help="worker processes; results do not depend on it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dgaimpute",
        description="Recover missing DGA gas readings with an autoencoder and GA/PSO search.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic labelled dataset")
    g.add_argument("--n", type=_int_at_least(0), default=500, help="number of records")
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--rank", type=_int_at_least(1), default=3, help="latent factor rank")
    g.add_argument("--noise", type=_fraction, default=0.05, help="relative log-noise")
    g.add_argument("--loading-seed", type=_int_at_least(0), default=0, help="seed of the loading matrix")
    g.add_argument("--rules", help="rule table file (NAME=THRESHOLD lines)")
    g.add_argument("--missing", type=_int_at_least(0), default=0,
                   help="also write a copy with this many gases blanked per record")
    g.add_argument("--mechanism", choices=("MCAR", "MAR"), default="MCAR")
    _common(g)

    t = sub.add_parser("train", help="train a model")
    tsub = t.add_subparsers(dest="model_kind", required=True)
    _train_flags(tsub.add_parser("ae", help="train the autoencoder"), 7, 2000)
    _train_flags(tsub.add_parser("clf", help="train the condition classifier"), 31, 1500)

    i = sub.add_parser("impute", help="fill missing cells of a CSV")
    i.add_argument("--model", required=True, help="autoencoder model file")
    i.add_argument("--data", required=True, help="CSV with empty cells for missing values")
    i.add_argument("--out", required=True, help="completed CSV to write")
    i.add_argument("--report", help="sidecar report CSV (default: <out>.report.csv)")
    i.add_argument("--optimizer", choices=imputer.OPTIMIZERS, default="ga")
    i.add_argument("--classify", metavar="CLF_MODEL",
                   help="classifier model; adds predicted labels to the report")
    _impute_flags(i)
    _common(i)

    b = sub.add_parser("bench", help="run the missing-variable sweep")
    b.add_argument("--out", required=True, help="output directory")
    b.add_argument("--k", type=_k_list, default=(0, 1, 2, 3, 4), help="comma-separated k values")
    b.add_argument("--trials", type=_int_at_least(1), default=3, help="trials per k")
    b.add_argument("--optimizers", type=_optimizer_list, default=("ga", "pso"),
                   help="comma-separated: ga,pso,mean,zero")
    b.add_argument("--n-train", type=_int_at_least(50), default=500, help="autoencoder training records")
    b.add_argument("--n-test", type=_int_at_least(1), default=200, help="test records")
    b.add_argument("--n-classifier", type=_int_at_least(2), default=2000,
                   help="classifier training records")
    b.add_argument("--train", help="training CSV instead of generated data")
    b.add_argument("--test", help="labelled test CSV instead of generated data")
    b.add_argument("--ae-epochs", type=_int_at_least(0), default=2000)
    b.add_argument("--clf-epochs", type=_int_at_least(0), default=1500)
    _impute_flags(b)
    _common(b)
    return parser


# -------------------------------------------------------- config files

def _config_tokens(path: str) -> list:
    text = Path(path).read_text(encoding="utf-8")
    if path.endswith(".json"):
        items = json.loads(text)["config"].items()
    else:
        items = []
        for ln in text.splitlines():
            ln = ln.split("#", 1)[0].strip()
            if ln:
                key, _, value = ln.partition("=")
                items.append((key.strip(), value.strip()))
    tokens = []
    for key, value in items:
        flag = "--" + key.replace("_", "-")
        if value is True or (isinstance(value, str) and value.lower() == "true"):
            tokens.append(flag)
        elif value is False or value is None or value == "false":
            continue
        else:
            if isinstance(value, (list, tuple)):
                value = ",".join(str(v) for v in value)
            tokens += [flag, str(value)]
    return tokens


def _expand_config(argv: list) -> list:
    if "--config" not in argv:
        return argv
    pos = argv.index("--config")
    if pos + 1 >= len(argv):
        return argv
    path = argv[pos + 1]
    rest = argv[:pos] + argv[pos + 2:]
    # config goes right after the subcommand words so explicit flags (parsed later) win
    head = 2 if rest[:1] == ["train"] else 1
    lead = 0
    while lead < len(rest) and rest[lead].startswith("-"):
        lead += 1
    cut = lead + head
    return rest[:cut] + _config_tokens(path) + rest[cut:]


_NOT_CONFIG = {"command", "model_kind", "config", "verbose", "func"}


def _resolved(args) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in _NOT_CONFIG or v is None:
            continue
        out[k] = list(v) if isinstance(v, tuple) else v
    return out


def _write_manifest(path: Path, command: str, args, inputs, outputs, started: float):
    manifest = {
        "command": command,
        "config": _resolved(args),
        "seeds": {"seed": getattr(args, "seed", None)},
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "version": __version__,
        "wall_time_s": round(time.perf_counter() - started, 6),
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path


# ------------------------------------------------------------- commands

def cmd_gen(args, started):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rule = synthgen.RuleTable.load(args.rules) if args.rules else synthgen.RuleTable()
    cfg = synthgen.GenConfig(n_records=args.n, latent_rank=args.rank, loading_seed=args.loading_seed,
                             noise_fraction=args.noise, rule=rule, seed=args.seed)
    ds = synthgen.generate(cfg)
    paths = [out / "dataset.csv", out / "rules.txt"]
    write_records(ds, paths[0])
    rule.save(paths[1])
    if args.missing:
        masked = synthgen.mask_missing(ds, args.missing, args.mechanism, seed=args.seed)
        paths.append(out / f"dataset_missing{args.missing}.csv")
        write_records(masked, paths[-1])
    log.info("wrote %d records to %s", len(ds), paths[0])
    _write_manifest(out / "manifest.json", "gen", args, [args.rules] if args.rules else [], paths, started)


def _train_config(args):
    return mlp.TrainConfig(epochs=args.epochs, method=args.method, learning_rate=args.lr,
                           momentum=args.momentum, target_error=args.target_error, seed=args.seed)


def _write_trace(trace, path):
    lines = ["epoch,average_error"] + [f"{i},{v!r}" for i, v in enumerate(trace, start=1)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_train(args, started):
    ds = read_records(args.data)
    cfg = _train_config(args)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.model_kind == "ae":
        model = autoenc.train_autoencoder(ds, args.hidden, cfg, c=args.tanh_gain)
        autoenc.save_model(model, out)
    else:
        model = classifier.train_classifier(ds, cfg, args.hidden, c=args.tanh_gain)
        classifier.save_model(model, out)
    trace = out.with_name(out.name + ".trace.csv")
    _write_trace(model.trace, trace)
    log.info("trained %s for %d epochs", args.model_kind, len(model.trace))
    _write_manifest(out.with_name(out.name + ".manifest.json"), f"train {args.model_kind}", args,
                    [args.data], [out, trace], started)


def _impute_config(args, optimizer):
    return imputer.ImputeConfig(
        optimizer=optimizer,
        ga=GAConfig(population=args.population, generations=args.generations),
        pso=PSOConfig(swarm=args.swarm, iterations=args.iterations),
        mode=args.mode, tolerance=args.tolerance, max_restarts=args.restarts, seed=args.seed)


def cmd_impute(args, started):
    model = autoenc.load_model(args.model)
    ds = read_records(args.data)
    completed, results = imputer.impute_dataset(model, ds, _impute_config(args, args.optimizer),
                                                jobs=args.jobs)
    out = Path(args.out)
    write_records(completed, out)
    report = Path(args.report) if args.report else out.with_name(out.name + ".report.csv")
    imputer.write_report(results, report)
    inputs = [args.model, args.data]
    if args.classify:
        clf = classifier.load_model(args.classify)
        _append_predictions(report, clf, completed)
        inputs.append(args.classify)
    _write_manifest(out.with_name(out.name + ".manifest.json"), "impute", args, inputs,
                    [out, report], started)


def _append_predictions(report: Path, clf, completed):
    lines = report.read_text(encoding="utf-8").splitlines()
    preds = [classifier.classify(clf, r) for r in completed]
    body = [f"{lines[0]},predicted_label,score"]
    body += [f"{ln},{lab.value},{score!r}" for ln, (lab, score) in zip(lines[1:], preds)]
    report.write_text("\n".join(body) + "\n", encoding="utf-8")


def cmd_bench(args, started):
    cfg = bench.SweepConfig(
        ks=args.k, optimizers=args.optimizers, trials=args.trials, seed=args.seed,
        n_train=args.n_train, n_test=args.n_test, n_classifier=args.n_classifier,
        train_path=args.train, test_path=args.test,
        impute=_impute_config(args, "ga"),
        ae_train=replace(autoenc.DEFAULT_TRAIN, epochs=args.ae_epochs, seed=args.seed),
        clf_train=replace(classifier.DEFAULT_TRAIN, epochs=args.clf_epochs, seed=args.seed),
        jobs=args.jobs)
    report = bench.run_sweep(cfg)
    paths = bench.write_outputs(report, args.out)
    if args.verbose:
        sys.stdout.write(paths["sweep_table.txt"].read_text(encoding="utf-8"))
    inputs = [p for p in (args.train, args.test) if p]
    _write_manifest(Path(args.out) / "manifest.json", "bench", args, inputs, list(paths.values()), started)


COMMANDS = {"gen": cmd_gen, "train": cmd_train, "impute": cmd_impute, "bench": cmd_bench}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _expand_config(argv)
    except (OSError, ValueError, KeyError) as exc:
        parser.error(f"cannot read --config: {exc}")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    started = time.perf_counter()
    try:
        COMMANDS[args.command](args, started)
    except (DGAError, OSError, ValueError) as exc:
        print(f"dgaimpute {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
