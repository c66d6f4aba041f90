"""Command-line entry point: ``graphmga {gen,train,attack,analyze,ablate-knowledge,deceive}``.

Every stochastic choice derives from ``--seed`` through fixed offsets, so two
runs with the same flags write byte-identical files. Flags may also come
from a ``--config`` file of ``key = value`` lines; the command line wins.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .analysis import AnalysisError, link_analysis
from .attack import AttackConfig, read_perturbation, run_attack, write_perturbation
from .community import deception_run, label_propagation, write_partition
from .evaluation import (
    TargetSelectionError,
    evaluate,
    limited_knowledge_attack,
    select_high_degree_targets,
    select_targets,
    transfer_evaluate,
)
from .gcn import (
    TrainConfig,
    default_features,
    load_checkpoint,
    predict,
    save_checkpoint,
    split_nodes,
    train,
)
from .graph import (
    GraphConfigError,
    GraphFormatError,
    generate_planted_partition,
    load_edge_list,
    load_features,
    load_labels,
    write_edge_list,
    write_labels,
)

logger = logging.getLogger("graphmga")

SEED_OFFSETS = {"generate": 0, "train": 1, "targets": 2, "lpa": 3, "knowledge": 4, "transfer": 5}

# fields that do not influence results and stay out of the config hash
_UNHASHED = {"command", "config", "out", "workers", "checkpoint", "report_dir", "verbose", "func"}


class UsageError(Exception):
    """Bad user input; exits with status 2."""


def sub_seed(seed: int, what: str) -> int:
    return seed + SEED_OFFSETS[what]


def run_config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _UNHASHED}


def config_hash(args) -> str:
    blob = json.dumps(run_config(args), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# -- dataset / model plumbing ------------------------------------------------

def load_dataset(args):
    """Return ``(graph, labels, X)`` from files or the synthetic generator."""
    has_files = args.edges is not None
    has_gen = args.gen_n is not None
    if has_files == has_gen:
        raise UsageError("give exactly one of --edges/--labels or --gen-n/--gen-k/--p-in/--p-out")
    if has_gen:
        g, labels = generate_planted_partition(
            args.gen_n, args.gen_k, args.p_in, args.p_out, sub_seed(args.seed, "generate")
        )
        return g, labels, default_features(g.n)
    if args.labels is None:
        raise UsageError("--edges requires --labels")
    for p in (args.edges, args.labels, args.features):
        if p is not None and not Path(p).is_file():
            raise UsageError(f"no such file: {p}")
    g = load_edge_list(args.edges, args.nodes)
    labels = load_labels(args.labels, g.n)
    X = load_features(args.features, g.n) if args.features else default_features(g.n)
    return g, labels, X


def train_config(args) -> TrainConfig:
    return TrainConfig(
        hidden=args.hidden,
        learning_rate=args.lr,
        epochs=args.epochs,
        seed=sub_seed(args.seed, "train"),
        train_fraction=args.train_fraction,
        val_fraction=args.val_fraction,
        weight_decay=args.weight_decay,
    )


def attack_config(args, method=None) -> AttackConfig:
    return AttackConfig(
        budget=args.budget,
        mu=args.mu,
        mode=args.mode,
        method=method or args.method,
        seed=args.seed,
        stop_on_success=args.stop_on_success,
        protect_target_degree=not args.allow_target_isolation,
    )


def _checkpoint_path(args) -> Path:
    return Path(args.checkpoint) if args.checkpoint else Path(args.out) / "model.ckpt"


def _load_model(args):
    path = _checkpoint_path(args)
    if not path.is_file():
        raise UsageError(f"checkpoint not found: {path} (run 'graphmga train' first)")
    return load_checkpoint(path)


def _map(args, fn, items):
    if args.workers > 1:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


# -- commands ----------------------------------------------------------------

def cmd_gen(args):
    if args.gen_n is None:
        raise UsageError("gen needs --gen-n")
    args.edges = None
    g, labels, _ = load_dataset(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_edge_list(g, out / "edges.tsv")
    write_labels(labels, out / "labels.tsv")
    logger.info("wrote %r to %s", g, out)


def cmd_train(args):
    g, labels, X = load_dataset(args)
    model, history = train(g, X, labels, train_config(args))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    digest = config_hash(args)
    save_checkpoint(model, out / "model.ckpt", {"config_hash": digest, "dataset": g.fingerprint()})
    metrics = {
        "config_hash": digest,
        "config": run_config(args),
        "dataset_fingerprint": g.fingerprint(),
        "best_epoch": history.best_epoch,
        "accuracy": history.accuracy,
        "split_sizes": {k: int(getattr(history.split, k).size) for k in ("train", "val", "test")},
        "loss": [float(x) for x in history.loss],
    }
    _write(out / "train_metrics.json", _dump_json(metrics))
    logger.info("accuracy %s", history.accuracy)


def _targets(args, g, labels, X, model):
    split = split_nodes(labels, train_config(args))
    return select_targets(
        g, labels, model, X, args.strategy, args.count,
        seed=sub_seed(args.seed, "targets"), candidates=split.test,
    )


def cmd_attack(args):
    g, labels, X = load_dataset(args)
    model = _load_model(args)
    targets = _targets(args, g, labels, X, model)
    cfg = attack_config(args)
    perts = _map(args, lambda t: run_attack(model, g, X, labels, t, cfg), targets.nodes)

    out = Path(args.out)
    digest = config_hash(args)
    pdir = out / "perturbations"
    pdir.mkdir(parents=True, exist_ok=True)
    for stale in pdir.glob("target_*.tsv"):
        stale.unlink()
    for p in perts:
        write_perturbation(p, pdir / f"target_{p.target:06d}.tsv", {"config_hash": digest})

    report = evaluate(perts, cfg.budget, {"config_hash": digest, **run_config(args)}, g.fingerprint())
    doc = report.to_dict()
    doc["targets_strategy"] = targets.strategy
    if args.transfer_seeds:
        base = sub_seed(args.seed, "transfer")
        res = transfer_evaluate(perts, g, X, labels, [base + s for s in args.transfer_seeds],
                                train_config(args), cfg.budget)
        doc["transfer"] = [{"seed": s, "asr": a, "n_targets": n} for s, (a, n) in res.items()]
    _write(out / "report.json", _dump_json(doc))
    _write(out / "asr_curve.csv", f"# config_hash={digest}\n" + report.curve_csv())
    logger.info("ASR@%d = %.4f, AML = %.3f", cfg.budget, report.asr[-1], report.aml)


def cmd_analyze(args):
    rdir = Path(args.report_dir or args.out or "run")
    pdir = rdir / "perturbations"
    files = sorted(pdir.glob("target_*.tsv")) if pdir.is_dir() else []
    if not files:
        raise UsageError(f"no perturbation files under {pdir}")
    report_path = rdir / "report.json"
    if not report_path.is_file():
        raise UsageError(f"missing {report_path}")
    saved = json.loads(report_path.read_text(encoding="utf-8"))["config"]
    digest = saved.pop("config_hash", "")
    ns = argparse.Namespace(**saved)
    try:
        perts = [read_perturbation(f) for f in files]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    g, labels, _ = load_dataset(ns)
    train_nodes = split_nodes(labels, train_config(ns)).train
    try:
        table = link_analysis(g, perts, labels, args.max_gamma, train_nodes=train_nodes)
    except AnalysisError as exc:
        raise UsageError(str(exc)) from None
    out = Path(args.out) if args.out else rdir
    _write(out / "link_analysis.csv", f"# config_hash={digest}\n# unreachable_distance_cap={g.n}\n"
           + table.to_csv())


def cmd_ablate_knowledge(args):
    g, labels, X = load_dataset(args)
    model = _load_model(args)
    split = split_nodes(labels, train_config(args))
    targets = select_high_degree_targets(g, labels, model, X, args.target_fraction,
                                         sub_seed(args.seed, "targets"), candidates=split.test)
    ks = sub_seed(args.seed, "knowledge")
    rows = ["mode,p_miss,method,asr,aml,n_targets"]
    results = []
    for method in args.methods:
        cfg = attack_config(args, method)
        for mode in args.lk_modes:
            for p in args.p_miss:
                perts = _map(args, lambda t: limited_knowledge_attack(
                    model, g, X, labels, t, cfg, mode, p, [ks, t]), targets.nodes)
                rep = evaluate(perts, cfg.budget)
                rows.append(f"{mode},{p!r},{cfg.method},{float(rep.asr[-1])!r},{rep.aml!r},{len(perts)}")
                results.append({"mode": mode, "p_miss": p, "method": cfg.method,
                                "asr": [float(a) for a in rep.asr], "aml": rep.aml})
    out = Path(args.out)
    digest = config_hash(args)
    _write(out / "knowledge_ablation.csv", f"# config_hash={digest}\n" + "\n".join(rows) + "\n")
    _write(out / "knowledge_ablation.json", _dump_json(
        {"config_hash": digest, "config": run_config(args), "targets": targets.nodes, "results": results}))


def cmd_deceive(args):
    g, metadata, X = load_dataset(args)
    lpa_seed = sub_seed(args.seed, "lpa")
    partition = label_propagation(g, lpa_seed)
    labels = partition.as_labels() if args.ground_truth == "detected" else metadata
    model, history = train(g, X, labels, train_config(args))
    pred = predict(model, g, X)
    sizes = partition.sizes()
    eligible = [int(v) for v in history.split.test
                if pred[v] == labels[v] and sizes[partition[v]] >= 2]
    if len(eligible) < args.count:
        raise UsageError(f"only {len(eligible)} eligible deception targets, need {args.count}")
    rng = np.random.default_rng(sub_seed(args.seed, "targets"))
    targets = sorted(rng.choice(eligible, args.count, replace=False).tolist())

    rows = ["dataset,method,asr_percent,aml"]
    per_method = {}
    for method in args.methods:
        cfg = attack_config(args, method)
        res = _map(args, lambda t: deception_run(g, labels, t, cfg, seed=lpa_seed, X=X, model=model)[0],
                   targets)
        rep = evaluate(res, cfg.budget)
        per_method[cfg.method] = {
            "asr": [float(a) for a in rep.asr], "aml": rep.aml,
            "targets": [{"target": p.target, "success_step": p.success_step,
                         "steps": [list(s) for s in p.steps]} for p in res],
        }
        rows.append(f"{args.dataset_name},{cfg.method},{100 * float(rep.asr[-1])!r},{rep.aml!r}")
    out = Path(args.out)
    digest = config_hash(args)
    out.mkdir(parents=True, exist_ok=True)
    write_partition(partition, out / "partition.tsv")
    _write(out / "deception_table.csv", f"# config_hash={digest}\n" + "\n".join(rows) + "\n")
    _write(out / "deception.json", _dump_json({
        "config_hash": digest, "config": run_config(args), "ground_truth": args.ground_truth,
        "lpa_seed": lpa_seed, "num_communities": partition.num_communities,
        "targets": targets, "methods": per_method,
    }))


# -- argument parsing ----------------------------------------------------------

def _floats(text):
    return [float(x) for x in str(text).split(",") if x.strip()]


def _ints(text):
    return [int(x) for x in str(text).split(",") if x.strip()]


def _words(text):
    return [x.strip() for x in str(text).split(",") if x.strip()]


def _add_common(p):
    p.add_argument("--config", help="key = value file supplying defaults for any flag")
    p.add_argument("--out", default="run", help="output directory")
    p.add_argument("--seed", type=int, default=0, help="global seed")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-v", "--verbose", action="store_true")
    d = p.add_argument_group("dataset")
    d.add_argument("--edges")
    d.add_argument("--labels")
    d.add_argument("--features")
    d.add_argument("--nodes", type=int, help="declared node count for --edges")
    d.add_argument("--gen-n", type=int)
    d.add_argument("--gen-k", type=int, default=2)
    d.add_argument("--p-in", type=float, default=0.1)
    d.add_argument("--p-out", type=float, default=0.01)
    t = p.add_argument_group("training")
    t.add_argument("--hidden", type=int, default=16)
    t.add_argument("--lr", type=float, default=1.0)
    t.add_argument("--epochs", type=int, default=200)
    t.add_argument("--train-fraction", type=float, default=0.1)
    t.add_argument("--val-fraction", type=float, default=0.1)
    t.add_argument("--weight-decay", type=float, default=5e-4)


def _add_attack(p):
    a = p.add_argument_group("attack")
    a.add_argument("--checkpoint", help="model checkpoint (default: OUT/model.ckpt)")
    a.add_argument("--budget", type=int, default=20)
    a.add_argument("--mu", type=float, default=0.5)
    a.add_argument("--mode", choices=("unlimited", "direct", "indirect"), default="unlimited")
    a.add_argument("--method", type=str.upper, choices=("MGA", "FGA"), default="MGA")
    a.add_argument("--stop-on-success", action="store_true")
    a.add_argument("--allow-target-isolation", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphmga", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a synthetic planted-partition dataset")
    _add_common(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train the GCN surrogate")
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("attack", help="attack selected targets")
    _add_common(p)
    _add_attack(p)
    p.add_argument("--strategy", choices=("uniform", "hub", "bridge"), default="uniform")
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--transfer-seeds", type=_ints, default=[])
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("analyze", help="selected-link statistics of an attack run")
    p.add_argument("--config")
    p.add_argument("--report-dir", help="directory written by 'attack' (default: OUT)")
    p.add_argument("--out", default=None)
    p.add_argument("--max-gamma", type=int, default=None)
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("ablate-knowledge", help="attacks from partial graph knowledge")
    _add_common(p)
    _add_attack(p)
    p.add_argument("--p-miss", type=_floats, default=[0.2, 0.5, 0.8])
    p.add_argument("--lk-modes", type=_words, default=["keep_1hop", "random"])
    p.add_argument("--methods", type=lambda s: [w.upper() for w in _words(s)], default=["MGA"])
    p.add_argument("--target-fraction", type=float, default=0.1)
    p.set_defaults(func=cmd_ablate_knowledge)

    p = sub.add_parser("deceive", help="community deception against label propagation")
    _add_common(p)
    _add_attack(p)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--methods", type=lambda s: [w.upper() for w in _words(s)], default=["MGA", "FGA"])
    p.add_argument("--ground-truth", choices=("detected", "metadata"), default="detected")
    p.add_argument("--dataset-name", default="synthetic")
    p.set_defaults(func=cmd_deceive)
    return parser


def read_config_file(path) -> dict:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            key, sep, value = s.partition("=")
            if not sep:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            values[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return values


def parse_args(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        if not Path(args.config).is_file():
            raise UsageError(f"no such config file: {args.config}")
        values = read_config_file(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest: a for a in sub._actions}
        unknown = sorted(set(values) - set(known))
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        defaults = {}
        for key, raw in values.items():
            action = known[key]
            if action.const is True and action.nargs == 0:
                defaults[key] = raw.lower() in ("1", "true", "yes", "on")
            else:
                defaults[key] = action.type(raw) if action.type else raw
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"graphmga: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (UsageError, GraphFormatError, GraphConfigError, TargetSelectionError,
            FileNotFoundError) as exc:
        print(f"graphmga: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - surfaced as exit status 1
        logger.debug("internal failure", exc_info=True)
        print(f"graphmga: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
