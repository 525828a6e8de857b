"""Command-line front end.

Heavy imports happen inside the handlers so that ``--help`` stays instant and
the thread-count environment variable can take effect before numpy loads.
"""

import argparse
import logging
import os
import sys
from pathlib import Path

THREADS_ENV = "TROJANLAB_THREADS"

EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_MISSING = 4
EXIT_FORMAT = 5
EXIT_FAILURE = 1


def _apply_thread_env():
    threads = os.environ.get(THREADS_ENV)
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)


def _add_config_args(p):
    p.add_argument("--config", type=Path, help="JSON run config; defaults to the built-in desk-scale config")
    p.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one config field, e.g. --set mitigation.top_p=6",
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="trojanlab",
        description="Plant, detect, and retrain away backdoors in small convolutional classifiers.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="chatty progress on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="render the synthetic dataset splits")
    _add_config_args(p)
    p.add_argument("--out", type=Path, required=True, help="directory for the .tjd split files")

    p = sub.add_parser("poison", help="stamp the patch trigger into a dataset split")
    _add_config_args(p)
    p.add_argument("--data", type=Path, required=True, help="input .tjd dataset")
    p.add_argument("--out", type=Path, required=True, help="output .tjd dataset")

    p = sub.add_parser("train", help="train a classifier on a dataset")
    _add_config_args(p)
    p.add_argument("--data", type=Path, required=True, help="training .tjd dataset")
    p.add_argument("--valid", type=Path, help="validation .tjd dataset")
    p.add_argument("--out", type=Path, required=True, help="output .tjf checkpoint")

    p = sub.add_parser("scan", help="stimulation analysis of a checkpoint")
    _add_config_args(p)
    p.add_argument("--model", type=Path, required=True, help=".tjf checkpoint")
    p.add_argument("--seed-data", type=Path, required=True, help="seed split .tjd")
    p.add_argument("--out", type=Path, required=True, help="directory for masks and scan report")

    p = sub.add_parser("mitigate", help="strategic retraining loop")
    _add_config_args(p)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--masks", type=Path, required=True, help="directory of .tjm masks")
    p.add_argument("--test", type=Path, required=True, help="benign test split .tjd")
    p.add_argument("--valid", type=Path, required=True, help="benign validation split .tjd")
    p.add_argument("--seed-data", type=Path, required=True, help="seed split .tjd")
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("prune", help="scale flagged units' incoming weights")
    _add_config_args(p)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--masks", type=Path, required=True, help="directory of .tjm masks naming the units")
    p.add_argument("--rate", type=float, required=True, help="pruning rate in [0, 1]")
    p.add_argument("--out", type=Path, required=True, help="output .tjf checkpoint")

    p = sub.add_parser("eval", help="accuracy and attack success rates of a checkpoint")
    _add_config_args(p)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--mask", type=Path, help="optional .tjm mask to measure ASR with")
    p.add_argument("--trigger", action="store_true", help="measure the configured planted trigger instead")
    p.add_argument("--target", type=int, help="target class for the targeted ASR variant")
    p.add_argument("--out", type=Path, help="write the JSON result here instead of stdout")

    p = sub.add_parser("report", help="re-render report files from stored artifacts")
    p.add_argument("--artifacts", type=Path, required=True, help="report.json produced by repro")
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("repro", help="run the whole experiment from one config")
    _add_config_args(p)
    p.add_argument("--out", type=Path, required=True, help="output directory")
    return parser


def _load_config(args):
    from .config import apply_overrides, default_config, load_config

    cfg = load_config(args.config) if args.config else default_config()
    if args.overrides:
        cfg = apply_overrides(cfg, args.overrides)
    return cfg


def _load_mask_dir(path):
    from .scan import load_mask

    files = sorted(Path(path).glob("*.tjm"))
    return [load_mask(f) for f in files]


def _cmd_gen_data(args):
    from .data import save_dataset, generate
    from .seeding import derive_seed

    cfg = _load_config(args)
    bundle = generate(cfg.data, derive_seed(cfg.seed, "data"))
    args.out.mkdir(parents=True, exist_ok=True)
    for name, ds in bundle.splits().items():
        save_dataset(ds, args.out / f"{name}.tjd")
    print(f"wrote {len(bundle.splits())} splits to {args.out}")
    return 0


def _cmd_poison(args):
    from .data import load_dataset, poison, save_dataset
    from .seeding import derive_seed

    cfg = _load_config(args)
    ds = load_dataset(args.data)
    poisoned = poison(ds, cfg.trojan, derive_seed(cfg.seed, "poison", ds.split))
    save_dataset(poisoned, args.out)
    print(f"poisoned {poisoned.poisoned_count()} of {len(poisoned)} images -> {args.out}")
    return 0


def _cmd_train(args):
    from .data import load_dataset
    from .nn import build_preset, save_checkpoint, train
    from .seeding import derive_seed

    cfg = _load_config(args)
    train_ds = load_dataset(args.data)
    valid_ds = load_dataset(args.valid) if args.valid else None
    model = build_preset(
        cfg.train.preset, input_shape=train_ds.geometry, init_seed=derive_seed(cfg.seed, "init")
    )
    _, history = train(
        model, train_ds, cfg.train.hyperparams(derive_seed(cfg.seed, "train", train_ds.split)), valid_data=valid_ds
    )
    save_checkpoint(model, args.out)
    last = history.train_accuracy[-1] if history.train_accuracy else float("nan")
    print(f"trained {cfg.train.preset} for {cfg.train.epochs} epochs, final train accuracy {last:.4f} -> {args.out}")
    return 0


def _cmd_scan(args):
    from .nn import load_checkpoint
    from .data import load_dataset
    from .pipeline import _scan_config
    from .report import canonical_json
    from .scan import scan, scan_report_dict, save_mask

    cfg = _load_config(args)
    model = load_checkpoint(args.model)
    seed_ds = load_dataset(args.seed_data)
    scfg = _scan_config(cfg, "cli")
    result = scan(model, seed_ds, scfg)
    args.out.mkdir(parents=True, exist_ok=True)
    for i, mask in enumerate(result.masks):
        save_mask(mask, args.out / f"mask_{i:03d}.tjm")
    (args.out / "scan_report.json").write_text(
        canonical_json(scan_report_dict(result, scfg, include_timing=True))
    )
    print(
        f"scan: {len(result.candidates)} candidates, {len(result.masks)} masks kept "
        f"(reasr bound {scfg.reasr_bound}) -> {args.out}"
    )
    return 0


def _cmd_mitigate(args):
    from .data import load_dataset
    from .mitigation import mitigate
    from .nn import load_checkpoint, save_checkpoint
    from .pipeline import _scan_config, config_hash
    from .report import canonical_json
    from .seeding import derive_seed

    cfg = _load_config(args)
    model = load_checkpoint(args.model)
    masks = _load_mask_dir(args.masks)
    test_ds = load_dataset(args.test)
    valid_ds = load_dataset(args.valid)
    seed_ds = load_dataset(args.seed_data)
    mcfg = cfg.mitigation.config(cfg.mitigation.top_p, derive_seed(cfg.seed, "mitigate", cfg.mitigation.top_p))
    model_out, report = mitigate(model, masks, test_ds, valid_ds, seed_ds, mcfg, _scan_config(cfg, "cli"))
    args.out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(model_out, args.out / "model_mitigated.tjf")
    (args.out / f"mitigation_{config_hash(cfg)}.json").write_text(canonical_json(report.to_dict()))
    print(f"mitigation stopped with {report.stop_reason} after {len(report.iterations)} iterations -> {args.out}")
    return 0


def _cmd_prune(args):
    from .mitigation import prune
    from .nn import load_checkpoint, save_checkpoint

    _load_config(args)
    model = load_checkpoint(args.model)
    masks = _load_mask_dir(args.masks)
    flagged = [m.source.neuron for m in masks]
    pruned = prune(model, flagged, args.rate)
    save_checkpoint(pruned, args.out)
    print(f"pruned {len(flagged)} flagged units at rate {args.rate} -> {args.out}")
    return 0


def _cmd_eval(args):
    from .data import load_dataset, trigger_mask
    from .metrics import evaluate
    from .nn import load_checkpoint
    from .report import canonical_json
    from .scan import load_mask

    cfg = _load_config(args)
    model = load_checkpoint(args.model)
    ds = load_dataset(args.data)
    mask = None
    target = args.target
    if args.trigger:
        mask = trigger_mask(cfg.trojan, ds.geometry)
        target = cfg.trojan.target_class if target is None else target
    elif args.mask:
        mask = load_mask(args.mask)
        target = mask.source.elevated_label if target is None else target
    result = evaluate(model, ds, dataset_id=str(args.data), mask=mask, target=target)
    text = canonical_json(result.to_dict())
    if args.out:
        args.out.write_text(text)
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return 0


def _cmd_report(args):
    import json

    from .errors import ConfigError
    from .report import emit_report

    try:
        artifacts = json.loads(Path(args.artifacts).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"could not parse {args.artifacts}: {exc}") from exc
    json_path, txt_path = emit_report(artifacts, args.out)
    print(f"wrote {json_path} and {txt_path}")
    return 0


def _cmd_repro(args):
    from .pipeline import run_repro

    cfg = _load_config(args)
    run_repro(cfg, args.out)
    print(f"report bundle in {args.out / 'reports'}")
    return 0


_HANDLERS = {
    "gen-data": _cmd_gen_data,
    "poison": _cmd_poison,
    "train": _cmd_train,
    "scan": _cmd_scan,
    "mitigate": _cmd_mitigate,
    "prune": _cmd_prune,
    "eval": _cmd_eval,
    "report": _cmd_report,
    "repro": _cmd_repro,
}


def run(argv=None) -> int:
    _apply_thread_env()
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    from .errors import (
        CheckpointFormatError,
        ConfigError,
        DatasetFormatError,
        MaskFormatError,
        MitigationAborted,
        TrojanLabError,
    )

    try:
        return _HANDLERS[args.command](args)
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except ConfigError as exc:
        print(f"error: bad config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CheckpointFormatError, DatasetFormatError, MaskFormatError) as exc:
        print(f"error: bad file format: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except MitigationAborted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except TrojanLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
