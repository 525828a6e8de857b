"""End-to-end experiment: forge data, plant a backdoor, detect, and remove it.

Writes working artifacts (datasets, checkpoints, masks) under ``out/work`` and
the deterministic report bundle under ``out/reports``. Progress goes to the
logger; nothing time-dependent lands in the output files.
"""

import hashlib
import json
import logging
from pathlib import Path

import numpy as np

from .config import RunConfig, config_to_dict
from .data import generate, poison, save_dataset, trigger_mask
from .metrics import accuracy, asr_both_variants, attack_success_rate
from .mitigation import mitigate, prune, unlearn_baseline
from .nn import build_preset, save_checkpoint, train
from .report import canonical_json, emit_report
from .scan import ScanConfig, scan, scan_report_dict, save_mask
from .seeding import derive_seed

log = logging.getLogger("trojanlab")

__all__ = ["run_repro", "config_hash"]


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(canonical_json(config_to_dict(cfg)).encode()).hexdigest()[:12]


def _scan_config(cfg: RunConfig, label: str) -> ScanConfig:
    base = cfg.scan
    return ScanConfig(
        grid_size=base.grid_size,
        max_mult=base.max_mult,
        min_width=base.min_width,
        mask_steps=base.mask_steps,
        mask_lr=base.mask_lr,
        sparsity_weight=base.sparsity_weight,
        reasr_bound=base.reasr_bound,
        seed=derive_seed(cfg.seed, "scan", label),
    )


def _save_masks(masks, directory: Path):
    directory.mkdir(parents=True, exist_ok=True)
    for i, mask in enumerate(masks):
        save_mask(mask, directory / f"mask_{i:03d}.tjm")


def _scan_section(result, model, test_ds):
    best_seed = max((m.reasr for m in result.masks), default=0.0)
    best_test = None
    for mask in result.masks:
        asr = attack_success_rate(model, test_ds, mask, target=mask.source.elevated_label)
        mask.asr_test = asr
        best_test = asr if best_test is None else max(best_test, asr)
    return {
        "candidate_count": len(result.candidates),
        "rejected_count": len(result.rejected),
        "mask_count": len(result.masks),
        "trojan_neurons": [list(t) for t in result.trojan_neurons],
        "best_mask_seed_asr": round(best_seed, 6),
        "best_mask_test_asr": None if best_test is None else round(best_test, 6),
    }


def run_repro(cfg: RunConfig, out_dir) -> dict:
    out_dir = Path(out_dir)
    work = out_dir / "work"
    reports = out_dir / "reports"
    work.mkdir(parents=True, exist_ok=True)
    reports.mkdir(parents=True, exist_ok=True)

    artifacts = {"config": config_to_dict(cfg), "config_hash": config_hash(cfg)}

    log.info("forging synthetic data (%d classes)", cfg.data.class_count)
    bundle = generate(cfg.data, derive_seed(cfg.seed, "data"))
    for name, ds in bundle.splits().items():
        save_dataset(ds, work / f"{name}.tjd")
    pois_train = poison(bundle.train, cfg.trojan, derive_seed(cfg.seed, "poison", "train"))
    pois_valid = poison(bundle.valid, cfg.trojan, derive_seed(cfg.seed, "poison", "valid"))
    save_dataset(pois_train, work / "train_poisoned.tjd")
    save_dataset(pois_valid, work / "valid_poisoned.tjd")
    planted = trigger_mask(cfg.trojan, bundle.train.geometry)

    models = {}
    artifacts["models"] = {}
    for name, (train_ds, valid_ds) in {
        "benign": (bundle.train, bundle.valid),
        "trojan": (pois_train, pois_valid),
    }.items():
        log.info("training %s model (%s, %d epochs)", name, cfg.train.preset, cfg.train.epochs)
        model = build_preset(cfg.train.preset, input_shape=bundle.train.geometry, init_seed=derive_seed(cfg.seed, "init"))
        _, history = train(model, train_ds, cfg.train.hyperparams(derive_seed(cfg.seed, "train", name)), valid_data=valid_ds)
        save_checkpoint(model, work / f"{name}.tjf")
        models[name] = model
        record = {
            "train_accuracy": round(history.train_accuracy[-1] if history.train_accuracy else 0.0, 6),
            "valid_accuracy": round(accuracy(model, bundle.valid), 6),
            "test_accuracy": round(accuracy(model, bundle.test), 6),
        }
        asr = asr_both_variants(model, bundle.test, planted, cfg.trojan.target_class)
        record["trigger_asr_targeted"] = round(asr["targeted"], 6)
        record["trigger_asr_any"] = round(asr["any_misclassification"], 6)
        artifacts["models"][name] = record

    artifacts["scans"] = {}
    scan_results = {}
    for name, model in models.items():
        log.info("scanning %s model", name)
        scfg = _scan_config(cfg, name)
        result = scan(model, bundle.seed, scfg)
        scan_results[name] = result
        _save_masks(result.masks, work / f"masks_{name}")
        (work / f"scan_{name}.json").write_text(
            canonical_json(scan_report_dict(result, scfg, include_timing=False))
        )
        artifacts["scans"][name] = _scan_section(result, model, bundle.test)
        log.info(
            "  %s: %d candidates, %d masks kept", name, len(result.candidates), len(result.masks)
        )

    trojan_model = models["trojan"]
    trojan_masks = scan_results["trojan"].masks

    artifacts["mitigation"] = {"runs": []}
    strategic_model = None
    for top_p in cfg.mitigation.sweep:
        log.info("mitigating trojan model at top_p=%d", top_p)
        mcfg = cfg.mitigation.config(top_p, derive_seed(cfg.seed, "mitigate", top_p))
        scfg = _scan_config(cfg, f"mitigate-{top_p}")
        model_out, report = mitigate(
            trojan_model, trojan_masks, bundle.test, bundle.valid, bundle.seed, mcfg, scfg
        )
        run_record = report.to_dict()
        run_record["top_p"] = top_p
        run_record["final_trigger_asr"] = round(
            attack_success_rate(model_out, bundle.test, planted, target=cfg.trojan.target_class), 6
        )
        run_record["final_accuracy_drop_points"] = round(
            (report.original_accuracy - accuracy(model_out, bundle.valid)) * 100.0, 6
        )
        artifacts["mitigation"]["runs"].append(run_record)
        (reports / f"mitigation_{config_hash(cfg)}_top{top_p}.json").write_text(canonical_json(run_record))
        save_checkpoint(model_out, work / f"trojan_mitigated_top{top_p}.tjf")
        if top_p == cfg.mitigation.top_p:
            strategic_model = model_out
        log.info("  stop=%s after %d iterations", report.stop_reason, len(report.iterations))
    if strategic_model is None and artifacts["mitigation"]["runs"]:
        strategic_model = model_out  # last sweep entry stands in

    log.info("unlearning baseline")
    unlearned = unlearn_baseline(
        trojan_model,
        trojan_masks,
        bundle.train,
        subset_fraction=cfg.unlearn_subset_fraction,
        replace_fraction=cfg.unlearn_replace_fraction,
        epochs=cfg.unlearn_epochs,
        seed=derive_seed(cfg.seed, "unlearn"),
    )
    save_checkpoint(unlearned, work / "trojan_unlearned.tjf")
    comparison = {
        "before": {
            "accuracy": round(accuracy(trojan_model, bundle.test), 6),
            "trigger_asr_targeted": round(
                attack_success_rate(trojan_model, bundle.test, planted, target=cfg.trojan.target_class), 6
            ),
        },
        "unlearning": {
            "accuracy": round(accuracy(unlearned, bundle.test), 6),
            "trigger_asr_targeted": round(
                attack_success_rate(unlearned, bundle.test, planted, target=cfg.trojan.target_class), 6
            ),
        },
    }
    if strategic_model is not None:
        comparison["strategic"] = {
            "accuracy": round(accuracy(strategic_model, bundle.test), 6),
            "trigger_asr_targeted": round(
                attack_success_rate(strategic_model, bundle.test, planted, target=cfg.trojan.target_class), 6
            ),
        }
    artifacts["comparison"] = comparison

    log.info("pruning baseline at rates %s", list(cfg.prune_rates))
    flagged = [m.source.neuron for m in trojan_masks]
    pruning_rows = []
    for rate in cfg.prune_rates:
        pruned = prune(trojan_model, flagged, rate)
        scfg = _scan_config(cfg, f"prune-{rate}")
        rescan = scan(pruned, bundle.seed, scfg)
        pruning_rows.append(
            {
                "rate": rate,
                "trojan_neurons_after": len(rescan.trojan_neurons),
                "trigger_asr_targeted": round(
                    attack_success_rate(pruned, bundle.test, planted, target=cfg.trojan.target_class), 6
                ),
                "accuracy": round(accuracy(pruned, bundle.test), 6),
            }
        )
    artifacts["pruning"] = {"rows": pruning_rows, "flagged_units": [[n.layer, n.unit] for n in flagged]}

    emit_report(artifacts, reports)
    (reports / "config.json").write_text(canonical_json(config_to_dict(cfg)))
    log.info("report bundle written to %s", reports)
    return artifacts
