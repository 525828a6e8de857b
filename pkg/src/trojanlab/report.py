"""Render run artifacts into a JSON report plus aligned plain-text tables.

The artifact dictionary is JSON-compatible and fully deterministic for a
fixed config and seed: no timestamps, sorted keys, floats rounded at record
time. Sections are optional; an empty run set still renders a valid report.
"""

import json
from pathlib import Path

__all__ = ["render_table", "render_report_text", "emit_report", "canonical_json"]


def canonical_json(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def render_table(title, headers, rows) -> str:
    cells = [[str(h) for h in headers]] + [[str(c) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    sep = "-+-".join("-" * w for w in widths)
    lines = [title, " | ".join(h.ljust(w) for h, w in zip(cells[0], widths)), sep]
    lines += [" | ".join(c.ljust(w) for c, w in zip(row, widths)) for row in cells[1:]]
    return "\n".join(lines) + "\n"


def _pct(x):
    return f"{100.0 * x:.2f}%"


def render_report_text(artifacts: dict) -> str:
    parts = []

    models = artifacts.get("models", {})
    if models:
        rows = []
        for name in sorted(models):
            rec = models[name]
            rows.append(
                [
                    name,
                    _pct(rec.get("train_accuracy", 0.0)),
                    _pct(rec.get("valid_accuracy", 0.0)),
                    _pct(rec.get("test_accuracy", 0.0)),
                    _pct(rec["trigger_asr_targeted"]) if "trigger_asr_targeted" in rec else "-",
                ]
            )
        parts.append(
            render_table(
                "Model accuracies (planted-trigger ASR where applicable)",
                ["model", "train", "valid", "test", "trigger ASR"],
                rows,
            )
        )

    scans = artifacts.get("scans", {})
    if scans:
        rows = []
        for name in sorted(scans):
            rec = scans[name]
            rows.append(
                [
                    name,
                    rec["candidate_count"],
                    len(rec["trojan_neurons"]),
                    rec["mask_count"],
                    _pct(rec.get("best_mask_seed_asr", 0.0)),
                    _pct(rec["best_mask_test_asr"]) if rec.get("best_mask_test_asr") is not None else "-",
                ]
            )
        parts.append(
            render_table(
                "Scan results (per model)",
                ["model", "candidates", "trojan neurons", "masks kept", "best seed ASR", "best test ASR"],
                rows,
            )
        )

    runs = artifacts.get("mitigation", {}).get("runs", [])
    if runs:
        rows = [
            [
                run["top_p"],
                run["stop_reason"],
                len(run["iterations"]),
                run["iterations"][0]["rescan_mask_count"] if run["iterations"] else "-",
                _pct(run["final_trigger_asr"]) if run.get("final_trigger_asr") is not None else "-",
                f"{run['final_accuracy_drop_points']:.2f}",
            ]
            for run in runs
        ]
        parts.append(
            render_table(
                "Strategic retraining by top_p",
                ["top_p", "stop", "iterations", "masks after 1 retrain", "final trigger ASR", "acc drop (pts)"],
                rows,
            )
        )
        iter_rows = []
        for run in runs:
            for rec in run["iterations"]:
                iter_rows.append(
                    [
                        run["top_p"],
                        rec["index"],
                        rec["mask_count"],
                        rec["masked_images_added"],
                        rec["rescan_mask_count"],
                        f"{rec['accuracy_drop_points']:.2f}",
                    ]
                )
        parts.append(
            render_table(
                "Mitigation iterations",
                ["top_p", "iteration", "masks in", "masked imgs added", "masks after", "drop (pts)"],
                iter_rows,
            )
        )

    comparison = artifacts.get("comparison", {})
    if comparison:
        rows = [
            [arm, _pct(rec["accuracy"]), _pct(rec["trigger_asr_targeted"])]
            for arm, rec in sorted(comparison.items())
        ]
        parts.append(
            render_table("Mitigation arms on the poisoned model", ["arm", "clean accuracy", "trigger ASR"], rows)
        )

    pruning = artifacts.get("pruning", {}).get("rows", [])
    if pruning:
        rows = [
            [
                rec["rate"],
                rec["trojan_neurons_after"],
                _pct(rec["trigger_asr_targeted"]),
                _pct(rec["accuracy"]),
            ]
            for rec in pruning
        ]
        parts.append(
            render_table(
                "Neuron-weight pruning of flagged units",
                ["rate", "trojan neurons after", "trigger ASR", "clean accuracy"],
                rows,
            )
        )

    if not parts:
        parts.append("No run artifacts recorded.\n")
    return "\n".join(parts)


def emit_report(artifacts: dict, out_dir) -> tuple:
    """Write report.json and report.txt; returns their paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / "report.json"
    txt_path = out_dir / "report.txt"
    json_path.write_text(canonical_json(artifacts))
    txt_path.write_text(render_report_text(artifacts))
    return json_path, txt_path
