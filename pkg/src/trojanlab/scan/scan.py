"""Full scan: sweep every hidden unit, keep sound candidates, build masks, filter."""

import time
from dataclasses import dataclass, field

import numpy as np

from ..nn.model import NetworkModel, hidden_units
from .candidates import find_candidates, recheck_candidate
from .config import ScanConfig
from .masks import filter_by_reasr, reverse_engineer_mask
from .stimulation import natural_trace, stimulate_neuron, stimulation_grid

__all__ = ["ScanResult", "scan", "scan_report_dict"]


@dataclass
class ScanResult:
    candidates: list  # sound candidates, scan order (layer, unit, z_lo)
    rejected: list  # candidates that failed the midpoint recheck
    masks: list  # reverse-engineered masks surviving the reasr bound
    all_masks: list  # every reverse-engineered mask, pre-filter
    unit_timings: list = field(default_factory=list)  # (layer, unit, sweep_ms)
    mask_timings: list = field(default_factory=list)  # (layer, unit, optimize_ms)

    @property
    def trojan_neurons(self):
        """Distinct units among the surviving masks."""
        return sorted({(m.source.neuron.layer, m.source.neuron.unit) for m in self.masks})


def scan(model: NetworkModel, seed_dataset, config: ScanConfig) -> ScanResult:
    """Stimulation analysis over all hidden units of a trained model.

    Per-unit sweeps are independent read-only evaluations in a deterministic
    order, so the output is reproducible for a fixed config and seed data.
    """
    if hasattr(seed_dataset, "as_float"):
        seed_x, seed_y = seed_dataset.as_float()
    else:
        seed_x, seed_y = seed_dataset
    seed_x = np.asarray(seed_x, dtype=model.dtype)
    trace = natural_trace(model, seed_x)

    candidates, unit_timings = [], []
    for neuron in hidden_units(model):
        t0 = time.perf_counter()
        grid = stimulation_grid(model, neuron, seed_x, config, trace=trace)
        profile = stimulate_neuron(model, neuron, seed_x, grid, trace=trace)
        found = find_candidates([profile], seed_y, config.min_width, config.reasr_bound)
        candidates.extend(found)
        unit_timings.append((neuron.layer, neuron.unit, (time.perf_counter() - t0) * 1000.0))

    sound, rejected = [], []
    for cand in candidates:
        (sound if recheck_candidate(model, cand, seed_x) else rejected).append(cand)

    all_masks, mask_timings = [], []
    for cand in sound:
        t0 = time.perf_counter()
        mask = reverse_engineer_mask(model, cand, seed_x, config)
        all_masks.append(mask)
        mask_timings.append((cand.neuron.layer, cand.neuron.unit, (time.perf_counter() - t0) * 1000.0))

    return ScanResult(
        candidates=sound,
        rejected=rejected,
        masks=filter_by_reasr(all_masks, config.reasr_bound),
        all_masks=all_masks,
        unit_timings=unit_timings,
        mask_timings=mask_timings,
    )


def scan_report_dict(result: ScanResult, config: ScanConfig, include_timing: bool = True) -> dict:
    """JSON-compatible scan summary. Timing is optional because wall-clock
    values would break byte-identical pipeline reproduction."""
    report = {
        "config": {
            "grid_size": config.grid_size,
            "max_mult": config.max_mult,
            "min_width": config.min_width,
            "mask_steps": config.mask_steps,
            "mask_lr": config.mask_lr,
            "sparsity_weight": config.sparsity_weight,
            "reasr_bound": config.reasr_bound,
            "seed": config.seed,
        },
        "candidate_count": len(result.candidates),
        "rejected_count": len(result.rejected),
        "mask_count": len(result.masks),
        "trojan_neurons": [list(t) for t in result.trojan_neurons],
        "candidates": [
            {
                "layer": c.neuron.layer,
                "unit": c.neuron.unit,
                "elevated_label": c.elevated_label,
                "z_lo": round(c.z_lo, 6),
                "z_hi": round(c.z_hi, 6),
            }
            for c in result.candidates
        ],
        "masks": [
            {
                "layer": m.source.neuron.layer,
                "unit": m.source.neuron.unit,
                "elevated_label": m.source.elevated_label,
                "reasr": round(m.reasr, 6),
                "alpha_mean": round(float(m.alpha.mean()), 6),
            }
            for m in result.masks
        ],
    }
    if include_timing:
        report["unit_timings_ms"] = [
            {"layer": l, "unit": u, "sweep_ms": round(ms, 3)} for l, u, ms in result.unit_timings
        ]
        report["mask_timings_ms"] = [
            {"layer": l, "unit": u, "optimize_ms": round(ms, 3)} for l, u, ms in result.mask_timings
        ]
    return report
