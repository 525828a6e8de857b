"""Reverse-engineer an input-space blend mask for a candidate unit.

The optimizer searches a full-image (pattern, alpha) pair that drives the
candidate unit's activation toward the top of its trigger interval through
legitimate forward propagation, with an L1 penalty on alpha keeping the mask
sparse. No patch shape is assumed.
"""

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..data.blend import apply_mask
from ..errors import MaskFormatError, MaskOptimizationError
from ..nn.gradients import unit_objective_grad
from ..nn.model import NeuronRef, forward
from ..seeding import derive_seed
from .candidates import CandidateNeuron

__all__ = ["TrojanMask", "reverse_engineer_mask", "measure_reasr", "filter_by_reasr", "save_mask", "load_mask"]

MAGIC = b"TJM1"
VERSION = 1


@dataclass
class TrojanMask:
    pattern: np.ndarray  # (H, W, C) float32 in [0, 1]
    alpha: np.ndarray  # (H, W, C) float32 in [0, 1]
    source: CandidateNeuron
    reasr: float
    asr_test: float = float("nan")


def _sigmoid(t):
    return 1.0 / (1.0 + np.exp(-t))


def measure_reasr(model, mask, seed_images, elevated_label=None) -> float:
    """Fraction of seed images the mask pushes to the elevated label."""
    label = mask.source.elevated_label if elevated_label is None else elevated_label
    masked = apply_mask(np.asarray(seed_images), mask)
    return float((forward(model, masked).argmax(axis=1) == label).mean())


def reverse_engineer_mask(model, candidate: CandidateNeuron, seed_images, config) -> TrojanMask:
    """Adam on sigmoid-squashed (pattern, alpha) logits; deterministic per candidate.

    The fit term pulls the unit's pre-activation toward the interval top
    ``z_hi`` averaged over seeds; ``sparsity_weight * mean(alpha)`` is the
    sparsity term. The optimizer seed derives from the scan seed and the
    candidate identity, so results do not depend on scan order.
    """
    x = np.asarray(seed_images, dtype=model.dtype)
    h, w, c = x.shape[1:]
    rng = np.random.Generator(
        np.random.PCG64(
            derive_seed(
                config.seed, "mask", candidate.neuron.layer, candidate.neuron.unit, candidate.elevated_label
            )
        )
    )
    theta_p = rng.normal(0.0, 0.1, size=(h, w, c))
    theta_a = np.full((h, w, c), -3.0) + rng.normal(0.0, 0.01, size=(h, w, c))
    z_target = candidate.z_hi
    scale = 1.0 / max(z_target, 1.0) ** 2  # keep the fit term O(1) across units

    m_p = np.zeros_like(theta_p)
    v_p = np.zeros_like(theta_p)
    m_a = np.zeros_like(theta_a)
    v_a = np.zeros_like(theta_a)
    beta1, beta2, eps = 0.9, 0.999, 1e-8

    for step in range(config.mask_steps):
        pattern = _sigmoid(theta_p)
        alpha = _sigmoid(theta_a)
        masked = (1.0 - alpha)[None] * x + alpha[None] * pattern[None]
        _, values, d_masked = unit_objective_grad(model, masked.astype(model.dtype), candidate.neuron, z_target)
        if not np.all(np.isfinite(d_masked)):
            raise MaskOptimizationError(step)
        d_masked = d_masked.astype(np.float64) * scale
        g_pattern = (d_masked * alpha[None]).sum(axis=0)
        g_alpha = (d_masked * (pattern[None] - x)).sum(axis=0)
        g_alpha += config.sparsity_weight / alpha.size
        g_tp = g_pattern * pattern * (1.0 - pattern)
        g_ta = g_alpha * alpha * (1.0 - alpha)

        t = step + 1
        for theta, g, m, v in ((theta_p, g_tp, m_p, v_p), (theta_a, g_ta, m_a, v_a)):
            m *= beta1
            m += (1 - beta1) * g
            v *= beta2
            v += (1 - beta2) * g * g
            mhat = m / (1 - beta1**t)
            vhat = v / (1 - beta2**t)
            theta -= config.mask_lr * mhat / (np.sqrt(vhat) + eps)
        if not (np.all(np.isfinite(theta_p)) and np.all(np.isfinite(theta_a))):
            raise MaskOptimizationError(step)

    mask = TrojanMask(
        pattern=_sigmoid(theta_p).astype(np.float32),
        alpha=_sigmoid(theta_a).astype(np.float32),
        source=candidate,
        reasr=0.0,
    )
    mask.reasr = measure_reasr(model, mask, x)
    return mask


def filter_by_reasr(masks, reasr_bound: float):
    """Keep masks whose seed-set success rate meets the bound."""
    return [m for m in masks if m.reasr >= reasr_bound]


def save_mask(mask: TrojanMask, path) -> None:
    h, w, c = mask.pattern.shape
    blob = b"".join(
        [
            MAGIC,
            struct.pack("<H", VERSION),
            struct.pack("<III", h, w, c),
            struct.pack("<II", mask.source.neuron.layer, mask.source.neuron.unit),
            struct.pack("<I", mask.source.elevated_label),
            struct.pack("<ff", mask.source.z_lo, mask.source.z_hi),
            struct.pack("<ff", mask.reasr, mask.asr_test),
            mask.pattern.astype("<f4").tobytes(),
            mask.alpha.astype("<f4").tobytes(),
        ]
    )
    Path(path).write_bytes(blob)


def load_mask(path) -> TrojanMask:
    blob = Path(path).read_bytes()
    if blob[:4] != MAGIC:
        raise MaskFormatError(f"bad magic {blob[:4]!r}, expected {MAGIC!r}")
    pos = 4
    (version,) = struct.unpack_from("<H", blob, pos)
    pos += 2
    if version != VERSION:
        raise MaskFormatError(f"unsupported mask version {version}")
    h, w, c = struct.unpack_from("<III", blob, pos)
    pos += 12
    layer, unit = struct.unpack_from("<II", blob, pos)
    pos += 8
    (label,) = struct.unpack_from("<I", blob, pos)
    pos += 4
    z_lo, z_hi = struct.unpack_from("<ff", blob, pos)
    pos += 8
    reasr, asr_test = struct.unpack_from("<ff", blob, pos)
    pos += 8
    count = h * w * c
    if len(blob) - pos != 2 * count * 4:
        raise MaskFormatError(
            f"payload length mismatch: expected {2 * count * 4} bytes of pattern+alpha, "
            f"got {len(blob) - pos}"
        )
    pattern = np.frombuffer(blob, dtype="<f4", count=count, offset=pos).reshape(h, w, c).copy()
    pos += count * 4
    alpha = np.frombuffer(blob, dtype="<f4", count=count, offset=pos).reshape(h, w, c).copy()
    return TrojanMask(
        pattern=pattern,
        alpha=alpha,
        source=CandidateNeuron(NeuronRef(layer, unit), label, z_lo, z_hi),
        reasr=reasr,
        asr_test=asr_test,
    )
