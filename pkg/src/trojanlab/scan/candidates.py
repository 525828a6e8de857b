"""Pick out units whose stimulation forces one label on every seed image."""

import math
from dataclasses import dataclass

import numpy as np

from ..nn.model import ActivationOverride, NeuronRef, forward_with_override

__all__ = ["CandidateNeuron", "find_candidates", "recheck_candidate"]


@dataclass(frozen=True)
class CandidateNeuron:
    neuron: NeuronRef
    elevated_label: int
    z_lo: float
    z_hi: float

    @property
    def trigger_interval(self):
        return (self.z_lo, self.z_hi)


def find_candidates(profiles, seed_labels, min_width: int, reasr_bound: float):
    """Candidates from maximal constant runs of the agreed label.

    A run qualifies when all seed curves agree on one label for at least
    ``min_width`` consecutive grid points AND that label differs from the true
    label of at least ``ceil(reasr_bound * num_seeds)`` seeds, so intervals
    that merely confirm one class's own label don't count.
    """
    seed_labels = np.asarray(seed_labels).reshape(-1)
    need_differs = max(1, math.ceil(reasr_bound * len(seed_labels)))
    out = []
    for profile in profiles:
        curves = profile.curves
        if curves.shape[0] != len(seed_labels):
            raise ValueError("profile curves do not match the seed label count")
        agree = (curves == curves[0]).all(axis=0)
        agreed = np.where(agree, curves[0], -1)
        j = 0
        g = len(profile.grid)
        while j < g:
            label = agreed[j]
            if label < 0:
                j += 1
                continue
            k = j
            while k + 1 < g and agreed[k + 1] == label:
                k += 1
            run_len = k - j + 1
            if run_len >= min_width and int((seed_labels != label).sum()) >= need_differs:
                out.append(
                    CandidateNeuron(
                        neuron=profile.neuron,
                        elevated_label=int(label),
                        z_lo=float(profile.grid[j]),
                        z_hi=float(profile.grid[k]),
                    )
                )
            j = k + 1
    return out


def recheck_candidate(model, candidate: CandidateNeuron, seed_images) -> bool:
    """Fresh override forwards at the interval midpoint, not trusting the sweep cache."""
    mid = 0.5 * (candidate.z_lo + candidate.z_hi)
    override = ActivationOverride(candidate.neuron, mid)
    scores = forward_with_override(model, np.asarray(seed_images), override)
    return bool((scores.argmax(axis=1) == candidate.elevated_label).all())
