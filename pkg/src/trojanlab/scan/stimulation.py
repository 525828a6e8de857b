"""Sweep hidden units over replacement activation values and record the labels.

For every hidden unit and every seed image we pin the unit's post-activation
to each grid value (the whole channel map, for conv layers) and record the
predicted label, producing one label curve per seed image.
"""

from dataclasses import dataclass

import numpy as np

from ..nn.model import NetworkModel, NeuronRef, check_neuron, forward_from, forward_trace

__all__ = ["StimulationProfile", "natural_trace", "stimulation_grid", "stimulate_neuron"]


@dataclass
class StimulationProfile:
    neuron: NeuronRef
    grid: np.ndarray  # (G,) ascending, non-negative
    curves: np.ndarray  # (num_seeds, G) predicted labels


def natural_trace(model: NetworkModel, seed_images):
    """One unperturbed forward trace shared by all per-unit sweeps."""
    return forward_trace(model, seed_images)


def unit_max_activation(trace, model, neuron: NeuronRef) -> float:
    v = trace[neuron.layer]
    if model.specs[neuron.layer].kind == "conv2d":
        return float(v[..., neuron.unit].max())
    return float(v[:, neuron.unit].max())


def stimulation_grid(model, neuron: NeuronRef, seed_images, config, trace=None) -> np.ndarray:
    """Linear grid from 0 to ``max_mult`` times the unit's top natural activation.

    Units that never fire on the seeds fall back to the layer-wide maximum
    (then to 1.0) so the sweep still covers a meaningful range.
    """
    if trace is None:
        trace = natural_trace(model, seed_images)
    top = unit_max_activation(trace, model, neuron)
    if top <= 0:
        top = float(trace[neuron.layer].max())
    if top <= 0:
        top = 1.0
    return np.linspace(0.0, config.max_mult * top, config.grid_size)


def stimulate_neuron(model: NetworkModel, neuron: NeuronRef, seed_images, grid, trace=None) -> StimulationProfile:
    """Label curves for every (seed image, grid value) pair.

    Reuses the cached activations up to the unit's layer and pushes all
    (seed, value) combinations through the remaining layers in one batch.
    """
    check_neuron(model, neuron)
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or len(grid) == 0:
        raise ValueError("grid must be a non-empty 1-D array")
    if (np.diff(grid) < 0).any() or grid[0] < 0:
        raise ValueError("grid must be ascending and non-negative")
    seed_images = np.asarray(seed_images)
    if len(seed_images) == 0:
        raise ValueError("stimulation needs a non-empty seed set")
    if trace is None:
        trace = natural_trace(model, seed_images)

    base = trace[neuron.layer]  # (S, ...) post-activation of the unit's layer
    s = base.shape[0]
    g = len(grid)
    tiled = np.repeat(base, g, axis=0)  # rows ordered (seed0,z0), (seed0,z1), ...
    zvals = np.tile(grid.astype(model.dtype), s)
    if model.specs[neuron.layer].kind == "conv2d":
        tiled[..., neuron.unit] = zvals[:, None, None]
    else:
        tiled[:, neuron.unit] = zvals
    scores = forward_from(model, tiled, neuron.layer + 1)
    curves = scores.argmax(axis=1).reshape(s, g).astype(np.int64)
    return StimulationProfile(neuron=neuron, grid=grid, curves=curves)
