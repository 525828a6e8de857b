import numpy as np

from trojanlab.nn import NeuronRef
from trojanlab.scan import CandidateNeuron, StimulationProfile, find_candidates


def profile_from(curves, grid=None, neuron=NeuronRef(0, 0)):
    curves = np.asarray(curves, dtype=np.int64)
    if grid is None:
        grid = np.arange(curves.shape[1], dtype=np.float64)
    return StimulationProfile(neuron=neuron, grid=np.asarray(grid, dtype=np.float64), curves=curves)


def literal_scan(curves, grid, seed_labels, min_width, reasr_bound):
    """Straight-line oracle over the arrays."""
    import math

    need = max(1, math.ceil(reasr_bound * len(seed_labels)))
    found = []
    g = curves.shape[1]
    j = 0
    while j < g:
        col = curves[:, j]
        if not (col == col[0]).all():
            j += 1
            continue
        label = int(col[0])
        k = j
        while k + 1 < g and (curves[:, k + 1] == label).all():
            k += 1
        if k - j + 1 >= min_width and sum(1 for t in seed_labels if t != label) >= need:
            found.append((label, float(grid[j]), float(grid[k])))
        j = k + 1
    return found


def test_benign_profiles_give_zero_candidates():
    # each curve constantly reports its own true label
    curves = np.tile(np.arange(4)[:, None], (1, 10))
    profile = profile_from(curves)
    assert find_candidates([profile], seed_labels=[0, 1, 2, 3], min_width=2, reasr_bound=0.2) == []


def test_constructed_run_detected_and_matches_literal_scan():
    rng = np.random.default_rng(0)
    curves = rng.integers(0, 10, size=(10, 64))
    curves[:, 40:64] = 3  # all ten curves agree on label 3 over points 40..63
    grid = np.linspace(0.0, 6.3, 64)
    seed_labels = np.arange(10)
    got = find_candidates([profile_from(curves, grid)], seed_labels, min_width=8, reasr_bound=0.2)
    want = literal_scan(curves, grid, seed_labels, min_width=8, reasr_bound=0.2)
    assert [(c.elevated_label, c.z_lo, c.z_hi) for c in got] == want
    assert len(got) == 1 and got[0].elevated_label == 3
    assert got[0].z_lo == grid[40] and got[0].z_hi == grid[63]


def test_short_flickers_do_not_count():
    curves = np.tile(np.arange(5)[:, None], (1, 12))
    curves[:, 6:8] = 4  # only two agreeing points
    got = find_candidates([profile_from(curves)], seed_labels=np.arange(5), min_width=4, reasr_bound=0.2)
    assert got == []


def test_self_confirming_interval_excluded_by_differs_rule():
    # every seed already has true label 2; an all-2 run teaches nothing
    curves = np.full((5, 16), 2)
    got = find_candidates([profile_from(curves)], seed_labels=[2] * 5, min_width=4, reasr_bound=0.2)
    assert got == []
    # with mixed labels the same run qualifies
    got = find_candidates([profile_from(curves)], seed_labels=[0, 1, 2, 3, 4], min_width=4, reasr_bound=0.2)
    assert len(got) == 1


def test_multiple_runs_yield_multiple_candidates():
    curves = np.zeros((3, 20), dtype=np.int64)
    curves[:, 0:6] = 1
    curves[0, 6:9] = 1  # disagreement gap
    curves[1, 6:9] = 2
    curves[2, 6:9] = 0
    curves[:, 9:20] = 2
    got = find_candidates([profile_from(curves)], seed_labels=[0, 1, 2], min_width=4, reasr_bound=0.3)
    assert [(c.elevated_label, c.z_lo, c.z_hi) for c in got] == [(1, 0.0, 5.0), (2, 9.0, 19.0)]


def test_matches_literal_scan_on_random_profiles():
    rng = np.random.default_rng(42)
    seed_labels = rng.integers(0, 6, size=8)
    for trial in range(25):
        curves = rng.integers(0, 6, size=(8, 32))
        if trial % 3 == 0:  # plant agreeing stretches so runs actually occur
            lo = int(rng.integers(0, 20))
            curves[:, lo : lo + int(rng.integers(3, 12))] = int(rng.integers(0, 6))
        grid = np.linspace(0, 1, 32)
        got = find_candidates([profile_from(curves, grid)], seed_labels, min_width=3, reasr_bound=0.25)
        want = literal_scan(curves, grid, seed_labels, min_width=3, reasr_bound=0.25)
        assert [(c.elevated_label, c.z_lo, c.z_hi) for c in got] == want
