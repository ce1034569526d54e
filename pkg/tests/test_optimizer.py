"""Alpha-expansion optimizer against exhaustive labeling enumeration."""

import itertools

import numpy as np
import pytest

import lfseg
from lfseg.energy import EnergyParams, compute_unary, fill_edge_weights, total_energy
from lfseg.optimizer import LabelField, PipelineError, expansion_move, minimize, segment
from lfseg.superpixels import ScribbleMap, SeedSet

from test_energy import graph_of, single_view_features


def random_instance(rng, n=None, label_count=None):
    n = n or int(rng.integers(4, 13))
    label_count = label_count or int(rng.integers(2, 4))
    colors = rng.uniform([0, -60, -60], [100, 60, 60], size=(n, 3))
    positions = rng.uniform(0, 60, size=(n, 2))
    disparities = rng.uniform(-2, 2, size=n)
    feats = single_view_features(colors, positions, disparities)
    ids = rng.permutation(n)
    seeds = {int(ids[k]): k + 1 for k in range(label_count)}
    pairs = list(itertools.combinations(range(n), 2))
    spatial = [p for p in pairs if rng.random() < 0.4]
    angular = [p for p in pairs if p not in spatial and rng.random() < 0.15]
    params = EnergyParams(lambda_s=float(rng.uniform(0.2, 3.0)),
                          lambda_a=float(rng.uniform(0.1, 1.0)),
                          lambda_p=float(rng.uniform(0.3, 1.5)),
                          lambda_d=float(rng.uniform(0.3, 1.5))).resolved(feats)
    graph = graph_of(n, label_count, seeds, spatial, angular)
    unary = compute_unary(feats, SeedSet(labels=seeds, label_count=label_count), params)
    fill_edge_weights(graph, feats, params)
    return unary, graph, params, seeds, n, label_count


def exhaustive_minimum(unary, graph, params, seeds, n, label_count):
    """Vectorized enumeration of every labeling that respects the seeds."""
    free = [i for i in range(n) if i not in seeds]
    combos = np.array(list(itertools.product(range(1, label_count + 1),
                                             repeat=len(free))), dtype=np.int32)
    if combos.size == 0:
        combos = np.zeros((1, 0), dtype=np.int32)
    labelings = np.zeros((len(combos), n), dtype=np.int32)
    for i, lab in seeds.items():
        labelings[:, i] = lab
    labelings[:, free] = combos
    energies = unary.costs[np.arange(n)[None, :], labelings - 1].sum(axis=1)
    for lam, edges, weights in ((params.lambda_s, graph.spatial_edges, graph.spatial_weights),
                                (params.lambda_a, graph.angular_edges, graph.angular_weights)):
        for e in range(len(edges)):
            i, j = edges[e]
            differ = labelings[:, i] != labelings[:, j]
            energies = energies + lam * weights[e] * differ
    best = int(np.argmin(energies))
    return float(energies[best]), labelings[best]


def test_expansion_noop_when_alpha_optimal():
    rng = np.random.default_rng(0)
    unary, graph, params, seeds, n, k = random_instance(rng, n=8, label_count=2)
    final, trace = minimize(unary, graph, params)
    again = expansion_move(final, 1, unary, graph, params)
    assert np.array_equal(again.labels, final.labels)
    assert total_energy(again.labels, unary, graph, params) == trace[-1]["energy"]


def test_zero_smoothness_gives_unary_argmin():
    rng = np.random.default_rng(1)
    n, k = 9, 3
    colors = rng.uniform([0, -60, -60], [100, 60, 60], size=(n, 3))
    feats = single_view_features(colors, rng.uniform(0, 60, (n, 2)),
                                 rng.uniform(-2, 2, n))
    seeds = {0: 1, 1: 2, 2: 3}
    params = EnergyParams(lambda_s=0.0, lambda_a=0.0).resolved(feats)
    graph = graph_of(n, k, seeds, [(i, j) for i in range(n) for j in range(i + 1, n)])
    unary = compute_unary(feats, SeedSet(labels=seeds, label_count=k), params)
    fill_edge_weights(graph, feats, params)
    final, _ = minimize(unary, graph, params)
    assert np.array_equal(final.labels, unary.argmin_labels())


def test_small_instances_reach_global_optimum():
    rng = np.random.default_rng(777)
    for trial in range(50):
        unary, graph, params, seeds, n, k = random_instance(rng)
        final, trace = minimize(unary, graph, params)
        got = trace[-1]["energy"]
        want, _ = exhaustive_minimum(unary, graph, params, seeds, n, k)
        assert got == pytest.approx(want, abs=1e-9), f"trial {trial} (n={n}, k={k})"


def test_energy_trace_non_increasing():
    rng = np.random.default_rng(31)
    for _ in range(20):
        unary, graph, params, seeds, n, k = random_instance(rng)
        _, trace = minimize(unary, graph, params)
        energies = [t["energy"] for t in trace]
        for a, b in zip(energies, energies[1:]):
            assert b <= a + 1e-9


def test_single_label_returns_immediately():
    feats = single_view_features([(0, 0, 0), (10, 0, 0)], [(0, 0), (5, 5)], [0, 0])
    params = EnergyParams(sigma_c2=1.0, sigma_d2=1.0).resolved(feats)
    seeds = {0: 1}
    graph = graph_of(2, 1, seeds, [(0, 1)])
    unary = compute_unary(feats, SeedSet(labels=seeds, label_count=1), params)
    fill_edge_weights(graph, feats, params)
    final, trace = minimize(unary, graph, params)
    assert len(trace) == 1
    assert (final.labels == 1).all()


def test_seeds_never_change():
    rng = np.random.default_rng(5)
    for _ in range(10):
        unary, graph, params, seeds, n, k = random_instance(rng)
        final, _ = minimize(unary, graph, params)
        for i, lab in seeds.items():
            assert final.labels[i] == lab


def test_determinism():
    rng1 = np.random.default_rng(99)
    rng2 = np.random.default_rng(99)
    u1, g1, p1, s1, n1, k1 = random_instance(rng1)
    u2, g2, p2, s2, n2, k2 = random_instance(rng2)
    f1, t1 = minimize(u1, g1, p1)
    f2, t2 = minimize(u2, g2, p2)
    assert np.array_equal(f1.labels, f2.labels)
    assert [t["energy"] for t in t1] == [t["energy"] for t in t2]


# ---------------------------------------------------------------------------
# segment pipeline


def test_segment_requires_two_labels(small_scene):
    lf, gt = small_scene
    scr = np.zeros((lf.height, lf.width), dtype=np.int32)
    scr[2:5, 2:5] = 1
    with pytest.raises(PipelineError, match="nothing to segment"):
        segment(lf, ScribbleMap.from_array(scr))


def test_segment_structural_coherence(three_plane_pipeline):
    # all rays of an LFSP share one label in every view
    _, _, _, result = three_plane_pipeline
    maps = result.label_field.pixel_labels(result.seg)
    n = result.seg.lfsp_count
    for u in (0, 4, 8):
        for v in (0, 4, 8):
            view_labels = maps[u, v]
            assignment = result.seg.assignment[u, v]
            for k in range(0, n, 11):
                slice_labels = view_labels[assignment == k]
                if len(slice_labels):
                    assert (slice_labels == slice_labels[0]).all()
                    assert slice_labels[0] == result.label_field.labels[k]


def test_segment_deterministic(small_scene):
    from conftest import gt_disparity_map
    lf, gt = small_scene
    scr = ScribbleMap.from_array(lfseg.auto_scribbles(gt, lf.central))
    r1 = segment(lf, scr, disparity=gt_disparity_map(gt), m=8)
    r2 = segment(lf, scr, disparity=gt_disparity_map(gt), m=8)
    assert np.array_equal(r1.label_field.labels, r2.label_field.labels)
    assert [t["energy"] for t in r1.trace] == [t["energy"] for t in r2.trace]


def test_segment_warm_cache_skips_preprocess(three_plane_pipeline):
    lf, gt, scribbles, result = three_plane_pipeline
    warm = segment(lf, scribbles, cache=result.cache, m=result.cache.m,
                   params=EnergyParams(lambda_s=5.0))
    assert warm.timings.get("cached_preprocess") is True
    assert "superpixels_ms" not in warm.timings
    assert "disparity_ms" not in warm.timings
    assert np.array_equal(warm.seg.assignment, result.seg.assignment)


def test_stage_errors_are_tagged(small_scene):
    lf, _ = small_scene
    scr = np.zeros((lf.height, lf.width), dtype=np.int32)
    scr[0, 0] = 1
    scr[1, 1] = 2
    with pytest.raises(PipelineError, match=r"\[disparity\]"):
        segment(lf, ScribbleMap.from_array(scr), disparity="/does/not/exist.pfm")
