"""Accuracy, coherence, reduction statistics, and the ablation hook."""

import numpy as np
import pytest

import lfseg
from conftest import gt_disparity_map
from lfseg.evaluation import ablation, accuracy, coherence, graph_stats, render_table
from lfseg.lightfield import GroundTruth, LightFieldError


def test_perfect_prediction_scores_100(small_scene):
    _, gt = small_scene
    pooled, per_view = accuracy(gt.labels.copy(), gt)
    assert pooled == 100.0
    assert (per_view == 100.0).all()


def test_half_flipped_scores_50():
    labels = np.ones((1, 1, 4, 4), dtype=np.int32)
    gt = GroundTruth(labels=labels, disparity=np.zeros((4, 4), dtype=np.float32),
                     num_labels=2)
    pred = labels.copy()
    pred[0, 0, :2, :] = 2
    pooled, _ = accuracy(pred, gt, label_mapping="identity")
    assert pooled == 50.0


def test_auto_mapping_is_permutation_invariant(small_scene):
    _, gt = small_scene
    perm = {1: 3, 2: 1, 3: 2}
    permuted = np.vectorize(perm.get)(gt.labels).astype(np.int32)
    pooled, _ = accuracy(permuted, gt, label_mapping="auto")
    assert pooled == 100.0


def test_dimension_mismatch_rejected(small_scene):
    _, gt = small_scene
    with pytest.raises(LightFieldError, match="match"):
        accuracy(gt.labels[:, :, :16, :16], gt)


def test_coherence_zero_disparity_identical_views():
    labels = np.ones((3, 3, 8, 8), dtype=np.int32)
    labels[:, :, 2:5, 2:5] = 2
    score = coherence(labels, np.zeros((8, 8), dtype=np.float32), central=(1, 1))
    assert score == 1.0


def test_coherence_on_gt_labels(small_scene):
    # GT labels with GT disparity: coherent away from rounding effects
    _, gt = small_scene
    score = coherence(gt.labels, gt.disparity, central=(2, 2))
    assert score >= 0.99


def test_coherence_detects_incoherence():
    labels = np.ones((3, 3, 8, 8), dtype=np.int32)
    labels[0, 0] = 2        # one view entirely different
    labels[2, 2, 0, 0] = 2  # keep label 2 in the map legal
    score = coherence(labels, np.zeros((8, 8), dtype=np.float32), central=(1, 1))
    assert score < 1.0


def test_graph_stats_small_grid():
    # single view, X = Y = 4M: 16 vertices, reduction factor 16
    srgb = np.full((1, 1, 32, 32, 3), 100, dtype=np.uint8)
    lf = lfseg.LightField.from_srgb(srgb, d_range=(-1, 1))
    disp = lfseg.DisparityMap(values=np.zeros((32, 32), dtype=np.float32),
                              confidence=np.ones((32, 32), dtype=np.float32))
    seg = lfseg.compute_lfsp(lf, disp, m=8)
    feats = lfseg.init_features(lf, disp, seg)
    seeds = lfseg.SeedSet(labels={0: 1, 15: 2}, label_count=2)
    graph = lfseg.build_graph(seg, feats, seeds, 8)
    stats = graph_stats(graph, lf)
    assert stats["ray_count"] == 32 * 32
    assert stats["vertex_count"] == 16
    assert stats["reduction_factor"] == pytest.approx(64.0)


def test_reduction_factor_exceeds_view_count(three_plane_pipeline):
    lf, _, _, result = three_plane_pipeline
    stats = graph_stats(result.graph, lf)
    assert stats["reduction_factor"] >= lf.u_count * lf.v_count


def test_doubling_m_shrinks_vertices(three_plane_scene):
    lf, gt = three_plane_scene
    disp = gt_disparity_map(gt)
    small = lfseg.compute_lfsp(lf, disp, m=8)
    large = lfseg.compute_lfsp(lf, disp, m=16)
    ratio = small.lfsp_count / large.lfsp_count
    assert 3.0 <= ratio <= 6.0


def test_ablation_zero_lambdas_identical(three_plane_scene):
    lf, gt = three_plane_scene
    scr = lfseg.ScribbleMap.from_array(lfseg.auto_scribbles(gt, lf.central))
    params = lfseg.EnergyParams(lambda_s=0.0, lambda_a=0.0)
    acc_init, acc_final = ablation(lf, gt, scr, disparity=gt_disparity_map(gt),
                                   params=params, m=8)
    assert acc_init == acc_final


def test_ablation_smoothing_does_not_hurt(three_plane_pipeline):
    lf, gt, scribbles, result = three_plane_pipeline
    acc_init, _ = accuracy(result.initial.pixel_labels(result.seg), gt)
    acc_final, _ = accuracy(result.label_field.pixel_labels(result.seg), gt)
    assert acc_final >= acc_init - 0.1


def test_render_table_shape():
    rows = [lfseg.EvalReport(scene="a", config="gt", pooled_accuracy=99.4),
            lfseg.EvalReport(scene="a", config="est", pooled_accuracy=98.0),
            lfseg.EvalReport(scene="b", config="gt", pooled_accuracy=99.0)]
    table = render_table(rows)
    assert "Average" in table
    assert "99.40" in table and "98.00" in table
    lines = table.splitlines()
    assert lines[0].split() == ["Scene", "est", "gt"]


def test_timing_split_is_reported(three_plane_pipeline):
    _, _, _, result = three_plane_pipeline
    t = result.timings
    stage_sum = sum(v for k, v in t.items()
                    if k.endswith("_ms") and k not in ("interactive_ms", "preprocess_ms"))
    assert t["interactive_ms"] + t["preprocess_ms"] == pytest.approx(stage_sum, abs=1.0)
