"""Synthetic scene generation against a brute-force ray-tracing oracle."""

import numpy as np
import pytest

import lfseg
from lfseg.lightfield import LightFieldError
from lfseg.synthetic import Layer, _layer_priority


def oracle_visible_layer(layers, x, y, du, dv):
    """Oracle: per-pixel ray trace. Walk layers; keep the nearest (largest
    disparity, later index on ties) whose sheared rect covers the pixel;
    fall back to the farthest layer."""
    best = None
    for i, layer in enumerate(layers):
        x0, y0, x1, y1 = layer.rect
        sx = x - layer.disparity * du
        sy = y - layer.disparity * dv
        if x0 <= sx < x1 and y0 <= sy < y1:
            if best is None or (layer.disparity, i) > (layers[best].disparity, best):
                best = i
    if best is None:
        best = min(range(len(layers)), key=lambda i: (layers[i].disparity, i))
    return best


def test_single_fullframe_layer_zero_disparity():
    layers = [Layer(color=(50.0, 10.0, -10.0), disparity=0.0, rect=(0, 0, 32, 32))]
    lf, gt = lfseg.synth_scene(layers, 5, 5, 32, 32)
    # all views identical, GT disparity all zeros
    assert (lf.srgb == lf.srgb[0, 0]).all()
    assert (gt.disparity == 0).all()
    assert (gt.labels == 1).all()


def test_two_layer_shear_offset():
    layers = [
        Layer(color=(70.0, 0.0, 0.0), disparity=0.0, rect=(0, 0, 64, 64)),
        Layer(color=(40.0, 30.0, 30.0), disparity=1.0, rect=(20, 20, 40, 40)),
    ]
    lf, gt = lfseg.synth_scene(layers, 5, 5, 64, 64)
    u0, v0 = lf.central
    for u in range(5):
        for v in range(5):
            fg = gt.labels[u, v] == 2
            ys, xs = np.nonzero(fg)
            # foreground rect shifts by exactly (u-u0, v-v0) pixels (d=1)
            assert xs.min() == 20 + (u - u0) and xs.max() == 39 + (u - u0)
            assert ys.min() == 20 + (v - v0) and ys.max() == 39 + (v - v0)


def test_three_layer_scene_matches_raytrace_oracle():
    layers = [
        Layer(color=(75.0, -5.0, 20.0), disparity=0.0, rect=(0, 0, 48, 48)),
        Layer(color=(45.0, 45.0, -30.0), disparity=0.75, rect=(6, 8, 26, 30)),
        Layer(color=(60.0, -40.0, 40.0), disparity=1.5, rect=(20, 18, 42, 40)),
    ]
    lf, gt = lfseg.synth_scene(layers, 5, 5, 48, 48)
    u0, v0 = lf.central
    for u in range(5):
        for v in range(5):
            for y in range(48):
                for x in range(48):
                    want = oracle_visible_layer(layers, x, y, u - u0, v - v0) + 1
                    assert gt.labels[u, v, y, x] == want, (u, v, x, y)


def test_shear_relation_property():
    # for every non-occluded GT pixel the label survives the generating shear
    layers = [
        Layer(color=(75.0, -5.0, 20.0), disparity=0.0, rect=(0, 0, 32, 32)),
        Layer(color=(45.0, 45.0, -30.0), disparity=1.0, rect=(4, 5, 17, 20)),
        Layer(color=(60.0, -40.0, 40.0), disparity=2.0, rect=(13, 12, 28, 26)),
    ]
    lf, gt = lfseg.synth_scene(layers, 3, 3, 32, 32)
    u0, v0 = lf.central
    base = gt.labels[u0, v0]
    for u in range(3):
        for v in range(3):
            du, dv = u - u0, v - v0
            for y in range(32):
                for x in range(32):
                    src = base[y, x] - 1
                    d = layers[src].disparity
                    xt, yt = int(x + d * du), int(y + d * dv)
                    if not (0 <= xt < 32 and 0 <= yt < 32):
                        continue
                    if oracle_visible_layer(layers, xt, yt, du, dv) != src:
                        continue    # occluded there
                    assert gt.labels[u, v, yt, xt] == base[y, x]


def test_noise_is_seeded_and_bounded():
    layers = [Layer(color=(50.0, 0.0, 0.0), disparity=0.0, rect=(0, 0, 32, 32))]
    lf1, _ = lfseg.synth_scene(layers, 3, 3, 32, 32, noise_sigma=4.0, seed=9)
    lf2, _ = lfseg.synth_scene(layers, 3, 3, 32, 32, noise_sigma=4.0, seed=9)
    lf3, _ = lfseg.synth_scene(layers, 3, 3, 32, 32, noise_sigma=4.0, seed=10)
    assert np.array_equal(lf1.srgb, lf2.srgb)
    assert not np.array_equal(lf1.srgb, lf3.srgb)
    clean, _ = lfseg.synth_scene(layers, 3, 3, 32, 32)
    spread = lf1.srgb.astype(int) - clean.srgb.astype(int)
    assert 2.0 < spread.std() < 6.0


def test_empty_spec_rejected():
    with pytest.raises(LightFieldError, match="empty"):
        lfseg.synth_scene([], 3, 3, 16, 16)


def test_rect_outside_image_rejected():
    layers = [Layer(color=(50.0, 0.0, 0.0), disparity=0.0, rect=(0, 0, 16, 16)),
              Layer(color=(60.0, 0.0, 0.0), disparity=1.0, rect=(20, 20, 30, 30))]
    with pytest.raises(LightFieldError, match="outside"):
        lfseg.synth_scene(layers, 3, 3, 16, 16)


def test_uncovered_central_view_rejected():
    layers = [Layer(color=(50.0, 0.0, 0.0), disparity=0.0, rect=(0, 0, 8, 16))]
    with pytest.raises(LightFieldError, match="cover"):
        lfseg.synth_scene(layers, 3, 3, 16, 16)


def test_excessive_shear_rejected():
    layers = [Layer(color=(50.0, 0.0, 0.0), disparity=6.0, rect=(0, 0, 32, 32))]
    with pytest.raises(LightFieldError, match="shear"):
        lfseg.synth_scene(layers, 9, 9, 32, 32)


def test_occlusion_resolved_by_larger_disparity():
    layers = [
        Layer(color=(70.0, 0.0, 0.0), disparity=0.0, rect=(0, 0, 32, 32)),
        Layer(color=(40.0, 20.0, 0.0), disparity=0.5, rect=(8, 8, 24, 24)),
        Layer(color=(55.0, -20.0, 10.0), disparity=1.5, rect=(12, 12, 20, 20)),
    ]
    _, gt = lfseg.synth_scene(layers, 3, 3, 32, 32)
    assert gt.labels[1, 1, 15, 15] == 3
    assert gt.labels[1, 1, 10, 10] == 2
    assert gt.labels[1, 1, 2, 2] == 1
    assert gt.disparity[15, 15] == 1.5


def test_priority_ties_go_to_later_layer():
    layers = [
        Layer(color=(70.0, 0.0, 0.0), disparity=0.0, rect=(0, 0, 16, 16)),
        Layer(color=(40.0, 0.0, 0.0), disparity=0.0, rect=(4, 4, 12, 12)),
    ]
    rank = _layer_priority(layers)
    assert rank[1] > rank[0]
    _, gt = lfseg.synth_scene(layers, 3, 3, 16, 16)
    assert gt.labels[1, 1, 8, 8] == 2


def test_corpus_is_deterministic_and_well_formed():
    scenes_a = lfseg.corpus()
    scenes_b = lfseg.corpus()
    assert len(scenes_a) == 10
    for (name_a, lf_a, gt_a), (name_b, lf_b, gt_b) in zip(scenes_a, scenes_b):
        assert name_a == name_b
        assert np.array_equal(lf_a.srgb, lf_b.srgb)
        assert np.array_equal(gt_a.labels, gt_b.labels)
        assert 3 <= gt_a.num_labels <= 5
        assert lf_a.u_count == 9 and lf_a.width == 128
        # every label visible in the central view
        u0, v0 = lf_a.central
        present = np.unique(gt_a.labels[u0, v0])
        assert len(present) == gt_a.num_labels
