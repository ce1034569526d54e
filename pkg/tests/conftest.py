"""Shared fixtures: small scenes and ground-truth disparity helpers."""

from __future__ import annotations

import numpy as np
import pytest

import lfseg
from lfseg.disparity import DisparityMap


def gt_disparity_map(gt: lfseg.GroundTruth) -> DisparityMap:
    """Wrap ground-truth disparity as a full-confidence DisparityMap."""
    return DisparityMap(values=gt.disparity.astype(np.float32),
                        confidence=np.ones_like(gt.disparity, dtype=np.float32))


@pytest.fixture(scope="session")
def three_plane_scene():
    """Noise-free 9x9 three-planes scene, 128x128."""
    return lfseg.three_planes()


@pytest.fixture(scope="session")
def three_plane_pipeline(three_plane_scene):
    """Segmentation artifacts for the three-planes scene (GT disparity, M=8)."""
    lf, gt = three_plane_scene
    scribbles = lfseg.ScribbleMap.from_array(lfseg.auto_scribbles(gt, lf.central))
    result = lfseg.segment(lf, scribbles, disparity=gt_disparity_map(gt), m=8)
    return lf, gt, scribbles, result


@pytest.fixture(scope="session")
def small_scene():
    """Fast 5x5-view 64x64 scene for unit-level checks."""
    return lfseg.three_planes(u_count=5, v_count=5, width=64, height=64)
