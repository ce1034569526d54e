"""EPI structure-tensor disparity estimation and the PFM loader."""

import numpy as np
import pytest

import lfseg
from lfseg.disparity import estimate_disparity, load_disparity
from lfseg.lightfield import LightFieldError
from lfseg.pfm import write_pfm
from lfseg.synthetic import checkerboard_plane


def _textured_plane_lf(d, u_count=9, v_count=9, size=96, tile=12):
    layers = checkerboard_plane(d, size, size, tile=tile)
    return lfseg.synth_scene(layers, u_count, v_count, size, size)


def test_needs_angular_extent():
    srgb = np.random.default_rng(0).integers(0, 256, (2, 2, 16, 16, 3)).astype(np.uint8)
    lf = lfseg.LightField.from_srgb(srgb)
    with pytest.raises(LightFieldError, match="U>=3 or V>=3"):
        estimate_disparity(lf)


def test_constant_lightfield_no_confidence():
    srgb = np.full((5, 5, 32, 32, 3), 120, dtype=np.uint8)
    lf = lfseg.LightField.from_srgb(srgb, d_range=(-2, 2))
    disp = estimate_disparity(lf)
    assert disp.confidence.max() <= 0.05
    assert disp.values.min() >= -2 and disp.values.max() <= 2


def test_single_plane_subpixel_accuracy():
    lf, _ = _textured_plane_lf(1.0)
    disp = estimate_disparity(lf, fill_low_confidence=False)
    confident = disp.confidence > 0.5
    assert confident.sum() > 500
    err = np.abs(disp.values[confident] - 1.0)
    assert np.median(err) <= 0.05


def test_two_plane_accuracy_outside_occlusion_band():
    from scipy import ndimage
    bg = checkerboard_plane(0.0, 96, 96, tile=12)
    fg = checkerboard_plane(1.5, 96, 96, tile=8,
                            colors=((55.0, 40.0, 10.0), (25.0, -30.0, -20.0)))
    fg = [lfseg.Layer(color=l.color, disparity=l.disparity, rect=l.rect)
          for l in fg if 24 <= l.rect[0] < 72 and 24 <= l.rect[1] < 72]
    lf, gt = lfseg.synth_scene(bg + fg, 9, 9, 96, 96)
    disp = estimate_disparity(lf)
    # mask out a 2px band around GT label boundaries
    boundary = np.zeros((96, 96), dtype=bool)
    g = gt.disparity
    boundary[:-1] |= g[:-1] != g[1:]
    boundary[1:] |= g[1:] != g[:-1]
    boundary[:, :-1] |= g[:, :-1] != g[:, 1:]
    boundary[:, 1:] |= g[:, 1:] != g[:, :-1]
    band = ndimage.binary_dilation(boundary, iterations=2)
    for plane_d in (0.0, 1.5):
        sel = (g == plane_d) & ~band
        err = np.abs(disp.values[sel] - plane_d)
        assert np.median(err) <= 0.1, plane_d


def test_values_always_clamped():
    lf, _ = _textured_plane_lf(1.0)
    object.__setattr__(lf, "d_range", (-0.25, 0.25))
    disp = estimate_disparity(lf)
    assert disp.values.min() >= -0.25 and disp.values.max() <= 0.25


def test_shift_equivariance():
    lf, _ = _textured_plane_lf(0.5, size=64, tile=8)
    shifted = np.roll(lf.srgb, shift=(3, 5), axis=(3, 2))   # +3 in x, +5 in y
    lf2 = lfseg.LightField.from_srgb(shifted, central=lf.central, d_range=lf.d_range)
    d1 = estimate_disparity(lf, fill_low_confidence=False)
    d2 = estimate_disparity(lf2, fill_low_confidence=False)
    rolled = np.roll(d1.values, shift=(5, 3), axis=(0, 1))
    # frame-anchored smoothing reaches ~12px in; compare beyond that
    interior = np.zeros((64, 64), dtype=bool)
    interior[16:-16, 16:-16] = True
    assert np.allclose(d2.values[interior], rolled[interior], atol=1e-4)


def test_accuracy_improves_with_views():
    errors = []
    for u_count in (3, 5, 9):
        lf, _ = _textured_plane_lf(1.0, u_count=u_count, v_count=u_count)
        disp = estimate_disparity(lf, fill_low_confidence=False)
        confident = disp.confidence > 0.5
        errors.append(float(np.median(np.abs(disp.values[confident] - 1.0))))
    assert errors[0] >= errors[1] >= errors[2] - 1e-6


def test_parallel_scanline_independence():
    # computing on a vertical split and stitching matches the full run for
    # horizontal EPIs (per-scanline independence)
    lf, _ = _textured_plane_lf(1.0, u_count=5, v_count=1, size=48, tile=8)
    full = estimate_disparity(lf, fill_low_confidence=False)
    top = lfseg.LightField.from_srgb(lf.srgb[:, :, :24], central=lf.central,
                                     d_range=lf.d_range)
    bottom = lfseg.LightField.from_srgb(lf.srgb[:, :, 24:], central=lf.central,
                                        d_range=lf.d_range)
    stitched = np.concatenate([estimate_disparity(top, fill_low_confidence=False).values,
                               estimate_disparity(bottom, fill_low_confidence=False).values])
    assert np.allclose(stitched, full.values, atol=1e-9)


# ---------------------------------------------------------------------------
# Loader


def test_load_zeros(tmp_path, small_scene):
    lf, _ = small_scene
    write_pfm(tmp_path / "z.pfm", np.zeros((lf.height, lf.width), dtype=np.float32))
    disp = load_disparity(tmp_path / "z.pfm", lf)
    assert (disp.values == 0).all()
    assert (disp.confidence == 1).all()


def test_gt_roundtrip_bit_exact(tmp_path, small_scene):
    lf, gt = small_scene
    write_pfm(tmp_path / "d.pfm", gt.disparity)
    disp = load_disparity(tmp_path / "d.pfm", lf)
    assert np.array_equal(disp.values, gt.disparity)


def test_nan_names_pixel(tmp_path, small_scene):
    lf, _ = small_scene
    values = np.zeros((lf.height, lf.width), dtype=np.float32)
    values[7, 13] = np.nan
    write_pfm(tmp_path / "bad.pfm", values)
    with pytest.raises(LightFieldError, match=r"x=13, y=7"):
        load_disparity(tmp_path / "bad.pfm", lf)


def test_dimension_mismatch(tmp_path, small_scene):
    lf, _ = small_scene
    write_pfm(tmp_path / "small.pfm", np.zeros((8, 8), dtype=np.float32))
    with pytest.raises(LightFieldError, match="match"):
        load_disparity(tmp_path / "small.pfm", lf)
