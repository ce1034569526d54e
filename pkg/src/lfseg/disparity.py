"""Central-view disparity from EPI structure tensors.

An EPI line of slope d marks a scene point at disparity d. The local
slope is recovered from the 2x2 structure tensor of the L channel over
(angular, spatial) axes: Gaussian pre-smoothing, gradient outer
products, Gaussian tensor smoothing, then the dominant orientation.
Horizontal (u, x) and vertical (v, y) estimates are fused per pixel by
tensor coherence. Values are clamped to the light field's disparity
range unconditionally.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .lightfield import LightField, LightFieldError
from .pfm import read_pfm


@dataclass(frozen=True)
class DisparityMap:
    """Per-pixel central-view disparity and confidence in [0, 1]."""

    values: np.ndarray       # (H, W) float32, pixels per unit view step
    confidence: np.ndarray   # (H, W) float32

    def __post_init__(self):
        if self.values.shape != self.confidence.shape:
            raise LightFieldError("disparity/confidence shape mismatch")
        if not np.isfinite(self.values).all():
            bad = np.argwhere(~np.isfinite(self.values))[0]
            raise LightFieldError(f"non-finite disparity at pixel (x={bad[1]}, y={bad[0]})")


def _tensor_slope(stack: np.ndarray, angular_axis: int, spatial_axis: int,
                  inner_sigma: float, outer_sigma: float, eps: float,
                  ) -> tuple[np.ndarray, np.ndarray]:
    """Slope (spatial px per angular step) and coherence for an EPI stack.

    `stack` carries one extra passthrough axis; smoothing acts only on
    the angular and spatial axes, so slices stay independent (the
    per-scanline computations share no state).
    """
    sigmas_in = [0.0] * stack.ndim
    sigmas_in[angular_axis] = inner_sigma
    sigmas_in[spatial_axis] = inner_sigma
    smoothed = ndimage.gaussian_filter(stack, sigma=sigmas_in, mode="nearest")
    g_ang = np.gradient(smoothed, axis=angular_axis)
    g_spa = np.gradient(smoothed, axis=spatial_axis)

    sigmas_out = [0.0] * stack.ndim
    sigmas_out[angular_axis] = outer_sigma
    sigmas_out[spatial_axis] = outer_sigma

    def blur(a):
        return ndimage.gaussian_filter(a, sigma=sigmas_out, mode="nearest")

    j_ss = blur(g_spa * g_spa)
    j_sa = blur(g_spa * g_ang)
    j_aa = blur(g_ang * g_ang)

    # major-axis orientation of [[j_ss, j_sa], [j_sa, j_aa]] in the
    # (spatial, angular) plane; the EPI line is its perpendicular, so
    # slope = -tan(phi) with phi measured from the spatial axis.
    phi = 0.5 * np.arctan2(2.0 * j_sa, j_ss - j_aa)
    slope = -np.tan(phi)
    coherence = np.sqrt((j_ss - j_aa) ** 2 + 4.0 * j_sa ** 2) / (j_ss + j_aa + eps)
    return slope, coherence


def _fill_from_confident(values: np.ndarray, confidence: np.ndarray,
                         sigma: float = 4.0, floor: float = 1e-3) -> np.ndarray:
    """Confidence-weighted diffusion: spread reliable estimates into flat areas.

    Normalized convolution with a growing Gaussian until every pixel has
    support; the result blends with the raw estimate by confidence.
    """
    weight = np.maximum(confidence.astype(np.float64), 0.0)
    filled = values.astype(np.float64)
    support = weight.copy()
    s = sigma
    for _ in range(8):
        num = ndimage.gaussian_filter(weight * values, sigma=s, mode="nearest")
        den = ndimage.gaussian_filter(weight, sigma=s, mode="nearest")
        ok = den > floor
        filled = np.where(support > floor, filled, np.divide(num, den, out=np.zeros_like(num), where=ok))
        support = np.maximum(support, np.where(ok, den, 0.0))
        if (support > floor).all():
            break
        s *= 2.0
    c = np.clip(confidence, 0.0, 1.0)
    return c * values + (1.0 - c) * filled


def estimate_disparity(lf: LightField, inner_sigma: float = 0.8,
                       outer_sigma: float = 2.0, eps: float = 1e-9,
                       fill_low_confidence: bool = True) -> DisparityMap:
    """Estimate the central-view disparity map of a light field.

    Needs angular extent on at least one axis (U >= 3 or V >= 3).
    Low-coherence pixels (textureless regions) are optionally filled by
    diffusing confident estimates, which the superpixel shear
    propagation needs; set fill_low_confidence=False for the raw
    clamped tensor output.
    """
    if lf.u_count < 3 and lf.v_count < 3:
        raise LightFieldError(
            f"disparity estimation needs U>=3 or V>=3 views, got {lf.u_count}x{lf.v_count}")
    u0, v0 = lf.central
    h, w = lf.height, lf.width

    slope_h = coh_h = None
    if lf.u_count >= 3:
        # horizontal EPIs: stack (U, Y, X), tensor over (u, x) per scanline y
        stack = lf.lab[:, v0, :, :, 0].astype(np.float64)
        slope, coh = _tensor_slope(stack, angular_axis=0, spatial_axis=2,
                                   inner_sigma=inner_sigma, outer_sigma=outer_sigma, eps=eps)
        slope_h, coh_h = slope[u0], coh[u0]
    slope_v = coh_v = None
    if lf.v_count >= 3:
        # vertical EPIs: stack (V, Y, X), tensor over (v, y) per column x
        stack = lf.lab[u0, :, :, :, 0].astype(np.float64)
        slope, coh = _tensor_slope(stack, angular_axis=0, spatial_axis=1,
                                   inner_sigma=inner_sigma, outer_sigma=outer_sigma, eps=eps)
        slope_v, coh_v = slope[v0], coh[v0]

    if slope_h is None:
        values, confidence = slope_v, coh_v
    elif slope_v is None:
        values, confidence = slope_h, coh_h
    else:
        use_h = coh_h >= coh_v
        values = np.where(use_h, slope_h, slope_v)
        confidence = np.where(use_h, coh_h, coh_v)

    confidence = np.clip(confidence, 0.0, 1.0)
    d_min, d_max = lf.d_range
    values = np.clip(values, d_min, d_max)
    if fill_low_confidence:
        values = np.clip(_fill_from_confident(values, confidence), d_min, d_max)
    assert values.shape == (h, w)
    return DisparityMap(values=values.astype(np.float32),
                        confidence=confidence.astype(np.float32))


def load_disparity(path, lf: LightField) -> DisparityMap:
    """Load a PFM disparity map for the central view; confidence is 1."""
    values = read_pfm(path)
    if values.shape != (lf.height, lf.width):
        raise LightFieldError(
            f"{path}: disparity size {values.shape[1]}x{values.shape[0]} does not "
            f"match central view {lf.width}x{lf.height}")
    if not np.isfinite(values).all():
        bad = np.argwhere(~np.isfinite(values))[0]
        raise LightFieldError(f"{path}: non-finite disparity at pixel (x={bad[1]}, y={bad[0]})")
    return DisparityMap(values=values.astype(np.float32),
                        confidence=np.ones_like(values, dtype=np.float32))
