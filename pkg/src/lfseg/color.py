"""sRGB <-> CIELab conversion (D65 white point).

All segmentation math runs on CIELab; sRGB is kept for display and file
I/O. Conversions follow the standard sRGB companding and the CIE 1976
L*a*b* equations with the D65 reference white.
"""

from __future__ import annotations

import numpy as np

# sRGB primaries -> XYZ, D65 (IEC 61966-2-1)
_RGB_TO_XYZ = np.array([
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
])
_XYZ_TO_RGB = np.linalg.inv(_RGB_TO_XYZ)

_D65 = np.array([0.95047, 1.00000, 1.08883])

_EPS = 216.0 / 24389.0
_KAPPA = 24389.0 / 27.0


def _srgb_decode(c: np.ndarray) -> np.ndarray:
    """sRGB companding -> linear, input in [0, 1]."""
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def _srgb_encode(c: np.ndarray) -> np.ndarray:
    c = np.clip(c, 0.0, None)
    return np.where(c <= 0.0031308, c * 12.92, 1.055 * c ** (1.0 / 2.4) - 0.055)


def rgb_to_lab(rgb: np.ndarray) -> np.ndarray:
    """Convert sRGB bytes to CIELab.

    Accepts any shape (..., 3) of uint8 values (or floats in [0, 255]).
    Returns float64 Lab with L in [0, 100], a/b roughly [-128, 127].
    """
    rgb = np.asarray(rgb, dtype=np.float64) / 255.0
    lin = _srgb_decode(rgb)
    xyz = lin @ _RGB_TO_XYZ.T
    t = xyz / _D65
    f = np.where(t > _EPS, np.cbrt(t), (_KAPPA * t + 16.0) / 116.0)
    fx, fy, fz = f[..., 0], f[..., 1], f[..., 2]
    L = 116.0 * fy - 16.0
    a = 500.0 * (fx - fy)
    b = 200.0 * (fy - fz)
    return np.stack([L, a, b], axis=-1)


def lab_to_rgb(lab: np.ndarray) -> np.ndarray:
    """Inverse of :func:`rgb_to_lab`; returns uint8 sRGB, clipped to gamut."""
    lab = np.asarray(lab, dtype=np.float64)
    L, a, b = lab[..., 0], lab[..., 1], lab[..., 2]
    fy = (L + 16.0) / 116.0
    fx = fy + a / 500.0
    fz = fy - b / 200.0

    def finv(f: np.ndarray) -> np.ndarray:
        f3 = f ** 3
        return np.where(f3 > _EPS, f3, (116.0 * f - 16.0) / _KAPPA)

    xyz = np.stack([finv(fx), finv(fy), finv(fz)], axis=-1) * _D65
    lin = xyz @ _XYZ_TO_RGB.T
    srgb = _srgb_encode(lin)
    return np.clip(np.round(srgb * 255.0), 0, 255).astype(np.uint8)
