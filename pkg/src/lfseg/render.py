"""Label palettes, overlay compositing, and EPI strip rendering."""

from __future__ import annotations

import numpy as np

# distinct, display-safe colors; label 0 (none) renders black
_BASE_PALETTE = np.array([
    [0, 0, 0],
    [230, 70, 60],
    [60, 130, 230],
    [70, 200, 90],
    [245, 190, 40],
    [170, 80, 220],
    [70, 210, 210],
    [240, 120, 180],
    [150, 150, 60],
    [120, 90, 50],
], dtype=np.uint8)


def label_palette(count: int) -> np.ndarray:
    """(count, 3) uint8 lookup table, cycling past the base colors."""
    if count <= len(_BASE_PALETTE):
        return _BASE_PALETTE[:count].copy()
    reps = int(np.ceil(count / (len(_BASE_PALETTE) - 1)))
    extra = np.tile(_BASE_PALETTE[1:], (reps, 1))
    return np.concatenate([_BASE_PALETTE[:1], extra])[:count].copy()


def boundaries(labels: np.ndarray) -> np.ndarray:
    """Pixels whose label differs from a 4-neighbor."""
    b = np.zeros(labels.shape, dtype=bool)
    b[:-1, :] |= labels[:-1, :] != labels[1:, :]
    b[1:, :] |= labels[1:, :] != labels[:-1, :]
    b[:, :-1] |= labels[:, :-1] != labels[:, 1:]
    b[:, 1:] |= labels[:, 1:] != labels[:, :-1]
    return b


def overlay(image: np.ndarray, labels: np.ndarray, alpha: float = 0.45,
            draw_boundaries: bool = True) -> np.ndarray:
    """Translucent label fills plus saturated label boundaries on a view."""
    palette = label_palette(int(labels.max()) + 1)
    fill = palette[labels].astype(np.float64)
    out = (1.0 - alpha) * image.astype(np.float64) + alpha * fill
    if draw_boundaries:
        edge = boundaries(labels)
        out[edge] = palette[labels[edge]]
    return np.clip(np.round(out), 0, 255).astype(np.uint8)


def label_mask(labels: np.ndarray, label: int) -> np.ndarray:
    """8-bit mask (255 inside the label) for export."""
    return np.where(labels == label, 255, 0).astype(np.uint8)


def epi_pair(raw_epi: np.ndarray, label_epi: np.ndarray,
             scale: int = 1) -> np.ndarray:
    """Stack a raw EPI above its segmentation EPI with a divider line."""
    h, w = raw_epi.shape[:2]
    divider = np.full((1, w, 3), 255, dtype=np.uint8)
    stacked = np.concatenate([raw_epi, divider, label_epi], axis=0)
    if scale > 1:
        stacked = np.repeat(np.repeat(stacked, scale, axis=0), scale, axis=1)
    return stacked
