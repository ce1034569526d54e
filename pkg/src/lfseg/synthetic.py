"""Synthetic layered scenes with exact ground truth.

A scene is a stack of fronto-parallel rectangular layers, each with a
constant CIELab color and a disparity. Layer content lives on the
central view; view (u, v) sees layer pixels sheared by
(x + d*(u - u0), y + d*(v - v0)). Overlaps resolve strictly by larger
disparity = nearer (ties by later list position). View pixels covered
by no layer fall back to the farthest layer (the background).

These scenes drive the quantitative test corpus: label and disparity
ground truth are exact by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .color import lab_to_rgb
from .lightfield import GroundTruth, LightField, LightFieldError


@dataclass(frozen=True)
class Layer:
    """One scene layer: Lab color, disparity, central-view rect (x0, y0, x1, y1).

    `label` groups several layers into one ground-truth region (textured
    regions are stacks of same-label tiles); None gives each layer its
    own label by list position.
    """

    color: tuple[float, float, float]
    disparity: float
    rect: tuple[int, int, int, int]     # half-open: x in [x0, x1), y in [y0, y1)
    label: int | None = None


def _layer_priority(layers: list[Layer]) -> np.ndarray:
    """Occlusion rank: larger disparity wins, later layer wins ties."""
    order = sorted(range(len(layers)), key=lambda i: (layers[i].disparity, i))
    rank = np.empty(len(layers), dtype=np.int32)
    rank[order] = np.arange(len(layers))
    return rank


def _winner_map(layers: list[Layer], rank: np.ndarray, width: int, height: int,
                du: float, dv: float) -> np.ndarray:
    """Index of the visible layer per pixel of one view (fallback: farthest layer)."""
    xs = np.arange(width)[None, :]
    ys = np.arange(height)[:, None]
    best = np.full((height, width), -1, dtype=np.int32)
    best_rank = np.full((height, width), -1, dtype=np.int32)
    for i, layer in enumerate(layers):
        x0, y0, x1, y1 = layer.rect
        src_x = xs - layer.disparity * du
        src_y = ys - layer.disparity * dv
        member = (src_x >= x0) & (src_x < x1) & (src_y >= y0) & (src_y < y1)
        take = member & (rank[i] > best_rank)
        best[take] = i
        best_rank[take] = rank[i]
    fallback = int(np.argmin(rank))
    best[best == -1] = fallback
    return best


def synth_scene(layers: list[Layer], u_count: int, v_count: int,
                width: int, height: int, noise_sigma: float = 0.0,
                seed: int = 0, name: str = "synthetic") -> tuple[LightField, GroundTruth]:
    """Render a layered scene into every view and return it with ground truth.

    Gaussian color noise of std `noise_sigma` (sRGB byte units) is added
    per view with the given seed; ground truth is noise-free.
    """
    if not layers:
        raise LightFieldError("empty layer spec")
    for layer in layers:
        x0, y0, x1, y1 = layer.rect
        if x1 <= 0 or y1 <= 0 or x0 >= width or y0 >= height or x0 >= x1 or y0 >= y1:
            raise LightFieldError(f"layer rect {layer.rect} outside {width}x{height} image")
    max_shear = max(abs(l.disparity) for l in layers) * max(u_count, v_count) / 2.0
    if max_shear >= min(width, height) / 4.0:
        raise LightFieldError(
            f"disparity shear {max_shear:.1f}px too large for {width}x{height} frame")

    u0, v0 = u_count // 2, v_count // 2
    rank = _layer_priority(layers)
    covered = np.zeros((height, width), dtype=bool)
    for layer in layers:
        x0, y0, x1, y1 = layer.rect
        covered[max(y0, 0):y1, max(x0, 0):x1] = True
    if not covered.all():
        raise LightFieldError("layer rectangles do not cover the central view")
    central = _winner_map(layers, rank, width, height, 0.0, 0.0)

    layer_label = np.array([l.label if l.label is not None else i + 1
                            for i, l in enumerate(layers)], dtype=np.int32)
    num_labels = int(layer_label.max())
    if sorted(set(layer_label.tolist())) != list(range(1, num_labels + 1)):
        raise LightFieldError("layer labels must cover 1..num_labels")
    colors = lab_to_rgb(np.array([l.color for l in layers], dtype=np.float64))
    disparities = np.array([l.disparity for l in layers], dtype=np.float32)

    rng = np.random.default_rng(seed)
    srgb = np.empty((u_count, v_count, height, width, 3), dtype=np.uint8)
    labels = np.empty((u_count, v_count, height, width), dtype=np.int32)
    for u in range(u_count):
        for v in range(v_count):
            winner = _winner_map(layers, rank, width, height, u - u0, v - v0)
            labels[u, v] = layer_label[winner]
            img = colors[winner].astype(np.float64)
            if noise_sigma > 0:
                img = img + rng.normal(0.0, noise_sigma, size=img.shape)
            srgb[u, v] = np.clip(np.round(img), 0, 255).astype(np.uint8)

    disparity = disparities[central]
    d_lo = float(np.floor(disparities.min() - 1.0))
    d_hi = float(np.ceil(disparities.max() + 1.0))
    lf = LightField.from_srgb(srgb, central=(u0, v0), name=name, d_range=(d_lo, d_hi))
    gt = GroundTruth(labels=labels, disparity=disparity, num_labels=num_labels)
    return lf, gt


# ---------------------------------------------------------------------------
# Presets and the seeded corpus


def three_planes(u_count: int = 9, v_count: int = 9, width: int = 128,
                 height: int = 128, noise_sigma: float = 0.0, seed: int = 0,
                 ) -> tuple[LightField, GroundTruth]:
    """Background plus two floating rectangles at distinct depths."""
    layers = [
        Layer(color=(70.0, -5.0, 25.0), disparity=0.0,
              rect=(0, 0, width, height)),
        Layer(color=(45.0, 45.0, -30.0), disparity=1.0,
              rect=(width // 8, height // 6, width // 2, height // 2 + height // 8)),
        Layer(color=(60.0, -40.0, 40.0), disparity=2.0,
              rect=(width // 2, height // 2, width - width // 8, height - height // 8)),
    ]
    return synth_scene(layers, u_count, v_count, width, height,
                       noise_sigma=noise_sigma, seed=seed, name="three-planes")


def checkerboard_plane(disparity: float, width: int, height: int, tile: int = 16,
                       colors: tuple = ((35.0, 15.0, 20.0), (75.0, -15.0, -20.0)),
                       ) -> list[Layer]:
    """Tile a full frame with alternating-color squares, all at one disparity.

    Gives an otherwise-flat plane enough texture for EPI slope estimation.
    """
    layers = []
    for j, y0 in enumerate(range(0, height, tile)):
        for i, x0 in enumerate(range(0, width, tile)):
            layers.append(Layer(color=colors[(i + j) % 2], disparity=disparity,
                                rect=(x0, y0, min(x0 + tile, width), min(y0 + tile, height))))
    return layers


def _separated_lab_colors(rng: np.random.Generator, count: int,
                          min_gap: float = 40.0) -> list[tuple[float, float, float]]:
    """Rejection-sample Lab colors pairwise at least min_gap apart (L1)."""
    colors: list[np.ndarray] = []
    while len(colors) < count:
        c = np.array([rng.uniform(30, 80), rng.uniform(-50, 50), rng.uniform(-50, 50)])
        if all(np.abs(c - prev).sum() >= min_gap for prev in colors):
            colors.append(c)
    return [tuple(c) for c in colors]


def textured_region(base_color, disparity: float, rect, label: int,
                    tile: int = 12, contrast: float = 12.0,
                    phase: int = 0) -> list[Layer]:
    """One ground-truth region built from checkered two-tone tiles.

    The internal tile edges give the region EPI-visible texture (so its
    disparity is observable) without crossing the ground-truth label.
    """
    x0, y0, x1, y1 = rect
    base = np.asarray(base_color, dtype=np.float64)
    hi = tuple(base + (contrast / 2.0, contrast / 4.0, -contrast / 4.0))
    lo = tuple(base - (contrast / 2.0, contrast / 4.0, -contrast / 4.0))
    layers = []
    for j, ty in enumerate(range(y0, y1, tile)):
        for i, tx in enumerate(range(x0, x1, tile)):
            color = hi if (i + j + phase) % 2 == 0 else lo
            layers.append(Layer(color=color, disparity=disparity,
                                rect=(tx, ty, min(tx + tile, x1), min(ty + tile, y1)),
                                label=label))
    return layers


def random_scene(seed: int, num_regions: int | None = None, u_count: int = 9,
                 v_count: int = 9, width: int = 128, height: int = 128,
                 noise_sigma: float = 0.0, min_visible: int = 200,
                 shared_depth: bool = False, textured: bool = True,
                 ) -> tuple[LightField, GroundTruth]:
    """Seeded random layered scene: a background plus 2-4 floating
    rectangles, each region textured and at its own disparity.

    Disparities stay small enough that parallax sweeps less than a
    typical LFSP, keeping indirect angular neighbors rare.
    `shared_depth` forces two foreground regions onto one disparity,
    which removes the depth cue along their shared boundary (used to
    stress the smoothing term).
    """
    rng = np.random.default_rng(seed)
    if num_regions is None:
        num_regions = int(rng.integers(3, 6))
    # small, distinct disparities: parallax stays below one LFSP and the
    # similarity term stays sharply depth-discriminative
    d_choices = [0.25, 0.5, 0.75, -0.25, -0.5]
    for _ in range(200):
        colors = _separated_lab_colors(rng, num_regions)
        d_fg = list(rng.choice(d_choices, size=num_regions - 1, replace=False))
        if shared_depth and num_regions >= 3:
            d_fg[1] = d_fg[0]
        specs = [(colors[0], 0.0, (0, 0, width, height))]
        hi = width // 2 + 12 if num_regions <= 3 else width // 2 - 8
        for i in range(num_regions - 1):
            w = int(rng.integers(width // 4, hi))
            h = int(rng.integers(height // 4, hi))
            x0 = int(rng.integers(4, width - w - 4))
            y0 = int(rng.integers(4, height - h - 4))
            specs.append((colors[i + 1], float(d_fg[i]), (x0, y0, x0 + w, y0 + h)))
        layers = []
        for k, (color, d, rect) in enumerate(specs):
            if textured:
                layers.extend(textured_region(color, d, rect, label=k + 1,
                                              tile=int(rng.integers(10, 15)),
                                              phase=int(rng.integers(0, 2))))
            else:
                layers.append(Layer(color=color, disparity=d, rect=rect, label=k + 1))
        rank = _layer_priority(layers)
        central = _winner_map(layers, rank, width, height, 0.0, 0.0)
        label_of = np.array([0] + [l.label for l in layers])
        counts = np.bincount(label_of[central.ravel() + 1], minlength=num_regions + 1)
        if (counts[1:] >= min_visible).all():
            return synth_scene(layers, u_count, v_count, width, height,
                               noise_sigma=noise_sigma, seed=seed,
                               name=f"random-{seed}")
    raise LightFieldError(f"could not realize a {num_regions}-region scene for seed {seed}")


def auto_scribbles(gt: GroundTruth, central: tuple[int, int],
                   radius: int = 2, style: str = "skeleton") -> np.ndarray:
    """Deterministic stand-in for user strokes on the central view.

    style="skeleton" traces each visible region's shape (a careful
    user); style="dot" drops one small disk per region at its deepest
    interior point (a quick first pass). Returns an (H, W) int map
    (0 = unlabeled).
    """
    from skimage.morphology import skeletonize

    u0, v0 = central
    central_labels = gt.labels[u0, v0]
    h, w = central_labels.shape
    scribbles = np.zeros((h, w), dtype=np.int32)
    for label in range(1, gt.num_labels + 1):
        mask = central_labels == label
        if not mask.any():
            continue
        dist = ndimage.distance_transform_edt(mask)
        if style == "dot":
            cy, cx = np.unravel_index(np.argmax(dist), dist.shape)
            ygrid, xgrid = np.mgrid[0:h, 0:w]
            r = min(radius + 1, max(dist[cy, cx] - 1.0, 1.0))
            stroke = (ygrid - cy) ** 2 + (xgrid - cx) ** 2 <= r * r
        else:
            stroke = skeletonize(mask)
            if radius > 0:
                stroke = ndimage.binary_dilation(stroke, iterations=radius)
            stroke &= dist >= 2.0
        if not stroke.any():
            stroke = dist == dist.max()
        scribbles[stroke] = label
    return scribbles


def corpus_scene(index: int, noise_sigma: float = 0.0,
                 shared_depth: bool = False) -> tuple[LightField, GroundTruth]:
    """Scene #index of the evaluation corpus (seeded, deterministic)."""
    return random_scene(seed=1000 + index, noise_sigma=noise_sigma,
                        shared_depth=shared_depth)


CORPUS_SIZE = 10
CORPUS_NOISE = (0.0, 0.0, 0.0, 0.0, 0.0, 4.0, 4.0, 4.0, 4.0, 4.0)


def corpus(noise_override: float | None = None,
           shared_depth: bool = False) -> list[tuple[str, LightField, GroundTruth]]:
    """The 10-scene acceptance corpus: 9x9 views, 128x128, 3-5 layers."""
    scenes = []
    for i in range(CORPUS_SIZE):
        sigma = CORPUS_NOISE[i] if noise_override is None else noise_override
        lf, gt = corpus_scene(i, noise_sigma=sigma, shared_depth=shared_depth)
        scenes.append((f"scene{i:02d}-n{int(sigma)}", lf, gt))
    return scenes
