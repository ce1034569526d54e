"""4D light-field container, directory loader, and EPI extraction.

A light field is a U x V grid of views, each an H x W sRGB image; the
ray (u, v, x, y) indexes view (u, v) at column x, row y. Disparity d
shifts a feature by d*(u - u0) in x and d*(v - v0) in y between views.

On-disk layout (one directory per light field):
    lf.json                 u_count, v_count, width, height, central_u,
                            central_v, d_min, d_max
    view_{u}_{v}.png        8-bit sRGB views, u/v zero-based
    gt_label_{u}_{v}.png    optional 8-bit label maps (0 = none)
    gt_disparity.pfm        optional central-view disparity (PFM float)
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .color import rgb_to_lab
from .pfm import read_pfm, write_pfm

GT_DISPARITY_NAME = "gt_disparity.pfm"


class LightFieldError(ValueError):
    """Raised for malformed or inconsistent light-field containers."""


@dataclass(frozen=True)
class Ray:
    u: int
    v: int
    x: int
    y: int


@dataclass(frozen=True)
class LightField:
    """Immutable 4D light field with both sRGB and CIELab planes.

    srgb: (U, V, H, W, 3) uint8; lab: (U, V, H, W, 3) float32 computed
    once at construction. Safe for concurrent read access.
    """

    srgb: np.ndarray
    lab: np.ndarray
    central: tuple[int, int]
    name: str = ""
    d_range: tuple[float, float] = (-4.0, 4.0)

    def __post_init__(self):
        if self.srgb.ndim != 5 or self.srgb.shape[-1] != 3:
            raise LightFieldError(f"expected (U,V,H,W,3) views, got {self.srgb.shape}")
        if self.srgb.shape != self.lab.shape:
            raise LightFieldError("sRGB and Lab planes disagree in shape")
        u0, v0 = self.central
        if not (0 <= u0 < self.u_count and 0 <= v0 < self.v_count):
            raise LightFieldError(f"central view {self.central} outside {self.u_count}x{self.v_count} grid")
        if not np.isfinite(self.lab).all():
            raise LightFieldError("non-finite CIELab samples")
        self.srgb.setflags(write=False)
        self.lab.setflags(write=False)

    @classmethod
    def from_srgb(cls, srgb: np.ndarray, central: tuple[int, int] | None = None,
                  name: str = "", d_range: tuple[float, float] = (-4.0, 4.0)) -> "LightField":
        srgb = np.ascontiguousarray(srgb, dtype=np.uint8)
        if central is None:
            central = (srgb.shape[0] // 2, srgb.shape[1] // 2)
        lab = rgb_to_lab(srgb).astype(np.float32)
        return cls(srgb=srgb, lab=lab, central=central, name=name, d_range=d_range)

    @property
    def u_count(self) -> int:
        return self.srgb.shape[0]

    @property
    def v_count(self) -> int:
        return self.srgb.shape[1]

    @property
    def height(self) -> int:
        return self.srgb.shape[2]

    @property
    def width(self) -> int:
        return self.srgb.shape[3]

    @property
    def ray_count(self) -> int:
        return self.u_count * self.v_count * self.height * self.width

    def central_srgb(self) -> np.ndarray:
        u0, v0 = self.central
        return self.srgb[u0, v0]

    def central_lab(self) -> np.ndarray:
        u0, v0 = self.central
        return self.lab[u0, v0]

    def in_bounds(self, ray: Ray) -> bool:
        return (0 <= ray.u < self.u_count and 0 <= ray.v < self.v_count
                and 0 <= ray.x < self.width and 0 <= ray.y < self.height)


@dataclass(frozen=True)
class GroundTruth:
    """Per-view label maps plus central-view disparity for a synthetic scene."""

    labels: np.ndarray      # (U, V, H, W) int32, values 1..num_labels
    disparity: np.ndarray   # (H, W) float32, central view
    num_labels: int

    def __post_init__(self):
        if self.labels.min() < 1 or self.labels.max() > self.num_labels:
            raise LightFieldError("ground-truth labels outside [1, num_labels]")


@dataclass(frozen=True)
class EpiImage:
    """A 2D epipolar-plane slice: one angular axis x one spatial axis.

    Horizontal EPIs fix (v*, y*) and have shape (U, X, 3); vertical EPIs
    fix (u*, x*) and have shape (V, Y, 3).
    """

    orientation: str            # "horizontal" | "vertical"
    fixed: tuple[int, int]      # (v*, y*) or (u*, x*)
    pixels: np.ndarray


def extract_epi(lf: LightField, orientation: str, fixed: tuple[int, int],
                labels: np.ndarray | None = None,
                palette: np.ndarray | None = None) -> EpiImage:
    """Slice an EPI out of the light field, from color or from a label field.

    `labels` is an optional (U, V, H, W) integer map; when given, the EPI
    is rendered through `palette` (an (n, 3) uint8 lookup, default the
    built-in label palette).
    """
    if labels is not None:
        if palette is None:
            from .render import label_palette
            palette = label_palette(int(labels.max()) + 1)
        source = palette[labels]
    else:
        source = lf.srgb

    if orientation == "horizontal":
        v_star, y_star = fixed
        if not (0 <= v_star < lf.v_count and 0 <= y_star < lf.height):
            raise LightFieldError(f"EPI coordinates (v*={v_star}, y*={y_star}) out of range")
        pixels = np.ascontiguousarray(source[:, v_star, y_star, :, :])
    elif orientation == "vertical":
        u_star, x_star = fixed
        if not (0 <= u_star < lf.u_count and 0 <= x_star < lf.width):
            raise LightFieldError(f"EPI coordinates (u*={u_star}, x*={x_star}) out of range")
        pixels = np.ascontiguousarray(source[u_star, :, :, x_star, :])
    else:
        raise LightFieldError(f"unknown EPI orientation {orientation!r}")
    return EpiImage(orientation=orientation, fixed=fixed, pixels=pixels)


# ---------------------------------------------------------------------------
# Directory I/O


def _view_name(u: int, v: int) -> str:
    return f"view_{u}_{v}.png"


def load_lightfield(directory: str | os.PathLike) -> LightField:
    """Load a light field from its directory container.

    Raises LightFieldError naming the offending file on any missing view,
    dimension mismatch, or malformed metadata.
    """
    directory = Path(directory)
    meta_path = directory / "lf.json"
    if not meta_path.is_file():
        raise LightFieldError(f"{meta_path}: missing metadata file")
    try:
        meta = json.loads(meta_path.read_text())
        u_count, v_count = int(meta["u_count"]), int(meta["v_count"])
        width, height = int(meta["width"]), int(meta["height"])
        central = (int(meta["central_u"]), int(meta["central_v"]))
        d_range = (float(meta["d_min"]), float(meta["d_max"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise LightFieldError(f"{meta_path}: malformed metadata ({exc})") from exc
    if u_count < 1 or v_count < 1:
        raise LightFieldError(f"{meta_path}: view grid {u_count}x{v_count} is empty")

    srgb = np.empty((u_count, v_count, height, width, 3), dtype=np.uint8)
    for u in range(u_count):
        for v in range(v_count):
            path = directory / _view_name(u, v)
            if not path.is_file():
                raise LightFieldError(f"missing view file {_view_name(u, v)}")
            img = np.asarray(Image.open(path).convert("RGB"))
            if img.shape != (height, width, 3):
                raise LightFieldError(
                    f"{_view_name(u, v)}: size {img.shape[1]}x{img.shape[0]} "
                    f"does not match metadata {width}x{height}")
            srgb[u, v] = img
    return LightField.from_srgb(srgb, central=central, name=meta.get("name", directory.name),
                                d_range=d_range)


def save_lightfield(lf: LightField, directory: str | os.PathLike,
                    gt: GroundTruth | None = None) -> None:
    """Write a light field (and optional ground truth) as a directory container."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    meta = {
        "name": lf.name,
        "u_count": lf.u_count, "v_count": lf.v_count,
        "width": lf.width, "height": lf.height,
        "central_u": lf.central[0], "central_v": lf.central[1],
        "d_min": lf.d_range[0], "d_max": lf.d_range[1],
    }
    (directory / "lf.json").write_text(json.dumps(meta, indent=2) + "\n")
    for u in range(lf.u_count):
        for v in range(lf.v_count):
            Image.fromarray(lf.srgb[u, v]).save(directory / _view_name(u, v))
    if gt is not None:
        for u in range(lf.u_count):
            for v in range(lf.v_count):
                Image.fromarray(gt.labels[u, v].astype(np.uint8)).save(
                    directory / f"gt_label_{u}_{v}.png")
        write_pfm(directory / GT_DISPARITY_NAME, gt.disparity)
        (directory / "gt.json").write_text(json.dumps({"num_labels": gt.num_labels}) + "\n")


def load_groundtruth(directory: str | os.PathLike, lf: LightField) -> GroundTruth:
    """Load ground-truth labels and disparity saved next to a light field."""
    directory = Path(directory)
    labels = np.empty((lf.u_count, lf.v_count, lf.height, lf.width), dtype=np.int32)
    for u in range(lf.u_count):
        for v in range(lf.v_count):
            path = directory / f"gt_label_{u}_{v}.png"
            if not path.is_file():
                raise LightFieldError(f"missing ground-truth file {path.name}")
            labels[u, v] = np.asarray(Image.open(path))
    disparity = read_pfm(directory / GT_DISPARITY_NAME)
    meta_path = directory / "gt.json"
    if meta_path.is_file():
        num_labels = int(json.loads(meta_path.read_text())["num_labels"])
    else:
        num_labels = int(labels.max())
    return GroundTruth(labels=labels, disparity=disparity, num_labels=num_labels)
