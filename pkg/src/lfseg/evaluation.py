"""Quantitative evaluation: pixel accuracy, cross-view coherence,
graph-size reduction, smoothing ablation, and report rendering."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np

from .graph import LfspGraph
from .lightfield import GroundTruth, LightField, LightFieldError
from .superpixels import ScribbleMap


@dataclass
class EvalReport:
    scene: str = ""
    config: str = ""
    pooled_accuracy: float = 0.0            # percent over all views
    per_view_accuracy: list = field(default_factory=list)
    ray_count: int = 0
    vertex_count: int = 0
    terminal_count: int = 0
    spatial_edge_count: int = 0
    angular_edge_count: int = 0
    reduction_factor: float = 0.0
    coherence: float = 0.0
    timings_ms: dict = field(default_factory=dict)
    accuracy_initial: float = 0.0
    accuracy_smoothed: float = 0.0

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, default=float)


def _auto_mapping(pred: np.ndarray, gt: np.ndarray) -> np.ndarray:
    """Greedy maximum-overlap assignment pred-label -> gt-label.

    Returns a lookup of length max(pred)+1; unmatched labels map to 0,
    which never scores.
    """
    kp, kg = int(pred.max()), int(gt.max())
    confusion = np.zeros((kp + 1, kg + 1), dtype=np.int64)
    np.add.at(confusion, (pred.ravel(), gt.ravel()), 1)
    confusion[0, :] = -1
    confusion[:, 0] = -1
    mapping = np.zeros(kp + 1, dtype=np.int64)
    used_p: set[int] = set()
    used_g: set[int] = set()
    for _ in range(min(kp, kg)):
        best = np.unravel_index(np.argmax(confusion), confusion.shape)
        if confusion[best] < 0:
            break
        p, g = int(best[0]), int(best[1])
        mapping[p] = g
        used_p.add(p)
        used_g.add(g)
        confusion[p, :] = -1
        confusion[:, g] = -1
    return mapping


def accuracy(pred: np.ndarray, gt: GroundTruth,
             label_mapping: str = "auto") -> tuple[float, np.ndarray]:
    """Percentage of correctly segmented pixels, pooled and per view.

    `pred` is a (U, V, H, W) label field; `auto` resolves the
    scribble-label <-> GT-label correspondence by maximum overlap.
    """
    if pred.shape != gt.labels.shape:
        raise LightFieldError(f"prediction {pred.shape} does not match "
                              f"ground truth {gt.labels.shape}")
    if label_mapping == "auto":
        mapping = _auto_mapping(pred, gt.labels)
        mapped = mapping[pred]
    else:
        mapped = pred
    correct = mapped == gt.labels
    per_view = correct.mean(axis=(2, 3)) * 100.0
    pooled = float(correct.mean() * 100.0)
    return pooled, per_view


def coherence(pred: np.ndarray, gt_disparity: np.ndarray,
              central: tuple[int, int]) -> float:
    """Fraction of central-view pixels whose label survives disparity
    reprojection into every other view (in bounds, not occluded)."""
    U, V, h, w = pred.shape
    u0, v0 = central
    base = pred[u0, v0]
    ygrid, xgrid = np.mgrid[0:h, 0:w]
    d = gt_disparity.astype(np.float64)
    order = np.lexsort((np.arange(h * w), d.ravel()))
    matched = 0
    counted = 0
    for u in range(U):
        for v in range(V):
            if (u, v) == (u0, v0):
                continue
            du, dv = u - u0, v - v0
            xt = np.rint(xgrid + d * du).astype(np.int64)
            yt = np.rint(ygrid + d * dv).astype(np.int64)
            inb = (xt >= 0) & (xt < w) & (yt >= 0) & (yt < h)
            # occlusion: at collisions the larger disparity owns the target
            flat_t = (yt * w + xt).ravel()
            owner = np.full(h * w, -1, dtype=np.int64)
            ordered = order[inb.ravel()[order]]
            np.put(owner, flat_t[ordered], ordered)
            visible = np.zeros(h * w, dtype=bool)
            vis_src = owner[owner >= 0]
            visible[vis_src] = True
            visible &= inb.ravel()
            src = np.nonzero(visible)[0]
            counted += len(src)
            matched += int((pred[u, v].ravel()[flat_t[src]] == base.ravel()[src]).sum())
    return matched / counted if counted else 1.0


def graph_stats(graph: LfspGraph, lf: LightField) -> dict:
    """Data-size reduction achieved by the LFSP graph."""
    rays = lf.ray_count
    vertices = graph.lfsp_count
    return {
        "ray_count": rays,
        "vertex_count": vertices,
        "terminal_count": graph.label_count,
        "spatial_edge_count": int(len(graph.spatial_edges)),
        "angular_edge_count": int(len(graph.angular_edges)),
        "reduction_factor": rays / vertices if vertices else 0.0,
    }


def ablation(lf: LightField, gt: GroundTruth, scribbles: ScribbleMap,
             disparity="estimate", params=None, m: int = 20,
             **segment_kwargs) -> tuple[float, float]:
    """Accuracy of the unsmoothed initial labeling vs the optimized one."""
    from .optimizer import segment
    result = segment(lf, scribbles, disparity=disparity, params=params, m=m,
                     **segment_kwargs)
    acc_init, _ = accuracy(result.initial.pixel_labels(result.seg), gt)
    acc_final, _ = accuracy(result.label_field.pixel_labels(result.seg), gt)
    return acc_init, acc_final


def render_table(rows: list[EvalReport]) -> str:
    """Plain-text accuracy table: scene x configuration."""
    configs = sorted({r.config for r in rows})
    scenes = []
    for r in rows:
        if r.scene not in scenes:
            scenes.append(r.scene)
    cells = {(r.scene, r.config): r.pooled_accuracy for r in rows}
    width = max([len(s) for s in scenes] + [9])
    out = ["Scene".ljust(width) + "".join(c.rjust(14) for c in configs)]
    out.append("-" * (width + 14 * len(configs)))
    for s in scenes:
        line = s.ljust(width)
        for c in configs:
            val = cells.get((s, c))
            line += (f"{val:14.2f}" if val is not None else " " * 14)
        out.append(line)
    if scenes:
        out.append("-" * (width + 14 * len(configs)))
        line = "Average".ljust(width)
        for c in configs:
            vals = [cells[(s, c)] for s in scenes if (s, c) in cells]
            line += (f"{np.mean(vals):14.2f}" if vals else " " * 14)
        out.append(line)
    return "\n".join(out)
