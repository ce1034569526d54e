"""Light-field superpixels: 4D ray bundles spanning all views.

A light-field superpixel (LFSP) assigns every ray of the light field to
one cluster whose per-view slices track the same scene region. Stage 1
clusters the central view (SLIC-style k-means on color, position and
disparity); stage 2 carries the assignment into every other view along
the disparity shear, with nearer pixels winning collisions and
disoccluded pixels filled from adjacent clusters.

The clustering backend is deliberately a small, documented extension
point: anything that produces a view-coherent one-vertex-per-region
assignment can replace it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage
from skimage.measure import label as _connected_components

from .disparity import DisparityMap
from .lightfield import LightField, LightFieldError


@dataclass(frozen=True)
class LfspSegmentation:
    """Ray -> LFSP id for every view; ids are dense in [0, lfsp_count)."""

    assignment: np.ndarray      # (U, V, H, W) int32
    lfsp_count: int
    target_size: int            # nominal LFSP edge length M, pixels
    central: tuple[int, int]

    def central_assignment(self) -> np.ndarray:
        u0, v0 = self.central
        return self.assignment[u0, v0]


@dataclass(frozen=True)
class LfspFeatures:
    """Per-view slice statistics for every LFSP (arithmetic means).

    Empty slices keep pixel_count 0 and NaN means; consumers must skip
    them. Aggregates are pixel-count-weighted means over views; the
    aggregate disparity equals the central-view mean disparity (the
    shear model gives every slice of an LFSP the same disparity).
    """

    mean_color: np.ndarray      # (n, U, V, 3) float64 CIELab
    mean_position: np.ndarray   # (n, U, V, 2) float64, (x, y)
    pixel_count: np.ndarray     # (n, U, V) int64
    mean_disparity: np.ndarray  # (n,) float64, central view
    agg_color: np.ndarray       # (n, 3)
    agg_position: np.ndarray    # (n, 2)
    agg_disparity: np.ndarray   # (n,)
    central: tuple[int, int]

    @property
    def count(self) -> int:
        return self.mean_color.shape[0]

    def central_color(self) -> np.ndarray:
        """Central-view mean colors with aggregate fallback for empty slices."""
        u0, v0 = self.central
        c = self.mean_color[:, u0, v0].copy()
        empty = self.pixel_count[:, u0, v0] == 0
        c[empty] = self.agg_color[empty]
        return c

    def central_position(self) -> np.ndarray:
        u0, v0 = self.central
        p = self.mean_position[:, u0, v0].copy()
        empty = self.pixel_count[:, u0, v0] == 0
        p[empty] = self.agg_position[empty]
        return p

    def central_disparity(self) -> np.ndarray:
        d = self.mean_disparity.copy()
        empty = ~np.isfinite(d)
        d[empty] = self.agg_disparity[empty]
        return d


@dataclass(frozen=True)
class ScribbleMap:
    """Central-view user strokes: 0 = unlabeled, k >= 1 = label k."""

    labels: np.ndarray          # (H, W) int32
    label_count: int

    def __post_init__(self):
        if self.labels.min() < 0 or self.labels.max() > self.label_count:
            raise LightFieldError("scribble labels outside [0, label_count]")
        present = np.unique(self.labels)
        for k in range(1, self.label_count + 1):
            if k not in present:
                raise LightFieldError(f"scribble label {k} has no pixels")

    @classmethod
    def from_array(cls, labels: np.ndarray) -> "ScribbleMap":
        labels = np.asarray(labels, dtype=np.int32)
        return cls(labels=labels, label_count=int(labels.max()))


@dataclass(frozen=True)
class SeedSet:
    """LFSP id -> user label for the scribbled (terminal) LFSPs."""

    labels: dict[int, int]
    label_count: int


# ---------------------------------------------------------------------------
# Stage 1: central-view SLIC with a disparity term


def _color_gradient(lab: np.ndarray) -> np.ndarray:
    gy, gx = np.gradient(lab, axis=(0, 1))
    return (gx ** 2 + gy ** 2).sum(axis=-1)


def _seed_grid(lab: np.ndarray, m: int) -> np.ndarray:
    """Seed centers on an M-grid, each nudged to the lowest-gradient pixel
    in its 3x3 neighborhood (only on strict improvement, so flat images
    keep the exact grid)."""
    h, w = lab.shape[:2]
    grad = _color_gradient(lab)
    seeds = []
    for y in range(m // 2, h, m):
        for x in range(m // 2, w, m):
            best = (grad[y, x], x, y)
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    ny, nx = y + dy, x + dx
                    if 0 <= ny < h and 0 <= nx < w and grad[ny, nx] < best[0]:
                        best = (grad[ny, nx], nx, ny)
            seeds.append((best[1], best[2]))
    return np.array(seeds, dtype=np.float64)


def _slic_distance(lab_win: np.ndarray, xw: np.ndarray, yw: np.ndarray,
                   conf_win: np.ndarray | None, d_win: np.ndarray | None,
                   center: np.ndarray, m: int, compactness: float,
                   disparity_weight: float) -> np.ndarray:
    """Clustering distance: ||dLab||2 + compactness*||d(x,y)||2/M
    + disparity_weight*confidence*|dd|."""
    dc = np.sqrt(((lab_win - center[2:5]) ** 2).sum(axis=-1))
    ds = np.sqrt((xw - center[0]) ** 2 + (yw - center[1]) ** 2)
    dist = dc + compactness * ds / m
    if d_win is not None:
        dist = dist + disparity_weight * conf_win * np.abs(d_win - center[5])
    return dist


def _slic_central(lab: np.ndarray, disp: DisparityMap | None, m: int,
                  compactness: float, disparity_weight: float,
                  max_iters: int = 10) -> np.ndarray:
    h, w = lab.shape[:2]
    lab = lab.astype(np.float64)
    xy = _seed_grid(lab, m)
    n = len(xy)
    centers = np.zeros((n, 6))
    centers[:, :2] = xy
    ix = xy.astype(int)
    centers[:, 2:5] = lab[ix[:, 1], ix[:, 0]]
    d_img = conf_img = None
    if disp is not None:
        d_img = disp.values.astype(np.float64)
        conf_img = disp.confidence.astype(np.float64)
        centers[:, 5] = d_img[ix[:, 1], ix[:, 0]]

    assign = np.full((h, w), -1, dtype=np.int32)
    for _ in range(max_iters):
        best = np.full((h, w), np.inf)
        assign.fill(-1)
        for k in range(n):
            cx, cy = centers[k, 0], centers[k, 1]
            x0, x1 = max(int(cx) - m, 0), min(int(cx) + m + 1, w)
            y0, y1 = max(int(cy) - m, 0), min(int(cy) + m + 1, h)
            if x0 >= x1 or y0 >= y1:
                continue
            yw, xw = np.mgrid[y0:y1, x0:x1]
            dist = _slic_distance(
                lab[y0:y1, x0:x1], xw, yw,
                conf_img[y0:y1, x0:x1] if conf_img is not None else None,
                d_img[y0:y1, x0:x1] if d_img is not None else None,
                centers[k], m, compactness, disparity_weight)
            win = dist < best[y0:y1, x0:x1]
            assign[y0:y1, x0:x1][win] = k
            best[y0:y1, x0:x1][win] = dist[win]

        # orphan pixels outside every window (possible after large center
        # drift): nearest center by position
        if (assign == -1).any():
            uy, ux = np.nonzero(assign == -1)
            d2 = (ux[:, None] - centers[None, :, 0]) ** 2 + (uy[:, None] - centers[None, :, 1]) ** 2
            assign[uy, ux] = np.argmin(d2, axis=1)

        flat = assign.ravel()
        counts = np.bincount(flat, minlength=n).astype(np.float64)
        ok = counts > 0
        ygrid, xgrid = np.mgrid[0:h, 0:w]
        new_centers = centers.copy()
        new_centers[ok, 0] = np.bincount(flat, weights=xgrid.ravel(), minlength=n)[ok] / counts[ok]
        new_centers[ok, 1] = np.bincount(flat, weights=ygrid.ravel(), minlength=n)[ok] / counts[ok]
        for c in range(3):
            new_centers[ok, 2 + c] = np.bincount(flat, weights=lab[..., c].ravel(), minlength=n)[ok] / counts[ok]
        if d_img is not None:
            new_centers[ok, 5] = np.bincount(flat, weights=d_img.ravel(), minlength=n)[ok] / counts[ok]
        motion = np.sqrt(((new_centers[:, :2] - centers[:, :2]) ** 2).sum(axis=1)).max()
        centers = new_centers
        if motion < 0.5:
            break
    return assign


def _enforce_connectivity(assign: np.ndarray) -> np.ndarray:
    """Keep each cluster's largest 4-connected component; absorb the rest
    into an adjacent kept cluster (majority of adjacent kept pixels)."""
    comp = _connected_components(assign, connectivity=1)
    ncomp = comp.max()
    sizes = np.bincount(comp.ravel(), minlength=ncomp + 1)
    first = np.full(ncomp + 1, -1, dtype=np.int64)
    flat_comp = comp.ravel()
    uniq, idx = np.unique(flat_comp, return_index=True)
    first[uniq] = idx
    comp_cluster = assign.ravel()[first[1:]]    # comp id c -> cluster, c >= 1

    keep = np.zeros(ncomp + 1, dtype=bool)
    by_cluster: dict[int, int] = {}
    for c in range(1, ncomp + 1):
        k = int(comp_cluster[c - 1])
        cur = by_cluster.get(k)
        if cur is None or sizes[c] > sizes[cur]:
            by_cluster[k] = c
    for c in by_cluster.values():
        keep[c] = True

    assign = assign.copy()
    kept_mask = keep[comp]
    orphans = sorted(c for c in range(1, ncomp + 1) if not keep[c])
    pending = list(orphans)
    while pending:
        progressed = False
        remaining = []
        for c in pending:
            mask = comp == c
            ring = ndimage.binary_dilation(mask) & ~mask & kept_mask
            if not ring.any():
                remaining.append(c)
                continue
            votes = np.bincount(assign[ring])
            assign[mask] = int(np.argmax(votes))
            kept_mask |= mask
            progressed = True
        if not progressed:
            # isolated group of orphans (no kept neighbor anywhere): keep as-is
            break
        pending = remaining

    # compact ids over surviving clusters, preserving order
    uniq = np.unique(assign)
    remap = np.full(assign.max() + 1, -1, dtype=np.int32)
    remap[uniq] = np.arange(len(uniq), dtype=np.int32)
    return remap[assign]


# ---------------------------------------------------------------------------
# Stage 2: shear propagation into the other views


def _cluster_stats(assign: np.ndarray, lab: np.ndarray, disp: DisparityMap | None,
                   n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cluster mean color, position and disparity on the central view."""
    h, w = assign.shape
    flat = assign.ravel()
    counts = np.bincount(flat, minlength=n).astype(np.float64)
    counts[counts == 0] = 1.0
    color = np.stack([np.bincount(flat, weights=lab[..., c].ravel().astype(np.float64),
                                  minlength=n) / counts for c in range(3)], axis=-1)
    ygrid, xgrid = np.mgrid[0:h, 0:w]
    pos = np.stack([np.bincount(flat, weights=xgrid.ravel(), minlength=n) / counts,
                    np.bincount(flat, weights=ygrid.ravel(), minlength=n) / counts], axis=-1)
    if disp is not None:
        d = np.bincount(flat, weights=disp.values.ravel().astype(np.float64), minlength=n) / counts
    else:
        d = np.zeros(n)
    return color, pos, d


def _project_view(assign0: np.ndarray, d_img: np.ndarray, du: int, dv: int) -> np.ndarray:
    """Forward-project the central assignment by the disparity shear;
    larger disparity wins collisions (ties: later raster pixel)."""
    h, w = assign0.shape
    ygrid, xgrid = np.mgrid[0:h, 0:w]
    xt = np.rint(xgrid + d_img * du).astype(np.int64).ravel()
    yt = np.rint(ygrid + d_img * dv).astype(np.int64).ravel()
    inb = (xt >= 0) & (xt < w) & (yt >= 0) & (yt < h)
    order = np.lexsort((np.arange(h * w), d_img.ravel()))   # disparity asc, raster tiebreak
    order = order[inb[order]]
    out = np.full(h * w, -1, dtype=np.int32)
    np.put(out, yt[order] * w + xt[order], assign0.ravel()[order])
    return out.reshape(h, w)


def _fill_unassigned(assign: np.ndarray, lab_view: np.ndarray, colors: np.ndarray,
                     pos_view: np.ndarray, m: int, compactness: float) -> np.ndarray:
    """Fill disoccluded pixels: every pixel of an unassigned component
    chooses among the clusters adjacent to that component, minimizing
    the stage-1 distance (color + position; disparity is
    central-view-only). Candidates spread breadth-first from the whole
    component boundary so a revealed region can reach the cluster that
    actually matches it, not just the nearest side."""
    un = assign == -1
    if not un.any():
        return assign
    h, w = assign.shape
    lab_view = lab_view.astype(np.float64)
    comp = _connected_components(un.astype(np.int8), connectivity=1)
    boxes = ndimage.find_objects(comp)
    for c, box in enumerate(boxes, start=1):
        if box is None:
            continue
        sy, sx = box
        sy = slice(max(sy.start - 1, 0), min(sy.stop + 1, h))
        sx = slice(max(sx.start - 1, 0), min(sx.stop + 1, w))
        local_mask = comp[sy, sx] == c
        local_assign = assign[sy, sx]
        ring = ndimage.binary_dilation(local_mask) & ~local_mask
        cands = np.unique(local_assign[ring & (local_assign >= 0)])
        if len(cands) == 0:
            assign[sy, sx][local_mask] = 0      # no assigned pixel anywhere
            continue
        ys, xs = np.nonzero(local_mask)
        gys, gxs = ys + sy.start, xs + sx.start
        dc = np.sqrt(((lab_view[gys, gxs][:, None, :] - colors[cands][None, :, :]) ** 2).sum(-1))
        ds = np.sqrt((gxs[:, None] - pos_view[cands, 0][None, :]) ** 2
                     + (gys[:, None] - pos_view[cands, 1][None, :]) ** 2)
        dist = dc + compactness * ds / m
        assign[gys, gxs] = cands[np.argmin(dist, axis=1)]
    return assign


def compute_lfsp(lf: LightField, disp: DisparityMap, m: int = 20,
                 compactness: float = 10.0, disparity_weight: float = 10.0,
                 ) -> LfspSegmentation:
    """Partition the light field into LFSPs.

    Stage 1 clusters the central view; stage 2 shears the assignment
    into every other view using the central disparity map. Deterministic
    for fixed inputs.
    """
    if m < 4:
        raise LightFieldError(f"LFSP size M={m} too small (need M >= 4)")
    if disp.values.shape != (lf.height, lf.width):
        raise LightFieldError("disparity map does not match the light field")
    u0, v0 = lf.central
    lab0 = lf.central_lab()
    assign0 = _slic_central(lab0, disp, m, compactness, disparity_weight)
    assign0 = _enforce_connectivity(assign0)
    n = int(assign0.max()) + 1

    colors, pos, cluster_d = _cluster_stats(assign0, lab0, disp, n)
    d_img = disp.values.astype(np.float64)

    out = np.empty((lf.u_count, lf.v_count, lf.height, lf.width), dtype=np.int32)
    out[u0, v0] = assign0
    for u in range(lf.u_count):
        for v in range(lf.v_count):
            if (u, v) == (u0, v0):
                continue
            du, dv = u - u0, v - v0
            proj = _project_view(assign0, d_img, du, dv)
            pos_view = pos + cluster_d[:, None] * np.array([du, dv], dtype=np.float64)
            out[u, v] = _fill_unassigned(proj, lf.lab[u, v], colors, pos_view,
                                         m, compactness)
    return LfspSegmentation(assignment=out, lfsp_count=n, target_size=m,
                            central=(u0, v0))


# ---------------------------------------------------------------------------
# Features (per-view arithmetic means)


def init_features(lf: LightField, disp: DisparityMap, seg: LfspSegmentation,
                  ) -> LfspFeatures:
    """Per-view mean color/position/count, central mean disparity, and
    pixel-count-weighted aggregates for every LFSP."""
    if seg.assignment.shape != (lf.u_count, lf.v_count, lf.height, lf.width):
        raise LightFieldError("segmentation does not match the light field")
    n = seg.lfsp_count
    U, V, h, w = seg.assignment.shape
    mean_color = np.full((n, U, V, 3), np.nan)
    mean_position = np.full((n, U, V, 2), np.nan)
    pixel_count = np.zeros((n, U, V), dtype=np.int64)
    ygrid, xgrid = np.mgrid[0:h, 0:w]
    xflat, yflat = xgrid.ravel().astype(np.float64), ygrid.ravel().astype(np.float64)

    for u in range(U):
        for v in range(V):
            flat = seg.assignment[u, v].ravel()
            counts = np.bincount(flat, minlength=n)
            pixel_count[:, u, v] = counts
            ok = counts > 0
            denom = counts[ok].astype(np.float64)
            lab = lf.lab[u, v].astype(np.float64)
            for c in range(3):
                mean_color[ok, u, v, c] = np.bincount(
                    flat, weights=lab[..., c].ravel(), minlength=n)[ok] / denom
            mean_position[ok, u, v, 0] = np.bincount(flat, weights=xflat, minlength=n)[ok] / denom
            mean_position[ok, u, v, 1] = np.bincount(flat, weights=yflat, minlength=n)[ok] / denom

    u0, v0 = seg.central
    flat0 = seg.assignment[u0, v0].ravel()
    counts0 = np.bincount(flat0, minlength=n)
    mean_disparity = np.full(n, np.nan)
    ok0 = counts0 > 0
    mean_disparity[ok0] = np.bincount(
        flat0, weights=disp.values.ravel().astype(np.float64), minlength=n)[ok0] / counts0[ok0]

    # aggregates: weighted means of per-view means, views in raster order
    agg_color = np.zeros((n, 3))
    agg_position = np.zeros((n, 2))
    total = np.zeros(n)
    for u in range(U):
        for v in range(V):
            cnt = pixel_count[:, u, v].astype(np.float64)
            ok = cnt > 0
            agg_color[ok] += cnt[ok, None] * mean_color[ok, u, v]
            agg_position[ok] += cnt[ok, None] * mean_position[ok, u, v]
            total[ok] += cnt[ok]
    total[total == 0] = 1.0
    agg_color /= total[:, None]
    agg_position /= total[:, None]
    agg_disparity = np.where(np.isfinite(mean_disparity), mean_disparity, 0.0)

    return LfspFeatures(mean_color=mean_color, mean_position=mean_position,
                        pixel_count=pixel_count, mean_disparity=mean_disparity,
                        agg_color=agg_color, agg_position=agg_position,
                        agg_disparity=agg_disparity, central=(u0, v0))


# ---------------------------------------------------------------------------
# Scribbles


def propagate_scribbles(seg: LfspSegmentation, scribbles: ScribbleMap) -> SeedSet:
    """Label every LFSP whose central slice is scribbled (majority vote,
    ties to the smaller label id)."""
    central = seg.central_assignment()
    if scribbles.labels.shape != central.shape:
        raise LightFieldError("scribble map does not match the central view")
    L = scribbles.label_count
    marked = scribbles.labels > 0
    ids = central[marked]
    labs = scribbles.labels[marked]
    table = np.bincount(ids * (L + 1) + labs,
                        minlength=seg.lfsp_count * (L + 1)).reshape(seg.lfsp_count, L + 1)
    seeds: dict[int, int] = {}
    for i in np.nonzero(table[:, 1:].sum(axis=1))[0]:
        seeds[int(i)] = int(np.argmax(table[i, 1:]) + 1)
    seeded = set(seeds.values())
    for k in range(1, L + 1):
        if k not in seeded:
            raise LightFieldError(f"scribble label {k} seeds no LFSP")
    return SeedSet(labels=seeds, label_count=L)


def rasterize_strokes(strokes: list[dict], height: int, width: int) -> np.ndarray:
    """Rasterize polyline strokes with round caps onto a label map.

    Each stroke is {"label": int, "radius": float, "points": [[x, y], ...]};
    a pixel is covered when its center lies within `radius` of the
    polyline. Later strokes overwrite earlier ones.
    """
    canvas = np.zeros((height, width), dtype=np.int32)
    for stroke in strokes:
        label = int(stroke["label"])
        radius = float(stroke.get("radius", 1.0))
        pts = [(float(p[0]), float(p[1])) for p in stroke["points"]]
        if not pts:
            continue
        segments = list(zip(pts, pts[1:])) or [(pts[0], pts[0])]
        for (x0, y0), (x1, y1) in segments:
            lo_x = max(int(np.floor(min(x0, x1) - radius)) - 1, 0)
            hi_x = min(int(np.ceil(max(x0, x1) + radius)) + 2, width)
            lo_y = max(int(np.floor(min(y0, y1) - radius)) - 1, 0)
            hi_y = min(int(np.ceil(max(y0, y1) + radius)) + 2, height)
            if lo_x >= hi_x or lo_y >= hi_y:
                continue
            yw, xw = np.mgrid[lo_y:hi_y, lo_x:hi_x]
            vx, vy = x1 - x0, y1 - y0
            seg_len2 = vx * vx + vy * vy
            if seg_len2 == 0:
                dist2 = (xw - x0) ** 2 + (yw - y0) ** 2
            else:
                t = np.clip(((xw - x0) * vx + (yw - y0) * vy) / seg_len2, 0.0, 1.0)
                dist2 = (xw - (x0 + t * vx)) ** 2 + (yw - (y0 + t * vy)) ** 2
            canvas[lo_y:hi_y, lo_x:hi_x][dist2 <= radius * radius] = label
    return canvas


def load_scribbles(path, height: int, width: int) -> ScribbleMap:
    """Load scribbles from an 8-bit label PNG or a stroke-list JSON."""
    path = Path(path)
    if path.suffix == ".json":
        data = json.loads(path.read_text())
        strokes = data["strokes"] if isinstance(data, dict) else data
        labels = rasterize_strokes(strokes, height, width)
    else:
        labels = np.asarray(Image.open(path)).astype(np.int32)
        if labels.ndim != 2:
            raise LightFieldError(f"{path}: scribble image must be single-channel")
    if labels.shape != (height, width):
        raise LightFieldError(f"{path}: scribbles {labels.shape} do not match view "
                              f"{height}x{width}")
    return ScribbleMap.from_array(labels)


# ---------------------------------------------------------------------------
# LFSP container I/O


def save_lfsp(seg: LfspSegmentation, directory, params: dict | None = None) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    U, V = seg.assignment.shape[:2]
    if seg.lfsp_count > 65535:
        raise LightFieldError("too many LFSPs for 16-bit export")
    for u in range(U):
        for v in range(V):
            Image.fromarray(seg.assignment[u, v].astype(np.uint16)).save(
                directory / f"lfsp_{u}_{v}.png")
    meta = {"count": seg.lfsp_count, "m": seg.target_size,
            "central_u": seg.central[0], "central_v": seg.central[1],
            "u_count": U, "v_count": V, "parameters": params or {}}
    (directory / "lfsp.json").write_text(json.dumps(meta, indent=2) + "\n")


def load_lfsp(directory) -> LfspSegmentation:
    directory = Path(directory)
    meta = json.loads((directory / "lfsp.json").read_text())
    U, V = int(meta["u_count"]), int(meta["v_count"])
    views = []
    for u in range(U):
        row = []
        for v in range(V):
            row.append(np.asarray(Image.open(directory / f"lfsp_{u}_{v}.png")).astype(np.int32))
        views.append(row)
    assignment = np.stack([np.stack(r) for r in views])
    return LfspSegmentation(assignment=assignment, lfsp_count=int(meta["count"]),
                            target_size=int(meta["m"]),
                            central=(int(meta["central_u"]), int(meta["central_v"])))
