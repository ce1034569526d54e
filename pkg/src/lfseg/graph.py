"""The LFSP graph: one vertex per superpixel, spatial + angular edges.

Two LFSPs are spatial neighbors when their central-view slice centers
lie within sqrt(2)*M of each other (center distance, not border
contact, since slice shapes are irregular). They are *indirect angular*
neighbors when that same test passes in at least one non-central view
but not in the central view: parallax reveals genuinely new adjacencies
there, and counting an already-spatial pair again would double its
smoothing influence. Slices of one LFSP across views need no edges at
all; a single vertex already forces them to share a label.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lightfield import LightField, LightFieldError, Ray
from .superpixels import LfspFeatures, LfspSegmentation, SeedSet


@dataclass
class LfspGraph:
    """Vertices = LFSP ids plus one terminal per user label.

    Edge arrays hold unordered, deduplicated (i, j) pairs with i < j;
    spatial and angular sets are disjoint by construction. Weights are
    filled by the energy module after construction.
    """

    lfsp_count: int
    label_count: int
    seeds: dict[int, int]
    spatial_edges: np.ndarray                   # (Es, 2) int32
    angular_edges: np.ndarray                   # (Ea, 2) int32
    angular_witness: list[list[tuple[int, int]]] = field(default_factory=list)
    spatial_weights: np.ndarray | None = None
    angular_weights: np.ndarray | None = None

    @property
    def vertex_count(self) -> int:
        return self.lfsp_count + self.label_count

    @property
    def edge_count(self) -> int:
        return len(self.spatial_edges) + len(self.angular_edges)


def pixel_neighbors(lf: LightField, ray: Ray, d: float) -> dict[str, list[Ray]]:
    """Spatial (8-connected in-view) and angular (8 adjacent views,
    disparity-sheared, nearest-integer) neighborhoods of one ray.
    Out-of-bounds neighbors are omitted."""
    if not lf.in_bounds(ray):
        raise LightFieldError(f"ray {ray} out of bounds")
    spatial = []
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dx == 0 and dy == 0:
                continue
            q = Ray(ray.u, ray.v, ray.x + dx, ray.y + dy)
            if lf.in_bounds(q):
                spatial.append(q)
    angular = []
    for du in (-1, 0, 1):
        for dv in (-1, 0, 1):
            if du == 0 and dv == 0:
                continue
            q = Ray(ray.u + du, ray.v + dv,
                    int(round(ray.x + d * du)), int(round(ray.y + d * dv)))
            if lf.in_bounds(q):
                angular.append(q)
    return {"spatial": spatial, "angular": angular}


def _adjacent_in_view(features: LfspFeatures, u: int, v: int, m: int) -> set[tuple[int, int]]:
    """Center-distance adjacency on one view's slices via a grid hash.

    Cell size is ceil(sqrt(2)*M) so a 3x3 cell neighborhood provably
    covers the sqrt(2)*M threshold.
    """
    counts = features.pixel_count[:, u, v]
    ids = np.nonzero(counts > 0)[0]
    if len(ids) < 2:
        return set()
    pos = features.mean_position[ids, u, v]
    cell = math.ceil(math.sqrt(2.0) * m)
    threshold = math.sqrt(2.0) * m
    grid: dict[tuple[int, int], list[int]] = {}
    cx = np.floor(pos[:, 0] / cell).astype(int)
    cy = np.floor(pos[:, 1] / cell).astype(int)
    for idx in range(len(ids)):
        grid.setdefault((cx[idx], cy[idx]), []).append(idx)
    edges: set[tuple[int, int]] = set()
    for idx in range(len(ids)):
        for gx in (cx[idx] - 1, cx[idx], cx[idx] + 1):
            for gy in (cy[idx] - 1, cy[idx], cy[idx] + 1):
                for jdx in grid.get((gx, gy), ()):
                    if jdx <= idx:
                        continue
                    dx = pos[idx, 0] - pos[jdx, 0]
                    dy = pos[idx, 1] - pos[jdx, 1]
                    if math.hypot(dx, dy) <= threshold:
                        a, b = int(ids[idx]), int(ids[jdx])
                        edges.add((a, b) if a < b else (b, a))
    return edges


def spatial_adjacency(seg: LfspSegmentation | None, features: LfspFeatures,
                      m: int) -> set[tuple[int, int]]:
    """Central-view LFSP adjacency: slice centers within sqrt(2)*M (inclusive)."""
    u0, v0 = features.central
    return _adjacent_in_view(features, u0, v0, m)


def angular_adjacency(seg: LfspSegmentation | None, features: LfspFeatures, m: int,
                      spatial_edges: set[tuple[int, int]],
                      ) -> tuple[set[tuple[int, int]], dict[tuple[int, int], list[tuple[int, int]]]]:
    """Pairs passing the center test in some non-central view and not
    already spatial neighbors ("new angle neighbors" only). Also returns
    the witnessing views per edge."""
    u0, v0 = features.central
    U, V = features.pixel_count.shape[1:]
    witness: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for u in range(U):
        for v in range(V):
            if (u, v) == (u0, v0):
                continue
            for pair in _adjacent_in_view(features, u, v, m):
                if pair in spatial_edges:
                    continue
                witness.setdefault(pair, []).append((u, v))
    return set(witness.keys()), witness


def build_graph(seg: LfspSegmentation, features: LfspFeatures, seeds: SeedSet,
                m: int | None = None) -> LfspGraph:
    """Assemble the full LFSP graph: vertices, terminals, both edge sets."""
    if seeds.label_count < 2:
        raise LightFieldError("nothing to segment: need at least 2 labels")
    if m is None:
        m = seg.target_size
    spa = spatial_adjacency(seg, features, m)
    ang, witness = angular_adjacency(seg, features, m, spa)
    spa_sorted = sorted(spa)
    ang_sorted = sorted(ang)
    return LfspGraph(
        lfsp_count=seg.lfsp_count,
        label_count=seeds.label_count,
        seeds=dict(seeds.labels),
        spatial_edges=np.array(spa_sorted, dtype=np.int32).reshape(-1, 2),
        angular_edges=np.array(ang_sorted, dtype=np.int32).reshape(-1, 2),
        angular_witness=[witness[e] for e in ang_sorted],
    )


def dump_graph(graph: LfspGraph, path) -> None:
    """Line-oriented debug dump: `v <id> [seed <label>]` then
    `e <i> <j> spatial|angular <weight>`."""
    lines = []
    for i in range(graph.lfsp_count):
        if i in graph.seeds:
            lines.append(f"v {i} seed {graph.seeds[i]}")
        else:
            lines.append(f"v {i}")
    for kind, edges, weights in (("spatial", graph.spatial_edges, graph.spatial_weights),
                                 ("angular", graph.angular_edges, graph.angular_weights)):
        for e in range(len(edges)):
            w = 1.0 if weights is None else float(weights[e])
            lines.append(f"e {edges[e, 0]} {edges[e, 1]} {kind} {w:.12g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
