"""Alpha-expansion over min-cut, and the end-to-end segmentation pipeline.

Each expansion move lets every LFSP either keep its label or switch to
the move's label alpha; the optimal such move is a two-terminal min cut
(source side = take alpha). Seeds are wired structurally to their side,
never through arithmetic sentinels. Moves cycle through labels in
ascending order until a full cycle brings no energy decrease.

`segment` drives the whole pipeline: disparity -> LFSPs -> features ->
seeds -> graph -> unary -> weights -> minimize, with per-stage wall
times and stage-tagged errors. A PipelineCache carries everything that
does not depend on scribbles, so interactive re-runs only repeat the
seed/unary/weight/minimize stages.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .disparity import DisparityMap, estimate_disparity, load_disparity
from .energy import EnergyParams, UnaryCosts, compute_unary, fill_edge_weights, total_energy
from .graph import LfspGraph, build_graph
from .lightfield import LightField, LightFieldError
from .maxflow import FlowNetwork, max_flow
from .superpixels import (LfspFeatures, LfspSegmentation, ScribbleMap, SeedSet,
                          compute_lfsp, init_features, propagate_scribbles)


@dataclass(frozen=True)
class LabelField:
    """One label per LFSP; per-pixel maps are pure lookups through the
    segmentation, so every ray of an LFSP shares its label in all views."""

    labels: np.ndarray          # (n,) int32 in [1, label_count]
    label_count: int

    def pixel_labels(self, seg: LfspSegmentation) -> np.ndarray:
        return self.labels[seg.assignment]

    def central_pixel_labels(self, seg: LfspSegmentation) -> np.ndarray:
        return self.labels[seg.central_assignment()]


class PipelineError(RuntimeError):
    """Stage-tagged pipeline failure."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage


def expansion_move(current: LabelField, alpha: int, unary: UnaryCosts,
                   graph: LfspGraph, params: EnergyParams) -> LabelField:
    """One alpha-expansion move; returns a labeling with energy <= current's.

    The move is kept only on strict energy decrease, so ties leave the
    labeling untouched (deterministic outputs).
    """
    labels = current.labels
    n = len(labels)
    seeds = unary.seeds

    movable = np.array([i for i in range(n) if labels[i] != alpha and i not in seeds],
                       dtype=np.int64)
    if len(movable) == 0:
        return current
    node_of = np.full(n, -1, dtype=np.int64)
    node_of[movable] = 2 + np.arange(len(movable))
    net = FlowNetwork(node_count=2 + len(movable), source=0, sink=1)

    # t-links: cut source->i when i keeps (sink side), i->sink when i takes alpha
    cost_keep = unary.costs[movable, labels[movable] - 1].copy()
    cost_alpha = unary.costs[movable, alpha - 1].copy()

    pair_arcs = []      # (i_node, j_node, w) for same-current-label pairs
    aux_arcs = []       # (i_node, j_node, w) needing an auxiliary node
    for lam, edges, weights in ((params.lambda_s, graph.spatial_edges, graph.spatial_weights),
                                (params.lambda_a, graph.angular_edges, graph.angular_weights)):
        for e in range(len(edges)):
            i, j = int(edges[e, 0]), int(edges[e, 1])
            w = lam * float(weights[e])
            if w <= 0:
                continue
            ni, nj = node_of[i], node_of[j]
            li, lj = labels[i], labels[j]
            if ni < 0 and nj < 0:
                continue                       # both fixed: constant
            if ni >= 0 and nj >= 0:
                if li == lj:
                    pair_arcs.append((ni, nj, w))
                else:
                    aux_arcs.append((ni, nj, w))
                continue
            # one endpoint fixed
            if ni < 0:
                ni, nj = nj, ni
                i, j = j, i
                li, lj = lj, li
            fixed_label = lj                             # j's label never changes
            if fixed_label == alpha:
                cost_keep[ni - 2] += w                   # V(l_i, alpha), l_i != alpha
            else:
                cost_alpha[ni - 2] += w                  # V(alpha, s), s != alpha
                if li != fixed_label:
                    cost_keep[ni - 2] += w               # V(l_i, s)

    for idx in range(len(movable)):
        net.add_arc(0, 2 + idx, float(cost_keep[idx]))
        net.add_arc(2 + idx, 1, float(cost_alpha[idx]))
    for ni, nj, w in pair_arcs:
        net.add_edge(int(ni), int(nj), w)
    for ni, nj, w in aux_arcs:
        a = net.add_node()
        net.add_arc(0, a, w)
        net.add_edge(a, int(ni), w)
        net.add_edge(a, int(nj), w)

    _, member = max_flow(net)
    new_labels = labels.copy()
    take = member[node_of[movable]]
    new_labels[movable[take]] = alpha

    e_old = total_energy(labels, unary, graph, params)
    e_new = total_energy(new_labels, unary, graph, params)
    if e_new < e_old:
        return LabelField(labels=new_labels, label_count=current.label_count)
    return current


def minimize(unary: UnaryCosts, graph: LfspGraph, params: EnergyParams,
             initial: LabelField | None = None, max_cycles: int = 10,
             tolerance: float = 1e-9) -> tuple[LabelField, list[dict]]:
    """Cycle expansion moves (labels ascending) to a local minimum.

    Returns the labeling and a per-move energy trace whose first entry
    is the initial energy.
    """
    if initial is None:
        initial = LabelField(labels=unary.argmin_labels(), label_count=unary.label_count)
    current = initial
    energy = total_energy(current.labels, unary, graph, params)
    trace = [{"move": 0, "alpha": None, "energy": energy}]
    if unary.label_count < 2:
        return current, trace
    move = 0
    for _ in range(max_cycles):
        cycle_start = energy
        for alpha in range(1, unary.label_count + 1):
            move += 1
            current = expansion_move(current, alpha, unary, graph, params)
            energy = total_energy(current.labels, unary, graph, params)
            trace.append({"move": move, "alpha": alpha, "energy": energy})
        if cycle_start - energy <= tolerance:
            break
    return current, trace


# ---------------------------------------------------------------------------
# Pipeline


@dataclass
class PipelineCache:
    """Scribble-independent artifacts for warm interactive re-runs."""

    disparity: DisparityMap
    estimated: bool
    seg: LfspSegmentation
    features: LfspFeatures
    adjacency: tuple
    m: int


@dataclass
class SegmentationResult:
    label_field: LabelField
    initial: LabelField
    disparity: DisparityMap
    seg: LfspSegmentation
    features: LfspFeatures
    graph: LfspGraph
    unary: UnaryCosts
    params: EnergyParams
    trace: list[dict]
    timings: dict[str, float]
    cache: PipelineCache


def _stage(timings: dict, name: str, fn):
    t0 = time.perf_counter()
    try:
        out = fn()
    except Exception as exc:
        raise PipelineError(name, exc) from exc
    timings[name + "_ms"] = (time.perf_counter() - t0) * 1000.0
    return out


def precompute(lf: LightField, disparity="estimate", m: int = 20,
               compactness: float = 10.0, disparity_weight: float = 10.0,
               timings: dict | None = None) -> PipelineCache:
    """Run every scribble-independent pipeline stage once.

    `disparity` is "estimate", a PFM path, or a DisparityMap (trusted).
    """
    timings = timings if timings is not None else {}
    if isinstance(disparity, DisparityMap):
        disp, estimated = disparity, False
    elif disparity == "estimate":
        disp = _stage(timings, "disparity", lambda: estimate_disparity(lf))
        estimated = True
    else:
        disp = _stage(timings, "disparity", lambda: load_disparity(disparity, lf))
        estimated = False
    seg_ = _stage(timings, "superpixels",
                  lambda: compute_lfsp(lf, disp, m=m, compactness=compactness,
                                       disparity_weight=disparity_weight))
    features = _stage(timings, "features", lambda: init_features(lf, disp, seg_))
    from .graph import angular_adjacency, spatial_adjacency

    def _adj():
        spa = spatial_adjacency(seg_, features, m)
        ang, wit = angular_adjacency(seg_, features, m, spa)
        return spa, ang, wit
    adjacency = _stage(timings, "adjacency", _adj)
    return PipelineCache(disparity=disp, estimated=estimated, seg=seg_,
                         features=features, adjacency=adjacency, m=m)


def segment(lf: LightField, scribbles: ScribbleMap, disparity="estimate",
            params: EnergyParams | None = None, m: int = 20,
            compactness: float = 10.0, disparity_weight: float = 10.0,
            cache: PipelineCache | None = None,
            max_cycles: int = 10, tolerance: float = 1e-9) -> SegmentationResult:
    """Full interactive segmentation of a light field.

    `disparity` is "estimate", a PFM path, or a DisparityMap (treated as
    trusted unless it came from "estimate"). Pass the previous result's
    `cache` to skip the preprocessing stages after a scribble edit.
    """
    if scribbles.label_count < 2:
        raise PipelineError("seeds", LightFieldError(
            "nothing to segment: need scribbles with at least 2 labels"))
    params = params or EnergyParams()
    timings: dict[str, float] = {}

    if cache is not None and cache.m == m:
        timings["cached_preprocess"] = True
    else:
        cache = precompute(lf, disparity=disparity, m=m, compactness=compactness,
                           disparity_weight=disparity_weight, timings=timings)
    disp, estimated = cache.disparity, cache.estimated
    seg_ = cache.seg
    features = cache.features
    adjacency = cache.adjacency

    seeds = _stage(timings, "seeds", lambda: propagate_scribbles(seg_, scribbles))
    spa, ang, wit = adjacency
    def _graph():
        if seeds.label_count < 2:
            raise LightFieldError("nothing to segment: need at least 2 labels")
        ang_sorted = sorted(ang)
        return LfspGraph(
            lfsp_count=seg_.lfsp_count, label_count=seeds.label_count,
            seeds=dict(seeds.labels),
            spatial_edges=np.array(sorted(spa), dtype=np.int32).reshape(-1, 2),
            angular_edges=np.array(ang_sorted, dtype=np.int32).reshape(-1, 2),
            angular_witness=[wit[e] for e in ang_sorted])
    graph = _stage(timings, "graph", _graph)

    resolved = params.resolved(features, estimated_disparity=estimated)
    unary = _stage(timings, "unary", lambda: compute_unary(features, seeds, resolved, graph))
    resolved = _stage(timings, "weights", lambda: fill_edge_weights(graph, features, resolved))
    initial = LabelField(labels=unary.argmin_labels(), label_count=seeds.label_count)
    final, trace = _stage(timings, "minimize",
                          lambda: minimize(unary, graph, resolved, initial=initial,
                                           max_cycles=max_cycles, tolerance=tolerance))

    timings["interactive_ms"] = sum(timings.get(k, 0.0) for k in
                                    ("seeds_ms", "graph_ms", "unary_ms", "weights_ms",
                                     "minimize_ms"))
    timings["preprocess_ms"] = sum(timings.get(k, 0.0) for k in
                                   ("disparity_ms", "superpixels_ms", "features_ms",
                                    "adjacency_ms"))
    return SegmentationResult(label_field=final, initial=initial, disparity=disp,
                              seg=seg_, features=features, graph=graph, unary=unary,
                              params=resolved, trace=trace, timings=timings, cache=cache)


# ---------------------------------------------------------------------------
# Output files


def save_labels(label_field: LabelField, seg: LfspSegmentation, directory) -> None:
    """Write label_{u}_{v}.png per view plus labels.json (per-LFSP labels)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    maps = label_field.pixel_labels(seg)
    U, V = maps.shape[:2]
    for u in range(U):
        for v in range(V):
            Image.fromarray(maps[u, v].astype(np.uint8)).save(directory / f"label_{u}_{v}.png")
    (directory / "labels.json").write_text(json.dumps({
        "label_count": label_field.label_count,
        "lfsp_labels": label_field.labels.tolist(),
    }) + "\n")


def save_trace(result: SegmentationResult, directory) -> None:
    """trace.json: energy per move plus per-stage wall times."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "trace.json").write_text(json.dumps({
        "energy": [t["energy"] for t in result.trace],
        "moves": result.trace,
        "timings_ms": result.timings,
        "params": result.params.to_dict(),
    }, indent=2, default=float) + "\n")
