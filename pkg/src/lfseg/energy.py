"""The segmentation energy: seed-distance data terms plus Potts smoothing.

Data cost of giving LFSP i the label of seed l combines three cues,
each min-max normalized to [0, 1] over all (unlabeled, seed) pairs:

    color     sum over Lab channels of |mean difference|   (central view)
    position  Euclidean distance of slice centers
    disparity |mean disparity difference|

cost(i, label k) aggregates over k's seeds by minimum (graph-cut
terminal semantics; mean is available as an option). Pairwise cost on a
graph edge is delta(l_i, l_j) * B with the similarity

    B = exp(-sum|dC|/sigma_C^2 - alpha*|dD|/sigma_D^2)  in (0, 1]

weighted lambda_s on spatial and lambda_a on angular edges. Position is
absent from B on purpose: adjacency already encodes position. The
pairwise term is a Potts metric, so alpha-expansion applies.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace, asdict

import numpy as np

from .graph import LfspGraph
from .lightfield import LightFieldError
from .superpixels import LfspFeatures, SeedSet

HARD = 1e30     # sentinel for seed rows in the cost matrix (never summed)


@dataclass(frozen=True)
class EnergyParams:
    """Weights and variances of the energy function.

    lambda_d=None resolves to 1.0 for trusted (ground-truth) disparity
    and 0.3 for estimated disparity, which keeps noisy depth from
    dominating. sigma_c2/sigma_d2=None resolve to population variances
    of the central-view LFSP features.
    """

    lambda_p: float = 1.0
    lambda_d: float | None = None
    lambda_s: float = 10.0
    lambda_a: float = 2.0
    alpha: float = 1.0
    sigma_c2: float | None = None
    sigma_d2: float | None = None
    seed_aggregation: str = "min"       # "min" | "mean"
    color_metric: str = "l1"            # "l1" (sum |dc|) | "l2"

    def resolved(self, features: LfspFeatures | None = None,
                 estimated_disparity: bool = False) -> "EnergyParams":
        """Fill every None field; degenerate variances fall back to 1."""
        lam_d = self.lambda_d if self.lambda_d is not None else (0.3 if estimated_disparity else 1.0)
        sc2, sd2 = self.sigma_c2, self.sigma_d2
        if (sc2 is None or sd2 is None) and features is None:
            raise LightFieldError("variance resolution needs LFSP features")
        if sc2 is None:
            sc2 = float(features.central_color().var(axis=0).sum())
        if sd2 is None:
            sd2 = float(features.central_disparity().var())
        if sc2 <= 0:
            warnings.warn("degenerate color variance; using sigma_C^2 = 1")
            sc2 = 1.0
        if sd2 <= 0:
            warnings.warn("degenerate disparity variance; using sigma_D^2 = 1")
            sd2 = 1.0
        return replace(self, lambda_d=lam_d, sigma_c2=sc2, sigma_d2=sd2)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class UnaryCosts:
    """[LFSP x label] data costs; seed rows are hard constraints
    (0 for the seed's label, HARD otherwise). Unlabeled rows are finite."""

    costs: np.ndarray           # (n, K) float64
    seeds: dict[int, int]
    label_count: int

    def argmin_labels(self) -> np.ndarray:
        """Initial labeling: per-LFSP cheapest label (seeds keep theirs)."""
        return np.argmin(self.costs, axis=1).astype(np.int32) + 1


def _normalize(raw: np.ndarray) -> np.ndarray:
    """Min-max to [0, 1] over the whole pair set; constant cue -> zeros."""
    if raw.size == 0:
        return raw
    lo, hi = raw.min(), raw.max()
    if hi - lo <= 0:
        return np.zeros_like(raw)
    return (raw - lo) / (hi - lo)


def compute_unary(features: LfspFeatures, seeds: SeedSet, params: EnergyParams,
                  graph: LfspGraph | None = None) -> UnaryCosts:
    """Data cost matrix from normalized color/position/disparity distances."""
    if not seeds.labels:
        raise LightFieldError("no seeds")
    params = params.resolved(features)
    n = features.count
    k_count = seeds.label_count
    seed_ids = np.array(sorted(seeds.labels), dtype=np.int64)
    seed_labels = np.array([seeds.labels[int(i)] for i in seed_ids], dtype=np.int64)
    mask = np.ones(n, dtype=bool)
    mask[seed_ids] = False
    unlabeled = np.nonzero(mask)[0]

    colors = features.central_color()
    pos = features.central_position()
    disp = features.central_disparity()

    dcol = colors[unlabeled][:, None, :] - colors[seed_ids][None, :, :]
    if params.color_metric == "l2":
        e_c = np.sqrt((dcol ** 2).sum(axis=-1))
    else:
        e_c = np.abs(dcol).sum(axis=-1)
    dpos = pos[unlabeled][:, None, :] - pos[seed_ids][None, :, :]
    e_p = np.sqrt((dpos ** 2).sum(axis=-1))
    e_d = np.abs(disp[unlabeled][:, None] - disp[seed_ids][None, :])

    combined = _normalize(e_c) + params.lambda_p * _normalize(e_p) \
        + params.lambda_d * _normalize(e_d)

    costs = np.zeros((n, k_count))
    for k in range(1, k_count + 1):
        cols = combined[:, seed_labels == k]
        if cols.shape[1] == 0:
            raise LightFieldError(f"label {k} has no seeds")
        if params.seed_aggregation == "mean":
            costs[unlabeled, k - 1] = cols.mean(axis=1)
        else:
            costs[unlabeled, k - 1] = cols.min(axis=1)
    for i, lab in zip(seed_ids, seed_labels):
        costs[i, :] = HARD
        costs[i, lab - 1] = 0.0
    return UnaryCosts(costs=costs, seeds=dict(seeds.labels), label_count=k_count)


def edge_similarity(color_i: np.ndarray, disp_i, color_j: np.ndarray, disp_j,
                    params: EnergyParams) -> np.ndarray:
    """B in (0, 1]: similarity of two LFSPs from color and disparity.

    Requires resolved sigma_c2/sigma_d2. Broadcasts over leading axes.
    """
    if params.sigma_c2 is None or params.sigma_d2 is None:
        raise LightFieldError("edge_similarity needs resolved variances")
    dc = np.abs(np.asarray(color_i, dtype=np.float64)
                - np.asarray(color_j, dtype=np.float64)).sum(axis=-1)
    dd = np.abs(np.asarray(disp_i, dtype=np.float64) - np.asarray(disp_j, dtype=np.float64))
    return np.exp(-dc / params.sigma_c2 - params.alpha * dd / params.sigma_d2)


def fill_edge_weights(graph: LfspGraph, features: LfspFeatures,
                      params: EnergyParams) -> EnergyParams:
    """Compute B for every graph edge; returns the resolved params used."""
    params = params.resolved(features)
    colors = features.central_color()
    disp = features.central_disparity()
    for attr, edges in (("spatial_weights", graph.spatial_edges),
                        ("angular_weights", graph.angular_edges)):
        if len(edges) == 0:
            setattr(graph, attr, np.zeros(0))
            continue
        i, j = edges[:, 0], edges[:, 1]
        setattr(graph, attr, edge_similarity(colors[i], disp[i], colors[j], disp[j], params))
    return params


def potts(a, b) -> int:
    """Label disagreement penalty factor: 0 if equal, 1 otherwise."""
    return 0 if a == b else 1


def total_energy(labels: np.ndarray, unary: UnaryCosts, graph: LfspGraph,
                 params: EnergyParams) -> float:
    """Full energy of a labeling (labels: (n,) values in [1, K])."""
    labels = np.asarray(labels)
    if labels.min() < 1 or labels.max() > unary.label_count:
        raise LightFieldError("labeling outside [1, label_count]")
    for i, lab in unary.seeds.items():
        if labels[i] != lab:
            raise LightFieldError(f"labeling violates seed {i} (label {lab})")
    if graph.spatial_weights is None or graph.angular_weights is None:
        raise LightFieldError("edge weights not filled")
    e = float(unary.costs[np.arange(len(labels)), labels - 1].sum())
    for lam, edges, weights in ((params.lambda_s, graph.spatial_edges, graph.spatial_weights),
                                (params.lambda_a, graph.angular_edges, graph.angular_weights)):
        if len(edges):
            differ = labels[edges[:, 0]] != labels[edges[:, 1]]
            e += lam * float(weights[differ].sum())
    return e
