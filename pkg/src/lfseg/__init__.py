"""lfseg: interactive 4D light-field segmentation.

Clusters a light field into light-field superpixels (LFSPs), builds a
compact LFSP graph, and assigns scribbled labels to every ray by
multi-label graph-cut energy minimization, coherently across views.
"""

from .color import lab_to_rgb, rgb_to_lab
from .disparity import DisparityMap, estimate_disparity, load_disparity
from .energy import (EnergyParams, UnaryCosts, compute_unary, edge_similarity,
                     fill_edge_weights, total_energy)
from .evaluation import EvalReport, ablation, accuracy, coherence, graph_stats
from .graph import LfspGraph, angular_adjacency, build_graph, pixel_neighbors, spatial_adjacency
from .lightfield import (EpiImage, GroundTruth, LightField, LightFieldError, Ray,
                         extract_epi, load_groundtruth, load_lightfield, save_lightfield)
from .maxflow import FlowNetwork, max_flow
from .optimizer import (LabelField, PipelineError, SegmentationResult, expansion_move,
                        minimize, segment)
from .superpixels import (LfspFeatures, LfspSegmentation, ScribbleMap, SeedSet,
                          compute_lfsp, init_features, load_scribbles,
                          propagate_scribbles, rasterize_strokes)
from .synthetic import Layer, auto_scribbles, corpus, random_scene, synth_scene, three_planes

__version__ = "0.1.0"
