"""Command-line entry points for every pipeline stage.

Subcommands: synth, disparity, superpixels, segment, eval, epi, serve.
Energy/pipeline parameters come from defaults, an optional params.json
override file (--params), then explicit flags, in that order;
--dump-params prints the effective configuration as JSON and exits.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np
from PIL import Image

from . import synthetic
from .disparity import estimate_disparity, load_disparity
from .energy import EnergyParams
from .evaluation import EvalReport, accuracy, coherence, graph_stats, render_table
from .lightfield import (GT_DISPARITY_NAME, LightFieldError, extract_epi,
                         load_groundtruth, load_lightfield, save_lightfield)
from .optimizer import PipelineError, save_labels, save_trace, segment
from .pfm import write_pfm
from .render import epi_pair, label_palette, overlay
from .superpixels import compute_lfsp, load_scribbles, save_lfsp


@dataclass
class PipelineConfig:
    """Everything tunable from the command line, with module defaults."""

    m: int = 20
    compactness: float = 10.0
    disparity_weight: float = 10.0
    inner_sigma: float = 0.8
    outer_sigma: float = 2.0
    lambda_p: float = 1.0
    lambda_d: float | None = None       # auto: 1.0 trusted / 0.3 estimated
    lambda_s: float = 10.0
    lambda_a: float = 2.0
    alpha: float = 1.0
    sigma_c2: float | None = None       # auto: population variance
    sigma_d2: float | None = None
    seed_aggregation: str = "min"
    color_metric: str = "l1"
    max_cycles: int = 10
    tolerance: float = 1e-9

    def energy_params(self) -> EnergyParams:
        return EnergyParams(lambda_p=self.lambda_p, lambda_d=self.lambda_d,
                            lambda_s=self.lambda_s, lambda_a=self.lambda_a,
                            alpha=self.alpha, sigma_c2=self.sigma_c2,
                            sigma_d2=self.sigma_d2,
                            seed_aggregation=self.seed_aggregation,
                            color_metric=self.color_metric)


_PARAM_FLAGS = [
    ("--m", int, "nominal LFSP edge length in pixels"),
    ("--compactness", float, "SLIC position weight"),
    ("--disparity-weight", float, "SLIC disparity weight (scaled by confidence)"),
    ("--inner-sigma", float, "EPI pre-smoothing sigma"),
    ("--outer-sigma", float, "EPI tensor smoothing sigma"),
    ("--lambda-p", float, "position cue weight"),
    ("--lambda-d", float, "disparity cue weight (default: 1.0 GT / 0.3 estimated)"),
    ("--lambda-s", float, "spatial smoothness weight"),
    ("--lambda-a", float, "angular smoothness weight"),
    ("--alpha", float, "disparity-vs-color balance inside B"),
    ("--sigma-c2", float, "color variance (default: computed)"),
    ("--sigma-d2", float, "disparity variance (default: computed)"),
    ("--seed-aggregation", str, "min|mean over same-label seeds"),
    ("--color-metric", str, "l1|l2 color distance"),
    ("--max-cycles", int, "expansion cycle cap"),
    ("--tolerance", float, "energy convergence tolerance"),
]


def _add_param_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--params", metavar="JSON", help="params.json override file")
    parser.add_argument("--dump-params", action="store_true",
                        help="print effective parameters as JSON and exit")
    for flag, typ, help_ in _PARAM_FLAGS:
        parser.add_argument(flag, type=typ, default=None, help=help_)


def _build_config(args: argparse.Namespace) -> PipelineConfig:
    cfg = PipelineConfig()
    if getattr(args, "params", None):
        overrides = json.loads(Path(args.params).read_text())
        for key, value in overrides.items():
            if not hasattr(cfg, key):
                raise LightFieldError(f"{args.params}: unknown parameter {key!r}")
            setattr(cfg, key, value)
    for flag, _, _ in _PARAM_FLAGS:
        attr = flag.lstrip("-").replace("-", "_")
        value = getattr(args, attr, None)
        if value is not None:
            setattr(cfg, attr, value)
    return cfg


def _maybe_dump(args: argparse.Namespace, cfg: PipelineConfig) -> bool:
    if getattr(args, "dump_params", False):
        print(json.dumps(asdict(cfg), indent=2))
        return True
    return False


def _resolve_disparity(spec: str, lf_dir: Path):
    """CLI disparity source: 'gt' (file beside the views), 'estimate', or a path."""
    if spec == "gt":
        return str(lf_dir / GT_DISPARITY_NAME)
    if spec == "estimate":
        return "estimate"
    return spec


def _load_pred_labels(directory: Path, u_count: int, v_count: int) -> np.ndarray:
    views = []
    for u in range(u_count):
        row = []
        for v in range(v_count):
            path = directory / f"label_{u}_{v}.png"
            if not path.is_file():
                raise LightFieldError(f"missing prediction file {path}")
            row.append(np.asarray(Image.open(path)).astype(np.int32))
        views.append(np.stack(row))
    return np.stack(views)


# ---------------------------------------------------------------------------
# Subcommands


def _cmd_synth(args) -> int:
    if args.preset == "three-planes":
        lf, gt = synthetic.three_planes(u_count=args.views, v_count=args.views,
                                        width=args.size, height=args.size,
                                        noise_sigma=args.noise, seed=args.seed)
    elif args.preset == "random":
        lf, gt = synthetic.random_scene(seed=args.seed, u_count=args.views,
                                        v_count=args.views, width=args.size,
                                        height=args.size, noise_sigma=args.noise)
    else:
        lf, gt = synthetic.corpus_scene(args.seed, noise_sigma=args.noise)
    save_lightfield(lf, args.out, gt=gt)
    if args.scribbles:
        scr = synthetic.auto_scribbles(gt, lf.central)
        Image.fromarray(scr.astype(np.uint8)).save(Path(args.out) / "scribbles.png")
    print(f"wrote {lf.u_count}x{lf.v_count} views of {lf.width}x{lf.height} to {args.out}")
    return 0


def _cmd_disparity(args) -> int:
    cfg = _build_config(args)
    if _maybe_dump(args, cfg):
        return 0
    lf = load_lightfield(args.lf)
    disp = estimate_disparity(lf, inner_sigma=cfg.inner_sigma,
                              outer_sigma=cfg.outer_sigma,
                              fill_low_confidence=not args.no_fill)
    write_pfm(args.out, disp.values)
    if args.confidence_out:
        write_pfm(args.confidence_out, disp.confidence)
    print(f"wrote disparity to {args.out} "
          f"(range [{disp.values.min():.3f}, {disp.values.max():.3f}])")
    return 0


def _cmd_superpixels(args) -> int:
    cfg = _build_config(args)
    if _maybe_dump(args, cfg):
        return 0
    lf = load_lightfield(args.lf)
    source = _resolve_disparity(args.disparity, Path(args.lf))
    disp = estimate_disparity(lf) if source == "estimate" else load_disparity(source, lf)
    seg = compute_lfsp(lf, disp, m=cfg.m, compactness=cfg.compactness,
                       disparity_weight=cfg.disparity_weight)
    save_lfsp(seg, args.out, params={"m": cfg.m, "compactness": cfg.compactness,
                                     "disparity_weight": cfg.disparity_weight})
    print(f"wrote {seg.lfsp_count} LFSPs to {args.out}")
    return 0


def _cmd_segment(args) -> int:
    cfg = _build_config(args)
    if _maybe_dump(args, cfg):
        return 0
    lf = load_lightfield(args.lf)
    scribbles = load_scribbles(args.scribbles, lf.height, lf.width)
    source = _resolve_disparity(args.disparity, Path(args.lf))
    result = segment(lf, scribbles, disparity=source, params=cfg.energy_params(),
                     m=cfg.m, compactness=cfg.compactness,
                     disparity_weight=cfg.disparity_weight,
                     max_cycles=cfg.max_cycles, tolerance=cfg.tolerance)
    out = Path(args.out)
    save_labels(result.label_field, result.seg, out)
    save_trace(result, out)
    if args.overlays:
        maps = result.label_field.pixel_labels(result.seg)
        u0, v0 = lf.central
        Image.fromarray(overlay(lf.srgb[u0, v0], maps[u0, v0])).save(out / "overlay_central.png")
    final_energy = result.trace[-1]["energy"]
    print(f"segmented {result.seg.lfsp_count} LFSPs into {result.label_field.label_count} "
          f"labels (energy {final_energy:.6g}) -> {args.out}")
    return 0


def _cmd_eval(args) -> int:
    lf = load_lightfield(args.lf)
    gt = load_groundtruth(args.gt or args.lf, lf)
    pred = _load_pred_labels(Path(args.pred), lf.u_count, lf.v_count)
    pooled, per_view = accuracy(pred, gt)
    coh = coherence(pred, gt.disparity, lf.central)
    report = EvalReport(scene=lf.name or str(args.lf), config=args.config,
                        pooled_accuracy=pooled,
                        per_view_accuracy=per_view.tolist(),
                        ray_count=lf.ray_count, coherence=coh)
    if args.out:
        Path(args.out).write_text(report.to_json() + "\n")
    print(render_table([report]))
    print(f"coherence {coh:.4f}")
    return 0


def _cmd_epi(args) -> int:
    lf = load_lightfield(args.lf)
    orientation = {"h": "horizontal", "v": "vertical"}.get(args.orientation, args.orientation)
    if args.at_view is None:
        args.at_view = lf.central[1] if orientation == "horizontal" else lf.central[0]
    raw = extract_epi(lf, orientation, (args.at_view, args.index))
    if args.labels:
        pred = _load_pred_labels(Path(args.labels), lf.u_count, lf.v_count)
        lab = extract_epi(lf, orientation, (args.at_view, args.index),
                          labels=pred, palette=label_palette(int(pred.max()) + 1))
        img = epi_pair(raw.pixels, lab.pixels, scale=args.scale)
    else:
        img = np.repeat(np.repeat(raw.pixels, args.scale, 0), args.scale, 1)
    Image.fromarray(img).save(args.out)
    print(f"wrote {orientation} EPI to {args.out}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn
    from .service import create_app
    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lfseg",
                                     description="4D light-field segmentation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic scene with ground truth")
    p.add_argument("--preset", default="three-planes",
                   choices=["three-planes", "random", "corpus"])
    p.add_argument("--out", required=True)
    p.add_argument("--views", type=int, default=9)
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scribbles", action="store_true",
                   help="also write auto-generated scribbles.png")
    p.set_defaults(fn=_cmd_synth)

    p = sub.add_parser("disparity", help="estimate central-view disparity (PFM out)")
    p.add_argument("--lf", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--confidence-out")
    p.add_argument("--no-fill", action="store_true",
                   help="skip low-confidence diffusion fill")
    _add_param_flags(p)
    p.set_defaults(fn=_cmd_disparity)

    p = sub.add_parser("superpixels", help="compute the LFSP segmentation")
    p.add_argument("--lf", required=True)
    p.add_argument("--disparity", default="gt", help="gt | estimate | path.pfm")
    p.add_argument("--out", required=True)
    _add_param_flags(p)
    p.set_defaults(fn=_cmd_superpixels)

    p = sub.add_parser("segment", help="run the full interactive pipeline")
    p.add_argument("--lf", required=True)
    p.add_argument("--scribbles", required=True, help="scribbles.png or scribbles.json")
    p.add_argument("--disparity", default="gt", help="gt | estimate | path.pfm")
    p.add_argument("--out", required=True)
    p.add_argument("--overlays", action="store_true", help="also write overlay_central.png")
    _add_param_flags(p)
    p.set_defaults(fn=_cmd_segment)

    p = sub.add_parser("eval", help="score predicted labels against ground truth")
    p.add_argument("--lf", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", help="directory with gt files (default: --lf)")
    p.add_argument("--out", help="write JSON report here")
    p.add_argument("--config", default="ours", help="configuration name for the table")
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("epi", help="extract an EPI strip (optionally raw-vs-labels)")
    p.add_argument("--lf", required=True)
    p.add_argument("--orientation", default="h", choices=["h", "v", "horizontal", "vertical"])
    p.add_argument("--index", type=int, required=True,
                   help="y* for horizontal, x* for vertical")
    p.add_argument("--at-view", type=int, default=None,
                   help="v* for horizontal, u* for vertical (default: central)")
    p.add_argument("--labels", help="label directory for a raw-vs-labels pair")
    p.add_argument("--scale", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_epi)

    p = sub.add_parser("serve", help="run the interactive HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8455)
    p.set_defaults(fn=_cmd_serve)
    return parser


def run_command(argv: list[str]) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except PipelineError as exc:
        print(f"error {exc}", file=sys.stderr)
        return 1
    except (LightFieldError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
