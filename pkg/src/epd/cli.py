"""Command line interface.

Exit codes: 0 success, 1 domain error (any EpdError), 2 usage error. Data
goes to --output or stdout; diagnostics go to stderr. Commands that involve
randomness (verify, bench) require an explicit --seed; pass `--seed random`
to opt in to a non-reproducible run.
"""

from __future__ import annotations

import argparse
import json
import os
import secrets
import sys
from dataclasses import replace

import numpy as np

from .bench import (SCENE_SHAPES, generate_synthetic_scenes, run_comparison,
                    emit_report, scenes_from_json, scenes_to_json)
from .errors import EpdError, InvalidParameterError
from .geometry import (BBox, ImageDims, convert_absolute_to_relative,
                       convert_relative_to_absolute, parse_regime)
from .pipeline import RunConfig, discover_prompts, load_config
from .sampler import (STRATEGIES, adaptive_sample, dynamic_coefficients,
                      random_candidates, ray_based_candidates,
                      split_internal_external)
from .spiral import DIRECTIONS, TERMINALS, generate_spiral
from .viz import (GRID_ASPECTS, PanelSpec, build_grid_specs, build_panel,
                  render_grid, render_panel)


def _parse_bbox(text: str) -> BBox:
    parts = text.split(",")
    if len(parts) != 4:
        raise InvalidParameterError(f"--bbox wants x_min,y_min,x_max,y_max, got {text!r}")
    try:
        vals = [float(v) for v in parts]
    except ValueError:
        raise InvalidParameterError(f"--bbox values must be numbers, got {text!r}")
    return BBox(*vals)


def _parse_dims(text: str) -> ImageDims:
    try:
        w, h = text.lower().split("x")
        return ImageDims(int(w), int(h))
    except (ValueError, TypeError):
        raise InvalidParameterError(f"--dims wants WIDTHxHEIGHT, got {text!r}")


def _parse_seed(text: str) -> int:
    if text == "random":
        seed = secrets.randbits(63)
        print(f"note: --seed random drew {seed}; rerun with --seed {seed} "
              f"to reproduce", file=sys.stderr)
        return seed
    try:
        return int(text)
    except ValueError:
        raise InvalidParameterError(f"--seed wants an integer or 'random', got {text!r}")


def _load_config(args) -> RunConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, sampler=replace(cfg.sampler, seed=_parse_seed(args.seed)))
    if getattr(args, "strategy", None):
        cfg = replace(cfg, sampler=replace(cfg.sampler, strategy=args.strategy))
    if getattr(args, "direction", None):
        cfg = replace(cfg, spiral=replace(cfg.spiral, direction=args.direction))
    if getattr(args, "terminal", None):
        cfg = replace(cfg, spiral=replace(cfg.spiral, terminal=args.terminal))
    return cfg


def _emit(text: str, output: str | None):
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _round_list(values, nd=6):
    return [round(float(v), nd) for v in values]


def _cmd_spiral(args) -> int:
    cfg = _load_config(args)
    spiral_cfg = cfg.spiral
    if spiral_cfg.direction == "random" or spiral_cfg.terminal == "random":
        # The path itself is deterministic; default the unresolved choices.
        spiral_cfg = replace(spiral_cfg,
                             direction=spiral_cfg.direction if spiral_cfg.direction != "random" else "clockwise",
                             terminal=spiral_cfg.terminal if spiral_cfg.terminal != "random" else "right")
    bbox = _parse_bbox(args.bbox)
    path = generate_spiral(bbox, spiral_cfg)
    doc = {
        "bbox": _round_list(bbox.as_tuple()),
        "direction": spiral_cfg.direction,
        "terminal": spiral_cfg.terminal,
        "points": [_round_list(p) for p in path.points],
        "cumulative_arc": _round_list(path.cumulative_arc),
        "radial": {
            "d": _round_list(path.radial.d),
            "d_norm": _round_list(path.radial.d_norm),
            "g": _round_list(path.radial.g),
            "g_norm": _round_list(path.radial.g_norm),
        },
    }
    _emit(json.dumps(doc, indent=2) + "\n", args.output)
    return 0


def _cmd_sample(args) -> int:
    cfg = _load_config(args)
    bbox = _parse_bbox(args.bbox)
    rng = np.random.default_rng(cfg.sampler.seed)
    strategy = cfg.sampler.strategy
    if strategy == "ray":
        cset = ray_based_candidates(bbox, cfg.sampler, rng, entropy_params=cfg.entropy)
    elif strategy == "random":
        cset = random_candidates(bbox, cfg.sampler, rng, entropy_params=cfg.entropy)
    else:
        spiral_cfg = cfg.spiral
        if spiral_cfg.direction == "random" or spiral_cfg.terminal == "random":
            from .spiral import choose_configuration
            d, t = choose_configuration(rng)
            spiral_cfg = replace(spiral_cfg,
                                 direction=d if spiral_cfg.direction == "random" else spiral_cfg.direction,
                                 terminal=t if spiral_cfg.terminal == "random" else spiral_cfg.terminal)
        path = generate_spiral(bbox, spiral_cfg)
        coeffs = dynamic_coefficients(path.radial, cfg.sampler)
        samples = adaptive_sample(path, coeffs, bbox, cfg.sampler, rng)
        cset = split_internal_external(samples, bbox, cfg.sampler,
                                       entropy_params=cfg.entropy)
    doc = cset.to_dict()
    doc["strategy"] = strategy
    for key in ("external", "internal"):
        for sp in doc[key]:
            sp["point"] = _round_list(sp["point"])
            sp["p"] = round(sp["p"], 6)
            sp["entropy"] = round(sp["entropy"], 6)
    doc["sample_trace"] = [[round(s, 6), round(k, 6)] for s, k in doc["sample_trace"]]
    _emit(json.dumps(doc, indent=2) + "\n", args.output)
    return 0


def _cmd_verify(args) -> int:
    cfg = _load_config(args)
    if args.oracle:
        cfg = replace(cfg, oracle=replace(cfg.oracle, kind=args.oracle))
    if args.endpoint:
        cfg = replace(cfg, oracle=replace(cfg.oracle, endpoint=args.endpoint))
    scene = None
    if cfg.oracle.kind == "mask":
        if not args.scene:
            raise InvalidParameterError("--scene FILE is required with the mask oracle")
        with open(args.scene, "r", encoding="utf-8") as fh:
            scenes = scenes_from_json(fh.read())
        if not (0 <= args.scene_index < len(scenes)):
            raise InvalidParameterError(
                f"--scene-index {args.scene_index} out of range for {len(scenes)} scenes")
        scene = scenes[args.scene_index]
    dims = _parse_dims(args.dims) if args.dims else (scene.dims if scene else None)
    if dims is None:
        raise InvalidParameterError("--dims is required with the remote oracle")
    if scene is not None and (dims.width, dims.height) != (scene.dims.width, scene.dims.height):
        raise InvalidParameterError(
            f"--dims {dims.width}x{dims.height} does not match scene dims "
            f"{scene.dims.width}x{scene.dims.height}")
    bundle = discover_prompts(_parse_bbox(args.bbox), dims,
                              args.expression, cfg, scene=scene,
                              bbox_is_relative=args.relative,
                              image_ref=args.image_ref)
    _emit(bundle.to_json(), args.output)
    return 0


def _cmd_bench(args) -> int:
    cfg = _load_config(args)
    rng = np.random.default_rng(cfg.sampler.seed)
    if args.scenes:
        with open(args.scenes, "r", encoding="utf-8") as fh:
            scenes = scenes_from_json(fh.read())
    else:
        shapes = tuple(args.shapes.split(",")) if args.shapes else SCENE_SHAPES
        dims = _parse_dims(args.dims) if args.dims else ImageDims(192, 144)
        scenes = generate_synthetic_scenes(args.synthetic, shapes, dims, rng)
    if args.save_scenes:
        with open(args.save_scenes, "w", encoding="utf-8") as fh:
            fh.write(scenes_to_json(scenes))
    strategies = args.strategies.split(",")
    for s in strategies:
        if s not in STRATEGIES:
            raise InvalidParameterError(f"unknown strategy {s!r}")
    regimes = [parse_regime(r) for r in args.regimes.split(",")]
    etas = [float(e) for e in args.etas.split(",")] if args.etas else None
    jobs = args.jobs if args.jobs else (os.cpu_count() or 1)
    print(f"bench: {len(scenes)} scenes x {args.perturb_seeds} seeds, "
          f"strategies={strategies}, regimes={[r.kind for r in regimes]}, "
          f"jobs={jobs}", file=sys.stderr)
    rows = run_comparison(scenes, strategies, regimes, cfg, rng,
                          perturb_seeds=args.perturb_seeds, etas=etas, jobs=jobs)
    failures = sum(r.failures for r in rows)
    if failures:
        print(f"bench: {failures} run(s) ended with insufficient evidence; "
              f"their partial traces are included", file=sys.stderr)
    csv_text, text = emit_report(rows, csv_path=args.out_csv, text_path=args.out_text)
    if args.out_csv:
        print(f"bench: wrote {args.out_csv}", file=sys.stderr)
        if args.out_text is None:
            sys.stdout.write(text)
    else:
        sys.stdout.write(csv_text)
    return 0


def _cmd_viz(args) -> int:
    seed = _parse_seed(args.seed) if args.seed is not None else 0
    if args.grid:
        specs = build_grid_specs(seed=seed, canvas=args.canvas,
                                 show_candidates=not args.no_candidates)
        _emit(render_grid(specs), args.output)
        return 0
    spec = PanelSpec(
        aspect=args.aspect,
        spiral=replace(RunConfig().spiral, direction=args.direction or "clockwise",
                       terminal=args.terminal or "right"),
        canvas=args.canvas,
        show_candidates=not args.no_candidates,
        seed=seed,
    )
    path, candidates = build_panel(spec)
    _emit(render_panel(path, candidates, spec), args.output)
    return 0


def _cmd_convert(args) -> int:
    bbox = _parse_bbox(args.bbox)
    dims = _parse_dims(args.dims)
    if args.to == "absolute":
        out = convert_relative_to_absolute(bbox, dims, args.alpha)
    else:
        out = convert_absolute_to_relative(bbox, dims, args.alpha)

    def fmt(v: float):
        return int(v) if v == int(v) else round(v, 6)

    _emit(json.dumps([fmt(v) for v in out.as_tuple()]) + "\n", args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epd",
        description="Entropy-guided point prompt discovery inside coarse boxes")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, seed_required=False):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", required=seed_required,
                       help="integer seed, or 'random' for a non-reproducible run"
                            + ("" if not seed_required else " (required)"))
        p.add_argument("--output", help="write data here instead of stdout")

    p = sub.add_parser("spiral", help="emit a spiral path as JSON")
    add_common(p)
    p.add_argument("--bbox", required=True, help="x_min,y_min,x_max,y_max")
    p.add_argument("--direction", choices=DIRECTIONS)
    p.add_argument("--terminal", choices=TERMINALS)
    p.set_defaults(func=_cmd_spiral)

    p = sub.add_parser("sample", help="emit candidate queues as JSON")
    add_common(p)
    p.add_argument("--bbox", required=True, help="x_min,y_min,x_max,y_max")
    p.add_argument("--strategy", choices=STRATEGIES)
    p.add_argument("--direction", choices=DIRECTIONS)
    p.add_argument("--terminal", choices=TERMINALS)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("verify", help="run discovery + verification, emit a bundle")
    add_common(p, seed_required=True)
    p.add_argument("--bbox", required=True, help="x_min,y_min,x_max,y_max")
    p.add_argument("--dims", help="WIDTHxHEIGHT (defaults to scene dims)")
    p.add_argument("--expression", required=True, help="referring expression")
    p.add_argument("--oracle", choices=("mask", "remote"))
    p.add_argument("--scene", help="scene JSON file (mask oracle)")
    p.add_argument("--scene-index", type=int, default=0)
    p.add_argument("--endpoint", help="remote oracle base URL")
    p.add_argument("--image-ref", default="", help="image URI forwarded to the oracle")
    p.add_argument("--relative", action="store_true",
                   help="treat --bbox as [0, alpha] relative coordinates")
    p.add_argument("--strategy", choices=STRATEGIES)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("bench", help="robustness comparison over scenes")
    add_common(p, seed_required=True)
    p.add_argument("--scenes", help="scene JSON file")
    p.add_argument("--synthetic", type=int, default=50,
                   help="generate this many synthetic scenes when --scenes is absent")
    p.add_argument("--shapes", help=f"comma list from {SCENE_SHAPES}")
    p.add_argument("--dims", help="synthetic scene dims, WIDTHxHEIGHT")
    p.add_argument("--save-scenes", help="also write the scene set here")
    p.add_argument("--strategies", default="spiral,random")
    p.add_argument("--regimes", default="tight,severe_per_side")
    p.add_argument("--etas", help="comma list of retention thresholds")
    p.add_argument("--perturb-seeds", type=int, default=20)
    p.add_argument("--jobs", type=int, help="worker processes (default: cpu count)")
    p.add_argument("--out-csv", help="write the CSV report here")
    p.add_argument("--out-text", help="write the aligned text table here")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("viz", help="render spiral panels as SVG")
    add_common(p)
    p.add_argument("--grid", action="store_true", help="24-panel figure")
    p.add_argument("--aspect", default="1:1", choices=GRID_ASPECTS)
    p.add_argument("--direction", choices=DIRECTIONS)
    p.add_argument("--terminal", choices=TERMINALS)
    p.add_argument("--canvas", type=int, default=220)
    p.add_argument("--no-candidates", action="store_true")
    p.set_defaults(func=_cmd_viz)

    p = sub.add_parser("convert", help="map a bbox between relative and absolute frames")
    p.add_argument("--bbox", required=True, help="x_min,y_min,x_max,y_max")
    p.add_argument("--dims", required=True, help="WIDTHxHEIGHT")
    p.add_argument("--alpha", type=float, default=1000.0)
    p.add_argument("--to", required=True, choices=("absolute", "relative"))
    p.add_argument("--output")
    p.set_defaults(func=_cmd_convert)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EpdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except BrokenPipeError:
        # Downstream closed stdout (e.g. `epd spiral | head`); park the fd so
        # interpreter shutdown does not raise a second time.
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 1


if __name__ == "__main__":
    sys.exit(main())
