"""Command-line front end.

Subcommands: sample, reconstruct, eval, pipeline, grad-check, gen-scenes.
Every option can also come from a ``--config`` file of ``key = value`` lines
(`#` comments allowed); explicit flags win over the file.  Exit codes: 0 on
success, 1 on usage errors, 2 on data or validation errors.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import imagedata, scenes
from .evaluate import (AGGREGATE_COLUMNS, CELL_COLUMNS, ExperimentConfig, mae,
                       report_payload, rmse, run_matrix, write_rows_csv, write_rows_json)
from .imagedata import (DepthMap, SampleSet, apply_mask, load_pgm16, load_ppm,
                        rgb_to_lab, save_mask, save_pgm16, save_samples, write_pgm16)
from .reconstruct import (SolverConfig, bilateral_reconstruct,
                          colorization_reconstruct, nn_reconstruct)
from .samplers import grid_mask, locations_to_mask, poisson_mask, random_mask, target_count
from .ssa import SsaConfig, TemperatureSchedule, gradient_check, refine_locations, ssa_sample
from .superpixel import sps_sample


class _Usage(Exception):
    """Raised for bad command lines; main() maps it to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _Usage(message)


def _load_config(path: str) -> dict[str, str]:
    cfg = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise _Usage(f"cannot read config file {path}: {exc}")
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise _Usage(f"{path}:{lineno}: expected 'key = value'")
        key, value = stripped.split("=", 1)
        key = key.strip().replace("-", "_")
        if key == "in":
            key = "infile"
        cfg[key] = value.strip()
    return cfg


def _parse_bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _merge_config(args: argparse.Namespace, registry: dict) -> argparse.Namespace:
    """Fill unset options from the config file, then from built-in defaults."""
    cfg = _load_config(args.config) if getattr(args, "config", None) else {}
    known = set(registry)
    for key in cfg:
        if key not in known:
            raise _Usage(f"unknown config key {key!r}")
    for dest, (conv, default, _name) in registry.items():
        if getattr(args, dest, None) is not None:
            continue
        if dest in cfg:
            try:
                value = conv(cfg[dest])
            except ValueError as exc:
                raise _Usage(f"config key {dest}: {exc}")
        else:
            value = default
        setattr(args, dest, value)
    return args


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(","))


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(","))


def _names(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _opt(parser, registry, name, conv, default, help_text, required=False):
    dest = name.lstrip("-").replace("-", "_")
    if dest == "in":  # avoid the Python keyword
        dest = "infile"
    if conv is _parse_bool:
        parser.add_argument(name, dest=dest, action="store_const", const=True,
                            default=None, help=help_text)
    else:
        parser.add_argument(name, dest=dest, type=conv, default=None, help=help_text)
    registry[dest] = (conv, _REQUIRED if required else default, name)


_REQUIRED = object()


def _require(args, registry):
    for dest, (_, default, name) in registry.items():
        if default is _REQUIRED and getattr(args, dest) is _REQUIRED:
            raise _Usage(f"missing required option {name}")


# ---------------------------------------------------------------------------
# subcommand implementations
# ---------------------------------------------------------------------------


def _cmd_sample(args) -> int:
    rgb = load_ppm(args.infile)
    h, w = rgb.height, rgb.width
    n = target_count(args.rate, h, w)
    seg = None
    locations = None

    if args.method == "random":
        mask = random_mask(h, w, n, args.seed)
    elif args.method == "grid":
        mask = grid_mask(h, w, n)
    elif args.method == "poisson":
        mask = poisson_mask(h, w, n, args.seed)
    elif args.method in ("sps", "ssa-refined"):
        locations, seg = sps_sample(rgb, n, args.m, args.iters, args.seed,
                                    return_segmentation=True)
        if args.method == "ssa-refined":
            if args.gt is None:
                raise _Usage("--gt is required for --method ssa-refined")
            gt = load_pgm16(args.gt)
            if (gt.height, gt.width) != (h, w):
                raise ValueError("ground-truth depth dimensions differ from the image")
            targets = _superpixel_depth_targets(seg.labels, gt, locations, args.window)
            cfg = SsaConfig(window=args.window,
                            schedule=TemperatureSchedule(args.t_start, args.t_end))
            result = refine_locations(gt, locations, targets, cfg,
                                      lr=args.lr, steps=args.refine_steps)
            locations = result.locations
            if result.diverged:
                print("refinement diverged; using best locations seen", file=sys.stderr)
        mask = locations_to_mask(locations, h, w)
    else:
        raise _Usage(f"unknown sampling method {args.method!r}")

    save_mask(mask, args.out)
    if args.samples_out:
        if locations is None:
            ys, xs = np.nonzero(mask.bits)
            locations = SampleSet(np.column_stack([xs, ys]).astype(np.float64))
        save_samples(locations, args.samples_out)
    if args.seg_out:
        if seg is None:
            raise _Usage("--seg-out applies only to --method sps or ssa-refined")
        write_pgm16(seg.labels.astype(np.uint16), args.seg_out)
    print(f"wrote {mask.count} samples to {args.out}")
    return 0


def _superpixel_depth_targets(labels: np.ndarray, gt: DepthMap,
                              locations: SampleSet, window: int) -> np.ndarray:
    """Per-superpixel refinement targets: mean valid depth of each region.

    A region with no valid depth keeps its current soft-sampled value, which
    makes the refinement a no-op there.
    """
    n = len(locations)
    targets = np.empty(n)
    flat = labels.ravel()
    vmask = gt.valid.ravel()
    sums = np.bincount(flat[vmask], weights=gt.depth.ravel()[vmask], minlength=n)
    counts = np.bincount(flat[vmask], minlength=n)
    cfg = SsaConfig(window=window)
    for s in range(n):
        if counts[s] > 0:
            targets[s] = sums[s] / counts[s]
        else:
            targets[s] = ssa_sample(gt, locations.locations[s], cfg).value
    return targets


def _cmd_reconstruct(args) -> int:
    sparse = load_pgm16(args.infile)
    if args.method == "nearest":
        dense = nn_reconstruct(sparse)
    else:
        if args.rgb is None:
            raise _Usage(f"--rgb is required for --method {args.method}")
        rgb = load_ppm(args.rgb)
        if (rgb.height, rgb.width) != (sparse.height, sparse.width):
            raise ValueError("image and depth dimensions differ")
        lab = rgb_to_lab(rgb)
        if args.method == "colorization":
            result = colorization_reconstruct(
                lab, sparse, SolverConfig(args.sigma_c, args.tol, args.max_iters))
            dense = result.depth
            print(f"converged={str(result.converged).lower()} "
                  f"iterations={result.iterations} residual={result.residual:.3e}")
        elif args.method == "bilateral":
            dense = bilateral_reconstruct(lab, sparse, sigma_s=args.sigma_s,
                                          sigma_c=args.sigma_c, radius=args.radius)
        else:
            raise _Usage(f"unknown reconstruction method {args.method!r}")
    save_pgm16(dense, args.out)
    print(f"wrote dense depth to {args.out}")
    return 0


def _cmd_eval(args) -> int:
    est = load_pgm16(args.est)
    gt = load_pgm16(args.gt)
    print(f"mae_mm={mae(est, gt):.6f} rmse_mm={rmse(est, gt):.6f}")
    return 0


def _cmd_pipeline(args) -> int:
    scene_list, names = scenes_from_dir(args.infile)
    cfg = ExperimentConfig(
        samplers=args.method, reconstructors=args.recon, rates=args.rate,
        seeds=args.seeds, m=args.m, slic_iters=args.iters, sigma_c=args.sigma_c,
        tol=args.tol, max_iters=args.max_iters, workers=args.workers)
    report = run_matrix(scene_list, cfg, names)
    failed = [r for r in report.rows if r.error]
    write_rows_csv(report.aggregate(), args.out, AGGREGATE_COLUMNS,
                   include_timing=args.timing)
    if args.cells_out:
        rows = [vars(r) for r in report.sorted_rows()]
        write_rows_csv(rows, args.cells_out, CELL_COLUMNS, include_timing=args.timing)
    if args.json_out:
        write_rows_json(report_payload(report), args.json_out, include_timing=args.timing)
    print(f"evaluated {len(report.rows)} cells over {len(scene_list)} scenes "
          f"({len(failed)} failed); wrote {args.out}")
    for row in failed:
        print(f"  failed {row.scene}/{row.sampler}/{row.reconstructor}: {row.error}",
              file=sys.stderr)
    return 0


def scenes_from_dir(path: str):
    """Load NNN_rgb.ppm / NNN_depth.pgm pairs from a scene directory."""
    root = Path(path)
    if not root.is_dir():
        raise ValueError(f"{path} is not a directory")
    rgb_files = sorted(root.glob("*_rgb.ppm"))
    if not rgb_files:
        raise ValueError(f"no *_rgb.ppm scenes found in {path}")
    loaded, names = [], []
    for rgb_path in rgb_files:
        stem = rgb_path.name[: -len("_rgb.ppm")]
        depth_path = root / f"{stem}_depth.pgm"
        if not depth_path.exists():
            raise ValueError(f"missing depth file for scene {stem}: {depth_path}")
        scene = scenes.SyntheticScene(load_ppm(rgb_path), load_pgm16(depth_path),
                                      kind="file", params={"stem": stem})
        loaded.append(scene)
        names.append(stem)
    return loaded, names


def _cmd_grad_check(args) -> int:
    worst = gradient_check(cases=args.cases, window=args.window, seed=args.seed,
                           t_range=(args.t_min, args.t_max), h=args.step)
    print(f"max relative gradient error over {args.cases} cases: {worst:.3e}")
    if worst < args.tolerance:
        return 0
    print(f"exceeds tolerance {args.tolerance:.1e}", file=sys.stderr)
    return 2


def _cmd_gen_scenes(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    kinds = args.kinds
    for kind in kinds:
        if kind not in scenes.SCENE_KINDS:
            raise _Usage(f"unknown scene kind {kind!r}; choose from {scenes.SCENE_KINDS}")
    for i in range(args.count):
        kind = kinds[i % len(kinds)]
        scene = scenes.gen_scene(kind, args.height, args.width, args.seed + i)
        imagedata.save_ppm(scene.rgb, out / f"{i:03d}_rgb.ppm")
        save_pgm16(scene.depth, out / f"{i:03d}_depth.pgm")
    print(f"wrote {args.count} scenes to {out}")
    return 0


# ---------------------------------------------------------------------------
# parser wiring
# ---------------------------------------------------------------------------


def _build_parser():
    parser = _Parser(prog="depthsample",
                     description="Adaptive depth sampling and reconstruction toolkit")
    sub = parser.add_subparsers(dest="command", metavar="command")
    registries: dict[str, dict] = {}

    def command(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None,
                       help="key = value file; explicit flags override it")
        registries[name] = {}
        return p, registries[name]

    p, reg = command("sample", "compute a sampling mask from an RGB image")
    _opt(p, reg, "--method", str, _REQUIRED, "random | grid | poisson | sps | ssa-refined", required=True)
    _opt(p, reg, "--rate", float, _REQUIRED, "sampling rate, e.g. 0.0025", required=True)
    _opt(p, reg, "--in", str, _REQUIRED, "input RGB image (PPM)", required=True)
    _opt(p, reg, "--out", str, _REQUIRED, "output mask (8-bit PGM)", required=True)
    _opt(p, reg, "--gt", str, None, "ground-truth depth (16-bit PGM); required for ssa-refined")
    _opt(p, reg, "--samples-out", str, None, "also write continuous locations as CSV")
    _opt(p, reg, "--seg-out", str, None, "dump superpixel labels as 16-bit PGM")
    _opt(p, reg, "--seed", int, 0, "random seed")
    _opt(p, reg, "--m", float, 1.0, "superpixel compactness weight")
    _opt(p, reg, "--iters", int, 10, "superpixel refinement sweeps")
    _opt(p, reg, "--window", int, 5, "soft-sampling window size")
    _opt(p, reg, "--t-start", float, 1.0, "annealing start temperature")
    _opt(p, reg, "--t-end", float, 0.1, "annealing end temperature")
    _opt(p, reg, "--refine-steps", int, 200, "gradient steps for ssa-refined")
    _opt(p, reg, "--lr", float, 1e-5, "learning rate for ssa-refined")

    p, reg = command("reconstruct", "densify a sparse depth map")
    _opt(p, reg, "--method", str, _REQUIRED, "colorization | nearest | bilateral", required=True)
    _opt(p, reg, "--in", str, _REQUIRED, "sparse depth (16-bit PGM)", required=True)
    _opt(p, reg, "--out", str, _REQUIRED, "output dense depth (16-bit PGM)", required=True)
    _opt(p, reg, "--rgb", str, None, "guiding RGB image (PPM)")
    _opt(p, reg, "--sigma-c", float, 10.0, "color affinity bandwidth")
    _opt(p, reg, "--sigma-s", float, None, "bilateral spatial sigma (default: half sample spacing)")
    _opt(p, reg, "--radius", float, None, "bilateral radius (default: 3 spatial sigmas)")
    _opt(p, reg, "--tol", float, 1e-6, "solver relative residual tolerance")
    _opt(p, reg, "--max-iters", int, 20000, "solver iteration cap")

    p, reg = command("eval", "compare an estimated depth map against ground truth")
    _opt(p, reg, "--est", str, _REQUIRED, "estimated depth (16-bit PGM)", required=True)
    _opt(p, reg, "--gt", str, _REQUIRED, "ground-truth depth (16-bit PGM)", required=True)

    p, reg = command("pipeline", "sample + reconstruct + evaluate a scene directory")
    _opt(p, reg, "--in", str, _REQUIRED, "scene directory (NNN_rgb.ppm / NNN_depth.pgm)", required=True)
    _opt(p, reg, "--out", str, _REQUIRED, "aggregate report CSV", required=True)
    _opt(p, reg, "--method", _names, ("sps",), "comma-separated samplers")
    _opt(p, reg, "--recon", _names, ("colorization",), "comma-separated reconstructors")
    _opt(p, reg, "--rate", _floats, (0.0025,), "comma-separated sampling rates")
    _opt(p, reg, "--seeds", _ints, (0,), "comma-separated seeds")
    _opt(p, reg, "--cells-out", str, None, "also write the per-scene cell CSV")
    _opt(p, reg, "--json-out", str, None, "also write a JSON mirror of the report")
    _opt(p, reg, "--timing", _parse_bool, False, "include wall-clock times (breaks byte reproducibility)")
    _opt(p, reg, "--workers", int, 1, "parallel evaluation threads")
    _opt(p, reg, "--m", float, 1.0, "superpixel compactness weight")
    _opt(p, reg, "--iters", int, 10, "superpixel refinement sweeps")
    _opt(p, reg, "--sigma-c", float, 10.0, "color affinity bandwidth")
    _opt(p, reg, "--tol", float, 1e-6, "solver relative residual tolerance")
    _opt(p, reg, "--max-iters", int, 20000, "solver iteration cap")

    p, reg = command("grad-check", "verify soft-sampling gradients against finite differences")
    _opt(p, reg, "--cases", int, 1000, "number of randomized cases")
    _opt(p, reg, "--window", int, 5, "soft-sampling window size")
    _opt(p, reg, "--seed", int, 0, "random seed")
    _opt(p, reg, "--t-min", float, 0.2, "low end of the temperature range")
    _opt(p, reg, "--t-max", float, 2.0, "high end of the temperature range")
    _opt(p, reg, "--step", float, 1e-4, "finite-difference step in pixels")
    _opt(p, reg, "--tolerance", float, 1e-4, "maximum allowed relative error")

    p, reg = command("gen-scenes", "write synthetic RGB-D scene pairs")
    _opt(p, reg, "--out", str, _REQUIRED, "output directory", required=True)
    _opt(p, reg, "--count", int, 10, "number of scenes")
    _opt(p, reg, "--kinds", _names, scenes.SCENE_KINDS, "comma-separated scene kinds, cycled")
    _opt(p, reg, "--height", int, 120, "scene height in pixels")
    _opt(p, reg, "--width", int, 160, "scene width in pixels")
    _opt(p, reg, "--seed", int, 0, "base seed; scene i uses seed + i")

    return parser, registries


_COMMANDS = {
    "sample": _cmd_sample,
    "reconstruct": _cmd_reconstruct,
    "eval": _cmd_eval,
    "pipeline": _cmd_pipeline,
    "grad-check": _cmd_grad_check,
    "gen-scenes": _cmd_gen_scenes,
}


def cli(argv: list[str] | None = None) -> int:
    """Run the command line; returns the process exit code."""
    parser, registries = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise _Usage("a subcommand is required")
        _merge_config(args, registries[args.command])
        _require(args, registries[args.command])
        return _COMMANDS[args.command](args)
    except _Usage as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:  # console entry point
    sys.exit(cli())


if __name__ == "__main__":
    main()
