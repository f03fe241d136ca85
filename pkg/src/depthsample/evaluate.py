"""Evaluation harness: error metrics, the sampler x reconstructor matrix,
and the temporal-staleness and pointing-jitter experiments.

All experiment outputs are deterministic for a given configuration: cells
are enumerated in a canonical order, every random draw comes from a seed
derived stably from the cell's identity, and the CSV/JSON writers use fixed
float formats.  Wall-clock timings are measured but excluded from reports
unless explicitly requested, since they would break byte-reproducibility.
"""
from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from .imagedata import DepthMap, LabImage, SampleSet, SamplingMask, apply_mask, rgb_to_lab
from .reconstruct import SolverConfig, bilateral_reconstruct, colorization_reconstruct, nn_reconstruct
from .samplers import grid_mask, locations_to_mask, poisson_mask, random_mask, target_count
from .scenes import SyntheticScene
from .superpixel import sps_sample

__all__ = [
    "mae",
    "rmse",
    "SAMPLERS",
    "RECONSTRUCTORS",
    "ExperimentConfig",
    "CellResult",
    "EvalReport",
    "run_matrix",
    "temporal_experiment",
    "jitter_experiment",
    "write_rows_csv",
    "write_rows_json",
]

SAMPLERS = ("random", "grid", "poisson", "sps")
RECONSTRUCTORS = ("colorization", "nearest", "bilateral")


def _error_arrays(est: DepthMap, gt: DepthMap) -> np.ndarray:
    if est.depth.shape != gt.depth.shape:
        raise ValueError("estimate and ground truth dimensions differ")
    mask = gt.valid
    if not mask.any():
        raise ValueError("ground truth has no valid pixels to evaluate")
    return est.depth[mask] - gt.depth[mask]


def mae(est: DepthMap, gt: DepthMap) -> float:
    """Mean absolute depth error in millimeters over valid ground truth."""
    return float(np.mean(np.abs(_error_arrays(est, gt))))


def rmse(est: DepthMap, gt: DepthMap) -> float:
    """Root mean squared depth error in millimeters over valid ground truth."""
    return float(np.sqrt(np.mean(_error_arrays(est, gt) ** 2)))


@dataclass(frozen=True)
class ExperimentConfig:
    """What to run: samplers, reconstructors, rates, seeds, and solver knobs."""

    samplers: tuple[str, ...] = ("random", "grid", "poisson", "sps")
    reconstructors: tuple[str, ...] = ("colorization",)
    rates: tuple[float, ...] = (0.0025,)
    seeds: tuple[int, ...] = (0,)
    m: float = 1.0
    slic_iters: int = 10
    sigma_c: float = 10.0
    tol: float = 1e-6
    max_iters: int = 20000
    workers: int = 1

    def solver(self) -> SolverConfig:
        return SolverConfig(sigma_c=self.sigma_c, tol=self.tol, max_iters=self.max_iters)


@dataclass
class CellResult:
    """One (scene, sampler, reconstructor, rate, seed) evaluation."""

    scene: str
    sampler: str
    reconstructor: str
    rate: float
    seed: int
    mae_mm: float = float("nan")
    rmse_mm: float = float("nan")
    samples: int = 0
    time_ms: float = 0.0
    converged: bool = True
    error: str = ""


@dataclass
class EvalReport:
    """All cell results of a run plus aggregation and serialization."""

    rows: list[CellResult] = field(default_factory=list)

    def aggregate(self) -> list[dict]:
        """Mean metrics over scenes, grouped by (sampler, reconstructor, rate, seed)."""
        groups: dict[tuple, list[CellResult]] = {}
        for row in self.rows:
            groups.setdefault((row.sampler, row.reconstructor, row.rate, row.seed), []).append(row)
        out = []
        for key in sorted(groups):
            cells = [c for c in groups[key] if not c.error]
            if not cells:
                continue
            out.append({
                "sampler": key[0],
                "reconstructor": key[1],
                "rate": key[2],
                "seed": key[3],
                "mae_mm": float(np.mean([c.mae_mm for c in cells])),
                "rmse_mm": float(np.mean([c.rmse_mm for c in cells])),
                "samples": int(round(float(np.mean([c.samples for c in cells])))),
                "time_ms": float(np.sum([c.time_ms for c in cells])),
            })
        return out

    def sorted_rows(self) -> list[CellResult]:
        return sorted(self.rows, key=lambda r: (r.scene, r.sampler, r.reconstructor, r.rate, r.seed))


_FORMATS = {
    "rate": lambda v: f"{v:.6f}",
    "mae_mm": lambda v: f"{v:.6f}",
    "rmse_mm": lambda v: f"{v:.6f}",
    "time_ms": lambda v: f"{v:.3f}",
}


def _format_cell(key: str, value) -> str:
    if key in _FORMATS:
        return _FORMATS[key](value)
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def write_rows_csv(rows: list[dict], path, columns: list[str],
                   include_timing: bool = False) -> None:
    """Write dict rows as CSV with fixed float formats.

    ``time_ms`` is zeroed unless ``include_timing`` is set, keeping reports
    byte-identical across reruns of the same configuration.
    """
    lines = [",".join(columns)]
    for row in rows:
        out = dict(row)
        if not include_timing and "time_ms" in out:
            out["time_ms"] = 0.0
        lines.append(",".join(_format_cell(c, out[c]) for c in columns))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def write_rows_json(payload: dict, path, include_timing: bool = False) -> None:
    """JSON mirror of a report; timings zeroed unless requested."""
    def scrub(obj):
        if isinstance(obj, dict):
            return {k: (0.0 if k == "time_ms" and not include_timing else scrub(v))
                    for k, v in obj.items()}
        if isinstance(obj, list):
            return [scrub(v) for v in obj]
        return obj

    with open(path, "w") as fh:
        json.dump(scrub(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


CELL_COLUMNS = ["scene", "sampler", "reconstructor", "rate", "seed",
                "mae_mm", "rmse_mm", "samples", "time_ms", "converged", "error"]
AGGREGATE_COLUMNS = ["sampler", "reconstructor", "rate", "seed",
                     "mae_mm", "rmse_mm", "samples", "time_ms"]


def _cell_seed(*parts: int) -> int:
    """Stable per-cell RNG seed from the experiment seed and cell identity."""
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def _make_mask(sampler: str, scene: SyntheticScene, n: int, seed: int,
               cfg: ExperimentConfig) -> SamplingMask:
    h, w = scene.depth.height, scene.depth.width
    if sampler == "random":
        return random_mask(h, w, n, seed)
    if sampler == "grid":
        return grid_mask(h, w, n)
    if sampler == "poisson":
        return poisson_mask(h, w, n, seed)
    if sampler == "sps":
        locs = sps_sample(scene.rgb, n, cfg.m, cfg.slic_iters, seed)
        return locations_to_mask(locs, h, w)
    raise ValueError(f"unknown sampler {sampler!r}, expected one of {SAMPLERS}")


def _sample_locations(sampler: str, scene: SyntheticScene, n: int, seed: int,
                      cfg: ExperimentConfig) -> SampleSet:
    """Continuous sample locations (baselines report their mask pixels)."""
    if sampler == "sps":
        return sps_sample(scene.rgb, n, cfg.m, cfg.slic_iters, seed)
    mask = _make_mask(sampler, scene, n, seed, cfg)
    ys, xs = np.nonzero(mask.bits)
    return SampleSet(np.column_stack([xs, ys]).astype(np.float64))


def _reconstruct(recon: str, lab: LabImage, sparse: DepthMap,
                 cfg: ExperimentConfig) -> tuple[DepthMap, bool]:
    if recon == "colorization":
        result = colorization_reconstruct(lab, sparse, cfg.solver())
        return result.depth, result.converged
    if recon == "nearest":
        return nn_reconstruct(sparse), True
    if recon == "bilateral":
        return bilateral_reconstruct(lab, sparse, sigma_c=cfg.sigma_c), True
    raise ValueError(f"unknown reconstructor {recon!r}, expected one of {RECONSTRUCTORS}")


def _evaluate_mask(mask: SamplingMask, scene: SyntheticScene, lab: LabImage,
                   recon: str, cfg: ExperimentConfig) -> tuple[float, float, bool]:
    sparse = apply_mask(scene.depth, mask)
    dense, converged = _reconstruct(recon, lab, sparse, cfg)
    return mae(dense, scene.depth), rmse(dense, scene.depth), converged


def run_matrix(scenes: list[SyntheticScene], cfg: ExperimentConfig,
               scene_names: list[str] | None = None) -> EvalReport:
    """Evaluate every sampler x reconstructor x rate x seed on every scene.

    A failed cell records its error message and the run continues.  With
    ``cfg.workers`` > 1 cells evaluate in a thread pool; results are ordered
    by cell identity, not completion, so reports do not depend on scheduling.
    """
    if scene_names is None:
        scene_names = [f"{i:03d}" for i in range(len(scenes))]
    labs = [rgb_to_lab(s.rgb) for s in scenes]

    cells = []
    for si, scene in enumerate(scenes):
        for sampler in cfg.samplers:
            for recon in cfg.reconstructors:
                for rate in cfg.rates:
                    for seed in cfg.seeds:
                        cells.append((si, sampler, recon, rate, seed))

    def run_cell(cell) -> CellResult:
        si, sampler, recon, rate, seed = cell
        scene = scenes[si]
        row = CellResult(scene_names[si], sampler, recon, rate, seed)
        t0 = time.perf_counter()
        try:
            n = target_count(rate, scene.depth.height, scene.depth.width)
            mask = _make_mask(sampler, scene, n, _cell_seed(seed, si), cfg)
            row.samples = mask.count
            row.mae_mm, row.rmse_mm, row.converged = _evaluate_mask(
                mask, scene, labs[si], recon, cfg)
        except Exception as exc:  # record and continue; one cell must not kill a run
            row.error = f"{type(exc).__name__}: {exc}"
        row.time_ms = (time.perf_counter() - t0) * 1000.0
        return row

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(run_cell, cells))
    else:
        rows = [run_cell(c) for c in cells]
    return EvalReport(rows)


def report_payload(report: EvalReport) -> dict:
    """JSON-ready payload: per-cell rows plus the scene-averaged aggregate."""
    return {"cells": [asdict(r) for r in report.sorted_rows()],
            "aggregate": report.aggregate()}


TEMPORAL_COLUMNS = ["delta_t", "sampler", "reconstructor", "rate", "seed",
                    "mae_mm", "rmse_mm"]


def temporal_experiment(frames: list[SyntheticScene], delta_ts: tuple[int, ...],
                        cfg: ExperimentConfig) -> list[dict]:
    """Sampling-mask staleness: the mask is computed from frame t - dt.

    The adaptive sampler sees the reference (stale) RGB while depth is
    measured and evaluated on the current frame.  Baselines are content
    independent, so their masks are seeded by the current frame index and
    staleness cannot affect them.  Frames before max(delta_ts) are skipped so
    every delay is averaged over the same evaluation frames.
    """
    if not frames:
        raise ValueError("temporal experiment needs at least one frame")
    start = max(delta_ts)
    if start >= len(frames):
        raise ValueError(f"sequence of {len(frames)} frames is too short for delay {start}")
    labs = [rgb_to_lab(f.rgb) for f in frames]
    h, w = frames[0].depth.height, frames[0].depth.width

    rows = []
    for dt in delta_ts:
        for sampler in cfg.samplers:
            for recon in cfg.reconstructors:
                for rate in cfg.rates:
                    for seed in cfg.seeds:
                        n = target_count(rate, h, w)
                        maes, rmses = [], []
                        for t in range(start, len(frames)):
                            reference = frames[t - dt]
                            mask = _make_mask(sampler, reference, n,
                                              _cell_seed(seed, t), cfg)
                            m_val, r_val, _ = _evaluate_mask(
                                mask, frames[t], labs[t], recon, cfg)
                            maes.append(m_val)
                            rmses.append(r_val)
                        rows.append({
                            "delta_t": dt, "sampler": sampler, "reconstructor": recon,
                            "rate": rate, "seed": seed,
                            "mae_mm": float(np.mean(maes)),
                            "rmse_mm": float(np.mean(rmses)),
                        })
    return rows


JITTER_COLUMNS = ["jitter_px", "sampler", "reconstructor", "rate", "seed",
                  "mae_mm", "rmse_mm"]


def jitter_experiment(scenes: list[SyntheticScene], ranges: tuple[float, ...],
                      cfg: ExperimentConfig) -> list[dict]:
    """Projector pointing error: uniform noise in [-k, k]^2 on each location.

    Perturbed locations are clipped to the image and rasterized with
    collision resolution, so the sample budget is preserved.  Range 0 draws
    zero noise and reproduces the unperturbed result bit for bit.
    """
    labs = [rgb_to_lab(s.rgb) for s in scenes]
    rows = []
    for k in ranges:
        if k < 0:
            raise ValueError(f"jitter range must be non-negative, got {k}")
        for sampler in cfg.samplers:
            for recon in cfg.reconstructors:
                for rate in cfg.rates:
                    for seed in cfg.seeds:
                        maes, rmses = [], []
                        for si, scene in enumerate(scenes):
                            h, w = scene.depth.height, scene.depth.width
                            n = target_count(rate, h, w)
                            locs = _sample_locations(sampler, scene, n,
                                                     _cell_seed(seed, si), cfg)
                            rng = np.random.default_rng(
                                np.random.SeedSequence([seed, si, 7]))
                            noise = rng.uniform(-k, k, size=(n, 2))
                            moved = locs.locations + noise
                            moved[:, 0] = np.clip(moved[:, 0], 0, w - 1)
                            moved[:, 1] = np.clip(moved[:, 1], 0, h - 1)
                            mask = locations_to_mask(SampleSet(moved), h, w)
                            m_val, r_val, _ = _evaluate_mask(
                                mask, scene, labs[si], recon, cfg)
                            maes.append(m_val)
                            rmses.append(r_val)
                        rows.append({
                            "jitter_px": k, "sampler": sampler, "reconstructor": recon,
                            "rate": rate, "seed": seed,
                            "mae_mm": float(np.mean(maes)),
                            "rmse_mm": float(np.mean(rmses)),
                        })
    return rows
