"""How fragile is adaptive sampling? Two stress tests, small scale.

Pointing jitter: the adaptive sampler computes careful positions, then the
hardware lands the beam up to k pixels away.  Mask staleness: positions were
computed on an RGB frame delta_t frames old while the scene translates.  Both
runs print mean RMSE curves; the adaptive advantage shrinks but degrades
smoothly rather than cliff-dropping.  Uses smaller scenes and fewer seeds
than the acceptance suite so it finishes in ~15 s.
"""
import numpy as np

from depthsample.evaluate import (ExperimentConfig, jitter_experiment,
                                  run_matrix, temporal_experiment)
from depthsample.scenes import gen_scene, gen_translating_sequence


def curve(rows, key, sampler):
    out = {}
    for r in rows:
        if r["sampler"] == sampler:
            out.setdefault(r[key], []).append(r["rmse_mm"])
    return {k: float(np.mean(v)) for k, v in sorted(out.items())}


def main():
    scenes = [gen_scene("piecewise-constant", 60, 80, s) for s in range(4)]
    cfg = ExperimentConfig(samplers=("sps", "random"),
                           reconstructors=("colorization",),
                           rates=(0.005,), seeds=(0, 1))

    base = run_matrix(scenes, cfg).aggregate()
    print("unperturbed mean rmse at 0.5% budget:")
    for row in base:
        if row["seed"] == 0:
            print(f"  {row['sampler']:<7s} {row['rmse_mm']:7.1f} mm")

    ranges = (0.0, 3.0, 7.0, 15.0)
    rows = jitter_experiment(scenes, ranges, cfg)
    print("\npointing jitter (samples displaced up to k px):")
    print(f"  {'k px':>6s}  {'sps rmse':>9s}  {'random rmse':>12s}")
    sps, rnd = curve(rows, "jitter_px", "sps"), curve(rows, "jitter_px", "random")
    for k in ranges:
        print(f"  {k:6.0f}  {sps[k]:9.1f}  {rnd[k]:12.1f}")

    seqs = [gen_translating_sequence(60, 80, 8, shift_px=2, seed=s) for s in range(3)]
    dts = tuple(range(5))
    acc = {dt: [] for dt in dts}
    for frames in seqs:
        for r in temporal_experiment(frames, dts, cfg):
            if r["sampler"] == "sps":
                acc[r["delta_t"]].append(r["rmse_mm"])
    print("\nmask staleness (positions from a frame delta_t ago, scene translating):")
    print(f"  {'delta_t':>8s}  {'sps rmse':>9s}")
    for dt in dts:
        print(f"  {dt:8d}  {float(np.mean(acc[dt])):9.1f}")


if __name__ == "__main__":
    main()
