"""Baseline sampling-mask generators and location rasterization.

Three RGB-independent baselines (uniform random, regular grid, Poisson disk)
plus the bridge from continuous sample locations to a binary pixel mask.
Every generator returns exactly the requested number of samples and is
deterministic for a given seed.
"""
from __future__ import annotations

import math

import numpy as np

from .imagedata import DepthMap, SampleSet, SamplingMask, apply_mask, nearest_pixel

__all__ = [
    "CapacityError",
    "target_count",
    "random_mask",
    "grid_mask",
    "poisson_mask",
    "locations_to_mask",
    "apply_mask",
]


class CapacityError(ValueError):
    """More samples requested than the image has pixels."""


def _check_capacity(n_samples: int, height: int, width: int) -> None:
    if n_samples < 1:
        raise ValueError(f"need at least one sample, got {n_samples}")
    if n_samples > height * width:
        raise CapacityError(f"{n_samples} samples do not fit in a {height}x{width} image")


def target_count(rate: float, height: int, width: int) -> int:
    """Number of samples for a sampling rate: round(rate * H * W), at least 1.

    ``rate`` is the fraction of pixels that receive a depth measurement,
    e.g. 0.0025 for 0.25%.  Halves round up.
    """
    if rate <= 0:
        raise ValueError(f"sampling rate must be positive, got {rate}")
    if height < 1 or width < 1:
        raise ValueError("image dimensions must be positive")
    n = int(math.floor(rate * height * width + 0.5))
    return max(1, min(n, height * width))


def random_mask(height: int, width: int, n_samples: int, seed: int) -> SamplingMask:
    """Uniform random mask: ``n_samples`` distinct pixels, no replacement."""
    _check_capacity(n_samples, height, width)
    rng = np.random.default_rng(seed)
    flat = rng.choice(height * width, size=n_samples, replace=False)
    bits = np.zeros(height * width, dtype=bool)
    bits[flat] = True
    return SamplingMask(bits.reshape(height, width))


def _lattice_dims(n: int, height: int, width: int) -> tuple[int, int]:
    """Rows and cols of an approximately square lattice holding >= n points.

    rows = round(sqrt(n * H / W)) matches the image aspect ratio; cols then
    covers the remainder.  Both are clamped so cells are at least one pixel.
    """
    rows = int(math.floor(math.sqrt(n * height / width) + 0.5))
    rows = min(max(rows, 1), height)
    cols = math.ceil(n / rows)
    if cols > width:
        cols = width
        rows = math.ceil(n / cols)
    return rows, cols


def grid_mask(height: int, width: int, n_samples: int) -> SamplingMask:
    """Regular grid mask with approximately square cells.

    The lattice has half-step margins so samples sit at cell centers.  When
    it holds more than ``n_samples`` points, trailing points in row-major
    scan order are dropped.
    """
    _check_capacity(n_samples, height, width)
    rows, cols = _lattice_dims(n_samples, height, width)
    ys = nearest_pixel((np.arange(rows) + 0.5) * height / rows)
    xs = nearest_pixel((np.arange(cols) + 0.5) * width / cols)
    bits = np.zeros((height, width), dtype=bool)
    taken = 0
    for y in ys:
        for x in xs:
            if taken == n_samples:
                break
            bits[y, x] = True
            taken += 1
    return SamplingMask(bits)


# ---------------------------------------------------------------------------
# Poisson disk (Bridson dart throwing plus bisection on the radius)
# ---------------------------------------------------------------------------

_BRIDSON_ATTEMPTS = 30


def _bridson(height: int, width: int, radius: float, rng: np.random.Generator,
             stop_at: int | None) -> np.ndarray:
    """Grow a Poisson-disk set of pixel locations with min spacing ``radius``.

    Standard Bridson dart throwing: keep an active list, propose up to 30
    candidates in the [r, 2r] annulus around a random active point, snap each
    candidate to its nearest pixel, and accept it if no kept point lies closer
    than ``radius``.  A background grid of cell size r/sqrt(2) limits the
    neighborhood test to nearby cells.  Generation halts early once ``stop_at``
    points exist (the bisection probes only need feasibility).
    """
    cell = radius / math.sqrt(2.0)
    grid_w = int(math.ceil(width / cell))
    grid_h = int(math.ceil(height / cell))
    buckets: dict[tuple[int, int], list[int]] = {}
    points: list[tuple[int, int]] = []
    r2 = radius * radius

    def bucket_of(px: int, py: int) -> tuple[int, int]:
        return (min(int(py / cell), grid_h - 1), min(int(px / cell), grid_w - 1))

    def far_enough(px: int, py: int) -> bool:
        by, bx = bucket_of(px, py)
        for ny in range(max(0, by - 2), min(grid_h, by + 3)):
            for nx in range(max(0, bx - 2), min(grid_w, bx + 3)):
                for idx in buckets.get((ny, nx), ()):
                    qx, qy = points[idx]
                    if (px - qx) ** 2 + (py - qy) ** 2 < r2:
                        return False
        return True

    def push(px: int, py: int) -> None:
        points.append((px, py))
        buckets.setdefault(bucket_of(px, py), []).append(len(points) - 1)

    x0 = int(nearest_pixel(rng.uniform(0, width - 1)))
    y0 = int(nearest_pixel(rng.uniform(0, height - 1)))
    push(x0, y0)
    active = [0]

    while active and (stop_at is None or len(points) < stop_at):
        slot = int(rng.integers(len(active)))
        ax, ay = points[active[slot]]
        placed = False
        for _ in range(_BRIDSON_ATTEMPTS):
            rho = rng.uniform(radius, 2 * radius)
            theta = rng.uniform(0.0, 2.0 * math.pi)
            px = int(nearest_pixel(ax + rho * math.cos(theta)))
            py = int(nearest_pixel(ay + rho * math.sin(theta)))
            if not (0 <= px < width and 0 <= py < height):
                continue
            if far_enough(px, py):
                push(px, py)
                active.append(len(points) - 1)
                placed = True
                break
        if not placed:
            # swap-pop keeps removal O(1) and fully deterministic
            active[slot] = active[-1]
            active.pop()

    return np.array(points, dtype=np.int64).reshape(-1, 2)


def poisson_mask(height: int, width: int, n_samples: int, seed: int,
                 return_radius: bool = False):
    """Poisson-disk mask with exactly ``n_samples`` pixels.

    Bisects on the disk radius to find the largest spacing at which Bridson
    dart throwing still yields at least ``n_samples`` points, regenerates the
    full saturated set at that radius, and trims it uniformly at random down
    to the requested count.  With ``return_radius`` the achieved minimum
    spacing is returned alongside the mask; no two sampled pixels lie closer
    than that radius.
    """
    _check_capacity(n_samples, height, width)
    lo, hi = 1.0, 2.0 * math.sqrt(height * width / n_samples) + 1.0
    best_r = None
    best_iter = None
    for it in range(20):
        mid = 0.5 * (lo + hi)
        rng = np.random.default_rng([seed, it])
        pts = _bridson(height, width, mid, rng, stop_at=n_samples)
        if len(pts) >= n_samples:
            lo = mid
            best_r, best_iter = mid, it
        else:
            hi = mid

    if best_r is None:
        # radius 1 only excludes duplicate pixels; it is always feasible at
        # the sparse densities this sampler is meant for
        best_r, best_iter = 1.0, 20
    rng = np.random.default_rng([seed, best_iter])
    pts = _bridson(height, width, best_r, rng, stop_at=None)
    if len(pts) < n_samples:
        raise RuntimeError(
            f"poisson sampling saturated at {len(pts)} < {n_samples} points; "
            "the image is too small for this budget")
    if len(pts) > n_samples:
        keep = np.sort(rng.choice(len(pts), size=n_samples, replace=False))
        pts = pts[keep]

    bits = np.zeros((height, width), dtype=bool)
    bits[pts[:, 1], pts[:, 0]] = True
    mask = SamplingMask(bits)
    return (mask, best_r) if return_radius else mask


# ---------------------------------------------------------------------------
# continuous locations -> pixel mask
# ---------------------------------------------------------------------------


def _ring_offsets(rho: int) -> list[tuple[int, int]]:
    """Offsets of the Chebyshev ring at distance ``rho``, nearest first.

    The ring is listed axis cells first (E, S, W, N), then the corner
    diagonals (NE, SE, SW, NW), then the remaining edge cells walking outward
    from the axes; a stable sort by Euclidean length then puts nearer cells
    first while ties keep that documented order.
    """
    seq = [(rho, 0), (0, rho), (-rho, 0), (0, -rho)]
    seq += [(rho, -rho), (rho, rho), (-rho, rho), (-rho, -rho)]
    for k in range(1, rho):
        seq += [(rho, -k), (rho, k), (k, rho), (-k, rho),
                (-rho, k), (-rho, -k), (-k, -rho), (k, -rho)]
    seq.sort(key=lambda o: o[0] * o[0] + o[1] * o[1])
    return seq


def locations_to_mask(samples: SampleSet | np.ndarray, height: int,
                      width: int) -> SamplingMask:
    """Rasterize continuous sample locations into a binary mask.

    Each location rounds to its nearest pixel (ties toward the smaller
    index).  When two locations land on the same pixel, the later one moves
    to the nearest free pixel found by searching Chebyshev rings of growing
    radius, so the mask always holds exactly ``len(samples)`` pixels.
    ``samples`` may be a :class:`SampleSet` or a bare (N, 2) array of (x, y).
    """
    loc = samples.locations if isinstance(samples, SampleSet) else \
        np.asarray(samples, dtype=np.float64)
    n = len(loc)
    _check_capacity(n, height, width)
    if np.any(loc[:, 0] < 0) or np.any(loc[:, 0] > width - 1) \
            or np.any(loc[:, 1] < 0) or np.any(loc[:, 1] > height - 1):
        raise ValueError("sample locations fall outside the image bounds")

    bits = np.zeros((height, width), dtype=bool)
    px = nearest_pixel(loc[:, 0])
    py = nearest_pixel(loc[:, 1])
    for x, y in zip(px, py):
        if not bits[y, x]:
            bits[y, x] = True
            continue
        placed = False
        for rho in range(1, max(height, width)):
            for dx, dy in _ring_offsets(rho):
                cx, cy = x + dx, y + dy
                if 0 <= cx < width and 0 <= cy < height and not bits[cy, cx]:
                    bits[cy, cx] = True
                    placed = True
                    break
            if placed:
                break
        if not placed:  # pragma: no cover - capacity check rules this out
            raise CapacityError("no free pixel left for a colliding sample")
    return SamplingMask(bits)
