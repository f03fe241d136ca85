"""Dense depth reconstruction from sparse samples, guided by the RGB image.

The flagship reconstructor follows the classic colorization approach: every
unknown pixel should equal the affinity-weighted average of its 8-neighbors,
with affinities from color similarity, and sampled pixels act as hard
constraints.  Because the row-normalized affinities come from a symmetric
Gaussian kernel, that linear system is equivalent to the reduced graph
Laplacian system, which is symmetric positive definite and solved here with
a Jacobi-preconditioned conjugate gradient.

Two simpler baselines round out the module: exact nearest-valid-sample
lookup and a radius-limited joint bilateral filter.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse as sp

from .imagedata import DepthMap, LabImage

__all__ = [
    "AffinityGraph",
    "SolverConfig",
    "ColorizationResult",
    "build_affinity",
    "colorization_reconstruct",
    "nn_reconstruct",
    "bilateral_reconstruct",
]

_OFFSETS_8 = [(dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1) if (dy, dx) != (0, 0)]


@dataclass(frozen=True, eq=False)
class AffinityGraph:
    """Row-normalized color affinities over the 8-neighbor pixel graph.

    ``weights`` is an (H*W, H*W) CSR matrix whose rows sum to 1; ``degrees``
    keeps the unnormalized Gaussian row sums so the symmetric Laplacian can
    be recovered (raw = diag(degrees) @ weights).
    """

    weights: sp.csr_matrix
    degrees: np.ndarray
    height: int
    width: int


@dataclass(frozen=True)
class SolverConfig:
    """Color bandwidth and conjugate-gradient stopping rule."""

    sigma_c: float = 10.0
    tol: float = 1e-6
    max_iters: int = 20000


@dataclass(frozen=True, eq=False)
class ColorizationResult:
    """Dense reconstruction plus the solver's convergence report."""

    depth: DepthMap
    converged: bool
    iterations: int
    residual: float


def build_affinity(lab: LabImage, sigma_c: float = 10.0) -> AffinityGraph:
    """Gaussian color affinities between 8-neighbors, row-normalized.

    w_ij = exp(-||lab_i - lab_j||^2 / (2 sigma_c^2)) for neighboring pixels,
    then each row is divided by its sum.  The raw kernel is symmetric; the
    normalization is what makes rows stochastic (and the matrix asymmetric).
    """
    if sigma_c <= 0:
        raise ValueError(f"sigma_c must be positive, got {sigma_c}")
    h, w = lab.height, lab.width
    n = h * w
    idx = np.arange(n).reshape(h, w)
    rows, cols, vals = [], [], []
    for dy, dx in _OFFSETS_8:
        ys0, ys1 = max(0, -dy), min(h, h - dy)
        xs0, xs1 = max(0, -dx), min(w, w - dx)
        src = idx[ys0:ys1, xs0:xs1]
        dst = idx[ys0 + dy:ys1 + dy, xs0 + dx:xs1 + dx]
        diff = lab.values[ys0:ys1, xs0:xs1] - lab.values[ys0 + dy:ys1 + dy, xs0 + dx:xs1 + dx]
        wgt = np.exp(-np.sum(diff * diff, axis=-1) / (2.0 * sigma_c * sigma_c))
        rows.append(src.ravel())
        cols.append(dst.ravel())
        vals.append(wgt.ravel())
    raw = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )
    degrees = np.asarray(raw.sum(axis=1)).ravel()
    normalized = sp.diags(1.0 / degrees) @ raw
    return AffinityGraph(normalized.tocsr(), degrees, h, w)


def _jacobi_cg(A: sp.csr_matrix, b: np.ndarray, x0: np.ndarray,
               tol: float, max_iters: int) -> tuple[np.ndarray, bool, int, float]:
    """Preconditioned conjugate gradient for an SPD sparse system.

    Stops when ||b - A x|| <= tol * ||b||.  The residual is recomputed from
    scratch every 50 iterations to curb floating-point drift.
    """
    diag = A.diagonal()
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return np.zeros_like(b), True, 0, 0.0
    x = x0.copy()
    r = b - A @ x
    z = r / diag
    p = z.copy()
    rz = float(r @ z)
    for it in range(1, max_iters + 1):
        Ap = A @ p
        alpha = rz / float(p @ Ap)
        x += alpha * p
        if it % 50 == 0:
            r = b - A @ x
        else:
            r -= alpha * Ap
        res = float(np.linalg.norm(r))
        if res <= tol * b_norm:
            return x, True, it, res / b_norm
        z = r / diag
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, False, max_iters, float(np.linalg.norm(b - A @ x)) / b_norm


def nn_reconstruct(sparse_depth: DepthMap) -> DepthMap:
    """Assign every pixel the depth of its nearest valid sample, exactly.

    Distances are Euclidean between pixel centers; ties go to the sample
    with the smaller index in row-major scan order.  Computed with exact
    integer squared distances, so tie handling has no float ambiguity.
    """
    ys, xs = np.nonzero(sparse_depth.valid)
    if len(ys) == 0:
        raise ValueError("cannot reconstruct from a depth map with no valid samples")
    values = sparse_depth.depth[ys, xs]
    h, w = sparse_depth.height, sparse_depth.width
    out = np.empty(h * w)
    px, py = np.meshgrid(np.arange(w, dtype=np.int64), np.arange(h, dtype=np.int64))
    px, py = px.ravel(), py.ravel()
    chunk = max(1, 2_000_000 // max(1, len(ys)))
    for start in range(0, h * w, chunk):
        end = min(start + chunk, h * w)
        d2 = (px[start:end, None] - xs) ** 2 + (py[start:end, None] - ys) ** 2
        out[start:end] = values[np.argmin(d2, axis=1)]
    return DepthMap(out.reshape(h, w), np.ones((h, w), dtype=bool))


def colorization_reconstruct(lab: LabImage, sparse_depth: DepthMap,
                             cfg: SolverConfig = SolverConfig()) -> ColorizationResult:
    """Propagate sparse depth through color affinities to a dense map.

    Solves d_i = sum_j w_ij d_j at every unknown pixel with sampled pixels
    held fixed.  Multiplying those equations by the Gaussian row sums turns
    them into the reduced Laplacian system L_UU x = Wraw_UC d_C, which is
    symmetric positive definite; a Jacobi-preconditioned CG warm-started
    from the nearest-sample reconstruction solves it.  Sampled pixels pass
    through bit-exactly, and since the solution is a convex combination of
    the samples it obeys their min/max (up to solver tolerance).
    """
    if (lab.height, lab.width) != (sparse_depth.height, sparse_depth.width):
        raise ValueError("image and depth dimensions differ")
    constrained = sparse_depth.valid.ravel()
    if not constrained.any():
        raise ValueError("cannot reconstruct from a depth map with no valid samples")
    h, w = lab.height, lab.width
    if constrained.all():
        return ColorizationResult(sparse_depth, True, 0, 0.0)

    graph = build_affinity(lab, cfg.sigma_c)
    raw = sp.diags(graph.degrees) @ graph.weights   # symmetric Gaussian kernel
    lap = sp.diags(graph.degrees) - raw
    unknown = ~constrained
    d_c = sparse_depth.depth.ravel()[constrained]
    A = lap[unknown][:, unknown].tocsr()
    b = np.asarray(raw[unknown][:, constrained] @ d_c).ravel()

    x0 = nn_reconstruct(sparse_depth).depth.ravel()[unknown]
    x, converged, iters, residual = _jacobi_cg(A, b, x0, cfg.tol, cfg.max_iters)

    full = sparse_depth.depth.ravel().copy()
    # The exact solution is a convex combination of the samples, so clipping
    # the approximate one to their range only ever moves it closer to exact.
    full[unknown] = np.clip(x, d_c.min(), d_c.max())
    dense = DepthMap(full.reshape(h, w), np.ones((h, w), dtype=bool))
    return ColorizationResult(dense, converged, iters, residual)


def bilateral_reconstruct(lab: LabImage, sparse_depth: DepthMap,
                          sigma_s: float | None = None, sigma_c: float = 10.0,
                          radius: float | None = None) -> DepthMap:
    """Joint bilateral splat of the samples: spatial times color Gaussian.

    Every sample spreads its depth to pixels within ``radius`` (default three
    spatial sigmas; sigma_s defaults to half the expected sample spacing).
    Pixels no sample reaches fall back to the nearest-sample value.
    """
    if (lab.height, lab.width) != (sparse_depth.height, sparse_depth.width):
        raise ValueError("image and depth dimensions differ")
    ys, xs = np.nonzero(sparse_depth.valid)
    if len(ys) == 0:
        raise ValueError("cannot reconstruct from a depth map with no valid samples")
    h, w = lab.height, lab.width
    if sigma_s is None:
        sigma_s = 0.5 * math.sqrt(h * w / len(ys))
    if sigma_s <= 0 or sigma_c <= 0:
        raise ValueError("bilateral sigmas must be positive")
    if radius is None:
        radius = 3.0 * sigma_s
    r_int = max(1, int(math.ceil(radius)))

    num = np.zeros((h, w))
    den = np.zeros((h, w))
    values = sparse_depth.depth[ys, xs]
    inv_2ss = 1.0 / (2.0 * sigma_s * sigma_s)
    inv_2sc = 1.0 / (2.0 * sigma_c * sigma_c)
    for sy, sx, val in zip(ys, xs, values):
        y0, y1 = max(0, sy - r_int), min(h - 1, sy + r_int)
        x0, x1 = max(0, sx - r_int), min(w - 1, sx + r_int)
        wy, wx = np.meshgrid(np.arange(y0, y1 + 1), np.arange(x0, x1 + 1), indexing="ij")
        d2 = (wy - sy) ** 2 + (wx - sx) ** 2
        disk = d2 <= radius * radius
        cdiff = lab.values[y0:y1 + 1, x0:x1 + 1] - lab.values[sy, sx]
        wgt = np.exp(-d2 * inv_2ss - np.sum(cdiff * cdiff, axis=-1) * inv_2sc)
        wgt = np.where(disk, wgt, 0.0)
        num[y0:y1 + 1, x0:x1 + 1] += wgt * val
        den[y0:y1 + 1, x0:x1 + 1] += wgt

    covered = den > 0
    out = np.zeros((h, w))
    out[covered] = num[covered] / den[covered]
    if not covered.all():
        fallback = nn_reconstruct(sparse_depth).depth
        out[~covered] = fallback[~covered]
    return DepthMap(out, np.ones((h, w), dtype=bool))
