"""SLIC superpixels, soft pixel-superpixel association, and adaptive sampling.

Superpixels are grown by localized k-means over (L, a, b, x, y) with the
combined distance

    d(p, s) = ||lab(p) - lab(s)||_2 + m * ||xy(p) - xy(s)||_2 / S

where S = sqrt(H * W / N) is the expected superpixel spacing and m trades
color fidelity against compactness.  On top of the hard segmentation this
module provides a softmax relaxation of the pixel-to-superpixel assignment,
the reconstruction loss that scores a soft assignment, and the adaptive
sampler that places one depth sample at the weighted center of every
superpixel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .imagedata import LabImage, RgbImage, SampleSet, nearest_pixel, rgb_to_lab
from .samplers import _lattice_dims

__all__ = [
    "DEFAULT_M",
    "Segmentation",
    "SoftAssociation",
    "SuperpixelSummary",
    "slic_init",
    "slic_iterate",
    "soft_association",
    "slic_loss",
    "centers",
    "sps_sample",
]

# default compactness weight on the spatial term of the combined distance
DEFAULT_M = 1.0

_FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])


@dataclass(frozen=True, eq=False)
class Segmentation:
    """Hard pixel labeling plus the seed state that produced it.

    ``seeds`` rows are (L, a, b, x, y); seed id s occupies slot
    (s // grid_cols, s % grid_cols) of the initialization lattice, which is
    what defines each pixel's 3x3 seed neighborhood for soft association.
    """

    labels: np.ndarray            # (H, W) int32
    seeds: np.ndarray             # (N, 5) float64
    step: float                   # expected spacing S
    grid_shape: tuple[int, int]   # seed lattice (rows, cols)

    @property
    def n_superpixels(self) -> int:
        return self.seeds.shape[0]

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]


@dataclass(frozen=True, eq=False)
class SoftAssociation:
    """Per-pixel softmax weights over the 3x3 seed neighborhood.

    ``seed_ids`` holds -1 in slots that fall off the seed lattice; the
    matching weight is zero and each pixel's remaining weights sum to 1.
    """

    weights: np.ndarray    # (H, W, 9) float64
    seed_ids: np.ndarray   # (H, W, 9) int32
    n_superpixels: int

    @property
    def height(self) -> int:
        return self.weights.shape[0]

    @property
    def width(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True, eq=False)
class SuperpixelSummary:
    """Weighted per-superpixel statistics: mean color, mass center, mass."""

    mean_lab: np.ndarray   # (N, 3)
    centers: np.ndarray    # (N, 2) (x, y)
    counts: np.ndarray     # (N,) member count or soft mass


def _combined_distance(lab_values: np.ndarray, xs: np.ndarray, ys: np.ndarray,
                       seed: np.ndarray, m: float, step: float) -> np.ndarray:
    """d = color norm + m * spatial norm / S against one seed row."""
    dc = np.sqrt(np.sum((lab_values - seed[:3]) ** 2, axis=-1))
    ds = np.sqrt((xs - seed[3]) ** 2 + (ys - seed[4]) ** 2)
    return dc + m * ds / step


def _assign(lab: LabImage, seeds: np.ndarray, step: float, m: float,
            prev_labels: np.ndarray | None) -> np.ndarray:
    """One localized assignment sweep: each seed claims pixels in its window.

    Seeds search a 2S x 2S window around their current position; a pixel
    takes the seed with the strictly smallest combined distance, so on ties
    the lower seed id wins.  Pixels outside every window keep their previous
    label (or fall back to a global nearest-seed pass on the first sweep).
    """
    h, w = lab.height, lab.width
    values = lab.values
    best = np.full((h, w), np.inf)
    labels = np.full((h, w), -1, dtype=np.int32) if prev_labels is None else prev_labels.copy()
    half = max(1, int(math.ceil(step)))
    for s, row in enumerate(seeds):
        cx, cy = int(nearest_pixel(row[3])), int(nearest_pixel(row[4]))
        x0, x1 = max(0, cx - half), min(w - 1, cx + half)
        y0, y1 = max(0, cy - half), min(h - 1, cy + half)
        if x1 < x0 or y1 < y0:
            continue
        xs, ys = np.meshgrid(np.arange(x0, x1 + 1), np.arange(y0, y1 + 1))
        d = _combined_distance(values[y0:y1 + 1, x0:x1 + 1], xs, ys, row, m, step)
        win_best = best[y0:y1 + 1, x0:x1 + 1]
        better = d < win_best
        win_best[better] = d[better]
        labels[y0:y1 + 1, x0:x1 + 1][better] = s

    missed = labels < 0
    if np.any(missed):
        ys, xs = np.nonzero(missed)
        pix = values[ys, xs]
        d_all = np.empty((len(ys), len(seeds)))
        for s, row in enumerate(seeds):
            d_all[:, s] = _combined_distance(pix, xs, ys, row, m, step)
        labels[ys, xs] = np.argmin(d_all, axis=1)
    return labels


def _update_seeds(labels: np.ndarray, lab: LabImage, seeds_old: np.ndarray) -> np.ndarray:
    """Move every seed to the mean (L, a, b, x, y) of its members.

    A superpixel that lost all pixels keeps its previous seed row.
    """
    n = seeds_old.shape[0]
    h, w = labels.shape
    flat = labels.ravel()
    counts = np.bincount(flat, minlength=n).astype(np.float64)
    xs, ys = np.meshgrid(np.arange(w), np.arange(h))
    seeds = seeds_old.copy()
    cols = [lab.values[:, :, 0], lab.values[:, :, 1], lab.values[:, :, 2], xs, ys]
    filled = counts > 0
    for k, channel in enumerate(cols):
        sums = np.bincount(flat, weights=channel.ravel(), minlength=n)
        seeds[filled, k] = sums[filled] / counts[filled]
    return seeds


def _enforce_connectivity(labels: np.ndarray, n: int) -> np.ndarray:
    """Keep only the largest 4-connected component of every label.

    Each orphan component is relabeled to whichever adjacent label currently
    owns the most pixels (ties to the smaller label id); orphans are processed
    in (label, component) order so the result is deterministic.
    """
    labels = labels.copy()
    h, w = labels.shape
    orphans = []
    for s in range(n):
        mask = labels == s
        if not mask.any():
            continue
        comps, ncomp = ndimage.label(mask, structure=_FOUR_CONNECTED)
        if ncomp <= 1:
            continue
        sizes = np.bincount(comps.ravel())
        main = int(np.argmax(sizes[1:])) + 1
        for c in range(1, ncomp + 1):
            if c != main:
                orphans.append(np.nonzero(comps == c))

    if not orphans:
        return labels
    counts = np.bincount(labels.ravel(), minlength=n)
    for ys, xs in orphans:
        neigh = set()
        own = labels[ys[0], xs[0]]
        for dy, dx in ((0, 1), (1, 0), (0, -1), (-1, 0)):
            ny, nx = ys + dy, xs + dx
            ok = (ny >= 0) & (ny < h) & (nx >= 0) & (nx < w)
            neigh.update(np.unique(labels[ny[ok], nx[ok]]).tolist())
        neigh.discard(int(own))
        if not neigh:  # the whole image is one label; nothing to merge into
            continue
        target = max(neigh, key=lambda t: (counts[t], -t))
        counts[own] -= len(ys)
        counts[target] += len(ys)
        labels[ys, xs] = target
    return labels


def _fill_empty(labels: np.ndarray, seeds: np.ndarray) -> np.ndarray:
    """Guarantee every label id owns at least one pixel.

    An empty superpixel steals the pixel nearest its seed from any label
    that can spare one.  This can split the donor, which is tolerated: the
    partition and non-emptiness invariants are the ones that matter downstream.
    """
    n = seeds.shape[0]
    counts = np.bincount(labels.ravel(), minlength=n)
    empty = np.nonzero(counts == 0)[0]
    if len(empty) == 0:
        return labels
    labels = labels.copy()
    h, w = labels.shape
    xs, ys = np.meshgrid(np.arange(w), np.arange(h))
    for s in empty:
        donors = counts[labels] >= 2
        d2 = (xs - seeds[s, 3]) ** 2 + (ys - seeds[s, 4]) ** 2
        d2 = np.where(donors, d2, np.inf)
        flat = int(np.argmin(d2))
        py, px = divmod(flat, w)
        counts[labels[py, px]] -= 1
        labels[py, px] = s
        counts[s] += 1
    return labels


def slic_init(lab: LabImage, n_superpixels: int, seed: int = 0,
              m: float = DEFAULT_M) -> Segmentation:
    """Seed a segmentation on a regular lattice and assign initial labels.

    Seeds sit at the centers of an approximately square lattice (trailing
    lattice points are dropped in scan order when it overshoots), then each
    seed moves to the lowest-gradient pixel of its 3x3 neighborhood so seeds
    avoid edges; gradient ties keep the original position.  Initial labels
    come from one localized assignment sweep.  Initialization is
    deterministic; ``seed`` only keeps the call shape of the samplers.
    """
    h, w = lab.height, lab.width
    if n_superpixels < 1 or n_superpixels > h * w:
        raise ValueError(f"cannot place {n_superpixels} superpixels in a {h}x{w} image")
    del seed
    step = math.sqrt(h * w / n_superpixels)
    rows, cols = _lattice_dims(n_superpixels, h, w)
    sy = nearest_pixel((np.arange(rows) + 0.5) * h / rows)
    sx = nearest_pixel((np.arange(cols) + 0.5) * w / cols)

    # forward-difference gradient magnitude in Lab space
    dx = np.zeros((h, w))
    dy = np.zeros((h, w))
    dx[:, :-1] = np.sum((lab.values[:, 1:] - lab.values[:, :-1]) ** 2, axis=-1)
    dy[:-1, :] = np.sum((lab.values[1:, :] - lab.values[:-1, :]) ** 2, axis=-1)
    grad = np.sqrt(dx + dy)

    seeds = np.empty((n_superpixels, 5))
    idx = 0
    for y in sy:
        for x in sx:
            if idx == n_superpixels:
                break
            cx, cy = int(x), int(y)
            bx, by, best = cx, cy, grad[cy, cx]
            for ny in range(max(0, cy - 1), min(h, cy + 2)):
                for nx in range(max(0, cx - 1), min(w, cx + 2)):
                    if grad[ny, nx] < best:
                        bx, by, best = nx, ny, grad[ny, nx]
            seeds[idx] = (*lab.values[by, bx], bx, by)
            idx += 1

    labels = _assign(lab, seeds, step, m, prev_labels=None)
    return Segmentation(labels.astype(np.int32), seeds, step, (rows, cols))


def slic_iterate(seg: Segmentation, lab: LabImage, m: float = DEFAULT_M,
                 iters: int = 10) -> Segmentation:
    """Run localized k-means sweeps, then enforce connectivity.

    Each sweep reassigns pixels within every seed's 2S x 2S window and moves
    seeds to their member means.  Afterwards every label is reduced to its
    largest 4-connected component (orphans merge into their dominant
    neighbor) and empty labels are repopulated, so the result is a partition
    with every superpixel id non-empty.
    """
    if iters < 0:
        raise ValueError(f"iters must be non-negative, got {iters}")
    labels, seeds = seg.labels, seg.seeds
    for _ in range(iters):
        labels = _assign(lab, seeds, seg.step, m, prev_labels=labels)
        seeds = _update_seeds(labels, lab, seeds)
    labels = _enforce_connectivity(labels, seg.n_superpixels)
    labels = _fill_empty(labels, seeds)
    return Segmentation(labels.astype(np.int32), seeds, seg.step, seg.grid_shape)


_NEIGHBOR_OFFSETS = [(dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1)]


def soft_association(seg: Segmentation, lab: LabImage, m: float = DEFAULT_M,
                     tau: float = 1.0) -> SoftAssociation:
    """Softmax relaxation of the hard assignment over 3x3 seed neighborhoods.

    Every pixel belongs to a cell of the initialization lattice; its
    candidate superpixels are the (up to) nine seeds of the surrounding 3x3
    cells and the weights are softmax(-d(p, s) / tau) over those candidates.
    The maximum exponent is subtracted before exponentiation so small ``tau``
    concentrates weight without overflow.
    """
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    h, w = lab.height, lab.width
    rows, cols = seg.grid_shape
    n = seg.n_superpixels
    cell_h, cell_w = h / rows, w / cols
    ys, xs = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    cr = np.clip((ys / cell_h).astype(np.int64), 0, rows - 1)
    cc = np.clip((xs / cell_w).astype(np.int64), 0, cols - 1)

    ids = np.full((h, w, 9), -1, dtype=np.int32)
    score = np.full((h, w, 9), -np.inf)
    for slot, (dr, dc) in enumerate(_NEIGHBOR_OFFSETS):
        r, c = cr + dr, cc + dc
        inside = (r >= 0) & (r < rows) & (c >= 0) & (c < cols)
        sid = np.where(inside, r * cols + c, 0)
        present = inside & (sid < n)
        sid = np.where(present, sid, 0)
        seed_rows = seg.seeds[sid]
        dcol = np.sqrt(np.sum((lab.values - seed_rows[:, :, :3]) ** 2, axis=-1))
        dsp = np.sqrt((xs - seed_rows[:, :, 3]) ** 2 + (ys - seed_rows[:, :, 4]) ** 2)
        d = dcol + m * dsp / seg.step
        ids[:, :, slot] = np.where(present, sid, -1)
        score[:, :, slot] = np.where(present, -d / tau, -np.inf)

    score -= score.max(axis=2, keepdims=True)
    weights = np.where(ids >= 0, np.exp(score), 0.0)
    weights /= weights.sum(axis=2, keepdims=True)
    return SoftAssociation(weights, ids, n)


def centers(assoc_or_seg, lab: LabImage) -> SuperpixelSummary:
    """Weighted mean color and mass center of every superpixel.

    Accepts either a hard :class:`Segmentation` (weights are 0/1 and an empty
    superpixel reports its seed state) or a :class:`SoftAssociation` (weights
    are the soft assignment; every id must carry positive mass).
    """
    h, w = lab.height, lab.width
    xs, ys = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    channels = [lab.values[:, :, 0], lab.values[:, :, 1], lab.values[:, :, 2], xs, ys]

    if isinstance(assoc_or_seg, Segmentation):
        seg = assoc_or_seg
        flat = seg.labels.ravel()
        n = seg.n_superpixels
        mass = np.bincount(flat, minlength=n).astype(np.float64)
        sums = [np.bincount(flat, weights=ch.ravel(), minlength=n) for ch in channels]
        filled = mass > 0
        out = np.column_stack([
            np.where(filled, np.divide(s, mass, out=np.zeros_like(s), where=filled), 0.0)
            for s in sums
        ])
        out[~filled] = seg.seeds[~filled]
        return SuperpixelSummary(out[:, :3], out[:, 3:5], mass)

    assoc: SoftAssociation = assoc_or_seg
    n = assoc.n_superpixels
    ids = assoc.seed_ids.reshape(-1, 9)
    wts = assoc.weights.reshape(-1, 9)
    keep = ids.ravel() >= 0
    flat_ids = ids.ravel()[keep]
    flat_wts = wts.ravel()[keep]
    mass = np.bincount(flat_ids, weights=flat_wts, minlength=n)
    if np.any(mass <= 0):
        raise ValueError("soft association leaves a superpixel with zero mass")
    stats = []
    for ch in channels:
        contrib = (wts * ch.reshape(-1, 1)).ravel()[keep]
        stats.append(np.bincount(flat_ids, weights=contrib, minlength=n) / mass)
    out = np.column_stack(stats)
    return SuperpixelSummary(out[:, :3], out[:, 3:5], mass)


def slic_loss(assoc: SoftAssociation, lab: LabImage, m: float = DEFAULT_M) -> float:
    """Reconstruction loss of a soft assignment.

    Superpixel statistics (mean color u_s and mass center l_s) are formed
    from the soft weights, every pixel is then reconstructed as the weighted
    blend of its neighborhood's statistics, and the loss accumulates

        sum_p ||lab(p) - lab'(p)||_2 + m * ||xy(p) - xy'(p)||_2.

    A segmentation that respects color and spatial coherence scores low.
    """
    h, w = lab.height, lab.width
    summary = centers(assoc, lab)
    ids = assoc.seed_ids
    wts = assoc.weights
    safe_ids = np.where(ids >= 0, ids, 0)

    u = summary.mean_lab[safe_ids]            # (H, W, 9, 3)
    c = summary.centers[safe_ids]             # (H, W, 9, 2)
    lab_recon = np.sum(wts[..., None] * u, axis=2)
    xy_recon = np.sum(wts[..., None] * c, axis=2)

    xs, ys = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    color_err = np.sqrt(np.sum((lab.values - lab_recon) ** 2, axis=-1))
    spatial_err = np.sqrt((xs - xy_recon[:, :, 0]) ** 2 + (ys - xy_recon[:, :, 1]) ** 2)
    return float(np.sum(color_err + m * spatial_err))


def sps_sample(img: RgbImage, n_samples: int, m: float = DEFAULT_M,
               iters: int = 10, seed: int = 0,
               return_segmentation: bool = False):
    """Adaptive sampling: one depth sample per superpixel, at its mass center.

    Runs SLIC on the image, takes each superpixel's member mass center, and
    snaps any center that falls outside its own (possibly non-convex) region
    to the nearest member pixel.  Locations are ordered by superpixel id.
    With ``return_segmentation`` the result is a ``(samples, segmentation)``
    pair so callers can inspect or dump the labeling that drove placement.
    """
    lab = rgb_to_lab(img)
    seg = slic_iterate(slic_init(lab, n_samples, seed, m), lab, m, iters)
    summary = centers(seg, lab)
    locs = summary.centers.copy()
    for s in range(n_samples):
        px = int(nearest_pixel(locs[s, 0]))
        py = int(nearest_pixel(locs[s, 1]))
        if seg.labels[py, px] == s:
            continue
        ys, xs = np.nonzero(seg.labels == s)
        if len(ys) == 0:  # cannot happen after iterate; guard for raw inits
            continue
        d2 = (xs - locs[s, 0]) ** 2 + (ys - locs[s, 1]) ** 2
        best = int(np.argmin(d2))
        locs[s] = (xs[best], ys[best])
    samples = SampleSet(locs)
    if return_segmentation:
        return samples, seg
    return samples
