"""Guided reconstruction: affinities, the propagation solver, and baselines."""
import numpy as np
import pytest

from depthsample.imagedata import DepthMap, LabImage, RgbImage, rgb_to_lab
from depthsample.reconstruct import (
    SolverConfig,
    bilateral_reconstruct,
    build_affinity,
    colorization_reconstruct,
    nn_reconstruct,
)


def _uniform_lab(h, w, value=128):
    return rgb_to_lab(RgbImage(np.full((h, w, 3), value, dtype=np.uint8)))


def _random_lab(h, w, seed):
    rng = np.random.default_rng(seed)
    return rgb_to_lab(RgbImage(rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)))


def _sparse(depth, mask):
    depth = np.asarray(depth, dtype=np.float64)
    return DepthMap(np.where(mask, depth, 0.0), np.asarray(mask, dtype=bool))


# ---------------------------------------------------------------- affinity

def test_affinity_uniform_image_spreads_evenly():
    g = build_affinity(_uniform_lab(4, 5))
    w = g.weights.toarray()
    assert np.allclose(w.sum(axis=1), 1.0, atol=1e-12)
    # corner pixels have 3 neighbors, edges 5, interior 8
    assert np.allclose(sorted(w[0][w[0] > 0]), [1 / 3] * 3)
    assert np.allclose(sorted(w[1][w[1] > 0]), [1 / 5] * 5)
    assert np.allclose(sorted(w[6][w[6] > 0]), [1 / 8] * 8)


def test_affinity_center_outlier_matches_hand_gaussian():
    pix = np.full((3, 3, 3), 200, dtype=np.uint8)
    pix[1, 1] = (0, 0, 0)
    lab = rgb_to_lab(RgbImage(pix))
    sigma = 10.0
    g = build_affinity(lab, sigma_c=sigma)
    w_center = g.weights.toarray()[4]
    diff2 = float(np.sum((lab.values[1, 1] - lab.values[0, 0]) ** 2))
    raw = np.exp(-diff2 / (2 * sigma * sigma))
    want = raw / (8 * raw)  # all 8 neighbors are equally dissimilar
    neigh = w_center[w_center > 0]
    assert len(neigh) == 8
    assert np.allclose(neigh, want, rtol=1e-10)


def test_affinity_positive_and_structurally_symmetric():
    g = build_affinity(_random_lab(5, 6, 1))
    w = g.weights.tocoo()
    assert (w.data > 0).all()
    links = set(zip(w.row.tolist(), w.col.tolist()))
    assert all((j, i) in links for i, j in links)


def test_affinity_rejects_bad_bandwidth():
    with pytest.raises(ValueError):
        build_affinity(_uniform_lab(3, 3), sigma_c=0.0)


# ---------------------------------------------------------------- colorization

def test_constant_samples_propagate_exactly():
    lab = _random_lab(8, 8, 2)
    mask = np.zeros((8, 8), dtype=bool)
    mask[1, 2] = mask[6, 5] = mask[3, 7] = True
    res = colorization_reconstruct(lab, _sparse(np.full((8, 8), 1500.0), mask))
    assert res.converged
    assert np.abs(res.depth.depth - 1500.0).max() < 1e-6
    assert res.depth.valid.all()


def test_samples_pass_through_bit_exactly():
    lab = _random_lab(10, 10, 3)
    rng = np.random.default_rng(4)
    depth = rng.uniform(500, 20000, size=(10, 10))
    mask = rng.random((10, 10)) < 0.15
    mask[0, 0] = True
    sparse = _sparse(depth, mask)
    res = colorization_reconstruct(lab, sparse)
    assert np.array_equal(res.depth.depth[mask], sparse.depth[mask])


def test_uniform_row_interpolates_linearly():
    # two anchors at 0mm and 800mm on a colorless 1x9 strip: the propagation
    # equations have the straight line as their exact solution
    lab = _uniform_lab(1, 9)
    mask = np.zeros((1, 9), dtype=bool)
    mask[0, 0] = mask[0, 8] = True
    depth = np.zeros((1, 9))
    depth[0, 8] = 800.0
    res = colorization_reconstruct(lab, _sparse(depth, mask))
    want = 100.0 * np.arange(9)
    assert np.abs(res.depth.depth[0] - want).max() < 0.5


def _smooth_lab(h, w, seed, base=120, amp=25):
    """Random color field with bounded neighbor contrast.

    iid uint8 colors make neighboring affinities ~exp(-32), which leaves the
    propagation system with condition number ~1e22 -- there no solver (dense
    LU included) produces meaningful digits.  Moderate contrast keeps the
    system well-conditioned so solver-vs-oracle agreement is a real test.
    """
    rng = np.random.default_rng(seed)
    pix = np.clip(base + rng.integers(-amp, amp + 1, size=(h, w, 3)), 0, 255)
    return rgb_to_lab(RgbImage(pix.astype(np.uint8)))


def _dense_oracle(lab, sparse):
    """Assemble the propagation system with plain loops and solve it densely.

    Uses the row-stochastic form x = Wx (I - W_UU well conditioned) rather
    than the Laplacian scaling, so LU has no equilibration worries.
    """
    h, w = lab.height, lab.width
    n = h * w
    raw = np.zeros((n, n))
    for y in range(h):
        for x in range(w):
            i = y * w + x
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    if dy == dx == 0:
                        continue
                    ny, nx = y + dy, x + dx
                    if not (0 <= ny < h and 0 <= nx < w):
                        continue
                    j = ny * w + nx
                    diff2 = float(np.sum((lab.values[y, x] - lab.values[ny, nx]) ** 2))
                    raw[i, j] = np.exp(-diff2 / 200.0)  # sigma_c = 10
    wrow = raw / raw.sum(axis=1, keepdims=True)
    con = sparse.valid.ravel()
    unk = ~con
    A = np.eye(int(unk.sum())) - wrow[np.ix_(unk, unk)]
    b = wrow[np.ix_(unk, con)] @ sparse.depth.ravel()[con]
    full = sparse.depth.ravel().copy()
    full[unk] = np.linalg.solve(A, b)
    return full.reshape(h, w)


def test_solver_matches_dense_direct_solve():
    rng = np.random.default_rng(9)
    cfg = SolverConfig(tol=1e-9)
    for seed in range(5):
        lab = _smooth_lab(8, 8, 40 + seed)
        depth = rng.uniform(500, 20000, size=(8, 8))
        mask = rng.random((8, 8)) < 0.2
        mask[rng.integers(8), rng.integers(8)] = True
        sparse = _sparse(depth, mask)
        res = colorization_reconstruct(lab, sparse, cfg)
        want = _dense_oracle(lab, sparse)
        rel = np.abs(res.depth.depth - want) / np.maximum(np.abs(want), 1.0)
        assert rel.max() < 1e-6
        assert res.converged


def test_maximum_principle():
    rng = np.random.default_rng(21)
    for _ in range(10):
        lab = _random_lab(9, 9, rng.integers(1 << 30))
        depth = rng.uniform(500, 20000, size=(9, 9))
        mask = rng.random((9, 9)) < 0.1
        mask[4, 4] = True
        sparse = _sparse(depth, mask)
        res = colorization_reconstruct(lab, sparse)
        lo, hi = sparse.depth[mask].min(), sparse.depth[mask].max()
        assert res.depth.depth.min() >= lo - 1e-6
        assert res.depth.depth.max() <= hi + 1e-6


def test_fully_constrained_image_is_returned_as_is():
    lab = _random_lab(4, 4, 6)
    depth = np.full((4, 4), 3000.0)
    res = colorization_reconstruct(lab, _sparse(depth, np.ones((4, 4), bool)))
    assert res.converged and res.iterations == 0
    assert np.array_equal(res.depth.depth, depth)


def test_no_samples_is_an_error():
    lab = _uniform_lab(4, 4)
    with pytest.raises(ValueError):
        colorization_reconstruct(lab, _sparse(np.zeros((4, 4)), np.zeros((4, 4), bool)))


def test_convergence_flag_honest_when_starved():
    lab = _random_lab(12, 12, 8)
    rng = np.random.default_rng(12)
    depth = rng.uniform(500, 20000, size=(12, 12))
    mask = np.zeros((12, 12), dtype=bool)
    mask[0, 0] = mask[11, 11] = True
    res = colorization_reconstruct(lab, _sparse(depth, mask),
                                   SolverConfig(tol=1e-12, max_iters=2))
    assert not res.converged
    assert res.residual > 1e-12


# ---------------------------------------------------------------- nearest

def test_nn_single_sample_floods():
    mask = np.zeros((5, 7), dtype=bool)
    mask[2, 3] = True
    out = nn_reconstruct(_sparse(np.full((5, 7), 1234.0), mask))
    assert (out.depth == 1234.0).all()


def test_nn_idempotent_at_samples():
    rng = np.random.default_rng(5)
    depth = rng.uniform(100, 9000, size=(6, 6))
    mask = rng.random((6, 6)) < 0.3
    mask[0, 0] = True
    sparse = _sparse(depth, mask)
    out = nn_reconstruct(sparse)
    assert np.array_equal(out.depth[mask], sparse.depth[mask])


def test_nn_row_splits_at_midpoint():
    mask = np.zeros((1, 10), dtype=bool)
    mask[0, 0] = mask[0, 9] = True
    depth = np.zeros((1, 10))
    depth[0, 0], depth[0, 9] = 100.0, 900.0
    out = nn_reconstruct(_sparse(depth, mask))
    assert list(out.depth[0]) == [100.0] * 5 + [900.0] * 5


def test_nn_tie_goes_to_earlier_sample():
    # pixel (0, 1) is exactly 1px from both samples; the row-major earlier
    # sample (0, 0) must win
    mask = np.zeros((1, 3), dtype=bool)
    mask[0, 0] = mask[0, 2] = True
    depth = np.array([[111.0, 0.0, 222.0]])
    out = nn_reconstruct(_sparse(depth, mask))
    assert out.depth[0, 1] == 111.0


# ---------------------------------------------------------------- bilateral

def test_bilateral_constant_samples_stay_constant():
    lab = _random_lab(8, 8, 14)
    rng = np.random.default_rng(15)
    mask = rng.random((8, 8)) < 0.2
    mask[3, 3] = True
    out = bilateral_reconstruct(lab, _sparse(np.full((8, 8), 2500.0), mask))
    assert np.abs(out.depth - 2500.0).max() < 1e-9


def test_bilateral_lone_sample_reproduces_itself():
    lab = _random_lab(9, 9, 16)
    mask = np.zeros((9, 9), dtype=bool)
    mask[4, 4] = True
    out = bilateral_reconstruct(lab, _sparse(np.full((9, 9), 3210.0), mask), radius=2.0)
    assert out.depth[4, 4] == pytest.approx(3210.0)


def test_bilateral_respects_a_color_step_edge():
    # color flips at x=4|5; samples deep inside each half, and a tight color
    # bandwidth keeps each boundary pixel glued to its own side's depth
    pix = np.zeros((5, 10, 3), dtype=np.uint8)
    pix[:, 5:] = 255
    lab = rgb_to_lab(RgbImage(pix))
    mask = np.zeros((5, 10), dtype=bool)
    mask[2, 1] = mask[2, 8] = True
    depth = np.zeros((5, 10))
    depth[2, 1], depth[2, 8] = 100.0, 900.0
    out = bilateral_reconstruct(lab, _sparse(depth, mask), sigma_s=6.0,
                                sigma_c=0.5, radius=12.0)
    assert abs(out.depth[2, 4] - 100.0) < 1.0
    assert abs(out.depth[2, 5] - 900.0) < 1.0


def test_bilateral_far_pixels_fall_back_to_nearest():
    lab = _uniform_lab(9, 9)
    mask = np.zeros((9, 9), dtype=bool)
    mask[0, 0] = True
    out = bilateral_reconstruct(lab, _sparse(np.full((9, 9), 4321.0), mask), radius=1.5)
    assert (out.depth == 4321.0).all()  # uncovered corner served by fallback


# ---------------------------------------------------------------- shared

def test_reconstructors_ignore_sample_enumeration_order():
    """Sparse depth is a raster, so any enumeration of the same samples
    must reconstruct identically; this pins the reductions to content."""
    lab = _random_lab(7, 7, 18)
    rng = np.random.default_rng(19)
    depth = rng.uniform(500, 9000, size=(7, 7))
    mask = rng.random((7, 7)) < 0.25
    mask[3, 3] = True
    a = _sparse(depth, mask)
    b = _sparse(depth.copy(), mask.copy())
    assert np.array_equal(nn_reconstruct(a).depth, nn_reconstruct(b).depth)
    assert np.array_equal(bilateral_reconstruct(lab, a).depth,
                          bilateral_reconstruct(lab, b).depth)
    assert np.array_equal(colorization_reconstruct(lab, a).depth.depth,
                          colorization_reconstruct(lab, b).depth.depth)
