"""PatchMatch over two pairs of normalized feature maps.

The field maps a source grid (the A side: content features plus latent
features) into a target grid (the B side).  The per-candidate cost is
the summed squared difference over a square patch, taken on both map
pairs; dropping the first pair gives the single-direction variant used
only for comparison experiments.

All four maps must already be normalized (see tensor.normalize); the
kernels are compiled with numba and are deterministic for a fixed seed
because every random draw is pre-generated outside the sweep.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit

from .tensor import DimensionError, NNField

EXHAUSTIVE_MAX_GRID = 32


@dataclass
class MatchSettings:
    patch_radius: int = 1          # patch side is 2r+1
    iterations: int = 10
    search_radius: int = 4
    samples_per_radius: int = 2    # random-search draws at each radius step
    seed: int = 0
    bidirectional: bool = True

    def __post_init__(self):
        if self.patch_radius < 0:
            raise ValueError("patch_radius must be >= 0")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.search_radius < 1:
            raise ValueError("search_radius must be >= 1")
        if self.samples_per_radius < 1:
            raise ValueError("samples_per_radius must be >= 1")


@njit(cache=True)
def _cost(fa, fb, fa2, fb2, py, px, qy, qx, radius, both):
    ah, aw = fa.shape[0], fa.shape[1]
    bh, bw = fb.shape[0], fb.shape[1]
    total = 0.0
    for dy in range(-radius, radius + 1):
        xr = py + dy
        if xr < 0:
            xr = 0
        elif xr >= ah:
            xr = ah - 1
        yr = qy + dy
        if yr < 0:
            yr = 0
        elif yr >= bh:
            yr = bh - 1
        for dx in range(-radius, radius + 1):
            xc = px + dx
            if xc < 0:
                xc = 0
            elif xc >= aw:
                xc = aw - 1
            yc = qx + dx
            if yc < 0:
                yc = 0
            elif yc >= bw:
                yc = bw - 1
            if both:
                for c in range(fa.shape[2]):
                    d = fa[xr, xc, c] - fb[yr, yc, c]
                    total += d * d
            for c in range(fa2.shape[2]):
                d = fa2[xr, xc, c] - fb2[yr, yc, c]
                total += d * d
    return total


@njit(cache=True)
def _field_costs(fa, fb, fa2, fb2, coords, costs, radius, both):
    h, w = costs.shape
    for y in range(h):
        for x in range(w):
            costs[y, x] = _cost(fa, fb, fa2, fb2, y, x,
                                coords[y, x, 0], coords[y, x, 1], radius, both)


@njit(cache=True)
def _sweep(fa, fb, fa2, fb2, coords, costs, rand_off, radius, both, reverse):
    h, w = costs.shape
    bh, bw = fb.shape[0], fb.shape[1]
    n_steps = rand_off.shape[2]
    for yi in range(h):
        y = h - 1 - yi if reverse else yi
        for xi in range(w):
            x = w - 1 - xi if reverse else xi
            best_r = coords[y, x, 0]
            best_c = coords[y, x, 1]
            best_d = costs[y, x]

            # propagation: shift the already-visited neighbors' matches
            for n in range(2):
                if not reverse:
                    ny = y if n == 0 else y - 1
                    nx = x - 1 if n == 0 else x
                else:
                    ny = y if n == 0 else y + 1
                    nx = x + 1 if n == 0 else x
                if ny < 0 or ny >= h or nx < 0 or nx >= w:
                    continue
                cr = coords[ny, nx, 0] + (y - ny)
                cc = coords[ny, nx, 1] + (x - nx)
                if cr < 0:
                    cr = 0
                elif cr >= bh:
                    cr = bh - 1
                if cc < 0:
                    cc = 0
                elif cc >= bw:
                    cc = bw - 1
                if cr == best_r and cc == best_c:
                    continue
                d = _cost(fa, fb, fa2, fb2, y, x, cr, cc, radius, both)
                if d < best_d:
                    best_r, best_c, best_d = cr, cc, d

            # random search around the current best, radius halving to 1
            for s in range(n_steps):
                cr = best_r + rand_off[y, x, s, 0]
                cc = best_c + rand_off[y, x, s, 1]
                if cr < 0:
                    cr = 0
                elif cr >= bh:
                    cr = bh - 1
                if cc < 0:
                    cc = 0
                elif cc >= bw:
                    cc = bw - 1
                if cr == best_r and cc == best_c:
                    continue
                d = _cost(fa, fb, fa2, fb2, y, x, cr, cc, radius, both)
                if d < best_d:
                    best_r, best_c, best_d = cr, cc, d

            coords[y, x, 0] = best_r
            coords[y, x, 1] = best_c
            costs[y, x] = best_d


@njit(cache=True)
def _exhaustive(fa, fb, fa2, fb2, coords, radius, both):
    h, w = coords.shape[0], coords.shape[1]
    bh, bw = fb.shape[0], fb.shape[1]
    for y in range(h):
        for x in range(w):
            best_d = np.inf
            best_r = 0
            best_c = 0
            for qy in range(bh):
                for qx in range(bw):
                    d = _cost(fa, fb, fa2, fb2, y, x, qy, qx, radius, both)
                    if d < best_d:
                        best_d = d
                        best_r = qy
                        best_c = qx
            coords[y, x, 0] = best_r
            coords[y, x, 1] = best_c


def _as_maps(*maps):
    out = [np.ascontiguousarray(np.asarray(m, dtype=np.float64)) for m in maps]
    for m in out:
        if m.ndim != 3:
            raise DimensionError(f"feature maps must be (H, W, C), got {m.shape}")
    return out


def _check_pairs(fa, fb, fa2, fb2):
    if fa.shape[:2] != fa2.shape[:2]:
        raise DimensionError(f"source maps disagree: {fa.shape[:2]} vs {fa2.shape[:2]}")
    if fb.shape[:2] != fb2.shape[:2]:
        raise DimensionError(f"target maps disagree: {fb.shape[:2]} vs {fb2.shape[:2]}")
    if fa.shape[2] != fb.shape[2]:
        raise DimensionError(f"first pair channels disagree: {fa.shape[2]} vs {fb.shape[2]}")
    if fa2.shape[2] != fb2.shape[2]:
        raise DimensionError(f"second pair channels disagree: {fa2.shape[2]} vs {fb2.shape[2]}")


def patch_cost(p, q, fa, fb, fa2, fb2, radius, bidirectional=True):
    """Patch dissimilarity between source position p and target position q.

    Sum over patch offsets of the squared channel distance on the first
    map pair plus the second; coordinates are clamped at the borders so
    every offset contributes.  With ``bidirectional=False`` only the
    second (latent) pair counts.
    """
    fa, fb, fa2, fb2 = _as_maps(fa, fb, fa2, fb2)
    _check_pairs(fa, fb, fa2, fb2)
    return float(_cost(fa, fb, fa2, fb2, int(p[0]), int(p[1]), int(q[0]), int(q[1]),
                       int(radius), bidirectional))


def _radius_schedule(search_radius):
    radii = []
    r = int(search_radius)
    while r >= 1:
        radii.append(r)
        r //= 2
    return np.array(radii, dtype=np.int64)


def patchmatch(fa, fa2, fb, fb2, init_nnf=None, settings=None):
    """Approximate the minimum-cost NNF by propagation plus random search.

    Runs ``settings.iterations`` sweeps; odd sweeps scan top-left to
    bottom-right propagating from the left/up neighbors, even sweeps run
    reversed with right/down neighbors.  After propagation each position
    draws ``samples_per_radius`` candidates at every radius of the
    halving schedule around its current best.  Candidates replace the
    incumbent only on strictly lower cost, so the total cost never
    increases and ties keep the earliest match.

    Returns ``(nnf, sweep_costs)`` where ``sweep_costs[0]`` is the total
    cost of the initial field and one entry follows per sweep.
    """
    if settings is None:
        settings = MatchSettings()
    fa, fa2, fb, fb2 = _as_maps(fa, fa2, fb, fb2)
    _check_pairs(fa, fb, fa2, fb2)
    h, w = fa.shape[:2]
    target = (fb.shape[0], fb.shape[1])

    rng = np.random.default_rng(settings.seed)
    if init_nnf is None:
        coords = NNField.random(h, w, target, rng).coords.copy()
    else:
        if (init_nnf.height, init_nnf.width) != (h, w):
            raise DimensionError(
                f"initial NNF grid {(init_nnf.height, init_nnf.width)} does not match "
                f"source dims {(h, w)}")
        if init_nnf.target_shape != target:
            raise DimensionError(
                f"initial NNF target bounds {init_nnf.target_shape} do not match "
                f"target dims {target}")
        coords = init_nnf.coords.copy()

    costs = np.empty((h, w))
    _field_costs(fa, fb, fa2, fb2, coords, costs, settings.patch_radius,
                 settings.bidirectional)
    sweep_costs = [float(costs.sum())]

    radii = _radius_schedule(settings.search_radius)
    n_steps = len(radii) * settings.samples_per_radius
    for it in range(settings.iterations):
        rand_off = np.empty((h, w, n_steps, 2), dtype=np.int32)
        s = 0
        for rad in radii:
            for _ in range(settings.samples_per_radius):
                rand_off[:, :, s, :] = rng.integers(-rad, rad + 1, size=(h, w, 2))
                s += 1
        _sweep(fa, fb, fa2, fb2, coords, costs, rand_off,
               settings.patch_radius, settings.bidirectional, it % 2 == 1)
        sweep_costs.append(float(costs.sum()))

    return NNField(coords, target), np.array(sweep_costs)


def exhaustive_nnf(fa, fa2, fb, fb2, radius, bidirectional=True):
    """Brute-force minimum-cost NNF; verification oracle for patchmatch.

    Ties break to the row-major-first target coordinate.  Refuses target
    grids larger than 32x32.
    """
    fa, fa2, fb, fb2 = _as_maps(fa, fa2, fb, fb2)
    _check_pairs(fa, fb, fa2, fb2)
    th, tw = fb.shape[:2]
    if th > EXHAUSTIVE_MAX_GRID or tw > EXHAUSTIVE_MAX_GRID:
        raise ValueError(
            f"exhaustive search refused: target grid {th}x{tw} exceeds "
            f"{EXHAUSTIVE_MAX_GRID}x{EXHAUSTIVE_MAX_GRID}")
    coords = np.zeros((fa.shape[0], fa.shape[1], 2), dtype=np.int32)
    _exhaustive(fa, fb, fa2, fb2, coords, int(radius), bidirectional)
    return NNField(coords, (th, tw))


def total_cost(nnf, fa, fa2, fb, fb2, radius, bidirectional=True):
    """Total field cost of an NNF under the patch metric."""
    fa, fa2, fb, fb2 = _as_maps(fa, fa2, fb, fb2)
    _check_pairs(fa, fb, fa2, fb2)
    costs = np.empty((nnf.height, nnf.width))
    _field_costs(fa, fb, fa2, fb2, np.ascontiguousarray(nnf.coords), costs,
                 int(radius), bidirectional)
    return float(costs.sum())
