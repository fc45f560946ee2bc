"""Brute-force references: discrete lower hull and multistart minimization.

These are deliberately simple and independent of the envelope machinery so
that tests can pit the two against each other.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import OutOfDomain
from .pkan import PKAN

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def discrete_lower_hull(xs, ys) -> tuple[np.ndarray, np.ndarray]:
    """Lower convex hull of points sorted by strictly increasing ``x``.

    Classic monotone-chain stack scan.  Kept points have strictly increasing
    consecutive slopes, so exactly collinear interior points are dropped.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
        raise ValueError("need at least two points as matching 1-D arrays")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("x must be strictly increasing")
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise ValueError("points must be finite")
    stack: list[int] = []
    for k in range(xs.size):
        while len(stack) >= 2:
            i, j = stack[-2], stack[-1]
            # keep j only if it lies strictly below the chord i -> k
            cross = (xs[j] - xs[i]) * (ys[k] - ys[i]) - (ys[j] - ys[i]) * (xs[k] - xs[i])
            if cross > 0:
                break
            stack.pop()
        stack.append(k)
    idx = np.asarray(stack)
    return xs[idx], ys[idx]


def hull_interpolate(hull_x, hull_y, x):
    """Piecewise-linear interpolation through hull vertices (scalar or array)."""
    hx = np.asarray(hull_x, dtype=float)
    hy = np.asarray(hull_y, dtype=float)
    xv = np.asarray(x, dtype=float)
    if np.any(xv < hx[0]) or np.any(xv > hx[-1]):
        raise OutOfDomain(f"x outside hull range [{hx[0]}, {hx[-1]}]")
    out = np.interp(xv, hx, hy)
    return float(out) if out.ndim == 0 else out


def sample_box(box, n: int, rng: np.random.Generator) -> np.ndarray:
    lo = np.array([iv.lo for iv in box])
    hi = np.array([iv.hi for iv in box])
    return lo + (hi - lo) * rng.random((n, lo.size))


def _coordinate_polish(net: PKAN, X: np.ndarray, sweeps: int, grid: int, iters: int) -> np.ndarray:
    """Per-coordinate 1-D search for a batch of starting points.

    Each coordinate step scans a coarse grid to pick a bracket, refines it by
    golden section, and moves only if the value improves.
    """
    lo = np.array([iv.lo for iv in net.box])
    hi = np.array([iv.hi for iv in net.box])
    B, d = X.shape
    X = X.copy()
    fx = net(X)
    rows = np.arange(B)
    for _ in range(sweeps):
        for j in range(d):
            ts = np.linspace(lo[j], hi[j], grid)
            trial = np.repeat(X, grid, axis=0)
            trial[:, j] = np.tile(ts, B)
            fv = net(trial).reshape(B, grid)
            k = fv.argmin(axis=1)
            step = ts[1] - ts[0] if grid > 1 else 0.0
            a = np.maximum(ts[k] - step, lo[j])
            b = np.minimum(ts[k] + step, hi[j])
            c = b - _GOLDEN * (b - a)
            e = a + _GOLDEN * (b - a)

            def at(t):
                Y = X.copy()
                Y[:, j] = t
                return net(Y)

            fc, fe = at(c), at(e)
            for _ in range(iters):
                left = fc < fe
                a = np.where(left, a, c)
                b = np.where(left, e, b)
                c, e = np.where(left, b - _GOLDEN * (b - a), e), np.where(left, c, a + _GOLDEN * (b - a))
                fnew = at(np.where(left, c, e))
                fc, fe = np.where(left, fnew, fe), np.where(left, fc, fnew)
            cands = np.stack([ts[k], c, e], axis=1)
            cvals = np.stack([fv[rows, k], fc, fe], axis=1)
            m = cvals.argmin(axis=1)
            best_t, best_v = cands[rows, m], cvals[rows, m]
            better = best_v < fx
            X[better, j] = best_t[better]
            fx = np.where(better, best_v, fx)
    return X


def multistart_min(
    net: PKAN,
    samples: int = 2000,
    seed: int = 0,
    starts: int = 10,
    sweeps: int = 3,
) -> tuple[float, np.ndarray]:
    """Best value of the network found by sampling plus coordinate descent.

    Inputs are drawn uniformly from the box with ``numpy.random.default_rng(seed)``;
    the ``starts`` best are polished.  The result is an upper bound on the
    global minimum and is reproducible given ``(net, samples, seed)``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    X = sample_box(net.box, samples, rng)
    f = net(X)
    order = np.argsort(f, kind="stable")[: min(starts, samples)]
    P = _coordinate_polish(net, X[order], sweeps, grid=33, iters=40)
    fp = net(P)
    k = int(np.argmin(fp))
    if fp[k] <= f[order[0]]:
        return float(fp[k]), P[k]
    return float(f[order[0]]), X[order[0]]


def _zoom(ax: np.ndarray, centers, lo: float, hi: float, points: int) -> np.ndarray:
    h = ax[1] - ax[0] if ax.size > 1 else 0.0
    parts = [ax] + [np.linspace(max(lo, c - h), min(hi, c + h), points) for c in centers]
    return np.unique(np.concatenate(parts))


def gam_grid_min(g, points: int = 200, full_limit: int = 1 << 23, zoom_starts: int = 5) -> tuple[float, np.ndarray]:
    """Minimum of ``link(sum_i p_i(x_i))`` by dense tensor grids.

    A ``points``-per-axis grid over the box is scanned, then refined by a
    second grid of the same density around the best coarse candidates, which
    brings the resolution to the square of the cell width.

    Small grids are enumerated outright with no assumption on the link.
    Larger ones exploit separability: the link must then be monotone (checked
    here by finite differences on a dense grid of the sum range), so the
    optimum uses the extreme grid value on every axis independently.
    """
    box = list(g.box)
    d = len(box)
    axes = [np.linspace(iv.lo, iv.hi, points) for iv in box]
    if points**d <= full_limit:
        best_v, best_x = np.inf, None
        for level in range(2):
            vals = [p(a) for p, a in zip(g.components, axes)]
            sums = vals[0]
            for v in vals[1:]:
                sums = (sums[..., None] + v).reshape(-1)
            m = g.link(sums)
            flat = int(np.argmin(m))
            pos = np.unravel_index(flat, [a.size for a in axes])
            x = np.array([axes[i][pos[i]] for i in range(d)])
            if m[flat] < best_v:
                best_v, best_x = float(m[flat]), x
            if level == 0:
                h = [a[1] - a[0] if a.size > 1 else 0.0 for a in axes]
                axes = [
                    np.linspace(max(iv.lo, xi - hi_), min(iv.hi, xi + hi_), points)
                    for iv, xi, hi_ in zip(box, best_x, h)
                ]
        return best_v, best_x
    vals = [p(a) for p, a in zip(g.components, axes)]
    lo = sum(v.min() for v in vals)
    hi = sum(v.max() for v in vals)
    diffs = np.diff(g.link(np.linspace(lo, hi, 100001)))
    if np.all(diffs >= 0):
        sense = 1.0
    elif np.all(diffs <= 0):
        sense = -1.0
    else:
        raise ValueError("grid too large to enumerate and link is not monotone")
    x = np.empty(d)
    total = 0.0
    for i, (p, iv) in enumerate(zip(g.components, box)):
        order = np.argsort(sense * vals[i], kind="stable")[:zoom_starts]
        fine = _zoom(axes[i], axes[i][order], iv.lo, iv.hi, points)
        fv = sense * p(fine)
        k = int(np.argmin(fv))
        x[i] = fine[k]
        total += p(fine[k])
    return float(g.link(total)), x
