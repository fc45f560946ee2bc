"""Exact convex and concave envelopes of univariate polynomials.

The construction follows a continuous analogue of Graham's scan:

1. split the domain into maximal closed intervals where ``p'' >= 0``;
2. join pairs of those intervals with bitangent lines, found by bisecting
   on the slope at which the restricted conjugates of ``p`` agree;
3. keep a stack of bitangents whose slopes must strictly increase, popping
   and re-joining whenever a new bitangent breaks monotonicity.

The envelope equals ``p`` outside the touch points of the surviving
bitangents and the bitangent line between them.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BracketFailure, NotConvexOnInterval, OutOfDomain
from .poly import DEFAULT_TOL, Interval, Polynomial, derivative_range, real_roots

# Envelope pieces narrower than this are fused into their neighbours.
MIN_SEGMENT_WIDTH = 1e-10


@dataclass(frozen=True)
class Bitangent:
    slope: float
    intercept: float
    left_touch: float
    right_touch: float
    left_index: int
    right_index: int

    def __call__(self, x):
        return self.slope * x + self.intercept


@dataclass(frozen=True)
class Segment:
    """One envelope piece on ``[start, end]``.

    ``kind`` is ``"poly"`` (the envelope follows the polynomial) or
    ``"affine"`` (``slope * x + intercept``).
    """

    kind: str
    start: float
    end: float
    slope: float = 0.0
    intercept: float = 0.0

    @property
    def width(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class PiecewiseEnvelope:
    """Convex (or concave) envelope of ``poly`` over ``domain``.

    ``breakpoints`` has one more entry than ``segments``.  For a concave
    envelope the affine pieces are stored with their actual (not negated)
    coefficients, so evaluation is identical for both kinds.
    """

    poly: Polynomial
    domain: Interval
    segments: tuple[Segment, ...]
    concave: bool = False
    bitangents: tuple[Bitangent, ...] = ()
    breakpoints: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        bps = tuple([s.start for s in self.segments] + [self.segments[-1].end])
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "_inner", np.asarray(bps[1:-1], dtype=float))

    @property
    def tol_touch(self) -> float:
        return 1e-9 * max(1.0, self.domain.width)

    def _locate(self, x: float) -> int:
        lo, hi = self.domain.lo, self.domain.hi
        if x < lo - self.tol_touch or x > hi + self.tol_touch or math.isnan(x):
            raise OutOfDomain(f"x={x!r} outside envelope domain [{lo}, {hi}]")
        return bisect.bisect_right(self.breakpoints, x, 1, len(self.segments)) - 1

    def value(self, x: float) -> float:
        seg = self.segments[self._locate(x)]
        x = min(max(x, self.domain.lo), self.domain.hi)
        if seg.kind == "affine":
            return seg.slope * x + seg.intercept
        return self.poly(x)

    __call__ = value

    def slope(self, x: float) -> float:
        seg = self.segments[self._locate(x)]
        if seg.kind == "affine":
            return seg.slope
        x = min(max(x, self.domain.lo), self.domain.hi)
        return self.poly.d(x)

    def _arrays(self):
        kinds = np.array([s.kind == "affine" for s in self.segments])
        slopes = np.array([s.slope for s in self.segments])
        icpts = np.array([s.intercept for s in self.segments])
        return kinds, slopes, icpts

    def evaluate(self, xs) -> np.ndarray:
        """Vectorized :meth:`value` (inputs are clamped into the domain)."""
        xs = np.clip(np.asarray(xs, dtype=float), self.domain.lo, self.domain.hi)
        idx = np.searchsorted(self._inner, xs, side="right")
        kinds, slopes, icpts = self._arrays()
        aff = kinds[idx]
        out = np.asarray(self.poly(xs), dtype=float)
        return np.where(aff, slopes[idx] * xs + icpts[idx], out)

    def evaluate_slope(self, xs) -> np.ndarray:
        xs = np.clip(np.asarray(xs, dtype=float), self.domain.lo, self.domain.hi)
        idx = np.searchsorted(self._inner, xs, side="right")
        kinds, slopes, _ = self._arrays()
        out = np.asarray(self.poly.d(xs), dtype=float) * np.ones_like(xs)
        return np.where(kinds[idx], slopes[idx], out)

    def minimum(self, tol: float = DEFAULT_TOL) -> float:
        return self._extreme(tol)[0]

    def maximum(self, tol: float = DEFAULT_TOL) -> float:
        return self._extreme(tol)[1]

    def _extreme(self, tol):
        # extremes of a piecewise function: check every piece's candidates
        lo_v, hi_v = math.inf, -math.inf
        for seg in self.segments:
            if seg.kind == "affine":
                vals = [seg.slope * seg.start + seg.intercept, seg.slope * seg.end + seg.intercept]
            else:
                vals = list(poly_range(self.poly, Interval(seg.start, seg.end), tol))
            lo_v, hi_v = min(lo_v, *vals), max(hi_v, *vals)
        return lo_v, hi_v

    def to_dict(self) -> dict:
        segs = []
        for s in self.segments:
            d = {"kind": s.kind, "from": s.start, "to": s.end}
            if s.kind == "affine":
                d["slope"] = s.slope
                d["intercept"] = s.intercept
            segs.append(d)
        return {
            "domain": [self.domain.lo, self.domain.hi],
            "concave": self.concave,
            "poly": list(self.poly.coeffs),
            "segments": segs,
        }

    @classmethod
    def from_dict(cls, data: dict, poly: Polynomial | None = None) -> PiecewiseEnvelope:
        if poly is None:
            poly = Polynomial(data["poly"])
        segs = tuple(
            Segment(s["kind"], float(s["from"]), float(s["to"]), float(s.get("slope", 0.0)), float(s.get("intercept", 0.0)))
            for s in data["segments"]
        )
        lo, hi = data["domain"]
        return cls(poly, Interval(lo, hi), segs, bool(data.get("concave", False)))


def envelope_eval(env: PiecewiseEnvelope, x: float) -> float:
    return env.value(x)


def envelope_slope(env: PiecewiseEnvelope, x: float) -> float:
    return env.slope(x)


# --------------------------------------------------------------------------
# convex intervals


def convex_intervals(p: Polynomial, interval: Interval, tol: float = DEFAULT_TOL) -> list[Interval]:
    """Maximal closed subintervals of ``interval`` on which ``p'' >= 0``.

    Singletons at the domain ends (``[lo, lo]``) appear when ``p`` is concave
    next to that end.
    """
    lo, hi = interval.lo, interval.hi
    ddp = p.d.d
    if p.degree <= 1 or lo == hi or ddp.is_zero:
        return [interval]
    cuts = [lo, *real_roots(ddp, interval, tol), hi]
    out = []
    start = cuts[0]
    for j in range(len(cuts) - 1):
        if ddp(0.5 * (cuts[j] + cuts[j + 1])) < 0:
            out.append(Interval(start, cuts[j]))
            start = cuts[j + 1]
    out.append(Interval(start, cuts[-1]))
    return out


# --------------------------------------------------------------------------
# restricted conjugate


def _solve_slope(p: Polynomial, a: float, b: float, s: float, tol: float) -> float:
    """Root of ``p'(x) = s`` on ``[a, b]`` where ``p'`` is nondecreasing.

    Bisection on the monotone derivative, accelerated by Newton steps that
    are only accepted when they stay inside the current bracket.
    """
    dp, ddp = p.d, p.d.d
    xtol = 4 * np.finfo(float).eps * max(1.0, abs(a), abs(b))
    x = 0.5 * (a + b)
    for _ in range(200):
        f = dp(x) - s
        if f == 0.0:
            return x
        if f < 0:
            a = x
        else:
            b = x
        if b - a <= xtol or abs(f) <= tol * 1e-3:
            return x
        g = ddp(x)
        x_new = x - f / g if g > 0 else math.nan
        if not a < x_new < b:
            x_new = 0.5 * (a + b)
        x = x_new
    return x


def conjugate_eval(p: Polynomial, interval: Interval, s: float, tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """``(sup_{x in I} s*x - p(x), argmax)`` for ``p`` convex on ``I``."""
    lo, hi = interval.lo, interval.hi
    if lo == hi:
        return s * lo - p(lo), lo
    dp = p.d
    dlo, dhi = dp(lo), dp(hi)
    if dlo > dhi + tol * (1.0 + abs(dlo) + abs(dhi)):
        raise NotConvexOnInterval(f"p' decreases on [{lo}, {hi}]: {dlo} > {dhi}")
    if s <= dlo:
        x0 = lo
    elif s >= dhi:
        x0 = hi
    else:
        x0 = _solve_slope(p, lo, hi, s, tol)
    return s * x0 - p(x0), x0


# --------------------------------------------------------------------------
# bitangents


def bitangent(
    p: Polynomial,
    intervals: Sequence[Interval],
    li: int,
    ri: int,
    tol: float = DEFAULT_TOL,
) -> Bitangent:
    """The unique line below ``p`` on ``I_li ∪ I_ri`` touching ``p`` in both."""
    if not 0 <= li < ri < len(intervals):
        raise IndexError(f"need 0 <= li < ri < {len(intervals)}, got {li}, {ri}")
    left, right = intervals[li], intervals[ri]
    m, M = derivative_range(p, Interval(left.lo, right.hi), tol)

    def gap(s):
        return conjugate_eval(p, left, s, tol)[0] - conjugate_eval(p, right, s, tol)[0]

    slack = 1e-9 * (1.0 + abs(p(left.lo)) + abs(p(right.hi)))
    if gap(m) < -slack or gap(M) > slack:
        raise BracketFailure(f"slope bracket [{m}, {M}] does not enclose the bitangent slope")
    s_lo, s_hi = m, M
    cap = math.ceil(math.log2(max((M - m) / tol, 1.0))) + 4
    for _ in range(cap):
        if s_hi - s_lo <= tol:
            break
        mid = 0.5 * (s_lo + s_hi)
        if mid <= s_lo or mid >= s_hi:
            break  # float resolution reached
        if gap(mid) <= 0:
            s_hi = mid
        else:
            s_lo = mid
    else:
        if s_hi - s_lo > tol:
            raise BracketFailure(f"bisection did not converge in {cap} steps")
    s0 = 0.5 * (s_lo + s_hi)
    c_left, x_left = conjugate_eval(p, left, s0, tol)
    _, x_right = conjugate_eval(p, right, s0, tol)
    return Bitangent(s0, -c_left, x_left, x_right, li, ri)


def graham_scan(
    p: Polynomial,
    intervals: Sequence[Interval],
    tol: float = DEFAULT_TOL,
    trace: list | None = None,
) -> list[Bitangent]:
    """Continuous Graham scan over the convex intervals of ``p``.

    Returns the surviving bitangents bottom-to-top of the stack; their slopes
    strictly increase.  When ``trace`` is a list, every bitangent computed
    (including those later popped) is appended to it.
    """
    k = len(intervals) - 1
    if k <= 0:
        return []
    m, M = derivative_range(p, Interval(intervals[0].lo, intervals[-1].hi), tol)
    tol_slope = 1e-9 * (1.0 + abs(M - m))
    stack: list[Bitangent] = []

    def compute(li, ri):
        b = bitangent(p, intervals, li, ri, tol)
        if trace is not None:
            trace.append(b)
        return b

    for i in range(k):
        line = compute(i, i + 1)
        while stack and stack[-1].slope >= line.slope - tol_slope:
            bad = stack.pop()
            line = compute(bad.left_index, i + 1)
        stack.append(line)
    return stack


# --------------------------------------------------------------------------
# assembly


def _fuse(raw: list[Segment]) -> list[Segment]:
    segs = [s for s in raw if s.width >= MIN_SEGMENT_WIDTH]
    if not segs:
        # everything is tiny: keep the widest piece stretched over the domain
        widest = max(raw, key=lambda s: s.width)
        return [Segment(widest.kind, raw[0].start, raw[-1].end, widest.slope, widest.intercept)]
    # close the holes left by dropped pieces
    out: list[Segment] = []
    for s in segs:
        if out:
            prev = out[-1]
            if prev.kind == "poly" and s.kind == "poly":
                out[-1] = Segment("poly", prev.start, s.end)
                continue
            if s.start != prev.end:
                s = Segment(s.kind, prev.end, s.end, s.slope, s.intercept)
        out.append(s)
    first, last = out[0], out[-1]
    out[0] = Segment(first.kind, raw[0].start, first.end, first.slope, first.intercept)
    last = out[-1]
    out[-1] = Segment(last.kind, last.start, raw[-1].end, last.slope, last.intercept)
    return out


def build_envelope(p: Polynomial, interval: Interval, tol: float = DEFAULT_TOL) -> PiecewiseEnvelope:
    """Convex envelope of ``p`` over ``interval``.

    >>> env = build_envelope(Polynomial([0, 0, -1]), Interval(-1, 1))
    >>> [s.kind for s in env.segments], env(0.0)
    (['affine'], -1.0)
    """
    lo, hi = interval.lo, interval.hi
    if lo == hi:
        return PiecewiseEnvelope(p, interval, (Segment("poly", lo, hi),))
    intervals = convex_intervals(p, interval, tol)
    stack = graham_scan(p, intervals, tol)
    raw: list[Segment] = []
    cursor = lo
    for b in stack:
        a = max(b.left_touch, cursor)
        z = max(b.right_touch, a)
        if a > cursor:
            raw.append(Segment("poly", cursor, a))
        raw.append(Segment("affine", a, z, b.slope, b.intercept))
        cursor = z
    if cursor < hi or not raw:
        raw.append(Segment("poly", cursor, hi))
    return PiecewiseEnvelope(p, interval, tuple(_fuse(raw)), False, tuple(stack))


def concave_envelope(p: Polynomial, interval: Interval, tol: float = DEFAULT_TOL) -> PiecewiseEnvelope:
    """Concave envelope of ``p``, i.e. ``-(convex envelope of -p)``."""
    inner = build_envelope(-p, interval, tol)
    segs = tuple(
        Segment(s.kind, s.start, s.end, -s.slope, -s.intercept) if s.kind == "affine" else s
        for s in inner.segments
    )
    bts = tuple(
        Bitangent(-b.slope, -b.intercept, b.left_touch, b.right_touch, b.left_index, b.right_index)
        for b in inner.bitangents
    )
    return PiecewiseEnvelope(p, interval, segs, True, bts)


def poly_range(p: Polynomial, interval: Interval, tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """Exact ``(min, max)`` of ``p`` on ``interval`` from its critical points."""
    vals = [p(x) for x in _critical_points(p, interval, tol)]
    return min(vals), max(vals)


def _critical_points(p: Polynomial, interval: Interval, tol: float) -> list[float]:
    pts = [interval.lo]
    if interval.hi > interval.lo:
        if p.degree >= 2:
            pts.extend(real_roots(p.d, interval, tol))
        pts.append(interval.hi)
    return pts


def poly_argmin(p: Polynomial, interval: Interval, tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """``(min p, leftmost minimizer)`` on ``interval``."""
    pts = _critical_points(p, interval, tol)
    vals = [p(x) for x in pts]
    best = min(vals)
    tie = 1e-12 * (1.0 + abs(best))
    for x, v in zip(pts, vals):
        if v <= best + tie:
            return best, x
    raise AssertionError("unreachable")


def poly_argmax(p: Polynomial, interval: Interval, tol: float = DEFAULT_TOL) -> tuple[float, float]:
    v, x = poly_argmin(-p, interval, tol)
    return -v, x
