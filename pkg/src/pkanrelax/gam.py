"""Monotone polynomial GAMs: ``M(x) = link(sum_i p_i(x_i))`` over a box.

For a strictly monotone link the relaxation that composes the link's convex
envelope with the summed per-component envelopes is exact at the minimum,
which makes this module a closed-form oracle for the general solver.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .envelope import PiecewiseEnvelope, build_envelope, concave_envelope, poly_argmax, poly_argmin
from .errors import DimensionMismatch, NotMonotone, OutOfDomain, ParseError
from .poly import DEFAULT_TOL, Interval, Polynomial, real_roots


@dataclass(frozen=True)
class MPGAM:
    components: tuple[Polynomial, ...]
    link: Polynomial
    box: tuple[Interval, ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "box", tuple(self.box))
        if not self.components:
            raise DimensionMismatch("an MPGAM needs at least one component")
        if len(self.components) != len(self.box):
            raise DimensionMismatch(f"{len(self.components)} components but box has {len(self.box)} intervals")

    @property
    def dim(self) -> int:
        return len(self.components)

    def inner(self, X) -> np.ndarray:
        """``sum_i p_i(x_i)`` for a batch of points of shape ``(B, d)``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return sum(p(X[:, i]) for i, p in enumerate(self.components))

    def __call__(self, X) -> np.ndarray:
        return self.link(self.inner(X))

    def value(self, x: Sequence[float]) -> float:
        return float(self.link(sum(p(float(xi)) for p, xi in zip(self.components, x))))

    @cached_property
    def relaxation(self) -> GAMRelaxation:
        return GAMRelaxation.build(self)


def component_envelopes(
    g: MPGAM, tol: float = DEFAULT_TOL
) -> tuple[list[PiecewiseEnvelope], list[PiecewiseEnvelope], Interval]:
    """Convex and concave envelope per component, and the range of the inner sum."""
    lower = [build_envelope(p, iv, tol) for p, iv in zip(g.components, g.box)]
    upper = [concave_envelope(p, iv, tol) for p, iv in zip(g.components, g.box)]
    lo = sum(e.minimum(tol) for e in lower)
    hi = sum(e.maximum(tol) for e in upper)
    return lower, upper, Interval(lo, max(lo, hi))


def check_monotone(link: Polynomial, interval: Interval, tol: float = DEFAULT_TOL) -> str:
    """``"increasing"`` or ``"decreasing"``; raises :class:`NotMonotone` otherwise.

    A root of the derivative strictly inside the interval where the sign
    flips is a violation.  Touching roots (even multiplicity) keep strict
    monotonicity and are accepted.  Constant links are rejected.
    """
    d = link.d
    if d.is_zero:
        raise NotMonotone("link is constant", location=interval.mid)
    if interval.degenerate:
        s = d(interval.lo)
        if s == 0:
            raise NotMonotone("link derivative vanishes", location=interval.lo)
        return "increasing" if s > 0 else "decreasing"
    roots = real_roots(d, interval, tol) if d.degree > 0 else []
    pts = [interval.lo] + roots + [interval.hi]
    signs = []
    for a, b in zip(pts[:-1], pts[1:]):
        v = d(0.5 * (a + b))
        signs.append(0 if v == 0 else (1 if v > 0 else -1))
    for k in range(1, len(signs)):
        if signs[k] != signs[k - 1]:
            raise NotMonotone("link derivative changes sign", location=roots[k - 1])
    if signs[0] == 0:
        raise NotMonotone("link derivative vanishes", location=interval.mid)
    return "increasing" if signs[0] > 0 else "decreasing"


@dataclass(frozen=True)
class GAMRelaxation:
    """Precomputed pieces of the relaxation ``M'`` of an :class:`MPGAM`."""

    model: MPGAM
    lower: tuple[PiecewiseEnvelope, ...]
    upper: tuple[PiecewiseEnvelope, ...]
    range: Interval
    direction: str
    link_env: PiecewiseEnvelope

    @classmethod
    def build(cls, g: MPGAM, tol: float = DEFAULT_TOL) -> GAMRelaxation:
        lower, upper, rng = component_envelopes(g, tol)
        direction = check_monotone(g.link, rng, tol)
        return cls(g, tuple(lower), tuple(upper), rng, direction, build_envelope(g.link, rng, tol))

    def _check(self, X: np.ndarray) -> None:
        if X.shape[1] != self.model.dim:
            raise DimensionMismatch(f"expected points of width {self.model.dim}, got {X.shape[1]}")
        for i, iv in enumerate(self.model.box):
            tol = 1e-9 * max(1.0, iv.width)
            if np.any(X[:, i] < iv.lo - tol) or np.any(X[:, i] > iv.hi + tol):
                raise OutOfDomain(f"coordinate {i} outside [{iv.lo}, {iv.hi}]")

    def evaluate(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        self._check(X)
        envs = self.lower if self.direction == "increasing" else self.upper
        s = sum(e.evaluate(X[:, i]) for i, e in enumerate(envs))
        s = np.clip(s, self.range.lo, self.range.hi)
        return self.link_env.evaluate(s)

    def minimize(self, tol: float = DEFAULT_TOL) -> tuple[float, list[float]]:
        g = self.model
        pick = poly_argmin if self.direction == "increasing" else poly_argmax
        total, xs = 0.0, []
        for p, iv in zip(g.components, g.box):
            v, x = pick(p, iv, tol)
            total += v
            xs.append(x)
        total = min(max(total, self.range.lo), self.range.hi)
        return float(self.link_env.value(total)), xs


def gam_relaxation_min(g: MPGAM, tol: float = DEFAULT_TOL) -> tuple[float, list[float]]:
    """Minimum of the relaxation and a product-form minimizer.

    Each component is minimized (increasing link) or maximized (decreasing
    link) on its own interval, leftmost on ties, and the link envelope is
    evaluated at the resulting sum.
    """
    rel = g.relaxation if tol == DEFAULT_TOL else GAMRelaxation.build(g, tol)
    return rel.minimize(tol)


def gam_relaxation_eval(g: MPGAM, x: Sequence[float], tol: float = DEFAULT_TOL) -> float:
    rel = g.relaxation if tol == DEFAULT_TOL else GAMRelaxation.build(g, tol)
    return float(rel.evaluate(np.asarray(x, dtype=float)[None, :])[0])


def to_dict(g: MPGAM) -> dict:
    return {
        "components": [list(p.coeffs) for p in g.components],
        "link": list(g.link.coeffs),
        "box": [[iv.lo, iv.hi] for iv in g.box],
    }


def _coeffs(v, where) -> list[float]:
    if not isinstance(v, list) or not v:
        raise ParseError("expected a non-empty list of numbers", where)
    out = []
    for k, a in enumerate(v):
        if isinstance(a, bool) or not isinstance(a, (int, float)):
            raise ParseError("expected a number", f"{where}[{k}]")
        out.append(float(a))
    return out


def from_dict(data) -> MPGAM:
    if not isinstance(data, dict):
        raise ParseError("expected a JSON object", "$")
    for key in ("components", "link", "box"):
        if key not in data:
            raise ParseError(f"missing field {key!r}", "$")
    comps = data["components"]
    if not isinstance(comps, list) or not comps:
        raise ParseError("expected a non-empty list", "$.components")
    polys = [Polynomial(_coeffs(c, f"$.components[{i}]")) for i, c in enumerate(comps)]
    link = Polynomial(_coeffs(data["link"], "$.link"))
    box_raw = data["box"]
    if not isinstance(box_raw, list):
        raise ParseError("expected a list of [lo, hi] pairs", "$.box")
    box = []
    for i, pair in enumerate(box_raw):
        lohi = _coeffs(pair, f"$.box[{i}]")
        if len(lohi) != 2 or not lohi[0] <= lohi[1]:
            raise ParseError("expected [lo, hi] with lo <= hi", f"$.box[{i}]")
        box.append(Interval(*lohi))
    try:
        return MPGAM(tuple(polys), link, tuple(box))
    except DimensionMismatch as exc:
        raise ParseError(str(exc), "$") from None


def loads(text: str | bytes) -> MPGAM:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", f"line {exc.lineno} column {exc.colno}") from None
    return from_dict(data)


def random_mpgam(rng: np.random.Generator, dim: int, degree: int, box_width: float = 2.0) -> MPGAM:
    """Random instance with a strictly increasing cubic link ``a x + b x^2 + c x^3``.

    ``b^2 < 3ac`` with ``a, c > 0`` makes the link derivative positive everywhere.
    """
    comps = tuple(Polynomial(rng.uniform(-1, 1, degree + 1)) for _ in range(dim))
    half = 0.5 * box_width
    centers = rng.uniform(-0.5, 0.5, dim)
    box = tuple(Interval(c - half, c + half) for c in centers)
    a = rng.uniform(0.5, 2.0)
    c = rng.uniform(0.05, 0.5)
    b = rng.uniform(-1, 1) * np.sqrt(3 * a * c) * 0.95
    return MPGAM(comps, Polynomial([rng.uniform(-1, 1), a, b, c]), box)


def to_pkan(g: MPGAM):
    """The same model as a two-layer network with dims ``[d, 1, 1]``."""
    from .pkan import PKAN

    return PKAN((g.dim, 1, 1), ((tuple(g.components),), ((g.link,),)), g.box)
