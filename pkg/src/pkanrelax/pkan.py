"""Polynomial Kolmogorov-Arnold networks and their envelope relaxation.

A network maps ``x in R^{d_0}`` through layers ``K = 1..L`` with

    z_{K,i} = sum_j phi_{K,i,j}(z_{K-1,j}),

every ``phi`` a univariate polynomial and ``d_L = 1``.  Layers are stored
0-based: ``net.layers[K-1][i][j]`` is ``phi_{K,i,j}``.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .envelope import PiecewiseEnvelope, build_envelope, concave_envelope, poly_range
from .errors import DimensionMismatch, ParseError
from .jsonio import dumps
from .poly import DEFAULT_TOL, Interval, Polynomial

LayerBounds = tuple[tuple[Interval, ...], ...]


@dataclass(frozen=True)
class PKAN:
    dims: tuple[int, ...]
    layers: tuple[tuple[tuple[Polynomial, ...], ...], ...]
    box: tuple[Interval, ...]
    max_degree: int | None = field(default=None, compare=False)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if len(dims) < 2:
            raise DimensionMismatch("a PKAN needs at least one layer")
        if any(d < 1 for d in dims):
            raise DimensionMismatch(f"layer sizes must be positive, got {dims}")
        if dims[-1] != 1:
            raise DimensionMismatch(f"last layer must have size 1, got {dims[-1]}")
        if len(self.layers) != len(dims) - 1:
            raise DimensionMismatch(f"{len(self.layers)} layers for dims {dims}")
        for k, layer in enumerate(self.layers):
            if len(layer) != dims[k + 1] or any(len(row) != dims[k] for row in layer):
                raise DimensionMismatch(f"layer {k + 1} is not {dims[k + 1]}x{dims[k]}")
        if len(self.box) != dims[0]:
            raise DimensionMismatch(f"box has {len(self.box)} intervals, expected {dims[0]}")
        if self.max_degree is not None:
            worst = max(p.degree for layer in self.layers for row in layer for p in row)
            if worst > self.max_degree:
                raise ValueError(f"polynomial of degree {worst} exceeds max degree {self.max_degree}")

    @property
    def depth(self) -> int:
        return len(self.layers)

    def phi(self, k: int, i: int, j: int) -> Polynomial:
        """``phi_{k,i,j}`` with 1-based layer index ``k`` and 0-based units."""
        return self.layers[k - 1][i][j]

    @cached_property
    def _tensors(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            n = max(len(p.coeffs) for row in layer for p in row)
            c = np.zeros((len(layer), len(layer[0]), n))
            for i, row in enumerate(layer):
                for j, p in enumerate(row):
                    c[i, j, : len(p.coeffs)] = p.coeffs
            out.append(c)
        return out

    def activations(self, xs) -> list[np.ndarray]:
        """All layer activations for a batch ``xs`` of shape ``(B, d_0)``.

        Returns ``[z_0, z_1, ..., z_L]`` with ``z_K`` of shape ``(B, d_K)``.
        """
        z = np.atleast_2d(np.asarray(xs, dtype=float))
        if z.shape[1] != self.dims[0]:
            raise DimensionMismatch(f"expected inputs of width {self.dims[0]}, got {z.shape[1]}")
        acts = [z]
        for c in self._tensors:
            x = z[:, None, :]
            acc = np.broadcast_to(c[:, :, -1], (z.shape[0],) + c.shape[:2])
            for q in range(c.shape[2] - 2, -1, -1):
                acc = acc * x + c[:, :, q]
            z = acc.sum(axis=2)
            acts.append(z)
        return acts

    def __call__(self, xs) -> np.ndarray:
        return self.activations(xs)[-1][:, 0]


def forward_eval(net: PKAN, x: Sequence[float]) -> float:
    if len(x) != net.dims[0]:
        raise DimensionMismatch(f"expected {net.dims[0]} inputs, got {len(x)}")
    z = [float(v) for v in x]
    for layer in net.layers:
        z = [sum(p(zj) for p, zj in zip(row, z)) for row in layer]
    return z[0]


def propagate_bounds(net: PKAN, tol: float = DEFAULT_TOL) -> LayerBounds:
    """Interval bounds on every activation, layer by layer.

    Each unit's bound is the sum over incoming edges of the exact range of
    the edge polynomial on the parent's bound.
    """
    bounds = [tuple(net.box)]
    for layer in net.layers:
        prev = bounds[-1]
        cur = []
        for row in layer:
            lo = hi = 0.0
            for p, iv in zip(row, prev):
                a, b = poly_range(p, iv, tol)
                lo += a
                hi += b
            cur.append(Interval(lo, hi))
        bounds.append(tuple(cur))
    return tuple(bounds)


# --------------------------------------------------------------------------
# relaxation


@dataclass(frozen=True)
class EnvelopeConstraint:
    """``g(v) <= 0`` with ``g`` convex.

    ``sense == "lower"``:  ``g = sum_j e_j(v[src_j]) - v[target]``
    ``sense == "upper"``:  ``g = v[target] - sum_j E_j(v[src_j])``
    """

    sense: str
    layer: int
    unit: int
    target: int
    sources: tuple[int, ...]
    envelopes: tuple[PiecewiseEnvelope, ...]

    def value(self, v) -> float:
        s = sum(e.value(v[j]) for j, e in zip(self.sources, self.envelopes))
        return s - v[self.target] if self.sense == "lower" else v[self.target] - s

    def gradient(self, v) -> dict[int, float]:
        sign = 1.0 if self.sense == "lower" else -1.0
        g: dict[int, float] = {self.target: -sign}
        for j, e in zip(self.sources, self.envelopes):
            g[j] = g.get(j, 0.0) + sign * e.slope(v[j])
        return g

    def values(self, V: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`value` over rows of ``V``."""
        s = sum(e.evaluate(V[:, j]) for j, e in zip(self.sources, self.envelopes))
        return s - V[:, self.target] if self.sense == "lower" else V[:, self.target] - s


@dataclass(frozen=True)
class RelaxedProblem:
    """Convex relaxation ``min t`` over envelope constraints and boxes.

    Variable 0 is ``t``; ``z_{K,i}`` sits at ``index(K, i)``.  The linear row
    ``z_{L,0} - t <= 0`` is not stored here; solvers add it themselves.
    """

    names: tuple[str, ...]
    lower: np.ndarray
    upper: np.ndarray
    constraints: tuple[EnvelopeConstraint, ...]
    offsets: tuple[int, ...]
    bounds: LayerBounds

    @property
    def n_vars(self) -> int:
        return len(self.names)

    def index(self, k: int, i: int) -> int:
        return self.offsets[k] + i

    @property
    def output(self) -> int:
        return self.index(len(self.offsets) - 1, 0)

    def assignment(self, acts: Sequence[np.ndarray]) -> np.ndarray:
        """Full variable vectors from forward activations ``[z_0, ..., z_L]``."""
        B = acts[0].shape[0]
        V = np.empty((B, self.n_vars))
        for k, z in enumerate(acts):
            V[:, self.offsets[k] : self.offsets[k] + z.shape[1]] = z
        V[:, 0] = acts[-1][:, 0]
        return V

    def max_violation(self, v) -> float:
        worst = max(0.0, v[self.output] - v[0])
        for c in self.constraints:
            worst = max(worst, c.value(v))
        return worst


def _edge_envelopes(args):
    p, iv, tol = args
    return build_envelope(p, iv, tol), concave_envelope(p, iv, tol)


def build_relaxation(net: PKAN, tol: float = DEFAULT_TOL, jobs: int = 1) -> RelaxedProblem:
    """Assemble the envelope relaxation of ``min net(x)`` over the input box.

    Edge envelopes are independent; ``jobs > 1`` builds them on a thread pool.
    """
    bounds = propagate_bounds(net, tol)
    names = ["t"]
    offsets = []
    for k, d in enumerate(net.dims):
        offsets.append(len(names))
        names.extend(f"z[{k},{i}]" for i in range(d))
    lower = np.empty(len(names))
    upper = np.empty(len(names))
    for k, layer_b in enumerate(bounds):
        for i, iv in enumerate(layer_b):
            lower[offsets[k] + i] = iv.lo
            upper[offsets[k] + i] = iv.hi
    out_iv = bounds[-1][0]
    lower[0], upper[0] = out_iv.lo, out_iv.hi

    work = [
        (p, bounds[k][j], tol)
        for k, layer in enumerate(net.layers)
        for row in layer
        for j, p in enumerate(row)
    ]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            envs = list(pool.map(_edge_envelopes, work))
    else:
        envs = [_edge_envelopes(w) for w in work]

    constraints = []
    pos = 0
    for k, layer in enumerate(net.layers):
        srcs = tuple(offsets[k] + j for j in range(net.dims[k]))
        for i, row in enumerate(layer):
            cvx = tuple(e[0] for e in envs[pos : pos + len(row)])
            ccv = tuple(e[1] for e in envs[pos : pos + len(row)])
            pos += len(row)
            target = offsets[k + 1] + i
            constraints.append(EnvelopeConstraint("lower", k + 1, i, target, srcs, cvx))
            constraints.append(EnvelopeConstraint("upper", k + 1, i, target, srcs, ccv))
    return RelaxedProblem(tuple(names), lower, upper, tuple(constraints), tuple(offsets), bounds)


# --------------------------------------------------------------------------
# random instances


def _normalized_poly(a: np.ndarray, iv: Interval) -> Polynomial:
    """``sum_q a_q ((x - c) / r)^q`` expanded into monomial coefficients."""
    r = 0.5 * iv.width
    c = iv.mid
    if r == 0.0:
        r = 1.0
    u = Polynomial([-c / r, 1.0 / r])
    out = Polynomial([a[-1]])
    for q in range(len(a) - 2, -1, -1):
        out = out * u + a[q]
    return out


def generate_random(layer_count: int, width: int, input_dim: int, degree: int, seed: int) -> PKAN:
    """Random PKAN with ``layer_count`` hidden layers of ``width`` units.

    Coefficients are i.i.d. standard normal scaled by
    ``1 / (d_{K-1} sqrt(degree + 1))``, taken with respect to the parent's
    propagated interval mapped onto ``[-1, 1]`` so activations stay O(1)
    through deep stacks.  Inputs live in ``[-1.5, 1.5]^input_dim``.
    """
    if min(layer_count, width, input_dim, degree) < 1:
        raise ValueError("all architecture parameters must be >= 1")
    rng = np.random.default_rng(seed)
    dims = [input_dim] + [width] * layer_count + [1]
    box = tuple(Interval(-1.5, 1.5) for _ in range(input_dim))
    prev = box
    layers = []
    for k in range(1, len(dims)):
        scale = 1.0 / (dims[k - 1] * math.sqrt(degree + 1))
        layer = []
        for _ in range(dims[k]):
            row = tuple(
                _normalized_poly(rng.standard_normal(degree + 1) * scale, prev[j]) for j in range(dims[k - 1])
            )
            layer.append(row)
        layers.append(tuple(layer))
        # bounds of the new layer drive the normalization of the next
        cur = []
        for row in layer:
            lo = hi = 0.0
            for p, iv in zip(row, prev):
                a, b = poly_range(p, iv)
                lo, hi = lo + a, hi + b
            cur.append(Interval(lo, hi))
        prev = tuple(cur)
    return PKAN(tuple(dims), tuple(layers), box, degree)


# --------------------------------------------------------------------------
# serialization


def to_dict(net: PKAN) -> dict:
    return {
        "dims": list(net.dims),
        "box": [[iv.lo, iv.hi] for iv in net.box],
        "layers": [[[list(p.coeffs) for p in row] for row in layer] for layer in net.layers],
    }


def serialize(net: PKAN) -> bytes:
    return (dumps(to_dict(net)) + "\n").encode()


def _number(v, where) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError(f"expected a number, got {v!r}", where)
    if not math.isfinite(v):
        raise ParseError("non-finite number", where)
    return float(v)


def _list(v, where) -> list:
    if not isinstance(v, list):
        raise ParseError(f"expected a list, got {type(v).__name__}", where)
    return v


def from_dict(data) -> PKAN:
    if not isinstance(data, dict):
        raise ParseError("top level must be an object")
    for key in ("dims", "box", "layers"):
        if key not in data:
            raise ParseError(f"missing field {key!r}")
    dims = []
    for i, d in enumerate(_list(data["dims"], "dims")):
        if isinstance(d, bool) or not isinstance(d, int) or d < 1:
            raise ParseError(f"expected a positive integer, got {d!r}", f"dims[{i}]")
        dims.append(d)
    layers_raw = _list(data["layers"], "layers")
    if not layers_raw:
        raise ParseError("empty layer list", "layers")
    if len(dims) != len(layers_raw) + 1:
        raise ParseError(f"{len(layers_raw)} layers do not match dims {dims}", "layers")
    box = []
    for i, pair in enumerate(_list(data["box"], "box")):
        pair = _list(pair, f"box[{i}]")
        if len(pair) != 2:
            raise ParseError("expected [lo, hi]", f"box[{i}]")
        lo, hi = _number(pair[0], f"box[{i}][0]"), _number(pair[1], f"box[{i}][1]")
        if lo > hi:
            raise ParseError(f"lo > hi ({lo} > {hi})", f"box[{i}]")
        box.append(Interval(lo, hi))
    layers = []
    for k, layer in enumerate(layers_raw):
        rows = []
        for i, row in enumerate(_list(layer, f"layers[{k}]")):
            polys = []
            for j, coeffs in enumerate(_list(row, f"layers[{k}][{i}]")):
                where = f"layers[{k}][{i}][{j}]"
                coeffs = _list(coeffs, where)
                if not coeffs:
                    raise ParseError("empty coefficient list", where)
                polys.append(Polynomial([_number(c, f"{where}[{q}]") for q, c in enumerate(coeffs)]))
            rows.append(tuple(polys))
        layers.append(tuple(rows))
    try:
        return PKAN(tuple(dims), tuple(layers), tuple(box))
    except (DimensionMismatch, ValueError) as exc:
        raise ParseError(str(exc)) from None


def deserialize(raw: bytes | str) -> PKAN:
    if isinstance(raw, bytes):
        try:
            raw = raw.decode()
        except UnicodeDecodeError as exc:
            raise ParseError(f"not UTF-8 text ({exc.reason})", f"byte {exc.start}") from None
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"line {exc.lineno} column {exc.colno}") from None
    return from_dict(data)
