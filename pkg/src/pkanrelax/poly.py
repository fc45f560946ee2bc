"""Dense univariate polynomials: evaluation, differentiation, real roots.

Coefficients are stored in ascending order, ``coeffs[i]`` multiplying
``x**i``.  Everything here is immutable and side-effect free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import IdenticallyZero, ParseError, RootFailure

# Relative threshold below which trailing coefficients are dropped.
ZERO_THRESHOLD = 1e-14
DEFAULT_TOL = 1e-10

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Interval:
    """Closed interval ``[lo, hi]``; ``lo == hi`` is allowed."""

    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if not lo <= hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def degenerate(self) -> bool:
        return self.lo == self.hi

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= x <= self.hi + tol

    def __iter__(self):
        yield self.lo
        yield self.hi


def _trim(coeffs: Sequence[float]) -> tuple[float, ...]:
    c = [float(a) for a in coeffs]
    if not c:
        return (0.0,)
    scale = max(abs(a) for a in c)
    if not all(math.isfinite(a) for a in c):
        raise ValueError("polynomial coefficients must be finite")
    cut = ZERO_THRESHOLD * scale
    n = len(c)
    while n > 1 and abs(c[n - 1]) <= cut:
        n -= 1
    return tuple(c[:n])


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial with ascending coefficients.

    Trailing coefficients smaller than ``1e-14 * max|c|`` are trimmed at
    construction so that arithmetic noise never inflates the degree.

    >>> p = Polynomial([0.0, 0.0, 1.0])
    >>> p(3.0), p.degree
    (9.0, 2)
    """

    coeffs: tuple[float, ...]

    def __init__(self, coeffs: Iterable[float]):
        object.__setattr__(self, "coeffs", _trim(list(coeffs)))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return all(a == 0.0 for a in self.coeffs)

    def __call__(self, x):
        # Horner; works elementwise on numpy arrays as well
        c = self.coeffs
        acc = c[-1]
        for a in c[-2::-1]:
            acc = acc * x + a
        return acc

    def derivative(self) -> Polynomial:
        return self.d

    @cached_property
    def d(self) -> Polynomial:
        """First derivative, computed once per instance."""
        c = self.coeffs
        if len(c) == 1:
            return Polynomial([0.0])
        return Polynomial([i * c[i] for i in range(1, len(c))])

    @cached_property
    def abs_scale(self) -> tuple[float, ...]:
        return tuple(abs(a) for a in self.coeffs)

    def residual_scale(self, x: float) -> float:
        """``1 + sum |c_i| max(1,|x|)^i``; the yardstick for root residuals."""
        r = max(1.0, abs(x))
        acc = 0.0
        for a in reversed(self.abs_scale):
            acc = acc * r + a
        return 1.0 + acc

    def __neg__(self) -> Polynomial:
        return Polynomial([-a for a in self.coeffs])

    def __add__(self, other) -> Polynomial:
        if not isinstance(other, Polynomial):
            other = Polynomial([other])
        a, b = self.coeffs, other.coeffs
        n = max(len(a), len(b))
        return Polynomial(
            [(a[i] if i < len(a) else 0.0) + (b[i] if i < len(b) else 0.0) for i in range(n)]
        )

    __radd__ = __add__

    def __sub__(self, other) -> Polynomial:
        if not isinstance(other, Polynomial):
            other = Polynomial([other])
        return self + (-other)

    def __rsub__(self, other) -> Polynomial:
        return (-self) + other

    def __mul__(self, other) -> Polynomial:
        if not isinstance(other, Polynomial):
            return Polynomial([float(other) * a for a in self.coeffs])
        return Polynomial(np.convolve(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def __pow__(self, k: int) -> Polynomial:
        out = Polynomial([1.0])
        for _ in range(int(k)):
            out = out * self
        return out

    def to_text(self) -> str:
        return ",".join(repr(a) for a in self.coeffs)

    @classmethod
    def from_text(cls, text: str) -> Polynomial:
        """Parse the comma-separated ascending form used on the command line."""
        parts = [s.strip() for s in text.split(",")]
        if not parts or any(s == "" for s in parts):
            raise ParseError(f"bad coefficient list {text!r}")
        try:
            vals = [float(s) for s in parts]
        except ValueError as exc:
            raise ParseError(f"bad coefficient list {text!r}: {exc}") from None
        if not all(math.isfinite(v) for v in vals):
            raise ParseError(f"non-finite coefficient in {text!r}")
        return cls(vals)


X = Polynomial([0.0, 1.0])


def eval_poly(p: Polynomial, x: float) -> float:
    return p(x)


def derivative(p: Polynomial) -> Polynomial:
    return p.d


# --------------------------------------------------------------------------
# roots


def _horner_complex(c: np.ndarray, z: np.ndarray) -> np.ndarray:
    acc = np.full(z.shape, c[-1], dtype=complex)
    for a in c[-2::-1]:
        acc = acc * z + a
    return acc


def _aberth(c: np.ndarray, maxiter: int = 400) -> np.ndarray | None:
    """All complex roots of the polynomial with ascending coeffs ``c``.

    Returns None when the iteration fails to settle.
    """
    n = len(c) - 1
    a = c / c[-1]
    # Fujiwara bound on root moduli
    k = np.arange(1, n + 1)
    b = np.abs(a[n - k]) ** (1.0 / k)
    b[-1] = (abs(a[0]) / 2.0) ** (1.0 / n)
    radius = 2.0 * b.max()
    if radius == 0.0:
        return np.zeros(n, dtype=complex)
    da = a[1:] * k
    absa = np.abs(a)
    z = radius * np.exp(1j * (2.0 * np.pi * k / n + 0.4))
    active = np.ones(n, dtype=bool)
    for _ in range(maxiter):
        pz = _horner_complex(a, z)
        dz = _horner_complex(da, z)
        # rounding level of |p(z)|; below it no further progress is possible
        bound = _horner_complex(absa, np.abs(z)).real * 4 * _EPS
        active &= np.abs(pz) > bound
        if not active.any():
            return z
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        inv = 1.0 / diff
        np.fill_diagonal(inv, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = pz / dz
            w = ratio / (1.0 - ratio * inv.sum(axis=1))
        bad = ~np.isfinite(w)
        if bad.any():
            w[bad] = 1e-3 * radius * np.exp(1j * k[bad])
        step = np.where(active, w, 0.0)
        z = z - step
        small = np.abs(step) <= 4 * _EPS * np.maximum(np.abs(z), 1e-300)
        active &= ~small
        if not active.any():
            return z
    return None


def complex_roots(p: Polynomial) -> np.ndarray:
    """All complex roots of ``p`` (empty for constants)."""
    if p.is_zero:
        raise IdenticallyZero("the zero polynomial has no isolated roots")
    c = np.asarray(p.coeffs, dtype=float)
    n = len(c) - 1
    if n == 0:
        return np.zeros(0, dtype=complex)
    if n == 1:
        return np.array([-c[0] / c[1]], dtype=complex)
    if n == 2:
        a2, a1, a0 = c[2], c[1], c[0]
        disc = a1 * a1 - 4 * a2 * a0
        if disc >= 0:
            q = -0.5 * (a1 + math.copysign(math.sqrt(disc), a1))
            r1 = q / a2
            r2 = a0 / q if q != 0 else 0.0
            return np.array([r1, r2], dtype=complex)
        re = -a1 / (2 * a2)
        im = math.sqrt(-disc) / (2 * abs(a2))
        return np.array([re + 1j * im, re - 1j * im])
    z = _aberth(c)
    if z is None:
        try:
            z = np.polynomial.polynomial.polyroots(c)
        except np.linalg.LinAlgError as exc:
            raise RootFailure(f"root iteration failed for degree {n}") from exc
        z = np.asarray(z, dtype=complex)
    return z


def _polish(p: Polynomial, x: float, steps: int = 8) -> float:
    dp = p.d
    best, best_r = x, abs(p(x))
    for _ in range(steps):
        if best_r == 0.0:
            break
        slope = dp(x)
        if slope == 0.0:
            break
        x_new = x - p(x) / slope
        if not math.isfinite(x_new):
            break
        r = abs(p(x_new))
        if r < best_r:
            best, best_r = x_new, r
        if abs(x_new - x) <= 4 * _EPS * max(1.0, abs(x)):
            break
        x = x_new
    return best


def _sign_change_near(p: Polynomial, x: float, delta: float) -> bool:
    return p(x - delta) * p(x + delta) <= 0.0


@lru_cache(maxsize=4096)
def _all_real_roots(coeffs: tuple[float, ...], tol: float) -> tuple[float, ...]:
    p = Polynomial(coeffs)
    z = complex_roots(p)
    cands = []
    for zk in z:
        scale = max(1.0, abs(zk))
        im = abs(zk.imag)
        if im > max(tol, 1e-5 * scale):
            continue
        x = _polish(p, float(zk.real))
        ok = abs(p(x)) <= tol * p.residual_scale(x)
        if not ok and im > 0.0:
            ok = _sign_change_near(p, x, im + tol)
        if ok:
            cands.append(x)
    cands.sort()
    merged: list[list[float]] = []
    for x in cands:
        if merged and x - merged[-1][-1] <= 2 * tol:
            merged[-1].append(x)
        else:
            merged.append([x])
    return tuple(sum(g) / len(g) for g in merged)


def _canonical(p: Polynomial) -> tuple[float, ...]:
    # p and -p share roots; share the cache entry
    c = p.coeffs
    if c[-1] < 0:
        return tuple(-a for a in c)
    return c


def real_roots(p: Polynomial, interval: Interval, tol: float = DEFAULT_TOL) -> list[float]:
    """Real roots of ``p`` strictly inside ``(interval.lo, interval.hi)``, ascending.

    Roots closer than ``2*tol`` are merged into one representative.  Raises
    :class:`IdenticallyZero` for the zero polynomial.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if p.is_zero:
        raise IdenticallyZero("the zero polynomial has no isolated roots")
    if p.degree == 0:
        return []
    lo, hi = interval.lo, interval.hi
    return [r for r in _all_real_roots(_canonical(p), tol) if lo < r < hi]


def derivative_range(p: Polynomial, interval: Interval, tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """Bracket ``(m, M)`` of ``p'`` over ``interval``, widened by ``tol``.

    Exact up to root accuracy: ``p'`` is evaluated at both endpoints and at
    every real root of ``p''`` inside the interval.
    """
    dp = p.d
    lo, hi = interval.lo, interval.hi
    if lo == hi:
        v = dp(lo)
        return v - tol, v + tol
    pts = [lo, hi]
    ddp = dp.d
    if not ddp.is_zero:
        pts.extend(real_roots(ddp, interval, tol))
    vals = [dp(x) for x in pts]
    return min(vals) - tol, max(vals) + tol
