"""Exact rational geometry in R^n: points, balls, ball unions, finite sets.

Every predicate here is a total decision computed by sign-aware squaring of
exact rationals; no floating point touches anything a certificate depends on.
Distances themselves (square roots) are only ever exposed as rational
enclosures of controllable width.

Geometric objects carry their natural-number codes (see ``codes``): a ball
code i denotes the open ball with centre alpha_{tau1(i)} and radius
q_{tau2(i)}, an open-set code j denotes the union of the balls indexed by the
entries of list j, and a finite-set code denotes the set of points indexed by
its entries.  Ball codes stay small; list-backed codes are materialised
lazily and may legitimately be too large to build (``CodeTooLarge``).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import isqrt
from typing import Iterable, Sequence

from .codes import (
    CodeTooLarge,
    FOLD_CAP,
    list_decode,
    list_encode,
    pair,
    rat_pos,
    rat_pos_encode,
    srat_decode,
    srat_encode,
    tau1,
    tau2,
    unpair,
)

Point = tuple[Fraction, ...]

__all__ = [
    "Point",
    "Ball",
    "BallIndex",
    "OpenSet",
    "FinSet",
    "EuclideanSpace",
    "sq_dist",
    "sq_norm",
    "sqrt_enclosure",
    "dist_cmp",
    "mem_ball",
    "fdiam_bounds",
    "fdiam_upper",
    "formally_disjoint_balls",
    "formally_disjoint_open",
    "formally_contained",
    "hausdorff_le",
    "hausdorff_lt",
    "prec_lt",
    "prec_le",
    "BucketIndex",
    "as_point",
    "ball_ikey",
]


def as_point(coords: Iterable) -> Point:
    return tuple(Fraction(c) for c in coords)


def ball_ikey(b: "Ball") -> tuple[int, ...]:
    """Canonical integer tuple identifying a ball extensionally."""
    out: list[int] = []
    for c in b.center:
        out.append(c.numerator)
        out.append(c.denominator)
    out.append(b.radius.numerator)
    out.append(b.radius.denominator)
    return tuple(out)


def sq_dist(p: Point, q: Point) -> Fraction:
    """Exact squared Euclidean distance."""
    if len(p) != len(q):
        raise ValueError(f"arity mismatch: {len(p)} vs {len(q)}")
    return sum(((a - b) * (a - b) for a, b in zip(p, q)), Fraction(0))


def sq_norm(p: Point) -> Fraction:
    return sum((a * a for a in p), Fraction(0))


def sqrt_enclosure(q: Fraction, k: int) -> tuple[Fraction, Fraction]:
    """Rational lo <= sqrt(q) <= hi with hi - lo <= 2^-k; exact when q is a square."""
    q = Fraction(q)
    if q < 0:
        raise ValueError("sqrt of a negative rational")
    num, den = q.numerator, q.denominator
    scale = 1 << k
    big = num * den * scale * scale
    root = isqrt(big)
    lo = Fraction(root, den * scale)
    if root * root == big:
        return lo, lo
    return lo, Fraction(root + 1, den * scale)


def dist_cmp(p: Point, q: Point, t: Fraction) -> int:
    """Sign of d(p,q) - t, decided exactly (-1, 0 or +1)."""
    t = Fraction(t)
    if t < 0:
        return 1
    s = sq_dist(p, q)
    t2 = t * t
    if s < t2:
        return -1
    if s == t2:
        return 0
    return 1


# --- core objects -----------------------------------------------------------


@dataclass(frozen=True)
class Ball:
    """Open rational ball; identity is the (centre, radius) pair."""

    center: Point
    radius: Fraction

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        object.__setattr__(self, "radius", Fraction(self.radius))
        if self.radius <= 0:
            raise ValueError("ball radius must be positive")

    @property
    def dim(self) -> int:
        return len(self.center)

    def contains(self, p: Point) -> bool:
        return sq_dist(p, self.center) < self.radius * self.radius

    def code(self, space: "EuclideanSpace") -> int:
        return pair(space.encode_point(self.center), rat_pos_encode(self.radius))

    @staticmethod
    def from_code(i: int, space: "EuclideanSpace") -> "Ball":
        return Ball(space.decode_point(tau1(i)), rat_pos(tau2(i)))

    def key(self) -> tuple:
        return (self.center, self.radius)


@dataclass(frozen=True)
class OpenSet:
    """Finite union of rational balls (the denotation of an open-set code)."""

    balls: tuple[Ball, ...]

    def __post_init__(self):
        if len(self.balls) == 0:
            raise ValueError("an open-set code denotes a nonempty ball list")
        object.__setattr__(self, "balls", tuple(self.balls))

    @property
    def dim(self) -> int:
        return self.balls[0].dim

    def contains(self, p: Point) -> bool:
        return any(b.contains(p) for b in self.balls)

    def normalized(self) -> tuple[tuple, ...]:
        """Canonical extensional form: sorted unique integer-coded balls.

        Cached; integer tuples sort and hash an order of magnitude faster
        than Fraction tuples, which matters for big unions.
        """
        cached = getattr(self, "_norm", None)
        if cached is None:
            cached = tuple(sorted({ball_ikey(b) for b in self.balls}))
            object.__setattr__(self, "_norm", cached)
        return cached

    def union(self, other: "OpenSet") -> "OpenSet":
        return OpenSet(self.balls + other.balls)

    def code(self, space: "EuclideanSpace", cap: int | None = FOLD_CAP) -> int:
        return list_encode([b.code(space) for b in self.balls], cap=cap)

    @staticmethod
    def from_code(j: int, space: "EuclideanSpace") -> "OpenSet":
        return OpenSet(tuple(Ball.from_code(i, space) for i in list_decode(j)))

    @staticmethod
    def of(*balls: Ball) -> "OpenSet":
        return OpenSet(tuple(balls))


@dataclass(frozen=True)
class FinSet:
    """Nonempty finite set of rational points."""

    points: tuple[Point, ...]

    def __post_init__(self):
        pts = tuple(as_point(p) for p in self.points)
        if not pts:
            raise ValueError("a finite-set code denotes a nonempty point set")
        object.__setattr__(self, "points", pts)

    @property
    def dim(self) -> int:
        return len(self.points[0])

    def distinct(self) -> tuple[Point, ...]:
        return tuple(sorted(set(self.points)))

    def union(self, other: "FinSet") -> "FinSet":
        return FinSet(self.points + other.points)

    def code(self, space: "EuclideanSpace", cap: int | None = FOLD_CAP) -> int:
        return list_encode([space.encode_point(p) for p in self.points], cap=cap)

    @staticmethod
    def from_code(i: int, space: "EuclideanSpace") -> "FinSet":
        return FinSet(tuple(space.decode_point(l) for l in list_decode(i)))


class EuclideanSpace:
    """R^n with the dense sequence of rational points.

    A point code is read by (n-1)-fold unpairing into n signed-rational codes;
    the decoding is surjective onto Q^n, so the code of a rational point is
    itself the witness that the dense sequence passes within any 2^-k of it.
    """

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        self.dim = dim

    def decode_point(self, i: int) -> Point:
        codes = []
        for _ in range(self.dim - 1):
            a, i = unpair(i)
            codes.append(a)
        codes.append(i)
        return tuple(srat_decode(c) for c in codes)

    def encode_point(self, p: Point) -> int:
        p = as_point(p)
        if len(p) != self.dim:
            raise ValueError(f"point arity {len(p)} in R^{self.dim}")
        codes = [srat_encode(c) for c in p]
        acc = codes[-1]
        for c in reversed(codes[:-1]):
            acc = pair(c, acc)
        return acc

    def ball(self, center, radius) -> Ball:
        b = Ball(as_point(center), Fraction(radius))
        if b.dim != self.dim:
            raise ValueError("ball centre arity mismatch")
        return b

    def sq_dist(self, p: Point, q: Point) -> Fraction:
        return sq_dist(p, q)


# --- predicates -------------------------------------------------------------


def mem_ball(p: Point, ball: Ball) -> bool:
    """Strict membership p in B(centre, radius), decided exactly."""
    return ball.contains(as_point(p))


def fdiam_upper(j: OpenSet, k: int = 10) -> Fraction:
    """Rational upper bound on the formal diameter of the ball union."""
    return fdiam_bounds(j, k)[1]


def fdiam_bounds(j: OpenSet, k: int) -> tuple[Fraction, Fraction]:
    """Enclosure of max pairwise centre distance + 2 max radius, width < 2^-k.

    The formal diameter dominates the true diameter of the union, so the
    upper bound is a sound diameter certificate.
    """
    balls = j.balls
    extra = k + 2
    lo = Fraction(0)
    hi = Fraction(0)
    for a in range(len(balls)):
        for b in range(a + 1, len(balls)):
            s = sq_dist(balls[a].center, balls[b].center)
            l, h = sqrt_enclosure(s, extra)
            if l > lo:
                lo = l
            if h > hi:
                hi = h
    two_r = 2 * max(b.radius for b in balls)
    return lo + two_r, hi + two_r


def formally_disjoint_balls(b1: Ball, b2: Ball) -> bool:
    """d(centres) > r1 + r2, decided exactly; implies the balls are disjoint."""
    s = b1.radius + b2.radius
    return sq_dist(b1.center, b2.center) > s * s


def formally_disjoint_open(j1: OpenSet, j2: OpenSet) -> bool:
    """Every ball pair across the two unions is formally disjoint."""
    for a in j1.balls:
        for b in j2.balls:
            if not formally_disjoint_balls(a, b):
                return False
    return True


def formally_contained(inner: tuple[Point, Fraction], outer: Ball) -> bool:
    """(y,s) inside (x,r) in the formal sense d(x,y) + s < r; implies inclusion."""
    y, s = as_point(inner[0]), Fraction(inner[1])
    margin = outer.radius - s
    if margin <= 0:
        return False
    return sq_dist(y, outer.center) < margin * margin


def _directed_within(a_pts: Sequence[Point], b_pts: Sequence[Point], q2: Fraction, strict: bool) -> bool:
    for p in a_pts:
        ok = False
        for r in b_pts:
            s = sq_dist(p, r)
            if s < q2 or (not strict and s == q2):
                ok = True
                break
        if not ok:
            return False
    return True


def hausdorff_le(a: FinSet, b: FinSet, q: Fraction) -> bool:
    """Exact decision of Hausdorff distance <= q between finite point sets."""
    q = Fraction(q)
    if q < 0:
        return False
    q2 = q * q
    return _directed_within(a.points, b.points, q2, strict=False) and _directed_within(
        b.points, a.points, q2, strict=False
    )


def hausdorff_lt(a: FinSet, b: FinSet, q: Fraction) -> bool:
    """Exact decision of Hausdorff distance < q."""
    q = Fraction(q)
    if q <= 0:
        return False
    q2 = q * q
    return _directed_within(a.points, b.points, q2, strict=True) and _directed_within(
        b.points, a.points, q2, strict=True
    )


def prec_lt(a: Sequence[Point], b: Sequence[Point], eps: Fraction) -> bool:
    """Every point of a has a point of b strictly closer than eps (exact)."""
    eps = Fraction(eps)
    if eps <= 0:
        return False
    return _directed_within([as_point(p) for p in a], [as_point(p) for p in b], eps * eps, strict=True)


def prec_le(a: Sequence[Point], b: Sequence[Point], eps: Fraction) -> bool:
    eps = Fraction(eps)
    if eps < 0:
        return False
    return _directed_within([as_point(p) for p in a], [as_point(p) for p in b], eps * eps, strict=False)


class BallIndex:
    """Radius-classed bucket index over ball centres.

    ``near(p)`` yields candidate balls whose centre could be within reach of
    p (guided by floats, complete for reach up to twice the class radius);
    callers confirm every verdict exactly.  ``near_all`` falls back to the
    full list, so a miss is never silent.
    """

    def __init__(self, balls: Sequence[Ball]):
        self.balls = list(balls)
        self.classes: list[tuple[float, dict[tuple[int, ...], list[int]]]] = []
        grouped: dict[int, list[int]] = {}
        for i, b in enumerate(self.balls):
            e = b.radius.numerator.bit_length() - b.radius.denominator.bit_length()
            grouped.setdefault(max(e, -80), []).append(i)
        for e in sorted(grouped, reverse=True):
            cell = 2.0**e
            buckets: dict[tuple[int, ...], list[int]] = {}
            for i in grouped[e]:
                key = self._key(self.balls[i].center, cell)
                buckets.setdefault(key, []).append(i)
            self.classes.append((cell, buckets))

    @staticmethod
    def _key(p: Point, cell: float) -> tuple[int, ...]:
        out = []
        for c in p:
            x = c.numerator / c.denominator
            out.append(int(x / cell) - (1 if x < 0 else 0))
        return tuple(out)

    def near(self, p: Point):
        for cell, buckets in self.classes:
            key = self._key(p, cell)
            dims = len(key)
            span = (0, -1, 1, -2, 2)
            keys = [()]
            for d in range(dims):
                keys = [k + (key[d] + o,) for k in keys for o in span]
            # centre-out: the ball containing p usually sits in p's own cell
            keys.sort(key=lambda kk: (max(abs(a - b) for a, b in zip(kk, key)), kk))
            for kk in keys:
                for i in buckets.get(kk, ()):
                    yield self.balls[i]

    def near_all(self, p: Point):
        yield from self.near(p)
        yield from self.balls


class BucketIndex:
    """Uniform-grid bucket index over points for witness search.

    Float arithmetic only ever *guides* which candidates to try; membership
    verdicts are confirmed with exact comparisons by the caller.
    """

    def __init__(self, points: Sequence[Point], cell: Fraction):
        self.points = [as_point(p) for p in points]
        self.cell = Fraction(cell)
        if self.cell <= 0:
            raise ValueError("cell must be positive")
        self.buckets: dict[tuple[int, ...], list[int]] = {}
        for idx, p in enumerate(self.points):
            self.buckets.setdefault(self._key(p), []).append(idx)

    def _key(self, p: Point) -> tuple[int, ...]:
        return tuple(int(c / self.cell) if c >= 0 else -int(-c / self.cell) - 1 for c in p)

    def near(self, p: Point, rings: int = 1) -> list[int]:
        """Indices of points in the bucket of p and its ring neighbourhood."""
        p = as_point(p)
        key = self._key(p)
        out: list[int] = []
        span = range(-rings, rings + 1)
        dims = len(key)

        def rec(prefix: tuple[int, ...], d: int):
            if d == dims:
                out.extend(self.buckets.get(prefix, ()))
                return
            for off in span:
                rec(prefix + (key[d] + off,), d + 1)

        rec((), 0)
        return out

    def witness_within(self, p: Point, eps: Fraction, strict: bool = True) -> int | None:
        """Index of some point within eps of p (exact check), or None.

        Falls back to a full scan when the ring search fails, so a None
        answer is authoritative.
        """
        p = as_point(p)
        eps = Fraction(eps)
        e2 = eps * eps
        rings = int(eps / self.cell) + 1
        for idx in self.near(p, rings=min(rings, 2)):
            s = sq_dist(p, self.points[idx])
            if s < e2 or (not strict and s == e2):
                return idx
        for idx, r in enumerate(self.points):
            s = sq_dist(p, r)
            if s < e2 or (not strict and s == e2):
                return idx
        return None
