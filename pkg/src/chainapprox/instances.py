"""Built-in instances with truth oracles, charts and sound set oracles.

Each instance bundles: a cover oracle (and derived complement / meeting-ball
oracles), a canonical approximation family, an atlas of chart witnesses, and
a truth oracle used only by tests and audits, never on the certification
path.

Cover certification never trusts a truth oracle.  Instead every instance
carries exact witnesses of what the set is:

* curve/patch instances (circle, sphere, torus) hold exact rational
  parametrisations whose images are exactly the set; a candidate cover is
  certified by an adaptive sweep that formally absorbs whole parameter
  segments into single balls (exact comparisons, Lipschitz bounds);
* interval instances (segment, boundary point sets) decide coverage exactly
  by a rational sweep over the ball intervals;
* level-set instances go through the interval-arithmetic complement oracle
  plus the bounding box;
* the adversarial segment certifies covers against its current rational
  upper endpoint, which is all a right-c.e. number ever offers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Sequence

from .codes import list_decode, unpair
from .space import (
    Ball,
    EuclideanSpace,
    FinSet,
    OpenSet,
    Point,
    as_point,
    sq_dist,
    sq_norm,
)
from .sets import (
    Approx,
    CeOracle,
    CoCeOracle,
    SemiOracle,
    approx_to_ce,
    approx_to_semi,
    semi_to_coce,
)
from .levelset import LevelSetInstance, coce_from_levelset, ieval, IntervalBox, parse_expr, semi_from_levelset
from .reconstruction import ChartWitness

__all__ = [
    "Instance",
    "make_instance",
    "instance_names",
    "adversarial_gap_demo",
    "CircleTruth",
    "SegmentTruth",
    "SphereTruth",
    "TorusTruth",
]

INSTANCE_NAMES = (
    "circle",
    "segment",
    "sphere",
    "torus",
    "paper-example-i",
    "adversarial-segment",
)


def instance_names() -> tuple[str, ...]:
    return INSTANCE_NAMES


@dataclass
class Instance:
    """A wired test instance; oracles are single-consumer, build anew per run."""

    name: str
    space: EuclideanSpace
    semi: SemiOracle | None = None
    boundary_semi: SemiOracle | None = None
    atlas: list[ChartWitness] = field(default_factory=list)
    truth: object | None = None
    approx: Approx | None = None
    ce: CeOracle | None = None
    coce: CoCeOracle | None = None
    levelset: LevelSetInstance | None = None
    meta: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)


# --- exact sweeps --------------------------------------------------------------


@dataclass
class CurvePiece:
    """Exactly parametrised curve segment lying on the target set.

    ``eval_nd(t)`` returns integer coordinate numerators and a common
    denominator for the exact image point; ``lip`` bounds image distance by
    lip * |t - t'|.
    """

    lo: Fraction
    hi: Fraction
    lip: Fraction
    eval_nd: Callable[[Fraction], tuple[tuple[int, ...], int]]

    def eval_point(self, t: Fraction) -> Point:
        nums, den = self.eval_nd(t)
        return tuple(Fraction(n, den) for n in nums)


@dataclass
class PatchPiece:
    """Exactly parametrised 2-D patch on the target set (sweep over boxes)."""

    box: tuple[tuple[Fraction, Fraction], ...]
    lip_inf: Fraction
    eval_nd: Callable[[Point], tuple[tuple[int, ...], int]]

    def eval_point(self, p: Point) -> Point:
        nums, den = self.eval_nd(p)
        return tuple(Fraction(n, den) for n in nums)


class _BallLookup:
    """Radius-classed bucket index guiding which balls to try; verdicts are
    always confirmed exactly by the caller."""

    def __init__(self, balls: Sequence[Ball]):
        self.data = []  # (cnums, cden, radius, float center)
        classes: dict[int, dict[tuple[int, ...], list[int]]] = {}
        self.cellsize: dict[int, float] = {}
        for i, b in enumerate(balls):
            den = 1
            for c in b.center:
                d = c.denominator
                den = den * d // _gcd(den, d)
            cnums = tuple(c.numerator * (den // c.denominator) for c in b.center)
            fc = tuple(n / den for n in cnums)
            self.data.append((cnums, den, b.radius, fc))
            e = max(b.radius.numerator.bit_length() - b.radius.denominator.bit_length(), -60)
            cls = classes.setdefault(e, {})
            cell = 2.0**e
            self.cellsize[e] = cell
            key = tuple(int(x / cell) - (1 if x < 0 else 0) for x in fc)
            cls.setdefault(key, []).append(i)
        # larger balls first: they absorb whole segments fastest
        self.classes = sorted(classes.items(), key=lambda kv: -kv[0])

    def candidates(self, fp: tuple[float, ...], fmargin: float = 0.0) -> Iterator[int]:
        """Candidate ball ids, nearest first within each radius class.

        Classes whose radius cannot exceed the margin are skipped (their
        slack would be nonpositive anyway); ordering is float-guided, the
        caller's exact tests decide.
        """
        for e, buckets in self.classes:
            cell = self.cellsize[e]
            if 2.0 * cell <= fmargin:
                continue
            base = tuple(int(x / cell) - (1 if x < 0 else 0) for x in fp)
            span = (-2, -1, 0, 1, 2)
            keys = [()]
            for d in range(len(fp)):
                keys = [k + (base[d] + o,) for k in keys for o in span]
            found: list[tuple[float, int]] = []
            for key in keys:
                for i in buckets.get(key, ()):
                    fc = self.data[i][3]
                    fd = sum((a - b) * (a - b) for a, b in zip(fp, fc))
                    found.append((fd, i))
            found.sort()
            for _, i in found:
                yield i


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def _absorbed(pnums, pden, cnums, cden, slack: Fraction) -> bool:
    """Exact test d(p, c) < slack on integer-coded points."""
    if slack <= 0:
        return False
    acc = 0
    for pn, cn in zip(pnums, cnums):
        d = pn * cden - cn * pden
        acc += d * d
    sn, sd = slack.numerator, slack.denominator
    pc = pden * cden
    return acc * sd * sd < sn * sn * pc * pc


def sweep_cover_certifier(pieces: Sequence[CurvePiece], min_width_exp: int = 48):
    """Certifier deciding 'the union covers every piece image' by adaptive
    formal absorption of parameter segments into single balls.

    Sound both ways it answers: True only after every segment is absorbed
    (so the union covers the set); None only after an exact membership
    failure of a piece point (which lies on the set).  False means the
    effort ran out.
    """

    def certify(os: OpenSet, effort: int):
        lookup = _BallLookup(os.balls)
        work = 0
        # definitive rejection on a coarse probe
        for piece in pieces:
            for j in range(5):
                t = piece.lo + (piece.hi - piece.lo) * Fraction(j, 4)
                pnums, pden = piece.eval_nd(t)
                fp = tuple(n / pden for n in pnums)
                hit = False
                for i in lookup.candidates(fp):
                    cnums, cden, rad, _ = lookup.data[i]
                    if _absorbed(pnums, pden, cnums, cden, rad):
                        hit = True
                        break
                if not hit:
                    for cnums, cden, rad, _ in lookup.data:
                        if _absorbed(pnums, pden, cnums, cden, rad):
                            hit = True
                            break
                if not hit:
                    return None
        for piece in pieces:
            stack = [(piece.lo, piece.hi)]
            last_hit: int | None = None
            while stack:
                a, b = stack.pop()
                work += 1
                if work > effort:
                    return False
                mid = (a + b) / 2
                pnums, pden = piece.eval_nd(mid)
                margin = piece.lip * (b - a) / 2
                # curve locality: the previous segment's ball usually works
                if last_hit is not None:
                    cnums, cden, rad, _ = lookup.data[last_hit]
                    if _absorbed(pnums, pden, cnums, cden, rad - margin):
                        continue
                fp = tuple(n / pden for n in pnums)
                fmargin = margin.numerator / margin.denominator
                done = False
                for i in lookup.candidates(fp, fmargin):
                    cnums, cden, rad, _ = lookup.data[i]
                    if _absorbed(pnums, pden, cnums, cden, rad - margin):
                        last_hit = i
                        done = True
                        break
                if done:
                    continue
                if (b - a).denominator.bit_length() > min_width_exp:
                    return False
                stack.append((mid, b))
                stack.append((a, mid))
        return True

    return certify


def patch_cover_certifier(pieces: Sequence[PatchPiece], min_width_exp: int = 30):
    """Box-subdivision analogue of the curve sweep for 2-D patches."""

    def certify(os: OpenSet, effort: int):
        lookup = _BallLookup(os.balls)
        work = 0
        for piece in pieces:
            stack = [piece.box]
            while stack:
                box = stack.pop()
                work += 1
                if work > effort:
                    return False
                center = tuple((lo + hi) / 2 for lo, hi in box)
                pnums, pden = piece.eval_nd(center)
                fp = tuple(n / pden for n in pnums)
                w = max(hi - lo for lo, hi in box)
                margin = piece.lip_inf * w / 2
                fmargin = margin.numerator / margin.denominator
                done = False
                for i in lookup.candidates(fp, fmargin):
                    cnums, cden, rad, _ = lookup.data[i]
                    if _absorbed(pnums, pden, cnums, cden, rad - margin):
                        done = True
                        break
                if done:
                    continue
                if w.denominator.bit_length() > min_width_exp:
                    return None if margin == 0 else False
                widest = max(range(len(box)), key=lambda c: box[c][1] - box[c][0])
                lo, hi = box[widest]
                mid = (lo + hi) / 2
                for part in ((lo, mid), (mid, hi)):
                    nb = list(box)
                    nb[widest] = part
                    stack.append(tuple(nb))
        return True

    return certify


def interval_cover_certifier(targets: Sequence[tuple[Fraction, Fraction]]):
    """Exact decision: the ball intervals cover every closed target interval.

    Greedy single pass over the spans sorted by left endpoint: open
    intervals cover closed [lo, hi] iff the reachable right frontier can be
    pushed strictly past hi starting from a span containing lo.
    """

    def certify(os: OpenSet, effort: int):
        spans = sorted((b.center[0] - b.radius, b.center[0] + b.radius) for b in os.balls)
        for lo, hi in targets:
            cur = lo
            i = 0
            best = None
            n = len(spans)
            while True:
                while i < n and spans[i][0] < cur:
                    if best is None or spans[i][1] > best:
                        best = spans[i][1]
                    i += 1
                if best is None or best <= cur:
                    return None
                cur = best
                if cur > hi:
                    break
        return True

    return certify


def point_cover_certifier(points: Sequence[Point]):
    """Exact decision: every target point lies in some ball."""

    def certify(os: OpenSet, effort: int):
        for p in points:
            if not os.contains(p):
                return None
        return True

    return certify


# --- truth oracles ---------------------------------------------------------------


class CircleTruth:
    """Exact predicates and exact on-set samples for the unit circle."""

    sample_err = Fraction(0)

    def __init__(self):
        self.dim = 2

    def dist_lt(self, p: Point, q: Fraction) -> bool:
        q = Fraction(q)
        if q <= 0:
            return False
        t = sq_norm(as_point(p))
        if t >= (1 + q) * (1 + q):
            return False
        r = 1 - q
        return r < 0 or t > r * r

    def dist_le(self, p: Point, q: Fraction) -> bool:
        q = Fraction(q)
        if q < 0:
            return False
        t = sq_norm(as_point(p))
        if t > (1 + q) * (1 + q):
            return False
        r = 1 - q
        return r <= 0 or t >= r * r

    def meets_ball(self, ball: Ball) -> bool:
        return self.dist_lt(ball.center, ball.radius)

    def sample(self, k: int) -> list[Point]:
        pts: list[Point] = []
        T = k + 1
        for j in range(-(1 << T), (1 << T) + 1):
            t = Fraction(j, 1 << T)
            den = 1 + t * t
            x, y = (1 - t * t) / den, 2 * t / den
            pts.append((x, y))
            pts.append((-x, y))
        return pts


class SegmentTruth:
    """Exact predicates for [0, 1] in R^1."""

    sample_err = Fraction(0)

    def __init__(self):
        self.dim = 1

    def _dist(self, p: Point) -> Fraction:
        x = as_point(p)[0]
        return max(-x, x - 1, Fraction(0))

    def dist_lt(self, p, q) -> bool:
        return self._dist(p) < Fraction(q)

    def dist_le(self, p, q) -> bool:
        return self._dist(p) <= Fraction(q)

    def meets_ball(self, ball: Ball) -> bool:
        return self.dist_lt(ball.center, ball.radius)

    def sample(self, k: int) -> list[Point]:
        step = Fraction(1, 1 << (k + 1))
        return [(j * step,) for j in range((1 << (k + 1)) + 1)]


class SphereTruth:
    """Exact predicates and exact samples for the unit sphere in R^3."""

    sample_err = Fraction(0)

    def __init__(self):
        self.dim = 3

    def dist_lt(self, p, q) -> bool:
        q = Fraction(q)
        if q <= 0:
            return False
        t = sq_norm(as_point(p))
        if t >= (1 + q) * (1 + q):
            return False
        r = 1 - q
        return r < 0 or t > r * r

    def dist_le(self, p, q) -> bool:
        q = Fraction(q)
        if q < 0:
            return False
        t = sq_norm(as_point(p))
        if t > (1 + q) * (1 + q):
            return False
        r = 1 - q
        return r <= 0 or t >= r * r

    def meets_ball(self, ball: Ball) -> bool:
        return self.dist_lt(ball.center, ball.radius)

    def sample(self, k: int) -> list[Point]:
        pts: list[Point] = []
        steps = 1 << min(k + 1, 7)
        for i in range(-steps, steps + 1):
            for j in range(-steps, steps + 1):
                s = Fraction(i, steps)
                t = Fraction(j, steps)
                d1, d2 = 1 + s * s, 1 + t * t
                cu, su = (1 - s * s) / d1, 2 * s / d1
                cv, sv = (1 - t * t) / d2, 2 * t / d2
                pts.append((cu * cv, cu * sv, su))
                pts.append((-cu * cv, cu * sv, su))
        return pts


class TorusTruth:
    """Exact predicates for the torus (sqrt(x^2+y^2)-2)^2 + z^2 = 1."""

    sample_err = Fraction(0)

    def __init__(self):
        self.dim = 3

    def _sqrtw_cmp(self, p: Point, c: Fraction) -> int:
        """Sign of sqrt(w) - c where w = (sqrt(B)-2)^2 + z^2, B = x^2+y^2."""
        x, y, z = as_point(p)
        B = x * x + y * y
        A = B + 4 + z * z  # w = A - 4 sqrt(B)
        # compare w with c^2: A - c^2 vs 4 sqrt(B)
        lhs = A - c * c
        if lhs < 0:
            return -1
        l2 = lhs * lhs
        r2 = 16 * B
        if l2 < r2:
            return -1
        if l2 == r2:
            return 0
        return 1

    def dist_lt(self, p, q) -> bool:
        q = Fraction(q)
        if q <= 0:
            return False
        # |sqrt(w) - 1| < q  <=>  1 - q < sqrt(w) < 1 + q
        if self._sqrtw_cmp(p, 1 + q) >= 0:
            return False
        r = 1 - q
        return r < 0 or self._sqrtw_cmp(p, r) > 0

    def dist_le(self, p, q) -> bool:
        q = Fraction(q)
        if q < 0:
            return False
        if self._sqrtw_cmp(p, 1 + q) > 0:
            return False
        r = 1 - q
        return r <= 0 or self._sqrtw_cmp(p, r) >= 0

    def meets_ball(self, ball: Ball) -> bool:
        return self.dist_lt(ball.center, ball.radius)

    def sample(self, k: int) -> list[Point]:
        pts: list[Point] = []
        steps = 1 << min(k + 1, 6)
        for i in range(-steps, steps + 1):
            for j in range(-steps, steps + 1):
                s = Fraction(i, steps)
                t = Fraction(j, steps)
                d1, d2 = 1 + s * s, 1 + t * t
                cphi, sphi = (1 - s * s) / d1, 2 * s / d1
                cpsi, spsi = (1 - t * t) / d2, 2 * t / d2
                for sc in (cphi, -cphi):
                    for tc in (cpsi, -cpsi):
                        rad = 2 + sc
                        pts.append((rad * tc, rad * spsi, sphi))
        return pts

# --- circle ---------------------------------------------------------------------

TAU = Fraction(5, 4)


def _weier_nd(t: Fraction) -> tuple[tuple[int, int], int]:
    """Exact circle point ((1-t^2)/(1+t^2), 2t/(1+t^2)) as (nums, den)."""
    n, d = t.numerator, t.denominator
    return (d * d - n * n, 2 * n * d), d * d + n * n


def circle_truth_pieces() -> list[CurvePiece]:
    def right(t: Fraction):
        return _weier_nd(t)

    def left(t: Fraction):
        (x, y), den = _weier_nd(t)
        return (-x, y), den

    one = Fraction(1)
    return [CurvePiece(-one, one, Fraction(2), right), CurvePiece(-one, one, Fraction(2), left)]


def _circle_eval(sign: int):
    def ev(x: Point, k: int) -> Point:
        t = TAU * x[0]
        (a, b), den = _weier_nd(t)
        return (Fraction(sign * a, den), Fraction(sign * b, den))

    return ev


def _circle_local_lip(box) -> Fraction:
    (a, b) = box[0]
    if a <= 0 <= b:
        umin = Fraction(0)
    else:
        umin = min(abs(a), abs(b))
    t = TAU * umin
    return 2 * TAU / (1 + t * t)


def _circle_outer_cover(sign: int) -> OpenSet:
    # balls on the far side of the circle: centred at the antipodal chart's
    # exact points, radius 1/8; they cover the closed complementary arc and
    # stay clear of this chart's [-2,2] image (verified by instance tests)
    balls = []
    for j in range(-8, 9):
        t = TAU * Fraction(j, 32)
        (a, b), den = _weier_nd(t)
        balls.append(Ball((Fraction(-sign * a, den), Fraction(-sign * b, den)), Fraction(1, 8)))
    return OpenSet(tuple(balls))


def _circle_charts() -> list[ChartWitness]:
    return [
        ChartWitness(
            name="arc+",
            arity=1,
            evaluator=_circle_eval(+1),
            lipschitz_inf=2 * TAU,
            outer_cover=_circle_outer_cover(+1),
            local_lipschitz=_circle_local_lip,
        ),
        ChartWitness(
            name="arc-",
            arity=1,
            evaluator=_circle_eval(-1),
            lipschitz_inf=2 * TAU,
            outer_cover=_circle_outer_cover(-1),
            local_lipschitz=_circle_local_lip,
        ),
    ]


def _snap(p: Point, sigma: int) -> Point:
    scale = 1 << sigma
    return tuple(Fraction((c * scale).__floor__(), scale) for c in p)


def _circle_instance() -> Instance:
    space = EuclideanSpace(2)
    truth = CircleTruth()
    pieces = circle_truth_pieces()

    def autonomous() -> Iterator[OpenSet]:
        for m in range(0, 11):
            r = Fraction(2, 2**m)
            yield OpenSet(tuple(Ball(p, r) for p in truth.sample(m)))

    semi = SemiOracle(
        sweep_cover_certifier(pieces),
        autonomous,
        name="circle",
        space=space,
        effort0=4096,
    )

    def approx_fn(k: int) -> FinSet:
        # on-circle samples at density 2^-(k+1), snapped to the 2^-(k+3) grid:
        # total offset stays below 2^-k
        return FinSet(tuple(_snap(p, k + 3) for p in truth.sample(k + 1)))

    approx = Approx(approx_fn, name="circle")
    inst = Instance(
        name="circle",
        space=space,
        semi=semi,
        truth=truth,
        approx=approx,
        meta={
            "manifold": "1-manifold without boundary",
            "atlas_covering": "patch arcs overlap at both junctions",
        },
        extras={"pieces": pieces},
    )
    inst.atlas = _circle_charts()
    inst.ce = approx_to_ce(approx, space, name="ce(circle)", k_cap=10)
    inst.coce = semi_to_coce(semi, space, name="coce(circle)")
    return inst


# --- segment --------------------------------------------------------------------


def _seg_interior_eval(x: Point, k: int) -> Point:
    u = x[0]
    half = Fraction(1, 2)
    if abs(u) <= 1:
        return (half + u / 5,)
    s = 1 if u > 0 else -1
    return (half + s * (Fraction(1, 5) + (abs(u) - 1) / 15),)


def _seg_interior_lip(box) -> Fraction:
    a, b = box[0]
    if b <= -1 or a >= 1:
        return Fraction(1, 15)
    return Fraction(1, 5)


def _seg_boundary_eval(at_one: bool):
    def ev(x: Point, k: int) -> Point:
        u = x[0]
        if u <= 1:
            v = Fraction(9, 20) * u
        else:
            v = Fraction(9, 20) + Fraction(7, 60) * (u - 1)
        return (1 - v,) if at_one else (v,)

    return ev


def _seg_boundary_lip(box) -> Fraction:
    a, b = box[0]
    if a >= 1:
        return Fraction(7, 60)
    return Fraction(9, 20)


def _seg_balls(centers, r) -> OpenSet:
    return OpenSet(tuple(Ball((Fraction(c),), Fraction(r)) for c in centers))


def _segment_charts() -> list[ChartWitness]:
    r = Fraction(1, 32)
    inner_m0 = _seg_balls(
        [Fraction(j, 32) for j in range(-1, 5)] + [1 - Fraction(j, 32) for j in range(-1, 5)], r
    )
    b0_m0 = _seg_balls([Fraction(j, 32) for j in range(25, 34)], r)
    b1_m0 = _seg_balls([1 - Fraction(j, 32) for j in range(25, 34)], r)
    return [
        ChartWitness(
            name="interior",
            arity=1,
            evaluator=_seg_interior_eval,
            lipschitz_inf=Fraction(1, 5),
            outer_cover=inner_m0,
            local_lipschitz=_seg_interior_lip,
        ),
        ChartWitness(
            name="end0",
            arity=1,
            evaluator=_seg_boundary_eval(False),
            lipschitz_inf=Fraction(9, 20),
            outer_cover=b0_m0,
            half=True,
            local_lipschitz=_seg_boundary_lip,
        ),
        ChartWitness(
            name="end1",
            arity=1,
            evaluator=_seg_boundary_eval(True),
            lipschitz_inf=Fraction(9, 20),
            outer_cover=b1_m0,
            half=True,
            local_lipschitz=_seg_boundary_lip,
        ),
    ]


def _segment_instance() -> Instance:
    space = EuclideanSpace(1)
    truth = SegmentTruth()

    def autonomous() -> Iterator[OpenSet]:
        for m in range(0, 12):
            r = Fraction(2, 2**m)
            yield OpenSet(tuple(Ball(p, r) for p in truth.sample(m)))

    semi = SemiOracle(
        interval_cover_certifier([(Fraction(0), Fraction(1))]),
        autonomous,
        name="segment",
        space=space,
        effort0=1024,
    )

    def boundary_autonomous() -> Iterator[OpenSet]:
        for m in range(0, 12):
            r = Fraction(1, 2**m)
            yield OpenSet((Ball((Fraction(0),), r), Ball((Fraction(1),), r)))

    boundary_semi = SemiOracle(
        point_cover_certifier([(Fraction(0),), (Fraction(1),)]),
        boundary_autonomous,
        name="segment-boundary",
        space=space,
    )

    def approx_fn(k: int) -> FinSet:
        return FinSet(tuple(truth.sample(k + 1)))

    approx = Approx(approx_fn, name="segment")
    inst = Instance(
        name="segment",
        space=space,
        semi=semi,
        boundary_semi=boundary_semi,
        truth=truth,
        approx=approx,
        meta={
            "manifold": "1-manifold with boundary {0, 1}",
            "atlas_covering": "patches [0,117/320], [27/80,53/80], [203/320,1]",
        },
    )
    inst.atlas = _segment_charts()
    inst.ce = approx_to_ce(approx, space, name="ce(segment)", k_cap=10)
    inst.coce = semi_to_coce(semi, space, name="coce(segment)")
    return inst


# --- sphere ---------------------------------------------------------------------


def _sphere_nd(a: Fraction, b: Fraction, reflect: bool) -> tuple[tuple[int, int, int], int]:
    """Exact sphere point (2a, 2b, 1-a^2-b^2)/(1+a^2+b^2); reflect flips z."""
    an, ad = a.numerator, a.denominator
    bn, bd = b.numerator, b.denominator
    # common denominator (ad*bd)^2
    A = an * bd
    B = bn * ad
    D = ad * bd
    den = D * D + A * A + B * B
    z = D * D - A * A - B * B
    nums = (2 * A * D, 2 * B * D, -z if reflect else z)
    return nums, den


def sphere_truth_pieces() -> list[PatchPiece]:
    one = Fraction(1)
    box = ((-one, one), (-one, one))

    def north(p: Point):
        return _sphere_nd(p[0], p[1], False)

    def south(p: Point):
        return _sphere_nd(p[0], p[1], True)

    return [PatchPiece(box, Fraction(4), north), PatchPiece(box, Fraction(4), south)]


def _sphere_eval(reflect: bool):
    sigma = Fraction(1, 3)

    def ev(x: Point, k: int) -> Point:
        nums, den = _sphere_nd(sigma * x[0], sigma * x[1], reflect)
        return tuple(Fraction(n, den) for n in nums)

    return ev


def _sphere_outer_cover(reflect: bool) -> OpenSet:
    # cover of the opposite cap with radius-1/8 balls on the mirror chart
    balls = []
    step = Fraction(5, 32)
    ev = _sphere_eval(not reflect)
    reach = Fraction(9, 4)
    j = -reach
    xs = []
    while j <= reach:
        xs.append(j)
        j += step
    for a in xs:
        for b in xs:
            balls.append(Ball(ev((a, b), 0), Fraction(1, 8)))
    return OpenSet(tuple(balls))


def _sphere_charts() -> list[ChartWitness]:
    return [
        ChartWitness(
            name="north",
            arity=2,
            evaluator=_sphere_eval(False),
            lipschitz_inf=Fraction(4, 3),
            outer_cover=_sphere_outer_cover(False),
        ),
        ChartWitness(
            name="south",
            arity=2,
            evaluator=_sphere_eval(True),
            lipschitz_inf=Fraction(4, 3),
            outer_cover=_sphere_outer_cover(True),
        ),
    ]


def _sphere_instance() -> Instance:
    space = EuclideanSpace(3)
    truth = SphereTruth()
    pieces = sphere_truth_pieces()

    def autonomous() -> Iterator[OpenSet]:
        for m in range(0, 6):
            r = Fraction(4, 2**m)
            yield OpenSet(tuple(Ball(p, r) for p in truth.sample(m)))

    semi = SemiOracle(
        patch_cover_certifier(pieces), autonomous, name="sphere", space=space, effort0=4096
    )

    def approx_fn(k: int) -> FinSet:
        return FinSet(tuple(_snap(p, k + 4) for p in truth.sample(k + 2)))

    approx = Approx(approx_fn, name="sphere")
    inst = Instance(
        name="sphere",
        space=space,
        semi=semi,
        truth=truth,
        approx=approx,
        meta={"manifold": "2-manifold without boundary", "obligations_verified": "sampled only"},
        extras={"pieces": pieces},
    )
    inst.atlas = _sphere_charts()
    inst.ce = approx_to_ce(approx, space, name="ce(sphere)", k_cap=7)
    inst.coce = semi_to_coce(semi, space, name="coce(sphere)")
    return inst


# --- torus ----------------------------------------------------------------------


def _torus_nd(s: Fraction, t: Fraction, flip_phi: bool, flip_psi: bool):
    """Exact torus point ((2+cos phi) cos psi, (2+cos phi) sin psi, sin phi)."""
    sn, sd = s.numerator, s.denominator
    tn, td = t.numerator, t.denominator
    d1 = sd * sd + sn * sn
    c1 = sd * sd - sn * sn
    s1 = 2 * sn * sd
    if flip_phi:
        c1 = -c1
    d2 = td * td + tn * tn
    c2 = td * td - tn * tn
    s2 = 2 * tn * td
    if flip_psi:
        c2 = -c2
    rad = 2 * d1 + c1  # (2 + cos phi) * d1
    nums = (rad * c2, rad * s2, s1 * d2)
    return nums, d1 * d2


def torus_truth_pieces() -> list[PatchPiece]:
    one = Fraction(1)
    box = ((-one, one), (-one, one))
    out = []
    for fp in (False, True):
        for fq in (False, True):
            def mk(fp=fp, fq=fq):
                def f(p: Point):
                    return _torus_nd(p[0], p[1], fp, fq)

                return f

            out.append(PatchPiece(box, Fraction(12), mk()))
    return out


def _torus_eval(flip_phi: bool, flip_psi: bool):
    def ev(x: Point, k: int) -> Point:
        nums, den = _torus_nd(TAU * x[0], TAU * x[1], flip_phi, flip_psi)
        return tuple(Fraction(n, den) for n in nums)

    return ev


def _torus_outer_cover(flip_phi: bool, flip_psi: bool) -> OpenSet:
    # two closing bands, covered from the angle-flipped charts
    balls = []
    r = Fraction(3, 8)
    band = [Fraction(j, 8) for j in range(-3, 4)]
    coarse = [Fraction(j, 4) for j in range(-16, 17)]
    ev_phi = _torus_eval(not flip_phi, flip_psi)
    for a in band:
        for b in coarse:
            balls.append(Ball(ev_phi((a, b), 0), r))
    ev_psi = _torus_eval(flip_phi, not flip_psi)
    for a in coarse:
        for b in band:
            balls.append(Ball(ev_psi((a, b), 0), r))
    return OpenSet(tuple(balls))


def _torus_charts() -> list[ChartWitness]:
    out = []
    for fp in (False, True):
        for fq in (False, True):
            out.append(
                ChartWitness(
                    name=f"torus{'N' if not fp else 'S'}{'E' if not fq else 'W'}",
                    arity=2,
                    evaluator=_torus_eval(fp, fq),
                    lipschitz_inf=Fraction(12),
                    outer_cover=_torus_outer_cover(fp, fq),
                )
            )
    return out


def _torus_instance() -> Instance:
    space = EuclideanSpace(3)
    truth = TorusTruth()
    pieces = torus_truth_pieces()

    def autonomous() -> Iterator[OpenSet]:
        for m in range(0, 5):
            r = Fraction(8, 2**m)
            yield OpenSet(tuple(Ball(p, r) for p in truth.sample(m)))

    semi = SemiOracle(
        patch_cover_certifier(pieces), autonomous, name="torus", space=space, effort0=4096
    )

    def approx_fn(k: int) -> FinSet:
        return FinSet(tuple(_snap(p, k + 4) for p in truth.sample(k + 2)))

    approx = Approx(approx_fn, name="torus")
    inst = Instance(
        name="torus",
        space=space,
        semi=semi,
        truth=truth,
        approx=approx,
        meta={"manifold": "2-manifold without boundary", "obligations_verified": "sampled only"},
        extras={"pieces": pieces},
    )
    inst.atlas = _torus_charts()
    inst.coce = semi_to_coce(semi, space, name="coce(torus)")
    return inst

# --- the exponential-weighted quadric surface (level set in R^3) ------------------

EXAMPLE_I_TEXT = """
name surface-exp-quadric
dim 3
expr (+ (* (square x1) (+ 1 (exp x1))) (* (square x2) (+ 1 (exp x2))) (* (square x3) (+ 1 (exp x3))))
target 1
box -3/2 3/2 -3/2 3/2 -3/2 3/2
atlas radial-faces
"""

EXAMPLE_II_TEXT = """
name sphere-sine-slice
dim 4
expr (+ (square x1) (square x2) (square x3) (square x4))
expr (+ (sin x1) (sin x2) (sin x3) (sin x4))
target 1 1
box -3/2 3/2 -3/2 3/2 -3/2 3/2 -3/2 3/2
"""

CIRCLE_LEVELSET_TEXT = """
name circle-levelset
dim 2
expr (- (+ (square x1) (square x2)) 1)
target 0
box -2 2 -2 2
"""


def _example_i_levelset() -> LevelSetInstance:
    from .levelset import parse_instance_text

    return parse_instance_text(EXAMPLE_I_TEXT)


class _RadialSolver:
    """Radial intersection with the star-shaped surface g = 1 by sign bisection.

    Along each ray from the origin g is strictly increasing, so the exact
    interval-arithmetic sign of g - 1 steers an ordinary bisection; the
    midpoint is taken slightly off-centre to dodge exact-coincidence stalls.
    """

    def __init__(self, ls: LevelSetInstance):
        self.expr = ls.exprs[0]
        self.target = ls.target[0]

    def _sign(self, point: Point, k: int) -> int:
        box = IntervalBox(tuple((c, c) for c in point))
        lo, hi = ieval(self.expr, box, k)
        if lo > self.target:
            return 1
        if hi < self.target:
            return -1
        return 0

    def solve(self, direction: Point, tol_exp: int) -> Point:
        lo, hi = Fraction(1, 8), Fraction(9, 8)
        k = 8
        tol = Fraction(1, 2**tol_exp)
        guard = 0
        while hi - lo > tol:
            guard += 1
            if guard > 400:
                raise RuntimeError("radial bisection stalled")
            mid = lo + (hi - lo) * Fraction(5, 9)
            s = self._sign(tuple(mid * d for d in direction), k)
            if s > 0:
                hi = mid
            elif s < 0:
                lo = mid
            else:
                k += 4
        mid = (lo + hi) / 2
        return tuple(mid * d for d in direction)


class ExampleITruth:
    """Radial samples near the surface; tolerance is explicit, not zero."""

    def __init__(self, ls: LevelSetInstance):
        self.solver = _RadialSolver(ls)
        self.sample_err = Fraction(1, 2**28)
        self.dim = 3

    def sample(self, k: int) -> list[Point]:
        pts: list[Point] = []
        steps = 1 << min(k, 3)
        rng = [Fraction(j, steps) for j in range(-steps, steps + 1)]
        for axis in range(3):
            for sign in (1, -1):
                for a in rng:
                    for b in rng:
                        d = [a, b]
                        d.insert(axis, Fraction(sign))
                        pts.append(self.solver.solve(tuple(d), 30))
        return pts


def _example_i_eval(axis: int, sign: int, solver: _RadialSolver):
    scale = Fraction(5, 16)

    def ev(x: Point, k: int) -> Point:
        d = [scale * x[0], scale * x[1]]
        d.insert(axis, Fraction(sign))
        # direction norm is below 2.1, so this tolerance keeps the point
        # within 2^-k of the true radial intersection
        return solver.solve(tuple(d), k + 4)

    return ev


def _example_i_charts(solver: _RadialSolver) -> list[ChartWitness]:
    charts = []
    for axis in range(3):
        for sign in (1, -1):
            others = []
            for oaxis in range(3):
                for osign in (1, -1):
                    if (oaxis, osign) != (axis, sign):
                        others.append((oaxis, osign))
            balls = []
            rng = [Fraction(j, 2) for j in range(-2, 3)]
            for oaxis, osign in others:
                oev = _example_i_eval(oaxis, osign, solver)
                for a in rng:
                    for b in rng:
                        balls.append(Ball(oev((a, b), 4), Fraction(1, 2)))
            charts.append(
                ChartWitness(
                    name=f"radial{'+' if sign > 0 else '-'}{'xyz'[axis]}",
                    arity=2,
                    evaluator=_example_i_eval(axis, sign, solver),
                    lipschitz_inf=Fraction(2),
                    outer_cover=OpenSet(tuple(balls)),
                )
            )
    return charts


def _example_i_instance() -> Instance:
    ls = _example_i_levelset()
    space = EuclideanSpace(3)
    solver = _RadialSolver(ls)
    truth = ExampleITruth(ls)
    semi = semi_from_levelset(ls, space, k_cap=6)
    inst = Instance(
        name="paper-example-i",
        space=space,
        semi=semi,
        truth=truth,
        levelset=ls,
        meta={
            "manifold": "2-manifold without boundary (regular level set; metadata)",
            "obligations_verified": "sampled only",
        },
        extras={"solver": solver, "atlas_builder": lambda: _example_i_charts(solver)},
    )
    inst.coce = coce_from_levelset(ls, space)
    return inst


# --- the adversarial right-c.e. segment -------------------------------------------


class RegisterMachine:
    """Three-register machine whose program is the list decoding of its index.

    Instruction z: op = z % 4, arg = z // 4.
      op 0: increment register arg % 3
      op 1: decrement register arg % 3 (floor at zero)
      op 2: if register arg % 3 is zero, jump to pc (arg // 3) % (len + 1)
      op 3: halt
    Running past the end halts.  Some programs plainly loop forever (a zero
    test jumping to itself), so the halting set is nontrivial.
    """

    def __init__(self, index: int):
        self.program = list_decode(index)
        self.pc = 0
        self.regs = [0, 0, 0]
        self.steps = 0
        self.halted = False

    def step(self) -> None:
        if self.halted:
            return
        self.steps += 1
        if self.pc >= len(self.program):
            self.halted = True
            return
        z = self.program[self.pc]
        op, arg = z % 4, z // 4
        r = arg % 3
        if op == 0:
            self.regs[r] += 1
            self.pc += 1
        elif op == 1:
            self.regs[r] = max(0, self.regs[r] - 1)
            self.pc += 1
        elif op == 2:
            if self.regs[r] == 0:
                self.pc = (arg // 3) % (len(self.program) + 1)
            else:
                self.pc += 1
        else:
            self.halted = True


class HaltEnumerator:
    """Deterministic dovetailed enumeration of the machine halting set W.

    The right-c.e. endpoint is c = 1 - sum over halted indices of 2^-(i+2);
    ``c_hi`` is its current exact upper bound and only ever decreases.  The
    analytic floor 1/2 is the only sound lower bound (improving it would
    decide halting), so the bracket is [1/2, c_hi].
    """

    def __init__(self):
        self.machines: dict[int, RegisterMachine] = {}
        self.halted: set[int] = set()
        self.c_hi = Fraction(1)
        self.ticks = 0

    def tick(self) -> int | None:
        i, _ = unpair(self.ticks)
        self.ticks += 1
        m = self.machines.get(i)
        if m is None:
            m = RegisterMachine(i)
            self.machines[i] = m
        if m.halted and i in self.halted:
            return None
        m.step()
        if m.halted and i not in self.halted:
            self.halted.add(i)
            self.c_hi -= Fraction(1, 2 ** (i + 2))
            return i
        return None

    def run(self, ticks: int) -> None:
        for _ in range(ticks):
            self.tick()

    def bracket(self) -> tuple[Fraction, Fraction]:
        return Fraction(1, 2), self.c_hi


class _AdversarialCoCe(CoCeOracle):
    """Complement balls for [0, c]: left of zero and right of the current
    upper endpoint; both stay sound forever because c_hi only decreases."""

    def __init__(self, enum: HaltEnumerator, space: EuclideanSpace):
        super().__init__(lambda b, e: True, name="coce(adversarial)", space=space)
        self.enum = enum
        self._n = 0

    def _step(self, t: int) -> None:
        self.enum.tick()
        s, j = unpair(self._n)
        self._n += 1
        r = Fraction(1, 2 ** (s + 2))
        if j % 2 == 0:
            m = j // 2
            scale = 1 << (s + 4)
            hi_up = Fraction(-((-self.enum.c_hi * scale).__floor__()), scale)
            center = hi_up + r + m * 2 * r
        else:
            m = j // 2
            center = -r - m * 2 * r
        ball = Ball((center,), r)
        key = self._key(ball)
        if key not in self._keys:
            self._keys.add(key)
            self._emitted.append((t, ball))


def _adversarial_instance() -> Instance:
    space = EuclideanSpace(1)
    enum = HaltEnumerator()

    def certifier(os: OpenSet, effort: int):
        enum.run(max(16, effort // 16))
        lo, hi = Fraction(0), enum.c_hi
        spans = sorted(((b.center[0] - b.radius, b.center[0] + b.radius) for b in os.balls))
        cur = lo
        while True:
            best = None
            for blo, bhi in spans:
                if blo < cur < bhi or (cur == lo and blo < cur < bhi):
                    if best is None or bhi > best:
                        best = bhi
            if best is None:
                return False  # may become coverable as c_hi shrinks
            if best > hi:
                return True
            cur = best

    def autonomous() -> Iterator[OpenSet]:
        for s in range(1, 13):
            enum.run(64 * s)
            r = Fraction(1, 2**s)
            hi = enum.c_hi + 2 * r
            balls = []
            c = Fraction(0)
            while c <= hi:
                balls.append(Ball((c,), r))
                c += r
            yield OpenSet(tuple(balls))

    semi = SemiOracle(certifier, autonomous, name="adversarial", space=space, effort0=1024)

    def ce_certifier(ball: Ball, effort: int):
        # [0, 1/2] is provably inside [0, c]; nothing beyond is certifiable
        c, r = ball.center[0], ball.radius
        return c - r < Fraction(1, 2) and c + r > 0

    def ce_autonomous() -> Iterator[Ball]:
        for s in range(1, 24):
            r = Fraction(1, 2**s)
            for j in range(0, 2 ** (s - 1) + 1):
                yield Ball((j * r,), r)

    ce = CeOracle(ce_certifier, ce_autonomous, name="ce(adversarial)", space=space)

    inst = Instance(
        name="adversarial-segment",
        space=space,
        semi=semi,
        truth=None,
        ce=ce,
        coce=_AdversarialCoCe(enum, space),
        meta={
            "manifold": "1-manifold with boundary; right endpoint not computable",
            "no_atlas": "boundary point c admits no chart witness",
        },
        extras={"enum": enum},
    )
    return inst


# --- registry and the gap demo -----------------------------------------------------


def make_instance(name: str) -> Instance:
    """Fresh, fully wired instance; oracles are single-consumer."""
    if name == "circle":
        return _circle_instance()
    if name == "segment":
        return _segment_instance()
    if name == "sphere":
        return _sphere_instance()
    if name == "torus":
        return _torus_instance()
    if name == "paper-example-i":
        return _example_i_instance()
    if name == "adversarial-segment":
        return _adversarial_instance()
    raise ValueError(f"unknown instance {name!r}; try one of {INSTANCE_NAMES}")


def adversarial_gap_demo(budget: int = 10**5) -> dict:
    """Exhibit the asymmetry of the right-c.e. segment.

    The cover oracle makes progress (sound emissions), the complement oracle
    stays sound against the final bracket, while meeting-ball certification
    of a ball inside the uncertainty zone never succeeds; the ball well
    inside the certain part certifies quickly.  Non-progress on the former
    is the expected, by-construction outcome.
    """
    inst = make_instance("adversarial-segment")
    enum: HaltEnumerator = inst.extras["enum"]

    semi_budget = max(64, budget // 100)
    covers = inst.semi.emitted(semi_budget)
    coce_balls = inst.coce.emitted(max(64, budget // 10))
    enum.run(budget)
    lo, hi = enum.bracket()

    certain_part = interval_cover_certifier([(Fraction(0), lo)])
    cover_checks = [certain_part(cover, 0) is True for cover in covers]

    coce_sound = all(
        b.center[0] + b.radius <= 0 or b.center[0] - b.radius >= hi for b in coce_balls
    )

    inside_ball = Ball((Fraction(1, 4),), Fraction(1, 8))
    straddle_ball = Ball(((lo + hi) / 2,), (hi - lo) / 4)
    inside_ok = inst.ce.meets_test(inside_ball, 4096)
    straddle_ok = inst.ce.meets_test(straddle_ball, max(256, budget // 50))

    lines = [
        f"bracket: [{lo}, {hi}]",
        f"halted machine indices: {sorted(i for i in enum.halted if i < 64)} ...",
        f"semi covers emitted: {len(covers)}; all contain the certain part [0,1/2]: {all(cover_checks)}",
        f"complement balls emitted: {len(coce_balls)}; all sound against the final bracket: {coce_sound}",
        f"ce certification of a ball inside [0,1/2]: {inside_ok}",
        f"ce certification of a ball straddling the bracket: {straddle_ok} (expected: False, no progress)",
    ]
    return {
        "bracket": (lo, hi),
        "covers": len(covers),
        "covers_sound": all(cover_checks) and len(covers) > 0,
        "coce_count": len(coce_balls),
        "coce_sound": coce_sound,
        "inside_certified": inside_ok,
        "straddle_certified": straddle_ok,
        "lines": lines,
    }
