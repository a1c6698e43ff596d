import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from chainapprox.space import (
    Ball,
    EuclideanSpace,
    FinSet,
    OpenSet,
    fdiam_bounds,
    formally_contained,
    formally_disjoint_balls,
    formally_disjoint_open,
    hausdorff_le,
    hausdorff_lt,
    mem_ball,
    prec_lt,
    sq_dist,
    sqrt_enclosure,
)

F = Fraction


def B(center, radius):
    if not isinstance(center, tuple):
        center = (center,)
    return Ball(tuple(F(c) for c in center), F(radius))


def test_sq_dist_golden():
    assert sq_dist((F(0), F(0)), (F(3), F(4))) == 25
    p = (F(1, 3), F(-2, 7))
    assert sq_dist(p, p) == 0
    assert sq_dist((F(0),), (F(1, 2),)) == F(1, 4)


def test_sq_dist_arity_mismatch():
    with pytest.raises(ValueError):
        sq_dist((F(0),), (F(0), F(0)))


def test_mem_ball_strictness():
    ball = B(0, 1)
    assert mem_ball((F(0),), ball)
    assert not mem_ball((F(1),), ball)  # boundary excluded
    assert mem_ball((F(3, 4),), ball)


def test_point_codes_roundtrip_and_density_witness():
    rng = random.Random(3)
    for dim in (1, 2, 3):
        sp = EuclideanSpace(dim)
        for _ in range(100):
            p = tuple(F(rng.randrange(-99, 100), rng.randrange(1, 40)) for _ in range(dim))
            i = sp.encode_point(p)
            assert sp.decode_point(i) == p
            # the code of p itself witnesses density at every precision
            for k in range(0, 9):
                assert sq_dist(p, sp.decode_point(i)) < F(1, 2 ** (2 * k))


def test_fdiam_single_ball():
    j = OpenSet.of(B(0, 1))
    lo, hi = fdiam_bounds(j, 10)
    assert lo <= 2 <= hi
    assert hi - lo < F(1, 1024)


def test_fdiam_two_balls_line():
    j = OpenSet.of(B(0, F(1, 2)), B(1, F(1, 4)))
    lo, hi = fdiam_bounds(j, 12)
    assert lo <= 2 <= hi  # 1 + 2 * (1/2)
    assert hi - lo < F(1, 4096)


def test_fdiam_dominates_sampled_diameters():
    rng = random.Random(11)
    sp = EuclideanSpace(2)
    for _ in range(50):
        balls = tuple(
            B((F(rng.randrange(-8, 9), 4), F(rng.randrange(-8, 9), 4)), F(rng.randrange(1, 9), 8))
            for _ in range(rng.randrange(1, 5))
        )
        j = OpenSet(balls)
        _, hi = fdiam_bounds(j, 10)
        for _ in range(40):
            # sample a point of a random ball through its inscribed square
            pts = []
            for _ in range(2):
                ball = balls[rng.randrange(len(balls))]
                off = tuple(
                    ball.radius * F(rng.randrange(-16, 17), 48) for _ in range(2)
                )
                pts.append(tuple(c + o for c, o in zip(ball.center, off)))
            assert sq_dist(pts[0], pts[1]) <= hi * hi


def test_formally_disjoint_balls_golden():
    assert formally_disjoint_balls(B(0, 1), B(3, 1))
    # strictly stronger than actual disjointness
    assert not formally_disjoint_balls(B(0, 1), B(2, 1))
    assert formally_disjoint_balls(B((0, 0), 2), B((3, 4), 2))


def test_formally_disjoint_open():
    j1 = OpenSet.of(B(0, 1))
    j2 = OpenSet.of(B(3, 1))
    assert formally_disjoint_open(j1, j2)
    assert not formally_disjoint_open(j1, j1)


def test_formally_disjoint_implies_no_common_point():
    rng = random.Random(5)
    sp = EuclideanSpace(2)
    tried = 0
    for _ in range(2000):
        b1 = Ball.from_code(rng.randrange(10**6), sp)
        b2 = Ball.from_code(rng.randrange(10**6), sp)
        if not formally_disjoint_balls(b1, b2):
            continue
        tried += 1
        for _ in range(30):
            off = tuple(b1.radius * F(rng.randrange(-24, 25), 49) for _ in range(2))
            p = tuple(c + o for c, o in zip(b1.center, off))
            if mem_ball(p, b1):
                assert not mem_ball(p, b2)
    assert tried > 50


def test_formally_contained():
    assert formally_contained(((F(1, 2),), F(1)), B(0, 2))
    assert not formally_contained(((F(0),), F(1)), B(0, 1))  # strict
    outer = B((0, 0), 2)
    inner = ((F(1, 2), F(0)), F(1))
    assert formally_contained(inner, outer)
    rng = random.Random(9)
    for _ in range(100):
        off = (F(rng.randrange(-10, 11), 21), F(rng.randrange(-10, 11), 21))
        p = (inner[0][0] + off[0], inner[0][1] + off[1])
        if sq_dist(p, inner[0]) < inner[1] * inner[1]:
            assert mem_ball(p, outer)


def test_hausdorff_golden():
    A = FinSet(((F(0),),))
    Bs = FinSet(((F(1),),))
    assert hausdorff_le(A, Bs, F(1))
    assert not hausdorff_lt(A, Bs, F(1))
    assert hausdorff_le(A, A, F(0))
    A2 = FinSet(((F(0), F(0)),))
    B2 = FinSet(((F(3), F(4)),))
    assert hausdorff_le(A2, B2, F(5))
    assert not hausdorff_lt(A2, B2, F(5))


def test_hausdorff_triangle_random():
    rng = random.Random(13)
    for _ in range(60):
        mk = lambda: FinSet(
            tuple(
                (F(rng.randrange(-20, 21), 7), F(rng.randrange(-20, 21), 7))
                for _ in range(rng.randrange(1, 5))
            )
        )
        A, Bs, C = mk(), mk(), mk()
        for q in (F(1), F(3, 2), F(4)):
            for q2 in (F(1, 2), F(2)):
                if hausdorff_le(A, Bs, q) and hausdorff_le(Bs, C, q2):
                    assert hausdorff_le(A, C, q + q2)


def test_prec_golden():
    assert prec_lt([(F(0),), (F(2),)], [(F(1),)], F(3, 2))
    assert not prec_lt([(F(0),)], [(F(1),)], F(1))  # strict


def test_prec_triangle_random():
    rng = random.Random(17)
    for _ in range(200):
        mk = lambda: [
            (F(rng.randrange(-12, 13), 5),) for _ in range(rng.randrange(1, 5))
        ]
        A, Bs, C = mk(), mk(), mk()
        eps, delta = F(rng.randrange(1, 8), 4), F(rng.randrange(1, 8), 4)
        if prec_lt(A, Bs, eps) and prec_lt(Bs, C, delta):
            assert prec_lt(A, C, eps + delta)


@given(st.fractions(min_value=F(0), max_value=F(10**6)), st.integers(1, 24))
@settings(max_examples=200)
def test_sqrt_enclosure(q, k):
    lo, hi = sqrt_enclosure(q, k)
    assert lo * lo <= q <= hi * hi
    assert hi - lo <= F(1, 2**k)
    if lo != hi:
        assert hi * hi > q


def test_ball_codes_roundtrip():
    sp = EuclideanSpace(2)
    ball = B((F(3, 4), F(-1, 3)), F(2, 5))
    assert Ball.from_code(ball.code(sp), sp) == ball
    # segment example: centre 3, radius 1 in R^1
    sp1 = EuclideanSpace(1)
    assert Ball.from_code(231, sp1) == Ball((F(3),), F(1))
