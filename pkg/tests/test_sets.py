from fractions import Fraction

import pytest

from chainapprox.space import Ball, BucketIndex, EuclideanSpace, FinSet, OpenSet, hausdorff_le, prec_lt, sq_dist
from chainapprox.sets import (
    Approx,
    BudgetExhausted,
    UpToApprox,
    approx_to_ce,
    approx_to_semi,
    box_grid_approx,
    coce_to_semi,
    glue,
    semi_ce_to_approx,
    semi_to_coce,
    subtract,
    upto_union,
)
from chainapprox.instances import make_instance

F = Fraction


def test_oracle_determinism_and_monotonicity():
    a = make_instance("segment").semi
    b = make_instance("segment").semi
    ea = a.emitted(60)
    eb = b.emitted(60)
    assert [c.normalized() for c in ea] == [c.normalized() for c in eb]
    assert a.trace_lines() == b.trace_lines()
    # monotone: a prefix relation between budgets
    e30 = [c.normalized() for c in b.emitted(30)]
    e90 = [c.normalized() for c in b.emitted(90)]
    assert e90[: len(e30)] == e30
    assert len(e90) >= len(e30)


def test_semi_to_coce_segment():
    inst = make_instance("segment")
    sp = inst.space
    coce = semi_to_coce(inst.semi, sp)
    balls = coce.emitted(2000)
    # the canonical far ball (centre 3, radius 1, code 231) appears
    assert Ball((F(3),), F(1)) in balls
    # soundness: no emitted ball meets [0, 1]
    truth = inst.truth
    assert balls and all(not truth.meets_ball(b) for b in balls)
    # empty budget emits nothing
    assert make_instance("segment").semi is not None
    fresh = semi_to_coce(make_instance("segment").semi, sp)
    assert fresh.emitted(0) == []


def test_semi_to_coce_circle_sound():
    inst = make_instance("circle")
    coce = semi_to_coce(inst.semi, inst.space)
    balls = coce.emitted(600)
    truth = inst.truth
    assert balls and all(not truth.meets_ball(b) for b in balls)


def test_coce_to_semi_on_circle_levelset():
    from chainapprox.levelset import coce_from_levelset, parse_instance_text
    from chainapprox.instances import CIRCLE_LEVELSET_TEXT, CircleTruth

    ls = parse_instance_text(CIRCLE_LEVELSET_TEXT)
    sp = EuclideanSpace(2)
    coce = coce_from_levelset(ls, sp)
    K = box_grid_approx(ls.box, name="box")
    semi = coce_to_semi(coce, K, sp, k_cap=5)
    covers = semi.emitted(10)
    assert covers
    truth = CircleTruth()
    sample = truth.sample(4)
    from chainapprox.space import BallIndex

    for cover in covers:
        index = BallIndex(cover.balls)
        for s in sample:
            assert any(b.contains(s) for b in index.near_all(s))
    # if the complement enumeration never runs, nothing is emitted
    lazy = coce_to_semi(coce_from_levelset(ls, sp), K, sp, k_cap=5)
    assert lazy.emitted(0) == []


def test_approx_semi_ce_roundtrip_singleton():
    sp = EuclideanSpace(1)
    K = Approx(lambda k: FinSet(((F(0),),)), name="origin")
    semi = approx_to_semi(K, sp, k_cap=10)
    ce = approx_to_ce(K, sp, k_cap=10)
    # the unit ball at the origin is certified to meet {0}
    assert ce.meets_test(Ball((F(0),), F(1)), 64)
    out = semi_ce_to_approx(semi, ce, sp, budget=5000)
    for k in (0, 2, 4):
        pts = out.finset(k).points
        assert all(abs(p[0]) < F(1, 2**k) for p in pts)


def test_semi_ce_roundtrip_segment_quarters():
    inst = make_instance("segment")
    K = inst.approx
    sp = inst.space
    semi = approx_to_semi(K, sp, k_cap=10)
    ce = approx_to_ce(K, sp, k_cap=10)
    out = semi_ce_to_approx(semi, ce, sp, budget=20000)
    k = 3
    pts = out.finset(k).points
    truth = inst.truth
    # rho([0,1], Lambda) < 1/8: each point near the segment, segment covered
    assert all(truth.dist_lt(p, F(1, 8)) for p in pts)
    for s in truth.sample(8):
        assert any(sq_dist(s, p) < F(1, 64) for p in pts)


def test_prop26_roundtrip_circle():
    inst = make_instance("circle")
    sp = inst.space
    semi = approx_to_semi(inst.approx, sp, k_cap=10)
    ce = approx_to_ce(inst.approx, sp, k_cap=10)
    out = semi_ce_to_approx(semi, ce, sp, budget=60000)
    for k in (1, 3):
        lam = inst.approx.finset(k)
        lam2 = out.finset(k)
        assert hausdorff_le(
            FinSet(lam.distinct()), FinSet(lam2.distinct()), F(2, 2**k)
        )


def test_approx_to_semi_emits_sound_covers():
    inst = make_instance("circle")
    semi = approx_to_semi(inst.approx, inst.space, k_cap=8)
    covers = semi.emitted(8)
    assert covers
    truth = inst.truth
    sample = truth.sample(6)
    for cover in covers:
        assert all(cover.contains(s) for s in sample)


def test_subtract():
    inst = make_instance("segment")
    sp = inst.space
    # m covering everything: every candidate is certified
    big = OpenSet.of(Ball((F(1, 2),), F(10)))
    sub_all = subtract(inst.semi, big)
    anything = OpenSet.of(Ball((F(40),), F(1, 4)))
    assert sub_all.covers_test(anything, 64)
    # m a far tiny ball: behaves like the original on [0, 1]
    far = OpenSet.of(Ball((F(50),), F(1, 64)))
    sub_far = subtract(make_instance("segment").semi, far)
    good = OpenSet.of(Ball((F(1, 2),), F(2)))
    assert sub_far.covers_test(good, 64)
    bad = OpenSet.of(Ball((F(1, 2),), F(1, 4)))
    assert not sub_far.covers_test(bad, 64)
    # S=[0,2]-style: removing the right half leaves covers of the left part
    segments = make_instance("segment")
    right = OpenSet.of(Ball((F(7, 8),), F(1, 2)))
    sub = subtract(segments.semi, right)
    left_cover = OpenSet.of(Ball((F(3, 16),), F(1, 4)), Ball((F(5, 16),), F(1, 4)))
    # covers [0, 3/8] u (right half): [-1/16, 7/16] u (3/8, 11/8) covers [0,1]
    assert sub.covers_test(left_cover, 128)


def test_upto_union_and_glue_semicircles():
    inst = make_instance("circle")
    truth = inst.truth

    def half(keep_right: bool):
        def fn(k: int) -> FinSet:
            pts = [p for p in inst.approx.finset(k).points if (p[0] >= 0) == keep_right]
            return FinSet(tuple(pts))

        return UpToApprox(fn=fn, subset_name="right" if keep_right else "left", target_name="circle")

    u, v = half(True), half(False)
    w = upto_union(u, u)
    k = 4
    assert set(w.finset(k).points) == set(u.finset(k).points)
    uv = upto_union(u, v)
    assert set(uv.finset(k).points) == set(u.finset(k).points) | set(v.finset(k).points)

    glued = glue([u, v], covering_note="two semicircles")
    for k in (1, 3, 6):
        pts = glued.finset(k).points
        bound = F(1, 2**k)
        assert all(truth.dist_lt(p, bound) for p in pts)
        idx = BucketIndex(pts, bound)
        for s in truth.sample(8):
            assert idx.witness_within(s, bound, strict=True) is not None


def test_upto_union_target_mismatch():
    mk = lambda t: UpToApprox(fn=lambda k: FinSet(((F(0),),)), subset_name="a", target_name=t)
    with pytest.raises(ValueError):
        upto_union(mk("x"), mk("y"))


def test_glue_empty_rejected():
    with pytest.raises(ValueError):
        glue([])


def test_glue_segment_from_three_pieces():
    inst = make_instance("segment")
    truth = inst.truth

    def piece(lo, hi, name):
        def fn(k):
            pts = [p for p in inst.approx.finset(k).points if lo <= p[0] <= hi]
            return FinSet(tuple(pts))

        return UpToApprox(fn=fn, subset_name=name, target_name="segment")

    glued = glue(
        [piece(F(0), F(1, 3), "left"), piece(F(1, 4), F(3, 4), "mid"), piece(F(2, 3), F(1), "right")]
    )
    for k in (1, 4):
        pts = glued.finset(k).points
        bound = F(1, 2**k)
        assert all(truth.dist_le(p, bound) for p in pts)
        for s in truth.sample(7):
            assert any(sq_dist(s, p) <= bound * bound for p in pts)


def test_budget_exhaustion_reported():
    sp = EuclideanSpace(1)
    # an approx family whose semi oracle never certifies small-radius covers
    K = Approx(lambda k: FinSet(((F(0),),)), name="origin")
    semi = approx_to_semi(K, sp, k_cap=2)
    ce = approx_to_ce(K, sp, k_cap=2)
    out = semi_ce_to_approx(semi, ce, sp, budget=50)
    with pytest.raises(BudgetExhausted):
        out.finset(12)
