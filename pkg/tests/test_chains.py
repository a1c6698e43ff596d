import random
from fractions import Fraction

import pytest

from chainapprox.space import Ball, EuclideanSpace, OpenSet, mem_ball, sq_dist
from chainapprox.chains import (
    ChainCandidate,
    SeparationError,
    dist_lower_bound,
    fmesh_lt,
    formal_chain_offenders,
    grid_chain,
    is_formal_chain,
    link_fdiam_lt,
    lower_boundary_open_set,
    lower_covers,
    covers,
    net_cover,
    p_metric,
    union_open_set,
)
from chainapprox.instances import make_instance

F = Fraction


def B(center, radius):
    if not isinstance(center, tuple):
        center = (center,)
    return Ball(tuple(F(c) for c in center), F(radius))


def chain1d(ball_lists):
    links = {(i,): OpenSet(tuple(bs)) for i, bs in enumerate(ball_lists)}
    return ChainCandidate(1, len(ball_lists) - 1, links)


def test_p_metric():
    assert p_metric((0, 0), (0, 0)) == 0
    assert p_metric((0, 3), (2, 4)) == 2
    assert p_metric((5,), (4,)) == 1
    with pytest.raises(ValueError):
        p_metric((1,), (1, 2))


def test_union_and_lower_boundary():
    c = chain1d([[B(0, F(1, 2))], [B(1, F(1, 2))], [B(2, F(1, 2))]])
    u = union_open_set(c)
    assert len(u.balls) == 3
    low = lower_boundary_open_set(c)
    assert [b.center for b in low.balls] == [(F(0),)]
    # constant grid: union extensionally equal to the single link
    const = chain1d([[B(0, 1)], [B(0, 1)]])
    cu = union_open_set(const)
    rng = random.Random(2)
    for _ in range(200):
        p = (F(rng.randrange(-64, 65), 32),)
        assert cu.contains(p) == const.links[(0,)].contains(p)


def test_union_membership_matches_links():
    rng = random.Random(4)
    c = chain1d(
        [[B(F(i, 2), F(1, 3)), B(F(i, 2) + F(1, 8), F(1, 4))] for i in range(5)]
    )
    u = union_open_set(c)
    for _ in range(500):
        p = (F(rng.randrange(-32, 128), 32),)
        assert u.contains(p) == any(os.contains(p) for os in c.links.values())


def test_is_formal_chain_golden():
    # balls at 0, 2, 4 with radius 1/2: the only far pair (0,4) has gap 4 > 1
    good = chain1d([[B(0, F(1, 2))], [B(2, F(1, 2))], [B(4, F(1, 2))]])
    assert is_formal_chain(good)
    # centres 0, 1, 2 radius 1: far pair distance 2 equals radius sum: fails
    bad = chain1d([[B(0, 1)], [B(1, 1)], [B(2, 1)]])
    assert not is_formal_chain(bad)
    assert ((0,), (2,)) in formal_chain_offenders(bad)


def test_formal_chain_no_common_point_in_far_links():
    rng = random.Random(6)
    c = chain1d([[B(F(3 * i, 2), F(1, 2)), B(F(3 * i, 2) + F(1, 4), F(1, 2))] for i in range(6)])
    assert is_formal_chain(c)
    order = c.index_vectors()
    for _ in range(500):
        p = (F(rng.randrange(-8, 100), 11),)
        hits = [v for v in order if c.links[v].contains(p)]
        for a in hits:
            for b in hits:
                assert p_metric(a, b) <= 1


def test_formal_chain_2d():
    def ball_at(i, j):
        return [B((F(i), F(j)), F(1, 4))]

    links = {(i, j): OpenSet(tuple(ball_at(i, j))) for i in range(3) for j in range(3)}
    c = ChainCandidate(2, 2, links)
    assert is_formal_chain(c)
    links[(0, 0)] = OpenSet((B((F(2), F(2)), F(3)),))
    c2 = ChainCandidate(2, 2, links)
    assert not is_formal_chain(c2)


def test_fmesh():
    tiny = chain1d([[B(0, F(1, 16))], [B(1, F(1, 16))]])
    assert fmesh_lt(tiny, F(1, 2))  # fdiam = 1/8 per link
    # link with fdiam exactly 2 is not certified at q = 2 (strict)
    border = chain1d([[B(0, 1)], [B(3, 1)]])
    assert not fmesh_lt(border, F(2))
    assert fmesh_lt(border, F(5, 2))
    # certified mesh dominates sampled in-link distances
    rng = random.Random(8)
    c = chain1d([[B(F(i), F(1, 8)), B(F(i) + F(1, 16), F(1, 8))] for i in range(4)])
    assert fmesh_lt(c, F(1, 2))
    for v, os_ in c.links.items():
        for _ in range(100):
            b1 = os_.balls[rng.randrange(len(os_.balls))]
            b2 = os_.balls[rng.randrange(len(os_.balls))]
            p1 = (b1.center[0] + b1.radius * F(rng.randrange(-2, 3), 5),)
            p2 = (b2.center[0] + b2.radius * F(rng.randrange(-2, 3), 5),)
            assert sq_dist(p1, p2) < F(1, 4)


def test_covers_segment_chain():
    inst = make_instance("segment")
    # a fine 1-chain covering [-1, 2]: balls radius 1/2 at half-integers
    c = chain1d([[B(F(i, 2) - 1, F(5, 8))] for i in range(7)])
    assert covers(inst.semi, c, 512)
    # chain with a gap around 1/2 never certifies
    gap = chain1d([[B(0, F(1, 4))], [B(1, F(1, 4))]])
    assert not covers(make_instance("segment").semi, gap, 256)
    assert inst.truth.dist_le((F(1, 2),), F(0))  # the gap point is in the set
    # zero-chain monotone start: empty budget is unknown
    assert not covers(make_instance("segment").semi, c, 0)


def test_lower_covers_boundary_point():
    inst = make_instance("segment")
    c = chain1d([[B(0, F(1, 4))], [B(F(1, 2), F(1, 4))], [B(1, F(1, 4))]])
    # lower boundary is the first link only; it covers {0} but not {0, 1}
    low = lower_boundary_open_set(c)
    assert low.contains((F(0),)) and not low.contains((F(1),))
    assert not lower_covers(inst.boundary_semi, c, 128)
    both = chain1d([[B(0, F(1, 4)), B(1, F(1, 4))], [B(F(1, 2), F(1, 4))]])
    assert lower_covers(inst.boundary_semi, both, 128)


def test_grid_chain_golden():
    cells = grid_chain(0, 1)
    assert len(cells) == 8
    for i in range(8):
        lo, hi = cells[(i,)].intervals[0]
        assert lo == -4 + i and hi == -4 + i + 1
    half = grid_chain(0, 2, half=True)
    for (i, j), cell in half.items():
        assert cell.intervals[1] == (F(j, 2), F(j + 1, 2))


def test_grid_chain_far_cells_disjoint_small():
    for m in (0, 1):
        for n in (1, 2):
            for half in (False, True):
                cells = grid_chain(m, n, half=half)
                keys = list(cells)
                for a in keys:
                    for b in keys:
                        if p_metric(a, b) > 1:
                            assert cells[a].disjoint(cells[b])


def test_net_cover():
    # K = {0}: a single ball, containing and meeting the point
    nc = net_cover(lambda d: [(F(0),)], F(1))
    assert len(nc.open_set.balls) == 1
    assert mem_ball((F(0),), nc.open_set.balls[0])

    # K = [0,1] at gamma = 1/4: membership of a 2^-6 grid, centres near K
    def seg_sampler(delta):
        step = delta / 2
        pts = []
        x = F(0)
        while x < 1:
            pts.append((x,))
            x += step
        pts.append((F(1),))
        return pts

    nc = net_cover(seg_sampler, F(1, 4))
    for j in range(65):
        assert nc.open_set.contains((F(j, 64),))
    for b in nc.open_set.balls:
        assert F(0) <= b.center[0] <= 1 or min(abs(b.center[0]), abs(b.center[0] - 1)) < F(1, 8)
    with pytest.raises(ValueError):
        net_cover(seg_sampler, F(0))


def test_dist_lower_bound_and_lemma():
    lb = dist_lower_bound(lambda d: [(F(0),)], lambda d: [(F(3),)])
    assert 0 < lb <= 3
    # refining gives a bound approaching 3 from below
    lb2 = dist_lower_bound(lambda d: [(F(0),)], lambda d: [(F(3),)], k=20)
    assert lb2 > F(5, 2)

    # separation lemma as an executable property: with gamma < lb/4, any
    # gamma-net covers of the two sets are pairwise formally disjoint
    gamma = lb / 4 * F(7, 8)
    nc1 = net_cover(lambda d: [(F(0),)], gamma)
    nc2 = net_cover(lambda d: [(F(3),)], gamma)
    from chainapprox.space import formally_disjoint_open

    assert formally_disjoint_open(nc1.open_set, nc2.open_set)

    with pytest.raises(SeparationError):
        dist_lower_bound(lambda d: [(F(0),)], lambda d: [(F(0),)], k=6)


def test_dist_lower_bound_faces_2d():
    # left and right faces of [-2,2]^2 under the identity: separation near 4
    def face(x):
        def sampler(delta):
            pts = []
            y = F(-2)
            while y <= 2:
                pts.append((F(x), y))
                y += delta
            return pts

        return sampler

    lb = dist_lower_bound(face(-2), face(2), k=8)
    assert F(3) < lb <= 4
