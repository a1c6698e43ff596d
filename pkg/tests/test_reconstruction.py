from fractions import Fraction

import pytest

from chainapprox.space import Ball, EuclideanSpace, OpenSet, formally_disjoint_open, sq_dist
from chainapprox.sets import BudgetExhausted, subtract
from chainapprox.chains import fmesh_lt, is_formal_chain
from chainapprox.reconstruction import (
    ChartWitness,
    OmegaTuple,
    accepted_blocks,
    chain_from_grid_code,
    check_conditions,
    clear_accepted_blocks,
    derive_anchors,
    local_upto,
    reconstruct,
    synth_candidate,
)
from chainapprox.instances import make_instance

F = Fraction


def identity_chart() -> ChartWitness:
    far = OpenSet.of(Ball((F(100),), F(1)))
    return ChartWitness(
        name="identity",
        arity=1,
        evaluator=lambda x, k: x,
        lipschitz_inf=F(1),
        outer_cover=far,
    )


def test_derive_anchors_identity():
    # d(f(A1), f(C1)) = d({-2}, [-1, 4]) = 1, so gamma < 1/4
    chart = identity_chart()
    anchors = derive_anchors(chart)
    assert anchors.gamma < F(1, 4)
    assert anchors.gamma > 0
    assert anchors.pair_bounds["A1|C1"] <= 1
    # every anchor ball meets its target face/patch (here: exact identity)
    (a,) = anchors.a_covers
    assert all(abs(b.center[0] - (-2)) < b.radius for b in a.balls)
    (bcov,) = anchors.b_covers
    assert all(abs(b.center[0] - 2) < b.radius for b in bcov.balls)
    mu = chart.patch_mu
    for b in anchors.x_cover.balls:
        assert -mu - b.radius < b.center[0] < mu + b.radius


def test_synth_candidate_structure():
    chart = identity_chart()
    anchors = derive_anchors(chart)
    k = 3
    tup = synth_candidate(k, chart, anchors)
    m = tup.meta["m"]
    assert m + 1 > 6 * 1 * 2**k  # mesh rule
    assert tup.chain.side == 8 * m + 7
    assert len(tup.chain.links) == 8 * m + 8
    assert (tup.e, tup.h) == (3 * m + 3, 5 * m + 4)
    assert tup.u is None
    assert fmesh_lt(tup.chain, F(1, 2**k))
    assert is_formal_chain(tup.chain)


def test_synth_candidate_half_grid():
    inst = make_instance("segment")
    chart = [c for c in inst.atlas if c.half][0]
    anchors = derive_anchors(chart)
    tup = synth_candidate(2, chart, anchors)
    m = tup.meta["m"]
    assert tup.u == 2 * m + 1
    # lower boundary link sits at the boundary image f(0)
    low = tup.chain.links[(0,)]
    assert low.contains(chart.evaluator((F(0),), 10))


def test_check_conditions_rejects_mutations():
    inst = make_instance("circle")
    chart = inst.atlas[0]
    anchors = derive_anchors(chart)
    tup = synth_candidate(2, chart, anchors)
    s_prime = subtract(inst.semi, chart.outer_cover)
    assert check_conditions(tup, s_prime, anchors, budget=2000)

    # swapping e and h empties the band; the x'-disjointness condition then
    # covers every link, which contradicts the patch cover: rejected or the
    # extracted block is empty (never accepted by the search)
    mutated = OmegaTuple(tup.k, tup.chain, tup.h, tup.e, tup.u, dict(tup.meta))
    ok = check_conditions(mutated, s_prime, anchors, budget=500)
    if ok:
        assert mutated.gamma_block().indices == ()
    # a coarser mesh bound than the links can honour is rejected
    coarse = OmegaTuple(12, tup.chain, tup.e, tup.h, tup.u, dict(tup.meta))
    assert not check_conditions(coarse, s_prime, anchors, budget=500)


def test_gamma_block_links_meet_set():
    inst = make_instance("circle")
    chart = inst.atlas[0]
    anchors = derive_anchors(chart)
    tup = synth_candidate(2, chart, anchors)
    block = tup.gamma_block()
    assert block.indices
    truth = inst.truth
    for link in block.links():
        assert any(truth.meets_ball(b) for b in link.balls)


def test_far_links_formally_disjoint_from_anchors():
    inst = make_instance("circle")
    chart = inst.atlas[0]
    anchors = derive_anchors(chart)
    tup = synth_candidate(1, chart, anchors)
    e, h = tup.e, tup.h
    for v in tup.chain.index_vectors():
        if any(c < e or c > h for c in v):
            assert formally_disjoint_open(tup.chain.links[v], anchors.x_cover)


def test_local_upto_segment_boundary():
    inst = make_instance("segment")
    chart = [c for c in inst.atlas if c.name == "end0"][0]
    piece = local_upto(
        inst.semi,
        chart,
        inst.space,
        boundary_semi=inst.boundary_semi,
        target_name="segment",
        budget=50_000,
    )
    k = 2
    fs = piece.finset(k)
    truth = inst.truth
    bound = F(1, 2**k)
    assert all(truth.dist_le(p, bound) for p in fs.points)
    # the boundary point itself is approximated
    assert any(sq_dist((F(0),), p) <= bound * bound for p in fs.points)
    cert = piece.run.certificates[k]
    assert cert["u"] is not None and cert["stage"] == 0


def test_local_upto_requires_boundary_oracle():
    inst = make_instance("segment")
    chart = [c for c in inst.atlas if c.half][0]
    with pytest.raises(ValueError):
        local_upto(inst.semi, chart, inst.space, boundary_semi=None)


def test_chain_from_grid_code_roundtrip_small():
    sp = EuclideanSpace(1)
    from chainapprox.codes import grid_encode

    b0 = Ball((F(0),), F(1)).code(sp)
    b1 = Ball((F(2),), F(1)).code(sp)
    from chainapprox.codes import list_encode

    j0 = list_encode([b0])
    j1 = list_encode([b1])
    l = grid_encode({(0,): j0, (1,): j1}, 1)
    chain = chain_from_grid_code(l, 1, sp)
    assert chain.side == 1
    assert chain.links[(0,)].balls[0].center == (F(0),)
    assert chain.links[(1,)].balls[0].center == (F(2),)


def test_reconstruct_requires_atlas():
    inst = make_instance("circle")
    with pytest.raises(ValueError):
        reconstruct(inst.semi, [], inst.space)


def test_accepted_blocks_audit():
    clear_accepted_blocks()
    inst = make_instance("segment")
    rec = reconstruct(
        inst.semi, inst.atlas, inst.space, boundary_semi=inst.boundary_semi, target_name="segment"
    )
    rec.finset(1)
    blocks = accepted_blocks()
    assert len(blocks) == 3
    truth = inst.truth
    for block in blocks:
        for link in block.links():
            assert any(truth.meets_ball(b) for b in link.balls)
    clear_accepted_blocks()
