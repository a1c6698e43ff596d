"""n-chain machinery: grid-indexed families of ball unions and their
semi-decidable certificates.

A chain candidate is a total assignment of a ball union to every index
vector of a cube {0..side}^n.  The predicates here are what a chain search
needs: formal disjointness of all Chebyshev-far link pairs, certified mesh
bounds, cover tests through a set oracle, and the compact grid chains of
axis cells used to transport cube geometry through a chart.

Screening: far-pair checks first compare axis bounding boxes of link
centres; a positive screen is itself an exact proof (coordinate gaps lower
bound the distance), so screens only skip work, never decide against a
pair.  Chains whose data lives on a common dyadic grid carry an integer
view that lets numpy run the screens; failures always fall back to exact
rational ball-pair checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .codes import grid_encode, iter_cube
from .space import (
    Ball,
    EuclideanSpace,
    OpenSet,
    Point,
    as_point,
    formally_disjoint_open,
    sq_dist,
    sqrt_enclosure,
)
from .sets import SemiOracle

__all__ = [
    "p_metric",
    "ChainCandidate",
    "GridCell",
    "NetCover",
    "SeparationError",
    "grid_chain",
    "union_open_set",
    "lower_boundary_open_set",
    "covers",
    "lower_covers",
    "is_formal_chain",
    "formal_chain_offenders",
    "fmesh_lt",
    "link_fdiam_lt",
    "net_cover",
    "dist_lower_bound",
]


class SeparationError(RuntimeError):
    """Separation search exhausted its refinement budget."""


def p_metric(a: Sequence[int], b: Sequence[int]) -> int:
    """Chebyshev distance on index vectors."""
    if len(a) != len(b):
        raise ValueError("arity mismatch")
    return max(abs(x - y) for x, y in zip(a, b))


@dataclass(frozen=True)
class GridCell:
    """Axis-aligned box, one cell of a compact grid chain."""

    intervals: tuple[tuple[Fraction, Fraction], ...]

    def __post_init__(self):
        ivs = tuple((Fraction(lo), Fraction(hi)) for lo, hi in self.intervals)
        if any(hi < lo for lo, hi in ivs):
            raise ValueError("empty box")
        object.__setattr__(self, "intervals", ivs)

    @property
    def dim(self) -> int:
        return len(self.intervals)

    def contains(self, p: Point) -> bool:
        return all(lo <= c <= hi for (lo, hi), c in zip(self.intervals, p))

    def sq_gap(self, other: "GridCell") -> Fraction:
        """Exact squared distance between two axis boxes."""
        total = Fraction(0)
        for (alo, ahi), (blo, bhi) in zip(self.intervals, other.intervals):
            g = max(blo - ahi, alo - bhi, Fraction(0))
            total += g * g
        return total

    def disjoint(self, other: "GridCell") -> bool:
        return self.sq_gap(other) > 0

    def corners(self) -> list[Point]:
        pts: list[tuple[Fraction, ...]] = [()]
        for lo, hi in self.intervals:
            pts = [p + (c,) for p in pts for c in ((lo, hi) if hi != lo else (lo,))]
        return pts


def grid_chain(m: int, n: int, half: bool = False) -> dict[tuple[int, ...], GridCell]:
    """The compact grid chain of cells over [-4,4]^n, indexed by {0..8m+7}^n.

    With ``half`` the last axis uses the half-space cells
    [i/(2m+2), (i+1)/(2m+2)], so the union is [-4,4]^n cut to {x_n >= 0}.
    Chebyshev-far cells are disjoint; the cells cover the box exactly.
    """
    if m < 0 or n < 1:
        raise ValueError("need m >= 0, n >= 1")
    side = 8 * m + 7
    full = [
        (Fraction(-4) + Fraction(i, m + 1), Fraction(-4) + Fraction(i + 1, m + 1))
        for i in range(side + 1)
    ]
    last = (
        [(Fraction(i, 2 * m + 2), Fraction(i + 1, 2 * m + 2)) for i in range(side + 1)]
        if half
        else full
    )
    out: dict[tuple[int, ...], GridCell] = {}
    for v in iter_cube(side, n):
        ivs = tuple(full[v[i]] for i in range(n - 1)) + (last[v[-1]],)
        out[v] = GridCell(ivs)
    return out


# --- chain candidates ---------------------------------------------------------


class ChainCandidate:
    """Total assignment of ball unions to {0..side}^n."""

    def __init__(self, arity: int, side: int, links: dict[tuple[int, ...], OpenSet]):
        expected = (side + 1) ** arity
        if len(links) != expected:
            raise ValueError(
                f"chain over {{0..{side}}}^{arity} needs {expected} links, got {len(links)}"
            )
        self.arity = arity
        self.side = side
        self.links = links
        self._order = list(iter_cube(side, arity))
        self._stats: list[_LinkStats] | None = None

    def link(self, v: tuple[int, ...]) -> OpenSet:
        return self.links[v]

    def index_vectors(self) -> list[tuple[int, ...]]:
        return self._order

    def grid_code(self, space: EuclideanSpace, cap: int | None = None) -> int:
        """Integer code of the chain (grid of open-set codes); may be huge."""
        table = {v: os.code(space, cap=cap) for v, os in self.links.items()}
        return grid_encode(table, self.side, cap=cap)

    def stats(self) -> list["_LinkStats"]:
        if self._stats is None:
            self._stats = [_link_stats(self.links[v]) for v in self._order]
        return self._stats


def union_open_set(chain: ChainCandidate) -> OpenSet:
    """Ball union of all links."""
    balls: list[Ball] = []
    for v in chain.index_vectors():
        balls.extend(chain.links[v].balls)
    return OpenSet(tuple(balls))


def lower_boundary_open_set(chain: ChainCandidate) -> OpenSet:
    """Ball union of the last-coordinate-zero slice."""
    balls: list[Ball] = []
    for v in chain.index_vectors():
        if v[-1] == 0:
            balls.extend(chain.links[v].balls)
    return OpenSet(tuple(balls))


def covers(semi: SemiOracle, chain: ChainCandidate, budget: int) -> bool:
    """Semi-decision: the chain's union is certified to cover the oracle's set."""
    return semi.covers_test(union_open_set(chain), budget)


def lower_covers(semi: SemiOracle, chain: ChainCandidate, budget: int) -> bool:
    """Semi-decision: the chain's lower boundary covers the oracle's set."""
    return semi.covers_test(lower_boundary_open_set(chain), budget)


# --- formal chain certification ----------------------------------------------


@dataclass
class _LinkStats:
    lo: tuple[Fraction, ...]
    hi: tuple[Fraction, ...]
    maxrad: Fraction


def _link_stats(os: OpenSet) -> _LinkStats:
    n = os.dim
    lo = tuple(min(b.center[c] for b in os.balls) for c in range(n))
    hi = tuple(max(b.center[c] for b in os.balls) for c in range(n))
    return _LinkStats(lo, hi, max(b.radius for b in os.balls))


def _screen_pair(a: _LinkStats, b: _LinkStats) -> bool:
    """True proves every centre pair is farther apart than any radius sum."""
    rsum = a.maxrad + b.maxrad
    total = Fraction(0)
    for c in range(len(a.lo)):
        g = max(b.lo[c] - a.hi[c], a.lo[c] - b.hi[c], Fraction(0))
        total += g * g
    return total > rsum * rsum


def _int_view(stats: list[_LinkStats], dim: int):
    """Common-dyadic-grid integer arrays for vectorised screening, or None.

    Requires every bound and radius to be dyadic and small enough that gap
    squares summed over the axes stay well inside int64.
    """
    sigma = 0
    vals: list[Fraction] = []
    for s in stats:
        vals.extend(s.lo)
        vals.extend(s.hi)
        vals.append(s.maxrad)
    for v in vals:
        d = v.denominator
        if d & (d - 1):
            return None
        sigma = max(sigma, d.bit_length() - 1)
    if sigma > 40:
        return None
    scale = 1 << sigma
    bound = max(abs(v) for v in vals) * scale
    if dim * 4 * bound * bound >= 2**62:
        return None
    lo = np.array([[int(s.lo[c] * scale) for s in stats] for c in range(dim)], dtype=np.int64)
    hi = np.array([[int(s.hi[c] * scale) for s in stats] for c in range(dim)], dtype=np.int64)
    rad = np.array([int(s.maxrad * scale) for s in stats], dtype=np.int64)
    return lo, hi, rad


def _suspect_pairs_1d(stats: list[_LinkStats], dim: int) -> list[tuple[int, int]] | None:
    """Far pairs (|i-j| >= 2) not cleared by the vectorised screen; None if
    no integer view is available."""
    view = _int_view(stats, dim)
    if view is None:
        return None
    lo, hi, rad = view
    N = rad.shape[0]
    suspects: list[tuple[int, int]] = []

    # near-diagonal band, exact vectorised screen per offset
    W = min(N - 1, 128)
    for d in range(2, W + 1):
        g2sum = np.zeros(N - d, dtype=np.int64)
        for c in range(dim):
            g = np.maximum(lo[c, d:] - hi[c, : N - d], lo[c, : N - d] - hi[c, d:])
            g = np.maximum(g, 0)
            g2sum += g * g
        rs = rad[d:] + rad[: N - d]
        bad = np.nonzero(g2sum <= rs * rs)[0]
        suspects.extend((int(i), int(i) + d) for i in bad)

    if N - 1 > W:
        # far region via blocks
        B = 64
        nb = (N + B - 1) // B
        blo = np.empty((dim, nb), dtype=np.int64)
        bhi = np.empty((dim, nb), dtype=np.int64)
        brad = np.empty(nb, dtype=np.int64)
        for bi in range(nb):
            sl = slice(bi * B, min((bi + 1) * B, N))
            for c in range(dim):
                blo[c, bi] = lo[c, sl].min()
                bhi[c, bi] = hi[c, sl].max()
            brad[bi] = rad[sl].max()
        for bi in range(nb):
            for bj in range(bi + 2, nb):
                lo_j = bj * B
                g2 = 0
                for c in range(dim):
                    g = max(blo[c, bj] - bhi[c, bi], blo[c, bi] - bhi[c, bj], 0)
                    g2 += int(g) * int(g)
                rs = int(brad[bi] + brad[bj])
                if g2 > rs * rs:
                    continue
                for i in range(bi * B, min((bi + 1) * B, N)):
                    for j in range(max(lo_j, i + W + 1), min((bj + 1) * B, N)):
                        g2 = 0
                        for c in range(dim):
                            g = max(int(lo[c, j] - hi[c, i]), int(lo[c, i] - hi[c, j]), 0)
                            g2 += g * g
                        rs = int(rad[i] + rad[j])
                        if g2 <= rs * rs:
                            suspects.append((i, j))
        # far pairs inside the block diagonal but beyond the band
        for i in range(N):
            for j in range(i + W + 1, min(i + 2 * B, N)):
                if (j // B) - (i // B) >= 2:
                    break
                g2 = 0
                for c in range(dim):
                    g = max(int(lo[c, j] - hi[c, i]), int(lo[c, i] - hi[c, j]), 0)
                    g2 += g * g
                rs = int(rad[i] + rad[j])
                if g2 <= rs * rs:
                    suspects.append((i, j))
    return suspects


def _far_pair_check(chain: ChainCandidate, collect: list | None) -> bool:
    order = chain.index_vectors()
    stats = chain.stats()
    dim = chain.links[order[0]].dim

    def exact(i: int, j: int) -> bool:
        return formally_disjoint_open(chain.links[order[i]], chain.links[order[j]])

    if chain.arity == 1:
        suspects = _suspect_pairs_1d(stats, dim)
        if suspects is not None:
            ok = True
            for i, j in suspects:
                if exact(i, j):
                    continue
                if collect is None:
                    return False
                collect.append((order[i], order[j]))
                ok = False
            return ok

    ok = True
    for i in range(len(order)):
        for j in range(i + 1, len(order)):
            if p_metric(order[i], order[j]) <= 1:
                continue
            if _screen_pair(stats[i], stats[j]) or exact(i, j):
                continue
            if collect is None:
                return False
            collect.append((order[i], order[j]))
            ok = False
    return ok


def is_formal_chain(chain: ChainCandidate) -> bool:
    """Exact decision: every Chebyshev-far link pair is formally disjoint."""
    return _far_pair_check(chain, None)


def formal_chain_offenders(chain: ChainCandidate) -> list[tuple[tuple, tuple]]:
    """All far index pairs that are not formally disjoint."""
    out: list[tuple[tuple, tuple]] = []
    _far_pair_check(chain, out)
    return out


def link_fdiam_lt(os: OpenSet, q: Fraction) -> bool:
    """Certified fdiam(link) < q via exact squared comparisons (no sqrt)."""
    q = Fraction(q)
    rmax = max(b.radius for b in os.balls)
    slack = q - 2 * rmax
    if slack <= 0:
        return False
    s2 = slack * slack
    st = _link_stats(os)
    diag2 = sum(((h - l) * (h - l) for l, h in zip(st.lo, st.hi)), Fraction(0))
    if diag2 < s2:
        return True
    balls = os.balls
    for a in range(len(balls)):
        for b in range(a + 1, len(balls)):
            if sq_dist(balls[a].center, balls[b].center) >= s2:
                return False
    return True


def fmesh_lt(chain: ChainCandidate, q: Fraction) -> bool:
    """Certified fmesh(chain) < q; a False is 'not certified', never 'false'."""
    return all(link_fdiam_lt(chain.links[v], q) for v in chain.index_vectors())


# --- net covers and separation bounds ----------------------------------------


@dataclass
class NetCover:
    """Ball union covering a compact set where every ball meets the set."""

    open_set: OpenSet
    gamma: Fraction
    meets_target: bool = True


Sampler = Callable[[Fraction], Sequence[Point]]


def net_cover(sampler: Sampler, gamma: Fraction) -> NetCover:
    """Cover a compact set K with gamma-balls that all meet K.

    The sampler must return, for any delta, a finite rational set D with
    K prec_delta D and D prec_delta K.  Balls of radius gamma sit on a
    gamma/2-thinned gamma/4-net: any K point is within 3*gamma/4 of a kept
    centre and every centre is within gamma/4 of K, so each ball meets K.
    """
    gamma = Fraction(gamma)
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    raw = [as_point(p) for p in sampler(gamma / 4)]
    if not raw:
        raise ValueError("sampler returned no points")
    thresh2 = (gamma / 2) * (gamma / 2)
    kept: list[Point] = []
    for p in raw:
        if all(sq_dist(p, qpt) > thresh2 for qpt in kept):
            kept.append(p)
    return NetCover(OpenSet(tuple(Ball(p, gamma) for p in kept)), gamma)


def dist_lower_bound(sampler_a: Sampler, sampler_b: Sampler, k: int = 12) -> Fraction:
    """Positive rational lower bound on d(A, B) for disjoint compact sets.

    From delta-nets: d(A,B) >= min pairwise net distance - 2*delta; delta is
    refined until the bound turns positive.  Nondisjoint inputs exhaust the
    refinement budget and raise SeparationError.
    """
    best_bound: Fraction | None = None
    for j in range(1, k + 1):
        delta = Fraction(1, 2**j)
        da = [as_point(p) for p in sampler_a(delta)]
        db = [as_point(p) for p in sampler_b(delta)]
        if not da or not db:
            raise ValueError("empty net")
        best = min(sq_dist(p, qpt) for p in da for qpt in db)
        lo, _ = sqrt_enclosure(best, j + 4)
        bound = lo - 2 * delta
        if bound > 0:
            if best_bound is None or bound > best_bound:
                best_bound = bound
            # keep refining until the net slack is small against the bound
            if 16 * delta <= best_bound:
                return best_bound
    if best_bound is not None:
        return best_bound
    raise SeparationError(f"no separation found down to delta=2^-{k}")
