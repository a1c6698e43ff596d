"""Chart-anchored chain search: certified local approximations and gluing.

Per chart the pipeline is: derive separation anchors (face covers a_i, b_i
and a patch cover x' with a common radius gamma bounded by a quarter of the
relevant set separations); synthesise, for each precision, a chain of ball
nets over the transported grid cells together with the band indices (e, h)
and, in the half-space case, the height index u; then verify the acceptance
conditions -- cover, formal chain, anchored disjointness, mesh -- against
the instance's oracles with exact arithmetic.  The index block Gamma of an
accepted tuple yields the local point cloud; gluing the per-chart clouds
gives the certified approximation family.

The search dovetails the synthesised candidate with a fair enumeration of
raw tuple codes, so acceptance never depends on the synthesiser being right,
only on some candidate passing the checks; in practice the synthesised one
passes first and the enumeration is a completeness fallback.

The anchored patch is f([-mu,mu]^n) (intersected with the half-space for
boundary charts) rather than the single point f(0): the same separation
lemma applies with the whole patch, every condition below is still checked,
and the covered neighbourhood then contains the patch, which is what lets a
small atlas cover the manifold.
"""

from __future__ import annotations

import hashlib
from math import isqrt
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .codes import iter_cube, list_decode, tau1, tau2, unpair
from .space import (
    Ball,
    EuclideanSpace,
    FinSet,
    OpenSet,
    Point,
    formally_disjoint_open,
    sq_dist,
    sqrt_enclosure,
)
from .sets import Approx, BudgetExhausted, SemiOracle, UpToApprox, glue, subtract
from .chains import (
    ChainCandidate,
    NetCover,
    _LinkStats,
    _link_stats,
    _screen_pair,
    dist_lower_bound,
    fmesh_lt,
    is_formal_chain,
    lower_boundary_open_set,
    net_cover,
    union_open_set,
)

__all__ = [
    "ChartWitness",
    "AnchorData",
    "OmegaTuple",
    "GammaBlock",
    "derive_anchors",
    "synth_candidate",
    "check_conditions",
    "local_upto",
    "reconstruct",
    "Reconstruction",
    "chain_from_grid_code",
]

DomainBox = tuple[tuple[Fraction, Fraction], ...]


@dataclass
class ChartWitness:
    """Evaluator, modulus data and anchor inputs for one chart.

    The evaluator returns a rational point within 2^-k of the true chart
    image f(x); ``lipschitz_inf`` bounds d(f(x), f(y)) by L * ||x-y||_inf on
    the whole domain, and ``local_lipschitz`` may sharpen that bound on a
    given sub-box.  ``outer_cover`` is the ball union containing everything
    the chart does not see, kept away from f([-2,2]^n); both halves of that
    obligation are instance metadata, spot-checked by instance tests.
    """

    name: str
    arity: int
    evaluator: Callable[[Point, int], Point]
    lipschitz_inf: Fraction
    outer_cover: OpenSet
    half: bool = False
    patch_mu: Fraction = Fraction(13, 16)
    local_lipschitz: Callable[[DomainBox], Fraction] | None = None

    def modulus(self, k: int) -> int:
        """Smallest m with ||x-y||_inf <= 8/(m+1) forcing image distance < 2^-k."""
        need = 8 * self.lipschitz_inf * (2**k)
        m_plus_1 = int(need) + 1
        return m_plus_1 - 1

    def lip_on(self, box: DomainBox) -> Fraction:
        if self.local_lipschitz is not None:
            return self.local_lipschitz(box)
        return self.lipschitz_inf

    def domain(self) -> DomainBox:
        lo = Fraction(-4)
        out = [(lo, Fraction(4))] * self.arity
        if self.half:
            out[-1] = (Fraction(0), Fraction(4))
        return tuple(out)


@dataclass
class AnchorData:
    """Separation anchors for one chart: face covers, patch cover, gamma."""

    a_covers: list[OpenSet]
    b_covers: list[OpenSet]
    x_cover: OpenSet
    gamma: Fraction
    pair_bounds: dict[str, Fraction] = field(default_factory=dict)


@dataclass
class OmegaTuple:
    """A chain candidate with its band indices, ready for condition checks."""

    k: int
    chain: ChainCandidate
    e: int
    h: int
    u: int | None
    meta: dict = field(default_factory=dict)

    def gamma_block(self) -> "GammaBlock":
        vs = []
        n = self.chain.arity
        for v in self.chain.index_vectors():
            if self.u is None:
                if all(self.e <= c <= self.h for c in v):
                    vs.append(v)
            else:
                if v[-1] <= self.u and all(self.e <= v[i] <= self.h for i in range(n - 1)):
                    vs.append(v)
        return GammaBlock(tuple(vs), self)


@dataclass
class GammaBlock:
    """The accepted index block and its first-ball centres."""

    indices: tuple[tuple[int, ...], ...]
    tup: OmegaTuple

    def centers(self) -> FinSet:
        if not self.indices:
            raise ValueError("empty index block on an accepted tuple")
        return FinSet(tuple(self.tup.chain.links[v].balls[0].center for v in self.indices))

    def links(self) -> list[OpenSet]:
        return [self.tup.chain.links[v] for v in self.indices]


# --- small numeric helpers ----------------------------------------------------


def _dyadic_floor_strict(x: Fraction) -> Fraction:
    """A dyadic rational in (x/2, x); keeps later arithmetic on short words."""
    if x <= 0:
        raise ValueError("need a positive bound")
    j = 2
    while Fraction(1, 2**j) * 2 >= x:
        j += 1
    v = Fraction((x * 2**j).__floor__(), 2**j)
    if v >= x:
        v -= Fraction(1, 2**j)
    return v


def _snap_point(p: Point, sigma: int) -> Point:
    scale = 1 << sigma
    return tuple(Fraction((c.numerator * scale) // c.denominator, scale) for c in p)


def _ceil_log2_inv(x: Fraction) -> int:
    """Smallest j with 2^-j <= x."""
    j = 0
    while Fraction(1, 2**j) > x:
        j += 1
    return j


def _box_grid(box: DomainBox, spacing: Fraction) -> list[Point]:
    axes = []
    for lo, hi in box:
        pts = [lo]
        x = lo + spacing
        while x < hi:
            pts.append(x)
            x += spacing
        if hi != lo:
            pts.append(hi)
        axes.append(pts)
    out: list[tuple[Fraction, ...]] = [()]
    for ax in axes:
        out = [p + (c,) for p in out for c in ax]
    return out


def _region_sampler(chart: ChartWitness, boxes: Sequence[DomainBox]):
    """Image-net sampler for a union of domain boxes.

    For a requested fineness delta, domain grids at spacing delta/L plus
    evaluator error 2^-ke <= delta/4 give  region prec_delta net  and
    net prec_delta region.
    """

    L = chart.lipschitz_inf

    def sampler(delta: Fraction) -> list[Point]:
        delta = Fraction(delta)
        spacing = delta / L if L > 0 else delta
        ke = _ceil_log2_inv(delta / 4)
        pts: list[Point] = []
        for box in boxes:
            for x in _box_grid(box, spacing):
                pts.append(chart.evaluator(x, ke))
        return pts

    return sampler


# --- anchor derivation ----------------------------------------------------------


def _anchor_regions(chart: ChartWitness):
    """Domain boxes of the faces, bands and the excluded frame."""
    n = chart.arity
    half = chart.half
    two = Fraction(2)
    four = Fraction(4)
    one = Fraction(1)

    def cube(lo, hi, cut_last_at_zero=half):
        out = [(lo, hi)] * n
        if cut_last_at_zero:
            out[-1] = (max(lo, Fraction(0)), hi)
        return out

    def with_coord(base, i, val_lo, val_hi):
        out = list(base)
        out[i] = (val_lo, val_hi)
        return tuple(out)

    base2 = cube(-two, two)
    base4 = cube(-four, four)

    a_faces: list[DomainBox] = []
    b_faces: list[DomainBox] = []
    c_bands: list[DomainBox] = []
    d_bands: list[DomainBox] = []
    idx_a = range(n - 1) if half else range(n)
    for i in idx_a:
        a_faces.append(with_coord(base2, i, -two, -two))
        c_bands.append(with_coord(base4, i, -one, four))
    for i in range(n):
        if half and i == n - 1:
            b_faces.append(with_coord(base2, i, two, two))
            d_bands.append(with_coord(base4, i, Fraction(0), one))
        else:
            b_faces.append(with_coord(base2, i, two, two))
            d_bands.append(with_coord(base4, i, -four, one))

    frame: list[DomainBox] = []
    for i in range(n):
        if not (half and i == n - 1):
            frame.append(with_coord(base4, i, -four, -one))
        frame.append(with_coord(base4, i, one, four))

    mu = chart.patch_mu
    patch = cube(-mu, mu)
    return a_faces, b_faces, c_bands, d_bands, frame, tuple(patch)


def derive_anchors(chart: ChartWitness, sep_refine: int = 12) -> AnchorData:
    """Face covers, patch cover and a certified separation radius gamma.

    gamma is a dyadic rational strictly below a quarter of every computed
    separation lower bound: d(f(A_i), f(C_i)), d(f(B_i), f(D_i)) and
    d(patch, f(frame)); since f(0) lies in the patch, the point separation
    bound is implied.
    """
    a_faces, b_faces, c_bands, d_bands, frame, patch = _anchor_regions(chart)
    bounds: dict[str, Fraction] = {}
    worst: Fraction | None = None
    for i, (fa, fc) in enumerate(zip(a_faces, c_bands)):
        lb = dist_lower_bound(_region_sampler(chart, [fa]), _region_sampler(chart, [fc]), sep_refine)
        bounds[f"A{i + 1}|C{i + 1}"] = lb
        worst = lb if worst is None or lb < worst else worst
    for i, (fb, fd) in enumerate(zip(b_faces, d_bands)):
        lb = dist_lower_bound(_region_sampler(chart, [fb]), _region_sampler(chart, [fd]), sep_refine)
        bounds[f"B{i + 1}|D{i + 1}"] = lb
        worst = lb if worst is None or lb < worst else worst
    lb = dist_lower_bound(_region_sampler(chart, [patch]), _region_sampler(chart, frame), sep_refine)
    bounds["patch|frame"] = lb
    worst = lb if worst is None or lb < worst else worst

    gamma = _dyadic_floor_strict(worst / 4)
    a_covers = [net_cover(_region_sampler(chart, [fa]), gamma).open_set for fa in a_faces]
    b_covers = [net_cover(_region_sampler(chart, [fb]), gamma).open_set for fb in b_faces]
    x_cover = net_cover(_region_sampler(chart, [patch]), gamma).open_set
    return AnchorData(a_covers, b_covers, x_cover, gamma, bounds)


# --- candidate synthesis ---------------------------------------------------------


def _cells_1d(chart: ChartWitness, m: int) -> list[tuple[Fraction, Fraction]]:
    side = 8 * m + 7
    if chart.half:
        return [(Fraction(i, 2 * m + 2), Fraction(i + 1, 2 * m + 2)) for i in range(side + 1)]
    return [
        (Fraction(-4) + Fraction(i, m + 1), Fraction(-4) + Fraction(i + 1, m + 1))
        for i in range(side + 1)
    ]


def _min_far_gapsq_1d(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """For each index v, min over |w-v| >= 2 of the squared box gap (int64).

    lo/hi have shape (n_coords, N).  Exact integer arithmetic; entries with
    no far partner get a huge sentinel.
    """
    ncoord, N = lo.shape
    INF = np.int64(2**62)
    best = np.full(N, INF, dtype=np.int64)
    W = min(N - 1, 160)
    for d in range(2, W + 1):
        g2 = np.zeros(N - d, dtype=np.int64)
        for c in range(ncoord):
            g = np.maximum(lo[c, d:] - hi[c, : N - d], lo[c, : N - d] - hi[c, d:])
            g = np.maximum(g, 0)
            g2 += g * g
        best[: N - d] = np.minimum(best[: N - d], g2)
        best[d:] = np.minimum(best[d:], g2)
    if N - 1 > W:
        B = 64
        nb = (N + B - 1) // B
        blo = np.empty((ncoord, nb), dtype=np.int64)
        bhi = np.empty((ncoord, nb), dtype=np.int64)
        for bi in range(nb):
            sl = slice(bi * B, min((bi + 1) * B, N))
            for c in range(ncoord):
                blo[c, bi] = lo[c, sl].min()
                bhi[c, bi] = hi[c, sl].max()
        for bi in range(nb):
            for bj in range(bi + 1, nb):
                # skip only when every pair of the block pair sits in the band
                if (bj - bi + 1) * B - 1 <= W:
                    continue
                g2 = 0
                for c in range(ncoord):
                    g = max(int(blo[c, bj] - bhi[c, bi]), int(blo[c, bi] - bhi[c, bj]), 0)
                    g2 += g * g
                g2v = np.int64(min(g2, 2**62))
                sl_i = slice(bi * B, min((bi + 1) * B, N))
                sl_j = slice(bj * B, min((bj + 1) * B, N))
                best[sl_i] = np.minimum(best[sl_i], g2v)
                best[sl_j] = np.minimum(best[sl_j], g2v)
    return best


def synth_candidate(k: int, chart: ChartWitness, anchors: AnchorData) -> OmegaTuple:
    """Build the constructive chain candidate for mesh target 2^-k.

    Grid resolution comes from the chart's Lipschitz data (mesh of the
    transported cells < 2^-k/6); per-cell net radii are dyadic rationals
    strictly below min(gamma, 2^-k/6, far-cell separation/4), with the
    separation bounded from sampled cell enclosures, exactly.
    """
    if chart.arity != 1:
        return _synth_candidate_nd(k, chart, anchors)

    eps = Fraction(1, 2**k)
    L = chart.lipschitz_inf
    m = int(6 * L * 2**k)  # m+1 > 6 L 2^k ensures mesh < eps/6
    side = 8 * m + 7
    cells = _cells_1d(chart, m)

    # enclosure boxes per cell: sample at quarter-cell spacing, pad by the
    # local Lipschitz reach of the sampling gap plus evaluator error, then
    # snap outward to a common dyadic grid for integer separation scans
    cell_w = cells[0][1] - cells[0][0]
    ke_box = _ceil_log2_inv(cell_w / 64)
    ev_err = Fraction(1, 2**ke_box)
    sub = 4
    sigma_box = ke_box + 6
    scale = 1 << sigma_box
    lips: list[Fraction] = []
    dim = len(chart.evaluator((cells[0][0],), ke_box))
    lo_rows = [[0] * (side + 1) for _ in range(dim)]
    hi_rows = [[0] * (side + 1) for _ in range(dim)]
    for v, (a, b) in enumerate(cells):
        Lloc = chart.lip_on(((a, b),))
        lips.append(Lloc)
        pad = Lloc * (b - a) / (2 * sub) + ev_err
        samples = [chart.evaluator((a + (b - a) * Fraction(j, sub),), ke_box) for j in range(sub + 1)]
        for c in range(dim):
            lo = min(s[c] for s in samples) - pad
            hi = max(s[c] for s in samples) + pad
            lo_rows[c][v] = (lo * scale).__floor__()
            hi_rows[c][v] = -((-hi * scale).__floor__())
    lo_arr = np.array(lo_rows, dtype=np.int64)
    hi_arr = np.array(hi_rows, dtype=np.int64)
    gapsq = _min_far_gapsq_1d(lo_arr, hi_arr)

    deltas: list[Fraction] = []
    delta_min: Fraction | None = None
    for v in range(side + 1):
        g2 = int(gapsq[v])
        if g2 <= 0:
            raise ValueError(f"cell {v}: no positive separation to far cells")
        sep = Fraction(isqrt(g2), scale)  # floor sqrt: sep <= true far gap
        dv = _dyadic_floor_strict(min(anchors.gamma, eps / 6, sep / 4))
        deltas.append(dv)
        if delta_min is None or dv < delta_min:
            delta_min = dv
    sigma = _ceil_log2_inv(delta_min / 128) + 1

    # per-cell nets: the domain grid at spacing dv/(2 L_loc) lands within
    # dv/4 of every cell-image point, the evaluator and snap add < dv/16,
    # so the dv-balls cover the image with margin while every centre stays
    # within dv/16 of it, hence every ball meets it
    links: dict[tuple[int, ...], OpenSet] = {}
    balls_total = 0
    for v in range(side + 1):
        a, b = cells[v]
        dv = deltas[v]
        Lloc = lips[v]
        ke = _ceil_log2_inv(dv / 64)
        spacing = dv / (2 * Lloc) if Lloc > 0 else dv
        count = int((b - a) / spacing) + 1
        raw: list[Point] = []
        for j in range(count + 1):
            t = min(b, a + spacing * j)
            p = _snap_point(chart.evaluator((t,), ke), sigma)
            if not raw or raw[-1] != p:
                raw.append(p)
        links[(v,)] = OpenSet(tuple(Ball(p, dv) for p in raw))
        balls_total += len(raw)

    chain = ChainCandidate(1, side, links)
    e, h = 3 * m + 3, 5 * m + 4
    u = (2 * m + 1) if chart.half else None
    meta = {
        "m": m,
        "side": side,
        "sigma": sigma,
        "delta_min": delta_min,
        "gamma": anchors.gamma,
        "balls": balls_total,
        "chart": chart.name,
    }
    return OmegaTuple(k, chain, e, h, u, meta)


def _thin(points: list[Point], threshold: Fraction) -> list[Point]:
    """Greedy thinning: kept points are pairwise farther than the threshold
    and every input point is within the threshold of a kept one."""
    t2 = threshold * threshold
    kept: list[Point] = []
    for p in points:
        if all(sq_dist(p, q) > t2 for q in kept):
            kept.append(p)
    return kept


def _synth_candidate_nd(k: int, chart: ChartWitness, anchors: AnchorData) -> OmegaTuple:
    """Plain (unvectorised) synthesis for arity >= 2; adequate at smoke scale."""
    from .chains import grid_chain

    eps = Fraction(1, 2**k)
    L = chart.lipschitz_inf
    m = int(6 * L * 2**k)
    side = 8 * m + 7
    n = chart.arity
    cells = grid_chain(m, n, half=chart.half)
    order = list(iter_cube(side, n))

    ke_box = _ceil_log2_inv(Fraction(1, (m + 1) * 64))
    ev_err = Fraction(1, 2**ke_box)
    enclo = {}
    for v in order:
        box = cells[v].intervals
        Lloc = chart.lip_on(box)
        pad = Lloc * max(hi - lo for lo, hi in box) / 2 + ev_err
        corners = [chart.evaluator(p, ke_box) for p in cells[v].corners()]
        dim = len(corners[0])
        enclo[v] = tuple(
            (min(c[i] for c in corners) - pad, max(c[i] for c in corners) + pad)
            for i in range(dim)
        )

    def boxgap2(b1, b2) -> Fraction:
        total = Fraction(0)
        for (alo, ahi), (blo, bhi) in zip(b1, b2):
            g = max(blo - ahi, alo - bhi, Fraction(0))
            total += g * g
        return total

    links = {}
    delta_min = None
    deltas = {}
    for v in order:
        sep2 = None
        for w in order:
            if max(abs(a - b) for a, b in zip(v, w)) <= 1:
                continue
            g2 = boxgap2(enclo[v], enclo[w])
            if sep2 is None or g2 < sep2:
                sep2 = g2
        if sep2 is None or sep2 <= 0:
            raise ValueError(f"cell {v}: no positive separation")
        lo, _ = sqrt_enclosure(sep2, k + 8)
        dv = _dyadic_floor_strict(min(anchors.gamma, eps / 6, lo / 4))
        deltas[v] = dv
        if delta_min is None or dv < delta_min:
            delta_min = dv
    sigma = _ceil_log2_inv(delta_min / 16) + 4
    for v in order:
        dv = deltas[v]
        box = cells[v].intervals
        Lloc = chart.lip_on(box)
        ke = _ceil_log2_inv(dv / 16)

        def sampler(delta: Fraction, box=box, Lloc=Lloc, ke=ke) -> list[Point]:
            spacing = delta / (2 * Lloc) if Lloc > 0 else delta
            return [_snap_point(chart.evaluator(p, ke), sigma) for p in _box_grid(box, spacing)]

        links[v] = net_cover(sampler, dv).open_set

    chain = ChainCandidate(n, side, links)
    e, h = 3 * m + 3, 5 * m + 4
    u = (2 * m + 1) if chart.half else None
    meta = {"m": m, "side": side, "sigma": sigma, "delta_min": delta_min, "gamma": anchors.gamma, "chart": chart.name}
    return OmegaTuple(k, chain, e, h, u, meta)


# --- condition checks ------------------------------------------------------------


def _links_far_from_cover(
    chain: ChainCandidate,
    selector: Callable[[tuple[int, ...]], bool],
    cover: OpenSet,
) -> bool:
    """All selected links formally disjoint from the cover (exact, screened)."""
    cover_stats = _link_stats(cover)
    stats = chain.stats()
    order = chain.index_vectors()
    for idx, v in enumerate(order):
        if not selector(v):
            continue
        if _screen_pair(stats[idx], cover_stats):
            continue
        if not formally_disjoint_open(chain.links[v], cover):
            return False
    return True


def check_conditions(
    tup: OmegaTuple,
    s_prime: SemiOracle,
    anchors: AnchorData,
    budget: int,
    t_prime: SemiOracle | None = None,
) -> bool:
    """Verify the acceptance conditions for a candidate tuple.

    Interior charts: the chain covers S', is a formal chain, links beyond the
    band indices are formally disjoint from the matching face/patch covers,
    and the certified mesh is below 2^-k.  Boundary charts add the lower
    boundary covering T' and the height conditions around u.
    """
    chain, e, h, u = tup.chain, tup.e, tup.h, tup.u
    n = chain.arity
    eps = Fraction(1, 2**tup.k)

    if not fmesh_lt(chain, eps):
        return False
    if u is not None and t_prime is None:
        return False
    if u is None:
        band_idx = range(n)
        for i in band_idx:
            if i < len(anchors.a_covers) and not _links_far_from_cover(
                chain, lambda v, i=i: v[i] >= e, anchors.a_covers[i]
            ):
                return False
            if not _links_far_from_cover(chain, lambda v, i=i: v[i] <= h, anchors.b_covers[i]):
                return False
        if not _links_far_from_cover(
            chain, lambda v: any(c < e or c > h for c in v), anchors.x_cover
        ):
            return False
    else:
        for i in range(n - 1):
            if not _links_far_from_cover(chain, lambda v, i=i: v[i] >= e, anchors.a_covers[i]):
                return False
            if not _links_far_from_cover(chain, lambda v, i=i: v[i] <= h, anchors.b_covers[i]):
                return False
        if not _links_far_from_cover(chain, lambda v: v[-1] <= u, anchors.b_covers[n - 1]):
            return False
        if not _links_far_from_cover(
            chain, lambda v: any(v[i] < e or v[i] > h for i in range(n - 1)), anchors.x_cover
        ):
            return False
        if not _links_far_from_cover(chain, lambda v: v[-1] > u, anchors.x_cover):
            return False

    if not is_formal_chain(chain):
        return False
    if not s_prime.covers_test(union_open_set(chain), budget):
        return False
    if u is not None:
        if not t_prime.covers_test(lower_boundary_open_set(chain), budget):
            return False
    return True


def chain_from_grid_code(l: int, n: int, space: EuclideanSpace) -> ChainCandidate:
    """Decode a raw natural number as a chain candidate (enumeration branch)."""
    side = tau2(l)
    entries = list_decode(tau1(l))
    from .codes import nu

    links = {}
    for v in iter_cube(side, n):
        pos = nu(v)
        code = entries[pos] if pos < len(entries) else entries[0]
        links[v] = OpenSet.from_code(code, space)
    return ChainCandidate(n, side, links)


def chain_content_hash(chain: ChainCandidate) -> str:
    """Stable content hash standing in for the (astronomical) integer code."""
    hasher = hashlib.sha256()
    for v in chain.index_vectors():
        hasher.update(repr(v).encode())
        for b in chain.links[v].balls:
            hasher.update(repr((tuple(map(str, b.center)), str(b.radius))).encode())
    return hasher.hexdigest()


# --- the per-chart local search ----------------------------------------------------


@dataclass
class ChartRun:
    """Everything local_upto accumulated for one chart."""

    chart: ChartWitness
    anchors: AnchorData
    s_prime: SemiOracle
    t_prime: SemiOracle | None
    certificates: dict[int, dict] = field(default_factory=dict)


def local_upto(
    semi: SemiOracle,
    chart: ChartWitness,
    space: EuclideanSpace,
    boundary_semi: SemiOracle | None = None,
    target_name: str = "S",
    budget: int = 200_000,
    enum_stages: int = 64,
) -> UpToApprox:
    """Computable-up-to witness for the chart's patch neighbourhood.

    For each stored index k the search runs at k+1: it tries the synthesised
    candidate first, dovetailing the fair enumeration of raw tuple codes,
    and accepts the first tuple passing ``check_conditions``; the first-ball
    centres of the accepted Gamma block then satisfy both 2^-k bounds after
    the index shift.
    """
    if chart.half and boundary_semi is None:
        raise ValueError(f"boundary chart {chart.name} needs the boundary oracle")
    anchors = derive_anchors(chart)
    s_prime = subtract(semi, chart.outer_cover, name=f"S'({chart.name})")
    t_prime = (
        subtract(boundary_semi, chart.outer_cover, name=f"T'({chart.name})")
        if chart.half
        else None
    )
    run = ChartRun(chart, anchors, s_prime, t_prime)

    def accept_for(k: int) -> FinSet:
        kk = k + 1
        candidates = _candidate_stream(kk, chart, anchors, space, enum_stages)
        for stage, tup in candidates:
            ok = check_conditions(tup, s_prime, anchors, budget, t_prime)
            if ok:
                block = tup.gamma_block()
                if not block.indices:
                    continue
                cert = dict(tup.meta)
                cert.update(
                    {
                        "k_search": kk,
                        "e": tup.e,
                        "h": tup.h,
                        "u": tup.u,
                        "stage": stage,
                        "gamma_links": len(block.indices),
                        "chain_hash": chain_content_hash(tup.chain),
                    }
                )
                run.certificates[k] = cert
                _LAST_BLOCKS.append(block)
                return block.centers()
        raise BudgetExhausted(f"no accepted tuple for chart {chart.name} at k={k}")

    out = UpToApprox(
        fn=accept_for,
        subset_name=f"{target_name}'&patch({chart.name})",
        target_name=target_name,
        meta={"chart": chart.name},
    )
    out.run = run  # type: ignore[attr-defined]
    return out


def _candidate_stream(kk: int, chart, anchors, space, enum_stages: int):
    """Synthesised candidate first, then the fair raw enumeration."""
    yield 0, synth_candidate(kk, chart, anchors)
    for stage in range(1, enum_stages + 1):
        code = stage - 1
        if chart.half:
            le, u = unpair(code)
            lh, e_ = unpair(le)
            l, h_ = unpair(lh)
            uu: int | None = u
        else:
            lh, e_ = unpair(code)
            l, h_ = unpair(lh)
            uu = None
        try:
            chain = chain_from_grid_code(l, chart.arity, space)
        except Exception:
            continue
        if chain.side > 64:
            continue
        yield stage, OmegaTuple(kk, chain, e_, h_, uu, {"m": None, "side": chain.side, "chart": chart.name, "stage": stage})


# gamma blocks of accepted tuples, for soundness audits (test instrumentation)
_LAST_BLOCKS: list[GammaBlock] = []


def accepted_blocks() -> list[GammaBlock]:
    return list(_LAST_BLOCKS)


def clear_accepted_blocks() -> None:
    _LAST_BLOCKS.clear()


# --- the global algorithm ----------------------------------------------------------


@dataclass
class Reconstruction:
    """Glued certified approximation plus per-chart certificates."""

    approx: Approx
    pieces: list[UpToApprox]
    name: str

    def finset(self, k: int) -> FinSet:
        return self.approx.finset(k)

    def certificates(self, k: int) -> list[dict]:
        out = []
        for p in self.pieces:
            run: ChartRun = p.run  # type: ignore[attr-defined]
            cert = run.certificates.get(k)
            if cert is not None:
                out.append(cert)
        return out


def reconstruct(
    semi: SemiOracle,
    atlas: Sequence[ChartWitness],
    space: EuclideanSpace,
    boundary_semi: SemiOracle | None = None,
    target_name: str = "S",
    budget: int = 200_000,
) -> Reconstruction:
    """Certified approximation family for the whole set from an atlas.

    The atlas obligation (the chart patches cover the set) is instance
    metadata; under it, gluing the per-chart witnesses yields
    rho(S, Lambda_k) <= 2^-k for every k.
    """
    if not atlas:
        raise ValueError("reconstruction needs at least one chart")
    pieces = [
        local_upto(
            semi,
            chart,
            space,
            boundary_semi=boundary_semi if chart.half else None,
            target_name=target_name,
            budget=budget,
        )
        for chart in atlas
    ]
    return Reconstruction(glue(pieces, covering_note="atlas patches cover the target"), pieces, target_name)
