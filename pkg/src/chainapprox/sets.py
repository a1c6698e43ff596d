"""Set representations as deterministic, budgeted oracle state machines.

Four views of a compact set K are realised as explicit enumerators:

* ``SemiOracle``    -- emits ball unions J certified to cover K;
* ``CoCeOracle``    -- emits balls certified to avoid K (complement cover);
* ``CeOracle``      -- emits balls certified to meet K;
* ``Approx``        -- k |-> finite point set within Hausdorff 2^-k of K.

An oracle's time is an abstract tick counter.  Each tick takes one candidate
(from the request queue, the retry heap or the autonomous candidate stream)
and runs its sound certifier under a step budget; certified candidates are
emitted, failed ones are retried later with exponentially more effort.  The
schedule is fixed, so equal call sequences replay identically and emissions
are monotone in the budget.

Certifiers are the semantic core: a ``True`` answer is a proof (exact
rational arithmetic only), a ``False`` answer merely means "not within this
effort".  Requests steer which candidates get certified first but never
change what is certifiable, so they do not alter the set enumerated in the
limit.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Sequence

from .space import (
    Ball,
    BallIndex,
    ball_ikey,
    BucketIndex,
    FinSet,
    OpenSet,
    Point,
    EuclideanSpace,
    as_point,
    formally_contained,
    formally_disjoint_balls,
)

__all__ = [
    "BudgetExhausted",
    "PreCertified",
    "SemiOracle",
    "CoCeOracle",
    "CeOracle",
    "Approx",
    "UpToApprox",
    "semi_to_coce",
    "coce_to_semi",
    "semi_ce_to_approx",
    "approx_to_semi",
    "approx_to_ce",
    "subtract",
    "upto_union",
    "glue",
    "box_grid_approx",
    "DEFAULT_BUDGET",
]

DEFAULT_BUDGET = 10**6


class BudgetExhausted(RuntimeError):
    """The search ran out of ticks; distinct from any soundness failure."""


class PreCertified:
    """Wrapper an autonomous feed uses for items whose certificate is
    inherited from upstream (no further certification needed)."""

    __slots__ = ("item",)

    def __init__(self, item):
        self.item = item


# --- the shared stepping machinery -----------------------------------------


class _CertifyingEnumerator:
    """Deterministic ticked enumerator over candidates with sound certifiers.

    Subclass responsibilities: ``kind``, ``_key`` (extensional normalisation),
    ``_render`` (trace form) and a candidate source / certifier pair supplied
    at construction.
    """

    kind = "?"

    def __init__(
        self,
        certifier: Callable[[object, int], bool],
        autonomous: Callable[[], Iterator[object]] | None = None,
        name: str = "",
        effort0: int = 512,
    ):
        self._certify = certifier
        self._auto = autonomous() if autonomous is not None else iter(())
        self._auto_done = False
        self.name = name
        self._effort0 = effort0
        self._ticks = 0
        self._queue: deque = deque()
        self._retries: list[tuple[int, int, int, object]] = []  # (due, seq, attempts, cand)
        self._seq = 0
        self._emitted: list[tuple[int, object]] = []
        self._keys: set = set()

    # -- subclass hooks

    def _effort_for(self, cand) -> int:
        size = len(cand.balls) if isinstance(cand, OpenSet) else 1
        return self._effort0 + 16 * size

    def _key(self, item):
        raise NotImplementedError

    def _render(self, item) -> str:
        raise NotImplementedError

    # -- public surface

    @property
    def ticks(self) -> int:
        return self._ticks

    def request(self, candidate) -> None:
        """Schedule a candidate for certification ahead of the autonomous feed."""
        if self._key(candidate) not in self._keys:
            self._queue.append(candidate)

    def run_to(self, budget: int) -> None:
        while self._ticks < budget:
            self._ticks += 1
            self._step(self._ticks)

    def run_for(self, ticks: int) -> None:
        self.run_to(self._ticks + ticks)

    def emitted(self, budget: int | None = None) -> list:
        """Items emitted within the given absolute budget (advances the oracle)."""
        if budget is not None:
            self.run_to(budget)
            return [item for t, item in self._emitted if t <= budget]
        return [item for _, item in self._emitted]

    def emitted_keys(self) -> set:
        return set(self._keys)

    def trace_lines(self) -> list[str]:
        return [f"{t}\t{self.kind}\t{self._render(item)}" for t, item in self._emitted]

    # -- internals

    def _next_candidate(self, t: int) -> tuple[object, int] | None:
        if self._retries and self._retries[0][0] <= t:
            _, _, attempts, cand = heapq.heappop(self._retries)
            return cand, attempts
        if self._queue:
            return self._queue.popleft(), 0
        if not self._auto_done:
            try:
                return next(self._auto), 0
            except StopIteration:
                self._auto_done = True
        if self._retries:
            _, _, attempts, cand = heapq.heappop(self._retries)
            return cand, attempts
        return None

    def _step(self, t: int) -> None:
        nxt = self._next_candidate(t)
        if nxt is None:
            return
        cand, attempts = nxt
        if cand is None:
            return  # a no-op tick from an autonomous feed waiting on upstream
        if isinstance(cand, PreCertified):
            key = self._key(cand.item)
            if key not in self._keys:
                self._keys.add(key)
                self._emitted.append((t, cand.item))
            return
        key = self._key(cand)
        if key in self._keys:
            return
        effort = self._effort_for(cand) << min(attempts, 20)
        verdict = self._certify(cand, effort)
        if verdict:
            self._keys.add(key)
            self._emitted.append((t, cand))
        elif verdict is not None and attempts < 64:
            self._seq += 1
            due = t + (4 << min(attempts, 16))
            heapq.heappush(self._retries, (due, self._seq, attempts + 1, cand))


class SemiOracle(_CertifyingEnumerator):
    """Enumerates ball unions certified to contain the target compact set."""

    kind = "semi"

    def __init__(self, certifier, autonomous=None, name="", space: EuclideanSpace | None = None, effort0: int = 512):
        super().__init__(certifier, autonomous, name, effort0)
        self.space = space

    def _key(self, os: OpenSet):
        return os.normalized()

    def _render(self, os: OpenSet) -> str:
        if self.space is None:
            return f"[{len(os.balls)} balls]"
        return "[" + ",".join(str(b.code(self.space)) for b in sorted(os.balls, key=Ball.key)) + "]"

    def covers_test(self, candidate: OpenSet, budget: int) -> bool:
        """Semi-decision of 'the target is covered by this union'.

        Runs a dedicated certification ladder on the candidate (query
        steering: reordering a computably enumerable stream changes nothing
        about the set enumerated in the limit).  Each attempt consumes one
        tick; success emits the candidate at the current tick.
        """
        key = self._key(candidate)
        if key in self._keys:
            return True
        spent = 0
        attempts = 0
        while spent < budget and attempts <= 24:
            self._ticks += 1
            spent += 1
            effort = self._effort_for(candidate) << min(attempts, 20)
            verdict = self._certify(candidate, effort)
            if verdict:
                self._keys.add(key)
                self._emitted.append((self._ticks, candidate))
                return True
            if verdict is None:
                return False
            attempts += 1
        return False


class _BallEnumerator(_CertifyingEnumerator):
    def __init__(self, certifier, autonomous=None, name="", space: EuclideanSpace | None = None, effort0: int = 512):
        super().__init__(certifier, autonomous, name, effort0)
        self.space = space

    def _key(self, b: Ball):
        return ball_ikey(b)

    def _render(self, b: Ball) -> str:
        return str(b.code(self.space)) if self.space is not None else repr(b.key())


class CoCeOracle(_BallEnumerator):
    """Enumerates balls certified to lie in the complement of the set."""

    kind = "coce"


class CeOracle(_BallEnumerator):
    """Enumerates balls certified to intersect the set."""

    kind = "ce"

    def meets_test(self, ball: Ball, budget: int) -> bool:
        """Dedicated certification ladder for one candidate meeting-ball."""
        key = self._key(ball)
        if key in self._keys:
            return True
        spent = 0
        attempts = 0
        while spent < budget and attempts <= 24:
            self._ticks += 1
            spent += 1
            effort = self._effort_for(ball) << min(attempts, 20)
            verdict = self._certify(ball, effort)
            if verdict:
                self._keys.add(key)
                self._emitted.append((self._ticks, ball))
                return True
            if verdict is None:
                return False
            attempts += 1
        return False


# --- finite approximation families ------------------------------------------


class Approx:
    """Precision-indexed family of finite point sets: rho(K, f(k)) < 2^-k."""

    def __init__(self, fn: Callable[[int], FinSet], name: str = ""):
        self._fn = fn
        self.name = name
        self._cache: dict[int, FinSet] = {}

    def finset(self, k: int) -> FinSet:
        if k not in self._cache:
            self._cache[k] = self._fn(k)
        return self._cache[k]

    def points(self, k: int) -> tuple[Point, ...]:
        return self.finset(k).distinct()


@dataclass
class UpToApprox:
    """Witness that a designated subset A is computable up to a target S.

    ``finset(k)`` satisfies A prec_{2^-k} Lambda_k and Lambda_k prec_{2^-k} S;
    both bounds live at the same index k (searches run one level deeper and
    shift down before storage).
    """

    fn: Callable[[int], FinSet]
    subset_name: str
    target_name: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self._cache: dict[int, FinSet] = {}

    def finset(self, k: int) -> FinSet:
        if k not in self._cache:
            self._cache[k] = self.fn(k)
        return self._cache[k]


# --- conversions -------------------------------------------------------------


def semi_to_coce(semi: SemiOracle, space: EuclideanSpace, name: str = "") -> CoCeOracle:
    """Complement enumeration from cover enumeration.

    A candidate ball is certified once some emitted cover has every ball
    formally disjoint from it; such a ball cannot meet the covered set.
    Candidates are all ball codes in order; failed ones retry with more
    effort as further covers appear.
    """

    def certifier(ball: Ball, effort: int) -> bool:
        semi.run_for(1)
        steps = 0
        for cover in semi.emitted():
            steps += len(cover.balls)
            if steps > effort:
                return False
            if all(formally_disjoint_balls(ball, b) for b in cover.balls):
                return True
        return False

    def autonomous() -> Iterator[Ball]:
        l = 0
        while True:
            yield Ball.from_code(l, space)
            l += 1

    return CoCeOracle(certifier, autonomous, name=name or f"coce({semi.name})", space=space)


def _formal_cover_holds(points: Sequence[Point], balls: Sequence[Ball], margin: Fraction) -> bool:
    """Every point formally inside some ball at the given margin (exact).

    Bucket guidance keeps this near-linear; a guided miss falls back to the
    full ball list before failing, so the answer stays exact.
    """
    if len(points) * len(balls) > 4096:
        # the ring search is complete here: a ball formally containing p has
        # d(p, centre) < radius < 2 * class cell, so its centre sits within
        # two cells of p in its radius class
        index = BallIndex(balls)
        for p in points:
            if not any(formally_contained((p, margin), b) for b in index.near(p)):
                return False
        return True
    for p in points:
        if not any(formally_contained((p, margin), b) for b in balls):
            return False
    return True


def coce_to_semi(
    coce: CoCeOracle,
    K: Approx,
    space: EuclideanSpace,
    name: str = "",
    k_cap: int = 10,
) -> SemiOracle:
    """Cover enumeration for S from its complement enumeration plus a compact
    superset K given as an approximation family.

    A union J is certified once K is formally covered by J together with
    finitely many complement balls: then S, which avoids every complement
    ball, satisfies S subset J.
    """

    def certifier(os: OpenSet, effort: int) -> bool:
        steps = 0
        prev = 1
        dim = 1
        for k in range(0, k_cap + 1):
            # guard before materialising the next grid level
            if steps + prev * (2**dim) > effort and k > 0:
                return False
            coce.run_for(1)
            pts = K.points(k)
            dim = len(pts[0])
            prev = len(pts)
            pool = list(os.balls) + list(coce.emitted())
            steps += len(pts)
            if steps > effort and k > 0:
                return False
            if _formal_cover_holds(pts, pool, Fraction(1, 2**k)):
                return True
        return False

    def autonomous() -> Iterator[OpenSet]:
        k = 0
        for stage in range(1, k_cap + 5):
            coce.run_for(stage * 8)
            excluded = list(coce.emitted())
            k = min(stage, k_cap)
            pts = K.points(k)
            if len(pts) > 40000:
                return
            index = BallIndex(excluded) if len(excluded) > 16 else None
            margin = Fraction(1, 2**k)
            kept = []
            for p in pts:
                pool = index.near(p) if index is not None else excluded
                if not any(formally_contained((p, margin), b) for b in pool):
                    kept.append(p)
            if kept:
                r = Fraction(4, 2**k)
                yield OpenSet(tuple(Ball(p, r) for p in kept))
            else:
                # everything excluded: the set is empty as far as the
                # enumeration can tell, so any candidate is certifiable
                yield OpenSet((Ball(K.points(0)[0], Fraction(1)),))

    return SemiOracle(certifier, autonomous, name=name or f"semi({coce.name})", space=space)


def approx_to_semi(K: Approx, space: EuclideanSpace, name: str = "", k_cap: int = 14) -> SemiOracle:
    """Cover enumeration from an approximation family.

    J is certified as soon as, for some k, every point of the k-th
    approximation sits formally inside some ball of J with margin 2^-k; this
    implies K subset J.
    """

    def certifier(os: OpenSet, effort: int) -> bool:
        steps = 0
        for k in range(0, k_cap + 1):
            pts = K.points(k)
            steps += len(pts)
            if steps > effort and k > 0:
                return False
            if _formal_cover_holds(pts, os.balls, Fraction(1, 2**k)):
                return True
        return False

    def autonomous() -> Iterator[OpenSet]:
        for m in range(0, k_cap - 1):
            r = Fraction(2, 2**m)
            yield OpenSet(tuple(Ball(p, r) for p in K.points(m)))

    return SemiOracle(certifier, autonomous, name=name or f"semi({K.name})", space=space)


def approx_to_ce(K: Approx, space: EuclideanSpace, name: str = "", k_cap: int = 14) -> CeOracle:
    """Meeting-ball enumeration from an approximation family.

    A ball (x, r) is certified once some approximation point alpha at level k
    has d(alpha, x) + 2^-k < r: every point of K within 2^-k of alpha then
    witnesses K meeting the ball.
    """

    indexes: dict[int, BucketIndex] = {}

    def certifier(ball: Ball, effort: int) -> bool:
        # a witness point within radius - 2^-k of the centre proves contact
        for k in range(0, k_cap + 1):
            reach = ball.radius - Fraction(1, 2**k)
            if reach <= 0:
                continue
            if k not in indexes:
                pts = K.points(k)
                indexes[k] = BucketIndex(pts, max(Fraction(1, 2**k), Fraction(1, 2**k_cap)))
            if indexes[k].witness_within(ball.center, reach, strict=True) is not None:
                return True
        return False

    def autonomous() -> Iterator[Ball]:
        for m in range(0, k_cap - 1):
            r = Fraction(1, 2**m)
            for p in K.points(m + 1):
                yield Ball(p, r)

    return CeOracle(certifier, autonomous, name=name or f"ce({K.name})", space=space)


def semi_ce_to_approx(
    semi: SemiOracle,
    ce: CeOracle,
    space: EuclideanSpace,
    name: str = "",
    budget: int = DEFAULT_BUDGET,
) -> Approx:
    """Approximation family from the cover and meeting-ball enumerations.

    For each k, dovetails both oracles until some emitted cover has every
    ball of radius < 2^-k and every ball certified to meet the set; the ball
    centres are then within 2^-k Hausdorff distance of the set.
    """

    def fn(k: int) -> FinSet:
        bound = Fraction(1, 2**k)
        scanned = 0
        for t in range(1, budget + 1):
            semi.run_for(1)
            ce.run_for(1)
            covers = semi.emitted()
            while scanned < len(covers):
                cover = covers[scanned]
                scanned += 1
                if all(b.radius < bound for b in cover.balls):
                    for b in cover.balls:
                        ce.request(b)
                    ce.run_for(4 * len(cover.balls))
                    keys = ce.emitted_keys()
                    if all(ball_ikey(b) in keys for b in cover.balls):
                        return FinSet(tuple(b.center for b in cover.balls))
        raise BudgetExhausted(
            f"no fully certified cover of radius < 2^-{k} within {budget} ticks"
        )

    return Approx(fn, name=name or f"approx({semi.name},{ce.name})")


def subtract(semi: SemiOracle, m: OpenSet, budget_per_test: int = 2048, name: str = "") -> SemiOracle:
    """Cover enumeration for S minus a fixed ball union J_m.

    S-minus-J_m is covered by J exactly when S is covered by J union J_m, so
    certification delegates to the original oracle on the union.  The
    autonomous feed replays the original emissions, also pruned of balls
    formally inside a single ball of m (dropping those is sound since the
    dropped region is inside J_m).
    """

    def certifier(os: OpenSet, effort: int) -> bool:
        return semi.covers_test(os.union(m), min(effort, budget_per_test))

    def autonomous() -> Iterator[OpenSet | None]:
        seen = 0
        while True:
            semi.run_for(1)
            covers = semi.emitted()
            if seen == len(covers):
                yield None  # no new upstream cover this tick
                continue
            while seen < len(covers):
                c = covers[seen]
                seen += 1
                # S subset J_c gives S\J_m subset J_c outright, and dropping
                # balls formally inside a single ball of m keeps that sound
                yield PreCertified(c)
                if len(c.balls) <= 1024:
                    kept = tuple(
                        b
                        for b in c.balls
                        if not any(
                            formally_contained((b.center, b.radius), big) for big in m.balls
                        )
                    )
                    if kept and len(kept) < len(c.balls):
                        yield PreCertified(OpenSet(kept))

    return SemiOracle(certifier, autonomous, name=name or f"{semi.name}\\m", space=semi.space)


def upto_union(u: UpToApprox, v: UpToApprox) -> UpToApprox:
    """Pointwise union of two computable-up-to witnesses with the same target."""
    if u.target_name != v.target_name:
        raise ValueError(f"target mismatch: {u.target_name!r} vs {v.target_name!r}")
    return UpToApprox(
        fn=lambda k: u.finset(k).union(v.finset(k)),
        subset_name=f"{u.subset_name}|{v.subset_name}",
        target_name=u.target_name,
    )


def glue(pieces: Sequence[UpToApprox], covering_note: str = "") -> Approx:
    """Approximation family for S from subsets covering S, each computable up
    to S.  The covering obligation is instance metadata taken on faith here;
    violations surface in acceptance checks, not at runtime.
    """
    if not pieces:
        raise ValueError("glue needs at least one piece")
    targets = {p.target_name for p in pieces}
    if len(targets) != 1:
        raise ValueError(f"pieces disagree on the target: {sorted(targets)}")

    def fn(k: int) -> FinSet:
        acc = pieces[0].finset(k)
        for p in pieces[1:]:
            acc = acc.union(p.finset(k))
        return acc

    out = Approx(fn, name=f"glue({targets.pop()})")
    out.covering_note = covering_note  # type: ignore[attr-defined]
    return out


def box_grid_approx(box: Sequence[tuple[Fraction, Fraction]], name: str = "box") -> Approx:
    """Canonical approximation family of an axis box by dyadic grids."""
    box = [(Fraction(lo), Fraction(hi)) for lo, hi in box]
    n = len(box)
    if any(hi < lo for lo, hi in box):
        raise ValueError("empty box")

    def fn(k: int) -> FinSet:
        # spacing s with s*sqrt(n)/2 < 2^-k: 2^-k suffices for n <= 2,
        # one level finer for n in (3, 4)
        extra = 0 if n <= 2 else 1
        s = Fraction(1, 2 ** (k + extra))
        axes = []
        for lo, hi in box:
            count = int((hi - lo) / s) + 1
            pts = [lo + i * s for i in range(count)] + [hi]
            axes.append(sorted(set(pts)))
        pts: list[Point] = [()]
        for ax in axes:
            pts = [p + (c,) for p in pts for c in ax]
        return FinSet(tuple(pts))

    return Approx(fn, name=name)
