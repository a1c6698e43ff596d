"""Level sets through interval arithmetic: f^{-1}{y} as a complement oracle.

Expressions are trees over variables, rational constants, +, -, *, square,
sin and exp.  ``ieval`` returns a rational interval certainly containing the
image of a box; sin and exp are enclosed by Taylor polynomials with explicit
rational remainder bounds and all rounding is outward, so exclusion verdicts
("the target value cannot occur on this box") are proofs.

The complement oracle subdivides the bounding box breadth-first, marks cells
whose enclosure misses the target in some component, and emits a ball around
a cell once the cell and its full neighbourhood are excluded -- the emitted
ball then provably avoids the level set.  An expanding ring family covers
the complement of the bounding box (sound because instances are required to
keep the level set in the box interior).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

from .space import Ball, EuclideanSpace, Point
from .sets import Approx, CoCeOracle, SemiOracle, box_grid_approx, coce_to_semi

__all__ = [
    "Expr",
    "const",
    "var",
    "parse_expr",
    "IntervalBox",
    "ieval",
    "LevelSetInstance",
    "parse_instance_text",
    "coce_from_levelset",
    "semi_from_levelset",
    "gradient_exprs",
    "regularity_warnings",
]

Interval = tuple[Fraction, Fraction]


# --- expressions --------------------------------------------------------------


@dataclass(frozen=True)
class Expr:
    op: str
    args: tuple["Expr", ...] = ()
    value: Fraction | int | None = None

    def __repr__(self) -> str:
        if self.op == "const":
            return str(self.value)
        if self.op == "var":
            return f"x{self.value + 1}"  # type: ignore[operator]
        inner = " ".join(repr(a) for a in self.args)
        return f"({self.op} {inner})"


def const(c) -> Expr:
    return Expr("const", (), Fraction(c))


def var(i: int) -> Expr:
    """Variable x_{i+1} (zero-based index)."""
    return Expr("var", (), i)


def add(a: Expr, b: Expr) -> Expr:
    return Expr("add", (a, b))


def sub(a: Expr, b: Expr) -> Expr:
    return Expr("sub", (a, b))


def mul(a: Expr, b: Expr) -> Expr:
    return Expr("mul", (a, b))


def neg(a: Expr) -> Expr:
    return Expr("neg", (a,))


def square(a: Expr) -> Expr:
    return Expr("square", (a,))


def sin_(a: Expr) -> Expr:
    return Expr("sin", (a,))


def exp_(a: Expr) -> Expr:
    return Expr("exp", (a,))


def _tokenize(s: str) -> list[str]:
    return s.replace("(", " ( ").replace(")", " ) ").split()


def parse_expr(text: str, dim: int) -> Expr:
    """Parse an s-expression over x1..x<dim>, rationals and the fixed ops."""
    tokens = _tokenize(text)

    def parse(pos: int) -> tuple[Expr, int]:
        tok = tokens[pos]
        if tok == "(":
            op = tokens[pos + 1]
            args: list[Expr] = []
            pos += 2
            while tokens[pos] != ")":
                e, pos = parse(pos)
                args.append(e)
            pos += 1
            if op == "+":
                out = args[0]
                for a in args[1:]:
                    out = add(out, a)
                return out, pos
            if op == "*":
                out = args[0]
                for a in args[1:]:
                    out = mul(out, a)
                return out, pos
            if op == "-":
                if len(args) == 1:
                    return neg(args[0]), pos
                out = args[0]
                for a in args[1:]:
                    out = sub(out, a)
                return out, pos
            if op == "square" and len(args) == 1:
                return square(args[0]), pos
            if op == "sin" and len(args) == 1:
                return sin_(args[0]), pos
            if op == "cos" and len(args) == 1:
                return Expr("cos", (args[0],)), pos
            if op == "exp" and len(args) == 1:
                return exp_(args[0]), pos
            raise ValueError(f"unknown operator or arity: {op}/{len(args)}")
        if tok == ")":
            raise ValueError("unbalanced )")
        if tok.startswith("x") and tok[1:].isdigit():
            i = int(tok[1:]) - 1
            if not 0 <= i < dim:
                raise ValueError(f"variable {tok} outside dim {dim}")
            return var(i), pos + 1
        return const(Fraction(tok)), pos + 1

    e, pos = parse(0)
    if pos != len(tokens):
        raise ValueError("trailing tokens in expression")
    return e


# --- interval evaluation -------------------------------------------------------


def _round_out(iv: Interval, prec: int) -> Interval:
    """Outward rounding of both endpoints to denominator 2^prec."""
    lo, hi = iv
    scale = 1 << prec
    lo2 = Fraction(lo.numerator * scale // lo.denominator, scale)
    hi_num = -((-hi.numerator * scale) // hi.denominator)
    return lo2, Fraction(hi_num, scale)


def _factorial(n: int) -> int:
    out = 1
    for i in range(2, n + 1):
        out *= i
    return out


def _exp_point_bounds(x: Fraction, k: int) -> Interval:
    """Enclosure of exp(x) of width < 2^-k at a rational point.

    Taylor at 0 with a geometric tail bound: once n >= 2x + 2 the term ratio
    is below 1/2, so the tail after the degree-n term is < 2*term*x/(n+1).
    Negative arguments go through the reciprocal (which shrinks the width).
    """
    target = Fraction(1, 2 ** (k + 1))
    if x < 0:
        lo, hi = _exp_point_bounds(-x, k)
        return 1 / hi, 1 / lo
    term = Fraction(1)
    total = Fraction(1)
    n = 0
    while True:
        n += 1
        term = term * x / n
        total += term
        if n >= 2 * x + 2:
            tail = 2 * term * x / (n + 1)
            if tail < target:
                return total, total + tail


def _iexp(iv: Interval, k: int) -> Interval:
    lo, hi = iv
    llo, _ = _exp_point_bounds(lo, k + 1)
    _, hhi = _exp_point_bounds(hi, k + 1)
    return llo, hhi


def _sin_degree(bound: Fraction, target: Fraction) -> int:
    """Number of series terms N with bound^(2N+1)/(2N+1)! < target."""
    n = 1
    while bound ** (2 * n + 1) / _factorial(2 * n + 1) >= target and n < 60:
        n += 1
    return n


def _isin(iv: Interval, k: int) -> Interval:
    """Sine enclosure: interval Horner on the odd Taylor polynomial plus the
    Lagrange remainder |x|^(2N+1)/(2N+1)!, clamped to [-1, 1]."""
    lo, hi = iv
    bound = max(abs(lo), abs(hi))
    target = Fraction(1, 2 ** (k + 2))
    n = _sin_degree(bound, target)
    t = _isquare(iv)
    acc: Interval = (Fraction(0), Fraction(0))
    for i in range(n - 1, 0, -1):
        coeff = Fraction((-1) ** i, _factorial(2 * i + 1))
        acc = _imul(_iadd((coeff, coeff), acc), t)
    acc = _iadd(acc, (Fraction(1), Fraction(1)))
    out = _imul(iv, acc)
    rem = bound ** (2 * n + 1) / _factorial(2 * n + 1)
    lo2, hi2 = out[0] - rem, out[1] + rem
    return max(lo2, Fraction(-1)), min(hi2, Fraction(1))


def _icos(iv: Interval, k: int) -> Interval:
    """Cosine enclosure: even Taylor polynomial plus Lagrange remainder."""
    lo, hi = iv
    bound = max(abs(lo), abs(hi))
    target = Fraction(1, 2 ** (k + 2))
    n = 1
    while bound ** (2 * n) / _factorial(2 * n) >= target and n < 60:
        n += 1
    t = _isquare(iv)
    acc: Interval = (Fraction(0), Fraction(0))
    for i in range(n - 1, 0, -1):
        coeff = Fraction((-1) ** i, _factorial(2 * i))
        acc = _imul(_iadd((coeff, coeff), acc), t)
    acc = _iadd(acc, (Fraction(1), Fraction(1)))
    rem = bound ** (2 * n) / _factorial(2 * n)
    lo2, hi2 = acc[0] - rem, acc[1] + rem
    return max(lo2, Fraction(-1)), min(hi2, Fraction(1))


def _iadd(a: Interval, b: Interval) -> Interval:
    return a[0] + b[0], a[1] + b[1]


def _isub(a: Interval, b: Interval) -> Interval:
    return a[0] - b[1], a[1] - b[0]


def _imul(a: Interval, b: Interval) -> Interval:
    cands = (a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])
    return min(cands), max(cands)


def _isquare(a: Interval) -> Interval:
    lo, hi = a
    if lo >= 0:
        return lo * lo, hi * hi
    if hi <= 0:
        return hi * hi, lo * lo
    return Fraction(0), max(lo * lo, hi * hi)


@dataclass(frozen=True)
class IntervalBox:
    """Axis box of closed rational intervals (the evaluation domain)."""

    intervals: tuple[Interval, ...]

    def __post_init__(self):
        ivs = tuple((Fraction(lo), Fraction(hi)) for lo, hi in self.intervals)
        if any(hi < lo for lo, hi in ivs):
            raise ValueError("empty interval box")
        object.__setattr__(self, "intervals", ivs)

    @property
    def dim(self) -> int:
        return len(self.intervals)

    def widths(self) -> tuple[Fraction, ...]:
        return tuple(hi - lo for lo, hi in self.intervals)

    def center(self) -> Point:
        return tuple((lo + hi) / 2 for lo, hi in self.intervals)

    def contains(self, p: Point) -> bool:
        return all(lo <= c <= hi for (lo, hi), c in zip(self.intervals, p))


def ieval(e: Expr, box: IntervalBox, k: int = 12) -> Interval:
    """Interval certainly containing e(box); outward rounding throughout."""

    prec = k + 24

    def rec(node: Expr) -> Interval:
        if node.op == "const":
            v = node.value
            return (v, v)  # type: ignore[return-value]
        if node.op == "var":
            return box.intervals[node.value]  # type: ignore[index]
        if node.op == "add":
            return _round_out(_iadd(rec(node.args[0]), rec(node.args[1])), prec)
        if node.op == "sub":
            return _round_out(_isub(rec(node.args[0]), rec(node.args[1])), prec)
        if node.op == "mul":
            return _round_out(_imul(rec(node.args[0]), rec(node.args[1])), prec)
        if node.op == "neg":
            lo, hi = rec(node.args[0])
            return -hi, -lo
        if node.op == "square":
            return _round_out(_isquare(rec(node.args[0])), prec)
        if node.op == "sin":
            return _round_out(_isin(rec(node.args[0]), k), prec)
        if node.op == "cos":
            return _round_out(_icos(rec(node.args[0]), k), prec)
        if node.op == "exp":
            return _round_out(_iexp(rec(node.args[0]), k), prec)
        raise ValueError(f"unknown op {node.op}")

    return rec(e)


def gradient_exprs(e: Expr, dim: int) -> list[Expr]:
    """Symbolic partial derivatives (for the non-certifying diagnostics)."""

    def d(node: Expr, i: int) -> Expr:
        if node.op == "const":
            return const(0)
        if node.op == "var":
            return const(1 if node.value == i else 0)
        if node.op == "add":
            return add(d(node.args[0], i), d(node.args[1], i))
        if node.op == "sub":
            return sub(d(node.args[0], i), d(node.args[1], i))
        if node.op == "neg":
            return neg(d(node.args[0], i))
        if node.op == "mul":
            a, b = node.args
            return add(mul(d(a, i), b), mul(a, d(b, i)))
        if node.op == "square":
            (a,) = node.args
            return mul(mul(const(2), a), d(a, i))
        if node.op == "sin":
            (a,) = node.args
            return mul(Expr("cos", (a,)), d(a, i))
        if node.op == "cos":
            (a,) = node.args
            return neg(mul(Expr("sin", (a,)), d(a, i)))
        if node.op == "exp":
            (a,) = node.args
            return mul(Expr("exp", (a,)), d(a, i))
        raise ValueError(node.op)

    return [d(e, i) for i in range(dim)]


# --- instances and the oracles -------------------------------------------------


@dataclass
class LevelSetInstance:
    """Component expressions, target value and bounding box for f^{-1}{y}.

    The regular-value status of the target is supplier metadata; the oracles
    are sound regardless, completeness is what regularity buys.
    """

    dim: int
    exprs: list[Expr]
    target: list[Fraction]
    box: list[tuple[Fraction, Fraction]]
    name: str = "levelset"
    atlas: str | None = None
    regular_value_claimed: bool = True

    def __post_init__(self):
        if len(self.exprs) != len(self.target):
            raise ValueError("one target component per expression")
        if len(self.box) != self.dim:
            raise ValueError("box arity mismatch")


def parse_instance_text(text: str) -> LevelSetInstance:
    """Parse the line-oriented instance format.

    Keywords: ``dim``, ``expr`` (repeatable, s-expression), ``target``
    (one rational per expression), ``box`` (2*dim rationals), optional
    ``atlas`` and ``name``.  ``#`` starts a comment.
    """
    dim = None
    exprs_raw: list[str] = []
    target: list[Fraction] | None = None
    box_vals: list[Fraction] | None = None
    atlas = None
    name = "levelset"
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, rest = line.partition(" ")
        if key == "dim":
            dim = int(rest)
        elif key == "expr":
            exprs_raw.append(rest)
        elif key == "target":
            target = [Fraction(tok) for tok in rest.split()]
        elif key == "box":
            box_vals = [Fraction(tok) for tok in rest.split()]
        elif key == "atlas":
            atlas = rest.strip()
        elif key == "name":
            name = rest.strip()
        else:
            raise ValueError(f"unknown keyword {key!r}")
    if dim is None or not exprs_raw or target is None or box_vals is None:
        raise ValueError("instance needs dim, expr(s), target and box")
    if len(box_vals) != 2 * dim:
        raise ValueError("box needs 2*dim rationals")
    box = [(box_vals[2 * i], box_vals[2 * i + 1]) for i in range(dim)]
    exprs = [parse_expr(s, dim) for s in exprs_raw]
    return LevelSetInstance(dim, exprs, target, box, name=name, atlas=atlas)


class _SubdivisionEngine:
    """Breadth-first exclusion of dyadic cells of the bounding box.

    One step evaluates one cell.  A cell is excluded when some component
    enclosure misses its target.  When a cell and its full 3^n neighbourhood
    (at the same level) are excluded, a ball around the cell is released;
    the ball fits inside the neighbourhood, hence inside the complement.
    Every eighth step also releases the next ball of an expanding ring
    family covering the complement of the bounding box.
    """

    def __init__(self, inst: LevelSetInstance, max_level: int = 24):
        self.inst = inst
        self.max_level = max_level
        self.active: deque[tuple[int, tuple[int, ...]]] = deque()
        self.active.append((0, (0,) * inst.dim))
        self.excluded: set[tuple[int, tuple[int, ...]]] = set()
        self.emitted_cells: set[tuple[int, tuple[int, ...]]] = set()
        self._ring_iter = self._rings()
        self._steps = 0

    # cell geometry
    def cell_box(self, level: int, idx: tuple[int, ...]) -> IntervalBox:
        ivs = []
        for (lo, hi), i in zip(self.inst.box, idx):
            w = (hi - lo) / (1 << level)
            ivs.append((lo + i * w, lo + (i + 1) * w))
        return IntervalBox(tuple(ivs))

    def _is_excluded(self, level: int, idx: tuple[int, ...]) -> bool:
        if any(i < 0 or i >= (1 << level) for i in idx):
            return True  # outside the box; complement by the ring family
        lv, ix = level, idx
        while lv >= 0:
            if (lv, ix) in self.excluded:
                return True
            ix = tuple(i // 2 for i in ix)
            lv -= 1
        return False

    def _exclusion_test(self, box: IntervalBox, level: int) -> bool:
        for e, y in zip(self.inst.exprs, self.inst.target):
            lo, hi = ieval(e, box, k=level + 4)
            if y < lo or y > hi:
                return True
        return False

    def _neighbourhood_done(self, level: int, idx: tuple[int, ...]) -> bool:
        for off in _offsets(self.inst.dim, reach=2):
            if not self._is_excluded(level, tuple(i + o for i, o in zip(idx, off))):
                return False
        return True

    def _ball_for_cell(self, level: int, idx: tuple[int, ...]) -> Ball | None:
        """Ball containing the cell and contained in its 5^n neighbourhood.

        Containment in the neighbourhood is what soundness rests on, so it is
        verified exactly; emission is skipped when the box is too anisotropic
        for both constraints to hold.
        """
        box = self.cell_box(level, idx)
        c = box.center()
        widths = [hi - lo for lo, hi in box.intervals]
        r = Fraction(5, 4) * max(widths)
        half_diag_sq = sum((w / 2) * (w / 2) for w in widths)
        if not (half_diag_sq < r * r and r <= 2 * min(widths)):
            return None
        return Ball(c, r)

    def _rings(self) -> Iterator[Ball]:
        """Expanding dyadic ball family covering the complement of the box.

        At stage j the grid has spacing W/2^j and reach j*W; a ball of radius
        9/8 of the spacing is released only if it provably avoids the box
        (exact squared gap test), so each ball misses the level set outright.
        """
        lo = [l for l, _ in self.inst.box]
        hi = [h for _, h in self.inst.box]
        n = self.inst.dim
        W = max(h - l for l, h in zip(lo, hi))
        for stage in range(1, 10**9):
            w = W / (1 << stage)
            r = w * Fraction(9, 8)
            reach = W * stage
            axes: list[list[Fraction]] = []
            for c in range(n):
                axis = []
                x = lo[c] - reach
                while x <= hi[c] + reach:
                    axis.append(x)
                    x += w
                axes.append(axis)
            pts: list[tuple[Fraction, ...]] = [()]
            for axis in axes:
                pts = [p + (x,) for p in pts for x in axis]
            for p in pts:
                gap_sq = Fraction(0)
                for c in range(n):
                    g = max(lo[c] - p[c], p[c] - hi[c], Fraction(0))
                    gap_sq += g * g
                if gap_sq > r * r:
                    yield Ball(p, r)

    def step(self) -> list[Ball]:
        """Advance one unit of work; return newly released balls."""
        self._steps += 1
        out: list[Ball] = []
        if self._steps % 8 == 0:
            out.append(next(self._ring_iter))
        if not self.active:
            return out
        level, idx = self.active.popleft()
        if self._is_excluded(level, idx):
            return out
        box = self.cell_box(level, idx)
        if self._exclusion_test(box, level):
            self.excluded.add((level, idx))
            for off in _offsets(self.inst.dim, include_zero=True, reach=2):
                cand = tuple(i + o for i, o in zip(idx, off))
                key = (level, cand)
                if key in self.emitted_cells:
                    continue
                if any(i < 0 or i >= (1 << level) for i in cand):
                    continue
                if self._is_excluded(level, cand) and self._neighbourhood_done(level, cand):
                    ball = self._ball_for_cell(level, cand)
                    if ball is not None:
                        self.emitted_cells.add(key)
                        out.append(ball)
        elif level < self.max_level:
            for child in _children(idx):
                self.active.append((level + 1, child))
        return out


def _offsets(n: int, include_zero: bool = True, reach: int = 1):
    outs: list[tuple[int, ...]] = [()]
    span = tuple(range(-reach, reach + 1))
    for _ in range(n):
        outs = [o + (d,) for o in outs for d in span]
    for o in outs:
        if include_zero or any(o):
            yield o


def _children(idx: tuple[int, ...]):
    outs: list[tuple[int, ...]] = [()]
    for i in idx:
        outs = [o + (2 * i + d,) for o in outs for d in (0, 1)]
    return outs


class _LevelSetCoCe(CoCeOracle):
    """Complement oracle driven by the subdivision engine (ignores requests)."""

    def __init__(self, inst: LevelSetInstance, space: EuclideanSpace, max_level: int = 24):
        super().__init__(lambda b, e: True, name=f"coce({inst.name})", space=space)
        self.engine = _SubdivisionEngine(inst, max_level=max_level)

    def _step(self, t: int) -> None:
        for ball in self.engine.step():
            key = self._key(ball)
            if key not in self._keys:
                self._keys.add(key)
                self._emitted.append((t, ball))


def coce_from_levelset(inst: LevelSetInstance, space: EuclideanSpace | None = None) -> CoCeOracle:
    """Complement enumeration of f^{-1}{y} within and around the bounding box."""
    sp = space or EuclideanSpace(inst.dim)
    return _LevelSetCoCe(inst, sp)


def semi_from_levelset(
    inst: LevelSetInstance, space: EuclideanSpace | None = None, k_cap: int = 8
) -> SemiOracle:
    """Cover enumeration: complement oracle plus the box as the compact hull.

    Requires the level set to sit in the interior of the bounding box (the
    supplier's obligation); then box-grid approximations make the formal
    cover test of ``coce_to_semi`` complete.
    """
    sp = space or EuclideanSpace(inst.dim)
    K = box_grid_approx(inst.box, name=f"box({inst.name})")
    return coce_to_semi(coce_from_levelset(inst, sp), K, sp, name=f"semi({inst.name})", k_cap=k_cap)


def regularity_warnings(inst: LevelSetInstance, levels: int = 4) -> list[str]:
    """Sampled gradient-enclosure diagnostics; advisory only, never certifying.

    Scans cells of the bounding box that the exclusion test cannot discard
    and reports any where every component gradient enclosure admits zero in
    all coordinates (sin nodes fall back to a reported skip).
    """
    warnings: list[str] = []
    try:
        grads = [gradient_exprs(e, inst.dim) for e in inst.exprs]
    except ValueError as exc:
        return [f"gradient diagnostics skipped: {exc}"]
    engine = _SubdivisionEngine(inst, max_level=levels)
    cells = [(0, (0,) * inst.dim)]
    for level in range(levels):
        nxt = []
        for lv, idx in cells:
            box = engine.cell_box(lv, idx)
            if engine._exclusion_test(box, lv):
                continue
            nxt.extend((lv + 1, ch) for ch in _children(idx))
        cells = nxt
    cells = [
        (lv, idx)
        for lv, idx in cells
        if not engine._exclusion_test(engine.cell_box(lv, idx), lv)
    ]
    for lv, idx in cells:
        box = engine.cell_box(lv, idx)
        all_flat = True
        for comp in grads:
            for g in comp:
                lo, hi = ieval(g, box, k=lv + 4)
                if lo > 0 or hi < 0:
                    all_flat = False
                    break
            if not all_flat:
                break
        if all_flat:
            warnings.append(
                f"gradient enclosures admit a critical point on cell {idx} at level {lv}"
            )
    return warnings
