"""Natural-number encodings of pairs, positive rationals, finite lists and n-grids.

Every geometric object in this package (rational points, balls, ball unions,
finite point sets, grids of ball unions) is ultimately a natural number read
through the fixed bijections below.  The scheme is normative for the whole
repository: golden tests pin concrete values, and ``docs/encodings.md``
documents it bit-exactly.

All arithmetic is arbitrary-precision.  List and grid codes built by the
pairing fold roughly double in bit length per entry, so codes of long lists
are mathematically well defined but physically huge; :func:`list_encode`
refuses to materialise integers past :data:`FOLD_CAP` entries.  Higher layers
keep long lists structural and only drop down to integers where they fit.
"""

from __future__ import annotations

from fractions import Fraction
from math import isqrt
from typing import Iterable, Sequence

__all__ = [
    "pair",
    "unpair",
    "tau1",
    "tau2",
    "rat_pos",
    "rat_pos_encode",
    "srat_decode",
    "srat_encode",
    "list_encode",
    "list_decode",
    "list_len",
    "list_entry",
    "list_set",
    "nu",
    "grid_side",
    "grid_entry",
    "grid_encode",
    "grid_entries_for_table",
    "CodeTooLarge",
    "FOLD_CAP",
]

#: Longest list whose fold code is materialised as an int (~2**FOLD_CAP bits).
FOLD_CAP = 16


class CodeTooLarge(ValueError):
    """Raised when an integer code would be astronomically large."""


def pair(a: int, b: int) -> int:
    """Cantor pairing, (a, b) -> (a+b)(a+b+1)/2 + b."""
    if a < 0 or b < 0:
        raise ValueError("pair is defined on naturals")
    s = a + b
    return s * (s + 1) // 2 + b


def unpair(i: int) -> tuple[int, int]:
    """Inverse of :func:`pair`."""
    if i < 0:
        raise ValueError("unpair is defined on naturals")
    w = (isqrt(8 * i + 1) - 1) // 2
    b = i - w * (w + 1) // 2
    return w - b, b


def tau1(i: int) -> int:
    return unpair(i)[0]


def tau2(i: int) -> int:
    return unpair(i)[1]


def rat_pos(i: int) -> Fraction:
    """Decode a strictly positive rational: with (a,b)=unpair(i), (a+1)/(b+1)."""
    a, b = unpair(i)
    return Fraction(a + 1, b + 1)


def rat_pos_encode(q: Fraction) -> int:
    """Canonical code of a positive rational (inverse of :func:`rat_pos`)."""
    q = Fraction(q)
    if q <= 0:
        raise ValueError("rat_pos_encode needs q > 0")
    return pair(q.numerator - 1, q.denominator - 1)


def srat_decode(i: int) -> Fraction:
    """Signed rational: pair(pair(a,b),c) -> (-1)**c * a/(b+1)."""
    o, c = unpair(i)
    a, b = unpair(o)
    q = Fraction(a, b + 1)
    return -q if c % 2 == 1 else q


def srat_encode(q: Fraction) -> int:
    """Canonical code of a signed rational (inverse of :func:`srat_decode`)."""
    q = Fraction(q)
    c = 1 if q < 0 else 0
    return pair(pair(abs(q.numerator), q.denominator - 1), c)


# --- finite lists -----------------------------------------------------------
#
# A nonempty list [e0, .., en] is coded as pair(n, fold) where
# fold = e_n for a singleton and pair(e0, pair(e1, ... pair(e_{n-1}, e_n)))
# otherwise.  Decoding is total: every natural denotes some nonempty list.


def list_encode(seq: Sequence[int], cap: int | None = FOLD_CAP) -> int:
    """Code of a nonempty finite sequence of naturals.

    ``cap`` bounds the length for which the integer is actually built; pass
    ``None`` to force materialisation regardless of size.
    """
    if len(seq) == 0:
        raise ValueError("the empty sequence has no code")
    if cap is not None and len(seq) > cap:
        raise CodeTooLarge(
            f"list of length {len(seq)} exceeds the materialisation cap {cap}"
        )
    acc = seq[-1]
    for e in reversed(seq[:-1]):
        acc = pair(e, acc)
    return pair(len(seq) - 1, acc)


def list_decode(j: int) -> list[int]:
    """Entries of the list coded by j (total on naturals)."""
    n, acc = unpair(j)
    out: list[int] = []
    for _ in range(n):
        e, acc = unpair(acc)
        out.append(e)
    out.append(acc)
    return out


def list_len(j: int) -> int:
    """Number of entries, i.e. j-bar + 1."""
    return unpair(j)[0] + 1


def list_entry(j: int, i: int) -> int:
    """Entry (j)_i, with out-of-range access falling back to entry 0."""
    entries = list_decode(j)
    if 0 <= i < len(entries):
        return entries[i]
    return entries[0]


def list_set(j: int) -> set[int]:
    """[j], the set of entries of the list coded by j."""
    return set(list_decode(j))


# --- n-grids ----------------------------------------------------------------
#
# nu is the arity-n injection by iterated pairing (identity for n = 1).  A
# grid code l denotes the function {0..side}^n -> N,
# v |-> entry nu(v) of the list tau1(l), with side = tau2(l).


def nu(v: Sequence[int]) -> int:
    """Injection N^n -> N by right-nested pairing; identity at arity 1."""
    if len(v) == 0:
        raise ValueError("nu needs arity >= 1")
    acc = v[-1]
    for x in reversed(v[:-1]):
        acc = pair(x, acc)
    return acc


def grid_side(l: int) -> int:
    """Side bound of the grid coded by l (indices run over {0..side}^n)."""
    return tau2(l)


def grid_entry(l: int, n: int, v: Sequence[int]) -> int:
    """Entry of grid l at index vector v in {0..grid_side(l)}^n."""
    if len(v) != n:
        raise ValueError(f"index vector has arity {len(v)}, expected {n}")
    side = grid_side(l)
    if any(x < 0 or x > side for x in v):
        raise ValueError(f"index {tuple(v)} outside {{0..{side}}}^{n}")
    return list_entry(tau1(l), nu(v))


def grid_entries_for_table(table: dict[tuple[int, ...], int], side: int) -> list[int]:
    """Flat entry list realising a full table over {0..side}^n via nu.

    Positions not hit by any index vector are filled with 0 (they are never
    read back through :func:`grid_entry`).
    """
    if not table:
        raise ValueError("empty table")
    positions = {nu(v): e for v, e in table.items()}
    length = max(positions) + 1
    return [positions.get(i, 0) for i in range(length)]


def grid_encode(
    table: dict[tuple[int, ...], int], side: int, cap: int | None = FOLD_CAP
) -> int:
    """Integer code of a full table over {0..side}^n; subject to ``cap``."""
    entries = grid_entries_for_table(table, side)
    return pair(list_encode(entries, cap=cap), side)


def iter_cube(side: int, n: int) -> Iterable[tuple[int, ...]]:
    """All index vectors of {0..side}^n in lexicographic order."""
    if n == 1:
        for i in range(side + 1):
            yield (i,)
        return
    for head in range(side + 1):
        for rest in iter_cube(side, n - 1):
            yield (head,) + rest
