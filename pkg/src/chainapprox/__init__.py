"""Certified finite-point-set approximation of compact subsets of R^n.

The pipeline: encode geometry as natural numbers (``codes``), decide
predicates exactly over rationals (``space``), represent set knowledge as
deterministic budgeted oracles (``sets``), certify chain covers (``chains``),
search for anchored chains and glue local approximations (``reconstruction``),
and derive oracles for level sets by interval arithmetic (``levelset``).
Built-in instances with truth oracles live in ``instances``; ``cli`` is the
batch front end.
"""

from .codes import pair, unpair, rat_pos, list_encode, list_decode
from .space import (
    Ball,
    OpenSet,
    FinSet,
    EuclideanSpace,
    sq_dist,
    mem_ball,
    fdiam_bounds,
    formally_disjoint_balls,
    formally_disjoint_open,
    formally_contained,
    hausdorff_le,
    hausdorff_lt,
    prec_lt,
)

__version__ = "0.1.0"
