"""One-dimensional slice machinery run along a geodesic.

Two randomised procedures operate on a level set S of the geodesic parameter
line, queried only through a membership oracle, with the current point pinned
at parameter 0 (callers shift their sets accordingly):

* :func:`stepping_out` grows a random interval around 0 in steps of width w,
  with the total number of expansions capped by m (m may be infinite when S
  is bounded).
* :func:`reeled_shrinkage` draws a point of S inside a given interval by
  wrapping the interval onto a circle and shrinking a circular arc around
  the image of the current point after each rejected draw.

Both consume a ``numpy.random.Generator``; endpoint draws of the underlying
uniforms are resampled so that probability-zero boundary cases cannot occur.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence, Tuple

import numpy as np

from .rng import open_uniform

TWO_PI = 2.0 * math.pi

Oracle = Callable[[float], bool]
"""Membership test of the current superlevel set; must hold at 0.0."""


class ExpansionCapError(RuntimeError):
    """Interval expansion hit the safety cap with m unbounded.

    This signals an unbounded level set along the geodesic: infinite m is
    only admissible when every geodesic meets the support in a bounded set.
    """


class ShrinkageCapError(RuntimeError):
    """Shrinkage failed to land in the level set within the iteration cap."""


@dataclass(frozen=True)
class StepOutParams:
    """Interval width w > 0 and expansion budget m (integer >= 1 or math.inf).

    ``max_expansions`` guards the m = inf case only.
    """

    w: float
    m: float
    max_expansions: int = 1_000_000

    def __post_init__(self):
        if not self.w > 0:
            raise ValueError(f"w must be positive, got {self.w}")
        if math.isinf(self.m):
            return
        if self.m < 1 or int(self.m) != self.m:
            raise ValueError(f"m must be a positive integer or inf, got {self.m}")

    @property
    def m_finite(self) -> bool:
        return not math.isinf(self.m)


@dataclass(frozen=True)
class Interval:
    """Stepping-out output (lo, hi) with the per-side expansion counts."""

    lo: float
    hi: float
    expansions_left: int
    expansions_right: int

    @property
    def width(self) -> float:
        return self.hi - self.lo


def _stop_index(offset_at, oracle: Oracle, limit, cap: int) -> int:
    """First index i >= 1 with offset_at(i) outside S, clipped at ``limit``.

    ``limit`` is the per-side expansion budget (None = unbounded, guarded by
    ``cap``).  When the budget binds, the oracle is not consulted there.
    """
    i = 1
    while True:
        if limit is not None and i == limit:
            return i
        if not oracle(offset_at(i)):
            return i
        i += 1
        if limit is None and i > cap:
            raise ExpansionCapError(
                f"interval expansion exceeded {cap} steps with unbounded budget; "
                "the level set along this geodesic appears unbounded"
            )


def stepping_out(oracle: Oracle, params: StepOutParams, rng: np.random.Generator) -> Interval:
    """Randomised interval around 0 whose endpoints left S or hit the budget.

    Draw an offset U uniform on (0, w).  Candidate endpoints are
    lo_i = -U - (i-1) w going left and hi_i = -U + i w going right.  Each side
    expands while its current endpoint still lies in S.  For finite m a split
    J uniform on {1..m} caps the left side at J expansions and the right side
    at m + 1 - J, so the total interval width never exceeds m * w.
    """
    w, m = params.w, params.m
    ups = open_uniform(rng, 0.0, w)
    if params.m_finite:
        j = int(rng.integers(1, int(m) + 1))
        left_limit, right_limit = j, int(m) + 1 - j
    else:
        left_limit = right_limit = None
    tau = _stop_index(lambda i: -ups - (i - 1) * w, oracle, left_limit, params.max_expansions)
    tee = _stop_index(lambda i: -ups + i * w, oracle, right_limit, params.max_expansions)
    itv = Interval(
        lo=-ups - (tau - 1) * w,
        hi=-ups + tee * w,
        expansions_left=tau - 1,
        expansions_right=tee - 1,
    )
    if __debug__:
        assert itv.lo < 0.0 < itv.hi
        assert abs(itv.width - (tau + tee - 1) * w) < 1e-9 * max(1.0, itv.width)
        assert not params.m_finite or itv.width <= m * w * (1.0 + 1e-12)
    return itv


def covering_bound(b: float, theta: float, delta: float, m: float, w: float) -> float:
    """Guaranteed probability that the interval from theta swallows S up to b.

    For a level set S with sup S cap [theta, C) = b and gap mass
    delta = Leb([theta, b) \\ S), the stepping-out interval contains
    [theta, C) cap S with probability at least

        1 - (b - theta)/(m w) * [m finite] - delta / w * [m >= 2].

    Raises ApplicabilityError when the arguments violate the bound's premise
    (b - theta)/m * [m finite] < w - delta * [m >= 2].
    """
    if not b > theta:
        raise ApplicabilityError(f"need b > theta, got b={b}, theta={theta}")
    if delta < 0:
        raise ApplicabilityError(f"gap mass must be nonnegative, got {delta}")
    m_fin = not math.isinf(m)
    lhs = (b - theta) / m if m_fin else 0.0
    rhs = w - (delta if m >= 2 else 0.0)
    if not lhs < rhs:
        raise ApplicabilityError(
            f"covering bound inapplicable: (b-theta)/m = {lhs} must be < w - delta*[m>=2] = {rhs}"
        )
    val = 1.0
    if m_fin:
        val -= (b - theta) / (m * w)
    if m >= 2:
        val -= delta / w
    return val


class ApplicabilityError(ValueError):
    """A closed-form bound was requested outside its premises."""


# ---------------------------------------------------------------------------
# interval-set utilities (test surface for the stepping-out law)
# ---------------------------------------------------------------------------

IntervalSet = Sequence[Tuple[float, float]]
"""Finite union of open intervals, given as (a, b) pairs with a < b."""


def _normalize_set(set_spec: IntervalSet):
    ivs = sorted((float(a), float(b)) for a, b in set_spec)
    for a, b in ivs:
        if not a < b:
            raise ValueError(f"degenerate interval ({a}, {b}) in set spec")
    return ivs


def set_contains(set_spec: IntervalSet, x: float) -> bool:
    return any(a < x < b for a, b in set_spec)


def estimate_covering_probability(
    set_spec: IntervalSet,
    theta: float,
    C: float,
    params: StepOutParams,
    n: int,
    rng: np.random.Generator,
) -> Tuple[float, float]:
    """Monte-Carlo probability that the interval from theta covers S cap [theta, C).

    Runs ``n`` independent stepping-out draws on the set shifted so the start
    sits at 0, and counts the draws whose interval contains every component of
    S cap [theta, C).  Returns (estimate, binomial standard error).
    """
    ivs = _normalize_set(set_spec)
    if not set_contains(ivs, theta):
        raise ValueError(f"start {theta} must lie inside the set")
    pieces = []
    for a, b in ivs:
        lo, hi = max(a, theta), min(b, C)
        if lo < hi:
            pieces.append((lo, hi))
    if not pieces:
        raise ValueError("S cap [theta, C) is empty")
    if not math.isfinite(max(hi for _, hi in pieces)):
        raise ValueError("sup of S cap [theta, C) must be finite")
    if not params.m_finite and not math.isfinite(max(b for _, b in ivs)):
        raise ValueError("m = inf needs a bounded set")

    oracle = lambda s: set_contains(ivs, theta + s)
    hits = 0
    for _ in range(n):
        itv = stepping_out(oracle, params, rng)
        lo_abs, hi_abs = theta + itv.lo, theta + itv.hi
        if all(lo_abs <= a and b <= hi_abs for a, b in pieces):
            hits += 1
    p = hits / n
    se = math.sqrt(max(p * (1.0 - p), 1e-300) / n)
    return p, se


# ---------------------------------------------------------------------------
# wrapped-interval shrinkage
# ---------------------------------------------------------------------------

def wrap_angle(theta: float, lo: float, hi: float) -> float:
    """Map the interval parameter onto the circle: (2 pi / (hi-lo)) * theta mod 2 pi."""
    if not hi > lo:
        raise ValueError(f"degenerate interval ({lo}, {hi})")
    a = (TWO_PI / (hi - lo) * theta) % TWO_PI
    return 0.0 if a >= TWO_PI else a


def unwrap_angle(alpha: float, lo: float, hi: float) -> float:
    """Unique theta in [lo, hi) with wrap_angle(theta, lo, hi) == alpha."""
    if not hi > lo:
        raise ValueError(f"degenerate interval ({lo}, {hi})")
    if not 0.0 <= alpha < TWO_PI:
        raise ValueError(f"angle {alpha} outside [0, 2 pi)")
    span = hi - lo
    t = span * alpha / TWO_PI
    out = lo + (t - lo) % span
    return lo if out >= hi else out


def _arc_contains(a: float, b: float, x: float) -> bool:
    """Membership of the circular arc running counterclockwise from a to b.

    The arc includes a and excludes b; coinciding endpoints mean the full
    circle.
    """
    if a < b:
        return a <= x < b
    if a > b:
        return x >= a or x < b
    return True


def _draw_arc(rng: np.random.Generator, a: float, b: float) -> float:
    length = TWO_PI if a == b else (b - a) % TWO_PI
    u = open_uniform(rng, 0.0, length)
    g = (a + u) % TWO_PI
    return 0.0 if g >= TWO_PI else g


class ShrinkageResult(NamedTuple):
    theta: float
    iterations: int


def reeled_shrinkage(
    oracle: Oracle,
    lo: float,
    hi: float,
    rng: np.random.Generator,
    max_iters: int = 100_000,
) -> ShrinkageResult:
    """Draw a level-set point from (lo, hi) by shrinking a wrapped arc.

    The interval is wrapped onto [0, 2 pi); the current point (parameter 0,
    which must lie in (lo, hi) with oracle(0) true) has image angle 0.  The
    first candidate is uniform on the circle and simultaneously anchors the
    arc bounds.  Each candidate is unwrapped and accepted when it lies in the
    open interval and satisfies the oracle; otherwise the arc is cut at the
    rejected angle, keeping the side that contains the target angle, and the
    next candidate is drawn uniformly from the remaining arc.

    Returns the accepted parameter together with the number of candidate
    draws used.
    """
    if not (lo < 0.0 < hi):
        raise ValueError(f"current point 0 must lie inside ({lo}, {hi})")
    target = wrap_angle(0.0, lo, hi)
    gamma = rng.uniform(0.0, TWO_PI)
    arc_min = arc_max = gamma
    for it in range(1, max_iters + 1):
        cand = unwrap_angle(gamma, lo, hi)
        if lo < cand < hi and oracle(cand):
            return ShrinkageResult(cand, it)
        if _arc_contains(gamma, arc_max, target):
            arc_min = gamma
        else:
            arc_max = gamma
        gamma = _draw_arc(rng, arc_min, arc_max)
    raise ShrinkageCapError(
        f"no accepted point in {max_iters} shrinkage iterations; "
        "the level set inside the interval has negligible measure"
    )


def shrinkage_mass_bound(a_mass: float, width: float, diam_s: float) -> float:
    """Guaranteed mass the shrinkage draw puts on a subset of measure a_mass.

    The shrinkage output dominates Lebesgue measure on S cap (lo, hi) scaled
    by 1 / min(interval width, diam S).
    """
    if a_mass < 0:
        raise ValueError("subset mass must be nonnegative")
    if not width > 0 or not diam_s > 0:
        raise ValueError("width and diameter must be positive")
    return a_mass / min(width, diam_s)
