"""Sosiefication rates and the statistics used to compare them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from scipy.stats import chi2

MIN_TRIALS = 30


class DegenerateInput(ValueError):
    pass


class InvalidKey(ValueError):
    pass


@dataclass(frozen=True)
class RateCell:
    n_trials: int
    n_sosies: int
    low_confidence: bool = False

    @property
    def sr(self) -> Optional[float]:
        return self.n_sosies / self.n_trials if self.n_trials else None


def _is_sosie(t) -> bool:
    return t.outcome == "sosie"


def sosiefication_rate(trials: Iterable) -> Optional[float]:
    """#sosies / #trials, or None for an empty set of trials."""
    n = k = 0
    for t in trials:
        n += 1
        k += _is_sosie(t)
    return k / n if n else None


def _cells(pairs: Iterable[Tuple[object, bool]]) -> Dict[object, List[int]]:
    acc: Dict[object, List[int]] = {}
    for key, ok in pairs:
        c = acc.setdefault(key, [0, 0])
        c[0] += 1
        c[1] += ok
    return acc


def sr_by_tc(trials: Iterable, store=None, min_trials: int = MIN_TRIALS) -> Dict[int, RateCell]:
    """Trials grouped by how many tests cover their transplantation point.

    Only tc values that received trials appear.  Bins with fewer than
    ``min_trials`` trials are flagged ``low_confidence`` rather than dropped.
    """
    acc = _cells((t.tc_at_point, _is_sosie(t)) for t in trials)
    return {tc: RateCell(n, k, n < min_trials) for tc, (n, k) in sorted(acc.items())}


def sr_by_kind(trials: Iterable, op: str, keyed_by: str = "point_kind") -> Dict[str, RateCell]:
    """SR of the ``op`` trials per statement kind of the point or of the transplant."""
    if keyed_by not in ("point_kind", "transplant_kind"):
        raise InvalidKey(f"unknown key {keyed_by!r}")
    if keyed_by == "transplant_kind" and op == "delete":
        raise InvalidKey("delete has no transplant")
    acc = _cells((getattr(t, keyed_by), _is_sosie(t)) for t in trials if t.spec.op == op)
    return {k: RateCell(n, s) for k, (n, s) in sorted(acc.items())}


def two_proportion_test(low: Tuple[int, int], high: Tuple[int, int]) -> Tuple[float, float]:
    """Pearson chi-square test (df=1) that two proportions are equal, Yates-corrected.

    ``low`` and ``high`` are (successes, trials).  The continuity correction
    is clamped at ``|p1 - p2| / (1/n1 + 1/n2)``, as R's ``prop.test`` does,
    so identical proportions give a statistic of exactly 0.
    """
    (x1, n1), (x2, n2) = low, high
    if n1 < 1 or n2 < 1:
        raise DegenerateInput("each group needs at least one trial")
    if not (0 <= x1 <= n1 and 0 <= x2 <= n2):
        raise ValueError("successes must lie in [0, trials]")
    p = (x1 + x2) / (n1 + n2)
    if p in (0.0, 1.0):
        # both groups all-fail or all-succeed: no evidence of a difference
        return 0.0, 1.0
    delta = x1 / n1 - x2 / n2
    yates = min(0.5, abs(delta) / (1 / n1 + 1 / n2))
    stat = 0.0
    for x, n in ((x1, n1), (x2, n2)):
        for observed, expected in ((x, n * p), (n - x, n * (1 - p))):
            stat += (abs(observed - expected) - yates) ** 2 / expected
    return stat, float(chi2.sf(stat, 1))


def linear_trend(points: Sequence[Tuple[float, float]]) -> Tuple[float, float]:
    """Ordinary least squares fit y = slope * x + intercept; returns (slope, intercept)."""
    xs = [float(x) for x, _ in points]
    ys = [float(y) for _, y in points]
    if len(set(xs)) < 2:
        raise DegenerateInput("need at least two distinct x values")
    n = len(xs)
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    sxy = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    slope = sxy / sxx
    return slope, my - slope * mx


def split_by_threshold(trials: Iterable, threshold: int) -> Tuple[Tuple[int, int], Tuple[int, int]]:
    """((sosies, trials) with tc <= threshold, (sosies, trials) with tc > threshold)."""
    lo = [0, 0]
    hi = [0, 0]
    for t in trials:
        g = lo if t.tc_at_point <= threshold else hi
        g[0] += _is_sosie(t)
        g[1] += 1
    return (lo[0], lo[1]), (hi[0], hi[1])
