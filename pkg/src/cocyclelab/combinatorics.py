"""Exact measures for bad-interval counts along the partition tree.

If every node of the b-ary cylinder tree has exactly q bad children, the
set of points whose first n ancestors contain exactly m bad intervals has
measure C(n, m) q^m (b - q)^(n - m) / b^n. Everything here is exact
rational arithmetic.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

Word = tuple[int, ...]

BRUTE_FORCE_CAP = 2_000_000


class ThresholdCapWarning(UserWarning):
    """The count threshold floor(2qn/b) exceeds n, so the sum covers every m."""


@dataclass(frozen=True)
class BadCountLaw:
    n: int
    q: int
    b: int

    def __post_init__(self) -> None:
        if self.b < 2:
            raise ValueError("b must be >= 2")
        if not 0 <= self.q <= self.b:
            raise ValueError(f"q must lie in [0, b], got q={self.q}, b={self.b}")
        if self.n < 0:
            raise ValueError("n must be >= 0")

    @property
    def threshold(self) -> int:
        """floor(2 (q/b) n), the largest admitted bad count."""
        return (2 * self.q * self.n) // self.b


def level_bad_measure(law: BadCountLaw, m: int) -> Fraction:
    """Measure of points with exactly m bad intervals among their first n ancestors."""
    if not 0 <= m <= law.n:
        raise ValueError(f"m={m} outside [0, {law.n}]")
    return Fraction(math.comb(law.n, m) * law.q ** m * (law.b - law.q) ** (law.n - m), law.b ** law.n)


def mn_measure(law: BadCountLaw) -> Fraction:
    """Measure of points with at most floor(2qn/b) bad ancestors.

    When the threshold exceeds n every count qualifies; the result is 1 and a
    :class:`ThresholdCapWarning` is issued.
    """
    t = law.threshold
    if t > law.n:
        warnings.warn(f"threshold {t} exceeds n={law.n}; measure is 1", ThresholdCapWarning, stacklevel=2)
        return Fraction(1)
    num = sum(math.comb(law.n, m) * law.q ** m * (law.b - law.q) ** (law.n - m) for m in range(t + 1))
    return Fraction(num, law.b ** law.n)


def chernoff_tail_bound(law: BadCountLaw) -> float:
    """Upper bound exp(-n KL(t/n || q/b)) on the measure of the complement of M_n.

    Returns 1.0 when the threshold does not exceed the mean.
    """
    p = law.q / law.b
    t = law.threshold + 1  # the complement is m >= threshold + 1
    if law.n == 0 or p == 0:
        return 0.0
    a = t / law.n
    if a <= p:
        return 1.0
    if a >= 1:
        return p ** law.n if a == 1 else 0.0
    kl = a * math.log(a / p) + (1 - a) * math.log((1 - a) / (1 - p))
    return math.exp(-law.n * kl)


def bad_count_table(law: BadCountLaw) -> list[tuple[int, Fraction]]:
    return [(m, level_bad_measure(law, m)) for m in range(law.n + 1)]


def exactly_q_predicate(q: int) -> Callable[[Word], bool]:
    """Predicate marking children 1..q of every node as bad."""
    return lambda word: word[-1] <= q


def brute_force_word_measure(b: int, n: int, bad_predicate: Callable[[Word], bool], m: int) -> Fraction:
    """Enumerate all words of length n and count those with exactly m bad prefixes.

    The prefixes (j1), (j1, j2), ..., (j1, ..., jn) are tested with the predicate;
    digits run over 1..b.
    """
    if b > 6 or n > 8 or b ** n > BRUTE_FORCE_CAP:
        raise ValueError(f"enumeration of {b}^{n} words exceeds the brute-force cap")
    if not 0 <= m <= n:
        raise ValueError(f"m={m} outside [0, {n}]")
    # depth-first walk over the word tree; every word is still visited once
    hits = 0
    stack: list[tuple[Word, int]] = [((), 0)]
    while stack:
        prefix, bad = stack.pop()
        if len(prefix) == n:
            hits += bad == m
            continue
        for j in range(1, b + 1):
            child = prefix + (j,)
            count = bad + bool(bad_predicate(child))
            if count <= m:
                stack.append((child, count))
    return Fraction(hits, b ** n)
