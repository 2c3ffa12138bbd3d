"""Recursively updatable sufficient statistics and split-candidate bookkeeping.

A :class:`RunningSummary` holds (count, sum, sum of squares) for a data
segment, which is everything the Gaussian and Exponential likelihood ratio
statistics need.  A :class:`CandidateSet` tracks one prefix summary per
possible split point so that all two-sample statistics at time t can be
formed by subtraction in O(1) each.

The raw-moment representation keeps segment subtraction trivial at the cost
of some cancellation for data with huge offsets; streams with |x| above
about 1e6 should be pre-centered by the caller.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

from .errors import DomainError, InputError


@dataclass(frozen=True)
class RunningSummary:
    """Count, sum and sum of squares of a data segment."""

    n: int = 0
    s1: float = 0.0
    s2: float = 0.0

    def mean(self) -> float:
        if self.n == 0:
            raise DomainError("mean of an empty summary")
        return self.s1 / self.n


def update(summary: RunningSummary, x: float) -> RunningSummary:
    """Return a new summary with one more observation folded in."""
    if not math.isfinite(x):
        raise InputError(f"non-finite observation: {x!r}")
    return RunningSummary(summary.n + 1, summary.s1 + x, summary.s2 + x * x)


def variance_mle(summary: RunningSummary) -> float:
    """Biased (divide-by-n) variance estimate, clamped at zero."""
    if summary.n < 1:
        raise DomainError("variance of an empty summary")
    m = summary.s1 / summary.n
    return max(0.0, summary.s2 / summary.n - m * m)


def suffix(global_: RunningSummary, prefix: RunningSummary) -> RunningSummary:
    """Summary of the observations in ``global_`` but not in ``prefix``.

    Valid when ``prefix`` summarises a leading subset of the observations
    behind ``global_``; the result is the componentwise difference.
    """
    if prefix.n > global_.n:
        raise DomainError("prefix has more observations than the full segment")
    return RunningSummary(global_.n - prefix.n, global_.s1 - prefix.s1, global_.s2 - prefix.s2)


class CandidateSet:
    """Windowed collection of prefix summaries, one per candidate split k.

    Pushing observation number t (t >= 2) adds the split k = t-1, whose
    prefix summary is the pre-push global summary.  With a capacity W set,
    only the W most recent splits are kept: the smallest-k candidate is
    evicted, but its observations stay inside the global summary, so only
    the split option is lost, never data.  Which of the retained splits are
    usable is up to the statistic (the Gaussian chart needs two observations
    on each side, the Exponential chart one).
    """

    __slots__ = ("global_summary", "prefixes", "capacity")

    def __init__(self, capacity: int | None = None):
        if capacity is not None and capacity < 1:
            raise DomainError("capacity must be a positive integer or None")
        self.global_summary = RunningSummary()
        self.prefixes: deque[tuple[int, RunningSummary]] = deque()
        self.capacity = capacity

    @property
    def t(self) -> int:
        return self.global_summary.n

    def push(self, x: float) -> None:
        prev = self.global_summary
        new_global = update(prev, x)  # validates x before any state change
        if prev.n >= 1:
            self.prefixes.append((prev.n, prev))
            if self.capacity is not None and len(self.prefixes) > self.capacity:
                self.prefixes.popleft()
        self.global_summary = new_global

    def __len__(self) -> int:
        return len(self.prefixes)


def push_candidate(candidates: CandidateSet, x: float) -> CandidateSet:
    """Functional wrapper over :meth:`CandidateSet.push` (mutates and returns)."""
    candidates.push(x)
    return candidates
