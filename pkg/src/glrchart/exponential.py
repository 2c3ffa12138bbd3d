"""Two-sample Exponential likelihood-ratio scores for rate monitoring.

The raw statistic for a split k of t positive observations is built from
segment sums (the Exponential sufficient statistic):

    m(k, t) = -2 * [ t*ln(t/S[1..t]) - k*ln(k/S[1..k]) - (t-k)*ln((t-k)/S[k+1..t]) ]

Its null distribution approaches chi-square with one degree of freedom,
but slowly near the boundary splits; the corrected score divides by the
exact null mean :func:`expected_m` so every split has null mean 1.

A split only needs one observation per side: 1 <= k <= t-1.  Scores are
invariant under rescaling x -> a*x (a > 0).  Observations must be strictly
positive; a zero cannot occur under any Exponential law and is rejected
upstream rather than perturbed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InputError
from .specfun import digamma
from .streamstats import CandidateSet

KINDS = ("corrected", "raw")


def _check_range(k, t) -> None:
    k = np.asarray(k)
    if np.any(k < 1) or np.any(k > t - 1):
        raise DomainError(f"split k must satisfy 1 <= k <= t-1 (got k={k}, t={t})")


def expected_m(k, t):
    """Exact null mean of m(k, t); symmetric in k <-> t-k."""
    _check_range(k, t)
    k = np.asarray(k, dtype=np.float64)

    def term(m):
        # m*psi(m) + m*ln m combined caller-side; xlogx(0) would be 0 but
        # k >= 1 here so no special case is needed.
        return m * digamma(m) - m * np.log(m)

    out = -2.0 * (term(k) + term(np.float64(t) - k) - term(np.float64(t)))
    return float(out) if out.ndim == 0 else out


def m_stat(prefix_sum: float, k: int, total_sum: float, t: int) -> float:
    """Raw statistic from the prefix sum over 1..k and the total sum over 1..t."""
    _check_range(k, t)
    suffix_sum = total_sum - prefix_sum
    if prefix_sum <= 0.0 or suffix_sum <= 0.0 or total_sum <= 0.0:
        raise DomainError("segment sums must be strictly positive")
    m = -2.0 * (
        t * np.log(t / total_sum)
        - k * np.log(k / prefix_sum)
        - (t - k) * np.log((t - k) / suffix_sum)
    )
    return max(0.0, float(m))


@dataclass
class ExponentialSplitScores:
    """Per-candidate scores at a fixed time t (arrays aligned on k)."""

    t: int
    k: np.ndarray
    m: np.ndarray
    mc: np.ndarray


def corrected_scores(candidates: CandidateSet) -> ExponentialSplitScores:
    """Score every retained split of the candidate set.

    Positivity of each observation is enforced at ingestion; here the
    per-segment sums are re-checked, which (unwindowed) covers every
    individual observation through consecutive prefix differences.
    """
    t = candidates.t
    if t < 2:
        raise DomainError("need at least two observations for an Exponential split")
    pairs = [(k, p) for k, p in candidates.prefixes if 1 <= k <= t - 1]
    if not pairs:
        raise DomainError("no admissible split candidate is retained")
    total = candidates.global_summary.s1
    ks = np.array([k for k, _ in pairs], dtype=np.int64)
    sums = np.array([p.s1 for _, p in pairs])
    if total <= 0.0 or np.any(sums <= 0.0) or np.any(np.diff(np.append(sums, total)) <= 0.0):
        raise InputError("Exponential monitoring requires strictly positive observations")
    kf = ks.astype(np.float64)
    n2 = t - kf
    m = -2.0 * (
        t * np.log(t / total) - kf * np.log(kf / sums) - n2 * np.log(n2 / (total - sums))
    )
    np.maximum(m, 0.0, out=m)
    mc = m / expected_m(kf, t)
    return ExponentialSplitScores(t=t, k=ks, m=m, mc=mc)


def max_score(scores: ExponentialSplitScores, which: str = "corrected") -> tuple[float, int]:
    """Maximum of the chosen statistic and its split, ties going to smallest k."""
    if which not in KINDS:
        raise DomainError(f"unknown statistic kind {which!r}")
    values = scores.mc if which == "corrected" else scores.m
    if values.size == 0:
        raise DomainError("empty score set")
    i = int(np.argmax(values))
    return float(values[i]), int(scores.k[i])
