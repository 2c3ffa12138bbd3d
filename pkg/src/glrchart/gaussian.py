"""Two-sample Gaussian likelihood-ratio scores over candidate split points.

For a stream of t observations and a split k, the raw statistic compares
the pooled variance against the per-segment variances:

    d(k, t) = k * ln(V[1..t] / V[1..k]) + (t-k) * ln(V[1..t] / V[k+1..t])

with V the biased maximum-likelihood variance.  Two rescalings of d are
provided: the Bartlett-style one (divide by an asymptotic constant), and
the finite-sample one (scale so the null mean is exactly 2, the mean of a
chi-square with two degrees of freedom).  The exact null mean of d comes
from the closed form in :func:`expected_d`, which is what makes the
finite-sample correction flat in k right up to the boundary splits.

Splits need at least two observations on each side, so 2 <= k <= t-2.
All scores are invariant under affine maps x -> a*x + b of the data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .specfun import digamma
from .streamstats import CandidateSet, RunningSummary, suffix, variance_mle

# Relative floor below which a segment variance counts as degenerate.
_DEGENERATE_TOL = 1e-12

KINDS = ("corrected", "hz", "raw")


def _check_range(k, t) -> None:
    k = np.asarray(k)
    if np.any(k < 2) or np.any(k > t - 2):
        raise DomainError(f"split k must satisfy 2 <= k <= t-2 (got k={k}, t={t})")


def bartlett_factor(k, t):
    """Asymptotic mean-scaling constant used by the Bartlett-corrected chart."""
    _check_range(k, t)
    k = np.asarray(k, dtype=np.float64)
    out = (
        1.0
        + (11.0 / 12.0) * (1.0 / k + 1.0 / (t - k) - 1.0 / t)
        + (1.0 / k**2 + 1.0 / (t - k) ** 2 - 1.0 / t**2)
    )
    return float(out) if out.ndim == 0 else out


def expected_d(k, t):
    """Exact null mean of the raw statistic d(k, t).

    Closed form in terms of the digamma function; symmetric in k <-> t-k.
    """
    _check_range(k, t)
    k = np.asarray(k, dtype=np.float64)

    def term(m):
        return m * (np.log(2.0 / m) + digamma((m - 1.0) / 2.0))

    out = term(np.float64(t)) - term(k) - term(t - k)
    return float(out) if out.ndim == 0 else out


def d_stat(prefix: RunningSummary, global_: RunningSummary) -> float:
    """Raw two-sample statistic for the split after ``prefix.n`` observations."""
    t, k = global_.n, prefix.n
    if k < 2 or t - k < 2:
        raise DomainError("each segment needs at least two observations")
    v_all = variance_mle(global_)
    v_pre = variance_mle(prefix)
    v_suf = variance_mle(suffix(global_, prefix))
    # Degenerate data: all-constant stream scores 0, a constant sub-segment
    # inside varying data is an extreme change and scores +inf.
    mean = global_.s1 / t
    if v_all <= _DEGENERATE_TOL * (1.0 + mean * mean):
        return 0.0
    floor = _DEGENERATE_TOL * v_all
    if v_pre <= floor or v_suf <= floor:
        return float("inf")
    d = k * np.log(v_all / v_pre) + (t - k) * np.log(v_all / v_suf)
    return max(0.0, float(d))


@dataclass
class GaussianSplitScores:
    """Per-candidate scores at a fixed time t (arrays aligned on k)."""

    t: int
    k: np.ndarray
    d: np.ndarray
    h: np.ndarray
    dc: np.ndarray


def corrected_scores(candidates: CandidateSet) -> GaussianSplitScores:
    """Score every retained admissible split of the candidate set."""
    t = candidates.t
    if t < 4:
        raise DomainError("need at least four observations for a Gaussian split")
    pairs = [(k, p) for k, p in candidates.prefixes if 2 <= k <= t - 2]
    if not pairs:
        raise DomainError("no admissible split candidate is retained")
    ks = np.array([k for k, _ in pairs], dtype=np.int64)
    d = np.array([d_stat(p, candidates.global_summary) for _, p in pairs])
    kf = ks.astype(np.float64)
    h = d / bartlett_factor(kf, t)
    dc = 2.0 * d / expected_d(kf, t)
    return GaussianSplitScores(t=t, k=ks, d=d, h=h, dc=dc)


def max_score(scores: GaussianSplitScores, which: str = "corrected") -> tuple[float, int]:
    """Maximum of the chosen statistic and its split, ties going to smallest k."""
    if which not in KINDS:
        raise DomainError(f"unknown statistic kind {which!r}")
    values = {"corrected": scores.dc, "hz": scores.h, "raw": scores.d}[which]
    if values.size == 0:
        raise DomainError("empty score set")
    i = int(np.argmax(values))  # first occurrence wins: smallest k on ties
    return float(values[i]), int(scores.k[i])
