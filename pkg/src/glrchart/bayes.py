"""Bayesian online change detection baseline for Exponential data.

The model: segment lengths are i.i.d. from a Negative Binomial prior (given
by mean and standard deviation), and each segment's Exponential rate has a
conjugate Gamma prior.  The latent variable C_t is the index of the most
recent change point at time t, with C_t = 0 meaning no change has happened
yet.  The posterior over C_t is propagated exactly in O(t) per observation:
each support point's weight is carried forward with the segment-length
hazard and the conjugate predictive density of the new observation, and a
new support point is born at t with the mass that the hazard moved out.

Detection flags a change the first time P(C_t = 0 | x_1..x_t) drops below a
chosen level c.  That probability is additionally tracked in log space so
the detection rule stays exact even when the posterior mass on "no change"
underflows a float.

The improper Jeffreys prior Gamma(1/2, 0) is representable: every fresh
segment then has zero marginal likelihood relative to the continuing one,
no mass ever moves off "no change", and nothing is ever detected (the
Lindley effect taken to its limit).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import nbinom

from .errors import DomainError, InputError
from .specfun import log_gamma


@dataclass
class GammaRatePrior:
    """Gamma(alpha, beta) prior (shape/rate) on an Exponential rate."""

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if self.alpha <= 0 or self.beta < 0:
            raise DomainError("Gamma prior needs alpha > 0 and beta >= 0")

    @property
    def proper(self) -> bool:
        return self.beta > 0

    @classmethod
    def jeffreys(cls) -> "GammaRatePrior":
        return cls(0.5, 0.0)


class SegmentLengthPrior:
    """Negative Binomial prior on segment lengths, moment-matched.

    Parameterised by mean and standard deviation; requires variance > mean.
    The hazard g(l)/P(L >= l) never touches the (tiny) mass the raw pmf
    puts at zero, so the prior behaves as if conditioned on L >= 1.
    """

    def __init__(self, mean: float, sd: float):
        if mean <= 0 or sd <= 0:
            raise DomainError("segment-length prior needs positive mean and sd")
        var = sd * sd
        if var <= mean:
            raise DomainError("Negative Binomial needs variance > mean")
        self.mean = mean
        self.sd = sd
        self.p = mean / var
        self.r = mean * self.p / (1.0 - self.p)
        self._hazard = np.empty(0)

    def pmf(self, length) -> np.ndarray:
        return nbinom.pmf(length, self.r, self.p)

    def survivor(self, length) -> np.ndarray:
        """P(L > length)."""
        return nbinom.sf(length, self.r, self.p)

    def truncation_horizon(self, tail: float = 1e-12) -> int:
        return int(nbinom.isf(tail, self.r, self.p)) + 1

    def hazard(self, max_length: int) -> np.ndarray:
        """hazard[l] = P(L = l | L >= l) for l = 1..max_length (index 0 unused)."""
        if self._hazard.size <= max_length:
            n = max(max_length + 1, 2 * self._hazard.size, 64)
            lengths = np.arange(n)
            with np.errstate(divide="ignore", invalid="ignore"):
                hz = self.pmf(lengths) / self.survivor(lengths - 1)
            hz[0] = np.nan
            if not np.all(np.isfinite(hz[1:])):
                raise DomainError("segment-length hazard is not finite over the horizon")
            if np.any(hz[1:] >= 1.0) or np.any(hz[1:] <= 0.0):
                raise DomainError("segment-length hazard left (0, 1)")
            self._hazard = hz
        return self._hazard


def log_marginal_likelihood(prior: GammaRatePrior, m: int, total: float) -> float:
    """ln of the marginal likelihood of m observations summing to ``total``."""
    if m < 1:
        raise DomainError("need at least one observation")
    if total <= 0:
        raise DomainError("Exponential data must have a positive sum")
    if not prior.proper:
        raise DomainError(
            "improper prior has no normalisable marginal likelihood; "
            "see the Lindley caveat in the module docstring"
        )
    a, b = prior.alpha, prior.beta
    return a * math.log(b) + log_gamma(a + m) - log_gamma(a) - (a + m) * math.log(b + total)


def marginal_likelihood(prior: GammaRatePrior, m: int, total: float) -> float:
    return math.exp(log_marginal_likelihood(prior, m, total))


def _log_predictive_new(prior: GammaRatePrior, x: float) -> float:
    """ln predictive density of one observation under a fresh segment."""
    a, b = prior.alpha, prior.beta
    if b == 0.0:
        return -math.inf
    return a * math.log(b) + math.log(a) - (a + 1.0) * math.log(b + x)


@dataclass
class BayesFilterState:
    """Posterior over C_t plus segment sufficient statistics.

    ``weights[j]`` is P(C_t = j | x_1..x_t) for j = 0..t-1 and
    ``seg_sums[j]`` the sum of the observations in that hypothesis's open
    segment (j+1..t, or 1..t for j = 0).  ``log_p_no_change`` tracks
    ln weights[0] exactly.
    """

    t: int
    weights: np.ndarray
    seg_sums: np.ndarray
    log_p_no_change: float = 0.0

    @property
    def p_no_change(self) -> float:
        return math.exp(self.log_p_no_change)


def _validate_obs(x: float) -> float:
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise InputError(f"Exponential observation must be positive and finite, got {x!r}")
    return x


def filter_init(x: float) -> BayesFilterState:
    x = _validate_obs(x)
    return BayesFilterState(1, np.array([1.0]), np.array([x]), 0.0)


def filter_step(
    state: BayesFilterState,
    x: float,
    seg_prior: SegmentLengthPrior,
    rate_prior: GammaRatePrior,
) -> BayesFilterState:
    """Advance the posterior with one new observation."""
    x = _validate_obs(x)
    t = state.t
    a, b = rate_prior.alpha, rate_prior.beta
    m = np.arange(t, 0, -1, dtype=np.float64)  # segment counts for j = 0..t-1
    am = a + m
    log_pred = (
        np.log(am) + am * np.log(b + state.seg_sums) - (am + 1.0) * np.log(b + state.seg_sums + x)
    )
    hz = seg_prior.hazard(t)[np.arange(t, 0, -1)]
    cont = state.weights * (1.0 - hz) * np.exp(log_pred)
    born = float(np.dot(state.weights, hz)) * math.exp(_log_predictive_new(rate_prior, x))
    z = float(cont.sum() + born)
    weights = np.append(cont, born) / z
    log_p0 = state.log_p_no_change + math.log1p(-hz[0]) + float(log_pred[0]) - math.log(z)
    return BayesFilterState(
        t + 1,
        weights,
        np.append(state.seg_sums + x, x),
        log_p0,
    )


def filter_stream(
    xs,
    seg_prior: SegmentLengthPrior,
    rate_prior: GammaRatePrior,
) -> BayesFilterState:
    """Run the filter over a whole sequence and return the final state."""
    it = iter(xs)
    try:
        state = filter_init(next(it))
    except StopIteration:
        raise InputError("empty stream") from None
    for x in it:
        state = filter_step(state, x, seg_prior, rate_prior)
    return state


def detect(
    xs,
    seg_prior: SegmentLengthPrior,
    rate_prior: GammaRatePrior,
    c: float,
) -> int | None:
    """First time P(no change yet) < c, or None if that never happens."""
    if not 0.0 < c < 1.0:
        raise DomainError("detection level c must lie in (0, 1)")
    log_c = math.log(c)
    state = None
    for i, x in enumerate(xs, start=1):
        state = filter_init(x) if state is None else filter_step(state, x, seg_prior, rate_prior)
        if state.log_p_no_change < log_c:
            return i
    return None


@dataclass(frozen=True)
class ExponentialChangeScenario:
    """Exp(rate_pre) through tau, Exp(rate_post) after; rates optionally drawn
    from ``sample_prior`` anew for each replication."""

    tau: int
    rate_pre: float | None = 1.0
    rate_post: float | None = 1.0
    sample_prior: GammaRatePrior | None = field(default=None)

    def draw(self, rng: np.random.Generator, horizon: int) -> np.ndarray:
        lam0, lam1 = self.rate_pre, self.rate_post
        if lam0 is None or lam1 is None:
            if self.sample_prior is None or not self.sample_prior.proper:
                raise DomainError("sampled rates need a proper sample_prior")
            shape = self.sample_prior.alpha
            scale = 1.0 / self.sample_prior.beta
            drawn0 = rng.gamma(shape, scale)
            drawn1 = rng.gamma(shape, scale)
            lam0 = drawn0 if lam0 is None else lam0
            lam1 = drawn1 if lam1 is None else lam1
        n_pre = min(max(self.tau, 0), horizon)
        x = np.empty(horizon)
        x[:n_pre] = rng.standard_exponential(n_pre) / lam0
        x[n_pre:] = rng.standard_exponential(horizon - n_pre) / lam1
        return x


def batch_detection_times(
    scenario: ExponentialChangeScenario,
    seg_prior: SegmentLengthPrior,
    rate_prior: GammaRatePrior,
    c: float,
    reps: int,
    seed: int,
    horizon: int,
    chunk: int = 2500,
    rep_offset: int = 0,
) -> np.ndarray:
    """Detection time per replication (-1 where nothing was detected).

    Vectorised lockstep version of :func:`detect`; replication r draws from
    the substream (seed, r + rep_offset), first the sampled rates (when the
    scenario asks for them) and then the stream, so results are independent
    of chunking.
    """
    if not 0.0 < c < 1.0:
        raise DomainError("detection level c must lie in (0, 1)")
    from ._engine import rep_rng  # local import to keep module deps one-way

    log_c = math.log(c)
    a, b = rate_prior.alpha, rate_prior.beta
    hz_all = seg_prior.hazard(horizon + 1)
    log_am_all = np.log(a + np.arange(1, horizon + 2, dtype=np.float64))
    out = np.full(reps, -1, dtype=np.int64)

    for lo in range(0, reps, chunk):
        hi = min(lo + chunk, reps)
        nb = hi - lo
        x_block = np.empty((nb, horizon))
        for i in range(nb):
            x_block[i] = scenario.draw(rep_rng(seed, rep_offset + lo + i), horizon)
        if np.any(x_block <= 0.0):
            raise InputError("scenario produced a non-positive observation")
        rep_ids = np.arange(lo, hi)
        alive = np.ones(nb, dtype=bool)

        w = np.zeros((nb, horizon))
        s = np.zeros((nb, horizon))
        lg = np.zeros((nb, horizon))  # cached ln(beta + seg_sum)
        scr_new = np.empty((nb, horizon))
        scr_pred = np.empty((nb, horizon))
        log_p0 = np.zeros(nb)

        w[:, 0] = 1.0
        s[:, 0] = x_block[:, 0]
        lg[:, 0] = np.log(b + x_block[:, 0])

        for t in range(1, horizon):
            x = x_block[:, t]
            m = np.arange(t, 0, -1)
            am = a + m.astype(np.float64)
            hz = hz_all[m]
            lnew = scr_new[:, :t]
            np.add(s[:, :t], x[:, None], out=lnew)
            lnew += b
            np.log(lnew, out=lnew)
            pred = scr_pred[:, :t]
            # exp(ln(a+m) + (a+m)*ln(b+s) - (a+m+1)*ln(b+s+x))
            np.multiply(lg[:, :t], am[None, :], out=pred)
            pred -= (am + 1.0)[None, :] * lnew
            pred += log_am_all[m - 1][None, :]
            log_pred0 = pred[:, 0].copy()
            np.exp(pred, out=pred)
            born_mass = w[:, :t] @ hz
            np.multiply(pred, 1.0 - hz[None, :], out=pred)
            np.multiply(pred, w[:, :t], out=pred)  # pred now holds cont weights
            if b > 0.0:
                born = born_mass * np.exp(
                    a * math.log(b) + math.log(a) - (a + 1.0) * np.log(b + x)
                )
            else:
                born = np.zeros(nb)
            z = pred.sum(axis=1) + born
            w[:, :t] = pred / z[:, None]
            w[:, t] = born / z
            log_p0 += math.log1p(-float(hz[0])) + log_pred0 - np.log(z)
            s[:, :t] += x[:, None]
            s[:, t] = x
            lg[:, :t] = lnew
            lg[:, t] = np.log(b + x)

            newly = alive & (log_p0 < log_c)
            if newly.any():
                out[rep_ids[newly]] = t + 1
                alive &= ~newly
                n_alive = int(alive.sum())
                if n_alive == 0:
                    break
                if n_alive < 0.6 * nb:
                    keep = alive
                    x_block = x_block[keep].copy()
                    w = w[keep].copy()
                    s = s[keep].copy()
                    lg = lg[keep].copy()
                    log_p0 = log_p0[keep].copy()
                    rep_ids = rep_ids[keep]
                    nb = n_alive
                    alive = np.ones(nb, dtype=bool)
                    scr_new = np.empty((nb, horizon))
                    scr_pred = np.empty((nb, horizon))
    return out
