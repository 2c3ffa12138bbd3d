"""Vectorized Monte Carlo machinery behind calibration and the eval harness.

Everything here processes replications in lockstep: a chunk of streams is a
(B, t) block, prefix sums live in (B, t+1) arrays, and each time step t
evaluates the chart statistic for all B streams with a handful of array
operations over the split dimension.  The per-step cost is O(B * t), which
matches the unwindowed chart.

Reproducibility contract: replication r (0-based) draws its observations,
in stream order, from ``default_rng(SeedSequence(seed, spawn_key=(r,)))``.
Chunk sizes and worker counts therefore never affect results.
"""

from __future__ import annotations

import os
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import CalibrationExhaustedError, DomainError
from .specfun import digamma

_LOG_DEGENERATE = np.log(1e-12)
_TINY = 1e-300


def rep_rng(seed: int, rep: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(rep,)))


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("GLRCHART_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class StreamModel:
    """Piecewise i.i.d. stream: ``pre`` up to and including tau, ``post`` after.

    Gaussian params are (mean, sd); Exponential params are the rate.
    ``tau=0`` (or equal params) gives a pure null stream.
    """

    family: str
    pre: tuple[float, ...]
    post: tuple[float, ...]
    tau: int = 0

    def draw(self, rng: np.random.Generator, start: int, count: int) -> np.ndarray:
        """Observations at positions start+1 .. start+count (1-based)."""
        n_pre = min(max(self.tau - start, 0), count)
        parts = []
        if n_pre:
            parts.append(self._draw_one(rng, self.pre, n_pre))
        if count - n_pre:
            parts.append(self._draw_one(rng, self.post, count - n_pre))
        return parts[0] if len(parts) == 1 else np.concatenate(parts)

    def _draw_one(self, rng, params, n):
        if self.family == "gaussian":
            mu, sd = params
            return rng.standard_normal(n) * sd + mu
        if self.family == "exponential":
            (rate,) = params
            return rng.standard_exponential(n) / rate
        raise DomainError(f"unknown family {self.family!r}")


def null_model(family: str) -> StreamModel:
    if family == "gaussian":
        return StreamModel("gaussian", (0.0, 1.0), (0.0, 1.0), 0)
    return StreamModel("exponential", (1.0,), (1.0,), 0)


class _Corrections:
    """Grow-only caches of the k-indexed pieces of the correction formulas."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._n = 0
        self.term_g = np.empty(0)  # j*(ln(2/j) + psi((j-1)/2)), j >= 2
        self.a = np.empty(0)  # j*psi(j), j >= 1
        self.b = np.empty(0)  # j*ln(j), j >= 1
        self.inv = np.empty(0)
        self.inv2 = np.empty(0)

    def ensure(self, n: int) -> None:
        if n < self._n:
            return
        with self._lock:
            if n < self._n:
                return
            m = max(n + 1, 256, 2 * self._n)
            j = np.arange(m, dtype=np.float64)
            with np.errstate(divide="ignore", invalid="ignore"):
                inv = 1.0 / j
                lnj = np.log(j)
            term_g = np.full(m, np.nan)
            term_g[2:] = j[2:] * (np.log(2.0) - lnj[2:] + digamma((j[2:] - 1.0) / 2.0))
            a = np.full(m, np.nan)
            a[1:] = j[1:] * digamma(j[1:])
            b = np.full(m, np.nan)
            b[1:] = j[1:] * lnj[1:]
            b[0] = 0.0
            self.term_g, self.a, self.b, self.inv, self.inv2 = term_g, a, b, inv, inv * inv
            self._n = m

    def expected_d_row(self, t: int) -> np.ndarray:
        """E[d] for k = 2..t-2."""
        self.ensure(t)
        g = self.term_g
        return g[t] - g[2 : t - 1] - g[t - 2 : 1 : -1]

    def bartlett_row(self, t: int) -> np.ndarray:
        """Bartlett constant for k = 2..t-2."""
        self.ensure(t)
        i1 = self.inv[2 : t - 1] + self.inv[t - 2 : 1 : -1] - self.inv[t]
        i2 = self.inv2[2 : t - 1] + self.inv2[t - 2 : 1 : -1] - self.inv2[t]
        return 1.0 + (11.0 / 12.0) * i1 + i2

    def expected_m_row(self, t: int) -> np.ndarray:
        """E[m] for k = 1..t-1."""
        self.ensure(t)
        a, b = self.a, self.b
        return -2.0 * (a[1:t] + a[t - 1 : 0 : -1] - a[t] + b[t] - b[1:t] - b[t - 1 : 0 : -1])


_CORR = _Corrections()


class _StreamState:
    """Prefix sums plus the per-step statistic kernel for one chunk."""

    def __init__(self, family: str, statistic: str, n_rows: int, cap: int):
        self.family = family
        self.statistic = statistic
        self.rows = n_rows
        self.cap = cap
        self.filled = 0
        self.p1 = np.zeros((n_rows, cap + 1))
        self.p2 = np.zeros((n_rows, cap + 1)) if family == "gaussian" else None
        # log prefix variance (gaussian) / log prefix sum (exponential)
        self.lpref = np.full((n_rows, cap + 1), np.nan)
        self._scr = [np.empty((n_rows, cap)) for _ in range(3)]

    def _grow(self, new_cap: int) -> None:
        def wider(arr, width, fill=0.0):
            out = np.full((self.rows, width), fill)
            out[:, : arr.shape[1]] = arr
            return out

        self.p1 = wider(self.p1, new_cap + 1)
        if self.p2 is not None:
            self.p2 = wider(self.p2, new_cap + 1)
        self.lpref = wider(self.lpref, new_cap + 1, np.nan)
        self._scr = [np.empty((self.rows, new_cap)) for _ in range(3)]
        self.cap = new_cap

    def append_block(self, x: np.ndarray) -> None:
        """Extend every stream with the same number of new observations."""
        b = x.shape[1]
        t0, t1 = self.filled, self.filled + b
        if t1 > self.cap:
            self._grow(max(t1, 2 * self.cap))
        cols = slice(t0 + 1, t1 + 1)
        np.cumsum(x, axis=1, out=self.p1[:, cols])
        self.p1[:, cols] += self.p1[:, t0][:, None]
        if self.family == "gaussian":
            np.cumsum(x * x, axis=1, out=self.p2[:, cols])
            self.p2[:, cols] += self.p2[:, t0][:, None]
            counts = np.arange(t0 + 1, t1 + 1, dtype=np.float64)
            v = self.p2[:, cols] / counts - (self.p1[:, cols] / counts) ** 2
            self.lpref[:, cols] = np.log(np.maximum(v, _TINY))
        else:
            self.lpref[:, cols] = np.log(np.maximum(self.p1[:, cols], _TINY))
        self.filled = t1

    def compact(self, keep: np.ndarray) -> None:
        self.p1 = self.p1[keep].copy()
        if self.p2 is not None:
            self.p2 = self.p2[keep].copy()
        self.lpref = self.lpref[keep].copy()
        self.rows = int(self.p1.shape[0])
        self._scr = [np.empty((self.rows, self.cap)) for _ in range(3)]

    def stat_at(self, t: int) -> np.ndarray:
        """Chart statistic (max over admissible splits) at time t, all rows."""
        if t > self.filled:
            raise DomainError("statistic requested beyond the filled horizon")
        if self.family == "gaussian":
            return self._gaussian_stat(t)
        return self._exponential_stat(t)

    def _gaussian_stat(self, t: int) -> np.ndarray:
        if t < 4:
            raise DomainError("Gaussian chart needs t >= 4")
        K = t - 3
        ks = np.arange(2, t - 1, dtype=np.float64)
        n2 = np.float64(t) - ks
        s1t = self.p1[:, t]
        s2t = self.p2[:, t]
        v0t = s2t / t - (s1t / t) ** 2
        mean2 = (s1t / t) ** 2
        all_const = v0t <= 1e-12 * (1.0 + mean2)
        ln0t = np.log(np.maximum(v0t, _TINY))

        d1 = self._scr[0][:, :K]
        d2 = self._scr[1][:, :K]
        work = self._scr[2][:, :K]
        np.subtract(s1t[:, None], self.p1[:, 2 : t - 1], out=d1)
        np.subtract(s2t[:, None], self.p2[:, 2 : t - 1], out=d2)
        # suffix variance: d2/n2 - (d1/n2)^2
        np.divide(d1, n2[None, :], out=d1)
        np.multiply(d1, d1, out=d1)
        np.divide(d2, n2[None, :], out=d2)
        np.subtract(d2, d1, out=d2)
        np.maximum(d2, _TINY, out=d2)
        np.log(d2, out=work)  # log suffix variance

        lim = ln0t[:, None] + _LOG_DEGENERATE
        degenerate = (work <= lim) | (self.lpref[:, 2 : t - 1] <= lim)

        # d = t*ln v0t - k*ln v0k - (t-k)*ln vkt
        np.multiply(work, n2[None, :], out=work)
        d = work
        np.subtract(t * ln0t[:, None] - ks[None, :] * self.lpref[:, 2 : t - 1], d, out=d)
        np.maximum(d, 0.0, out=d)
        d[degenerate] = np.inf
        if all_const.any():
            d[all_const, :] = 0.0

        if self.statistic == "corrected":
            factor = 2.0 / _CORR.expected_d_row(t)
        elif self.statistic == "hz":
            factor = 1.0 / _CORR.bartlett_row(t)
        else:
            raise DomainError(f"unknown Gaussian statistic {self.statistic!r}")
        np.multiply(d, factor[None, :], out=d)
        return d.max(axis=1)

    def _exponential_stat(self, t: int) -> np.ndarray:
        if t < 2:
            raise DomainError("Exponential chart needs t >= 2")
        K = t - 1
        ks = np.arange(1, t, dtype=np.float64)
        n2 = np.float64(t) - ks
        _CORR.ensure(t)
        b = _CORR.b
        s1t = self.p1[:, t]
        lnst = np.log(np.maximum(s1t, _TINY))

        dsuf = self._scr[0][:, :K]
        work = self._scr[1][:, :K]
        np.subtract(s1t[:, None], self.p1[:, 1:t], out=dsuf)
        np.maximum(dsuf, _TINY, out=dsuf)
        np.log(dsuf, out=work)
        np.multiply(work, n2[None, :], out=work)  # (t-k) * ln suffix sum
        m = work
        const = b[t] - b[1:t] - b[t - 1 : 0 : -1]
        m += ks[None, :] * self.lpref[:, 1:t]
        m += const[None, :] - t * lnst[:, None]
        np.multiply(m, -2.0, out=m)
        np.maximum(m, 0.0, out=m)

        if self.statistic == "corrected":
            np.divide(m, _CORR.expected_m_row(t)[None, :], out=m)
        elif self.statistic != "raw":
            raise DomainError(f"unknown Exponential statistic {self.statistic!r}")
        return m.max(axis=1)


def _chunk_ranges(reps: int, chunk: int) -> list[tuple[int, int]]:
    return [(lo, min(lo + chunk, reps)) for lo in range(0, reps, chunk)]


def _auto_chunk(t_max: int, requested: int | None) -> int:
    if requested is not None:
        return max(1, requested)
    # keep the per-chunk working set around a few hundred MB
    return max(256, min(20000, int(4.0e7 / max(t_max, 1))))


def null_stat_trajectories(
    family: str,
    statistic: str,
    reps: int,
    t_max: int,
    t0: int = 21,
    seed: int = 0,
    chunk: int | None = None,
    workers: int | None = None,
    progress: bool = False,
) -> np.ndarray:
    """(reps, t_max-t0+1) float32 matrix of the null statistic trajectory."""
    if t_max < t0:
        raise DomainError("t_max must be at least t0")
    model = null_model(family)
    L = t_max - t0 + 1
    out = np.empty((reps, L), dtype=np.float32)
    chunk = _auto_chunk(t_max, chunk)
    ranges = _chunk_ranges(reps, chunk)

    def run(span):
        lo, hi = span
        x = np.empty((hi - lo, t_max))
        for i in range(hi - lo):
            x[i] = model.draw(rep_rng(seed, lo + i), 0, t_max)
        state = _StreamState(family, statistic, hi - lo, t_max)
        state.append_block(x)
        for t in range(t0, t_max + 1):
            out[lo:hi, t - t0] = state.stat_at(t)
        if progress:
            print(f"  trajectories: reps {hi}/{reps}", file=sys.stderr, flush=True)

    n_workers = workers if workers is not None else default_workers()
    if n_workers > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as ex:
            list(ex.map(run, ranges))
    else:
        for span in ranges:
            run(span)
    return out


def survivor_quantile_thresholds(traj: np.ndarray, gamma: float) -> np.ndarray:
    """Sequential (1-gamma) survivor quantiles down the columns of ``traj``."""
    reps, L = traj.shape
    alive = np.ones(reps, dtype=bool)
    raw = np.empty(L)
    need = 1.0 / gamma
    for j in range(L):
        vals = traj[alive, j]
        if vals.size < need:
            raise CalibrationExhaustedError(
                f"only {vals.size} surviving streams at step {j} "
                f"(need at least 1/gamma = {need:.0f}); increase replications"
            )
        h = float(np.quantile(vals, 1.0 - gamma))
        raw[j] = h
        alive[alive] = vals <= h
    return raw


def run_lengths(
    family: str,
    statistic: str,
    h: np.ndarray,
    model: StreamModel,
    reps: int,
    seed: int,
    t_cap: int,
    t0: int = 21,
    chunk: int | None = None,
    workers: int | None = None,
    progress: bool = False,
    rep_offset: int = 0,
) -> np.ndarray:
    """First time t in [t0, t_cap] with statistic > h[t], per replication.

    ``h`` is indexed by t (so it must have length at least t_cap+1).
    Returns -1 for streams that never signal by t_cap.
    """
    if len(h) < t_cap + 1:
        raise DomainError("threshold array shorter than t_cap")
    out = np.full(reps, -1, dtype=np.int64)
    chunk = _auto_chunk(min(t_cap, 4096), chunk)
    ranges = _chunk_ranges(reps, chunk)

    def run(span):
        lo, hi = span
        b = hi - lo
        rngs = [rep_rng(seed, rep_offset + lo + i) for i in range(b)]
        rep_ids = np.arange(lo, hi)
        alive = np.ones(b, dtype=bool)
        cap0 = min(t_cap, 1024)
        state = _StreamState(family, statistic, b, cap0)

        def refill(upto):
            n_new = upto - state.filled
            block = np.empty((state.rows, n_new))
            for i in range(state.rows):
                block[i] = model.draw(rngs[i], state.filled, n_new)
            state.append_block(block)

        refill(cap0)
        t = 1
        while t <= t_cap:
            if t > state.filled:
                refill(min(t_cap, max(2 * state.filled, t)))
            if t >= t0:
                stat = state.stat_at(t)
                sig = alive & (stat > h[t])
                if sig.any():
                    out[rep_ids[sig]] = t
                    alive &= ~sig
                    n_alive = int(alive.sum())
                    if n_alive == 0:
                        break
                    if n_alive < 0.6 * state.rows:
                        state.compact(alive)
                        rngs = [r for r, a in zip(rngs, alive) if a]
                        rep_ids = rep_ids[alive]
                        alive = np.ones(n_alive, dtype=bool)
            t += 1
        if progress:
            print(f"  run lengths: reps {hi}/{reps}", file=sys.stderr, flush=True)

    n_workers = workers if workers is not None else default_workers()
    if n_workers > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as ex:
            list(ex.map(run, ranges))
    else:
        for span in ranges:
            run(span)
    return out


def raw_split_stats(
    family: str,
    reps: int,
    t: int,
    ks: np.ndarray,
    seed: int,
    chunk: int = 100_000,
) -> np.ndarray:
    """(reps, len(ks)) raw null statistic values at a single time t.

    Uncorrected d (Gaussian) or m (Exponential) for the requested splits,
    under the standard null stream.  Used by the moment-theorem checks.
    """
    ks = np.asarray(ks, dtype=np.int64)
    model = null_model(family)
    out = np.empty((reps, ks.size))
    for lo, hi in _chunk_ranges(reps, chunk):
        b = hi - lo
        x = np.empty((b, t))
        for i in range(b):
            x[i] = model.draw(rep_rng(seed, lo + i), 0, t)
        s1 = np.cumsum(x, axis=1)
        if family == "gaussian":
            s2 = np.cumsum(x * x, axis=1)
            v0t = s2[:, -1] / t - (s1[:, -1] / t) ** 2
            res = np.empty((b, ks.size))
            for j, k in enumerate(ks):
                n2 = t - k
                vpre = s2[:, k - 1] / k - (s1[:, k - 1] / k) ** 2
                vsuf = (s2[:, -1] - s2[:, k - 1]) / n2 - ((s1[:, -1] - s1[:, k - 1]) / n2) ** 2
                res[:, j] = (
                    t * np.log(v0t) - k * np.log(vpre) - n2 * np.log(vsuf)
                )
        else:
            res = np.empty((b, ks.size))
            tot = s1[:, -1]
            for j, k in enumerate(ks):
                n2 = t - k
                pre = s1[:, k - 1]
                res[:, j] = -2.0 * (
                    t * np.log(t / tot) - k * np.log(k / pre) - n2 * np.log(n2 / (tot - pre))
                )
        out[lo:hi] = np.maximum(res, 0.0)
    return out
