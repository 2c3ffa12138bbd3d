"""Simulation campaigns: run-length verification and delay/Bayes comparisons.

Conventions shared by every campaign:

* A scenario draws observations 1..tau from the pre-change distribution and
  everything after tau from the post-change one (tau = 0 means no change).
* The in-control run length of a detector is counted in monitored
  observations: RL = T - start_t + 1 where T is the signal index.  With
  thresholds holding the conditional false-alarm rate at gamma this makes
  E[RL] = 1/gamma exactly, and by the same memorylessness the no-change
  rows of the delay tables reproduce the target run length.
* Detection delay is E[T - tau | T > tau]; runs that signal at or before
  tau count as false positives and are excluded from the delay average.
* Replication r of a cell draws from the substream (cell_seed, r) where
  cell_seed is derived from (seed, cell index), so grids are reproducible
  and independent of execution order, chunking and worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _engine, bayes
from .errors import DomainError
from .thresholds import ThresholdTable, kind_pair, shipped_table


@dataclass(frozen=True)
class Scenario:
    """One simulated change setting.

    ``pre``/``post`` are (mean, sd) for the Gaussian family and (rate,) for
    the Exponential family.
    """

    family: str
    pre: tuple[float, ...]
    post: tuple[float, ...]
    tau: int
    horizon: int
    label: str = ""

    def __post_init__(self) -> None:
        if self.tau < 0:
            raise DomainError("tau must be nonnegative")
        if self.horizon <= self.tau:
            raise DomainError("horizon must exceed tau")

    def model(self) -> _engine.StreamModel:
        return _engine.StreamModel(self.family, self.pre, self.post, self.tau)


@dataclass
class CampaignResult:
    """Summary of one simulated cell."""

    replications: int
    seed: int
    arl0: float | None = None
    arl0_se: float | None = None
    false_positive_rate: float | None = None
    delay: float | None = None
    delay_se: float | None = None
    n_delay: int = 0
    truncated_fraction: float = 0.0

    @property
    def flagged(self) -> bool:
        """True when the delay standard error exceeds 2% of the mean."""
        if self.delay is None or self.delay_se is None or self.delay == 0:
            return False
        return self.delay_se > 0.02 * abs(self.delay)


def cell_seed(seed: int, index: int) -> int:
    """Deterministic per-cell sub-seed."""
    return int(np.random.SeedSequence((seed, index)).generate_state(1)[0])


def _threshold_array(table: ThresholdTable, t_cap: int) -> np.ndarray:
    h = np.full(t_cap + 1, np.inf)
    ts = np.arange(table.start_t, t_cap + 1)
    if ts.size:
        h[table.start_t :] = table.lookup_array(ts)
    return h


def estimate_arl0(
    table: ThresholdTable,
    replications: int,
    seed: int,
    truncation_factor: float = 20.0,
    workers: int | None = None,
) -> CampaignResult:
    """Mean in-control run length under the table's statistic kind.

    Streams are truncated at ``truncation_factor * arl0`` monitored
    observations; truncated runs enter the mean at the cap (a lower bound)
    and their fraction is reported.
    """
    if replications < 1000:
        raise DomainError("run-length estimation needs at least 1000 replications")
    family, statistic = kind_pair(table.statistic_kind)
    start = table.start_t
    cap_rl = int(math.ceil(truncation_factor * table.arl0))
    t_cap = start - 1 + cap_rl
    h = _threshold_array(table, t_cap)
    T = _engine.run_lengths(
        family,
        statistic,
        h,
        _engine.null_model(family),
        replications,
        seed,
        t_cap,
        t0=start,
        workers=workers,
    )
    rl = np.where(T > 0, T - (start - 1), cap_rl).astype(np.float64)
    truncated = float(np.mean(T < 0))
    return CampaignResult(
        replications=replications,
        seed=seed,
        arl0=float(rl.mean()),
        arl0_se=float(rl.std(ddof=1) / math.sqrt(replications)),
        truncated_fraction=truncated,
    )


def delay_cell(
    scenario: Scenario,
    statistic: str,
    table: ThresholdTable,
    replications: int,
    seed: int,
    workers: int | None = None,
) -> CampaignResult:
    """Conditional expected delay for one change scenario and one chart."""
    family, table_stat = kind_pair(table.statistic_kind)
    if family != scenario.family or table_stat != statistic:
        raise DomainError("threshold table does not match the requested chart")
    t_cap = scenario.horizon
    h = _threshold_array(table, t_cap)
    T = _engine.run_lengths(
        family,
        statistic,
        h,
        scenario.model(),
        replications,
        seed,
        t_cap,
        t0=table.start_t,
        workers=workers,
    )
    detected = T > 0
    fp = detected & (T <= scenario.tau)
    used = detected & (T > scenario.tau)
    delays = (T[used] - scenario.tau).astype(np.float64)
    n = int(used.sum())
    return CampaignResult(
        replications=replications,
        seed=seed,
        false_positive_rate=float(fp.mean()),
        delay=float(delays.mean()) if n else None,
        delay_se=float(delays.std(ddof=1) / math.sqrt(n)) if n > 1 else None,
        n_delay=n,
        truncated_fraction=float(np.mean(~detected)),
    )


def delay_table(
    scenarios: list[Scenario],
    tables: dict[str, ThresholdTable],
    replications: int,
    seed: int,
    workers: int | None = None,
) -> list[dict]:
    """Grid of conditional delays, one row per scenario.

    ``tables`` maps the statistic name ("corrected" plus "hz" or "raw") to
    its threshold table; every chart sees the same streams per scenario.
    """
    rows = []
    for i, sc in enumerate(scenarios):
        row: dict = {"label": sc.label, "family": sc.family, "tau": sc.tau}
        for j, (stat, table) in enumerate(sorted(tables.items())):
            res = delay_cell(sc, stat, table, replications, cell_seed(seed, 1000 * i + j), workers)
            row[f"{stat}_delay"] = res.delay
            row[f"{stat}_se"] = res.delay_se
            row[f"{stat}_fp"] = res.false_positive_rate
            row[f"{stat}_n"] = res.n_delay
            row[f"{stat}_flagged"] = res.flagged
        rows.append(row)
    return rows


def bayes_cell(
    scenario: bayes.ExponentialChangeScenario,
    seg_prior: bayes.SegmentLengthPrior,
    rate_prior: bayes.GammaRatePrior,
    c: float,
    replications: int,
    seed: int,
    horizon: int,
) -> CampaignResult:
    """False-positive proportion and conditional delay of the Bayes rule."""
    T = bayes.batch_detection_times(
        scenario, seg_prior, rate_prior, c, replications, seed, horizon
    )
    detected = T > 0
    fp = detected & (T <= scenario.tau)
    used = detected & (T > scenario.tau)
    delays = (T[used] - scenario.tau).astype(np.float64)
    n = int(used.sum())
    return CampaignResult(
        replications=replications,
        seed=seed,
        false_positive_rate=float(fp.mean()),
        delay=float(delays.mean()) if n else None,
        delay_se=float(delays.std(ddof=1) / math.sqrt(n)) if n > 1 else None,
        n_delay=n,
        truncated_fraction=float(np.mean(~detected)),
    )


def bayes_comparison(
    scenario: bayes.ExponentialChangeScenario,
    seg_prior: bayes.SegmentLengthPrior,
    priors: dict[str, bayes.GammaRatePrior],
    c_grid: list[float],
    replications: int,
    seed: int,
    horizon: int = 2050,
    frequentist_arl0: float = 200,
    workers: int | None = None,
) -> list[dict]:
    """Bayes (prior x c) grid plus a corrected-Exponential frequentist row.

    The frequentist chart runs at arl0 matching the mean of the segment
    length prior (200 in the standard comparison).
    """
    rows = []
    table = shipped_table("corrected-exponential", frequentist_arl0)
    if scenario.rate_pre is None or scenario.rate_post is None:
        res = _frequentist_sampled_cell(scenario, table, replications, cell_seed(seed, 0), horizon)
    else:
        freq_scenario = Scenario(
            "exponential",
            (scenario.rate_pre,),
            (scenario.rate_post,),
            scenario.tau,
            horizon,
            label="frequentist",
        )
        res = delay_cell(freq_scenario, "corrected", table, replications, cell_seed(seed, 0), workers)
    rows.append(
        {
            "method": f"corrected-exponential arl0={frequentist_arl0:g}",
            "c": None,
            "fp": res.false_positive_rate,
            "delay": res.delay,
            "se": res.delay_se,
            "n": res.n_delay,
        }
    )
    idx = 1
    for name, prior in priors.items():
        for c in c_grid:
            res = bayes_cell(
                scenario, seg_prior, prior, c, replications, cell_seed(seed, idx), horizon
            )
            rows.append(
                {
                    "method": name,
                    "c": c,
                    "fp": res.false_positive_rate,
                    "delay": res.delay,
                    "se": res.delay_se,
                    "n": res.n_delay,
                }
            )
            idx += 1
    return rows


def _frequentist_sampled_cell(
    scenario: bayes.ExponentialChangeScenario,
    table: ThresholdTable,
    replications: int,
    seed: int,
    horizon: int,
) -> CampaignResult:
    """Frequentist chart on streams whose rates are drawn per replication.

    The chart is scale invariant, so the sampled pre-change rate is
    irrelevant under the null; the sampled post-change rate shapes the
    delay.  Streams reuse the scenario's own draw order.
    """
    from . import monitor

    h = _threshold_array(table, horizon)
    config = monitor.DetectorConfig("exponential", table, statistic="corrected")
    T = np.full(replications, -1, dtype=np.int64)
    for r in range(replications):
        xs = scenario.draw(_engine.rep_rng(seed, r), horizon)
        det = monitor.Detector(config)
        for i in range(horizon):
            rep = det.step(xs[i])
            if rep is not None:
                T[r] = rep.detection_time
                break
    detected = T > 0
    fp = detected & (T <= scenario.tau)
    used = detected & (T > scenario.tau)
    delays = (T[used] - scenario.tau).astype(np.float64)
    n = int(used.sum())
    return CampaignResult(
        replications=replications,
        seed=seed,
        false_positive_rate=float(fp.mean()),
        delay=float(delays.mean()) if n else None,
        delay_se=float(delays.std(ddof=1) / math.sqrt(n)) if n > 1 else None,
        n_delay=n,
        truncated_fraction=float(np.mean(~detected)),
    )


# Paper-style grids ---------------------------------------------------------

MEAN_SHIFTS = (0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0)
SD_SHIFTS = (1.5, 2.0, 2.5, 3.0, 0.67, 0.5, 0.4, 0.33)
RATE_SHIFTS = (1.5, 2.0, 2.5, 3.0, 0.67, 0.5, 0.4, 0.33)
CHANGE_TIMES = (25, 100)


def mean_change_scenarios(arl0: float = 500.0) -> list[Scenario]:
    horizon = lambda tau: tau + int(20 * arl0)
    return [
        Scenario("gaussian", (0.0, 1.0), (mu, 1.0), tau, horizon(tau), label=f"mu1={mu:g}")
        for tau in CHANGE_TIMES
        for mu in MEAN_SHIFTS
    ]


def variance_change_scenarios(arl0: float = 500.0) -> list[Scenario]:
    horizon = lambda tau: tau + int(20 * arl0)
    out = [
        Scenario("gaussian", (0.0, 1.0), (0.0, 1.0), tau, horizon(tau), label="sigma1=1 (null)")
        for tau in CHANGE_TIMES
    ]
    out += [
        Scenario("gaussian", (0.0, 1.0), (0.0, sd), tau, horizon(tau), label=f"sigma1={sd:g}")
        for tau in CHANGE_TIMES
        for sd in SD_SHIFTS
    ]
    return out


def rate_change_scenarios(arl0: float = 500.0) -> list[Scenario]:
    horizon = lambda tau: tau + int(20 * arl0)
    return [
        Scenario("exponential", (1.0,), (d,), tau, horizon(tau), label=f"delta={d:g}")
        for tau in CHANGE_TIMES
        for d in RATE_SHIFTS
    ]
