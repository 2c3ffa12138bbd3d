"""Threshold sequences h_t: packaged tables, regression formula, calibration.

A monitoring run compares the chart statistic at time t against h_t.  Three
sources are supported:

* :class:`ThresholdTable` -- an explicit (t, h_t) sequence.  The package
  ships tables for the in-control average run lengths 100/200/370/500/1000/
  2000/5000 for the corrected charts, plus self-calibrated 500 tables for
  the uncorrected ones (see ``glrchart/tables``).
* :func:`regression_h` -- a closed-form approximation fitted to calibrated
  corrected-Gaussian sequences.
* :class:`FixedThreshold` -- a constant, for experimentation only (it voids
  the run-length guarantee).

Calibration simulates null streams and sets h_t to the empirical (1-gamma)
quantile of the statistic among streams that have not yet signalled, so the
conditional false-alarm probability is gamma at every step and the expected
number of monitored observations before a false alarm is 1/gamma.  The raw
sequence is then exponentially smoothed to tame sampling noise.
"""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import DomainError

STATISTIC_KINDS = (
    "corrected-gaussian",
    "hz-gaussian",
    "corrected-exponential",
    "raw-exponential",
)

_KIND_BY_PAIR = {
    ("gaussian", "corrected"): "corrected-gaussian",
    ("gaussian", "hz"): "hz-gaussian",
    ("exponential", "corrected"): "corrected-exponential",
    ("exponential", "raw"): "raw-exponential",
}


def statistic_kind(family: str, statistic: str) -> str:
    """Canonical kind string for a (family, statistic) pair."""
    try:
        return _KIND_BY_PAIR[(family, statistic)]
    except KeyError:
        raise DomainError(
            f"no statistic kind for family={family!r}, statistic={statistic!r}"
        ) from None


def kind_pair(kind: str) -> tuple[str, str]:
    """Inverse of :func:`statistic_kind`."""
    for pair, name in _KIND_BY_PAIR.items():
        if name == kind:
            return pair
    raise DomainError(f"unknown statistic kind {kind!r}")


@dataclass
class ThresholdTable:
    """Per-time thresholds for one statistic kind and one target run length.

    ``entries`` must be strictly increasing in t.  Lookups between
    tabulated rows carry the last tabulated value forward, and the final
    value extends as a constant tail.
    """

    statistic_kind: str
    arl0: float
    start_t: int
    ts: np.ndarray
    hs: np.ndarray

    def __post_init__(self) -> None:
        self.ts = np.asarray(self.ts, dtype=np.int64)
        self.hs = np.asarray(self.hs, dtype=np.float64)
        if self.statistic_kind not in STATISTIC_KINDS:
            raise DomainError(f"unknown statistic kind {self.statistic_kind!r}")
        if self.arl0 < 1:
            raise DomainError("arl0 must be at least 1")
        if self.ts.size == 0 or self.ts[0] < self.start_t:
            raise DomainError("table must start at or after start_t")
        if np.any(np.diff(self.ts) <= 0):
            raise DomainError("table times must be strictly increasing")
        if np.any(self.hs <= 0) or not np.all(np.isfinite(self.hs)):
            raise DomainError("thresholds must be positive and finite")

    def lookup(self, t: int) -> float:
        if t < self.start_t:
            raise DomainError(f"monitoring starts at t={self.start_t}; got t={t}")
        i = int(np.searchsorted(self.ts, t, side="right")) - 1
        if i < 0:
            # start_t <= t < first tabulated t: extend the first entry back.
            i = 0
        return float(self.hs[i])

    def lookup_array(self, ts) -> np.ndarray:
        ts = np.asarray(ts)
        if np.any(ts < self.start_t):
            raise DomainError(f"monitoring starts at t={self.start_t}")
        idx = np.clip(np.searchsorted(self.ts, ts, side="right") - 1, 0, None)
        return self.hs[idx]

    @property
    def min_t(self) -> int:
        return int(self.start_t)

    def h_at(self, t: int) -> float:
        return self.lookup(t)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# statistic={self.statistic_kind}\n")
        arl0 = self.arl0
        buf.write(f"# arl0={arl0:g}\n")
        buf.write(f"# start_t={self.start_t}\n")
        buf.write("t,h\n")
        for t, h in zip(self.ts, self.hs):
            buf.write(f"{t},{h:.10g}\n")
        return buf.getvalue()

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> "ThresholdTable":
        meta: dict[str, str] = {}
        ts: list[int] = []
        hs: list[float] = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                meta[key.strip()] = value.strip()
                continue
            if line.lower().startswith("t,"):
                continue
            t_str, _, h_str = line.partition(",")
            ts.append(int(t_str))
            hs.append(float(h_str))
        try:
            kind = meta["statistic"]
            arl0 = float(meta["arl0"])
            start_t = int(meta["start_t"])
        except KeyError as e:
            raise DomainError(f"threshold CSV is missing header comment {e}") from None
        return cls(kind, arl0, start_t, np.array(ts), np.array(hs))

    @classmethod
    def load(cls, path) -> "ThresholdTable":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_csv(f.read())


@dataclass
class RegressionThreshold:
    """Closed-form h_t for the corrected Gaussian chart (see regression_h)."""

    gamma: float
    min_t: int = 8

    def h_at(self, t: int) -> float:
        return regression_h(self.gamma, t)


@dataclass
class FixedThreshold:
    """Constant threshold; voids any run-length guarantee."""

    h: float
    min_t: int = 1

    def h_at(self, t: int) -> float:
        return self.h


def regression_h(gamma: float, t: int) -> float:
    """Approximate corrected-Gaussian threshold for hazard gamma at time t.

    Fitted form: 1.51 - 2.39*ln(gamma) + (3.65 + 0.76*ln(gamma))/sqrt(t-7).
    Natural logarithms; defined for t >= 8.
    """
    if not 0.0 < gamma < 1.0:
        raise DomainError("gamma must lie in (0, 1)")
    if t <= 7:
        raise DomainError("regression threshold needs t >= 8")
    lg = math.log(gamma)
    return 1.51 - 2.39 * lg + (3.65 + 0.76 * lg) / math.sqrt(t - 7)


@dataclass
class CalibrationPlan:
    """Inputs for Monte Carlo threshold calibration.

    ``gamma`` is the per-step conditional false-alarm probability; the
    resulting table targets an in-control run length of 1/gamma monitored
    observations.
    """

    replications: int
    t_max: int
    gamma: float
    seed: int
    smoothing_weight: float = 0.3
    start_t: int = 21

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma <= 1.0:
            raise DomainError("gamma must lie in (0, 1]")
        if not 0.0 < self.smoothing_weight <= 1.0:
            raise DomainError("smoothing weight must lie in (0, 1]")
        if self.replications < 2:
            raise DomainError("need at least two replications")
        if self.t_max < self.start_t:
            raise DomainError("t_max must be at least start_t")

    @property
    def arl0(self) -> float:
        return 1.0 / self.gamma


def smooth_sequence(raw: np.ndarray, weight: float) -> np.ndarray:
    """Exponential smoothing seeded at the first raw value."""
    out = np.empty(len(raw), dtype=np.float64)
    acc = float(raw[0])
    out[0] = acc
    for i in range(1, len(raw)):
        acc = (1.0 - weight) * acc + weight * float(raw[i])
        out[i] = acc
    return out


def calibrate(plan: CalibrationPlan, statistic_kind: str, workers: int | None = None,
              progress: bool = False) -> ThresholdTable:
    """Monte Carlo calibration of a threshold table for one statistic kind.

    Simulates ``plan.replications`` null streams (standard normal or unit
    exponential), walks t from ``start_t`` to ``t_max`` setting h_t to the
    (1-gamma) quantile of the statistic among surviving streams, removes
    the streams that exceed it, then exponentially smooths the sequence.
    Deterministic for a fixed plan and seed.
    """
    from . import _engine

    if statistic_kind not in STATISTIC_KINDS:
        raise DomainError(f"unknown statistic kind {statistic_kind!r}")
    if plan.replications < 10 * plan.arl0:
        warnings.warn(
            f"{plan.replications} replications is low for arl0={plan.arl0:g}; "
            "10*arl0 or more is recommended",
            stacklevel=2,
        )
    family, statistic = kind_pair(statistic_kind)
    traj = _engine.null_stat_trajectories(
        family,
        statistic,
        reps=plan.replications,
        t_max=plan.t_max,
        t0=plan.start_t,
        seed=plan.seed,
        workers=workers,
        progress=progress,
    )
    raw = _engine.survivor_quantile_thresholds(traj, plan.gamma)
    hs = smooth_sequence(raw, plan.smoothing_weight)
    ts = np.arange(plan.start_t, plan.t_max + 1)
    return ThresholdTable(statistic_kind, plan.arl0, plan.start_t, ts, hs)


_SHIPPED_ARL0 = (100, 200, 370, 500, 1000, 2000, 5000)


def shipped_table(kind: str, arl0: int | float) -> ThresholdTable:
    """Load a packaged threshold table.

    Corrected charts ship tables for arl0 in {100, 200, 370, 500, 1000,
    2000, 5000}; the uncorrected charts ship arl0=500 only (calibrated with
    ``tools/generate_shipped_tables.py``).
    """
    if kind not in STATISTIC_KINDS:
        raise DomainError(f"unknown statistic kind {kind!r}")
    name = f"{kind}-arl{int(arl0)}.csv"
    ref = resources.files("glrchart.tables").joinpath(name)
    if not ref.is_file():
        raise DomainError(f"no shipped table {name}; calibrate one instead")
    return ThresholdTable.from_csv(ref.read_text(encoding="utf-8"))
