"""Sequential detector: per-observation scoring, thresholding, restarts.

A :class:`Detector` consumes one observation at a time.  Nothing is flagged
during the burn-in (first 20 observations by default); afterwards the
configured chart statistic is maximised over the retained splits and
compared against h_t.  On a signal the report carries both the detection
time T and the change-point estimate tau_hat (the maximising split).

Multi-change runs follow the restart protocol: all state is discarded, the
already-seen observations after tau_hat are replayed into a fresh detector,
and monitoring continues.  Because the fresh detector re-applies its
burn-in, a second change falling within burn_in observations of a restart
cannot be seen until enough new data accumulates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator

from . import exponential, gaussian
from .errors import DomainError, InputError
from .streamstats import CandidateSet

FAMILIES = ("gaussian", "exponential")
_FAMILY_STATS = {
    "gaussian": ("corrected", "hz"),
    "exponential": ("corrected", "raw"),
}
_MIN_BURN_IN = {"gaussian": 4, "exponential": 2}


@dataclass
class DetectorConfig:
    """Family, statistic kind, threshold source and run options.

    ``threshold_source`` is anything with ``h_at(t)`` and ``min_t``:
    a ThresholdTable, RegressionThreshold or FixedThreshold.  ``statistic``
    is "corrected" or the family's uncorrected chart ("hz" for Gaussian,
    "raw" for Exponential).
    """

    family: str
    threshold_source: object
    statistic: str = "corrected"
    window: int | None = None
    burn_in: int = 20
    multi_change: bool = False

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise DomainError(f"unknown family {self.family!r}")
        if self.statistic not in _FAMILY_STATS[self.family]:
            raise DomainError(
                f"statistic {self.statistic!r} is not defined for the {self.family} chart"
            )
        if self.burn_in < _MIN_BURN_IN[self.family]:
            raise DomainError(
                f"burn_in must be at least {_MIN_BURN_IN[self.family]} for {self.family}"
            )
        if self.window is not None and self.window < 8:
            raise DomainError("window must be at least 8 when set")
        if not hasattr(self.threshold_source, "h_at"):
            raise DomainError("threshold_source must provide h_at(t)")


@dataclass
class DetectionReport:
    detection_time: int
    tau_hat: int
    statistic_value: float
    threshold: float


class Detector:
    """Single-change sequential detector (one logical owner, not shareable)."""

    def __init__(self, config: DetectorConfig, offset: int = 0):
        self.config = config
        self.offset = offset
        self.candidates = CandidateSet(capacity=config.window)
        min_t = getattr(config.threshold_source, "min_t", 1)
        self._first_check = max(config.burn_in + 1, int(min_t))

    @property
    def t(self) -> int:
        """Observations seen by this detector (local count)."""
        return self.candidates.t

    def step(self, x: float) -> DetectionReport | None:
        x = float(x)
        if not math.isfinite(x):
            raise InputError(f"non-finite observation {x!r}")
        if self.config.family == "exponential" and x <= 0.0:
            raise InputError(f"Exponential monitoring needs positive data, got {x!r}")
        self.candidates.push(x)
        t = self.candidates.t
        if t < self._first_check:
            return None
        if self.config.family == "gaussian":
            scores = gaussian.corrected_scores(self.candidates)
            value, k_hat = gaussian.max_score(scores, self.config.statistic)
        else:
            scores = exponential.corrected_scores(self.candidates)
            value, k_hat = exponential.max_score(scores, self.config.statistic)
        h = float(self.config.threshold_source.h_at(t))
        if value > h:
            return DetectionReport(
                detection_time=self.offset + t,
                tau_hat=self.offset + k_hat,
                statistic_value=value,
                threshold=h,
            )
        return None


def iter_reports(stream: Iterable[float], config: DetectorConfig) -> Iterator[DetectionReport]:
    """Yield detections as they happen; stops after the first one unless
    ``config.multi_change`` is set.

    In multi-change mode each signal discards the detector, replays the
    observations after the estimated change point into a fresh one, and
    continues with the live stream.  The whole run is a pure function of
    the input sequence and the config.
    """
    det = Detector(config)
    buf: list[float] = []
    queue: list[float] = []
    pos = 0
    it = iter(stream)
    while True:
        if queue:
            x = queue.pop(0)
            from_queue = True
        else:
            try:
                x = next(it)
            except StopIteration:
                return
            pos += 1
            from_queue = False
        try:
            report = det.step(x)
        except InputError as e:
            if from_queue:
                raise  # replayed values were already validated
            raise InputError(f"stream position {pos}: {e}") from e
        buf.append(x)
        if config.window is not None and len(buf) > config.window + 2:
            del buf[0]
        if report is None:
            continue
        yield report
        if not config.multi_change:
            return
        n_replay = det.t - (report.tau_hat - det.offset)
        replay = buf[len(buf) - n_replay :]
        det = Detector(config, offset=report.tau_hat)
        buf = []
        queue = replay + queue
    return


def run(stream: Iterable[float], config: DetectorConfig) -> list[DetectionReport]:
    """Collect all detections for the stream (see :func:`iter_reports`)."""
    return list(iter_reports(stream, config))
