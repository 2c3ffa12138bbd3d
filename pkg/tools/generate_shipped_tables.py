"""Regenerate the threshold tables packaged under src/glrchart/tables/.

Two kinds of files are produced:

* corrected-gaussian / corrected-exponential tables for seven standard
  in-control run lengths: fixed reference data, written verbatim.
* hz-gaussian / raw-exponential tables at arl0=500: Monte Carlo calibrated
  here (deterministic for the seed below).  This is the slow part; expect
  on the order of an hour at the default replication count.

Run from the repository root:

    python tools/generate_shipped_tables.py [--transcribed-only] [--reps N]
"""

from __future__ import annotations

import argparse
import pathlib
import sys
import time

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from glrchart.thresholds import CalibrationPlan, ThresholdTable, calibrate  # noqa: E402

OUT_DIR = pathlib.Path(__file__).resolve().parents[1] / "src" / "glrchart" / "tables"

ARL0_COLUMNS = (100, 200, 370, 500, 1000, 2000, 5000)
ROW_TIMES = (21, 22, 23, 24, 25, 26, 27, 28, 29, 30, 50, 60, 80, 100, 200, 300, 400, 500, 600, 700, 800)

# Reference corrected-chart thresholds, one row per time in ROW_TIMES and one
# column per run length in ARL0_COLUMNS.
GAUSSIAN_CORRECTED = [
    (13.2, 14.8, 16.1, 16.8, 18.1, 19.7, 21.5),
    (13.1, 14.7, 16.0, 16.7, 18.0, 19.6, 21.5),
    (13.0, 14.6, 15.9, 16.6, 18.0, 19.6, 21.4),
    (12.9, 14.5, 15.8, 16.5, 17.9, 19.5, 21.4),
    (12.8, 14.3, 15.7, 16.4, 17.8, 19.4, 21.3),
    (12.7, 14.3, 15.7, 16.3, 17.8, 19.3, 21.2),
    (12.6, 14.2, 15.6, 16.2, 17.7, 19.2, 21.2),
    (12.5, 14.1, 15.5, 16.2, 17.6, 19.2, 21.1),
    (12.5, 14.1, 15.5, 16.2, 17.6, 19.2, 21.0),
    (12.4, 14.0, 15.5, 16.2, 17.6, 19.2, 21.0),
    (12.3, 13.9, 15.4, 16.1, 17.7, 19.3, 21.2),
    (12.4, 14.0, 15.5, 16.2, 17.8, 19.3, 21.3),
    (12.3, 14.1, 15.5, 16.2, 17.8, 19.4, 21.4),
    (12.4, 14.1, 15.5, 16.3, 17.9, 19.4, 21.6),
    (12.4, 14.1, 15.6, 16.4, 18.0, 19.6, 21.6),
    (12.4, 14.1, 15.7, 16.4, 18.0, 19.6, 21.5),
    (12.1, 14.0, 15.6, 16.3, 18.0, 19.7, 21.8),
    (12.2, 14.2, 15.7, 16.4, 18.0, 19.6, 21.7),
    (12.3, 14.1, 15.6, 16.4, 18.1, 19.7, 21.8),
    (12.3, 14.3, 15.6, 16.4, 18.0, 19.6, 21.7),
    (12.3, 14.1, 15.6, 16.3, 18.0, 19.6, 21.7),
]

EXPONENTIAL_CORRECTED = [
    (5.2, 5.9, 6.5, 6.8, 7.4, 8.0, 8.9),
    (5.1, 5.8, 6.4, 6.7, 7.3, 7.9, 8.8),
    (5.0, 5.6, 6.2, 6.5, 7.2, 7.8, 8.7),
    (4.8, 5.5, 6.1, 6.4, 7.1, 7.7, 8.6),
    (4.7, 5.4, 6.0, 6.3, 7.0, 7.7, 8.5),
    (4.6, 5.3, 5.9, 6.2, 6.9, 7.6, 8.4),
    (4.5, 5.2, 5.8, 6.1, 6.8, 7.5, 8.4),
    (4.4, 5.1, 5.8, 6.1, 6.7, 7.4, 8.3),
    (4.4, 5.1, 5.7, 6.0, 6.7, 7.4, 8.3),
    (4.3, 5.0, 5.7, 6.0, 6.7, 7.4, 8.3),
    (4.0, 4.8, 5.5, 5.8, 6.5, 7.2, 8.2),
    (4.0, 4.8, 5.5, 5.8, 6.5, 7.3, 8.2),
    (4.0, 4.8, 5.5, 5.8, 6.6, 7.3, 8.2),
    (4.1, 4.9, 5.6, 5.9, 6.6, 7.4, 8.3),
    (4.1, 4.9, 5.6, 5.9, 6.7, 7.4, 8.4),
    (4.0, 4.9, 5.6, 5.9, 6.6, 7.4, 8.4),
    (4.1, 4.8, 5.5, 5.9, 6.7, 7.5, 8.4),
    (4.1, 4.9, 5.5, 5.9, 6.7, 7.4, 8.4),
    (4.1, 4.8, 5.6, 5.9, 6.7, 7.5, 8.4),
    (4.1, 4.9, 5.5, 5.9, 6.7, 7.4, 8.4),
    (4.1, 4.8, 5.6, 5.9, 6.7, 7.4, 8.4),
]

CALIBRATION_SEED = 20260809
CALIBRATION_TMAX = 800


def write_transcribed() -> None:
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    grids = {
        "corrected-gaussian": GAUSSIAN_CORRECTED,
        "corrected-exponential": EXPONENTIAL_CORRECTED,
    }
    for kind, grid in grids.items():
        for j, arl0 in enumerate(ARL0_COLUMNS):
            hs = np.array([row[j] for row in grid])
            table = ThresholdTable(kind, float(arl0), 21, np.array(ROW_TIMES), hs)
            path = OUT_DIR / f"{kind}-arl{arl0}.csv"
            table.save(path)
            print(f"wrote {path}")


def write_calibrated(reps: int, workers: int | None) -> None:
    for kind in ("hz-gaussian", "raw-exponential"):
        plan = CalibrationPlan(
            replications=reps,
            t_max=CALIBRATION_TMAX,
            gamma=1.0 / 500.0,
            seed=CALIBRATION_SEED,
        )
        start = time.time()
        table = calibrate(plan, kind, workers=workers, progress=True)
        path = OUT_DIR / f"{kind}-arl500.csv"
        table.save(path)
        print(f"wrote {path} ({time.time() - start:.0f}s)")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--transcribed-only", action="store_true")
    ap.add_argument("--reps", type=int, default=200_000)
    ap.add_argument("--workers", type=int, default=2)
    args = ap.parse_args()
    write_transcribed()
    if not args.transcribed_only:
        write_calibrated(args.reps, args.workers)


if __name__ == "__main__":
    main()
