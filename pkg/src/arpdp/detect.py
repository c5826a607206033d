"""EWMA/EWMV control-chart detector and the L1 transform for histogram series.

The detector tracks an exponentially weighted mean ``m`` and variance ``v``::

    m_i = lam * x_i + (1 - lam) * m_{i-1}
    v_i = lam * (x_i - m_{i-1})**2 + (1 - lam) * v_{i-1}

starting from ``m_0 = x_1`` and ``v_0 = 0``.  Interval ``i`` is flagged when
``i > warmup`` and ``|x_i - m_{i-1}| > k * sqrt(max(v_{i-1}, var_floor))``.
The test is two-sided.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np


@dataclass(frozen=True)
class DetectorParams:
    lam: float = 0.25
    k: float = 3.0
    warmup: int = 4
    var_floor: float = 1e-6

    def __post_init__(self):
        if not 0 < self.lam <= 1:
            raise ValueError(f"lambda must lie in (0, 1], got {self.lam}")
        if not self.k >= 0:
            raise ValueError(f"k must be >= 0, got {self.k}")
        if self.warmup < 1:
            raise ValueError(f"warmup must be >= 1, got {self.warmup}")
        if not self.var_floor > 0:
            raise ValueError(f"var_floor must be > 0, got {self.var_floor}")


@dataclass(frozen=True)
class AnomalyLabels:
    labels: List[bool]
    scores: List[float]

    def __len__(self):
        return len(self.labels)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["interval", "score", "flag"])
        for i, (s, f) in enumerate(zip(self.scores, self.labels), start=1):
            w.writerow([i, repr(float(s)), int(f)])
        return buf.getvalue()


def l1_series(hist) -> np.ndarray:
    """L1 distance between consecutive histogram rows; length ``t - 1``."""
    try:
        arr = np.asarray(hist, dtype=float)
    except ValueError:
        raise ValueError("histogram rows have mismatched arity") from None
    if arr.ndim != 2:
        raise ValueError("histogram rows have mismatched arity" if arr.dtype == object else
                         f"expected a 2-D (t, bins) series, got shape {arr.shape}")
    if arr.shape[0] < 2:
        raise ValueError("need at least two histograms")
    return np.abs(np.diff(arr, axis=0)).sum(axis=1)


def ewma_detect(series: Sequence[float], p: DetectorParams = DetectorParams()) -> AnomalyLabels:
    x = [float(v) for v in series]
    if not x:
        raise ValueError("cannot run the detector on an empty series")
    m, v = x[0], 0.0
    labels, scores = [], []
    for i, xi in enumerate(x, start=1):
        dev = abs(xi - m)
        sd = math.sqrt(max(v, p.var_floor))
        scores.append(dev / sd)
        labels.append(i > p.warmup and dev > p.k * sd)
        v = p.lam * (xi - m) ** 2 + (1 - p.lam) * v
        m = p.lam * xi + (1 - p.lam) * m
    return AnomalyLabels(labels, scores)
