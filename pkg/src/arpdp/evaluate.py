"""Utility metrics for released series and epsilon/delta' sweeps.

The same detector, with the same parameters, labels both the raw series and
the privatized one.  Raw labels are the reference: a privatized interval is a
true positive when both series are flagged there.  Histogram releases are
reduced to scalar series with :func:`~arpdp.detect.l1_series` before detection,
and the raw reference is the L1 transform of the noiseless histograms.

Metrics with a zero denominator are undefined.  They are ``None`` in Python and
``"n/a"`` in CSV and JSON output.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, List, NamedTuple, Optional, Sequence

import numpy as np

from .degree import DEFAULT_BINS, BinSpec
from .detect import AnomalyLabels, DetectorParams, ewma_detect, l1_series
from .dp_core import PrivacyParamError
from .ingest import IntervalGraph
from .mechanisms import (
    COUNTERPART,
    HIST,
    MECHANISMS,
    ReleaseRequest,
    kind_of,
    make_params,
    release,
    statistic,
    uses_delta,
)

logger = logging.getLogger(__name__)

NA = "n/a"


class Counts(NamedTuple):
    tp: int
    fp: int
    tn: int
    fn: int


def rmse(z_star, z) -> float:
    """Root-mean-square error over all cells (histograms are flattened)."""
    a = np.asarray(z_star, dtype=float).ravel()
    b = np.asarray(z, dtype=float).ravel()
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    if a.size == 0:
        raise ValueError("rmse of empty series")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def _flags(labels):
    if isinstance(labels, AnomalyLabels):
        return [bool(v) for v in labels.labels]
    return [bool(v) for v in labels]


def confusion_counts(labels_private, labels_raw) -> Counts:
    priv, raw = _flags(labels_private), _flags(labels_raw)
    if len(priv) != len(raw):
        raise ValueError(f"length mismatch: {len(priv)} vs {len(raw)}")
    tp = sum(p and r for p, r in zip(priv, raw))
    fp = sum(p and not r for p, r in zip(priv, raw))
    fn = sum(r and not p for p, r in zip(priv, raw))
    return Counts(tp, fp, len(raw) - tp - fp - fn, fn)


def utility_scores(counts: Counts):
    """``(tpr, f1)``; either is None when its denominator is zero."""
    tp, fp, _, fn = counts
    tpr = tp / (tp + fn) if tp + fn else None
    denom = tp + 0.5 * (fp + fn)
    f1 = tp / denom if denom else None
    return tpr, f1


def utility_gain(rmse_base: float, rmse_variant: float) -> float:
    """Percent RMSE reduction of a variant over its baseline (negative means a loss)."""
    if not rmse_base > 0:
        raise ValueError(f"baseline RMSE must be > 0, got {rmse_base}")
    return 100.0 * (rmse_base - rmse_variant) / rmse_base


def detection_series(values, kind: str) -> np.ndarray:
    if kind == HIST:
        return l1_series(values)
    return np.asarray(values, dtype=float)


@dataclass
class RunResult:
    rmse: float
    counts: Counts
    tpr: Optional[float]
    f1: Optional[float]


@dataclass
class UtilityReport:
    mechanism: str
    epsilon: float
    delta_prime: Optional[float]
    rmse: Optional[float] = None
    rmse_std: Optional[float] = None
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0
    tpr: Optional[float] = None
    tpr_std: Optional[float] = None
    f1: Optional[float] = None
    f1_std: Optional[float] = None
    seeds: int = 0
    intervals: int = 0
    utility_gain: Optional[float] = None
    error: Optional[str] = None
    runs: List[RunResult] = field(default_factory=list, repr=False)

    FIELDS = ("mechanism", "epsilon", "delta_prime", "rmse", "rmse_std", "tp", "fp", "tn", "fn",
              "tpr", "tpr_std", "f1", "f1_std", "seeds", "intervals", "utility_gain", "error")

    def row(self) -> dict:
        d = asdict(self)
        return {k: d[k] for k in self.FIELDS}


def _fmt(v):
    if v is None:
        return NA
    if isinstance(v, float):
        return repr(v)
    return v


def _mean_std(values):
    vals = [v for v in values if v is not None]
    if not vals:
        return None, None
    arr = np.asarray(vals, dtype=float)
    return float(arr.mean()), float(arr.std(ddof=1)) if arr.size > 1 else 0.0


class Evaluator:
    """Runs one (graphs, detector) configuration across mechanisms and seeds.

    Raw-series labels are computed once per output kind and reused.
    """

    def __init__(self, graphs: Sequence[IntervalGraph], n: int, bin_spec: BinSpec = DEFAULT_BINS,
                 detector: DetectorParams = DetectorParams()):
        self.graphs = list(graphs)
        self.n = n
        self.bin_spec = bin_spec
        self.detector = detector
        self._raw = {}

    def raw(self, mechanism: str):
        kind = kind_of(mechanism)
        if kind not in self._raw:
            truth = statistic(self.graphs, kind, self.bin_spec)
            labels = ewma_detect(detection_series(truth, kind), self.detector)
            self._raw[kind] = (truth, labels)
        return self._raw[kind]

    def run(self, mechanism: str, epsilon: float, delta_prime: Optional[float], seed: int) -> RunResult:
        truth, raw_labels = self.raw(mechanism)
        params = make_params(mechanism, epsilon, len(self.graphs), self.n, delta_prime)
        out = release(ReleaseRequest(self.graphs, params, mechanism, self.bin_spec, seed))
        released = out.as_array()
        labels = ewma_detect(detection_series(released, out.kind), self.detector)
        counts = confusion_counts(labels, raw_labels)
        tpr, f1 = utility_scores(counts)
        return RunResult(rmse(released, truth), counts, tpr, f1)

    def report(self, mechanism: str, epsilon: float, delta_prime: Optional[float],
               seeds: Iterable[int]) -> UtilityReport:
        dp = delta_prime if uses_delta(mechanism) else None
        rep = UtilityReport(mechanism, epsilon, dp)
        try:
            runs = [self.run(mechanism, epsilon, dp, s) for s in seeds]
        except (PrivacyParamError, ValueError) as exc:
            rep.error = str(exc)
            return rep
        if not runs:
            rep.error = "no seeds"
            return rep
        rep.runs = runs
        rep.seeds = len(runs)
        rep.intervals = sum(runs[0].counts)
        rep.rmse, rep.rmse_std = _mean_std([r.rmse for r in runs])
        rep.tpr, rep.tpr_std = _mean_std([r.tpr for r in runs])
        rep.f1, rep.f1_std = _mean_std([r.f1 for r in runs])
        rep.tp, rep.fp, rep.tn, rep.fn = (sum(c) for c in zip(*(r.counts for r in runs)))
        return rep


def evaluate(graphs, mechanism, epsilon, delta_prime=None, n=None, seeds=range(20),
             bin_spec=DEFAULT_BINS, detector=DetectorParams()) -> UtilityReport:
    from .ingest import user_count

    ev = Evaluator(graphs, n if n is not None else user_count(graphs), bin_spec, detector)
    return ev.report(mechanism, epsilon, delta_prime, seeds)


def sweep(graphs: Sequence[IntervalGraph], epsilons: Sequence[float], seeds: Sequence[int],
          mechanisms: Sequence[str] = MECHANISMS, delta_primes: Sequence[float] = (0.01,),
          n: Optional[int] = None, bin_spec: BinSpec = DEFAULT_BINS,
          detector: DetectorParams = DetectorParams()) -> List[UtilityReport]:
    """One aggregated report per (mechanism, epsilon, delta') cell.

    Pure-epsilon mechanisms ignore delta' and get one cell per epsilon.  Cells
    with invalid parameters carry an ``error`` and do not stop the sweep.
    Reports for delta mechanisms get ``utility_gain`` against their pure-epsilon
    counterpart at the same epsilon when that cell is in the grid.
    """
    if not len(epsilons) or not len(seeds) or not len(mechanisms):
        raise ValueError("sweep grid is empty")
    for m in mechanisms:
        if m not in MECHANISMS:
            raise ValueError(f"unknown mechanism {m!r}")
    if any(uses_delta(m) for m in mechanisms) and not len(delta_primes):
        raise ValueError("delta mechanisms need at least one delta'")
    from .ingest import user_count

    ev = Evaluator(graphs, n if n is not None else user_count(graphs), bin_spec, detector)
    reports = []
    for m in mechanisms:
        dps = list(delta_primes) if uses_delta(m) else [None]
        for eps in epsilons:
            for dp in dps:
                rep = ev.report(m, eps, dp, seeds)
                if rep.error:
                    logger.warning("cell %s eps=%s delta'=%s: %s", m, eps, dp, rep.error)
                reports.append(rep)
    base = {(r.mechanism, r.epsilon): r for r in reports if not uses_delta(r.mechanism)}
    for r in reports:
        b = base.get((COUNTERPART.get(r.mechanism), r.epsilon))
        if b is not None and b.rmse and r.rmse is not None:
            r.utility_gain = utility_gain(b.rmse, r.rmse)
    reports.sort(key=lambda r: (r.mechanism, r.epsilon, -1.0 if r.delta_prime is None else r.delta_prime))
    return reports


def reports_to_csv(reports: Sequence[UtilityReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(UtilityReport.FIELDS)
    for r in reports:
        row = r.row()
        w.writerow([_fmt(row[k]) for k in UtilityReport.FIELDS])
    return buf.getvalue()


def reports_to_json(reports: Sequence[UtilityReport], meta: Optional[dict] = None) -> str:
    rows = [{k: (NA if v is None and k not in ("delta_prime", "error") else v) for k, v in r.row().items()}
            for r in reports]
    return json.dumps({"meta": meta or {}, "reports": rows}, indent=2, sort_keys=True) + "\n"


def plot_data_csv(reports: Sequence[UtilityReport]) -> str:
    """Tidy long-format rows: mechanism, epsilon, delta_prime, metric, value."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["mechanism", "epsilon", "delta_prime", "metric", "value"])
    for r in reports:
        for metric in ("rmse", "rmse_std", "tpr", "f1", "utility_gain"):
            v = getattr(r, metric)
            if v is None or (isinstance(v, float) and math.isnan(v)):
                continue
            w.writerow([r.mechanism, repr(float(r.epsilon)), _fmt(r.delta_prime), metric, repr(float(v))])
    return buf.getvalue()
