"""The four release mechanisms for interval degree data.

=================  ======================  ===============  ======================
mechanism          statistic               noise            guarantee
=================  ======================  ===============  ======================
naive              degree sum              Laplace(t/eps)   eps-edge-DP
histogram          degree histogram        Laplace(t/eps)   eps-node-DP
naive_delta        degree sum              N(0, t/2rho)     (eps, delta)-edge-DP
histogram_delta    degree histogram        N(0, t/2rho)     (eps, delta)-node-DP
=================  ======================  ===============  ======================

Every noisy value is passed through :func:`~arpdp.dp_core.threshold_round`.

Noise for interval ``j`` comes from its own generator, seeded from
``SeedSequence(seed, spawn_key=(j,))``; within an interval, histogram bins draw in
bin order.  A release is therefore a pure function of (graphs, params, seed).

Each call spends the whole budget.  Releasing the same users again composes, so
two runs at ``eps`` cost ``2 * eps``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .degree import DEFAULT_BINS, BinSpec, degree_sums, histogram_rows
from .dp_core import (
    EDGE,
    NODE,
    DerivedBudget,
    PrivacyParamError,
    PrivacyParams,
    gaussian_budget,
    laplace_budget,
    sample_gaussian,
    sample_laplace,
    threshold_round,
)
from .ingest import IntervalGraph, graphs_digest

NAIVE = "naive"
HISTOGRAM = "histogram"
NAIVE_DELTA = "naive_delta"
HISTOGRAM_DELTA = "histogram_delta"
MECHANISMS = (NAIVE, HISTOGRAM, NAIVE_DELTA, HISTOGRAM_DELTA)
# Degree sum under node privacy: sensitivity n, so Laplace(t*n/eps).  Only for
# demonstrating why it is unusable.
NAIVE_NODE = "naive_node"

NOTION_OF = {
    NAIVE: EDGE,
    NAIVE_DELTA: EDGE,
    HISTOGRAM: NODE,
    HISTOGRAM_DELTA: NODE,
    NAIVE_NODE: NODE,
}
COUNTERPART = {NAIVE_DELTA: NAIVE, HISTOGRAM_DELTA: HISTOGRAM}

SCALAR = "scalar"
HIST = "histogram"


def kind_of(mechanism: str) -> str:
    return HIST if mechanism in (HISTOGRAM, HISTOGRAM_DELTA) else SCALAR


def uses_delta(mechanism: str) -> bool:
    return mechanism in (NAIVE_DELTA, HISTOGRAM_DELTA)


def make_params(mechanism: str, epsilon: float, t: int, n: int,
                delta_prime: Optional[float] = None) -> PrivacyParams:
    """PrivacyParams with the notion implied by ``mechanism``."""
    if mechanism not in NOTION_OF:
        raise PrivacyParamError(f"unknown mechanism {mechanism!r}")
    return PrivacyParams(epsilon=epsilon, t=t, notion=NOTION_OF[mechanism], n=n,
                         delta_prime=delta_prime if uses_delta(mechanism) else None)


@dataclass(frozen=True)
class ReleaseRequest:
    graphs: Sequence[IntervalGraph]
    params: PrivacyParams
    mechanism: str
    bin_spec: BinSpec = DEFAULT_BINS
    seed: int = 0
    allow_infeasible: bool = False

    def __post_init__(self):
        m = self.mechanism
        if m == NAIVE_NODE and not self.allow_infeasible:
            raise PrivacyParamError("naive_node adds Laplace(t*n/eps) noise; pass allow_infeasible=True to use it")
        if m not in NOTION_OF:
            raise PrivacyParamError(f"unknown mechanism {m!r}; expected one of {MECHANISMS}")
        if self.params.notion != NOTION_OF[m]:
            raise PrivacyParamError(
                f"mechanism {m} protects {NOTION_OF[m]} privacy but params.notion is {self.params.notion}")
        if uses_delta(m) and self.params.delta_prime is None:
            raise PrivacyParamError(f"mechanism {m} requires delta_prime")
        if len(self.graphs) != self.params.t:
            raise PrivacyParamError(f"got {len(self.graphs)} interval graphs but t={self.params.t}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise PrivacyParamError(f"seed must be a non-negative integer, got {self.seed!r}")


@dataclass(frozen=True)
class ReleasedSeries:
    kind: str
    values: List[Any]
    params_echo: Dict[str, Any] = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if self.kind == SCALAR:
            w.writerow(["interval", "value"])
            for j, v in enumerate(self.values, start=1):
                w.writerow([j, v])
        else:
            k = len(self.values[0]) if self.values else len(self.params_echo.get("bin_labels", []))
            w.writerow(["interval"] + [f"bin_{i}" for i in range(1, k + 1)])
            for j, row in enumerate(self.values, start=1):
                w.writerow([j] + list(row))
        return buf.getvalue()

    def params_json(self) -> str:
        return json.dumps(self.params_echo, indent=2, sort_keys=True) + "\n"

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.int64)


def read_series_csv(text: str):
    """Parse a released (or raw) series CSV back to ``(kind, values)``."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ValueError("empty series file")
    header = rows[0]
    if header[:1] != ["interval"] or len(header) < 2:
        raise ValueError(f"unrecognised series header {header!r}")
    body = [r for r in rows[1:] if r]
    try:
        if header == ["interval", "value"]:
            return SCALAR, [int(r[1]) for r in body]
        return HIST, [[int(c) for c in r[1:]] for r in body]
    except (ValueError, IndexError) as exc:
        raise ValueError(f"malformed series row: {exc}") from None


def interval_rng(seed: int, j: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(j,)))


def derive_budget(req: ReleaseRequest) -> DerivedBudget:
    if uses_delta(req.mechanism):
        return gaussian_budget(req.params)
    if req.mechanism == NAIVE_NODE:
        return laplace_budget(req.params, sensitivity=req.params.n)
    return laplace_budget(req.params)


def statistic(graphs: Sequence[IntervalGraph], kind: str, bin_spec: BinSpec = DEFAULT_BINS) -> np.ndarray:
    """The non-private statistic: shape (t,) of degree sums or (t, k) of bin counts."""
    if kind == SCALAR:
        return np.asarray(degree_sums(graphs), dtype=np.int64)
    return np.asarray(histogram_rows(graphs, bin_spec), dtype=np.int64).reshape(len(graphs), len(bin_spec))


def true_values(req: ReleaseRequest) -> np.ndarray:
    return statistic(req.graphs, kind_of(req.mechanism), req.bin_spec)


def _sampler(mechanism):
    return sample_gaussian if uses_delta(mechanism) else sample_laplace


def _echo(req: ReleaseRequest, budget: DerivedBudget) -> Dict[str, Any]:
    p = req.params
    hist = kind_of(req.mechanism) == HIST
    return {
        "version": __version__,
        "mechanism": req.mechanism,
        "kind": kind_of(req.mechanism),
        "notion": p.notion,
        "epsilon": p.epsilon,
        "delta_prime": p.delta_prime,
        "delta": budget.delta if uses_delta(req.mechanism) else None,
        "rho": budget.rho if uses_delta(req.mechanism) else None,
        "noise": "gaussian" if uses_delta(req.mechanism) else "laplace",
        "per_interval_scale": budget.per_interval_scale,
        "t": p.t,
        "n": p.n,
        "seed": int(req.seed),
        "bin_spec": ",".join(req.bin_spec.labels) if hist else None,
        "bin_labels": req.bin_spec.labels if hist else None,
        "allow_infeasible": req.allow_infeasible,
        "input_sha256": graphs_digest(req.graphs),
    }


def _release(req: ReleaseRequest, expected: Sequence[str]) -> ReleasedSeries:
    if req.mechanism not in expected:
        raise PrivacyParamError(f"this entry point handles {expected}, got mechanism={req.mechanism!r}")
    budget = derive_budget(req)
    sample = _sampler(req.mechanism)
    truth = true_values(req)
    values = []
    for j in range(1, req.params.t + 1):
        rng = interval_rng(req.seed, j)
        row = truth[j - 1]
        if row.ndim == 0:
            values.append(threshold_round(row + sample(budget.per_interval_scale, rng)))
        else:
            noise = sample(budget.per_interval_scale, rng, size=row.shape[0])
            values.append([int(v) for v in threshold_round(row + noise)])
    return ReleasedSeries(kind_of(req.mechanism), values, _echo(req, budget))


def release_naive(req: ReleaseRequest) -> ReleasedSeries:
    """Noisy degree sum per interval with Laplace(t/eps) noise; eps-edge-DP."""
    return _release(req, (NAIVE,))


def release_histogram(req: ReleaseRequest) -> ReleasedSeries:
    """Noisy degree histogram per interval, Laplace(t/eps) on each bin; eps-node-DP."""
    return _release(req, (HISTOGRAM,))


def release_naive_delta(req: ReleaseRequest) -> ReleasedSeries:
    return _release(req, (NAIVE_DELTA,))


def release_histogram_delta(req: ReleaseRequest) -> ReleasedSeries:
    return _release(req, (HISTOGRAM_DELTA,))


def release_naive_node(req: ReleaseRequest) -> ReleasedSeries:
    """Degree sums at node privacy with Laplace(t*n/eps) noise.  Demonstration only."""
    return _release(req, (NAIVE_NODE,))


_DISPATCH = {
    NAIVE: release_naive,
    HISTOGRAM: release_histogram,
    NAIVE_DELTA: release_naive_delta,
    HISTOGRAM_DELTA: release_histogram_delta,
    NAIVE_NODE: release_naive_node,
}


def release(req: ReleaseRequest) -> ReleasedSeries:
    return _DISPATCH[req.mechanism](req)


def simulate_releases(req: ReleaseRequest, runs: int, seed: Optional[int] = None) -> np.ndarray:
    """Vectorised Monte-Carlo replicas of ``release(req)``.

    Draws ``runs`` independent outputs from one generator seeded by ``seed``
    (default ``req.seed``).  Each replica has the distribution of a single
    release; individual replicas do not coincide with ``release`` for any
    particular seed.  Shape is ``(runs, t)`` or ``(runs, t, k)``.
    """
    budget = derive_budget(req)
    truth = true_values(req)
    rng = np.random.default_rng(req.seed if seed is None else seed)
    noise = _sampler(req.mechanism)(budget.per_interval_scale, rng, size=(runs,) + truth.shape)
    return threshold_round(truth[None, ...] + noise)


def request_from_echo(echo: Dict[str, Any], graphs: Sequence[IntervalGraph]) -> ReleaseRequest:
    """Rebuild the request recorded in a params echo, checking the input digest."""
    digest = graphs_digest(graphs)
    if echo.get("input_sha256") not in (None, digest):
        raise ValueError("input graphs do not match the digest recorded in the params echo")
    mech = echo["mechanism"]
    params = PrivacyParams(epsilon=echo["epsilon"], t=echo["t"], notion=echo["notion"], n=echo["n"],
                           delta_prime=echo.get("delta_prime"))
    spec = BinSpec.parse(echo["bin_spec"]) if echo.get("bin_spec") else DEFAULT_BINS
    return ReleaseRequest(list(graphs), params, mech, spec, echo["seed"],
                          allow_infeasible=bool(echo.get("allow_infeasible", False)))


def replay(echo: Dict[str, Any], graphs: Sequence[IntervalGraph]) -> ReleasedSeries:
    return release(request_from_echo(echo, graphs))
