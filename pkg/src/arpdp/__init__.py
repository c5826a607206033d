"""Differentially private release of LAN ARP-request degree data."""

__version__ = "0.1.0"

from .degree import DEFAULT_BINS, BinSpec, degree_histogram, degree_sum, degree_vector  # noqa: E402
from .detect import DetectorParams, ewma_detect, l1_series  # noqa: E402
from .dp_core import (  # noqa: E402
    PrivacyParams,
    delta_from_prime,
    eps_from_rho_delta,
    rho_from_eps_delta,
    sample_gaussian,
    sample_laplace,
    threshold_round,
)
from .ingest import ArpEvent, CaptureConfig, IntervalGraph, bucket_intervals, parse_events, synth_scenario  # noqa: E402
from .mechanisms import MECHANISMS, ReleaseRequest, ReleasedSeries, make_params, release, replay  # noqa: E402
from .evaluate import UtilityReport, evaluate, sweep  # noqa: E402

__all__ = [
    "ArpEvent", "BinSpec", "CaptureConfig", "DEFAULT_BINS", "DetectorParams", "IntervalGraph",
    "MECHANISMS", "PrivacyParams", "ReleaseRequest", "ReleasedSeries", "UtilityReport", "bucket_intervals",
    "degree_histogram", "degree_sum", "degree_vector", "delta_from_prime", "eps_from_rho_delta", "evaluate",
    "ewma_detect", "l1_series", "make_params", "parse_events", "release", "replay", "rho_from_eps_delta",
    "sample_gaussian", "sample_laplace", "sweep", "synth_scenario", "threshold_round",
]
