"""Noise samplers, privacy accounting and the threshold-then-round post-processing step.

Budget conversions between (epsilon, delta)-DP and rho-zCDP:

    epsilon = rho + 2 * sqrt(rho * log(1/delta))
    rho     = (sqrt(log(1/delta) + epsilon) - sqrt(log(1/delta)))**2

All logarithms are natural.  Composition over ``t`` intervals is not tracked by a
generic accountant: the release mechanisms split the budget evenly, which gives a
Laplace scale of ``t / epsilon`` or a Gaussian variance of ``t / (2 * rho)`` per
interval (unit sensitivity).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

EDGE = "edge"
NODE = "node"
NOTIONS = (EDGE, NODE)

_TWO_53 = float(2**53)


class PrivacyParamError(ValueError):
    """Raised when privacy parameters violate their domain."""


@dataclass(frozen=True)
class PrivacyParams:
    epsilon: float
    t: int
    notion: str
    n: int
    delta_prime: Optional[float] = None

    def __post_init__(self):
        if not (isinstance(self.epsilon, (int, float)) and self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise PrivacyParamError(f"epsilon must be a positive finite number, got {self.epsilon!r}")
        if self.delta_prime is not None and not (0.0 < self.delta_prime < 1.0):
            raise PrivacyParamError(f"delta_prime must lie in (0, 1), got {self.delta_prime!r}")
        if int(self.t) != self.t or self.t < 1:
            raise PrivacyParamError(f"t must be an integer >= 1, got {self.t!r}")
        if int(self.n) != self.n or self.n < 1:
            raise PrivacyParamError(f"n must be an integer >= 1, got {self.n!r}")
        if self.notion not in NOTIONS:
            raise PrivacyParamError(f"notion must be one of {NOTIONS}, got {self.notion!r}")


@dataclass(frozen=True)
class DerivedBudget:
    """Per-run quantities derived from :class:`PrivacyParams`.

    ``per_interval_scale`` is the Laplace scale ``b`` for pure-DP releases and the
    Gaussian standard deviation for zCDP releases.  ``delta`` and ``rho`` are 0 for
    pure-DP releases.
    """

    delta: float
    rho: float
    per_interval_scale: float


def _check_rng(rng):
    if not isinstance(rng, np.random.Generator):
        raise TypeError(f"rng must be a numpy.random.Generator, got {type(rng).__name__}")


def _open_uniform(rng: np.random.Generator, size=None):
    # 53 random bits mapped to the open interval (0, 1), symmetric about 1/2.
    bits = rng.integers(0, 2**53, size=size, dtype=np.int64)
    return (bits + 0.5) / _TWO_53


def sample_laplace(scale: float, rng: np.random.Generator, size=None):
    """Draw from Laplace(0, scale) by inverting the CDF.

    Returns a float when ``size`` is None, otherwise an ndarray of that shape.
    """
    if not scale > 0 or not math.isfinite(scale):
        raise PrivacyParamError(f"Laplace scale must be positive and finite, got {scale!r}")
    _check_rng(rng)
    v = _open_uniform(rng, size) - 0.5
    x = -scale * np.sign(v) * np.log1p(-2.0 * np.abs(v))
    return float(x) if size is None else x


def sample_gaussian(std: float, rng: np.random.Generator, size=None):
    """Draw from N(0, std**2)."""
    if not std > 0 or not math.isfinite(std):
        raise PrivacyParamError(f"Gaussian std must be positive and finite, got {std!r}")
    _check_rng(rng)
    x = std * rng.standard_normal(size)
    return float(x) if size is None else x


def _check_delta(delta):
    if not (0.0 < delta < 1.0):
        raise PrivacyParamError(f"delta must lie in (0, 1), got {delta!r}")


def rho_from_eps_delta(epsilon: float, delta: float) -> float:
    """Largest zCDP parameter rho whose guarantee implies (epsilon, delta)-DP."""
    if not epsilon > 0:
        raise PrivacyParamError(f"epsilon must be positive, got {epsilon!r}")
    _check_delta(delta)
    L = math.log(1.0 / delta)
    # (sqrt(L + e) - sqrt(L))**2 == e**2 / (sqrt(L + e) + sqrt(L))**2, which avoids
    # cancellation when epsilon << L.
    return epsilon**2 / (math.sqrt(L + epsilon) + math.sqrt(L)) ** 2


def eps_from_rho_delta(rho: float, delta: float) -> float:
    """epsilon such that rho-zCDP implies (epsilon, delta)-DP."""
    if not rho >= 0:
        raise PrivacyParamError(f"rho must be non-negative, got {rho!r}")
    _check_delta(delta)
    return rho + 2.0 * math.sqrt(rho * math.log(1.0 / delta))


def delta_from_prime(delta_prime: float, notion: str, n: int) -> float:
    """Scale delta_prime down by the number of protected units.

    Node privacy protects ``n`` users; edge privacy protects roughly ``n**2``
    possible directed edges.
    """
    if not (0.0 < delta_prime < 1.0):
        raise PrivacyParamError(f"delta_prime must lie in (0, 1), got {delta_prime!r}")
    if n < 1:
        raise PrivacyParamError(f"n must be >= 1, got {n!r}")
    if notion == NODE:
        return delta_prime / n
    if notion == EDGE:
        return delta_prime / (n * n)
    raise PrivacyParamError(f"unknown notion {notion!r}")


def laplace_budget(params: PrivacyParams, sensitivity: float = 1.0) -> DerivedBudget:
    return DerivedBudget(delta=0.0, rho=0.0, per_interval_scale=sensitivity * params.t / params.epsilon)


def gaussian_budget(params: PrivacyParams, sensitivity: float = 1.0) -> DerivedBudget:
    if params.delta_prime is None:
        raise PrivacyParamError("delta_prime is required for (epsilon, delta) releases")
    delta = delta_from_prime(params.delta_prime, params.notion, params.n)
    rho = rho_from_eps_delta(params.epsilon, delta)
    std = sensitivity * math.sqrt(params.t / (2.0 * rho))
    return DerivedBudget(delta=delta, rho=rho, per_interval_scale=std)


def threshold_round(x):
    """Clamp non-positive values to 0, round the rest to the nearest integer.

    Ties round half away from zero.  Accepts a scalar (returns ``int``) or an
    array (returns an ``int64`` ndarray).
    """
    arr = np.asarray(x, dtype=float)
    if np.isnan(arr).any():
        raise ValueError("cannot round NaN")
    out = np.where(arr > 0, np.floor(arr + 0.5), 0.0).astype(np.int64)
    if arr.ndim == 0:
        return int(out)
    return out
