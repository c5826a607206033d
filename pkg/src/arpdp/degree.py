"""Per-user out-degrees, interval degree sums and degree histograms."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .ingest import IntervalGraph


@dataclass(frozen=True)
class BinSpec:
    """Ordered, disjoint inclusive degree ranges; ``None`` as an upper bound means unbounded."""

    boundaries: Tuple[Tuple[int, Optional[int]], ...] = ((1, 1), (2, 2), (3, None))

    def __post_init__(self):
        bounds = tuple((int(lo), None if hi is None else int(hi)) for lo, hi in self.boundaries)
        if not bounds:
            raise ValueError("BinSpec needs at least one bin")
        prev_hi = -1
        for i, (lo, hi) in enumerate(bounds):
            if lo < 0:
                raise ValueError(f"bin {i}: negative lower bound {lo}")
            if hi is not None and hi < lo:
                raise ValueError(f"bin {i}: upper bound {hi} below lower bound {lo}")
            if lo <= prev_hi:
                raise ValueError(f"bin {i} overlaps or is out of order")
            if hi is None and i != len(bounds) - 1:
                raise ValueError("only the last bin may be unbounded")
            prev_hi = hi if hi is not None else lo
        object.__setattr__(self, "boundaries", bounds)

    @property
    def labels(self) -> List[str]:
        out = []
        for lo, hi in self.boundaries:
            if hi is None:
                out.append(f"{lo}+")
            elif hi == lo:
                out.append(str(lo))
            else:
                out.append(f"{lo}-{hi}")
        return out

    def __len__(self):
        return len(self.boundaries)

    def bin_of(self, degree: int) -> Optional[int]:
        for i, (lo, hi) in enumerate(self.boundaries):
            if degree >= lo and (hi is None or degree <= hi):
                return i
        return None

    @classmethod
    def parse(cls, text: str) -> "BinSpec":
        """Parse a label list such as ``"1,2,3+"`` or ``"1-2,3-5,6+"``."""
        bounds = []
        for part in text.split(","):
            part = part.strip()
            m = re.fullmatch(r"(\d+)(?:(\+)|-(\d+))?", part)
            if not m:
                raise ValueError(f"bad bin {part!r}; expected N, N-M or N+")
            lo = int(m.group(1))
            if m.group(2):
                hi = None
            elif m.group(3):
                hi = int(m.group(3))
            else:
                hi = lo
            bounds.append((lo, hi))
        return cls(tuple(bounds))


DEFAULT_BINS = BinSpec()


@dataclass(frozen=True)
class DegreeVector:
    interval: int
    degrees: Dict[str, int]


@dataclass(frozen=True)
class DegreeHistogram:
    interval: int
    bins: Tuple[Tuple[str, int], ...]
    binning: BinSpec

    @property
    def counts(self) -> List[int]:
        return [c for _, c in self.bins]


def degree_vector(g: IntervalGraph) -> DegreeVector:
    out = Counter(s for s, _ in g.edges)
    return DegreeVector(g.index, {u: out.get(u, 0) for u in g.users})


def degree_sum(g: IntervalGraph) -> int:
    # Simple graph, so the total out-degree is the edge count.
    return len(g.edges)


def degree_histogram(g: IntervalGraph, spec: BinSpec = DEFAULT_BINS) -> DegreeHistogram:
    counts = [0] * len(spec)
    for d in degree_vector(g).degrees.values():
        b = spec.bin_of(d)
        if b is not None:
            counts[b] += 1
    return DegreeHistogram(g.index, tuple(zip(spec.labels, counts)), spec)


def degree_sums(graphs: Sequence[IntervalGraph]) -> List[int]:
    return [degree_sum(g) for g in graphs]


def histogram_rows(graphs: Sequence[IntervalGraph], spec: BinSpec = DEFAULT_BINS) -> List[List[int]]:
    return [degree_histogram(g, spec).counts for g in graphs]


def histograms_to_csv(hists: Sequence[DegreeHistogram]) -> str:
    lines = ["interval,bin_label,count"]
    for h in hists:
        lines.extend(f"{h.interval},{label},{count}" for label, count in h.bins)
    return "\n".join(lines) + "\n"
