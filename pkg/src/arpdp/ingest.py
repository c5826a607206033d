"""ARP event parsing, interval bucketing and synthetic LAN scenarios.

Input is a CSV of pre-extracted ARP request triples ``timestamp,source,destination``
(header optional).  Each interval becomes a simple directed graph: repeated
requests to the same destination collapse to one edge and self-requests carry no
edge.
"""

from __future__ import annotations

import csv
import hashlib
import hmac
import io
import logging
import warnings
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)

WEEK_SECONDS = 7 * 24 * 3600

ABORT = "abort"
SKIP = "skip"


class MalformedLineError(ValueError):
    def __init__(self, lineno: int, line: str, reason: str):
        super().__init__(f"line {lineno}: {reason}: {line!r}")
        self.lineno = lineno
        self.line = line
        self.reason = reason


class MalformedLineWarning(UserWarning):
    pass


class DroppedEventsWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ArpEvent:
    timestamp: int
    source: str
    destination: str


@dataclass(frozen=True)
class IntervalGraph:
    index: int
    edges: frozenset = frozenset()
    users: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "edges", frozenset(self.edges))
        object.__setattr__(self, "users", frozenset(self.users))
        for s, d in self.edges:
            if s == d:
                raise ValueError(f"self-loop {s!r} in interval {self.index}")
            if s not in self.users or d not in self.users:
                raise ValueError(f"edge ({s!r}, {d!r}) has an endpoint outside users")

    @classmethod
    def from_edges(cls, index: int, edges: Iterable[Tuple[str, str]], users: Iterable[str] = ()):
        edges = frozenset((s, d) for s, d in edges if s != d)
        nodes = set(users)
        for s, d in edges:
            nodes.add(s)
            nodes.add(d)
        return cls(index, edges, frozenset(nodes))


@dataclass(frozen=True)
class CaptureConfig:
    t: int
    interval_length: int = WEEK_SECONDS
    pseudonymize: bool = False
    pseudonym_key: bytes = field(default=b"", repr=False)
    origin: int = 0

    def __post_init__(self):
        if self.t < 1:
            raise ValueError(f"t must be >= 1, got {self.t}")
        if self.interval_length <= 0:
            raise ValueError(f"interval_length must be > 0, got {self.interval_length}")


def pseudonym(raw: str, key: bytes) -> str:
    """Stable keyed pseudonym for a MAC/IP string."""
    return hmac.new(key, raw.encode("utf-8"), hashlib.sha256).hexdigest()[:16]


def parse_events(
    lines: Iterable[str],
    on_error: str = ABORT,
    pseudonym_key: Optional[bytes] = None,
) -> List[ArpEvent]:
    """Parse ``timestamp,source,destination`` lines into events, in input order.

    A first line whose timestamp field is not an integer and which reads like a
    header (``timestamp,...``) is skipped.  Blank lines are ignored.  With
    ``on_error="skip"`` malformed lines are dropped with a
    :class:`MalformedLineWarning`; otherwise :class:`MalformedLineError` is raised.
    """
    if on_error not in (ABORT, SKIP):
        raise ValueError(f"on_error must be 'abort' or 'skip', got {on_error!r}")
    events = []
    for lineno, row in enumerate(csv.reader(_strip_cr(lines)), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if lineno == 1 and row[0].strip().lower() in ("timestamp", "time", "ts"):
            continue
        try:
            events.append(_parse_row(row))
        except ValueError as exc:
            err = MalformedLineError(lineno, ",".join(row), str(exc))
            if on_error == ABORT:
                raise err from None
            warnings.warn(str(err), MalformedLineWarning, stacklevel=2)
    if pseudonym_key is not None:
        events = [ArpEvent(e.timestamp, pseudonym(e.source, pseudonym_key), pseudonym(e.destination, pseudonym_key))
                  for e in events]
    return events


def _strip_cr(lines):
    for line in lines:
        yield line.rstrip("\r\n")


def _parse_row(row):
    if len(row) != 3:
        raise ValueError(f"expected 3 fields, got {len(row)}")
    ts, src, dst = (c.strip() for c in row)
    try:
        timestamp = int(ts)
    except ValueError:
        raise ValueError(f"timestamp {ts!r} is not an integer") from None
    if timestamp < 0:
        raise ValueError("negative timestamp")
    if not src or not dst:
        raise ValueError("empty user id")
    return ArpEvent(timestamp, src, dst)


def read_events(path, on_error: str = ABORT, pseudonym_key: Optional[bytes] = None) -> List[ArpEvent]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return parse_events(fh, on_error=on_error, pseudonym_key=pseudonym_key)


def bucket_intervals(events: Iterable[ArpEvent], cfg: CaptureConfig) -> List[IntervalGraph]:
    """Group events into ``cfg.t`` interval graphs.

    An event at time ``tau`` belongs to interval ``(tau - origin) // interval_length + 1``.
    Events outside ``[1, t]`` are dropped with a :class:`DroppedEventsWarning`.
    """
    edges = [set() for _ in range(cfg.t)]
    users = [set() for _ in range(cfg.t)]
    dropped = 0
    for ev in events:
        offset = ev.timestamp - cfg.origin
        if offset < 0:
            dropped += 1
            continue
        j = offset // cfg.interval_length
        if j >= cfg.t:
            dropped += 1
            continue
        users[j].add(ev.source)
        users[j].add(ev.destination)
        if ev.source != ev.destination:
            edges[j].add((ev.source, ev.destination))
    if dropped:
        warnings.warn(f"{dropped} event(s) fall outside intervals 1..{cfg.t} and were dropped",
                      DroppedEventsWarning, stacklevel=2)
    return [IntervalGraph(j + 1, frozenset(edges[j]), frozenset(users[j])) for j in range(cfg.t)]


def user_count(graphs: Sequence[IntervalGraph]) -> int:
    """Number of distinct users observed anywhere in the window."""
    seen = set()
    for g in graphs:
        seen |= g.users
    return len(seen)


def user_ids(n: int) -> List[str]:
    width = len(str(n))
    return [f"u{i:0{width}d}" for i in range(1, n + 1)]


def synth_scenario(
    n: int,
    t: int,
    base_rate: float,
    anomaly_spec: Sequence[Tuple[int, int]] = (),
    seed: int = 0,
    spread: int = 1,
) -> List[IntervalGraph]:
    """Generate a synthetic LAN of ``n`` users over ``t`` intervals.

    In every interval each user requests a uniformly random set of other users
    whose size is Binomial(n - 1, base_rate / (n - 1)), so ``base_rate`` is the
    mean out-degree.  Every user is a node of every interval.  For each
    ``(interval, magnitude)`` in ``anomaly_spec`` the out-degree of ``spread``
    designated users (the first ``spread`` ids) is raised by ``magnitude``, capped
    at ``n - 1``.  Output is a pure function of the arguments.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    if base_rate < 0 or base_rate > n - 1:
        raise ValueError(f"base_rate must lie in [0, n-1], got {base_rate}")
    if not 1 <= spread <= n:
        raise ValueError(f"spread must lie in [1, n], got {spread}")
    boosts = {}
    for interval, magnitude in anomaly_spec:
        if not 1 <= interval <= t:
            raise ValueError(f"anomaly interval {interval} outside [1, {t}]")
        if magnitude < 0:
            raise ValueError(f"anomaly magnitude must be >= 0, got {magnitude}")
        boosts[interval] = boosts.get(interval, 0) + int(magnitude)

    ids = user_ids(n)
    p = base_rate / (n - 1)
    graphs = []
    for j in range(1, t + 1):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(j,)))
        out_deg = rng.binomial(n - 1, p, size=n)
        boost = boosts.get(j, 0)
        if boost:
            out_deg[:spread] = np.minimum(out_deg[:spread] + boost, n - 1)
        edges = set()
        for k in range(n):
            if out_deg[k] == 0:
                continue
            others = rng.choice(n - 1, size=int(out_deg[k]), replace=False)
            for o in others:
                # Skip over k itself.
                d = o if o < k else o + 1
                edges.add((ids[k], ids[d]))
        graphs.append(IntervalGraph(j, frozenset(edges), frozenset(ids)))
    return graphs


def graphs_to_events(graphs: Sequence[IntervalGraph], interval_length: int = WEEK_SECONDS,
                     origin: int = 0, seed: int = 0) -> List[ArpEvent]:
    """Render interval graphs as one event per edge, time-ordered.

    Timestamps are drawn uniformly inside each interval from a seeded generator.
    Bucketing the result with the same ``interval_length``/``origin`` reproduces
    the graphs' edge sets.
    """
    events = []
    for g in graphs:
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(g.index,)))
        edges = sorted(g.edges)
        offsets = rng.integers(0, interval_length, size=len(edges))
        base = origin + (g.index - 1) * interval_length
        events.extend(ArpEvent(int(base + o), s, d) for (s, d), o in zip(edges, offsets))
    events.sort(key=lambda e: (e.timestamp, e.source, e.destination))
    return events


def events_to_csv(events: Iterable[ArpEvent], header: bool = True) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if header:
        writer.writerow(["timestamp", "source", "destination"])
    for e in events:
        writer.writerow([e.timestamp, e.source, e.destination])
    return buf.getvalue()


def graphs_digest(graphs: Sequence[IntervalGraph]) -> str:
    """SHA-256 over a canonical text form of the graphs (index, sorted users, sorted edges)."""
    h = hashlib.sha256()
    for g in graphs:
        h.update(f"#{g.index}\n".encode())
        for u in sorted(g.users):
            h.update(f"u {u}\n".encode())
        for s, d in sorted(g.edges):
            h.update(f"e {s} {d}\n".encode())
    return h.hexdigest()
