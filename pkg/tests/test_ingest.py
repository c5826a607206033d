import io
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arpdp.ingest import (
    ArpEvent,
    CaptureConfig,
    DroppedEventsWarning,
    IntervalGraph,
    MalformedLineError,
    MalformedLineWarning,
    bucket_intervals,
    events_to_csv,
    graphs_digest,
    graphs_to_events,
    parse_events,
    pseudonym,
    synth_scenario,
)


def lines(text):
    return io.StringIO(text)


def test_parse_basic():
    assert parse_events(lines("0,a,b\n5,a,c")) == [ArpEvent(0, "a", "b"), ArpEvent(5, "a", "c")]


def test_parse_empty():
    assert parse_events(lines("")) == []


def test_parse_header_and_crlf():
    evs = parse_events(lines("timestamp,source,destination\r\n7,x,y\r\n\r\n"))
    assert evs == [ArpEvent(7, "x", "y")]


def test_parse_skip_policy_warns_once():
    with pytest.warns(MalformedLineWarning) as rec:
        assert parse_events(lines("x,a,b"), on_error="skip") == []
    assert len(rec) == 1
    assert "line 1" in str(rec[0].message)


def test_parse_abort_reports_line_number():
    with pytest.raises(MalformedLineError) as exc:
        parse_events(lines("0,a,b\n1,a\n"))
    assert exc.value.lineno == 2


@pytest.mark.parametrize("bad", ["-1,a,b", "1,,b", "1.5,a,b", "1,a,b,c"])
def test_parse_rejects(bad):
    with pytest.raises(MalformedLineError):
        parse_events(lines(bad))


def test_pseudonymize_is_stable_and_keyed():
    a = parse_events(lines("0,10.0.0.1,10.0.0.2"), pseudonym_key=b"k1")
    b = parse_events(lines("0,10.0.0.1,10.0.0.2"), pseudonym_key=b"k1")
    c = parse_events(lines("0,10.0.0.1,10.0.0.2"), pseudonym_key=b"k2")
    assert a == b
    assert a[0].source == pseudonym("10.0.0.1", b"k1") != c[0].source
    assert "10.0.0.1" not in a[0].source


def test_bucket_three_users():
    evs = [ArpEvent(0, "u1", "u2"), ArpEvent(1, "u1", "u3"), ArpEvent(2, "u2", "u1"), ArpEvent(3, "u2", "u3")]
    (g,) = bucket_intervals(evs, CaptureConfig(t=1))
    assert len(g.edges) == 4
    assert g.users == {"u1", "u2", "u3"}


def test_bucket_duplicates_collapse():
    (g,) = bucket_intervals([ArpEvent(0, "a", "b"), ArpEvent(9, "a", "b")], CaptureConfig(t=1))
    assert g.edges == {("a", "b")}


def test_bucket_self_loop_dropped():
    (g,) = bucket_intervals([ArpEvent(0, "a", "a")], CaptureConfig(t=1))
    assert g.edges == frozenset()
    assert g.users == {"a"}


def test_bucket_interval_boundaries_and_overflow():
    cfg = CaptureConfig(t=2, interval_length=10)
    evs = [ArpEvent(9, "a", "b"), ArpEvent(10, "a", "c"), ArpEvent(20, "a", "d")]
    with pytest.warns(DroppedEventsWarning):
        g1, g2 = bucket_intervals(evs, cfg)
    assert g1.edges == {("a", "b")}
    assert g2.edges == {("a", "c")}


def test_bucket_empty_intervals():
    gs = bucket_intervals([], CaptureConfig(t=3))
    assert [g.index for g in gs] == [1, 2, 3]
    assert all(not g.edges and not g.users for g in gs)


def test_capture_config_validation():
    with pytest.raises(ValueError):
        CaptureConfig(t=0)
    with pytest.raises(ValueError):
        CaptureConfig(t=1, interval_length=0)


def test_interval_graph_rejects_dangling_edge():
    with pytest.raises(ValueError):
        IntervalGraph(1, frozenset({("a", "b")}), frozenset({"a"}))


event_lists = st.lists(
    st.builds(ArpEvent, st.integers(0, 59), st.sampled_from("abcde"), st.sampled_from("abcde")), max_size=40)


@settings(max_examples=100, deadline=None)
@given(event_lists, st.randoms())
def test_bucket_permutation_invariant(events, rnd):
    cfg = CaptureConfig(t=3, interval_length=20)
    shuffled = list(events)
    rnd.shuffle(shuffled)
    assert bucket_intervals(events, cfg) == bucket_intervals(shuffled, cfg)


@settings(max_examples=100, deadline=None)
@given(event_lists)
def test_bucket_edge_count_matches_distinct_triples(events):
    cfg = CaptureConfig(t=3, interval_length=20)
    triples = {(e.timestamp // 20, e.source, e.destination) for e in events if e.source != e.destination}
    assert sum(len(g.edges) for g in bucket_intervals(events, cfg)) == len(triples)


def test_synth_jpn_shape():
    gs = synth_scenario(95, 30, 0.25, seed=1)
    assert len(gs) == 30
    assert all(len(g.edges) <= 95 * 94 for g in gs)
    assert all(len(g.users) == 95 for g in gs)


def test_synth_zero_rate_is_empty():
    assert all(not g.edges for g in synth_scenario(10, 4, 0.0, seed=3))


def test_synth_deterministic():
    a = synth_scenario(30, 5, 1.5, [(2, 10)], seed=9)
    b = synth_scenario(30, 5, 1.5, [(2, 10)], seed=9)
    assert a == b
    assert graphs_digest(a) == graphs_digest(b)
    assert events_to_csv(graphs_to_events(a, seed=1)) == events_to_csv(graphs_to_events(b, seed=1))
    assert graphs_digest(synth_scenario(30, 5, 1.5, [(2, 10)], seed=10)) != graphs_digest(a)


def test_synth_anomaly_inflates_and_caps():
    gs = synth_scenario(12, 3, 0.0, [(2, 5), (3, 100)], seed=0)
    out = lambda g, u: sum(1 for s, _ in g.edges if s == u)  # noqa: E731
    assert out(gs[0], "u01") == 0
    assert out(gs[1], "u01") == 5
    assert out(gs[2], "u01") == 11


def test_synth_spread():
    gs = synth_scenario(20, 2, 0.0, [(1, 3)], seed=0, spread=5)
    assert len(gs[0].edges) == 15


def test_synth_rejects_bad_anomaly_interval():
    with pytest.raises(ValueError):
        synth_scenario(10, 3, 1.0, [(4, 2)])
    with pytest.raises(ValueError):
        synth_scenario(10, 3, 1.0, [(0, 2)])


def test_synth_events_round_trip():
    gs = synth_scenario(15, 4, 2.0, seed=5)
    text = events_to_csv(graphs_to_events(gs, interval_length=100, seed=2))
    back = bucket_intervals(parse_events(io.StringIO(text)), CaptureConfig(t=4, interval_length=100))
    assert [g.edges for g in back] == [g.edges for g in gs]
