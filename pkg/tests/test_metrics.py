import io

import pytest
from hypothesis import given, strategies as st

from r2rsim.metrics import (DEADLINE_MISS, EXCEEDS_RTA, WITHIN, Chain, SubjectRun, Trace,
                            TraceIntegrityError, compare_to_rta, extract_latencies, format_report,
                            percentile, summarize, write_report_csv, write_stats_csv)


def test_percentile_nearest_rank():
    data = [15, 20, 35, 40, 50]
    assert [percentile(data, p) for p in (5, 30, 40, 50, 100)] == [15, 20, 20, 35, 50]
    assert percentile(list(range(1, 101)), 99) == 99
    assert percentile([7], 99) == 7
    assert percentile(list(range(1, 1001)), 99.9) == 999


@pytest.mark.parametrize("bad", [0, -1, 101])
def test_percentile_rejects_bad_p(bad):
    with pytest.raises(ValueError):
        percentile([1, 2], bad)


def test_percentile_rejects_empty():
    with pytest.raises(ValueError):
        percentile([], 50)


@given(st.lists(st.integers(-10**9, 10**9), min_size=1, max_size=80),
       st.integers(1, 100), st.integers(1, 100))
def test_percentile_is_member_and_monotone(xs, p, q):
    lo, hi = sorted((p, q))
    assert percentile(xs, lo) in xs
    assert percentile(xs, lo) <= percentile(xs, hi)
    assert percentile(xs, 100) == max(xs)


def test_trace_rejects_time_travel():
    tr = Trace()
    tr.emit(5, "x")
    with pytest.raises(TraceIntegrityError):
        tr.emit(4, "y")


def test_trace_csv_round_trip():
    tr = Trace()
    tr.emit(1, "publish", "t", 1, "pub", "th")
    tr.emit(2, "thread-switch", thread="w")
    text = tr.to_csv()
    assert text.splitlines()[0] == "time_ns,kind,topic,seq,task,thread"
    assert Trace.read_csv(io.StringIO(text)).events == tr.events


def chain_trace():
    tr = Trace()
    tr.emit(0, "publish", "a", 1, "pub")
    tr.emit(1, "callback-start", "a", 1, "cb1")
    tr.emit(3, "publish", "b", 1, "cb1")
    tr.emit(4, "callback-end", "a", 1, "cb1")
    tr.emit(5, "callback-start", "b", 1, "cb2")
    tr.emit(9, "callback-end", "b", 1, "cb2")
    tr.emit(10, "publish", "a", 2, "pub")
    tr.emit(10, "channel-drop", "a", 2, "cb1")
    tr.emit(20, "publish", "a", 3, "pub")
    tr.emit(21, "callback-start", "a", 3, "cb1")
    return tr


def test_chain_latency_and_failure_reasons():
    records, runs = extract_latencies(chain_trace(), [Chain("e2e", ("cb1", "cb2"), "a"),
                                                      Chain("a", ("cb1",), "a")])
    e2e = runs["e2e"]
    assert e2e.latencies == [9]
    assert (e2e.published, e2e.completed, e2e.dropped_channel, e2e.in_flight) == (3, 1, 1, 1)
    assert runs["a"].latencies == [4]
    rec = [r for r in records if r.subject == "e2e"][0]
    assert rec.hops == (4, 5) and rec.latency_ns == 9


def test_warmup_skips_first_heads():
    _, runs = extract_latencies(chain_trace(), [Chain("a", ("cb1",), "a")], warmup=1)
    assert runs["a"].published == 2 and runs["a"].latencies == []


def test_unmatched_end_is_an_integrity_error():
    tr = Trace()
    tr.emit(1, "callback-end", "a", 1, "cb1")
    with pytest.raises(TraceIntegrityError):
        extract_latencies(tr, [])


def test_summary_uses_per_run_p99():
    runs = [{"t": SubjectRun("t", latencies=list(range(1, 101)), published=100, completed=100)},
            {"t": SubjectRun("t", latencies=[x + 10 for x in range(1, 101)], published=100,
                             completed=100)}]
    (s,) = summarize(runs)
    assert s.p99 == 104.0
    assert s.p99_std == pytest.approx(7.0710678, rel=1e-6)
    assert (s.min, s.max, s.count, s.runs) == (1, 110, 200, 2)


def test_single_run_has_zero_spread():
    (s,) = summarize([{"t": SubjectRun("t", latencies=[5])}])
    assert s.p99_std == 0.0


def test_empty_subject_has_blank_stats():
    (s,) = summarize([{"t": SubjectRun("t", published=3, dropped_channel=3)}])
    assert s.p99 is None and s.dropped == 3
    buf = io.StringIO()
    write_stats_csv(buf, [s])
    assert buf.getvalue().splitlines()[1] == "t,1,0,,,,,,0.000,3,0,3,0,0"


def test_verdicts():
    def stat(name, mx, drops=0):
        return summarize([{name: SubjectRun(name, latencies=[mx], dropped_channel=drops)}])[0]

    stats = [stat("ok", 5), stat("over", 8), stat("late", 12), stat("lost", 1, drops=1)]
    rta = {"ok": 6, "over": 6, "late": 6, "lost": 6}
    dl = {k: 10 for k in rta}
    got = {c.subject: c.verdict for c in compare_to_rta(stats, rta, dl)}
    assert got == {"ok": WITHIN, "over": EXCEEDS_RTA, "late": DEADLINE_MISS,
                   "lost": DEADLINE_MISS}
    buf = io.StringIO()
    write_report_csv(buf, compare_to_rta(stats, rta, dl))
    assert buf.getvalue().startswith("subject,deadline_ns,rta_ns,max_ns,p99_ns,dropped,verdict\n")
    assert "deadline-miss" in format_report(compare_to_rta(stats, rta, dl), "t")
