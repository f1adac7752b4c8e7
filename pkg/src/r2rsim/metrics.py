"""Trace recording, latency extraction, percentiles, and RTA comparison."""
import csv
import io
import math
import statistics
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, NamedTuple, Optional

TRACE_COLUMNS = ("time_ns", "kind", "topic", "seq", "task", "thread")

WITHIN = "within-bound"
DEADLINE_MISS = "deadline-miss"
EXCEEDS_RTA = "exceeds-RTA"


class TraceIntegrityError(ValueError):
    pass


class TraceEvent(NamedTuple):
    time: int
    kind: str
    topic: str = ""
    seq: int = -1
    task: str = ""
    thread: str = ""


class Trace:
    def __init__(self):
        self.events: List[TraceEvent] = []

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def emit(self, time, kind, topic="", seq=-1, task="", thread=""):
        if self.events and time < self.events[-1].time:
            raise TraceIntegrityError(f"trace time went backwards: {time} < {self.events[-1].time}")
        self.events.append(TraceEvent(time, kind, topic, seq, task, thread))

    def write_csv(self, fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for e in self.events:
            w.writerow((e.time, e.kind, e.topic, "" if e.seq < 0 else e.seq, e.task, e.thread))

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()

    @classmethod
    def read_csv(cls, fh):
        tr = cls()
        for row in csv.DictReader(fh):
            tr.emit(int(row["time_ns"]), row["kind"], row["topic"],
                    int(row["seq"]) if row["seq"] else -1, row["task"], row["thread"])
        return tr


@dataclass(frozen=True)
class Chain:
    """End-to-end path: ``hops`` are callback names, the first one subscribes
    to ``head_topic``."""

    name: str
    hops: tuple
    head_topic: str


@dataclass(frozen=True)
class LatencyRecord:
    subject: str
    head_topic: str
    head_seq: int
    publish_ns: int
    end_ns: int
    hops: tuple

    @property
    def latency_ns(self):
        return self.end_ns - self.publish_ns


@dataclass
class SubjectRun:
    """Per-run outcome for one topic or chain."""

    subject: str
    latencies: list = field(default_factory=list)
    published: int = 0
    completed: int = 0
    dropped_channel: int = 0
    dropped_qos: int = 0
    in_flight: int = 0


def percentile(values, p):
    """Nearest-rank percentile: sorted value at 1-based index ceil(p/100 * n)."""
    if not values:
        raise ValueError("percentile of an empty sequence")
    if not 0 < p <= 100:
        raise ValueError(f"percentile p must be in (0, 100], got {p}")
    data = sorted(values)
    frac = Fraction(p) if isinstance(p, int) else Fraction(str(p))
    rank = math.ceil(frac * len(data) / 100)
    return data[max(rank, 1) - 1]


def extract_latencies(trace, chains, warmup=0):
    """Follow each chain-head message through republishing callbacks.

    Returns ``(records, runs)`` where ``runs`` maps chain name to a
    :class:`SubjectRun` with drop and in-flight accounting for heads that did
    not complete. The first ``warmup`` head messages of each chain are ignored.
    """
    pub = {}
    ends = {}
    open_ = {}
    children = {}
    ch_drops = set()
    qos_drops = set()
    for ev in trace:
        kind = ev.kind
        if kind == "publish":
            key = (ev.topic, ev.seq)
            parent = open_.get(ev.task) if ev.task else None
            pub[key] = (ev.time, parent, ev.task)
            if parent is not None:
                children.setdefault(parent, []).append((ev.task, key))
        elif kind == "callback-start":
            if ev.task in open_:
                raise TraceIntegrityError(f"{ev.task}: start at {ev.time} while running")
            open_[ev.task] = (ev.topic, ev.seq)
        elif kind == "callback-end":
            cur = open_.pop(ev.task, None)
            if cur != (ev.topic, ev.seq):
                raise TraceIntegrityError(
                    f"{ev.task}: end of {ev.topic}#{ev.seq} at {ev.time} without start")
            ends[(ev.task, ev.topic, ev.seq)] = ev.time
        elif kind == "channel-drop":
            ch_drops.add((ev.task, ev.topic, ev.seq))
        elif kind == "qos-drop":
            qos_drops.add((ev.task, ev.topic, ev.seq))

    records = []
    runs = {}
    for chain in chains:
        run = SubjectRun(chain.name)
        runs[chain.name] = run
        heads = sorted(seq for (topic, seq) in pub if topic == chain.head_topic)
        for seq in heads[warmup:]:
            run.published += 1
            head = (chain.head_topic, seq)
            outcome = _follow(chain, head, pub, ends, children, ch_drops, qos_drops)
            if isinstance(outcome, str):
                if outcome == "channel":
                    run.dropped_channel += 1
                elif outcome == "qos":
                    run.dropped_qos += 1
                else:
                    run.in_flight += 1
                continue
            for end_ns, hop_ends in outcome:
                rec = LatencyRecord(chain.name, chain.head_topic, seq, pub[head][0], end_ns,
                                    _hop_breakdown(pub[head][0], hop_ends))
                records.append(rec)
                run.latencies.append(rec.latency_ns)
            run.completed += 1
    return records, runs


def _hop_breakdown(start, hop_ends):
    out = []
    prev = start
    for t in hop_ends:
        out.append(t - prev)
        prev = t
    return tuple(out)


def _follow(chain, head, pub, ends, children, ch_drops, qos_drops):
    """Completed paths as ``[(end_ns, hop_end_times)]`` or a failure reason."""
    frontier = [(head, ())]
    reason = "in-flight"
    for i, cb in enumerate(chain.hops):
        nxt = []
        for msg, hop_ends in frontier:
            end = ends.get((cb, msg[0], msg[1]))
            if end is None:
                if (cb, msg[0], msg[1]) in ch_drops:
                    reason = "channel"
                elif (cb, msg[0], msg[1]) in qos_drops:
                    reason = "qos"
                continue
            hop_ends = hop_ends + (end,)
            if i == len(chain.hops) - 1:
                nxt.append((msg, hop_ends))
            else:
                for task, child in children.get(msg, ()):
                    if task == cb:
                        nxt.append((child, hop_ends))
        frontier = nxt
        if not frontier:
            return reason
    return [(hop_ends[-1], hop_ends) for _, hop_ends in frontier]


@dataclass
class StatsSummary:
    subject: str
    runs: int
    count: int
    min: Optional[int]
    mean: Optional[float]
    p50: Optional[int]
    p99: Optional[float]
    max: Optional[int]
    p99_std: float
    published: int
    completed: int
    dropped_channel: int
    dropped_qos: int
    in_flight: int

    @property
    def dropped(self):
        return self.dropped_channel + self.dropped_qos


def summarize(per_run, subjects=None):
    """Pool replications per subject.

    ``p99`` is the mean of the per-run 99th percentiles and ``p99_std`` their
    sample standard deviation; min/max/p50/mean use all samples pooled.
    """
    if subjects is None:
        subjects = list(per_run[0]) if per_run else []
    out = []
    for name in subjects:
        runs = [r[name] for r in per_run if name in r]
        pooled = [v for r in runs for v in r.latencies]
        p99s = [percentile(r.latencies, 99) for r in runs if r.latencies]
        out.append(StatsSummary(
            subject=name,
            runs=len(runs),
            count=len(pooled),
            min=min(pooled) if pooled else None,
            mean=statistics.fmean(pooled) if pooled else None,
            p50=percentile(pooled, 50) if pooled else None,
            p99=statistics.fmean(p99s) if p99s else None,
            max=max(pooled) if pooled else None,
            p99_std=statistics.stdev(p99s) if len(p99s) > 1 else 0.0,
            published=sum(r.published for r in runs),
            completed=sum(r.completed for r in runs),
            dropped_channel=sum(r.dropped_channel for r in runs),
            dropped_qos=sum(r.dropped_qos for r in runs),
            in_flight=sum(r.in_flight for r in runs),
        ))
    return out


STATS_COLUMNS = ("subject", "runs", "count", "min_ns", "mean_ns", "p50_ns", "p99_ns", "max_ns",
                 "p99_std_ns", "published", "completed", "dropped_channel", "dropped_qos",
                 "in_flight")


def _num(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.3f}"
    return str(v)


def stats_rows(stats):
    for s in stats:
        yield (s.subject, s.runs, s.count, _num(s.min), _num(s.mean), _num(s.p50), _num(s.p99),
               _num(s.max), _num(s.p99_std), s.published, s.completed, s.dropped_channel,
               s.dropped_qos, s.in_flight)


def write_stats_csv(fh, stats):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(STATS_COLUMNS)
    w.writerows(stats_rows(stats))


@dataclass(frozen=True)
class Comparison:
    subject: str
    deadline_ns: int
    rta_ns: Optional[int]
    max_ns: Optional[int]
    p99_ns: Optional[float]
    dropped: int
    verdict: str


def compare_to_rta(stats, rta_by_subject, deadlines):
    """Per subject verdict from the observed maximum.

    ``deadline-miss`` when max exceeds the deadline or messages were dropped,
    ``exceeds-RTA`` when within the deadline but above the analysed bound.
    """
    out = []
    for s in stats:
        d = deadlines.get(s.subject)
        if d is None:
            continue
        r = rta_by_subject.get(s.subject)
        if s.dropped or (s.max is not None and s.max > d):
            verdict = DEADLINE_MISS
        elif r is not None and s.max is not None and s.max > r:
            verdict = EXCEEDS_RTA
        else:
            verdict = WITHIN
        out.append(Comparison(s.subject, d, r, s.max, s.p99, s.dropped, verdict))
    return out


REPORT_COLUMNS = ("subject", "deadline_ns", "rta_ns", "max_ns", "p99_ns", "dropped", "verdict")


def write_report_csv(fh, comparisons):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for c in comparisons:
        w.writerow((c.subject, c.deadline_ns, _num(c.rta_ns), _num(c.max_ns), _num(c.p99_ns),
                    c.dropped, c.verdict))


def _fmt_ms(ns):
    return "-" if ns is None else f"{ns / 1e6:.3f}"


def format_report(comparisons, title=""):
    lines = []
    if title:
        lines.append(title)
    lines.append(f"{'subject':<16}{'deadline':>10}{'RTA':>10}{'max':>10}{'p99':>10}"
                 f"{'drops':>7}  verdict")
    for c in comparisons:
        lines.append(f"{c.subject:<16}{_fmt_ms(c.deadline_ns):>10}{_fmt_ms(c.rta_ns):>10}"
                     f"{_fmt_ms(c.max_ns):>10}{_fmt_ms(c.p99_ns):>10}{c.dropped:>7}  {c.verdict}")
    lines.append("(times in ms)")
    return "\n".join(lines) + "\n"
