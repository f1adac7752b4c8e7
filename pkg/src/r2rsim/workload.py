"""Scenario description, scenario files, and variant wiring.

Scenario files are INI-style text read with :mod:`configparser`. Durations
are written with a unit suffix (``ns``, ``us``, ``ms``, ``s``); a bare
integer means nanoseconds. See ``scenarios/table1.ini`` for a full example.
"""
import configparser
import io
import re
from dataclasses import dataclass, field, fields, replace
from decimal import Decimal
from typing import List, Optional

from r2rsim import executors as ex
from r2rsim.metrics import Chain
from r2rsim.osched import FIFO, OTHER, PRIO_MAX, PRIO_MIN, SimThread
from r2rsim.rosmodel import (DEFAULT_CHANNEL_CAPACITY, DEFAULT_QOS_DEPTH, Callback,
                             DdsPipeline, EventChannel, Subscription, Timer, WaitSet, spin_once)
from r2rsim.rta import RtTask, analyze_tasks, dimension_channel
from r2rsim.simcore import NS_PER_MS, NS_PER_S, NS_PER_US, SplitMix64
from r2rsim.simulation import BackgroundLoad, NodeRuntime, PublisherProcess, Simulation

VARIANTS = (
    "futures",
    "futures-join",
    "futures-rt",
    "futures-thread-pool",
    "futures-2-threads",
    "rclcpp-rt",
    "rclcpp-st",
    "tokio",
    "tokio-rt",
)
NORT_PREFIX = "nort-"

#: variants that give each callback its own rate-monotonic thread
PER_CALLBACK_VARIANTS = ("futures-rt", "rclcpp-rt")


class ConfigError(ValueError):
    """Invalid scenario or variant."""


def parse_variant(text):
    """``'nort-tokio'`` -> ``('tokio', True)``."""
    text = text.strip()
    nort = text.startswith(NORT_PREFIX)
    name = text[len(NORT_PREFIX):] if nort else text
    if name not in VARIANTS:
        raise ConfigError(f"unknown variant {text!r}; known: {', '.join(VARIANTS)}")
    return name, nort


def variant_label(variant, nort):
    return NORT_PREFIX + variant if nort else variant


# -- durations ---------------------------------------------------------------

_UNITS = {"ns": 1, "us": NS_PER_US, "ms": NS_PER_MS, "s": NS_PER_S}
_DURATION = re.compile(r"^\s*([0-9]+(?:\.[0-9]*)?)\s*(ns|us|ms|s)?\s*$")


def parse_duration(text) -> int:
    m = _DURATION.match(str(text))
    if not m:
        raise ConfigError(f"bad duration {text!r}")
    value = Decimal(m.group(1)) * _UNITS[m.group(2) or "ns"]
    if value != value.to_integral_value():
        raise ConfigError(f"duration {text!r} is not a whole number of nanoseconds")
    return int(value)


def format_duration(ns) -> str:
    for unit in ("s", "ms", "us"):
        if ns and ns % _UNITS[unit] == 0:
            return f"{ns // _UNITS[unit]}{unit}"
    return f"{ns}ns"


# -- spec ----------------------------------------------------------------------

@dataclass
class TopicSpec:
    name: str
    period: Optional[int] = None
    phase: int = 0


@dataclass
class CallbackSpec:
    name: str
    node: str
    demand: int
    topic: Optional[str] = None
    timer_period: Optional[int] = None
    timer_phase: int = 0
    publishes: Optional[str] = None
    capacity: int = DEFAULT_CHANNEL_CAPACITY
    qos_depth: int = DEFAULT_QOS_DEPTH
    priority: Optional[int] = None

    @property
    def is_timer(self):
        return self.timer_period is not None


@dataclass
class NodeSpec:
    name: str
    variant: str = "futures-rt"
    nort: bool = False
    main_priority: int = 21
    dds_priority: Optional[int] = None
    dds_policy: Optional[str] = None
    callback_priority: int = 20
    workers: int = 2
    tokio_workers: Optional[int] = None
    affinity: Optional[tuple] = None
    spin_timeout: int = NS_PER_S


@dataclass
class BackgroundSpec:
    name: str
    priority: int
    demand: int
    period: int
    phase: int = 0
    policy: str = FIFO
    affinity: Optional[tuple] = None


@dataclass
class ChainSpec:
    name: str
    hops: tuple


@dataclass
class ScenarioSpec:
    name: str = "scenario"
    duration: int = 20 * NS_PER_S
    replications: int = 10
    seed: int = 0
    cores: int = 1
    quantum: int = NS_PER_MS
    context_switch: int = 0
    randomize_phases: bool = False
    warmup: int = 0
    dds_cost: int = 10 * NS_PER_US
    transport_delay: int = 0
    take_cost: int = 0
    publish_cost: int = 0
    rta_inflation: int = 0
    publisher_worker_priority: int = 24
    topics: List[TopicSpec] = field(default_factory=list)
    callbacks: List[CallbackSpec] = field(default_factory=list)
    nodes: List[NodeSpec] = field(default_factory=list)
    background: List[BackgroundSpec] = field(default_factory=list)
    chains: List[ChainSpec] = field(default_factory=list)

    # -- lookups

    def topic(self, name):
        return next((t for t in self.topics if t.name == name), None)

    def node(self, name):
        return next((n for n in self.nodes if n.name == name), None)

    def callback(self, name):
        return next((c for c in self.callbacks if c.name == name), None)

    def node_callbacks(self, node):
        return [c for c in self.callbacks if c.node == node]

    def with_variant(self, variant, nort=None):
        """Copy with every subscriber node switched to ``variant``.

        ``variant`` may carry the ``nort-`` prefix.
        """
        name, prefixed = parse_variant(variant)
        nort = prefixed if nort is None else (nort or prefixed)
        return replace(self, nodes=[replace(n, variant=name, nort=nort) for n in self.nodes])

    # -- derived quantities

    def effective_period(self, cb, _seen=None) -> Optional[int]:
        """Activation period of a callback, following republishing upstream."""
        if cb.is_timer:
            return cb.timer_period
        topic = self.topic(cb.topic)
        if topic is None:
            return None
        if topic.period is not None:
            return topic.period
        seen = set() if _seen is None else _seen
        if cb.name in seen:
            return None
        seen.add(cb.name)
        periods = [self.effective_period(o, seen) for o in self.callbacks
                   if o.publishes == cb.topic]
        periods = [p for p in periods if p is not None]
        return min(periods) if periods else None

    def callback_priorities(self, node):
        """Thread priority per callback for the per-callback variants.

        Explicit priorities win; the rest are rate monotonic counting down
        from the node's ``callback_priority``, ties in declaration order.
        """
        n = self.node(node) if isinstance(node, str) else node
        cbs = self.node_callbacks(n.name)
        out = {c.name: c.priority for c in cbs if c.priority is not None}
        free = [c for c in cbs if c.priority is None]
        inf = float("inf")
        free.sort(key=lambda c: (self.effective_period(c) or inf,))
        for rank, c in enumerate(free):
            out[c.name] = n.callback_priority - rank
        return out

    def rta_tasks(self):
        """Callbacks under their per-callback priorities plus FIFO background load."""
        tasks = []
        for n in self.nodes:
            prio = self.callback_priorities(n)
            for c in self.node_callbacks(n.name):
                period = self.effective_period(c)
                if period is None or c.demand <= 0:
                    continue
                tasks.append(RtTask(c.name, c.demand, period, prio[c.name],
                                    overhead=self.rta_inflation))
        for b in self.background:
            if b.policy == FIFO:
                tasks.append(RtTask(b.name, b.demand, b.period, b.priority))
        return tasks

    def analysis(self, bound_factor=10):
        return analyze_tasks(self.rta_tasks(), bound_factor)

    def with_dimensioned_channels(self, bound_factor=1000):
        """Copy whose callback channels hold ceil(R/T) events (unchanged if R diverges).

        A channel deeper than the default needs R well past 10*T, so the
        divergence bound used here is much looser than the report's.
        """
        res = self.analysis(bound_factor).by_name()
        cbs = []
        for c in self.callbacks:
            r = res.get(c.name)
            cap = dimension_channel(r.value, r.task.period, r.converged) if r else None
            cbs.append(replace(c, capacity=cap) if cap else c)
        return replace(self, callbacks=cbs)

    def utilization(self):
        from r2rsim.rta import utilization
        return utilization(self.rta_tasks())

    def subjects(self):
        """Stats subjects: one per subscription callback, then declared chains.

        A callback's subject is its topic name when it is the only subscriber.
        """
        subs = [c for c in self.callbacks if not c.is_timer]
        count = {}
        for c in subs:
            count[c.topic] = count.get(c.topic, 0) + 1
        out = []
        for c in subs:
            name = c.topic if count[c.topic] == 1 else f"{c.topic}:{c.name}"
            out.append(Chain(name, (c.name,), c.topic))
        for ch in self.chains:
            head = self.callback(ch.hops[0])
            out.append(Chain(ch.name, tuple(ch.hops), head.topic))
        return out

    def deadlines(self):
        out = {}
        for chain in self.subjects():
            p = self.effective_period(self.callback(chain.hops[0]))
            if p is not None:
                out[chain.name] = p
        return out

    def rta_by_subject(self):
        try:
            res = self.analysis().by_name()
        except ValueError:
            return {}
        out = {}
        for chain in self.subjects():
            if len(chain.hops) == 1 and chain.hops[0] in res:
                r = res[chain.hops[0]]
                out[chain.name] = r.value if r.converged else None
        return out


# -- the benchmark of the synthetic evaluation ----------------------------------

TABLE1_PERIODS_MS = (10, 20, 50, 100, 200)
TABLE1_DEMANDS_MS = (2, 4, 5, 15, 50)


def table1_scenario(variant="futures-rt", nort=False, duration=20 * NS_PER_S, replications=10,
                    seed=0, dds_cost=10 * NS_PER_US) -> ScenarioSpec:
    """Five topics, publisher worker at 24, subscriber main+DDS at 21, callbacks 20..16."""
    spec = ScenarioSpec(name="table1", duration=duration, replications=replications, seed=seed,
                        dds_cost=dds_cost)
    variant, prefixed = parse_variant(variant)
    spec.nodes.append(NodeSpec("sub", variant=variant, nort=nort or prefixed))
    for i, (period, demand) in enumerate(zip(TABLE1_PERIODS_MS, TABLE1_DEMANDS_MS), start=1):
        spec.topics.append(TopicSpec(f"topic{i}", period * NS_PER_MS))
        spec.callbacks.append(CallbackSpec(f"cb{i}", "sub", demand * NS_PER_MS, topic=f"topic{i}"))
    return spec


# -- validation ------------------------------------------------------------------

def _prio_ok(p):
    return PRIO_MIN <= p <= PRIO_MAX


def validate(spec: ScenarioSpec):
    """List of human-readable violations; empty when the scenario is usable."""
    v = []
    if spec.duration <= 0:
        v.append("duration must be > 0")
    if spec.replications < 1:
        v.append("replications must be >= 1")
    if spec.cores < 1:
        v.append("cores must be >= 1")
    if spec.quantum <= 0:
        v.append("quantum must be > 0")
    if not _prio_ok(spec.publisher_worker_priority):
        v.append(f"publisher worker_priority {spec.publisher_worker_priority} outside "
                 f"[{PRIO_MIN}, {PRIO_MAX}]")
    seen = set()
    for kind, items in (("topic", spec.topics), ("callback", spec.callbacks),
                        ("node", spec.nodes), ("background", spec.background),
                        ("chain", spec.chains)):
        for it in items:
            if (kind, it.name) in seen:
                v.append(f"duplicate {kind} {it.name!r}")
            seen.add((kind, it.name))
    for t in spec.topics:
        if t.period is not None and t.period <= 0:
            v.append(f"topic {t.name}: period must be > 0")
        if t.phase < 0:
            v.append(f"topic {t.name}: phase must be >= 0")
    cores = range(spec.cores)
    for n in spec.nodes:
        if n.variant not in VARIANTS:
            v.append(f"node {n.name}: unknown variant {n.variant!r}")
        for label in ("main_priority", "callback_priority", "dds_priority"):
            p = getattr(n, label)
            if p is not None and not _prio_ok(p):
                v.append(f"node {n.name}: {label} {p} outside [{PRIO_MIN}, {PRIO_MAX}]")
        if n.dds_policy not in (None, FIFO, OTHER):
            v.append(f"node {n.name}: unknown dds_policy {n.dds_policy!r}")
        if n.workers < 1:
            v.append(f"node {n.name}: workers must be >= 1")
        if n.tokio_workers is not None and n.tokio_workers < 1:
            v.append(f"node {n.name}: tokio_workers must be >= 1")
        if n.affinity is not None and (not n.affinity or any(c not in cores for c in n.affinity)):
            v.append(f"node {n.name}: affinity {list(n.affinity)} not within {spec.cores} cores")
        if n.spin_timeout <= 0:
            v.append(f"node {n.name}: spin_timeout must be > 0")
        if n.variant in PER_CALLBACK_VARIANTS:
            for cb, p in spec.callback_priorities(n).items():
                if not _prio_ok(p):
                    v.append(f"callback {cb}: derived priority {p} outside "
                             f"[{PRIO_MIN}, {PRIO_MAX}]")
    for c in spec.callbacks:
        if spec.node(c.node) is None:
            v.append(f"callback {c.name}: unknown node {c.node!r}")
        if c.is_timer:
            if c.timer_period <= 0:
                v.append(f"callback {c.name}: timer period must be > 0")
        elif c.topic is None:
            v.append(f"callback {c.name}: needs a topic or a timer period")
        elif spec.topic(c.topic) is None:
            v.append(f"callback {c.name}: unknown topic {c.topic!r}")
        if c.publishes is not None and spec.topic(c.publishes) is None:
            v.append(f"callback {c.name}: publishes to unknown topic {c.publishes!r}")
        if c.demand < 0:
            v.append(f"callback {c.name}: demand must be >= 0")
        if c.capacity < 1:
            v.append(f"callback {c.name}: channel capacity must be >= 1")
        if c.qos_depth < 1:
            v.append(f"callback {c.name}: qos_depth must be >= 1")
        if c.priority is not None and not _prio_ok(c.priority):
            v.append(f"callback {c.name}: priority {c.priority} outside [{PRIO_MIN}, {PRIO_MAX}]")
    for b in spec.background:
        if b.policy not in (FIFO, OTHER):
            v.append(f"background {b.name}: unknown policy {b.policy!r}")
        elif b.policy == FIFO and not _prio_ok(b.priority):
            v.append(f"background {b.name}: priority {b.priority} outside "
                     f"[{PRIO_MIN}, {PRIO_MAX}]")
        if b.period <= 0:
            v.append(f"background {b.name}: period must be > 0")
        if b.demand <= 0:
            v.append(f"background {b.name}: demand must be > 0")
        if b.affinity is not None and any(c not in cores for c in b.affinity):
            v.append(f"background {b.name}: affinity outside {spec.cores} cores")
    for ch in spec.chains:
        cbs = [spec.callback(h) for h in ch.hops]
        if not ch.hops:
            v.append(f"chain {ch.name}: no hops")
        for h, c in zip(ch.hops, cbs):
            if c is None:
                v.append(f"chain {ch.name}: unknown callback {h!r}")
        for a, b in zip(cbs, cbs[1:]):
            if a is not None and b is not None and (a.publishes is None or a.publishes != b.topic):
                v.append(f"chain {ch.name}: {a.name} does not publish to {b.name}'s topic")
        if cbs and cbs[0] is not None and cbs[0].is_timer:
            v.append(f"chain {ch.name}: head must be a subscription")
    return v


# -- scenario files -----------------------------------------------------------------

_SCENARIO_KEYS = ("name", "duration", "replications", "seed", "cores", "quantum",
                  "context_switch", "randomize_phases", "warmup")
_OVERHEAD_KEYS = ("dds_cost", "transport_delay", "take_cost", "publish_cost", "rta_inflation")
_DURATION_FIELDS = {"duration", "quantum", "context_switch", "dds_cost", "transport_delay",
                    "take_cost", "publish_cost", "rta_inflation", "period", "phase", "demand",
                    "timer_period", "timer_phase", "spin_timeout"}
_BOOL_FIELDS = {"randomize_phases", "nort"}
_TUPLE_FIELDS = {"affinity", "hops"}


def _parse_value(key, raw, typ):
    raw = raw.strip()
    if key in _DURATION_FIELDS:
        return parse_duration(raw)
    if key in _BOOL_FIELDS:
        low = raw.lower()
        if low not in ("true", "false", "yes", "no", "1", "0"):
            raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
        return low in ("true", "yes", "1")
    if key in _TUPLE_FIELDS:
        items = [x.strip() for x in raw.split(",") if x.strip()]
        return tuple(int(x) for x in items) if key == "affinity" else tuple(items)
    if typ in (int, Optional[int]):
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
    return raw


def _format_value(key, value):
    if key in _DURATION_FIELDS:
        return format_duration(value)
    if key in _BOOL_FIELDS:
        return "true" if value else "false"
    if key in _TUPLE_FIELDS:
        return ", ".join(str(x) for x in value)
    return str(value)


def _build(cls, name, section, renames=None):
    renames = renames or {}
    kwargs = {"name": name}
    types = {f.name: f.type for f in fields(cls)}
    for key, raw in section.items():
        attr = renames.get(key, key)
        if attr not in types or attr == "name":
            raise ConfigError(f"[{section.name}]: unknown key {key!r}")
        kwargs[attr] = _parse_value(attr, raw, types[attr])
    try:
        return cls(**kwargs)
    except TypeError as e:
        raise ConfigError(f"[{section.name}]: {e}") from None


_CB_RENAMES = {"timer": "timer_period", "phase": "timer_phase"}


def loads(text) -> ScenarioSpec:
    cp = configparser.ConfigParser(interpolation=None, default_section="__defaults__",
                                   inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(str(e)) from None
    spec = ScenarioSpec()
    types = {f.name: f.type for f in fields(ScenarioSpec)}
    for sect in cp.sections():
        body = cp[sect]
        kind, _, name = sect.partition(".")
        if sect in ("scenario", "overheads", "publisher"):
            allowed = {"scenario": _SCENARIO_KEYS, "overheads": _OVERHEAD_KEYS,
                       "publisher": ("worker_priority",)}[sect]
            for key, raw in body.items():
                if key not in allowed:
                    raise ConfigError(f"[{sect}]: unknown key {key!r}")
                attr = f"publisher_{key}" if sect == "publisher" else key
                setattr(spec, attr, _parse_value(attr, raw, types[attr]))
        elif kind == "topic" and name:
            spec.topics.append(_build(TopicSpec, name, body))
        elif kind == "callback" and name:
            spec.callbacks.append(_build(CallbackSpec, name, body, _CB_RENAMES))
        elif kind == "node" and name:
            spec.nodes.append(_build(NodeSpec, name, body))
        elif kind == "background" and name:
            spec.background.append(_build(BackgroundSpec, name, body))
        elif kind == "chain" and name:
            spec.chains.append(_build(ChainSpec, name, body))
        else:
            raise ConfigError(f"unknown section [{sect}]")
    return spec


def load_scenario(path) -> ScenarioSpec:
    """Read a scenario file; the name ``table1`` selects the built-in benchmark."""
    if str(path) == "table1":
        return table1_scenario()
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def _emit_section(lines, header, obj, renames=None):
    renames = renames or {}
    lines.append(f"[{header}]")
    for f in fields(obj):
        value = getattr(obj, f.name)
        if f.name == "name" or value is None:
            continue
        lines.append(f"{renames.get(f.name, f.name)} = {_format_value(f.name, value)}")
    lines.append("")


def dumps(spec: ScenarioSpec) -> str:
    out = ["[scenario]"]
    for key in _SCENARIO_KEYS:
        out.append(f"{key} = {_format_value(key, getattr(spec, key))}")
    out += ["", "[overheads]"]
    for key in _OVERHEAD_KEYS:
        out.append(f"{key} = {_format_value(key, getattr(spec, key))}")
    out += ["", "[publisher]", f"worker_priority = {spec.publisher_worker_priority}", ""]
    for n in spec.nodes:
        _emit_section(out, f"node.{n.name}", n)
    for t in spec.topics:
        _emit_section(out, f"topic.{t.name}", t)
    inv = {v: k for k, v in _CB_RENAMES.items()}
    for c in spec.callbacks:
        _emit_section(out, f"callback.{c.name}", c, renames=inv)
    for b in spec.background:
        _emit_section(out, f"background.{b.name}", b)
    for ch in spec.chains:
        _emit_section(out, f"chain.{ch.name}", ch)
    return "\n".join(out)


def save_scenario(spec, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(spec))


# -- wiring ------------------------------------------------------------------------------

def replication_seed(spec, k):
    return spec.seed + k


def build_variant(spec: ScenarioSpec, seed=None, record_trace=True) -> Simulation:
    """Construct threads, executors and channels for every node of ``spec``."""
    problems = validate(spec)
    if problems:
        raise ConfigError("invalid scenario:\n  " + "\n  ".join(problems))
    seed = spec.seed if seed is None else seed
    rng = SplitMix64(seed)
    tick_offset = rng.next_below(spec.quantum)
    steal_seed = rng.next_u64()

    sim = Simulation(spec.duration, spec.cores, spec.quantum, spec.context_switch, tick_offset,
                     spec.transport_delay, record_trace)
    trace = sim.trace
    k = sim.kernel
    for t in spec.topics:
        sim.domain.add_topic(t.name)

    pub = PublisherProcess(sim, spec.publisher_worker_priority, FIFO, spec.publish_cost)
    for t in spec.topics:
        if t.period is not None:
            phase = rng.next_below(t.period) if spec.randomize_phases else t.phase
            pub.add_topic(t.name, t.period, phase)
    if pub.sources:
        sim.publisher = pub
        sim.spawn(pub.thread)

    for i, n in enumerate(spec.nodes):
        _build_node(sim, spec, n, SplitMix64(steal_seed + i))

    for b in spec.background:
        bg = BackgroundLoad(sim, b.name, b.demand, b.period, b.phase, b.priority, b.policy,
                            b.affinity)
        sim.background.append(bg)
        sim.spawn(bg.thread)

    sim.chains = spec.subjects()
    sim.deadlines = spec.deadlines()
    sim.rta = spec.rta_by_subject()
    return sim


def _build_node(sim, spec, n: NodeSpec, rng):
    k = sim.kernel
    trace = sim.trace
    policy = OTHER if n.nort else FIFO
    aff = n.affinity

    def thread(name, program, prio, role):
        t = SimThread(f"{n.name}/{name}", program, prio, policy, aff, role=role)
        rt.threads.append(t)
        return sim.spawn(t)

    rt = NodeRuntime(n.name, n.variant, n.nort)
    sim.nodes[n.name] = rt
    dds_policy = n.dds_policy or policy
    dds_prio = n.main_priority if n.dds_priority is None else n.dds_priority
    rt.pipeline = DdsPipeline(n.name, k, spec.dds_cost, dds_prio, dds_policy, aff, trace)
    rt.threads.append(rt.pipeline.thread)
    sim.spawn(rt.pipeline.thread)

    rt.waitset = WaitSet(n.name)
    tasks = []
    for idx, c in enumerate(spec.node_callbacks(n.name)):
        if c.is_timer:
            ent = Timer(c.name, idx, c.timer_period, c.timer_phase)
            ent.arm(sim.queue, k, spec.duration)
        else:
            ent = Subscription(c.name, idx, c.topic, c.qos_depth)
            sim.domain.connect(c.topic, ent, rt.pipeline)
        cb = Callback(c.name, c.demand, k, trace, sim.domain, c.publishes)
        ent.callback = cb
        ent.channel = EventChannel(c.name, c.capacity, trace)
        rt.entities.append(ent)
        rt.callbacks[c.name] = cb
        rt.waitset.add(ent)
        tasks.append(ex.CallbackTask(c.name, ent.channel, cb))

    def sampler():
        while True:
            yield from spin_once(rt.waitset, k, n.spin_timeout, spec.take_cost, trace,
                                 f"{n.name}/main")

    v = n.variant
    cb_prio = spec.callback_priorities(n)
    if v == "futures":
        local = ex.LocalPoolExecutor(f"{n.name}/local", k)
        for t in tasks:
            local.spawn(t)
        rt.executors.append(local)

        def interleaved():
            yield from local.run_until_stalled()
            while True:
                yield from spin_once(rt.waitset, k, n.spin_timeout, spec.take_cost, trace,
                                     f"{n.name}/main")
                yield from local.run_until_stalled()

        thread("main", interleaved(), n.main_priority, "main")
    elif v == "futures-2-threads":
        local = ex.LocalPoolExecutor(f"{n.name}/callbacks", k)
        for t in tasks:
            local.spawn(t)
        rt.executors.append(local)
        thread("main", sampler(), n.main_priority, "sampler")
        thread("callbacks", local.run(), n.callback_priority, "executor")
    elif v in ("futures-thread-pool", "futures-join"):
        pool = ex.ThreadPoolExecutor(f"{n.name}/pool", k, n.workers, n.callback_priority,
                                     policy, aff)
        if v == "futures-join":
            pool.spawn(ex.JoinGroup("join", tasks))
        else:
            for t in tasks:
                pool.spawn(t)
        rt.executors.append(pool)
        thread("main", sampler(), n.main_priority, "sampler")
        for w in pool.threads:
            rt.threads.append(w)
            sim.spawn(w)
    elif v == "futures-rt":
        thread("main", sampler(), n.main_priority, "sampler")
        for t in tasks:
            local = ex.LocalPoolExecutor(f"{n.name}/{t.name}", k)
            local.spawn(t)
            rt.executors.append(local)
            thread(t.name, local.run(), cb_prio[t.name], "executor")
    elif v == "rclcpp-rt":
        for ent in rt.entities:
            ws = WaitSet(f"{n.name}/{ent.name}", [ent])
            cpp = ex.CppSingleThreadedExecutor(f"{n.name}/{ent.name}", k, ws, spec.take_cost,
                                               trace)
            rt.executors.append(cpp)
            thread(ent.name, cpp.spin(), cb_prio[ent.name], "executor")
    elif v == "rclcpp-st":
        cpp = ex.CppSingleThreadedExecutor(f"{n.name}/main", k, rt.waitset, spec.take_cost,
                                           trace)
        rt.executors.append(cpp)
        thread("main", cpp.spin(), n.main_priority, "executor")
    elif v in ("tokio", "tokio-rt"):
        workers = n.tokio_workers or spec.cores
        prio = n.main_priority if v == "tokio" else n.callback_priority
        tok = ex.TokioLikeExecutor(f"{n.name}/tokio", k, rng, workers, prio, policy, aff)
        for t in tasks:
            tok.spawn(t)
        rt.executors.append(tok)
        thread("main", sampler(), n.main_priority, "sampler")
        for w in tok.threads:
            rt.threads.append(w)
            sim.spawn(w)
    else:
        raise ConfigError(f"unknown variant {v!r}")
    return rt
