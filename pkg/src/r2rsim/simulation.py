"""A wired simulation: clock, kernel, middleware, nodes and their threads."""
from collections import deque
from dataclasses import dataclass, field

from r2rsim.metrics import Trace
from r2rsim.osched import FIFO, Kernel, Run, Signal, SimThread, Wait
from r2rsim.rosmodel import Domain
from r2rsim.simcore import EventQueue, SimulationError


class PeriodicSource:
    """Releases at ``phase + k * period`` for every release time below ``until``."""

    def __init__(self, name, period, phase=0):
        self.name = name
        self.period = period
        self.phase = phase
        self.released = 0

    def arm(self, queue, until, on_release):
        def fire(k):
            self.released += 1
            on_release(self)
            nxt = self.phase + (k + 1) * self.period
            if nxt < until:
                queue.schedule(nxt, "timer-fire", self.name, lambda: fire(k + 1))

        if self.phase < until:
            queue.schedule(self.phase, "timer-fire", self.name, lambda: fire(0))


class PublisherProcess:
    """Dedicated publisher process: periodic timers whose callbacks publish
    on a single worker thread."""

    def __init__(self, sim, priority=24, policy=FIFO, publish_cost_ns=0, affinity=None):
        self.sim = sim
        self.publish_cost_ns = publish_cost_ns
        self.pending = deque()
        self.signal = Signal("publisher")
        self.sources = []
        self.thread = SimThread("publisher/worker", self._program(), priority, policy, affinity,
                                role="publisher")

    def add_topic(self, topic, period, phase=0):
        self.sources.append(PeriodicSource(topic, period, phase))

    def arm(self, until):
        for src in self.sources:
            src.arm(self.sim.queue, until, self._release)

    def _release(self, src):
        self.pending.append(src.name)
        self.sim.kernel.notify(self.signal)

    def _program(self):
        while True:
            while not self.pending:
                yield Wait(self.signal)
            topic = self.pending.popleft()
            if self.publish_cost_ns:
                yield Run(self.publish_cost_ns)
            self.sim.domain.publish(topic, task="publisher", thread=self.thread.name)


class BackgroundLoad:
    """Periodic CPU hog outside ROS (interference only)."""

    def __init__(self, sim, name, demand, period, phase=0, priority=1, policy=FIFO,
                 affinity=None):
        self.sim = sim
        self.name = name
        self.demand = demand
        self.source = PeriodicSource(name, period, phase)
        self.pending = 0
        self.completed = 0
        self.signal = Signal(f"bg:{name}")
        self.thread = SimThread(f"bg/{name}", self._program(), priority, policy, affinity,
                                role="background")

    def arm(self, until):
        self.source.arm(self.sim.queue, until, self._release)

    def _release(self, _src):
        self.pending += 1
        self.sim.kernel.notify(self.signal)

    def _program(self):
        while True:
            while not self.pending:
                yield Wait(self.signal)
            self.pending -= 1
            yield Run(self.demand)
            self.completed += 1


@dataclass
class NodeRuntime:
    name: str
    variant: str
    nort: bool
    pipeline: object = None
    waitset: object = None
    entities: list = field(default_factory=list)
    callbacks: dict = field(default_factory=dict)
    executors: list = field(default_factory=list)
    threads: list = field(default_factory=list)


class Simulation:
    def __init__(self, duration_ns, ncores=1, quantum_ns=1_000_000, context_switch_ns=0,
                 tick_offset_ns=0, transport_delay_ns=0, record_trace=True):
        if duration_ns <= 0:
            raise ValueError("duration must be positive")
        self.duration = duration_ns
        self.queue = EventQueue()
        self.trace = Trace() if record_trace else None
        self.kernel = Kernel(self.queue, ncores, quantum_ns, context_switch_ns, tick_offset_ns,
                             trace=self.trace)
        self.domain = Domain(self.queue, self.kernel, transport_delay_ns, trace=self.trace)
        self.nodes = {}
        self.publisher = None
        self.background = []
        self.chains = []
        self.deadlines = {}
        self.rta = {}
        self.finished = False

    def spawn(self, thread):
        return self.kernel.spawn(thread)

    def run(self):
        """Process every event up to and including ``duration``."""
        if self.finished:
            raise SimulationError("simulation already ran")
        if self.publisher is not None:
            self.publisher.arm(self.duration)
        for bg in self.background:
            bg.arm(self.duration)
        self.kernel.reschedule()
        q = self.queue
        while True:
            t = q.peek_time()
            if t is None or t > self.duration:
                break
            ev = q.advance()
            if not ev.cancelled and ev.action is not None:
                ev.action()
            self.kernel.reschedule()
        self.finished = True
        return self

    # -- state inspection ---------------------------------------------------

    def subscriptions(self):
        for node in self.nodes.values():
            for e in node.entities:
                if e.kind == "subscription":
                    yield node, e

    def in_flight(self):
        """Messages published but neither completed nor dropped, per subscription."""
        out = {}
        for node, sub in self.subscriptions():
            n = sum(1 for s, _ in node.pipeline.inbox if s is sub)
            n += sum(1 for s in node.pipeline.holding if s is sub)
            n += len(sub.history)
            if sub.channel is not None:
                n += len(sub.channel)
            cb = sub.callback
            n += cb.activations - len(cb.log)
            out[sub.name] = n
        return out

    def runtime_totals(self):
        return self.kernel.runtime_totals()

    def events_reconcile(self):
        q = self.queue
        return q.scheduled == q.consumed + len(q)
