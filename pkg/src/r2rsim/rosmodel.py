"""ROS-level entities, wait sets, event channels and the DDS delivery path."""
from collections import deque
from dataclasses import dataclass
from typing import Optional

from r2rsim.osched import FIFO, Run, Signal, SimThread, Wait

DEFAULT_CHANNEL_CAPACITY = 11
DEFAULT_QOS_DEPTH = 100

SUBSCRIPTION = "subscription"
TIMER = "timer"

#: R2R pushes subscription events before timer events
R2R_ORDER = (SUBSCRIPTION, TIMER)
#: the C++ single-threaded executor runs timers before subscriptions
CPP_ORDER = (TIMER, SUBSCRIPTION)


@dataclass(eq=False)
class Message:
    topic: str
    seq: int
    publish_ns: int
    parent: Optional["Message"] = None

    def __repr__(self):
        return f"{self.topic}#{self.seq}"


@dataclass(eq=False)
class TimerEvent:
    topic: str
    seq: int
    publish_ns: int
    parent: None = None

    def __repr__(self):
        return f"{self.topic}@{self.seq}"


class EventChannel:
    """Bounded FIFO between the sampler and one receiving task.

    A full channel rejects the new event (it is dropped, never executed).
    """

    def __init__(self, name, capacity=DEFAULT_CHANNEL_CAPACITY, trace=None):
        if capacity < 1:
            raise ValueError(f"channel {name}: capacity must be >= 1, got {capacity}")
        self.name = name
        self.capacity = capacity
        self.buffer = deque()
        self.offered = 0
        self.accepted = 0
        self.dropped = []
        self.high_water = 0
        self.receiver = None
        self.trace = trace

    def __len__(self):
        return len(self.buffer)

    @property
    def drop_count(self):
        return len(self.dropped)

    def offer(self, ev, now=0) -> bool:
        self.offered += 1
        if len(self.buffer) >= self.capacity:
            self.dropped.append(ev)
            if self.trace is not None:
                self.trace.emit(now, "channel-drop", topic=ev.topic, seq=ev.seq, task=self.name)
            return False
        self.buffer.append(ev)
        self.accepted += 1
        self.high_water = max(self.high_water, len(self.buffer))
        if self.trace is not None:
            self.trace.emit(now, "channel-offer", topic=ev.topic, seq=ev.seq, task=self.name)
        return True

    def take(self):
        return self.buffer.popleft() if self.buffer else None


class Entity:
    kind = ""

    def __init__(self, name, index):
        self.name = name
        self.index = index
        self.wait_sets = []
        self.channel: Optional[EventChannel] = None
        self.callback = None

    def ready(self) -> bool:
        raise NotImplementedError

    def take(self):
        raise NotImplementedError

    def _signal_ready(self, kernel):
        for ws in self.wait_sets:
            kernel.notify(ws.signal)

    def __repr__(self):
        return f"{type(self).__name__}({self.name!r})"


class Subscription(Entity):
    """Subscription with a DDS-side history buffer of ``qos_depth`` messages.

    History overflow discards the oldest message (KEEP_LAST semantics).
    """

    kind = SUBSCRIPTION

    def __init__(self, name, index, topic, qos_depth=DEFAULT_QOS_DEPTH):
        super().__init__(name, index)
        self.topic = topic
        self.qos_depth = qos_depth
        self.history = deque()
        self.qos_dropped = []

    def ready(self):
        return bool(self.history)

    def deliver(self, msg, kernel, trace=None):
        if len(self.history) >= self.qos_depth:
            old = self.history.popleft()
            self.qos_dropped.append(old)
            if trace is not None:
                trace.emit(kernel.now, "qos-drop", topic=old.topic, seq=old.seq, task=self.name)
        self.history.append(msg)
        self._signal_ready(kernel)

    def take(self):
        return self.history.popleft() if self.history else None


class Timer(Entity):
    """Periodic timer entity; expirations at ``phase + k * period``.

    Taking a ready timer consumes every pending expiration at once, so
    missed periods collapse into one callback.
    """

    kind = TIMER

    def __init__(self, name, index, period, phase=0):
        super().__init__(name, index)
        if period <= 0:
            raise ValueError(f"timer {name}: period must be positive")
        self.period = period
        self.phase = phase
        self.pending = 0
        self.fired = 0
        self.last_fire = 0

    @property
    def topic(self):
        return self.name

    def ready(self):
        return self.pending > 0

    def arm(self, queue, kernel, until):
        def fire(k=0):
            self.pending += 1
            self.fired += 1
            self.last_fire = queue.now
            self._signal_ready(kernel)
            nxt = self.phase + (k + 1) * self.period
            if nxt < until:
                queue.schedule(nxt, "timer-fire", self.name, lambda: fire(k + 1))

        if self.phase < until:
            queue.schedule(self.phase, "timer-fire", self.name, fire)

    def take(self):
        if not self.pending:
            return None
        self.pending = 0
        return TimerEvent(self.name, self.fired, self.last_fire)


class WaitSet:
    """Entities in registration order; ready ones are reported in that order."""

    def __init__(self, name, entities=()):
        self.name = name
        self.entities = []
        self.signal = Signal(f"waitset:{name}")
        for e in entities:
            self.add(e)

    def add(self, entity):
        self.entities.append(entity)
        entity.wait_sets.append(self)

    def any_ready(self):
        return any(e.ready() for e in self.entities)

    def ready_entities(self, kind_order=R2R_ORDER):
        ready = [e for e in self.entities if e.ready()]
        rank = {k: i for i, k in enumerate(kind_order)}
        return sorted(ready, key=lambda e: (rank.get(e.kind, len(rank)), e.index))


class DdsPipeline:
    """Subscriber-side middleware thread.

    Every incoming message costs ``cost_ns`` of CPU on the DDS thread before
    it lands in the subscription's history and the wait set is signalled.
    """

    def __init__(self, name, kernel, cost_ns=0, priority=21, policy=FIFO, affinity=None,
                 trace=None):
        self.name = name
        self.kernel = kernel
        self.cost_ns = cost_ns
        self.trace = trace
        self.inbox = deque()
        self.signal = Signal(f"dds:{name}")
        self.delivered = 0
        # subscription whose message is being processed right now
        self.holding = []
        self.thread = SimThread(f"{name}/dds", self._program(), priority, policy, affinity,
                                role="dds")

    def enqueue(self, sub, msg):
        self.inbox.append((sub, msg))
        self.kernel.notify(self.signal)

    def _program(self):
        while True:
            while not self.inbox:
                yield Wait(self.signal)
            sub, msg = self.inbox.popleft()
            if self.cost_ns:
                self.holding = [sub]
                yield Run(self.cost_ns)
                self.holding = []
            self.delivered += 1
            if self.trace is not None:
                self.trace.emit(self.kernel.now, "dds-deliver", topic=msg.topic, seq=msg.seq,
                                task=sub.name, thread=self.thread.name)
            sub.deliver(msg, self.kernel, self.trace)


class Domain:
    """Topic registry: routes each publication to every matching subscription."""

    def __init__(self, queue, kernel, transport_delay_ns=0, trace=None):
        self.q = queue
        self.kernel = kernel
        self.transport_delay_ns = transport_delay_ns
        self.trace = trace
        self.routes = {}
        self.seq = {}
        self.published = {}

    def add_topic(self, topic):
        self.routes.setdefault(topic, [])
        self.seq.setdefault(topic, 0)
        self.published.setdefault(topic, 0)

    def connect(self, topic, sub, pipeline):
        if topic not in self.routes:
            raise KeyError(f"unknown topic {topic!r}")
        self.routes[topic].append((sub, pipeline))

    def publish(self, topic, parent=None, task="", thread="") -> Message:
        if topic not in self.routes:
            raise KeyError(f"unknown topic {topic!r}")
        self.seq[topic] += 1
        self.published[topic] += 1
        msg = Message(topic, self.seq[topic], self.q.now, parent)
        if self.trace is not None:
            self.trace.emit(self.q.now, "publish", topic=topic, seq=msg.seq, task=task,
                            thread=thread)
        for sub, pipeline in self.routes[topic]:
            if self.transport_delay_ns:
                self.q.schedule_in(self.transport_delay_ns, "message-arrival", sub.name,
                                   lambda s=sub, p=pipeline: p.enqueue(s, msg))
            else:
                pipeline.enqueue(sub, msg)
        return msg


def spin_once(waitset, kernel, timeout=None, take_cost_ns=0, trace=None, thread_name=""):
    """Sample the wait set once (generator; run it on the sampling thread).

    Blocks until an entity is ready or ``timeout`` ns pass. Then for every
    ready entity - subscriptions first, then timers, creation order within a
    kind - takes exactly one event, offers it to the entity's channel and
    wakes the channel's receiving task, even when the offer was dropped.
    Returns the woken tasks in wake order.
    """
    deadline = None if timeout is None else kernel.now + timeout
    while not waitset.any_ready():
        if deadline is not None:
            left = deadline - kernel.now
            if left <= 0:
                return []
            yield Wait(waitset.signal, left)
        else:
            yield Wait(waitset.signal)
    woken = []
    for entity in waitset.ready_entities(R2R_ORDER):
        if take_cost_ns:
            yield Run(take_cost_ns)
        ev = entity.take()
        if ev is None:
            continue
        if trace is not None:
            trace.emit(kernel.now, "sample", topic=ev.topic, seq=ev.seq, task=entity.name,
                       thread=thread_name)
        entity.channel.offer(ev, kernel.now)
        task = entity.channel.receiver
        if task is not None:
            if trace is not None:
                trace.emit(kernel.now, "task-wake", topic=ev.topic, seq=ev.seq, task=task.name,
                           thread=thread_name)
            task.wake()
            woken.append(task)
    return woken


class Callback:
    """User callback: burns ``demand_ns`` and optionally republishes.

    A republished message keeps a reference to the message that caused it,
    which is how multi-hop chains are followed.
    """

    def __init__(self, name, demand_ns, kernel, trace=None, domain=None, publishes=None):
        self.name = name
        self.demand_ns = demand_ns
        self.kernel = kernel
        self.trace = trace
        self.domain = domain
        self.publishes = publishes
        self.activations = 0
        self.log = []

    def invoke(self, ev=None):
        k = self.kernel
        thread = k.current.name if k.current is not None else ""
        topic = ev.topic if ev is not None else ""
        seq = ev.seq if ev is not None else -1
        start = k.now
        self.activations += 1
        if self.trace is not None:
            self.trace.emit(start, "callback-start", topic=topic, seq=seq, task=self.name,
                            thread=thread)
        if self.demand_ns:
            yield Run(self.demand_ns)
        if self.publishes is not None and self.domain is not None:
            self.domain.publish(self.publishes, parent=ev, task=self.name, thread=thread)
        if self.trace is not None:
            self.trace.emit(k.now, "callback-end", topic=topic, seq=seq, task=self.name,
                            thread=thread)
        self.log.append((ev, start, k.now))
