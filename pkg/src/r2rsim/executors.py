"""Executor disciplines for async callback tasks.

Every executor exposes ``schedule(task)``, called when a task is woken.
Task bodies are generators run on the executor's simulated thread(s).
"""
import math
from collections import deque

from r2rsim.osched import FIFO, Run, Signal, SimThread, Wait
from r2rsim.rosmodel import CPP_ORDER

IDLE = "idle"
EXECUTING = "executing"


class AsyncTask:
    def __init__(self, name):
        self.name = name
        self.executor = None
        self.state = IDLE
        self.queued = False
        self.polls = 0
        # set when woken while executing
        self.rewoken = False

    def wake(self):
        if self.executor is None:
            raise RuntimeError(f"task {self.name} is not spawned")
        self.executor.schedule(self)

    def poll(self):
        return
        yield

    def label(self):
        return self.name

    def __repr__(self):
        return f"{type(self).__name__}({self.name!r})"


class CallbackTask(AsyncTask):
    """``channel.for_each(callback)``: each poll drains the whole channel."""

    def __init__(self, name, channel, callback):
        super().__init__(name)
        self.channel = channel
        self.callback = callback
        channel.receiver = self

    def poll(self):
        self.polls += 1
        while True:
            ev = self.channel.take()
            if ev is None:
                return
            yield from self.callback.invoke(ev)


class SelfWakingTask(AsyncTask):
    """Runs its callback once per poll and wakes itself before returning."""

    def __init__(self, name, callback):
        super().__init__(name)
        self.callback = callback

    def poll(self):
        self.polls += 1
        yield from self.callback.invoke(None)
        self.wake()


class JoinGroup(AsyncTask):
    """Several tasks joined into one schedulable unit.

    Waking any member wakes the group; a poll of the group polls the members
    that are ready when reached, in join order. Members never overlap.
    """

    def __init__(self, name, members=()):
        super().__init__(name)
        self.members = []
        for m in members:
            self.add(m)

    def add(self, member):
        member.executor = self
        member.join_ready = True
        self.members.append(member)

    def schedule(self, member):
        member.join_ready = True
        self.wake()

    def ready_members(self):
        return [m for m in self.members if m.join_ready]

    def label(self):
        return "{" + " ".join(m.label() for m in self.ready_members()) + "}"

    def poll(self):
        self.polls += 1
        for m in self.members:
            if m.join_ready:
                m.join_ready = False
                m.state = EXECUTING
                yield from m.poll()
                m.state = IDLE


class LocalPoolExecutor:
    """Single-threaded executor: incoming vector, active list, FIFO ready queue."""

    def __init__(self, name, kernel):
        self.name = name
        self.kernel = kernel
        self.incoming = []
        self.active = []
        self.ready = deque()
        self.signal = Signal(f"local:{name}")
        self.polled = []
        self.thread = None

    def spawn(self, task):
        task.executor = self
        self.incoming.append(task)
        self.kernel.notify(self.signal)
        return task

    def schedule(self, task):
        if task.queued or task in self.incoming:
            return
        task.queued = True
        self.ready.append(task)
        self.kernel.notify(self.signal)

    def queue_labels(self):
        return [t.label() for t in self.ready]

    def drain_incoming(self):
        moved, self.incoming = self.incoming, []
        for task in moved:
            self.active.append(task)
            task.queued = True
            self.ready.append(task)

    def run_until_stalled(self):
        """Poll ready tasks until the queue is empty (generator).

        Tasks woken meanwhile, including by themselves, join the tail and
        are polled in the same call. Returns the polled task names.
        """
        self.drain_incoming()
        polled = []
        while self.ready:
            task = self.ready.popleft()
            task.queued = False
            task.state = EXECUTING
            polled.append(task.name)
            self.polled.append(task.name)
            yield from task.poll()
            task.state = IDLE
        return polled

    def run(self):
        """Like run_until_stalled, but parks the host thread when idle."""
        while True:
            yield from self.run_until_stalled()
            while not self.ready and not self.incoming:
                yield Wait(self.signal)

    def make_thread(self, priority, policy=FIFO, affinity=None):
        self.thread = SimThread(f"{self.name}", self.run(), priority, policy, affinity,
                                role="executor")
        return self.thread


class ThreadPoolExecutor:
    """Shared FIFO ready queue served by several worker threads.

    A task woken while it executes is not requeued: its worker polls it
    again straight away, which can starve everything else.
    """

    def __init__(self, name, kernel, workers=2, priority=20, policy=FIFO, affinity=None):
        if workers < 1:
            raise ValueError("thread pool needs at least one worker")
        self.name = name
        self.kernel = kernel
        self.ready = deque()
        self.signal = Signal(f"pool:{name}")
        self.polled = []
        self.threads = [
            SimThread(f"{name}/w{i}", self._worker(i), priority, policy, affinity,
                      role="pool-worker")
            for i in range(workers)
        ]

    def spawn(self, task):
        task.executor = self
        task.queued = True
        self.ready.append(task)
        self.kernel.notify(self.signal)
        return task

    def schedule(self, task):
        if task.state == EXECUTING:
            task.rewoken = True
            return
        if task.queued:
            return
        task.queued = True
        self.ready.append(task)
        self.kernel.notify(self.signal)

    def queue_labels(self):
        return [t.label() for t in self.ready]

    def _worker(self, i):
        while True:
            while not self.ready:
                yield Wait(self.signal)
            task = self.ready.popleft()
            task.queued = False
            task.state = EXECUTING
            while True:
                task.rewoken = False
                self.polled.append(task.name)
                yield from task.poll()
                if not task.rewoken:
                    break
            task.state = IDLE


class _TokioWorker:
    def __init__(self, index):
        self.index = index
        self.lifo = None
        self.lifo_streak = 0
        self.local = deque()
        self.parked = False
        self.signal = Signal(f"tokio-worker{index}")
        self.thread = None
        self.picks = []


class TokioLikeExecutor:
    """Work-stealing multi-threaded scheduler.

    Pick order per worker: LIFO slot (at most ``lifo_limit`` times in a row),
    local queue, global queue, then steal ceil(n/2) tasks from the first
    worker with a non-empty local queue, scanning from a random start.
    Wakes from outside the workers go to the global queue; wakes issued by a
    worker land in its LIFO slot, pushing the previous occupant to the local
    queue. A full local queue spills to the global queue.
    """

    LIFO = "lifo"
    LOCAL = "local"
    GLOBAL = "global"
    STEAL = "steal"

    def __init__(self, name, kernel, rng, workers=1, priority=20, policy=FIFO, affinity=None,
                 lifo_limit=3, local_capacity=256):
        if workers < 1:
            raise ValueError("tokio executor needs at least one worker")
        self.name = name
        self.kernel = kernel
        self.rng = rng
        self.lifo_limit = lifo_limit
        self.local_capacity = local_capacity
        self.global_queue = deque()
        self.workers = [_TokioWorker(i) for i in range(workers)]
        self.polled = []
        self.overflowed = 0
        self._by_thread = {}
        for w in self.workers:
            w.thread = SimThread(f"{name}/w{w.index}", self._worker(w), priority, policy,
                                 affinity, role="tokio-worker")
            self._by_thread[id(w.thread)] = w

    @property
    def threads(self):
        return [w.thread for w in self.workers]

    def spawn(self, task):
        task.executor = self
        task.queued = True
        self.global_queue.append(task)
        self._unpark_one()
        return task

    def _current_worker(self):
        cur = self.kernel.current
        return self._by_thread.get(id(cur)) if cur is not None else None

    def schedule(self, task):
        if task.state == EXECUTING:
            task.rewoken = True
            return
        if task.queued:
            return
        task.queued = True
        w = self._current_worker()
        if w is None:
            self.global_queue.append(task)
            self._unpark_one()
            return
        prev, w.lifo = w.lifo, task
        if prev is not None:
            self.push_local(w, prev)

    def push_local(self, w, task):
        if len(w.local) >= self.local_capacity:
            self.overflowed += 1
            self.global_queue.append(task)
        else:
            w.local.append(task)
        self._unpark_one()

    def _unpark_one(self):
        for w in self.workers:
            if w.parked:
                w.parked = False
                self.kernel.notify(w.signal)
                return

    def pick_next(self, w):
        """Return ``(task, source)`` for worker ``w`` or None when all is empty."""
        if w.lifo is not None:
            if w.lifo_streak < self.lifo_limit:
                task, w.lifo = w.lifo, None
                w.lifo_streak += 1
                return task, self.LIFO
            # budget spent: the LIFO task goes behind the local queue
            task, w.lifo = w.lifo, None
            self.push_local(w, task)
        w.lifo_streak = 0
        if w.local:
            return w.local.popleft(), self.LOCAL
        if self.global_queue:
            return self.global_queue.popleft(), self.GLOBAL
        n = len(self.workers)
        start = self.rng.next_below(n)
        for k in range(n):
            victim = self.workers[(start + k) % n]
            if victim is w or not victim.local:
                continue
            count = math.ceil(len(victim.local) / 2)
            stolen = [victim.local.popleft() for _ in range(count)]
            w.local.extend(stolen[1:])
            return stolen[0], self.STEAL
        return None

    def _worker(self, w):
        while True:
            got = self.pick_next(w)
            if got is None:
                w.parked = True
                yield Wait(w.signal)
                w.parked = False
                continue
            task, source = got
            w.picks.append((task.name, source))
            task.queued = False
            task.state = EXECUTING
            task.rewoken = False
            self.polled.append(task.name)
            yield from task.poll()
            task.state = IDLE
            if task.rewoken:
                task.rewoken = False
                task.queued = True
                self.push_local(w, task)


class CppSingleThreadedExecutor:
    """rclcpp-style executor: sample the wait set, then run every ready
    callback on the host thread, timers before subscriptions."""

    def __init__(self, name, kernel, waitset, take_cost_ns=0, trace=None):
        self.name = name
        self.kernel = kernel
        self.waitset = waitset
        self.take_cost_ns = take_cost_ns
        self.trace = trace
        self.cycles = []
        self.thread = None

    def spin_some(self):
        """One sampling + execution cycle (generator)."""
        while not self.waitset.any_ready():
            yield Wait(self.waitset.signal)
        executed = []
        for entity in self.waitset.ready_entities(CPP_ORDER):
            if self.take_cost_ns:
                yield Run(self.take_cost_ns)
            ev = entity.take()
            if ev is None:
                continue
            if self.trace is not None:
                self.trace.emit(self.kernel.now, "sample", topic=ev.topic, seq=ev.seq,
                                task=entity.name, thread=self.name)
            executed.append(entity.callback.name)
            yield from entity.callback.invoke(ev)
        self.cycles.append(executed)
        return executed

    def spin(self):
        while True:
            yield from self.spin_some()

    def make_thread(self, priority, policy=FIFO, affinity=None):
        self.thread = SimThread(self.name, self.spin(), priority, policy, affinity,
                                role="executor")
        return self.thread
