"""Simulated OS thread scheduling.

Threads are Python generators. A thread program yields ``Run(ns)`` to burn
CPU time (preemptible) or ``Wait(signal)`` to block until the signal is
notified. Code between yields executes in zero simulated time while the
thread holds a core.

Two policies are modelled:

* ``fifo``  - fixed-priority preemptive, FIFO within a priority level
  (SCHED_FIFO). Higher number means more urgent.
* ``other`` - always below every ``fifo`` thread; equal-weight round robin
  driven by a periodic per-core tick (an approximation of SCHED_OTHER).
"""
from dataclasses import dataclass
from typing import Optional

from r2rsim.simcore import NS_PER_MS, SimulationError

FIFO = "fifo"
OTHER = "other"

PRIO_MIN = 1
PRIO_MAX = 99


@dataclass
class Run:
    ns: int


@dataclass
class Wait:
    signal: "Signal"
    timeout: Optional[int] = None


class Signal:
    """Wait queue. Notifying it readies every blocked waiter."""

    __slots__ = ("name", "waiters")

    def __init__(self, name=""):
        self.name = name
        self.waiters = []

    def __repr__(self):
        return f"Signal({self.name!r}, waiters={len(self.waiters)})"


class SimThread:
    def __init__(self, name, program, priority=0, policy=FIFO, affinity=None, role=""):
        if policy not in (FIFO, OTHER):
            raise ValueError(f"unknown policy {policy!r}")
        if policy == FIFO and not PRIO_MIN <= priority <= PRIO_MAX:
            raise ValueError(f"FIFO priority {priority} outside [{PRIO_MIN}, {PRIO_MAX}]")
        self.name = name
        self.role = role
        self.priority = priority
        self.policy = policy
        self.affinity = frozenset(affinity) if affinity is not None else None
        self.state = "ready"
        self.program = program
        self.core = None
        # ns of CPU still to burn before the program is resumed
        self.remaining = 0
        self.burst_started = 0
        self.needs_step = True
        self.queue_key = 0
        self.version = 0
        self.runtime = 0
        self.overhead = 0
        self.waiting_on = None
        self.timeout_event = None
        self.resume_value = None

    def __repr__(self):
        return f"SimThread({self.name!r}, {self.policy}:{self.priority}, {self.state})"

    def rank(self):
        if self.policy == FIFO:
            return (0, -self.priority, self.queue_key)
        return (1, 0, self.queue_key)


class Core:
    def __init__(self, cid):
        self.id = cid
        self.running: Optional[SimThread] = None
        self.last: Optional[SimThread] = None
        self.busy_ns = 0


class Kernel:
    """Dispatches simulated threads onto cores.

    ``context_switch_ns`` is charged to a thread whenever it is dispatched
    onto a core that last ran a different thread.
    """

    def __init__(self, queue, ncores=1, quantum_ns=NS_PER_MS, context_switch_ns=0,
                 tick_offset_ns=0, trace=None):
        if ncores < 1:
            raise ValueError("need at least one core")
        self.q = queue
        self.cores = [Core(i) for i in range(ncores)]
        self.threads = []
        self.quantum_ns = quantum_ns
        self.context_switch_ns = context_switch_ns
        self.tick_offset_ns = tick_offset_ns % quantum_ns if quantum_ns else 0
        self.trace = trace
        self.current: Optional[SimThread] = None
        self._key = 0
        self._ticking = False

    # -- construction -----------------------------------------------------

    @property
    def now(self):
        return self.q.now

    def spawn(self, thread: SimThread):
        if thread.affinity is None:
            thread.affinity = frozenset(c.id for c in self.cores)
        bad = [c for c in thread.affinity if not 0 <= c < len(self.cores)]
        if bad or not thread.affinity:
            raise ValueError(f"thread {thread.name}: bad affinity {sorted(thread.affinity)}")
        self.threads.append(thread)
        thread.state = "ready"
        thread.queue_key = self._next_key()
        if thread.policy == OTHER and not self._ticking and self.quantum_ns:
            self._ticking = True
            first = self.tick_offset_ns if self.tick_offset_ns >= self.now else self.now
            self.q.schedule(first, "quantum-tick", "cores", self._tick)
        return thread

    def _next_key(self):
        self._key += 1
        return self._key

    # -- wakeups ----------------------------------------------------------

    def make_ready(self, thread: SimThread):
        """Blocked -> ready; appended at the tail of its priority level."""
        if thread.state != "blocked":
            return
        if thread.waiting_on is not None:
            try:
                thread.waiting_on.waiters.remove(thread)
            except ValueError:
                pass
            thread.waiting_on = None
        if thread.timeout_event is not None:
            thread.timeout_event.cancel()
            thread.timeout_event = None
        thread.state = "ready"
        thread.queue_key = self._next_key()

    def notify(self, signal: Signal):
        waiters, signal.waiters = signal.waiters, []
        for t in waiters:
            t.waiting_on = None
            t.resume_value = True
            self.make_ready(t)

    def _timeout(self, thread, version):
        if thread.state == "blocked" and thread.version == version:
            thread.timeout_event = None
            thread.resume_value = False
            self.make_ready(thread)

    # -- dispatch ---------------------------------------------------------

    def _tick(self):
        for core in self.cores:
            t = core.running
            if t is None or t.policy != OTHER:
                continue
            contender = any(
                o.state == "ready" and o.policy == OTHER and core.id in o.affinity
                for o in self.threads
            )
            if contender:
                t.queue_key = self._next_key()
        self.q.schedule_in(self.quantum_ns, "quantum-tick", "cores", self._tick)

    def _assign(self):
        cands = [t for t in self.threads if t.state in ("ready", "running")]
        cands.sort(key=SimThread.rank)
        taken = {}
        for t in cands:
            if t.state == "running" and t.core.id not in taken:
                taken[t.core.id] = t
                continue
            free = [c for c in self.cores if c.id in t.affinity and c.id not in taken]
            if not free:
                continue
            # idle cores first, then the core whose runner ranks lowest
            idle = [c for c in free if c.running is None]
            if idle:
                taken[idle[0].id] = t
            else:
                taken[max(free, key=lambda c: c.running.rank()).id] = t
        return taken

    def _preempt(self, t: SimThread):
        core = t.core
        self._account(t)
        t.version += 1
        t.state = "ready"
        t.core = None
        core.running = None

    def _account(self, t):
        ran = self.now - t.burst_started
        if ran:
            t.remaining -= ran
            t.runtime += ran
            t.core.busy_ns += ran
            if t.remaining < 0:
                raise SimulationError(f"{t.name}: ran {-t.remaining} ns past its burst")
            if t.remaining == 0:
                t.needs_step = True
        t.burst_started = self.now

    def _start(self, t: SimThread, core: Core):
        t.state = "running"
        t.core = core
        core.running = t
        if core.last is not t:
            if self.trace is not None:
                self.trace.emit(self.now, "thread-switch", thread=t.name)
            if self.context_switch_ns:
                t.remaining += self.context_switch_ns
                t.overhead += self.context_switch_ns
        core.last = t
        t.burst_started = self.now
        if t.remaining > 0:
            self._arm(t)

    def _arm(self, t):
        t.version += 1
        v = t.version
        self.q.schedule_in(t.remaining, "burst-complete", t.name,
                           lambda: self._burst_done(t, v))

    def _burst_done(self, t, version):
        if t.version != version or t.state != "running":
            return
        self._account(t)
        if t.remaining != 0:
            raise SimulationError(f"{t.name}: burst ended with {t.remaining} ns left")
        t.needs_step = True

    def _step(self, t: SimThread):
        """Resume the program of a running thread until it burns or blocks."""
        self.current = t
        try:
            while True:
                value, t.resume_value = t.resume_value, None
                try:
                    action = t.program.send(value)
                except StopIteration:
                    t.state = "done"
                    t.core.running = None
                    t.core = None
                    return
                if isinstance(action, Run):
                    if action.ns < 0:
                        raise SimulationError(f"{t.name}: negative run {action.ns}")
                    if action.ns == 0:
                        continue
                    t.remaining = action.ns
                    t.burst_started = self.now
                    t.needs_step = False
                    self._arm(t)
                    return
                if isinstance(action, Wait):
                    if action.timeout is not None and action.timeout <= 0:
                        t.resume_value = False
                        continue
                    t.state = "blocked"
                    t.version += 1
                    t.waiting_on = action.signal
                    action.signal.waiters.append(t)
                    if action.timeout is not None:
                        v = t.version
                        t.timeout_event = self.q.schedule_in(
                            action.timeout, "wait-timeout", t.name,
                            lambda: self._timeout(t, v))
                    t.core.running = None
                    t.core = None
                    return
                raise SimulationError(f"{t.name}: program yielded {action!r}")
        finally:
            self.current = None

    def reschedule(self):
        """Bring cores to a consistent state at the current instant."""
        for _ in range(1_000_000):
            # a burst ending right now completes before anything can preempt it
            for core in self.cores:
                r = core.running
                if (r is not None and not r.needs_step and r.remaining > 0
                        and r.burst_started + r.remaining == self.now):
                    self._account(r)
            stepper = next((c.running for c in self.cores
                            if c.running is not None and c.running.needs_step
                            and c.running.remaining == 0), None)
            if stepper is not None:
                self._step(stepper)
                continue
            taken = self._assign()
            changed = False
            for core in self.cores:
                r = core.running
                if r is not None and taken.get(core.id) is not r:
                    self._preempt(r)
                    changed = True
            for cid, t in sorted(taken.items()):
                if t.state == "ready":
                    self._start(t, self.cores[cid])
                    changed = True
            if not changed:
                return
        raise SimulationError("reschedule did not converge (zero-time livelock?)")

    # -- introspection ------------------------------------------------------

    def running_on(self, core_id=0):
        return self.cores[core_id].running

    def runtime_totals(self):
        """Executed ns per thread, including time of the current bursts."""
        out = {}
        for t in self.threads:
            extra = self.now - t.burst_started if t.state == "running" else 0
            out[t.name] = t.runtime + extra
        return out
