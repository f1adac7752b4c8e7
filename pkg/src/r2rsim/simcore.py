"""Discrete-event engine primitives: integer-ns clock, event queue, PRNG.

All times are integer nanoseconds. Events at the same instant pop in the
order they were scheduled.
"""
import heapq
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

NS_PER_US = 1_000
NS_PER_MS = 1_000_000
NS_PER_S = 1_000_000_000

_MASK64 = (1 << 64) - 1


def ms(value) -> int:
    return int(round(value * NS_PER_MS))


def us(value) -> int:
    return int(round(value * NS_PER_US))


class SimulationError(RuntimeError):
    """Internal inconsistency of the simulator (a bug, not a user error)."""


@dataclass(order=True)
class SimEvent:
    at: int
    seq: int
    kind: str = field(compare=False)
    target: str = field(compare=False, default="")
    action: Optional[Callable[[], Any]] = field(compare=False, default=None, repr=False)
    cancelled: bool = field(compare=False, default=False)

    def cancel(self):
        self.cancelled = True


class EventQueue:
    """Min-heap of events keyed by ``(at, seq)`` plus the simulation clock."""

    def __init__(self):
        self._heap = []
        self._seq = 0
        self.now = 0
        self.scheduled = 0
        self.consumed = 0

    def __len__(self):
        return len(self._heap)

    def schedule(self, at, kind, target="", action=None) -> SimEvent:
        if at < self.now:
            raise SimulationError(
                f"event {kind!r} for {target!r} scheduled at {at} < clock {self.now}"
            )
        ev = SimEvent(at, self._seq, kind, target, action)
        self._seq += 1
        self.scheduled += 1
        heapq.heappush(self._heap, ev)
        return ev

    def schedule_in(self, delay, kind, target="", action=None) -> SimEvent:
        return self.schedule(self.now + delay, kind, target, action)

    def peek_time(self) -> Optional[int]:
        return self._heap[0].at if self._heap else None

    def advance(self) -> Optional[SimEvent]:
        """Pop the earliest event and move the clock to it.

        Returns None once the queue is empty (the run is complete).
        """
        if not self._heap:
            return None
        ev = heapq.heappop(self._heap)
        self.now = ev.at
        self.consumed += 1
        return ev


class SplitMix64:
    """SplitMix64 generator.

    state <- state + 0x9E3779B97F4A7C15 (mod 2**64), then the output is the
    state mixed by two xor-shift-multiply rounds and a final xor-shift.
    Pure integer arithmetic, so sequences are identical on every platform.
    """

    GAMMA = 0x9E3779B97F4A7C15

    def __init__(self, seed=0):
        self.seed = seed & _MASK64
        self.state = self.seed

    def next_u64(self) -> int:
        self.state = (self.state + self.GAMMA) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def next_below(self, n) -> int:
        if n < 1:
            raise ValueError(f"next_below needs n >= 1, got {n}")
        return self.next_u64() % n

    def uniform_int(self, lo, hi) -> int:
        """Integer in the closed range [lo, hi]."""
        return lo + self.next_below(hi - lo + 1)

    def random(self) -> float:
        return (self.next_u64() >> 11) / float(1 << 53)
