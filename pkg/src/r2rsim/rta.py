"""Uni-processor fixed-priority response-time analysis.

Response time of task i is the least fixed point of

    R = C_i + sum_{j in hp(i)} ceil(R / T_j) * C_j

iterated from R = C_i. Higher ``priority`` numbers are more urgent.
"""
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional, Sequence


@dataclass(frozen=True)
class RtTask:
    name: str
    wcet: int
    period: int
    priority: int = 0
    deadline: Optional[int] = None
    overhead: int = 0

    def __post_init__(self):
        if self.wcet <= 0 or self.period <= 0:
            raise ValueError(f"task {self.name}: C and T must be positive")

    @property
    def cost(self):
        return self.wcet + self.overhead

    @property
    def relative_deadline(self):
        return self.period if self.deadline is None else self.deadline


@dataclass(frozen=True)
class ResponseTime:
    task: RtTask
    value: int
    converged: bool
    iterations: int

    @property
    def schedulable(self):
        return self.converged and self.value <= self.task.relative_deadline


@dataclass(frozen=True)
class RtaResult:
    tasks: tuple
    responses: tuple

    @property
    def schedulable(self):
        return all(r.schedulable for r in self.responses)

    @property
    def utilization(self):
        return utilization(self.tasks)

    def by_name(self):
        return {r.task.name: r for r in self.responses}


def rm_assign(tasks: Sequence[RtTask], top=None):
    """Rate-monotonic priorities: shorter period, higher priority.

    Ties keep declaration order (first declared wins). Priorities count down
    from ``top`` (default: number of tasks) in steps of one.
    """
    top = len(tasks) if top is None else top
    order = sorted(range(len(tasks)), key=lambda i: (tasks[i].period, i))
    prio = {i: top - rank for rank, i in enumerate(order)}
    return [replace(t, priority=prio[i]) for i, t in enumerate(tasks)]


def _check_distinct(tasks):
    seen = {}
    for t in tasks:
        if t.priority in seen:
            raise ValueError(f"tasks {seen[t.priority]} and {t.name} share priority {t.priority}")
        seen[t.priority] = t.name


def interference(window, higher):
    return sum(-(-window // t.period) * t.cost for t in higher)


def response_time(task: RtTask, higher: Sequence[RtTask], bound=None) -> ResponseTime:
    """Fixed-point iteration; gives up once R exceeds ``bound`` (10*T default)."""
    bound = 10 * task.period if bound is None else bound
    r = task.cost
    it = 0
    while True:
        it += 1
        nxt = task.cost + interference(r, higher)
        if nxt == r:
            return ResponseTime(task, r, True, it)
        r = nxt
        if r > bound:
            return ResponseTime(task, r, False, it)


def analyze_tasks(tasks: Sequence[RtTask], bound_factor=10) -> RtaResult:
    _check_distinct(tasks)
    out = []
    for t in tasks:
        hp = [o for o in tasks if o.priority > t.priority]
        out.append(response_time(t, hp, bound_factor * t.period))
    return RtaResult(tuple(tasks), tuple(out))


def utilization(tasks) -> float:
    return float(sum((Fraction(t.cost, t.period) for t in tasks), Fraction(0)))


def dimension_channel(response: int, period: int, converged=True):
    """Minimum channel capacity: pending activations ceil(R/T); None if unbounded."""
    if not converged or response is None:
        return None
    return max(1, math.ceil(response / period))
