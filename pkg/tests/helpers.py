"""Shared scaffolding for driving components outside a full simulation."""
from r2rsim.metrics import Trace
from r2rsim.osched import Kernel
from r2rsim.rosmodel import Callback, EventChannel, Message, Subscription, WaitSet
from r2rsim.executors import CallbackTask
from r2rsim.simcore import EventQueue


def finish(gen):
    """Run a generator that must not block or burn time; return its value."""
    try:
        step = next(gen)
    except StopIteration as stop:
        return stop.value
    raise AssertionError(f"generator yielded {step!r}")


class Node:
    """Subscriptions named by letters, each with a channel and a receiving task."""

    def __init__(self, names, capacity=11, qos_depth=100):
        self.kernel = Kernel(EventQueue())
        self.trace = Trace()
        self.waitset = WaitSet("node")
        self.subs = {}
        self.tasks = {}
        self.woken = []
        self.seq = {}
        for i, n in enumerate(names):
            sub = Subscription(n, i, n, qos_depth)
            sub.channel = EventChannel(n, capacity)
            sub.callback = Callback(n, 0, self.kernel, self.trace)
            self.waitset.add(sub)
            self.subs[n] = sub
            self.tasks[n] = CallbackTask(n, sub.channel, sub.callback)
            self.tasks[n].executor = self  # until spawned on a real executor

    def schedule(self, task):
        self.woken.append(task.name)

    def arrive(self, *names):
        for n in names:
            self.seq[n] = self.seq.get(n, 0) + 1
            self.subs[n].deliver(Message(n, self.seq[n], self.kernel.now), self.kernel)

    def executed(self):
        """Callback executions in order, as 'B1', 'D1', ..."""
        return [f"{e.task}{e.seq}" for e in self.trace if e.kind == "callback-start"]
