import pytest

from r2rsim.metrics import Trace
from r2rsim.osched import Kernel
from r2rsim.rosmodel import (CPP_ORDER, EventChannel, Message, Subscription, Timer, WaitSet,
                             spin_once)
from r2rsim.simcore import EventQueue

from helpers import Node, finish


def msg(i, topic="t"):
    return Message(topic, i, 0)


def test_channel_drops_new_when_full():
    ch = EventChannel("c", capacity=3)
    results = [ch.offer(msg(i)) for i in range(1, 6)]
    assert results == [True, True, True, False, False]
    assert [m.seq for m in ch.dropped] == [4, 5]
    assert [ch.take().seq for _ in range(3)] == [1, 2, 3]
    assert ch.take() is None
    assert ch.high_water == 3


def test_channel_capacity_must_be_positive():
    with pytest.raises(ValueError):
        EventChannel("c", capacity=0)


def test_channel_trace_marks_drops():
    tr = Trace()
    ch = EventChannel("c", capacity=1, trace=tr)
    ch.offer(msg(1))
    ch.offer(msg(2))
    assert [e.kind for e in tr] == ["channel-offer", "channel-drop"]


def test_qos_history_drops_oldest():
    k = Kernel(EventQueue())
    sub = Subscription("s", 0, "t", qos_depth=2)
    for i in (1, 2, 3):
        sub.deliver(msg(i), k)
    assert [m.seq for m in sub.qos_dropped] == [1]
    assert [sub.take().seq, sub.take().seq] == [2, 3]


def test_spin_once_takes_one_event_per_entity_subscriptions_first():
    node = Node("ab")
    k = node.kernel
    timer = Timer("tm", 2, period=10)
    timer.channel = EventChannel("tm")
    node.waitset.add(timer)
    # timer created before a subscription would still come after it
    timer.pending = 1
    node.arrive("b", "a", "a")
    woken = finish(spin_once(node.waitset, k))
    assert [t.name for t in woken] == ["a", "b"]
    assert timer.pending == 0 and len(node.subs["a"].channel) == 1
    assert [e.name for e in node.waitset.ready_entities()] == ["a"]
    timer.pending = 1
    assert [e.name for e in node.waitset.ready_entities()] == ["a", "tm"]
    assert [e.name for e in node.waitset.ready_entities(CPP_ORDER)] == ["tm", "a"]


def test_spin_once_wakes_receiver_even_when_offer_dropped():
    node = Node("a", capacity=1)
    node.arrive("a", "a")
    finish(spin_once(node.waitset, node.kernel))
    woken = finish(spin_once(node.waitset, node.kernel))
    assert [t.name for t in woken] == ["a"]
    assert node.subs["a"].channel.drop_count == 1


def test_spin_once_times_out_empty():
    from r2rsim.osched import SimThread
    from r2rsim.simulation import Simulation
    sim = Simulation(10**9)
    ws = WaitSet("w")
    out = []

    def prog():
        out.append((yield from spin_once(ws, sim.kernel, timeout=5000)))
        out.append(sim.kernel.now)

    sim.spawn(SimThread("s", prog(), 10))
    sim.run()
    assert out == [[], 5000]


def test_timer_take_collapses_pending_expirations():
    q = EventQueue()
    k = Kernel(q)
    t = Timer("tm", 0, period=10)
    t.arm(q, k, until=35)
    while (ev := q.advance()) is not None:
        ev.action()
    assert t.fired == 4 and t.pending == 4
    ev = t.take()
    assert ev.seq == 4 and ev.publish_ns == 30
    assert t.take() is None


def test_timer_rejects_bad_period():
    with pytest.raises(ValueError):
        Timer("tm", 0, period=0)
