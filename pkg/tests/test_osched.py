import pytest
from hypothesis import given, settings, strategies as st

from r2rsim.osched import FIFO, OTHER, Run, Signal, SimThread, Wait
from r2rsim.simcore import SimulationError, ms
from r2rsim.simulation import Simulation


def burner(log, name, demand):
    log.append((name, "start", sim_now[0].kernel.now))
    yield Run(demand)
    log.append((name, "end", sim_now[0].kernel.now))


sim_now = [None]


def make_sim(**kw):
    sim = Simulation(kw.pop("duration", ms(1000)), **kw)
    sim_now[0] = sim
    return sim


def release_at(sim, t, signal):
    sim.queue.schedule(t, "release", signal.name, lambda: sim.kernel.notify(signal))


def spawn_at(sim, t, thread):
    sim.queue.schedule(t, "spawn", thread.name, lambda: sim.spawn(thread))


def test_higher_priority_preempts():
    sim = make_sim()
    log = []
    sim.spawn(SimThread("low", burner(log, "low", ms(10)), 10))
    spawn_at(sim, ms(3), SimThread("high", burner(log, "high", ms(2)), 20))
    sim.run()
    assert ("high", "end", ms(5)) in log
    assert ("low", "end", ms(12)) in log


def test_preempted_fifo_thread_stays_at_head_of_its_level():
    sim = make_sim()
    log = []
    sim.spawn(SimThread("a", burner(log, "a", ms(10)), 10))
    spawn_at(sim, ms(2), SimThread("peer", burner(log, "peer", ms(1)), 10))
    spawn_at(sim, ms(3), SimThread("high", burner(log, "high", ms(1)), 30))
    sim.run()
    ends = [(n, t) for n, k, t in log if k == "end"]
    # 'a' resumes before its equal-priority peer that became ready earlier
    assert ends == [("high", ms(4)), ("a", ms(11)), ("peer", ms(12))]


def test_other_always_below_fifo():
    sim = make_sim()
    log = []
    sim.spawn(SimThread("nice", burner(log, "nice", ms(3)), 0, OTHER))
    sim.spawn(SimThread("rt", burner(log, "rt", ms(5)), 1, FIFO))
    sim.run()
    assert ("rt", "end", ms(5)) in log
    assert ("nice", "end", ms(8)) in log


def test_other_threads_round_robin():
    sim = make_sim()
    log = []
    sim.spawn(SimThread("a", burner(log, "a", ms(5)), 0, OTHER))
    sim.spawn(SimThread("b", burner(log, "b", ms(5)), 0, OTHER))
    sim.run()
    ends = {n: t for n, k, t in log if k == "end"}
    # interleaved by the 1 ms tick: neither finishes before 9 ms
    assert sorted(ends.values()) == [ms(9), ms(10)]
    switches = [e for e in sim.trace if e.kind == "thread-switch"]
    assert len(switches) >= 9


def test_tick_offset_shifts_round_robin():
    def ends(offset):
        sim = make_sim(tick_offset_ns=offset)
        log = []
        sim.spawn(SimThread("a", burner(log, "a", ms(2) + 300_000), 0, OTHER))
        sim.spawn(SimThread("b", burner(log, "b", ms(2)), 0, OTHER))
        sim.run()
        return sorted(t for _, k, t in log if k == "end")

    assert ends(0) != ends(500_000)


def test_wait_timeout_and_notify_values():
    sim = make_sim()
    got = []
    sig = Signal("s")

    def prog():
        got.append((yield Wait(sig, ms(5))))
        got.append(sim.kernel.now)
        got.append((yield Wait(sig, ms(50))))
        got.append(sim.kernel.now)

    sim.spawn(SimThread("w", prog(), 5))
    release_at(sim, ms(7), sig)
    sim.run()
    assert got == [False, ms(5), True, ms(7)]


def test_negative_run_rejected():
    sim = make_sim()

    def prog():
        yield Run(-1)

    sim.spawn(SimThread("bad", prog(), 5))
    with pytest.raises(SimulationError):
        sim.run()


def test_context_switch_cost_charged():
    sim = make_sim(context_switch_ns=1000)
    log = []
    sim.spawn(SimThread("a", burner(log, "a", ms(1)), 10))
    sim.spawn(SimThread("b", burner(log, "b", ms(1)), 5))
    sim.run()
    assert ("a", "end", ms(1) + 1000) in log
    assert ("b", "end", ms(2) + 2000) in log


def test_affinity_pins_threads():
    sim = make_sim(ncores=2)
    log = []
    sim.spawn(SimThread("a", burner(log, "a", ms(4)), 10, affinity={1}))
    sim.spawn(SimThread("b", burner(log, "b", ms(4)), 10, affinity={1}))
    sim.run()
    assert sorted(t for _, k, t in log if k == "end") == [ms(4), ms(8)]
    assert sim.kernel.cores[0].busy_ns == 0


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 40), st.integers(1, 5_000), st.integers(0, 20_000),
                          st.sampled_from([FIFO, OTHER])),
                min_size=1, max_size=6),
       st.integers(1, 2))
def test_demand_is_conserved(specs, cores):
    sim = make_sim(duration=200_000, ncores=cores, quantum_ns=1_000)
    log = []
    demand = {}
    for i, (prio, c, rel, pol) in enumerate(specs):
        name = f"t{i}"
        demand[name] = c
        spawn_at(sim, rel, SimThread(name, burner(log, name, c), prio, pol))
    sim.run()
    totals = sim.runtime_totals()
    assert {n: totals[n] for n in demand} == demand
    assert sum(c.busy_ns for c in sim.kernel.cores) == sum(demand.values())
    starts = {n: t for n, k, t in log if k == "start"}
    ends = {n: t for n, k, t in log if k == "end"}
    for n, c in demand.items():
        assert ends[n] - starts[n] >= c
