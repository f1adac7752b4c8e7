"""Deterministic simulation of ROS 2 callback execution under async Rust
and C++ executor models, with fixed-priority response-time analysis."""

from r2rsim.rta import RtTask, analyze_tasks, response_time, rm_assign, utilization
from r2rsim.simcore import EventQueue, SimEvent, SplitMix64
from r2rsim.workload import ScenarioSpec, build_variant, load_scenario, table1_scenario

__all__ = [
    "EventQueue",
    "RtTask",
    "ScenarioSpec",
    "SimEvent",
    "SplitMix64",
    "analyze_tasks",
    "build_variant",
    "load_scenario",
    "response_time",
    "rm_assign",
    "table1_scenario",
    "utilization",
]

__version__ = "0.1.0"
