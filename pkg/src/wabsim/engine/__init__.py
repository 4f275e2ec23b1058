"""Discrete-event engine: scenarios, geometry, simulation and record export."""

from .geometry import Obstruction, ObstructionKind, ObstructionMap, los_state
from .records import CSV_COLUMNS, read_csv, read_json, write_csv, write_events, write_json
from .scenario import Antenna, ChannelParams, Follow, NodeSpec, Scenario, Trace, load_scenario
from .sim import (
    EventKind,
    HandoverTrigger,
    MeasurementRecord,
    World,
    e2e_throughput,
    handover_scan,
    run,
    simulate,
)

__all__ = [
    "Antenna", "CSV_COLUMNS", "ChannelParams", "EventKind", "Follow", "HandoverTrigger",
    "MeasurementRecord", "NodeSpec", "Obstruction", "ObstructionKind", "ObstructionMap",
    "Scenario", "Trace", "World", "e2e_throughput", "handover_scan", "load_scenario",
    "los_state", "read_csv", "read_json", "run", "simulate", "write_csv", "write_events",
    "write_json",
]
