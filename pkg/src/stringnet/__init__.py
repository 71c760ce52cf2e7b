"""Multi-swarm string-net herding: clustering, assignment, formations and simulation."""

from __future__ import annotations

from .assignment import AssignmentMatrix, C2GAPInstance, assignment_cost, solve_exact, solve_hierarchical, \
    split_equal
from .clustering import SwarmPartition, dbscan, dbscan_eps
from .core import AgentState, Disk, ScenarioConfig, StringNetGraph, speed_bound, validate_config
from .dynamics import step
from .engine import Phase, World, simulate

__all__ = [
    "AgentState", "AssignmentMatrix", "C2GAPInstance", "Disk", "Phase", "ScenarioConfig", "StringNetGraph",
    "SwarmPartition", "World", "assignment_cost", "dbscan", "dbscan_eps", "simulate", "solve_exact",
    "solve_hierarchical", "speed_bound", "split_equal", "step", "validate_config",
]
