"""Random assignment instances and the exact-versus-hierarchical benchmark.

Instances mimic a defender line facing several swarms: defenders sit in path
order along a slightly jittered line, swarm centres are scattered in a box in
front of it, and capacities are a random composition of the defender count.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .assignment import AttackerSummary, C2GAPInstance, DefenderSummary, assignment_cost, solve_exact, \
    solve_hierarchical

BENCH_COLUMNS = ("instance_id", "n_swarms", "exact_cost", "exact_time_s", "hier_cost", "hier_time_s",
                 "gap_percent")


def random_capacities(rng: np.random.Generator, n_swarms: int, n_defenders: int, min_cap: int = 1) -> tuple[int, ...]:
    """Uniformly random composition of ``n_defenders`` into ``n_swarms`` parts of at least ``min_cap``."""
    spare = n_defenders - n_swarms * min_cap
    if n_swarms < 1 or spare < 0:
        raise ValueError(f"cannot split {n_defenders} defenders into {n_swarms} parts of >= {min_cap}")
    # stars and bars: choose n_swarms - 1 cut points among spare + n_swarms - 1 slots
    cuts = np.sort(rng.choice(spare + n_swarms - 1, size=n_swarms - 1, replace=False))
    edges = np.concatenate(([-1], cuts, [spare + n_swarms - 1]))
    return tuple(int(x) + min_cap for x in np.diff(edges) - 1)


def random_instance(rng: np.random.Generator, n_swarms: int, n_defenders: int, min_cap: int = 1) -> C2GAPInstance:
    caps = random_capacities(rng, n_swarms, n_defenders, min_cap)
    y = np.arange(n_defenders, dtype=float) - (n_defenders - 1) / 2
    defenders = np.column_stack((rng.normal(0.0, 0.2, n_defenders), y + rng.normal(0.0, 0.1, n_defenders)))
    half = max(10.0, 0.75 * n_defenders)
    centers = np.column_stack((rng.uniform(5.0, 5.0 + half, n_swarms), rng.uniform(-half, half, n_swarms)))
    return C2GAPInstance(defenders, centers, caps)


def hierarchical_for(inst: C2GAPInstance, n_leaf: int = 4):
    att = AttackerSummary(inst.swarm_centers, inst.capacities)
    return solve_hierarchical(att, DefenderSummary(inst.defender_positions), n_leaf)


@dataclass(frozen=True)
class BenchRow:
    instance_id: int
    n_swarms: int
    exact_cost: float
    exact_time_s: float
    hier_cost: float
    hier_time_s: float

    @property
    def gap_percent(self) -> float:
        return 100.0 * (self.hier_cost - self.exact_cost) / self.exact_cost if self.exact_cost > 0 else 0.0


def run_bench(n_min: int, n_max: int, instances: int, defenders_per_swarm: int, seed: int,
              n_leaf: int = 4, timing: bool = False) -> list[BenchRow]:
    """``instances`` random instances for every swarm count in ``[n_min, n_max]``.

    Each instance has ``defenders_per_swarm * n_swarms`` defenders and every
    swarm at least ``min(3, defenders_per_swarm)`` of them.  Wall times are
    measured only when ``timing`` is set, otherwise they are NaN so that the
    rows depend on the seed alone.
    """
    if n_min < 1 or n_max < n_min:
        raise ValueError("need 1 <= n_swarms_min <= n_swarms_max")
    if defenders_per_swarm < 1:
        raise ValueError("defenders per swarm must be positive")
    rng = np.random.default_rng(seed)
    rows: list[BenchRow] = []
    iid = 0
    for n in range(n_min, n_max + 1):
        for _ in range(instances):
            inst = random_instance(rng, n, defenders_per_swarm * n, min(3, defenders_per_swarm))
            t0 = time.perf_counter()
            ex = solve_exact(inst)
            t1 = time.perf_counter()
            hi = hierarchical_for(inst, n_leaf)
            t2 = time.perf_counter()
            rows.append(BenchRow(iid, n, assignment_cost(inst, ex), t1 - t0 if timing else math.nan,
                                 assignment_cost(inst, hi), t2 - t1 if timing else math.nan))
            iid += 1
    return rows
