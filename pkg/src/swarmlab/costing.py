"""Workload-sensitive cost functions and the matrices fed to the allocator.

Every service carries a base cost in [0, 100]; a candidate worker's
measured utilization scales it per resource:

  cpu        base_cost * load**4        (quartic: punish loaded workers late)
  vram       base_cost * load**4
  swap       base_cost * load           (linear: swap pressure counts early)
  bandwidth  base_cost * (1 - load)**4

The weighted sum of the four terms is the cost of running one service on
one worker. Co-located services cost the sum of their members' costs times
a discount factor. Feasibility is a separate boolean channel: a worker can
host a service iff the service's required capability tags are a subset of
the worker's tags; infeasible pairs carry no cost at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .definitions import CostWeights, ServiceSpec
from .errors import DomainError, PoolTooSmall
from .model import WorkerState, WorkloadSample

#: Multiplier turning float costs into the integer grid used by the solver.
COST_SCALE = 10**6


def _check_domain(base_cost: float, load: float):
    if not (isinstance(base_cost, (int, float)) and math.isfinite(base_cost)
            and 0.0 <= base_cost <= 100.0):
        raise DomainError(f"base cost must be within [0, 100], got {base_cost!r}")
    if not (isinstance(load, (int, float)) and math.isfinite(load) and 0.0 <= load <= 1.0):
        raise DomainError(f"load must be within [0, 1], got {load!r}")


def cpu_cost(base_cost: float, load: float) -> float:
    """Cost contribution of CPU utilization: base_cost * load**4."""
    _check_domain(base_cost, load)
    return base_cost * load**4


def vram_cost(base_cost: float, load: float) -> float:
    """Cost contribution of VRAM utilization: base_cost * load**4."""
    _check_domain(base_cost, load)
    return base_cost * load**4


def swap_cost(base_cost: float, load: float) -> float:
    """Cost contribution of swap utilization: base_cost * load."""
    _check_domain(base_cost, load)
    return base_cost * load


def bandwidth_cost(base_cost: float, load: float) -> float:
    """Cost contribution of the link: base_cost * (1 - load)**4.

    ``load`` is the measured link utilization, applied to the formula as
    written: a fully utilized link costs nothing, an idle one costs
    ``base_cost``.
    """
    _check_domain(base_cost, load)
    return base_cost * (1.0 - load) ** 4


def edge_cost(base_cost: float, workload: WorkloadSample, weights: CostWeights) -> float:
    """Weighted cost of running one service on a worker with ``workload``."""
    return (
        weights.cpu * cpu_cost(base_cost, workload.cpu)
        + weights.vram * vram_cost(base_cost, workload.vram)
        + weights.swap * swap_cost(base_cost, workload.swap)
        + weights.bandwidth * bandwidth_cost(base_cost, workload.bandwidth)
    )


def pooled_cost(members: Sequence[ServiceSpec], workload: WorkloadSample,
                weights: CostWeights, discount: float) -> float:
    """Discounted cost of co-locating all ``members`` on one worker."""
    if len(members) < 2:
        raise PoolTooSmall(f"a pool needs at least 2 members, got {len(members)}")
    if not (isinstance(discount, (int, float)) and math.isfinite(discount) and 0.0 < discount <= 1.0):
        raise DomainError(f"discount must be within (0, 1], got {discount!r}")
    return discount * sum(edge_cost(m.predefined_cost, workload, weights) for m in members)


@dataclass(frozen=True)
class CapabilityMatrix:
    """Boolean worker x service feasibility from capability tag inclusion."""

    entries: np.ndarray  # shape (workers, services), dtype bool

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape  # type: ignore[return-value]


def build_capability_matrix(workers: Sequence[WorkerState],
                            services: Sequence[ServiceSpec]) -> CapabilityMatrix:
    """Entry (i, j) is True iff worker i's tags cover service j's needs."""
    entries = np.zeros((len(workers), len(services)), dtype=bool)
    for i, worker in enumerate(workers):
        tags = worker.profile.capabilities
        for j, service in enumerate(services):
            entries[i, j] = service.required_capabilities <= tags
    return CapabilityMatrix(entries=entries)


def pooled_capability(capabilities: CapabilityMatrix, worker_index: int,
                      member_indices: Sequence[int]) -> bool:
    """A worker can host a pool iff it can host every member."""
    return bool(capabilities.entries[worker_index, list(member_indices)].all())


@dataclass(frozen=True)
class DependencyMatrix:
    """Binary service x service relation: entry (k, j) means k depends on j."""

    entries: np.ndarray  # shape (services, services), dtype int8, zero diagonal


def build_dependency_matrix(services: Sequence[ServiceSpec],
                            pairs: Sequence[tuple[str, str]]) -> DependencyMatrix:
    index = {s.name: j for j, s in enumerate(services)}
    entries = np.zeros((len(services), len(services)), dtype=np.int8)
    for dependent, dependency in pairs:
        if dependent not in index or dependency not in index:
            raise DomainError(f"dependency ({dependent!r}, {dependency!r}) references unknown services")
        if dependent == dependency:
            raise DomainError(f"service {dependent!r} cannot depend on itself")
        entries[index[dependent], index[dependency]] = 1
    return DependencyMatrix(entries=entries)


def integerize_cost(value: float, scale: int = COST_SCALE) -> int:
    """Round a float cost onto the solver's integer grid (half to even)."""
    if value < 0:
        raise DomainError(f"costs must be non-negative, got {value!r}")
    return int(round(value * scale))


@dataclass(frozen=True)
class CostMatrix:
    """Worker x allocation-unit costs with an explicit feasibility mask.

    Infeasible pairs are masked out rather than given a sentinel cost, so
    the solver never trades a real assignment against a fake one.
    ``scaled()`` yields the integer grid actually handed to the solver.
    """

    values: np.ndarray    # shape (workers, units), float64; 0.0 where infeasible
    feasible: np.ndarray  # shape (workers, units), bool
    scale: int = COST_SCALE

    def scaled(self) -> np.ndarray:
        out = np.zeros_like(self.values, dtype=np.int64)
        rows, cols = np.nonzero(self.feasible)
        for i, u in zip(rows.tolist(), cols.tolist()):
            out[i, u] = integerize_cost(float(self.values[i, u]), self.scale)
        return out


@dataclass(frozen=True)
class CapacityMatrix:
    """Unit capacities: every worker can host exactly one allocation unit."""

    entries: np.ndarray  # shape (workers, units), dtype int64, all ones


def build_capacity_matrix(num_workers: int, num_units: int) -> CapacityMatrix:
    return CapacityMatrix(entries=np.ones((num_workers, num_units), dtype=np.int64))


def build_cost_matrix(workers: Sequence[WorkerState],
                      unit_members: Sequence[Sequence[ServiceSpec]],
                      capabilities: CapabilityMatrix,
                      service_index: "dict[str, int]",
                      weights: CostWeights,
                      discount: float,
                      scale: int = COST_SCALE) -> CostMatrix:
    """Cost and feasibility of every (worker, unit) pair.

    ``unit_members`` lists the member services of each allocation unit; a
    single-member unit costs its plain edge cost, a pool costs the
    discounted member sum and is feasible only where every member is.
    """
    values = np.zeros((len(workers), len(unit_members)), dtype=np.float64)
    feasible = np.zeros((len(workers), len(unit_members)), dtype=bool)
    for u, members in enumerate(unit_members):
        member_cols = [service_index[m.name] for m in members]
        for i, worker in enumerate(workers):
            if not pooled_capability(capabilities, i, member_cols):
                continue
            feasible[i, u] = True
            if len(members) == 1:
                values[i, u] = edge_cost(members[0].predefined_cost, worker.workload, weights)
            else:
                values[i, u] = pooled_cost(members, worker.workload, weights, discount)
    return CostMatrix(values=values, feasible=feasible, scale=scale)
