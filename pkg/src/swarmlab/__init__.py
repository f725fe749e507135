"""Container-style experiment orchestration for robot swarms, simulated.

Declarative service/experiment/cluster definitions, a workload-sensitive
min-cost max-flow service allocator, a deterministic master-worker
lifecycle simulator, and fairness metrics over allocation histories.
"""

from .allocator import (
    AllocationResult,
    AllocationUnit,
    Assignment,
    allocate,
    allocate_experiment,
    enumerate_unit_configurations,
    explain,
)
from .costing import (
    COST_SCALE,
    bandwidth_cost,
    build_capability_matrix,
    build_dependency_matrix,
    cpu_cost,
    edge_cost,
    pooled_capability,
    pooled_cost,
    swap_cost,
    vram_cost,
)
from .definitions import (
    ClusterSpec,
    CostWeights,
    ExperimentSpec,
    ServiceSpec,
    load_cluster,
    load_edf,
    parse_cdf,
    parse_cluster,
    parse_edf,
    serialize_cdf,
    serialize_cluster,
    serialize_edf,
)
from .metrics import (
    AllocationHistory,
    allocation_frequency,
    build_history,
    cost_dispersion,
    emit_report,
    fairness_series,
    jains_index,
)
from .model import (
    HardwareProfile,
    Role,
    SwarmState,
    WorkerState,
    WorkerStatus,
    WorkloadSample,
    join_worker,
    leave_worker,
    new_swarm,
    role_of,
)
from .swarmsim import (
    KvRegistry,
    SimConfig,
    SimTrace,
    WorkloadGenerator,
    measure_scaling,
    run_experiment,
    run_iteration,
    trace_to_jsonl,
)

__version__ = "0.1.0"
