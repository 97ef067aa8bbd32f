"""Constraint-respecting delay-minimizing placement heuristic and validator.

The heuristic places instances in chain order, always trying the cheapest
feasible server first (summed delay to already-placed upstream replicas,
ties to the lower server id) and backtracks within a node budget, keeping
the best complete assignment found so far (branch and bound). On small
instances the budget is enough to certify the optimum; on larger ones the
first descent is the plain greedy placement and the remaining budget buys
improvement.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

from .netmodel import (
    ADJACENT_PAIRS,
    CHAIN,
    DEPENDENCY_LEVEL,
    SfcSpec,
    Topology,
    VnfType,
    server_delay,
)

ComputationalPath = tuple[int, ...]


class InfeasiblePlacement(Exception):
    """No constraint-satisfying assignment found within the backtracking budget."""


@dataclass(frozen=True)
class Placement:
    """Assignment of every instance id to a server id."""

    assignment: dict[int, int]

    def server_of(self, instance_id: int) -> int:
        return self.assignment[instance_id]


@dataclass
class ValidationReport:
    valid: bool
    violations: list[tuple[str, tuple]] = field(default_factory=list)


def dependent_pairs(sfc: SfcSpec) -> list[tuple[int, int]]:
    """All (upstream, downstream) instance-id pairs over adjacent chain types."""
    pairs = []
    for ta, tb in ADJACENT_PAIRS:
        for a in sfc.replicas(ta):
            for b in sfc.replicas(tb):
                pairs.append((a.id, b.id))
    return pairs


def enumerate_cps(sfc: SfcSpec) -> list[ComputationalPath]:
    """Every computational path: one replica per type, lexicographic in replica index."""
    per_type = [[i.id for i in sfc.replicas(t)] for t in CHAIN]
    return [tuple(p) for p in itertools.product(*per_type)]


def cp_delay(topo: Topology, p: Placement, cp: ComputationalPath) -> float:
    """Sum of inter-server delays over the adjacent hops of one path."""
    total = 0.0
    for a, b in zip(cp, cp[1:]):
        total += server_delay(topo, p.server_of(a), p.server_of(b))
    return total


def avg_cp_delay(topo: Topology, p: Placement, sfc: SfcSpec) -> float:
    """Arithmetic mean of path delay over all computational paths."""
    cps = enumerate_cps(sfc)
    return sum(cp_delay(topo, p, cp) for cp in cps) / len(cps)


def total_pair_delay(topo: Topology, p: Placement, sfc: SfcSpec) -> float:
    """Summed delay over all dependent instance pairs (the heuristic's objective)."""
    return sum(
        server_delay(topo, p.server_of(a), p.server_of(b))
        for a, b in dependent_pairs(sfc)
    )


def validate_placement(topo: Topology, sfc: SfcSpec, p: Placement) -> ValidationReport:
    """Check capacity, delay tolerance, anti-location and dependency; list every violation."""
    violations: list[tuple[str, tuple]] = []
    by_id = {i.id: i for i in sfc.instances}

    missing = [i.id for i in sfc.instances if i.id not in p.assignment]
    if missing:
        violations.append(("dependency", tuple(missing)))
        return ValidationReport(valid=False, violations=violations)

    # (1) capacity: summed demand per server within capacity
    cpu_used = {s.id: 0.0 for s in topo.servers}
    mem_used = {s.id: 0.0 for s in topo.servers}
    for inst in sfc.instances:
        sid = p.server_of(inst.id)
        if not (0 <= sid < topo.n_servers):
            violations.append(("capacity", (inst.id, sid)))
            return ValidationReport(valid=False, violations=violations)
        cpu_used[sid] += inst.cpu_demand
        mem_used[sid] += inst.mem_demand
    for s in topo.servers:
        if cpu_used[s.id] > s.cpu_capacity or mem_used[s.id] > s.mem_capacity:
            violations.append(("capacity", (s.id,)))

    # (2) delay tolerance over every dependent pair (inclusive bound)
    for a, b in dependent_pairs(sfc):
        tol = sfc.tolerance[(by_id[a].vnf_type, by_id[b].vnf_type)]
        if server_delay(topo, p.server_of(a), p.server_of(b)) > tol:
            violations.append(("delay_tolerance", (a, b)))

    # (3) anti-location: same-type replicas on distinct host groups
    for t in CHAIN:
        groups: dict[int, int] = {}
        for inst in sfc.replicas(t):
            g = topo.servers[p.server_of(inst.id)].host_group
            if g in groups:
                violations.append(("anti_location", (groups[g], inst.id)))
            else:
                groups[g] = inst.id
    # (4) dependency: every path realizable under the tolerance bound
    for cp in enumerate_cps(sfc):
        for a, b in zip(cp, cp[1:]):
            tol = sfc.tolerance[(by_id[a].vnf_type, by_id[b].vnf_type)]
            if server_delay(topo, p.server_of(a), p.server_of(b)) > tol:
                violations.append(("dependency", cp))
                break

    return ValidationReport(valid=not violations, violations=violations)


def place_teacher(topo: Topology, sfc: SfcSpec, budget: int = 1000) -> Placement:
    """Place the chain on the topology, minimizing total dependent-pair delay.

    Depth-first search in chain order; children ordered by incremental delay
    cost then server id; branches whose partial cost cannot beat the best
    complete assignment are pruned. ``budget`` caps the number of expanded
    nodes; the best complete assignment seen is returned.
    """
    order = [i for t in CHAIN for i in sfc.replicas(t)]
    n_inst = len(order)
    by_id = {i.id: i for i in sfc.instances}
    upstream: list[list[int]] = []  # per order position: already-placed dependent ids
    for k, inst in enumerate(order):
        pos = DEPENDENCY_LEVEL[inst.vnf_type]
        prev_type = CHAIN[pos - 1] if pos > 0 else None
        upstream.append(
            [i.id for i in order[:k] if prev_type is not None and i.vnf_type == prev_type]
        )

    delay = topo.delay
    best_cost = float("inf")
    best_assignment: dict[int, int] | None = None
    nodes = 0

    assignment: dict[int, int] = {}
    cpu_left = [s.cpu_capacity for s in topo.servers]
    mem_left = [s.mem_capacity for s in topo.servers]

    def candidates(k: int) -> list[tuple[float, int]]:
        inst = order[k]
        out = []
        used_groups = {
            topo.servers[assignment[i.id]].host_group
            for i in order[:k]
            if i.vnf_type == inst.vnf_type
        }
        for s in topo.servers:
            if inst.cpu_demand > cpu_left[s.id] or inst.mem_demand > mem_left[s.id]:
                continue
            if s.host_group in used_groups:
                continue
            cost = 0.0
            ok = True
            for uid in upstream[k]:
                d = delay[assignment[uid], s.id]
                tol = sfc.tolerance[(by_id[uid].vnf_type, inst.vnf_type)]
                if d > tol:
                    ok = False
                    break
                cost += d
            if ok:
                out.append((cost, s.id))
        out.sort()
        return out

    def search(k: int, cost: float):
        nonlocal best_cost, best_assignment, nodes
        if k == n_inst:
            if cost < best_cost:
                best_cost = cost
                best_assignment = dict(assignment)
            return
        inst = order[k]
        for inc, sid in candidates(k):
            if nodes >= budget:
                return
            if cost + inc >= best_cost:
                break  # candidates sorted: no cheaper child remains
            nodes += 1
            assignment[inst.id] = sid
            cpu_left[sid] -= inst.cpu_demand
            mem_left[sid] -= inst.mem_demand
            search(k + 1, cost + inc)
            cpu_left[sid] += inst.cpu_demand
            mem_left[sid] += inst.mem_demand
            del assignment[inst.id]

    search(0, 0.0)
    if best_assignment is None:
        raise InfeasiblePlacement(
            f"no valid assignment found within a budget of {budget} nodes"
        )
    return Placement(assignment=best_assignment)


# ---------------------------------------------------------------------------
# Persistence


def placement_rows_to_json(rows: list[dict]) -> str:
    """Serialize per-topology placement rows (index, assignment, validity, CP delays)."""
    return json.dumps(rows, sort_keys=True, indent=1) + "\n"


def placement_row(index: int, topo: Topology, sfc: SfcSpec, p: Placement) -> dict:
    report = validate_placement(topo, sfc, p)
    return {
        "index": index,
        "assignment": {str(k): v for k, v in p.assignment.items()},
        "valid": report.valid,
        "cp_delays": [cp_delay(topo, p, cp) for cp in enumerate_cps(sfc)],
    }


def placement_from_row(row: dict) -> Placement:
    return Placement(assignment={int(k): int(v) for k, v in row["assignment"].items()})
