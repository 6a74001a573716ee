"""Exact optimizer for desk-scale instances.

solve() certifies optimality by branch-and-bound over the exact MILP built by
the formulation module (same bins, same big-M semantics), then decodes the
serving set and routes back into an Allocation, completes the processing
split canonically with greedy_split, and re-derives every reported number
through formulation.evaluate — so solver and evaluator agree to the last bit.

brute_force() is the deliberately plain oracle twin: exhaustive enumeration
of serving sets and simple-path products with no pruning, lexicographic
tie-breaking by (serving node ids, route link ids).
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import coo_matrix

from . import delaymodel, powermodel
from .delaymodel import DelayTable
from .formulation import (
    BINARY,
    Allocation,
    DemandAllocation,
    MilpModel,
    SolveResult,
    SolverStats,
    evaluate,
    formulate,
)
from .linkmodel import LinkSet, Medium
from .scenario import DemandSpec, ObjectiveWeights, Scenario, eligible_processors

__all__ = ["Limits", "SolverError", "InstanceTooLarge", "solve", "greedy_split", "brute_force"]

CAPACITY_TOL = 1e-9


class SolverError(ValueError):
    pass


class InstanceTooLarge(SolverError):
    pass


@dataclass(frozen=True)
class Limits:
    max_nodes: int = 12
    # Route length cap for the enumerative oracle only; solve()'s routes come
    # from the flow-conservation constraints and are unbounded simple paths.
    max_hops: Optional[int] = None
    force: bool = False


def greedy_split(targets: list[str], demand: DemandSpec, scenario: Scenario) -> dict[str, float]:
    """Fractions per serving node, filling ascending marginal cost per MIPS.

    Marginal cost of node n is (power_max - power_idle) / capacity of its
    processor; ties break by node id. Optimal completion for a fixed serving
    set and fixed routes: power is linear in the fractions and the delay does
    not depend on them.
    """
    load = demand.load or 0.0
    order = sorted(
        targets,
        key=lambda n: (
            (scenario.node(n).processor.power_max - scenario.node(n).processor.power_idle)
            / scenario.node(n).processor.capacity,
            n,
        ),
    )
    total_capacity = sum(scenario.node(n).processor.capacity for n in targets)
    if load > total_capacity * (1.0 + CAPACITY_TOL):
        raise SolverError(
            f"demand {demand.id}: insufficient capacity {total_capacity} MIPS for load {load}"
        )
    fractions = {n: 0.0 for n in targets}
    remaining = load
    for n in order:
        if remaining <= 0.0:
            break
        take = min(remaining, scenario.node(n).processor.capacity)
        fractions[n] = take / load
        remaining -= take
    if remaining > load * 1e-12:
        raise SolverError(f"demand {demand.id}: split left {remaining} MIPS unplaced")
    # Renormalize float dust so fractions sum to exactly 1.
    s = sum(fractions.values())
    if s > 0:
        fractions = {n: x / s for n, x in fractions.items()}
    return fractions


def _split_for(
    serving_by_demand: dict[str, tuple[str, ...]], scenario: Scenario
) -> dict[str, dict[str, float]]:
    """Canonical processing fractions for every demand.

    Single demand uses greedy_split. Multiple demands share node capacity,
    which turns the optimal completion into a small transportation LP.
    """
    demands = [d for d in scenario.demands if d.id in serving_by_demand]
    if len(demands) == 1:
        d = demands[0]
        return {d.id: greedy_split(list(serving_by_demand[d.id]), d, scenario)}
    from scipy.optimize import linprog

    cols = [(d.id, n) for d in demands for n in serving_by_demand[d.id]]
    cost = []
    for d in demands:
        for n in serving_by_demand[d.id]:
            p = scenario.node(n).processor
            cost.append((p.power_max - p.power_idle) / p.capacity * (d.load or 0.0))
    a_eq = [[1.0 if cd == d.id else 0.0 for cd, _ in cols] for d in demands]
    b_eq = [1.0] * len(demands)
    nodes = sorted({n for _, n in cols})
    loads = {d.id: d.load or 0.0 for d in demands}
    a_ub = [[loads[cd] if cn == n else 0.0 for cd, cn in cols] for n in nodes]
    b_ub = [scenario.node(n).processor.capacity for n in nodes]
    res = linprog(
        cost, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
        bounds=[(0.0, 1.0)] * len(cols), method="highs",
    )
    if not res.success:
        raise SolverError(f"processing split infeasible: {res.message}")
    out: dict[str, dict[str, float]] = {d.id: {} for d in demands}
    for (cd, cn), x in zip(cols, res.x):
        out[cd][cn] = float(x)
    for d in demands:  # renormalize solver dust
        s = sum(out[d.id].values())
        out[d.id] = {n: x / s for n, x in out[d.id].items()}
    return out


# ---------------------------------------------------------------------------
# MILP bridge
# ---------------------------------------------------------------------------

def _to_arrays(model: MilpModel):
    names = [v.name for v in model.variables]
    index = {n: i for i, n in enumerate(names)}
    n = len(names)
    c = np.zeros(n)
    for name, coef in model.objective.items():
        c[index[name]] = coef
    integrality = np.array([1 if v.kind == BINARY else 0 for v in model.variables])
    lower = np.array([v.lower for v in model.variables])
    upper = np.array([v.upper if v.upper is not None else np.inf for v in model.variables])
    rows, cols, vals, lo, hi = [], [], [], [], []
    for i, con in enumerate(model.constraints):
        for name, coef in con.coeffs.items():
            rows.append(i)
            cols.append(index[name])
            vals.append(coef)
        if con.sense == "<=":
            lo.append(-np.inf)
            hi.append(con.rhs)
        elif con.sense == ">=":
            lo.append(con.rhs)
            hi.append(np.inf)
        else:
            lo.append(con.rhs)
            hi.append(con.rhs)
    matrix = coo_matrix((vals, (rows, cols)), shape=(len(model.constraints), n))
    return names, c, integrality, Bounds(lower, upper), LinearConstraint(matrix, lo, hi)


def _walk_route(
    scenario: Scenario, linkset: LinkSet, d_id: str, source: str, target: str,
    chosen: set[str],
) -> tuple[str, ...]:
    """Order the chosen link ids into the source->target simple path.

    Spurious flow cycles disconnected from the path (possible at zero power
    weight, where they are cost-free) are dropped.
    """
    by_tx: dict[str, str] = {}
    for link_id in chosen:
        link = linkset.link(link_id)
        if link.tx_node in by_tx:
            raise SolverError(
                f"demand {d_id}, target {target}: branching flow at {link.tx_node}"
            )
        by_tx[link.tx_node] = link_id
    path = []
    at = source
    seen = {source}
    while at != target:
        link_id = by_tx.get(at)
        if link_id is None:
            raise SolverError(f"demand {d_id}, target {target}: flow stops at {at}")
        path.append(link_id)
        at = linkset.link(link_id).rx_node
        if at in seen:
            raise SolverError(f"demand {d_id}, target {target}: flow revisits {at}")
        seen.add(at)
    return tuple(path)


def _decode(
    scenario: Scenario, linkset: LinkSet, model: MilpModel, names: list[str], x: np.ndarray
) -> Allocation:
    value = dict(zip(names, x))
    meta = model.metadata
    demands: dict[str, DemandAllocation] = {}
    serving_by_demand = {}
    for d in scenario.demands:
        serving = tuple(
            n for n in meta["targets"][d.id] if value.get(meta["y"][(d.id, n)], 0.0) > 0.5
        )
        serving_by_demand[d.id] = serving
    splits = _split_for(serving_by_demand, scenario)
    for d in scenario.demands:
        serving = serving_by_demand[d.id]
        routes: dict[str, tuple[str, ...]] = {}
        for n in serving:
            if n == d.source:
                routes[n] = ()
                continue
            chosen = {
                link_id
                for link_id in meta["links"]
                if value.get(meta["r"][(d.id, n, link_id)], 0.0) > 0.5
            }
            routes[n] = _walk_route(scenario, linkset, d.id, d.source, n, chosen)
        demands[d.id] = DemandAllocation(
            serving=serving, fractions=splits[d.id], routes=routes
        )
    return Allocation(demands=demands)


def solve(
    scenario: Scenario,
    linkset: LinkSet,
    tables: dict[str, DelayTable],
    weights: ObjectiveWeights,
    limits: Limits = Limits(),
) -> SolveResult:
    """Provably optimal allocation, or an infeasibility report naming the
    binding constraint family."""
    start = time.perf_counter()
    if len(scenario.nodes) > limits.max_nodes and not limits.force:
        raise InstanceTooLarge(
            f"instance too large: {len(scenario.nodes)} nodes "
            f"(limit {limits.max_nodes}; use force to override)"
        )
    eligible = sorted(eligible_processors(scenario))
    if not eligible:
        return SolveResult(
            status="infeasible", weights=weights, infeasible_reason="no eligible processors"
        )
    total_capacity = sum(scenario.node(n).processor.capacity for n in eligible)
    for d in scenario.demands:
        if (d.load or 0.0) > total_capacity * (1.0 + CAPACITY_TOL):
            return SolveResult(
                status="infeasible",
                weights=weights,
                stats=SolverStats(wall_time=time.perf_counter() - start),
                infeasible_reason=(
                    f"C3: demand {d.id} load {d.load} MIPS exceeds eligible processing "
                    f"capacity {total_capacity} MIPS"
                ),
            )

    model = formulate(scenario, linkset, tables, weights, trim_inactive_delay=True)
    names, c, integrality, bounds, constraint = _to_arrays(model)
    res = milp(
        c,
        constraints=constraint,
        bounds=bounds,
        integrality=integrality,
        options={"mip_rel_gap": 0.0, "presolve": True},
    )
    wall = time.perf_counter() - start
    stats = SolverStats(nodes_explored=int(getattr(res, "mip_node_count", 0) or 0), wall_time=wall)
    if res.status == 2 or not res.success:
        return SolveResult(
            status="infeasible",
            weights=weights,
            stats=stats,
            infeasible_reason="C4/C5/C7: no feasible routing to any sufficient serving set",
        )
    allocation = _decode(scenario, linkset, model, names, res.x)
    result = evaluate(scenario, linkset, tables, allocation, weights)
    return SolveResult(
        status="optimal",
        weights=weights,
        allocation=allocation,
        total_power=result.total_power,
        max_delay=result.max_delay,
        objective_value=result.objective_value,
        per_device_power=result.per_device_power,
        per_target_delay=result.per_target_delay,
        stats=stats,
    )


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------

def _all_simple_paths(
    linkset: LinkSet, source: str, target: str, max_hops: Optional[int]
) -> list[tuple[str, ...]]:
    paths: list[tuple[str, ...]] = []

    def walk(vertex: str, visited: frozenset, path: tuple[str, ...]):
        if vertex == target:
            paths.append(path)
            return
        if max_hops is not None and len(path) >= max_hops:
            return
        for link in sorted(linkset.out_links(vertex), key=lambda l: l.id):
            if link.rx_node in visited:
                continue
            walk(link.rx_node, visited | {link.rx_node}, path + (link.id,))

    walk(source, frozenset({source}), ())
    return paths


def brute_force(
    scenario: Scenario,
    linkset: LinkSet,
    tables: dict[str, DelayTable],
    weights: ObjectiveWeights,
    limits: Limits = Limits(max_nodes=6),
) -> SolveResult:
    """Exhaustive reference search: every serving set, every route product.

    Single demand, at most 6 nodes. No pruning beyond hard feasibility;
    deterministic lexicographic tie-breaking.
    """
    start = time.perf_counter()
    if len(scenario.nodes) > limits.max_nodes:
        raise InstanceTooLarge(f"brute_force limited to {limits.max_nodes} nodes")
    if len(scenario.demands) != 1:
        raise SolverError("brute_force handles a single demand")
    demand = scenario.demands[0]
    t_bps = demand.traffic * 1000.0
    eligible = sorted(eligible_processors(scenario))
    packet = scenario.settings.packet_size

    path_cache = {
        n: _all_simple_paths(linkset, demand.source, n, limits.max_hops)
        for n in eligible
        if n != demand.source
    }
    link_cap = {
        l.id: min(l.capacity, tables[l.id].arrival_bounds[-1] * 8.0 * packet)
        for l in linkset.links
    }
    cells = {e.id: {l.id for l in linkset.cell_links(e.id)} for e in scenario.edges()}
    cell_bw = {e.id: e.radio(Medium.WIFI).bandwidth for e in scenario.edges()}
    specs = powermodel.device_specs(scenario)

    def feasible(route_set: list[tuple[str, ...]]) -> bool:
        traffic: dict[str, float] = {}
        for route in route_set:
            for l in route:
                traffic[l] = traffic.get(l, 0.0) + t_bps
        for l, t in traffic.items():
            if t > link_cap[l] * (1 + CAPACITY_TOL):
                return False
        for e, ids in cells.items():
            if sum(traffic.get(l, 0.0) for l in ids) > cell_bw[e] * (1 + CAPACITY_TOL):
                return False
        dev: dict[str, float] = {}
        for l, t in traffic.items():
            link = linkset.link(l)
            dev[link.tx_device] = dev.get(link.tx_device, 0.0) + t
            dev[link.rx_device] = dev.get(link.rx_device, 0.0) + t
        for g, t in dev.items():
            spec = specs.get(g)
            if spec is not None and t > spec.capacity * (1 + CAPACITY_TOL):
                return False
        return True

    best: Optional[tuple[float, Allocation, float, float]] = None
    explored = 0
    capacity_ok = False
    for k in range(1, len(eligible) + 1):
        for serving in itertools.combinations(eligible, k):
            cap = sum(scenario.node(n).processor.capacity for n in serving)
            if cap < (demand.load or 0.0) * (1.0 - CAPACITY_TOL):
                continue
            capacity_ok = True
            remote = [n for n in serving if n != demand.source]
            if any(not path_cache[n] for n in remote):
                continue
            fractions = greedy_split(list(serving), demand, scenario)
            if any(f == 0.0 for f in fractions.values()):
                # Weakly dominated: dropping a zero-fraction node removes its
                # stream without raising any power or delay term, and the
                # smaller serving set is enumerated on its own.
                continue
            for route_combo in itertools.product(*(path_cache[n] for n in remote)):
                explored += 1
                if not feasible(list(route_combo)):
                    continue
                alloc = Allocation(
                    demands={
                        demand.id: DemandAllocation(
                            serving=serving,
                            fractions=dict(fractions),
                            routes={
                                **{n: r for n, r in zip(remote, route_combo)},
                                **({demand.source: ()} if demand.source in serving else {}),
                            },
                        )
                    }
                )
                lam = alloc.link_lambda(scenario)
                max_delay = 0.0
                for route in route_combo:
                    links = [linkset.link(l) for l in route]
                    max_delay = max(max_delay, delaymodel.path_delay(links, tables, lam))
                power = powermodel.system_power(scenario, linkset, alloc).total
                obj = weights.w_power * power + weights.w_delay * max_delay
                if best is None:
                    best = (obj, alloc, power, max_delay)
                    continue
                tol = 1e-9 * max(1.0, abs(best[0]))
                if obj < best[0] - tol:
                    best = (obj, alloc, power, max_delay)
                elif abs(obj - best[0]) <= tol and alloc.sort_key() < best[1].sort_key():
                    best = (obj, alloc, power, max_delay)

    wall = time.perf_counter() - start
    stats = SolverStats(nodes_explored=explored, wall_time=wall)
    if best is None:
        reason = (
            "C3: demand load exceeds eligible processing capacity"
            if not capacity_ok
            else "C4/C5: no feasible routing to any sufficient serving set"
        )
        return SolveResult(
            status="infeasible", weights=weights, stats=stats, infeasible_reason=reason
        )
    _, alloc, power, max_delay = best
    result = evaluate(scenario, linkset, tables, alloc, weights)
    return SolveResult(
        status="optimal",
        weights=weights,
        allocation=alloc,
        total_power=result.total_power,
        max_delay=result.max_delay,
        objective_value=result.objective_value,
        per_device_power=result.per_device_power,
        per_target_delay=result.per_target_delay,
        stats=stats,
    )
