"""Mixed-integer linear model of the allocation problem, plus an
independent allocation evaluator.

Decision structure: processing splits fractionally across serving nodes
(x, y) while the data stream is replicated whole to every serving node over
one simple path each (binary r). Queueing delay enters linearly through the
per-link lookup-table bins (z) and a per-(demand, target, link) gated copy
(q) feeding the max-delay variable T.

The evaluator recomputes constraints, power and delay from first principles
(powermodel/delaymodel) and shares no bookkeeping with the solver.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from . import delaymodel, powermodel
from .delaymodel import DelayTable
from .linkmodel import Link, LinkSet, Medium
from .scenario import (
    ObjectivePreset,
    ObjectiveWeights,
    Scenario,
    eligible_processors,
)

__all__ = [
    "Variable",
    "Constraint",
    "MilpModel",
    "DemandAllocation",
    "Allocation",
    "SolveResult",
    "SolverStats",
    "AllocationError",
    "FormulationError",
    "formulate",
    "evaluate",
    "make_weights",
    "model_census",
]

FRACTION_TOL = 1e-9
OBJECTIVE_TOL = 1e-9


class FormulationError(ValueError):
    pass


class AllocationError(ValueError):
    """Constraint violation report: family, offending entity, slack."""

    def __init__(self, family: str, entity: str, slack: float, detail: str = ""):
        self.family = family
        self.entity = entity
        self.slack = slack
        msg = f"{family}, {entity}, deficit {slack:g}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


# ---------------------------------------------------------------------------
# Allocation / result types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DemandAllocation:
    serving: tuple[str, ...]  # node ids with y = 1, sorted
    fractions: dict[str, float]  # node id -> x in [0, 1]
    routes: dict[str, tuple[str, ...]]  # node id -> link ids (empty for the source)


@dataclass(frozen=True)
class Allocation:
    demands: dict[str, DemandAllocation]

    def link_traffic(self, scenario: Scenario) -> dict[str, float]:
        """bit/s carried per link; replicated streams add up per target."""
        traffic: dict[str, float] = {}
        for d in scenario.demands:
            da = self.demands.get(d.id)
            if da is None:
                continue
            t_bps = d.traffic * 1000.0
            for route in da.routes.values():
                for link_id in route:
                    traffic[link_id] = traffic.get(link_id, 0.0) + t_bps
        return traffic

    def link_lambda(self, scenario: Scenario) -> dict[str, float]:
        """packets/s per link at the configured packet size."""
        packet = scenario.settings.packet_size
        return {
            l: delaymodel.packets_per_second(t, packet)
            for l, t in self.link_traffic(scenario).items()
        }

    def processing_mips(self, scenario: Scenario) -> dict[str, float]:
        mips: dict[str, float] = {}
        for d in scenario.demands:
            da = self.demands.get(d.id)
            if da is None:
                continue
            for node_id, x in da.fractions.items():
                if x > 0.0:
                    mips[node_id] = mips.get(node_id, 0.0) + x * (d.load or 0.0)
        return mips

    def sort_key(self) -> tuple:
        """Deterministic comparison key for tie-breaking between optima."""
        key = []
        for d_id in sorted(self.demands):
            da = self.demands[d_id]
            key.append((d_id, da.serving, tuple(da.routes[n] for n in da.serving)))
        return tuple(key)


@dataclass(frozen=True)
class SolverStats:
    nodes_explored: int = 0
    wall_time: float = 0.0


@dataclass(frozen=True)
class SolveResult:
    status: str  # "optimal" | "infeasible"
    weights: ObjectiveWeights
    allocation: Optional[Allocation] = None
    total_power: float = 0.0
    max_delay: float = 0.0
    objective_value: float = 0.0
    per_device_power: dict[str, float] = field(default_factory=dict)
    per_target_delay: dict[str, dict[str, float]] = field(default_factory=dict)
    stats: SolverStats = field(default_factory=SolverStats)
    infeasible_reason: str = ""


# ---------------------------------------------------------------------------
# MILP model container
# ---------------------------------------------------------------------------

BINARY = "binary"
CONTINUOUS = "continuous"


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str  # BINARY | CONTINUOUS
    lower: float = 0.0
    upper: Optional[float] = None  # None = +inf


@dataclass(frozen=True)
class Constraint:
    name: str
    coeffs: dict[str, float]
    sense: str  # "<=", ">=", "="
    rhs: float


@dataclass(frozen=True)
class MilpModel:
    variables: tuple[Variable, ...]
    constraints: tuple[Constraint, ...]
    objective: dict[str, float]
    minimize: bool = True
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        declared = {v.name for v in self.variables}
        for c in self.constraints:
            undeclared = set(c.coeffs) - declared
            if undeclared:
                raise FormulationError(f"constraint {c.name} references undeclared {undeclared}")
        if set(self.objective) - declared:
            raise FormulationError("objective references undeclared variables")


_NAME_RE = re.compile(r"[^A-Za-z0-9]")


def _nm(raw: str) -> str:
    return _NAME_RE.sub("_", raw)


def formulate(
    scenario: Scenario,
    linkset: LinkSet,
    tables: dict[str, DelayTable],
    weights: ObjectiveWeights,
    trim_inactive_delay: bool = False,
) -> MilpModel:
    """Assemble variables, constraints and the weighted objective.

    Constraint families (names carry the family prefix):
      C1 demand completion, C2 linking, C3 processing capacity,
      C4 per-target unsplittable routing (flow conservation + simple path),
      C5a per-link capacity, C5b shared AP cell budget, C5c per-interface
      aggregate budget, C6 traffic-driven activation, C7 queue bin selection,
      C8 queue-on-path gating, C9 max-delay epigraph.

    With trim_inactive_delay and a zero delay weight, the queue-bin machinery
    (z, lam, Q, q, T; C7 bin selection, C8, C9) is replaced by the equivalent
    plain stability cap per link — the delay variables are unconstrained by
    the objective there and only inflate the search space.
    """
    with_delay = not (trim_inactive_delay and weights.w_delay == 0.0)
    eligible = sorted(eligible_processors(scenario))
    if not eligible:
        raise FormulationError("no eligible processors")

    specs = powermodel.device_specs(scenario)
    packet = scenario.settings.packet_size
    node_ids = [n.id for n in scenario.nodes]

    variables: list[Variable] = []
    constraints: list[Constraint] = []
    objective: dict[str, float] = {}

    def var(name: str, kind: str, lower: float = 0.0, upper: Optional[float] = None) -> str:
        if kind == BINARY:
            lower, upper = 0.0, 1.0
        variables.append(Variable(name, kind, lower, upper))
        return name

    def con(name: str, coeffs: dict[str, float], sense: str, rhs: float) -> None:
        constraints.append(Constraint(name, dict(coeffs), sense, rhs))

    def obj_add(name: str, coef: float) -> None:
        if coef != 0.0:
            objective[name] = objective.get(name, 0.0) + coef

    # Activation variables, one per modeled device.
    a = {dev: var(f"a_{_nm(dev)}", BINARY) for dev in sorted(specs)}

    # Queue bin variables per link.
    z: dict[str, list[str]] = {}
    lam: dict[str, str] = {}
    q_link: dict[str, str] = {}
    if with_delay:
        for link in linkset.links:
            table = tables[link.id]
            z[link.id] = [var(f"z_{link.id}_k{k + 1}", BINARY) for k in range(len(table.delays))]
            lam[link.id] = var(f"lam_{link.id}", CONTINUOUS, 0.0, table.arrival_bounds[-1])
            q_link[link.id] = var(f"Q_{link.id}", CONTINUOUS, 0.0, table.delays[-1])
        t_var = var("T", CONTINUOUS, 0.0, None)

    x: dict[tuple[str, str], str] = {}
    y: dict[tuple[str, str], str] = {}
    r: dict[tuple[str, str, str], str] = {}
    q: dict[tuple[str, str, str], str] = {}

    for d in scenario.demands:
        for n in eligible:
            x[d.id, n] = var(f"x_{_nm(d.id)}_{_nm(n)}", CONTINUOUS, 0.0, 1.0)
            y[d.id, n] = var(f"y_{_nm(d.id)}_{_nm(n)}", BINARY)
            if n != d.source:
                for link in linkset.links:
                    r[d.id, n, link.id] = var(f"r_{_nm(d.id)}_{_nm(n)}_{link.id}", BINARY)
                    if with_delay:
                        q[d.id, n, link.id] = var(
                            f"q_{_nm(d.id)}_{_nm(n)}_{link.id}", CONTINUOUS, 0.0, None
                        )

    # C1 / C2 / C3.
    for d in scenario.demands:
        con(f"C1_complete_{_nm(d.id)}", {x[d.id, n]: 1.0 for n in eligible}, "=", 1.0)
        for n in eligible:
            con(f"C2_xy_{_nm(d.id)}_{_nm(n)}", {x[d.id, n]: 1.0, y[d.id, n]: -1.0}, "<=", 0.0)
            con(
                f"C2_ya_{_nm(d.id)}_{_nm(n)}",
                {y[d.id, n]: 1.0, a[f"{n}.cpu"]: -1.0},
                "<=",
                0.0,
            )
    for n in eligible:
        cap = scenario.node(n).processor.capacity
        coeffs = {x[d.id, n]: (d.load or 0.0) for d in scenario.demands}
        con(f"C3_cap_{_nm(n)}", coeffs, "<=", cap)

    # C4: binary per-target flow conservation plus simple-path degree caps.
    for d in scenario.demands:
        for n in eligible:
            if n == d.source:
                continue
            for v in node_ids:
                coeffs: dict[str, float] = {}
                for link in linkset.out_links(v):
                    coeffs[r[d.id, n, link.id]] = coeffs.get(r[d.id, n, link.id], 0.0) + 1.0
                for link in linkset.in_links(v):
                    coeffs[r[d.id, n, link.id]] = coeffs.get(r[d.id, n, link.id], 0.0) - 1.0
                ind = 1.0 if v == d.source else (-1.0 if v == n else 0.0)
                if ind != 0.0:
                    coeffs[y[d.id, n]] = -ind
                if coeffs:
                    con(f"C4_flow_{_nm(d.id)}_{_nm(n)}_{_nm(v)}", coeffs, "=", 0.0)
                out = {r[d.id, n, link.id]: 1.0 for link in linkset.out_links(v)}
                if out:
                    con(f"C4_deg_{_nm(d.id)}_{_nm(n)}_{_nm(v)}", out, "<=", 1.0)

    def stream_vars(link: Link) -> dict[str, float]:
        """bit/s carried on `link` as a linear form in the r variables."""
        coeffs: dict[str, float] = {}
        for d in scenario.demands:
            t_bps = d.traffic * 1000.0
            for n in eligible:
                if n == d.source:
                    continue
                coeffs[r[d.id, n, link.id]] = t_bps
        return coeffs

    # C5a per-link, C5b per-AP-cell, C5c per-interface budgets.
    for link in linkset.links:
        con(f"C5a_link_{link.id}", stream_vars(link), "<=", link.capacity)
    for e in scenario.edges():
        cell = linkset.cell_links(e.id)
        if not cell:
            continue
        coeffs: dict[str, float] = {}
        for link in cell:
            for name, c in stream_vars(link).items():
                coeffs[name] = coeffs.get(name, 0.0) + c
        ap_bw = e.radio(Medium.WIFI).bandwidth
        con(f"C5b_cell_{_nm(e.id)}", coeffs, "<=", ap_bw)
    touching: dict[str, list[Link]] = {}
    for link in linkset.links:
        touching.setdefault(link.tx_device, []).append(link)
        touching.setdefault(link.rx_device, []).append(link)
    for dev in sorted(touching):
        spec = specs.get(dev)
        if spec is None:
            continue
        coeffs = {}
        for link in touching[dev]:
            for name, c in stream_vars(link).items():
                coeffs[name] = coeffs.get(name, 0.0) + c
        con(f"C5c_iface_{_nm(dev)}", coeffs, "<=", spec.capacity)

    # C6: carrying traffic activates both endpoint devices.
    for d in scenario.demands:
        for n in eligible:
            if n == d.source:
                continue
            for link in linkset.links:
                rv = r[d.id, n, link.id]
                for dev in (link.tx_device, link.rx_device):
                    if dev in a:
                        con(f"C6_act_{rv}_{_nm(dev)}", {rv: 1.0, a[dev]: -1.0}, "<=", 0.0)

    if with_delay:
        # C7: one bin per link; arrival rate definition and bin cover; Q selection.
        for link in linkset.links:
            table = tables[link.id]
            con(f"C7_onebin_{link.id}", {zv: 1.0 for zv in z[link.id]}, "=", 1.0)
            lam_def = {lam[link.id]: -1.0}
            for d in scenario.demands:
                pps = delaymodel.packets_per_second(d.traffic * 1000.0, packet)
                for n in eligible:
                    if n == d.source:
                        continue
                    lam_def[r[d.id, n, link.id]] = pps
            con(f"C7_lam_{link.id}", lam_def, "=", 0.0)
            cover = {lam[link.id]: 1.0}
            for k, zv in enumerate(z[link.id]):
                cover[zv] = -table.arrival_bounds[k]
            con(f"C7_cover_{link.id}", cover, "<=", 0.0)
            qdef = {q_link[link.id]: -1.0}
            for k, zv in enumerate(z[link.id]):
                qdef[zv] = table.delays[k]
            con(f"C7_qdef_{link.id}", qdef, "=", 0.0)

        # C8: q_{d,n,l} >= Q_l - M_l (1 - r); M_l is the link's table maximum.
        for (d_id, n, l_id), qv in q.items():
            big_m = tables[l_id].delays[-1]
            con(
                f"C8_gate_{qv}",
                {q_link[l_id]: 1.0, qv: -1.0, r[d_id, n, l_id]: big_m},
                "<=",
                big_m,
            )

        # C9: per-(demand, target) max-delay epigraph.
        for d in scenario.demands:
            for n in eligible:
                if n == d.source:
                    continue
                coeffs = {t_var: -1.0}
                for link in linkset.links:
                    coeffs[r[d.id, n, link.id]] = link.prop_delay + link.tx_delay_per_packet
                    coeffs[q[d.id, n, link.id]] = 1.0
                con(f"C9_delay_{_nm(d.id)}_{_nm(n)}", coeffs, "<=", 0.0)
    else:
        # C7 stability kept as a plain linear cap on the aggregate arrival
        # rate (identical feasible set; the bin machinery is objective-inert).
        for link in linkset.links:
            table = tables[link.id]
            stab: dict[str, float] = {}
            for d in scenario.demands:
                pps = delaymodel.packets_per_second(d.traffic * 1000.0, packet)
                for n in eligible:
                    if n == d.source:
                        continue
                    stab[r[d.id, n, link.id]] = pps
            if stab:
                con(f"C7_stab_{link.id}", stab, "<=", table.arrival_bounds[-1])

    # Objective: w_power * P_total(a, x, r) + w_delay * T.
    wp, wd = weights.w_power, weights.w_delay
    for dev, av in a.items():
        obj_add(av, wp * specs[dev].power_idle)
    for d in scenario.demands:
        for n in eligible:
            spec = specs[f"{n}.cpu"]
            span = spec.power_max - spec.power_idle
            obj_add(x[d.id, n], wp * span * (d.load or 0.0) / spec.capacity)
    core = scenario.settings.core_energy_per_bit
    for link in linkset.links:
        for d in scenario.demands:
            t_bps = d.traffic * 1000.0
            for n in eligible:
                if n == d.source:
                    continue
                rv = r[d.id, n, link.id]
                coef = 0.0
                for dev in (link.tx_device, link.rx_device):
                    spec = specs.get(dev)
                    if spec is not None:
                        coef += (spec.power_max - spec.power_idle) * t_bps / spec.capacity
                tx_spec = specs.get(link.tx_device)
                if tx_spec is not None:
                    coef += link.radiated_power * t_bps / tx_spec.capacity
                if link.medium == Medium.FIBER:
                    coef += core * t_bps
                obj_add(rv, wp * coef)
    if with_delay:
        obj_add(t_var, wd)

    metadata = {
        "eligible": eligible,
        "weights": {"w_power": wp, "w_delay": wd},
        "big_m": {l.id: tables[l.id].delays[-1] for l in linkset.links},
        "bins": scenario.settings.bins,
        "census": model_census_formula(scenario, linkset),
        # Variable-name maps for decoding a solution vector back into an
        # Allocation (solver module).
        "targets": {d.id: list(eligible) for d in scenario.demands},
        "links": [l.id for l in linkset.links],
        "x": dict(x),
        "y": dict(y),
        "r": dict(r),
    }
    return MilpModel(tuple(variables), tuple(constraints), objective, True, metadata)


def model_census(model: MilpModel) -> dict[str, int]:
    return {
        "variables": len(model.variables),
        "binaries": sum(1 for v in model.variables if v.kind == BINARY),
        "constraints": len(model.constraints),
    }


def model_census_formula(scenario: Scenario, linkset: LinkSet) -> dict[str, int]:
    """Closed-form variable/constraint counts for a formulated model."""
    eligible = sorted(eligible_processors(scenario))
    d_count = len(scenario.demands)
    n_count = len(eligible)
    link_count = len(linkset.links)
    bins = scenario.settings.bins
    specs = powermodel.device_specs(scenario)
    dev_count = len(specs)
    remote = sum(1 for d in scenario.demands for n in eligible if n != d.source)
    node_count = len(scenario.nodes)

    variables = (
        dev_count  # a
        + link_count * (bins + 2)  # z, lam, Q
        + 1  # T
        + 2 * d_count * n_count  # x, y
        + 2 * remote * link_count  # r, q
    )
    binaries = dev_count + link_count * bins + d_count * n_count + remote * link_count

    out_nodes = len({l.tx_node for l in linkset.links})
    cells = sum(1 for e in scenario.edges() if linkset.cell_links(e.id))
    ifaces = len(
        {l.tx_device for l in linkset.links if l.tx_device in specs}
        | {l.rx_device for l in linkset.links if l.rx_device in specs}
    )
    constraints = (
        d_count  # C1
        + 2 * d_count * n_count  # C2
        + n_count  # C3
        + remote * (node_count + out_nodes)  # C4 flow + degree
        + link_count  # C5a
        + cells  # C5b
        + ifaces  # C5c
        + sum(
            (1 if l.tx_device in specs else 0) + (1 if l.rx_device in specs else 0)
            for l in linkset.links
        )
        * remote  # C6
        + 4 * link_count  # C7
        + remote * link_count  # C8
        + remote  # C9
    )
    return {"variables": variables, "binaries": binaries, "constraints": constraints}


# ---------------------------------------------------------------------------
# Independent evaluator
# ---------------------------------------------------------------------------

def _check_route(
    scenario: Scenario, linkset: LinkSet, d_id: str, source: str, target: str, route: tuple[str, ...]
) -> None:
    entity = f"demand {d_id}, target {target}"
    if target == source:
        if route:
            raise AllocationError("C4", entity, len(route), "source route must be empty")
        return
    if not route:
        raise AllocationError("C4", entity, 1.0, "missing route for served target")
    seen = set()
    at = source
    for link_id in route:
        link = linkset.link(link_id)
        if link.tx_node != at:
            raise AllocationError("C4", entity, 1.0, f"link {link_id} does not continue the path")
        if link.rx_node in seen or link.rx_node == source:
            raise AllocationError("C4", entity, 1.0, "route revisits a vertex")
        seen.add(link.rx_node)
        at = link.rx_node
    if at != target:
        raise AllocationError("C4", entity, 1.0, f"route ends at {at}, not {target}")


def evaluate(
    scenario: Scenario,
    linkset: LinkSet,
    tables: dict[str, DelayTable],
    allocation: Allocation,
    weights: ObjectiveWeights,
) -> SolveResult:
    """Recompute constraints, power, max delay and objective of an allocation."""
    eligible = eligible_processors(scenario)

    for d in scenario.demands:
        da = allocation.demands.get(d.id)
        if da is None:
            raise AllocationError("C1", f"demand {d.id}", 1.0, "demand not allocated")
        total = sum(da.fractions.values())
        if abs(total - 1.0) > FRACTION_TOL:
            raise AllocationError("C1", f"demand {d.id}", 1.0 - total)
        for n, xv in da.fractions.items():
            if xv < -FRACTION_TOL or xv > 1.0 + FRACTION_TOL:
                raise AllocationError("C1", f"demand {d.id}, node {n}", xv, "fraction out of [0,1]")
            if xv > FRACTION_TOL and n not in da.serving:
                raise AllocationError("C2", f"demand {d.id}, node {n}", xv, "x > 0 requires y = 1")
        for n in da.serving:
            if n not in eligible:
                raise AllocationError("C2", f"demand {d.id}, node {n}", 1.0, "node not eligible")
            _check_route(scenario, linkset, d.id, d.source, n, da.routes.get(n, ()))

    for n_id, mips in allocation.processing_mips(scenario).items():
        cap = scenario.node(n_id).processor.capacity
        if mips > cap * (1.0 + FRACTION_TOL):
            raise AllocationError("C3", f"node {n_id}", mips - cap)

    link_traffic = allocation.link_traffic(scenario)
    for link in linkset.links:
        t = link_traffic.get(link.id, 0.0)
        if t > link.capacity * (1.0 + FRACTION_TOL):
            raise AllocationError("C5a", f"link {link.id}", t - link.capacity)
    for e in scenario.edges():
        cell_t = sum(link_traffic.get(l.id, 0.0) for l in linkset.cell_links(e.id))
        ap_bw = e.radio(Medium.WIFI).bandwidth
        if cell_t > ap_bw * (1.0 + FRACTION_TOL):
            raise AllocationError("C5b", f"cell {e.id}", cell_t - ap_bw)
    specs = powermodel.device_specs(scenario)
    iface_t: dict[str, float] = {}
    for link in linkset.links:
        t = link_traffic.get(link.id, 0.0)
        iface_t[link.tx_device] = iface_t.get(link.tx_device, 0.0) + t
        iface_t[link.rx_device] = iface_t.get(link.rx_device, 0.0) + t
    for dev, t in iface_t.items():
        spec = specs.get(dev)
        if spec is not None and t > spec.capacity * (1.0 + FRACTION_TOL):
            raise AllocationError("C5c", f"interface {dev}", t - spec.capacity)

    lam = allocation.link_lambda(scenario)
    for link_id, rate in lam.items():
        cap = tables[link_id].arrival_bounds[-1]
        if rate > cap * (1.0 + FRACTION_TOL):
            raise AllocationError("C7", f"link {link_id}", rate - cap, "exceeds rho_max")

    breakdown = powermodel.system_power(scenario, linkset, allocation)

    per_target_delay: dict[str, dict[str, float]] = {}
    max_delay = 0.0
    for d in scenario.demands:
        da = allocation.demands[d.id]
        per_target_delay[d.id] = {}
        for n in da.serving:
            links = [linkset.link(l) for l in da.routes.get(n, ())]
            delay = delaymodel.path_delay(links, tables, lam)
            per_target_delay[d.id][n] = delay
            max_delay = max(max_delay, delay)

    objective = weights.w_power * breakdown.total + weights.w_delay * max_delay
    return SolveResult(
        status="optimal",
        weights=weights,
        allocation=allocation,
        total_power=breakdown.total,
        max_delay=max_delay,
        objective_value=objective,
        per_device_power=dict(breakdown.per_device),
        per_target_delay=per_target_delay,
    )


def make_weights(
    preset: ObjectivePreset,
    scenario: Scenario = None,
    pre_solves: Optional[tuple[float, float]] = None,
    custom: Optional[tuple[float, float]] = None,
) -> ObjectiveWeights:
    """Resolve an objective preset into concrete weights.

    JOINT_EQUAL normalizes by the single-objective optima (P*, T*) supplied
    in `pre_solves`, giving each objective half the weight at its optimum.
    """
    if preset == ObjectivePreset.POWER_ONLY:
        return ObjectiveWeights(1.0, 0.0, preset)
    if preset == ObjectivePreset.JOINT_EQUAL:
        if pre_solves is None:
            raise FormulationError("JOINT_EQUAL requires pre_solves = (power_opt, delay_opt)")
        p_star, t_star = pre_solves
        if p_star <= 0 or t_star <= 0:
            raise FormulationError(
                f"JOINT_EQUAL normalizers must be positive, got P*={p_star}, T*={t_star}"
            )
        return ObjectiveWeights(0.5 / p_star, 0.5 / t_star, preset)
    if custom is None:
        raise FormulationError("CUSTOM preset requires explicit weights")
    return ObjectiveWeights(custom[0], custom[1], ObjectivePreset.CUSTOM)
