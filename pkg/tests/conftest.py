import random

import pytest

from vecop import delaymodel, linkmodel
from vecop.scenario import (
    CLOUD_PROCESSOR,
    EDGE_AP_WIFI,
    EDGE_ONU,
    EDGE_PROCESSOR,
    VEHICLE_DSRC,
    VEHICLE_PROCESSOR,
    VEHICLE_WIFI,
    DemandSpec,
    NodeKind,
    NodeSpec,
    Position,
    ProcessingSetting,
    Scenario,
    Settings,
    generate_default,
    validate,
)


@pytest.fixture(scope="session")
def default_scenario():
    return generate_default(42)


@pytest.fixture(scope="session")
def default_linkset(default_scenario):
    return linkmodel.build_links(default_scenario)


@pytest.fixture(scope="session")
def default_tables(default_scenario, default_linkset):
    return delaymodel.build_tables(default_scenario, default_linkset)


def make_vehicle(node_id: str, x: float, y: float) -> NodeSpec:
    return NodeSpec(
        id=node_id,
        kind=NodeKind.VEHICLE,
        processor=VEHICLE_PROCESSOR,
        position=Position(x, y),
        radios=(VEHICLE_DSRC, VEHICLE_WIFI),
    )


def make_edge(node_id: str, x: float, y: float) -> NodeSpec:
    return NodeSpec(
        id=node_id,
        kind=NodeKind.EDGE,
        processor=EDGE_PROCESSOR,
        position=Position(x, y),
        radios=(EDGE_AP_WIFI,),
        onu=EDGE_ONU,
    )


def make_cloud(fiber_length: float = 250e3) -> NodeSpec:
    return NodeSpec(
        id="cloud", kind=NodeKind.CLOUD, processor=CLOUD_PROCESSOR, fiber_length=fiber_length
    )


def small_scenario(
    nodes, traffic: float = 400.0, setting=ProcessingSetting.VEHICLES_ONLY, **settings_kw
) -> Scenario:
    return validate(
        Scenario(
            lot_width=40.0,
            lot_height=40.0,
            nodes=tuple(nodes),
            demands=(DemandSpec(id="d1", source="v1", traffic=traffic),),
            settings=Settings(processing_setting=setting, **settings_kw),
        )
    )


def random_oracle_instance(seed: int) -> Scenario:
    """Small random instance for solver cross-checks: 2-4 vehicles,
    0-1 edge, 0-1 cloud (cloud only alongside an edge), one demand."""
    rng = random.Random(seed)
    n_veh = rng.randint(2, 4)
    has_edge = rng.random() < 0.5
    has_cloud = has_edge and rng.random() < 0.5
    nodes = [
        make_vehicle(f"v{i + 1}", round(rng.uniform(0, 40), 3), round(rng.uniform(0, 40), 3))
        for i in range(n_veh)
    ]
    if has_edge:
        nodes.append(make_edge("e1", round(rng.uniform(0, 40), 3), round(rng.uniform(0, 40), 3)))
    if has_cloud:
        nodes.append(make_cloud())
    setting = (
        ProcessingSetting.VEHICLES_AND_EDGE if has_edge else ProcessingSetting.VEHICLES_ONLY
    )
    traffic = rng.choice([400.0, 800.0, 1200.0, 1600.0])
    cap = sum(
        n.processor.capacity
        for n in nodes
        if n.kind == NodeKind.VEHICLE or (has_edge and n.kind == NodeKind.EDGE)
    )
    traffic = min(traffic, cap * 0.9)
    return small_scenario(nodes, traffic=traffic, setting=setting, bins=8)
