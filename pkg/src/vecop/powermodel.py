"""Device and system power.

Every device draws its idle power once activated plus a load-proportional
term up to its maximum; transmitting interfaces additionally pay their
airtime-weighted radiated power. Devices an allocation never touches draw
nothing, so total power is a pure function of the allocation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .linkmodel import LinkSet, Medium
from .scenario import Scenario

__all__ = [
    "DeviceLoad",
    "PowerBreakdown",
    "OverCapacityError",
    "device_power",
    "system_power",
    "device_specs",
    "energy_per_bit_full_load",
]

CORE_DEVICE = "core"  # pseudo-device collecting the per-bit fiber/core energy

UTILIZATION_TOL = 1e-9


class OverCapacityError(ValueError):
    """A single link or processor is loaded past its capacity."""


@dataclass(frozen=True)
class DeviceLoad:
    device: str
    active: bool
    utilization: float  # dimensionless; fraction of the device's capacity
    radiated_component: float = 0.0  # watts, transmitting interfaces only

    def __post_init__(self):
        if not self.active and self.utilization != 0.0:
            raise ValueError(f"device {self.device}: inactive device must have zero utilization")
        if self.utilization < 0.0:
            raise ValueError(f"device {self.device}: utilization must be >= 0")


@dataclass(frozen=True)
class PowerBreakdown:
    total: float  # watts
    per_device: dict[str, float] = field(default_factory=dict)


def device_power(spec, load: DeviceLoad) -> float:
    """Power draw of one device: 0 when inactive, else
    idle + (max - idle) * u + u * radiated_component.

    `spec` is anything with power_idle/power_max (processor, radio, ONU).
    """
    if not load.active:
        return 0.0
    span = spec.power_max - spec.power_idle
    return spec.power_idle + span * load.utilization + load.utilization * load.radiated_component


@dataclass(frozen=True)
class _DeviceSpec:
    power_idle: float
    power_max: float
    capacity: float  # MIPS for processors, bit/s for interfaces


def device_specs(scenario: Scenario) -> dict[str, _DeviceSpec]:
    """Map device id -> power/capacity figures for every modeled device.

    Device ids: `<node>.cpu`, `<node>.dsrc`, `<node>.wifi` (vehicle and AP
    radios both use `.wifi`), `<node>.onu`. The cloud's network termination
    is covered by the core per-bit adder and carries no device of its own.
    """
    specs: dict[str, _DeviceSpec] = {}
    for n in scenario.nodes:
        specs[f"{n.id}.cpu"] = _DeviceSpec(
            n.processor.power_idle, n.processor.power_max, n.processor.capacity
        )
        for r in n.radios:
            specs[f"{n.id}.{r.medium.value.lower()}"] = _DeviceSpec(
                r.power_idle, r.power_max, r.bandwidth
            )
        if n.onu is not None:
            specs[f"{n.id}.onu"] = _DeviceSpec(n.onu.power_idle, n.onu.power_max, n.onu.fiber_capacity)
    return specs


def system_power(scenario: Scenario, linkset: LinkSet, allocation) -> PowerBreakdown:
    """Total and per-device power of a structurally valid allocation.

    A device is active iff the allocation assigns it nonzero processing or
    carries nonzero traffic through it. Interface utilization aggregates
    traffic over every link the interface terminates; the radiated component
    is the traffic-share-weighted radiated power of its transmitting links.
    """
    specs = device_specs(scenario)
    link_traffic = allocation.link_traffic(scenario)

    # Per-link over-capacity is an invalid allocation, not a power question.
    for link in linkset.links:
        t = link_traffic.get(link.id, 0.0)
        if t > link.capacity * (1.0 + UTILIZATION_TOL):
            raise OverCapacityError(
                f"link {link.id} ({link.tx_node}->{link.rx_node}): traffic {t} bit/s "
                f"exceeds capacity {link.capacity} bit/s"
            )

    # Traffic and radiated power aggregated per interface device.
    dev_traffic: dict[str, float] = {}
    dev_radiated: dict[str, float] = {}  # sum of radiated_l * traffic_l over tx links
    for link in linkset.links:
        t = link_traffic.get(link.id, 0.0)
        if t <= 0.0:
            continue
        dev_traffic[link.tx_device] = dev_traffic.get(link.tx_device, 0.0) + t
        dev_traffic[link.rx_device] = dev_traffic.get(link.rx_device, 0.0) + t
        dev_radiated[link.tx_device] = dev_radiated.get(link.tx_device, 0.0) + link.radiated_power * t

    per_device: dict[str, float] = {}

    # Processors.
    for node_id, mips in allocation.processing_mips(scenario).items():
        if mips <= 0.0:
            continue
        dev = f"{node_id}.cpu"
        spec = specs[dev]
        u = mips / spec.capacity
        if u > 1.0 + UTILIZATION_TOL:
            raise OverCapacityError(f"processor {dev}: load {mips} MIPS exceeds capacity {spec.capacity}")
        per_device[dev] = device_power(spec, DeviceLoad(dev, True, u))

    # Interfaces.
    for dev, t in dev_traffic.items():
        spec = specs.get(dev)
        if spec is None:  # cloud fiber termination: covered by the core adder
            continue
        u = t / spec.capacity
        if u > 1.0 + UTILIZATION_TOL:
            raise OverCapacityError(
                f"interface {dev}: carried {t} bit/s exceeds bandwidth {spec.capacity} bit/s"
            )
        radiated_component = dev_radiated.get(dev, 0.0) / t if t > 0 else 0.0
        per_device[dev] = device_power(spec, DeviceLoad(dev, True, u, radiated_component))

    # Core energy for traffic crossing the fiber hop.
    core_bps = sum(
        link_traffic.get(l.id, 0.0) for l in linkset.links if l.medium == Medium.FIBER
    )
    if core_bps > 0.0:
        per_device[CORE_DEVICE] = scenario.settings.core_energy_per_bit * core_bps

    return PowerBreakdown(total=sum(per_device.values()), per_device=per_device)


def energy_per_bit_full_load(scenario: Scenario, node_id: str, medium: Medium) -> float:
    """Joules per bit of one radio driven at full load (device power / rate)."""
    radio = scenario.node(node_id).radio(medium)
    if radio is None:
        raise KeyError(f"node {node_id} has no {medium.value} radio")
    return radio.power_max / radio.bandwidth
