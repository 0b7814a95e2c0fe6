"""Bandwidth and resource analyses.

Bandwidth model: a kernel drains one layout pattern every ii * word_count
cycles, so a channel demands useful_bits / (word_count * ii) bits per cycle.
This is a model choice; ii is the only rate attribute the dialect carries.
Channels of paramType complex contribute no demand (their access pattern is
unknown), they only occupy a PC.

Resource model: kernel counts are taken from their attributes; stream channels
cost one FIFO each and small channels one PLM each, both built from 36-Kbit
BRAM blocks.  Small channels mapped to the same plm_instance share one PLM
sized for the largest member.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ir import (
    RESOURCE_NAMES,
    ChannelOp,
    OlympusModule,
    ParamType,
    ResourceVector,
)
from .layout import Layout, single_element_layout
from .platform import Platform

__all__ = [
    "fifo_estimate",
    "plm_estimate",
    "channel_demand",
    "PcUsage",
    "BandwidthReport",
    "ResourceReport",
    "bandwidth_analysis",
    "resource_analysis",
]


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def fifo_estimate(width_bits: int, depth: int) -> ResourceVector:
    """BRAM cost of a FIFO in 36x1024 block shape, plus fixed control logic."""
    return ResourceVector(
        ff=50,
        lut=50,
        bram=_ceil_div(width_bits, 36) * _ceil_div(depth, 1024),
    )


def plm_estimate(width_bits: int, depth: int) -> ResourceVector:
    """BRAM cost of a private local memory; same block model, no FIFO control."""
    return ResourceVector(bram=_ceil_div(width_bits, 36) * _ceil_div(depth, 1024))


def _effective_layout(ch: ChannelOp) -> Layout:
    """A channel without an explicit layout behaves as one element per word."""
    if ch.layout is not None:
        return ch.layout
    return single_element_layout(ch.name, ch.element_width, repetitions=ch.depth)


def channel_demand(module: OlympusModule, ch: ChannelOp) -> float:
    """Estimated demand in bits per cycle for one memory-facing channel."""
    if ch.param_type is ParamType.COMPLEX:
        return 0.0
    kernels = module.attached_kernels(ch.result)
    if not kernels:
        return 0.0
    ii = min(k.ii for k in kernels)
    layout = _effective_layout(ch)
    words = layout.word_count
    if words == 0:
        return 0.0
    return layout.useful_bits / (words * ii)


@dataclass(frozen=True)
class PcUsage:
    memory: str
    id: int
    assigned_channels: tuple[str, ...]
    demand_bits_per_cycle: float
    capacity_bits_per_cycle: int

    @property
    def utilization(self) -> float:
        return self.demand_bits_per_cycle / self.capacity_bits_per_cycle

    @property
    def oversubscribed(self) -> bool:
        return self.demand_bits_per_cycle > self.capacity_bits_per_cycle

    def as_dict(self) -> dict:
        return {
            "memory": self.memory,
            "id": self.id,
            "assigned_channels": list(self.assigned_channels),
            "demand_bits_per_cycle": self.demand_bits_per_cycle,
            "capacity_bits_per_cycle": self.capacity_bits_per_cycle,
            "utilization": self.utilization,
            "oversubscribed": self.oversubscribed,
        }


@dataclass(frozen=True)
class BandwidthReport:
    per_pc: dict[tuple[str, int], PcUsage]
    layout_efficiency: dict[str, float]

    @property
    def total_demand_bits_per_cycle(self) -> float:
        return sum(u.demand_bits_per_cycle for u in self.per_pc.values())

    @property
    def aggregate_utilization(self) -> float:
        """Total demand over the combined capacity of the PCs actually used."""
        capacity = sum(u.capacity_bits_per_cycle for u in self.per_pc.values())
        if capacity == 0:
            return 0.0
        return self.total_demand_bits_per_cycle / capacity

    @property
    def max_pc_utilization(self) -> float:
        return max((u.utilization for u in self.per_pc.values()), default=0.0)

    def as_dict(self) -> dict:
        return {
            "per_pc": [self.per_pc[key].as_dict() for key in sorted(self.per_pc)],
            "aggregate_utilization": self.aggregate_utilization,
            "max_pc_utilization": self.max_pc_utilization,
            "total_demand_bits_per_cycle": self.total_demand_bits_per_cycle,
            "layout_efficiency": dict(sorted(self.layout_efficiency.items())),
        }


@dataclass(frozen=True)
class ResourceReport:
    totals: ResourceVector
    available: ResourceVector
    utilization_limit: float

    @property
    def per_resource_utilization(self) -> dict[str, float]:
        return {
            name: (total / avail if avail else 0.0)
            for name, total, avail in zip(
                RESOURCE_NAMES, self.totals.as_tuple(), self.available.as_tuple()
            )
        }

    @property
    def bottleneck(self) -> str:
        fractions = self.per_resource_utilization
        return max(RESOURCE_NAMES, key=lambda name: fractions[name])

    @property
    def headroom_factor(self) -> int | None:
        """Largest r with r * totals within limit * available; None if unbounded."""
        factors = []
        for total, avail in zip(self.totals.as_tuple(), self.available.as_tuple()):
            if total == 0:
                continue
            budget = self.utilization_limit * avail
            r = int(budget / total)
            # int() truncation of float math can land one off either way;
            # settle it against the comparison the definition actually uses.
            while (r + 1) * total <= budget:
                r += 1
            while r > 0 and r * total > budget:
                r -= 1
            factors.append(r)
        return min(factors) if factors else None

    def as_dict(self) -> dict:
        return {
            "totals": self.totals.as_dict(),
            "available": self.available.as_dict(),
            "utilization_limit": self.utilization_limit,
            "per_resource_utilization": self.per_resource_utilization,
            "bottleneck": self.bottleneck,
            "headroom_factor": self.headroom_factor,
        }


def bandwidth_analysis(module: OlympusModule, platform: Platform) -> BandwidthReport:
    per_pc: dict[tuple[str, int], list] = {}
    for pc in module.pcs():
        mem = platform.memory(pc.memory)
        key = (mem.name, pc.id)
        ch = module.channel(pc.channel)
        per_pc.setdefault(key, [mem.bits_per_cycle, [], 0.0])
        entry = per_pc[key]
        entry[1].append(ch.name)
        entry[2] += channel_demand(module, ch)
    usage = {
        key: PcUsage(
            memory=key[0],
            id=key[1],
            assigned_channels=tuple(names),
            demand_bits_per_cycle=demand,
            capacity_bits_per_cycle=capacity,
        )
        for key, (capacity, names, demand) in per_pc.items()
    }
    efficiency = {
        ch.name: ch.layout.efficiency() for ch in module.channels() if ch.layout is not None
    }
    return BandwidthReport(per_pc=usage, layout_efficiency=efficiency)


def infrastructure_estimate(module: OlympusModule) -> ResourceVector:
    """FIFO and PLM cost of all channels, honoring shared plm_instance names."""
    total = ResourceVector()
    shared: dict[str, ResourceVector] = {}
    for ch in module.channels():
        if ch.param_type is ParamType.STREAM:
            total = total + fifo_estimate(ch.element_width, ch.depth)
        elif ch.param_type is ParamType.SMALL:
            est = plm_estimate(ch.element_width, ch.depth)
            if ch.plm_instance is None:
                total = total + est
            else:
                prior = shared.get(ch.plm_instance, ResourceVector())
                shared[ch.plm_instance] = prior.max_with(est)
        # complex channels become AXI ports; no on-chip buffer is modeled
    for est in shared.values():
        total = total + est
    return total


def resource_analysis(module: OlympusModule, platform: Platform) -> ResourceReport:
    totals = ResourceVector()
    for kernel in module.kernels():
        totals = totals + kernel.resources
    totals = totals + infrastructure_estimate(module)
    return ResourceReport(
        totals=totals,
        available=platform.resources,
        utilization_limit=platform.utilization_limit,
    )
