"""Structural DFG transformations.

Three rewrites that trade resources for bandwidth:

* reassign_channels spreads memory-facing channels across the pseudo-channels
  of one memory class (greedy longest-processing-time balancing on estimated
  demand).
* replicate stamps out whole copies of the DFG up to the resource limit.
* widen_bus packs several element lanes into one bus-wide channel and splits
  the attached kernel into one instance per lane.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .analysis import channel_demand, resource_analysis
from .errors import TransformError
from .ir import (
    ChannelOp,
    KernelOp,
    OlympusModule,
    Op,
    ParamType,
    PcOp,
)
from .layout import Layout, Placement
from .platform import Platform

__all__ = [
    "ReassignmentPlan",
    "plan_reassignment",
    "reassign_channels",
    "max_replication_factor",
    "replicate",
    "widen_bus",
]


# --------------------------------------------------------------------------
# Channel reassignment


@dataclass(frozen=True)
class ReassignmentPlan:
    memory: str
    assignments: dict  # PcOp -> new id


def plan_reassignment(
    module: OlympusModule, platform: Platform, memory: str | None = None
) -> ReassignmentPlan:
    """Balance channel demand over the PCs of one memory class.

    Channels are taken in order of decreasing demand (ties by op order) and
    each goes to the least-loaded PC id, lowest id first.  PCs of other memory
    classes keep their current id.
    """
    mem = platform.memory(memory)
    target: list[tuple[float, int, PcOp]] = []
    assignments: dict[PcOp, int] = {}
    for index, op in enumerate(module.ops):
        if not isinstance(op, PcOp):
            continue
        if platform.memory(op.memory).name != mem.name:
            assignments[op] = op.id
            continue
        demand = channel_demand(module, module.channel(op.channel))
        target.append((demand, index, op))
    target.sort(key=lambda item: (-item[0], item[1]))

    loads = {pc_id: 0.0 for pc_id in range(mem.count)}
    for demand, _, op in target:
        pc_id = min(loads, key=lambda i: (loads[i], i))
        loads[pc_id] += demand
        assignments[op] = pc_id
    return ReassignmentPlan(memory=mem.name, assignments=assignments)


def reassign_channels(
    module: OlympusModule, platform: Platform, memory: str | None = None
) -> OlympusModule:
    plan = plan_reassignment(module, platform, memory)
    ops: list[Op] = []
    for op in module.ops:
        if isinstance(op, PcOp) and op in plan.assignments:
            ops.append(replace(op, id=plan.assignments[op]))
        else:
            ops.append(op)
    return OlympusModule(ops=tuple(ops))


# --------------------------------------------------------------------------
# Replication


def max_replication_factor(module: OlympusModule, platform: Platform) -> int:
    """Largest factor whose resource totals stay within the utilization limit."""
    report = resource_analysis(module, platform)
    factor = report.headroom_factor
    if factor is None:  # nothing consumes resources; replication is meaningless
        return 1
    if factor < 1:
        raise TransformError(
            f"module already exceeds the resource limit: {report.bottleneck} "
            f"needs {report.totals.as_dict()[report.bottleneck]} of "
            f"{report.available.as_dict()[report.bottleneck]} available "
            f"(limit {report.utilization_limit:g})"
        )
    return factor


def _suffix_base(name: str, suffix: str) -> str:
    """Append to the array base, keeping any '#lane' part: a#2 -> a_r1#2."""
    base, sep, lane = name.partition("#")
    return base + suffix + sep + lane


def _replica_layout(layout: Layout, suffix: str) -> Layout:
    placements = tuple(
        replace(p, array=_suffix_base(p.array, suffix)) for p in layout.placements
    )
    return replace(layout, placements=placements)


def replicate(module: OlympusModule, platform: Platform, factor) -> OlympusModule:
    """Stamp out `factor` copies of the whole DFG (factor may be "max").

    Copy 0 keeps original names; copy k gets `_r<k>` appended to channel
    names, callees, groups and plm instances.  Replica PC nodes keep the
    original id.  Every kernel is tagged with its replica_index.
    """
    limit = max_replication_factor(module, platform)
    if factor == "max":
        factor = limit
    if not isinstance(factor, int) or factor < 1:
        raise TransformError(f"replication factor must be a positive integer, got {factor!r}")
    if factor > limit:
        raise TransformError(
            f"replication factor {factor} exceeds the resource limit (max {limit})"
        )

    ops: list[Op] = []
    next_id = module.next_value_id()
    for k in range(factor):
        suffix = f"_r{k}" if k > 0 else ""
        remap: dict[int, int] = {}
        for op in module.ops:
            if isinstance(op, ChannelOp):
                if k == 0:
                    remap[op.result] = op.result
                    ops.append(op)
                    continue
                new_id = next_id
                next_id += 1
                remap[op.result] = new_id
                ops.append(
                    replace(
                        op,
                        result=new_id,
                        name=op.name + suffix,
                        layout=None if op.layout is None else _replica_layout(op.layout, suffix),
                        plm_instance=None if op.plm_instance is None else op.plm_instance + suffix,
                    )
                )
            elif isinstance(op, KernelOp):
                ops.append(
                    replace(
                        op,
                        callee=op.callee + suffix,
                        group=None if op.group is None else op.group + suffix,
                        inputs=tuple(remap[v] for v in op.inputs),
                        outputs=tuple(remap[v] for v in op.outputs),
                        replica_index=k,
                    )
                )
            else:
                ops.append(replace(op, channel=remap[op.channel]))
    return OlympusModule(ops=tuple(ops))


# --------------------------------------------------------------------------
# Bus widening


def _lane_layout(name: str, element_width: int, lanes: int, repetitions: int) -> Layout:
    placements = tuple(
        Placement(
            array=f"{name}#{lane}",
            elem_index=0,
            bit_lo=0,
            bit_hi=element_width - 1,
            word=0,
            offset=lane * element_width,
        )
        for lane in range(lanes)
    )
    return Layout(
        bus_width=lanes * element_width,
        k=1,
        repetitions=repetitions,
        placements=placements,
    )


def _widen_eligible(module: OlympusModule, kernel: KernelOp) -> bool:
    if kernel.group is not None:
        return False
    for value_id in kernel.operands:
        ch = module.channel(value_id)
        if ch.param_type is ParamType.COMPLEX:
            return False
        if not module.is_memory_facing(value_id):
            return False
    return True


def _build_widened(module: OlympusModule, lanes: int) -> OlympusModule:
    eligible = {id(k) for k in module.kernels() if _widen_eligible(module, k)}
    widened: set[int] = set()
    for kernel in module.kernels():
        if id(kernel) in eligible:
            widened.update(kernel.operands)

    ops: list[Op] = []
    for op in module.ops:
        if isinstance(op, ChannelOp) and op.result in widened:
            reps = op.layout.repetitions if op.layout is not None else op.depth
            ops.append(
                replace(
                    op,
                    element_width=op.element_width * lanes,
                    depth=-(-op.depth // lanes),
                    layout=_lane_layout(op.name, op.element_width, lanes, -(-reps // lanes)),
                )
            )
        elif isinstance(op, KernelOp) and id(op) in eligible:
            for lane in range(lanes):
                ops.append(
                    replace(
                        op,
                        callee=op.callee if lane == 0 else f"{op.callee}_l{lane}",
                        group=op.callee,
                    )
                )
        else:
            ops.append(op)
    return OlympusModule(ops=tuple(ops))


def widen_bus(module: OlympusModule, platform: Platform, bus_width: int) -> OlympusModule:
    """Pack lanes of narrow elements into bus-wide channels.

    The lane count is floor(bus_width / element_width), uniform across the
    module (the smallest value over all eligible kernels), reduced further if
    the extra kernel instances would blow the resource limit.  A kernel is
    eligible when all of its channels face memory; kernels wired to other
    kernels pass through unchanged.
    """
    if bus_width < 1:
        raise TransformError(f"bus width must be positive, got {bus_width}")
    lanes = None
    for kernel in module.kernels():
        if not _widen_eligible(module, kernel):
            continue
        for value_id in kernel.operands:
            ch = module.channel(value_id)
            if ch.element_width > bus_width:
                raise TransformError(
                    f"channel {ch.name!r} is {ch.element_width} bits, wider than "
                    f"the {bus_width}-bit bus"
                )
            fit = bus_width // ch.element_width
            lanes = fit if lanes is None else min(lanes, fit)
    if lanes is None or lanes == 1:
        return module

    def fits(m: OlympusModule) -> bool:
        totals = resource_analysis(m, platform).totals
        return all(
            t <= platform.utilization_limit * a
            for t, a in zip(totals.as_tuple(), platform.resources.as_tuple())
        )

    for candidate in range(lanes, 1, -1):
        widened = _build_widened(module, candidate)
        if fits(widened):
            return widened
    if fits(module):
        return module
    raise TransformError("module exceeds the resource limit even without widening")
