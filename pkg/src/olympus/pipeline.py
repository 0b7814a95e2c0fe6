"""Pass driver: sanitize the module, then run named passes in order.

Pipeline strings are comma-separated pass names with optional bracketed
options, e.g. ``sanitize,reassign,iris[bus=128],replicate[max]``.  Every pass
gets the module verified on the way in and on the way out; a pass that breaks
an invariant is reported with its position in the pipeline.

The default pipeline leaves replication last: replicas multiply resource use
and high replication invites routing congestion, so all bandwidth shaping
happens first.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .analysis import BandwidthReport, ResourceReport, bandwidth_analysis, resource_analysis
from .errors import PassError, PipelineError, VerificationError
from .ir import (
    ChannelOp,
    Direction,
    KernelOp,
    OlympusModule,
    Op,
    ParamType,
    PcOp,
    verify_module,
)
from .iris import apply_iris
from .layout import single_element_layout
from .platform import Platform
from .plm import Lifetime, SharingPlan, share_plm
from .transforms import reassign_channels, replicate, widen_bus

__all__ = [
    "PASS_NAMES",
    "DEFAULT_PIPELINE",
    "PassInvocation",
    "parse_pipeline",
    "sanitize",
    "PassEntry",
    "PipelineReport",
    "run_pipeline",
]

PASS_NAMES = ("sanitize", "reassign", "replicate", "widen", "iris", "plm")
DEFAULT_PIPELINE = "sanitize,reassign,widen,iris,plm,replicate[max]"

_ALLOWED_OPTIONS = {
    "sanitize": set(),
    "reassign": {"class"},
    "replicate": {"max", "factor"},
    "widen": {"bus"},
    "iris": {"bus", "group", "rates"},
    "plm": set(),
}


@dataclass(frozen=True)
class PassInvocation:
    name: str
    options: dict = field(default_factory=dict)

    def spelled(self) -> str:
        if not self.options:
            return self.name
        inner = ";".join(k if v == "" else f"{k}={v}" for k, v in self.options.items())
        return f"{self.name}[{inner}]"


def parse_pipeline(text: str) -> list[PassInvocation]:
    """Parse ``name[k=v;...]`` items; an empty string is an empty pipeline."""
    passes: list[PassInvocation] = []
    for item in filter(None, (part.strip() for part in text.split(","))):
        name, _, rest = item.partition("[")
        options: dict[str, str] = {}
        if rest:
            if not rest.endswith("]"):
                raise PipelineError(f"missing ']' in pass options: {item!r}")
            for entry in filter(None, rest[:-1].split(";")):
                key, _, value = entry.partition("=")
                key = key.strip()
                if not key:
                    raise PipelineError(f"empty option key in {item!r}")
                if key in options:
                    raise PipelineError(f"duplicate option {key!r} in {item!r}")
                options[key] = value.strip()
        if name not in PASS_NAMES:
            raise PipelineError(f"unknown pass '{name}'")
        unknown = set(options) - _ALLOWED_OPTIONS[name]
        if unknown:
            raise PipelineError(
                f"pass '{name}' does not take option(s) {sorted(unknown)}"
            )
        passes.append(PassInvocation(name=name, options=options))
    return passes


def _int_option(inv: PassInvocation, key: str) -> int:
    value = inv.options[key]
    try:
        return int(value)
    except ValueError:
        raise PipelineError(
            f"pass '{inv.name}': option {key}={value!r} is not an integer"
        ) from None


# --------------------------------------------------------------------------
# Sanitize


def sanitize(module: OlympusModule) -> OlympusModule:
    """Normalize a raw DFG: default layouts everywhere, PC nodes on channels
    that touch kernels on exactly one side (new nodes get id 0).  Idempotent."""
    diags = verify_module(module)
    if diags:
        raise VerificationError(diags)

    has_pc = {pc.channel for pc in module.pcs()}
    ops: list[Op] = []
    for op in module.ops:
        if not isinstance(op, ChannelOp):
            ops.append(op)
            continue
        if op.layout is None:
            op = replace(
                op,
                layout=single_element_layout(op.name, op.element_width, repetitions=op.depth),
            )
        ops.append(op)
        if op.result in has_pc or not module.is_memory_facing(op.result):
            continue
        direction = Direction.READ if module.consumers(op.result) else Direction.WRITE
        ops.append(PcOp(channel=op.result, id=0, direction=direction))
    return OlympusModule(ops=tuple(ops))


# --------------------------------------------------------------------------
# Pass bodies


@dataclass
class _Context:
    lifetimes: dict[str, Lifetime]
    sharing: SharingPlan | None = None


def _run_sanitize(module, platform, inv, ctx):
    before = len(module.ops)
    module = sanitize(module)
    added = len(module.ops) - before
    return module, [f"inserted {added} pc node(s)"] if added else []


def _run_reassign(module, platform, inv, ctx):
    memory = inv.options.get("class") or None
    name = platform.memory(memory).name
    module = reassign_channels(module, platform, memory)
    ids = sorted(pc.id for pc in module.pcs() if platform.memory(pc.memory).name == name)
    return module, [f"balanced {len(ids)} channel(s) over {name} ids {ids}"]


def _run_replicate(module, platform, inv, ctx):
    if "max" in inv.options and "factor" in inv.options:
        raise PipelineError("pass 'replicate': give either max or factor, not both")
    factor: object = "max"
    if inv.options.get("max", "") != "":
        factor = _int_option(inv, "max")
    elif "factor" in inv.options:
        factor = _int_option(inv, "factor")
    module = replicate(module, platform, factor)
    copies = max((k.replica_index or 0 for k in module.kernels()), default=0) + 1
    return module, [f"replicated to {copies} cop{'ies' if copies != 1 else 'y'}"]


def _run_widen(module, platform, inv, ctx):
    bus = _int_option(inv, "bus") if "bus" in inv.options else platform.memory(None).width_bits
    before = sum(1 for _ in module.kernels())
    module = widen_bus(module, platform, bus)
    after = sum(1 for _ in module.kernels())
    if after == before:
        return module, [f"no kernels widened at bus {bus}"]
    return module, [f"widened to {bus}-bit bus: {before} -> {after} kernel instance(s)"]


def _parse_rates(inv: PassInvocation) -> dict[str, int]:
    rates: dict[str, int] = {}
    for entry in filter(None, inv.options.get("rates", "").split("|")):
        name, sep, value = entry.partition(":")
        if not sep:
            raise PipelineError(f"pass 'iris': bad rates entry {entry!r}, want name:count")
        try:
            rates[name] = int(value)
        except ValueError:
            raise PipelineError(f"pass 'iris': rate {value!r} is not an integer") from None
    return rates


def _iris_auto_groups(module: OlympusModule, platform: Platform):
    """Mergeable sets: same kernel super-node, direction, paramType and class."""
    kernel_index = {id(k): i for i, k in enumerate(module.ops) if isinstance(k, KernelOp)}
    groups: dict[tuple, list[str]] = {}
    for ch in module.channels():
        if ch.param_type is ParamType.COMPLEX or not module.is_memory_facing(ch.result):
            continue
        pc = module.pc_for(ch.result)
        if pc is None:
            continue
        attached = module.attached_kernels(ch.result)
        nodes = {k.group if k.group is not None else f"@op{kernel_index[id(k)]}" for k in attached}
        if len(nodes) != 1:
            continue
        mem = platform.memory(pc.memory)
        key = (nodes.pop(), pc.direction.value, ch.param_type.value, mem.name)
        groups.setdefault(key, []).append(ch.name)
    return [(names, platform.memory(key[3]).width_bits) for key, names in groups.items() if len(names) > 1]


def _run_iris(module, platform, inv, ctx):
    if "group" in inv.options:
        names = [n for n in inv.options["group"].split("|") if n]
        if not names:
            raise PipelineError("pass 'iris': group= needs at least one channel name")
        bus = _int_option(inv, "bus") if "bus" in inv.options else platform.memory(None).width_bits
        merges = [(names, bus)]
    else:
        merges = _iris_auto_groups(module, platform)
        if "bus" in inv.options:
            bus = _int_option(inv, "bus")
            merges = [(names, bus) for names, _ in merges]
    rates = _parse_rates(inv)
    notes = []
    for names, bus in merges:
        module = apply_iris(module, names, bus, rates=rates)
        merged = "".join(names)
        eff = module.channel_by_name(merged).layout.efficiency()
        notes.append(f"merged {'+'.join(names)} -> {merged} on {bus}-bit bus (efficiency {eff:.4f})")
    if not merges:
        notes.append("no mergeable channel groups")
    return module, notes


def _run_plm(module, platform, inv, ctx):
    module, plan = share_plm(module, ctx.lifetimes)
    ctx.sharing = plan
    notes = [
        f"{len(plan.assignment)} buffer(s) in {len(plan.instances)} instance(s), "
        f"saved {plan.savings.as_dict()}"
    ]
    notes.extend(plan.warnings)
    return module, notes


_PASS_BODIES = {
    "sanitize": _run_sanitize,
    "reassign": _run_reassign,
    "replicate": _run_replicate,
    "widen": _run_widen,
    "iris": _run_iris,
    "plm": _run_plm,
}


# --------------------------------------------------------------------------
# Driver


@dataclass(frozen=True)
class PassEntry:
    name: str
    options: dict
    before_bandwidth: BandwidthReport
    after_bandwidth: BandwidthReport
    before_resources: ResourceReport
    after_resources: ResourceReport
    notes: tuple[str, ...]

    def as_dict(self) -> dict:
        return {
            "pass": self.name,
            "options": dict(self.options),
            "before": {
                "bandwidth": self.before_bandwidth.as_dict(),
                "resources": self.before_resources.as_dict(),
            },
            "after": {
                "bandwidth": self.after_bandwidth.as_dict(),
                "resources": self.after_resources.as_dict(),
            },
            "notes": list(self.notes),
        }


@dataclass(frozen=True)
class PipelineReport:
    platform: str
    entries: tuple[PassEntry, ...]
    sharing: SharingPlan | None = None

    def as_dict(self) -> dict:
        return {
            "platform": self.platform,
            "passes": [entry.as_dict() for entry in self.entries],
            "sharing": None if self.sharing is None else self.sharing.as_dict(),
        }


def run_pipeline(
    module: OlympusModule,
    platform: Platform,
    pipeline: str | list[PassInvocation],
    lifetimes: dict[str, Lifetime] | None = None,
) -> tuple[OlympusModule, PipelineReport]:
    """Apply the passes in order, verifying the module between every step."""
    if isinstance(pipeline, str):
        pipeline = parse_pipeline(pipeline)
    diags = verify_module(module)
    if diags:
        raise VerificationError(diags)

    ctx = _Context(lifetimes=dict(lifetimes or {}))
    entries: list[PassEntry] = []
    for index, inv in enumerate(pipeline):
        before_bw = bandwidth_analysis(module, platform)
        before_res = resource_analysis(module, platform)
        try:
            module, notes = _PASS_BODIES[inv.name](module, platform, inv, ctx)
        except Exception as exc:
            raise PassError(index, inv.spelled(), exc) from exc
        diags = verify_module(module)
        if diags:
            raise PassError(index, inv.spelled(), VerificationError(diags))
        entries.append(
            PassEntry(
                name=inv.name,
                options=dict(inv.options),
                before_bandwidth=before_bw,
                after_bandwidth=bandwidth_analysis(module, platform),
                before_resources=before_res,
                after_resources=resource_analysis(module, platform),
                notes=tuple(notes),
            )
        )
    report = PipelineReport(platform=platform.name, entries=tuple(entries), sharing=ctx.sharing)
    return module, report
