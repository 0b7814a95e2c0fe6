"""Back-end artifact emitters.

Everything here is text generation from a finished module: the linker
connectivity config mapping kernel AXI interfaces to memory ports, a JSON
build plan for the hardware project generator (FIFOs, PLM instances, lane and
packing adapters, AXI ports), a host-side API stub, and a DOT rendering of
the graph.  All emitters are deterministic: equal input, identical bytes.
"""

from __future__ import annotations

import json

from .errors import EmitError
from .ir import (
    ChannelOp,
    Direction,
    KernelOp,
    OlympusModule,
    ParamType,
    PcOp,
)
from .iris import adapter_spec
from .platform import Platform
from .plm import SharingPlan

__all__ = [
    "emit_cfg",
    "emit_build_plan",
    "emit_host_api",
    "emit_host_api_descriptor",
    "emit_dot",
]


def _attachment_kernel(module: OlympusModule, value_id: int) -> KernelOp | None:
    kernels = module.attached_kernels(value_id)
    return kernels[0] if kernels else None


def _port_map(module: OlympusModule, platform: Platform, kernel_suffix: str, interface_prefix: str):
    """(kernel instance, interface, class, id) for every PC-attached channel."""
    rows = []
    for pc in module.pcs():
        ch = module.channel(pc.channel)
        kernel = _attachment_kernel(module, pc.channel)
        if kernel is None:
            continue
        mem = platform.memory(pc.memory)
        if not 0 <= pc.id < mem.count:
            raise EmitError(
                f"pc id {pc.id} out of range for {mem.name} (count {mem.count})"
            )
        rows.append(
            (
                f"{kernel.callee}{kernel_suffix}",
                f"{interface_prefix}{ch.name}",
                mem.name,
                pc.id,
            )
        )
    rows.sort(key=lambda row: (row[0], row[1]))
    return rows


def emit_cfg(
    module: OlympusModule,
    platform: Platform,
    kernel_suffix: str = "_1",
    interface_prefix: str = "m_axi_",
) -> str:
    """Linker connectivity section: one sp= line per memory-facing channel."""
    lines = ["[connectivity]"]
    for kernel, interface, mem, pc_id in _port_map(
        module, platform, kernel_suffix, interface_prefix
    ):
        lines.append(f"sp={kernel}.{interface}:{mem}[{pc_id}]")
    return "\n".join(lines) + "\n"


def _is_identity_layout(ch: ChannelOp) -> bool:
    if ch.layout is None:
        return True
    if len(ch.layout.placements) != 1:
        return False
    p = ch.layout.placements[0]
    return p.offset == 0 and p.length == ch.layout.bus_width


def emit_build_plan(
    module: OlympusModule,
    platform: Platform,
    sharing: SharingPlan | None = None,
    kernel_impls: dict[str, str] | None = None,
) -> str:
    fifos = []
    plm_members: dict[str, list[ChannelOp]] = {}
    axi_ports = []
    adapters = []
    for ch in module.channels():
        if ch.param_type is ParamType.STREAM:
            fifos.append({"name": ch.name, "width_bits": ch.element_width, "depth": ch.depth})
        elif ch.param_type is ParamType.SMALL:
            instance = ch.plm_instance if ch.plm_instance is not None else ch.name
            plm_members.setdefault(instance, []).append(ch)
        else:
            pc = module.pc_for(ch.result)
            kernel = _attachment_kernel(module, ch.result)
            axi_ports.append(
                {
                    "kernel": kernel.callee if kernel else None,
                    "channel": ch.name,
                    "memory": platform.memory(pc.memory if pc else None).name,
                    "pc_id": pc.id if pc else None,
                    "size_bytes": ch.size_bytes,
                }
            )
        if not _is_identity_layout(ch):
            adapters.append({"channel": ch.name, **adapter_spec(ch.layout).as_dict()})

    shared = {inst.name: inst for inst in sharing.instances} if sharing else {}
    plms = []
    for instance, members in plm_members.items():
        if instance in shared:
            plms.append(shared[instance].as_dict())
        else:
            plms.append(
                {
                    "instance": instance,
                    "members": [ch.name for ch in members],
                    "size_bytes": max(ch.size_bytes for ch in members),
                    "ports": len(members),
                    "estimate": None,
                }
            )

    plan = {
        "version": 1,
        "fifos": fifos,
        "plms": plms,
        "adapters": adapters,
        "axi_ports": axi_ports,
        "port_map": [list(row) for row in _port_map(module, platform, "_1", "m_axi_")],
        "bridge": {
            "fifos": [f["name"] for f in fifos],
            "plms": [p["instance"] for p in plms],
            "adapters": [a["channel"] for a in adapters],
        },
        "kernel_impls": dict(sorted((kernel_impls or {}).items())),
    }
    return json.dumps(plan, indent=2) + "\n"


# --------------------------------------------------------------------------
# Host API


def _base_name(kernel: KernelOp) -> str:
    """Super-node name with any replica suffix stripped: f_r2 -> f."""
    name = kernel.group if kernel.group is not None else kernel.callee
    if kernel.replica_index:
        suffix = f"_r{kernel.replica_index}"
        if name.endswith(suffix):
            name = name[: -len(suffix)]
    return name


def _host_model(module: OlympusModule) -> dict:
    buffers = []
    for pc in module.pcs():
        ch = module.channel(pc.channel)
        transfer = "write" if pc.direction is Direction.READ else "read"
        buffers.append(
            {
                "channel": ch.name,
                "size_bytes": ch.size_bytes,
                "direction": pc.direction.value,
                "create": f"create_buffer_{ch.name}",
                "transfer": f"{transfer}_{ch.name}",
            }
        )

    kernels: dict[str, dict] = {}
    for kernel in module.kernels():
        base = _base_name(kernel)
        entry = kernels.setdefault(base, {"base": base, "replicas": 0})
        entry["replicas"] = max(entry["replicas"], (kernel.replica_index or 0) + 1)
    for entry in kernels.values():
        entry["run"] = f"run_{entry['base']}"
    return {"init": "init", "buffers": buffers, "kernels": list(kernels.values())}


def emit_host_api(module: OlympusModule) -> str:
    model = _host_model(module)
    lines = [
        "/* Host-side control interface. Generated; do not edit. */",
        "#ifndef OLYMPUS_HOST_API_H",
        "#define OLYMPUS_HOST_API_H",
        "",
        "#include <stddef.h>",
        "#include <stdint.h>",
        "",
        "/* Bring up the device and load the configuration. */",
        "int init(void);",
    ]
    for buf in model["buffers"]:
        lines.append("")
        lines.append(
            f"/* Channel {buf['channel']}: {buf['size_bytes']} bytes, "
            f"device {buf['direction']}s it. */"
        )
        lines.append(f"int {buf['create']}(void);")
        if buf["direction"] == "read":
            lines.append(f"int {buf['transfer']}(const void *host_src, size_t bytes);")
        else:
            lines.append(f"int {buf['transfer']}(void *host_dst, size_t bytes);")
    for kernel in model["kernels"]:
        lines.append("")
        if kernel["replicas"] > 1:
            lines.append(
                f"/* Launch one replica of {kernel['base']} "
                f"(replica in [0, {kernel['replicas']})). */"
            )
            lines.append(f"int {kernel['run']}(int replica);")
        else:
            lines.append(f"/* Launch {kernel['base']}. */")
            lines.append(f"int {kernel['run']}(void);")
    lines += ["", "#endif /* OLYMPUS_HOST_API_H */", ""]
    return "\n".join(lines)


def emit_host_api_descriptor(module: OlympusModule) -> str:
    return json.dumps(_host_model(module), indent=2) + "\n"


# --------------------------------------------------------------------------
# DOT


def _dot_quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def emit_dot(module: OlympusModule) -> str:
    """Graphviz rendering: kernels as boxes, PC terminals as hexagons."""
    lines = ["digraph olympus {", "  rankdir=LR;"]
    kernel_node: dict[int, str] = {}
    pc_node: dict[int, str] = {}
    groups: dict[str, list[str]] = {}
    for index, op in enumerate(module.ops):
        if isinstance(op, KernelOp):
            node = f"k{index}"
            kernel_node[index] = node
            label = op.callee
            line = f"  {node} [label={_dot_quote(label)}, shape=box];"
            if op.group is not None:
                groups.setdefault(op.group, []).append(line)
            else:
                lines.append(line)
        elif isinstance(op, PcOp):
            node = f"pc{index}"
            pc_node[index] = node
            label = f"{op.memory or 'PC'}[{op.id}]"
            lines.append(f"  {node} [label={_dot_quote(label)}, shape=hexagon];")
    for cluster, (name, members) in enumerate(groups.items()):
        lines.append(f"  subgraph cluster_{cluster} {{")
        lines.append(f"    label={_dot_quote(name)};")
        lines.extend(f"  {line}" for line in members)
        lines.append("  }")

    kernels_at = {id(op): kernel_node[i] for i, op in enumerate(module.ops) if isinstance(op, KernelOp)}
    pcs_at = {op.channel: pc_node[i] for i, op in enumerate(module.ops) if isinstance(op, PcOp)}
    open_count = 0
    for ch in module.channels():
        label = _dot_quote(f"{ch.name}:{ch.element_width}")
        producers = [kernels_at[id(k)] for k in module.producers(ch.result)]
        consumers = [kernels_at[id(k)] for k in module.consumers(ch.result)]
        pc = pcs_at.get(ch.result)
        if pc is not None:
            if consumers and not producers:
                producers = [pc]
            elif producers and not consumers:
                consumers = [pc]
        if not producers and not consumers:
            continue
        if not producers or not consumers:
            node = f"open{open_count}"
            open_count += 1
            lines.append(f"  {node} [shape=point];")
            if not producers:
                producers = [node]
            else:
                consumers = [node]
        for src in producers:
            for dst in consumers:
                lines.append(f"  {src} -> {dst} [label={label}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
