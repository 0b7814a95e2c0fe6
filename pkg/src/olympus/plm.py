"""Sharing of private local memories between small-type buffers.

Buffers whose lifetimes never overlap can occupy the same physical memory.
Lifetimes come from an external sidecar file (the dialect carries no schedule
information): one line per buffer, `name start end [slots=s1|s2|...]`, with
half-open [start, end) intervals so touching lifetimes are compatible.  The
optional slots record which access phases a buffer uses; members of a shared
memory with pairwise-disjoint slots also share one port.

Buffers without lifetime entries are treated as always-live, which keeps them
out of any sharing (reported as a warning, not an error).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .analysis import plm_estimate
from .errors import ParseError
from .ir import ChannelOp, OlympusModule, Op, ParamType, ResourceVector

__all__ = [
    "Lifetime",
    "load_lifetimes",
    "loads_lifetimes",
    "build_conflict_graph",
    "PlmInstance",
    "SharingPlan",
    "share_plm",
]


@dataclass(frozen=True)
class Lifetime:
    name: str
    start: int
    end: int  # exclusive
    slots: frozenset[str] | None = None  # access phases; None = unknown


def loads_lifetimes(text: str) -> dict[str, Lifetime]:
    out: dict[str, Lifetime] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (3, 4):
            raise ParseError(
                "expected 'name start end [slots=...]', got "
                f"{len(parts)} fields", lineno,
            )
        name = parts[0]
        if name in out:
            raise ParseError(f"duplicate lifetime for {name!r}", lineno)
        try:
            start, end = int(parts[1]), int(parts[2])
        except ValueError:
            raise ParseError("start and end must be integers", lineno) from None
        if start < 0 or start >= end:
            raise ParseError(f"need 0 <= start < end, got [{start}, {end})", lineno)
        slots: frozenset[str] | None = None
        if len(parts) == 4:
            if not parts[3].startswith("slots="):
                raise ParseError(f"unexpected trailing field {parts[3]!r}", lineno)
            names = [s for s in parts[3][len("slots="):].split("|") if s]
            if not names:
                raise ParseError("slots= needs at least one slot name", lineno)
            slots = frozenset(names)
        out[name] = Lifetime(name=name, start=start, end=end, slots=slots)
    return out


def load_lifetimes(path) -> dict[str, Lifetime]:
    with open(path, "r", encoding="utf-8") as fh:
        return loads_lifetimes(fh.read())


def _overlaps(a: Lifetime | None, b: Lifetime | None) -> bool:
    if a is None or b is None:  # unknown lifetime: assume always live
        return True
    return a.start < b.end and b.start < a.end


def build_conflict_graph(
    buffers: list[str], lifetimes: dict[str, Lifetime]
) -> dict[str, set[str]]:
    """Undirected conflict graph: edge iff the two lifetimes overlap."""
    graph: dict[str, set[str]] = {name: set() for name in buffers}
    for i, a in enumerate(buffers):
        for b in buffers[i + 1 :]:
            if _overlaps(lifetimes.get(a), lifetimes.get(b)):
                graph[a].add(b)
                graph[b].add(a)
    return graph


@dataclass(frozen=True)
class PlmInstance:
    name: str
    members: tuple[str, ...]
    size_bytes: int
    ports: int
    estimate: ResourceVector

    def as_dict(self) -> dict:
        return {
            "instance": self.name,
            "members": list(self.members),
            "size_bytes": self.size_bytes,
            "ports": self.ports,
            "estimate": self.estimate.as_dict(),
        }


@dataclass(frozen=True)
class SharingPlan:
    assignment: dict[str, str]  # buffer name -> instance name
    instances: tuple[PlmInstance, ...]
    savings: ResourceVector
    warnings: tuple[str, ...]

    def as_dict(self) -> dict:
        return {
            "assignment": dict(sorted(self.assignment.items())),
            "instances": [inst.as_dict() for inst in self.instances],
            "savings": self.savings.as_dict(),
            "warnings": list(self.warnings),
        }


def _ports(members: list[ChannelOp], lifetimes: dict[str, Lifetime]) -> int:
    """One shared port when all member access slots are pairwise disjoint."""
    if len(members) == 1:
        return 1
    slot_sets = [lifetimes[ch.name].slots if ch.name in lifetimes else None for ch in members]
    if any(s is None for s in slot_sets):
        return len(members)
    for i, a in enumerate(slot_sets):
        for b in slot_sets[i + 1 :]:
            if a & b:
                return len(members)
    return 1


def share_plm(
    module: OlympusModule, lifetimes: dict[str, Lifetime]
) -> tuple[OlympusModule, SharingPlan]:
    """Color the conflict graph and annotate each small channel's instance.

    Greedy coloring, highest degree first with ties broken by name; buffers
    with the same color share one memory sized for the largest member.
    """
    small = [ch for ch in module.channels() if ch.param_type is ParamType.SMALL]
    names = [ch.name for ch in small]
    by_name = {ch.name: ch for ch in small}
    warnings = tuple(
        f"buffer {name!r} has no lifetime entry; treated as always-live"
        for name in names
        if name not in lifetimes
    )

    graph = build_conflict_graph(names, lifetimes)
    order = sorted(names, key=lambda n: (-len(graph[n]), n))
    color: dict[str, int] = {}
    for name in order:
        used = {color[peer] for peer in graph[name] if peer in color}
        c = 0
        while c in used:
            c += 1
        color[name] = c

    groups: dict[int, list[ChannelOp]] = {}
    for name in names:  # op order within each instance
        groups.setdefault(color[name], []).append(by_name[name])

    assignment: dict[str, str] = {}
    instances: list[PlmInstance] = []
    savings = ResourceVector()
    for c in sorted(groups):
        members = groups[c]
        instance_name = f"plm{c}"
        estimate = ResourceVector()
        for ch in members:
            assignment[ch.name] = instance_name
            estimate = estimate.max_with(plm_estimate(ch.element_width, ch.depth))
            savings = savings + plm_estimate(ch.element_width, ch.depth)
        savings = savings - estimate
        instances.append(
            PlmInstance(
                name=instance_name,
                members=tuple(ch.name for ch in members),
                size_bytes=max(ch.size_bytes for ch in members),
                ports=_ports(members, lifetimes),
                estimate=estimate,
            )
        )

    ops: list[Op] = []
    for op in module.ops:
        if isinstance(op, ChannelOp) and op.name in assignment:
            ops.append(replace(op, plm_instance=assignment[op.name]))
        else:
            ops.append(op)
    plan = SharingPlan(
        assignment=assignment,
        instances=tuple(instances),
        savings=savings,
        warnings=warnings,
    )
    return OlympusModule(ops=tuple(ops)), plan
