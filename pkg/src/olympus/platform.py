"""Target platform descriptions loaded from TOML.

A platform is a set of memory channel classes (HBM pseudo-channels, DDR banks)
plus the FPGA resource budget.  Bandwidth is decimal GB/s: a 256-bit port at
450 MHz moves 256 * 450e6 / 8 bytes per second, i.e. 14.4 GB/s.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import PlatformError
from .ir import RESOURCE_NAMES, ResourceVector

__all__ = [
    "MemoryChannelClass",
    "Platform",
    "load_platform",
    "loads_platform",
    "dump_platform",
]


@dataclass(frozen=True)
class MemoryChannelClass:
    """One kind of memory port, e.g. 32 HBM pseudo-channels of 256 bits each."""

    name: str
    count: int
    width_bits: int
    clock_mhz: float
    capacity_mib: int | None = None
    explicit_bandwidth_gbs: float | None = None  # datasheet figure overriding the port math

    @property
    def pc_bandwidth_gbs(self) -> float:
        """Peak bandwidth of a single port in decimal GB/s."""
        if self.explicit_bandwidth_gbs is not None:
            return self.explicit_bandwidth_gbs / self.count
        return self.width_bits * self.clock_mhz / 8.0 / 1000.0

    @property
    def total_bandwidth_gbs(self) -> float:
        if self.explicit_bandwidth_gbs is not None:
            return self.explicit_bandwidth_gbs
        return self.count * self.pc_bandwidth_gbs

    @property
    def bits_per_cycle(self) -> int:
        """Port capacity in the kernel clock domain equals the port width."""
        return self.width_bits


@dataclass(frozen=True)
class Platform:
    name: str
    resources: ResourceVector
    memories: tuple[MemoryChannelClass, ...]
    default_memory: str
    utilization_limit: float = 0.80

    def memory(self, name: str | None) -> MemoryChannelClass:
        wanted = name if name is not None else self.default_memory
        for mem in self.memories:
            if mem.name == wanted:
                return mem
        raise PlatformError(f"platform {self.name!r} has no memory class {wanted!r}")

    @property
    def total_bandwidth_gbs(self) -> float:
        return sum(mem.total_bandwidth_gbs for mem in self.memories)

    def usable_resources(self) -> ResourceVector:
        return ResourceVector(
            *(int(count * self.utilization_limit) for count in self.resources.as_tuple())
        )


def _require(table: dict, key: str, kind, where: str):
    if key not in table:
        raise PlatformError(f"{where}: missing key {key!r}")
    value = table[key]
    if kind is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool):
        raise PlatformError(f"{where}: key {key!r} must be {kind.__name__}")
    return value


def _load(data: dict) -> Platform:
    where = "platform"
    name = _require(data, "name", str, where)

    res_table = _require(data, "resources", dict, where)
    unknown = set(res_table) - set(RESOURCE_NAMES)
    if unknown:
        raise PlatformError(f"{where}.resources: unknown counters {sorted(unknown)}")
    resources = ResourceVector(
        **{key: _require(res_table, key, int, f"{where}.resources") for key in RESOURCE_NAMES}
    )

    mem_tables = data.get("memory")
    if not isinstance(mem_tables, list) or not mem_tables:
        raise PlatformError(f"{where}: needs at least one [[memory]] table")
    memories = []
    for mem in mem_tables:
        mem_name = _require(mem, "name", str, f"{where}.memory")
        mwhere = f"{where}.memory.{mem_name}"
        count = _require(mem, "count", int, mwhere)
        width = _require(mem, "width_bits", int, mwhere)
        clock = _require(mem, "clock_mhz", float, mwhere)
        if count < 1 or width < 1 or clock <= 0:
            raise PlatformError(f"{mwhere}: count, width_bits and clock_mhz must be positive")
        capacity = mem.get("capacity_mib")
        if capacity is not None and (not isinstance(capacity, int) or capacity < 1):
            raise PlatformError(f"{mwhere}: capacity_mib must be a positive integer")
        explicit = mem.get("explicit_bandwidth_gbs")
        if explicit is not None:
            if isinstance(explicit, int):
                explicit = float(explicit)
            if not isinstance(explicit, float) or explicit <= 0:
                raise PlatformError(f"{mwhere}: explicit_bandwidth_gbs must be positive")
        memories.append(
            MemoryChannelClass(
                name=mem_name,
                count=count,
                width_bits=width,
                clock_mhz=clock,
                capacity_mib=capacity,
                explicit_bandwidth_gbs=explicit,
            )
        )
    names = [mem.name for mem in memories]
    if len(set(names)) != len(names):
        raise PlatformError(f"{where}: duplicate memory class names in {names}")

    default_memory = data.get("default_memory", names[0])
    if default_memory not in names:
        raise PlatformError(f"{where}: default_memory {default_memory!r} is not a memory class")

    limit = data.get("utilization_limit", 0.80)
    if isinstance(limit, int):
        limit = float(limit)
    if not isinstance(limit, float) or not 0 < limit <= 1:
        raise PlatformError(f"{where}: utilization_limit must be in (0, 1]")

    return Platform(
        name=name,
        resources=resources,
        memories=tuple(memories),
        default_memory=default_memory,
        utilization_limit=limit,
    )


def loads_platform(text: str) -> Platform:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise PlatformError(f"bad platform TOML: {exc}") from exc
    return _load(data)


def load_platform(path) -> Platform:
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise PlatformError(f"{path}: bad platform TOML: {exc}") from exc
    return _load(data)


def dump_platform(platform: Platform) -> str:
    """Serialize back to TOML (inverse of :func:`loads_platform`)."""
    out = io.StringIO()
    out.write(f'name = "{platform.name}"\n')
    out.write(f'default_memory = "{platform.default_memory}"\n')
    out.write(f"utilization_limit = {platform.utilization_limit}\n\n[resources]\n")
    for key, count in platform.resources.as_dict().items():
        out.write(f"{key} = {count}\n")
    for mem in platform.memories:
        out.write("\n[[memory]]\n")
        out.write(f'name = "{mem.name}"\n')
        out.write(f"count = {mem.count}\n")
        out.write(f"width_bits = {mem.width_bits}\n")
        out.write(f"clock_mhz = {mem.clock_mhz}\n")
        if mem.capacity_mib is not None:
            out.write(f"capacity_mib = {mem.capacity_mib}\n")
        if mem.explicit_bandwidth_gbs is not None:
            out.write(f"explicit_bandwidth_gbs = {mem.explicit_bandwidth_gbs}\n")
    return out.getvalue()
