"""Bus packing: interleave several arrays onto one word stream.

Given per-array element widths and per-iteration consumption rates, find a
repetition count k so that k iterations' worth of data tiles bus words with as
little padding as possible, then slice the concatenated bitstream into words.
Elements may straddle word boundaries; adapters reassemble them on the far
side.  Efficiency of the result is the closed form

    e(k) = k*B / (ceil(k*B / W) * W),   B = sum(rate_i * width_i)

and the constructed layout always measures exactly e(k).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction

from .errors import TransformError
from .ir import ChannelOp, KernelOp, OlympusModule, Op, ParamType, PcOp
from .layout import Layout, Placement

__all__ = [
    "ArraySpec",
    "AdapterSpec",
    "pack",
    "naive_layout",
    "layout_efficiency",
    "adapter_spec",
    "replay_adapter",
    "pack_words",
    "apply_iris",
]

DEFAULT_K_MAX = 64


@dataclass(frozen=True)
class ArraySpec:
    name: str
    element_width: int  # bits
    rate: int  # elements consumed per kernel iteration
    total: int  # element count over the whole transfer

    def validate(self) -> None:
        if not self.name:
            raise TransformError("array name must be non-empty")
        if self.element_width < 1 or self.rate < 1 or self.total < 1:
            raise TransformError(
                f"array {self.name!r}: width, rate and total must be positive"
            )


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def pack(arrays: list[ArraySpec], bus_width: int, k_max: int = DEFAULT_K_MAX) -> Layout:
    """Interleave the arrays round-robin over k iterations and slice into words.

    k is the smallest value in [1, k_max] maximizing e(k).  Repetitions are
    sized so the pattern covers every array's total element count.
    """
    if not arrays:
        raise TransformError("cannot pack an empty array list")
    if bus_width < 1 or k_max < 1:
        raise TransformError("bus_width and k_max must be positive")
    for spec in arrays:
        spec.validate()
    names = [spec.name for spec in arrays]
    if len(set(names)) != len(names):
        raise TransformError(f"duplicate array names in {names}")

    bits_per_iteration = sum(spec.rate * spec.element_width for spec in arrays)
    best_k = 1
    best_e = Fraction(0)
    for k in range(1, k_max + 1):
        total = k * bits_per_iteration
        e = Fraction(total, _ceil_div(total, bus_width) * bus_width)
        if e > best_e:
            best_k, best_e = k, e
    k = best_k

    placements: list[Placement] = []
    cursor = 0
    for iteration in range(k):
        for spec in arrays:
            for r in range(spec.rate):
                elem_index = iteration * spec.rate + r
                sent = 0
                while sent < spec.element_width:
                    offset = cursor % bus_width
                    seg = min(bus_width - offset, spec.element_width - sent)
                    placements.append(
                        Placement(
                            array=spec.name,
                            elem_index=elem_index,
                            bit_lo=sent,
                            bit_hi=sent + seg - 1,
                            word=cursor // bus_width,
                            offset=offset,
                        )
                    )
                    sent += seg
                    cursor += seg

    repetitions = max(_ceil_div(spec.total, k * spec.rate) for spec in arrays)
    return Layout(
        bus_width=bus_width,
        k=k,
        repetitions=repetitions,
        placements=tuple(placements),
    )


def naive_layout(arrays: list[ArraySpec], bus_width: int) -> Layout:
    """Baseline: one word per array, whole elements aligned at width multiples."""
    if not arrays:
        raise TransformError("cannot lay out an empty array list")
    for spec in arrays:
        spec.validate()
        if spec.element_width > bus_width:
            raise TransformError(
                f"array {spec.name!r} is {spec.element_width} bits, wider than "
                f"the {bus_width}-bit bus"
            )
    placements: list[Placement] = []
    repetitions = 1
    for word, spec in enumerate(arrays):
        per_word = bus_width // spec.element_width
        for j in range(per_word):
            placements.append(
                Placement(
                    array=spec.name,
                    elem_index=j,
                    bit_lo=0,
                    bit_hi=spec.element_width - 1,
                    word=word,
                    offset=j * spec.element_width,
                )
            )
        repetitions = max(repetitions, _ceil_div(spec.total, per_word))
    return Layout(bus_width=bus_width, k=1, repetitions=repetitions, placements=tuple(placements))


def layout_efficiency(layout: Layout) -> float:
    return layout.efficiency()


# --------------------------------------------------------------------------
# Adapters


@dataclass(frozen=True)
class AdapterSpec:
    """Per-array extraction programs against one pattern of bus words.

    Each element is a tuple of (word, offset, length) reads; concatenating the
    reads LSB first rebuilds the element.  Word indices are relative to the
    pattern; the pattern repeats every `words_per_pattern` words.
    """

    bus_width: int
    words_per_pattern: int
    programs: dict[str, tuple[tuple[tuple[int, int, int], ...], ...]]

    def as_dict(self) -> dict:
        return {
            "bus_width": self.bus_width,
            "words_per_pattern": self.words_per_pattern,
            "programs": {
                array: [[list(read) for read in elem] for elem in elems]
                for array, elems in sorted(self.programs.items())
            },
        }


def adapter_spec(layout: Layout) -> AdapterSpec:
    programs: dict[str, tuple] = {}
    for array in layout.arrays():
        by_elem: dict[int, list[tuple[int, int, int]]] = {}
        for p in layout.array_placements(array):
            by_elem.setdefault(p.elem_index, []).append((p.word, p.offset, p.length))
        elems = tuple(tuple(by_elem[e]) for e in sorted(by_elem))
        programs[array] = elems
    return AdapterSpec(
        bus_width=layout.bus_width,
        words_per_pattern=layout.word_count,
        programs=programs,
    )


def pack_words(layout: Layout, data: dict[str, list[int]]) -> list[int]:
    """Serialize per-array element values into the layout's word stream.

    Every array must provide repetitions * elements_per_pattern values; the
    trailing pattern may be padded with zeros by the caller.
    """
    words_per_pattern = layout.word_count
    words = [0] * (layout.repetitions * words_per_pattern)
    for array in layout.arrays():
        per_pattern = layout.elements_per_pattern(array)
        values = data[array]
        if len(values) != layout.repetitions * per_pattern:
            raise ValueError(
                f"array {array!r}: expected {layout.repetitions * per_pattern} "
                f"values, got {len(values)}"
            )
        for rep in range(layout.repetitions):
            for p in layout.array_placements(array):
                value = values[rep * per_pattern + p.elem_index]
                chunk = (value >> p.bit_lo) & ((1 << p.length) - 1)
                words[rep * words_per_pattern + p.word] |= chunk << p.offset
    return words


def replay_adapter(
    spec: AdapterSpec, words: list[int], repetitions: int
) -> dict[str, list[int]]:
    """Run the extraction programs over a word stream; inverse of pack_words."""
    out: dict[str, list[int]] = {}
    for array, elems in spec.programs.items():
        values: list[int] = []
        for rep in range(repetitions):
            base = rep * spec.words_per_pattern
            for program in elems:
                value = 0
                position = 0
                for word, offset, length in program:
                    chunk = (words[base + word] >> offset) & ((1 << length) - 1)
                    value |= chunk << position
                    position += length
                values.append(value)
        out[array] = values
    return out


# --------------------------------------------------------------------------
# Applying packing to a module


def apply_iris(
    module: OlympusModule,
    group: list[str],
    bus_width: int,
    rates: dict[str, int] | None = None,
) -> OlympusModule:
    """Merge the named channels into one bus-wide channel with a packed layout.

    The channels must face memory in the same direction with the same
    paramType, and their kernels must form one super-node (either literally
    the same kernel or kernels sharing a group).  The merged channel takes the
    first member's value id and PC assignment; member names concatenate.
    """
    if not group:
        raise TransformError("channel group must be non-empty")
    rates = rates or {}
    members: list[ChannelOp] = []
    for name in group:
        try:
            members.append(module.channel_by_name(name))
        except KeyError:
            raise TransformError(f"unknown channel {name!r}") from None
    if len({ch.result for ch in members}) != len(members):
        raise TransformError(f"duplicate channels in group {group}")

    pcs: list[PcOp] = []
    attachments = set()
    kernel_index = {id(k): i for i, k in enumerate(module.ops) if isinstance(k, KernelOp)}
    for ch in members:
        if ch.param_type is ParamType.COMPLEX:
            raise TransformError(f"channel {ch.name!r} has paramType complex")
        if not module.is_memory_facing(ch.result):
            raise TransformError(f"channel {ch.name!r} does not face memory")
        pc = module.pc_for(ch.result)
        if pc is None:
            raise TransformError(f"channel {ch.name!r} has no pc node")
        pcs.append(pc)
        for k in module.attached_kernels(ch.result):
            attachments.add(k.group if k.group is not None else f"@op{kernel_index[id(k)]}")
    if len({ch.param_type for ch in members}) != 1:
        raise TransformError(f"group {group} mixes paramTypes")
    if len({pc.direction for pc in pcs}) != 1:
        raise TransformError(f"group {group} mixes read and write channels")
    if len({pc.memory for pc in pcs}) != 1:
        raise TransformError(f"group {group} spans memory classes")
    if len(attachments) != 1:
        raise TransformError(f"group {group} spans more than one kernel super-node")

    arrays = [
        ArraySpec(
            name=ch.name,
            element_width=ch.element_width,
            rate=rates.get(ch.name, 1),
            total=ch.depth,
        )
        for ch in members
    ]
    layout = pack(arrays, bus_width)

    first = members[0]
    if first.param_type is ParamType.STREAM:
        depth = max(ch.depth for ch in members)
    else:
        depth = layout.repetitions * layout.word_count
    merged = ChannelOp(
        result=first.result,
        name="".join(ch.name for ch in members),
        element_width=bus_width,
        param_type=first.param_type,
        depth=depth,
        layout=layout,
    )

    member_ids = {ch.result for ch in members}

    def rewire(values: tuple[int, ...]) -> tuple[int, ...]:
        out: list[int] = []
        for v in values:
            if v in member_ids:
                if merged.result not in out:
                    out.append(merged.result)
            else:
                out.append(v)
        return tuple(out)

    ops: list[Op] = []
    for op in module.ops:
        if isinstance(op, ChannelOp) and op.result in member_ids:
            if op.result == first.result:
                ops.append(merged)
        elif isinstance(op, KernelOp):
            if member_ids & set(op.operands):
                inputs = rewire(op.inputs)
                outputs = rewire(op.outputs)
                ops.append(
                    replace(
                        op,
                        inputs=inputs,
                        outputs=outputs,
                        segments=(len(inputs), len(outputs)),
                    )
                )
            else:
                ops.append(op)
        elif isinstance(op, PcOp) and op.channel in member_ids:
            if op.channel == first.result:
                ops.append(op)
        else:
            ops.append(op)
    return OlympusModule(ops=tuple(ops))
