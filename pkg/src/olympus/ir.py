"""The olympus dialect: a dataflow graph of kernels wired together by channels.

Three operations make up a module:

* ``olympus.make_channel`` defines a data channel (an edge of the DFG) carrying
  elements of a fixed bit width.  Only the width matters; a float, a fixed-point
  value and an integer of the same size are all ``iN``.
* ``olympus.kernel`` is a compute node.  Its operands are channel values; the
  ``operand_segment_sizes`` attribute splits them into inputs and outputs.
* ``olympus.pc`` terminates a memory-facing channel on a physical memory
  pseudo-channel, identified by ``id``.

The textual format is line oriented: one op per line, ``//`` comments, SSA-style
``%N`` value ids.  ``print_module`` emits a canonical form that re-parses to a
structurally identical module.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Union

from .errors import LayoutError, ParseError
from .layout import Layout, parse_layout, print_layout

__all__ = [
    "ParamType",
    "Direction",
    "ChannelType",
    "ResourceVector",
    "ChannelOp",
    "KernelOp",
    "PcOp",
    "OlympusModule",
    "Diagnostic",
    "parse_module",
    "parse_module_lines",
    "print_module",
    "verify_module",
]

RESOURCE_NAMES = ("ff", "lut", "bram", "uram", "dsp")


class ParamType(str, Enum):
    STREAM = "stream"  # produced and consumed in order; depth = max channel depth
    SMALL = "small"  # random access, 100s of kB at most; depth = element count
    COMPLEX = "complex"  # anything goes; depth = byte count

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


class Direction(str, Enum):
    READ = "read"  # memory -> kernel
    WRITE = "write"  # kernel -> memory

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


@dataclass(frozen=True)
class ChannelType:
    """Channel element type; prints as ``!olympus.channel<iN>``."""

    element_width: int

    def __str__(self) -> str:
        return f"!olympus.channel<i{self.element_width}>"


@dataclass(frozen=True)
class ResourceVector:
    """FPGA resource counts with component-wise arithmetic."""

    ff: int = 0
    lut: int = 0
    bram: int = 0
    uram: int = 0
    dsp: int = 0

    def __add__(self, other: "ResourceVector") -> "ResourceVector":
        return ResourceVector(*(a + b for a, b in zip(self.as_tuple(), other.as_tuple())))

    def __sub__(self, other: "ResourceVector") -> "ResourceVector":
        return ResourceVector(*(a - b for a, b in zip(self.as_tuple(), other.as_tuple())))

    def __mul__(self, factor: int) -> "ResourceVector":
        return ResourceVector(*(a * factor for a in self.as_tuple()))

    __rmul__ = __mul__

    def fits_within(self, other: "ResourceVector") -> bool:
        return all(a <= b for a, b in zip(self.as_tuple(), other.as_tuple()))

    def max_with(self, other: "ResourceVector") -> "ResourceVector":
        return ResourceVector(*(max(a, b) for a, b in zip(self.as_tuple(), other.as_tuple())))

    def is_zero(self) -> bool:
        return all(a == 0 for a in self.as_tuple())

    def as_tuple(self) -> tuple[int, int, int, int, int]:
        return (self.ff, self.lut, self.bram, self.uram, self.dsp)

    def as_dict(self) -> dict[str, int]:
        return dict(zip(RESOURCE_NAMES, self.as_tuple()))


@dataclass(frozen=True)
class ChannelOp:
    result: int  # %N value id
    name: str
    element_width: int
    param_type: ParamType
    depth: int
    layout: Layout | None = None
    plm_instance: str | None = None

    @property
    def type(self) -> ChannelType:
        return ChannelType(self.element_width)

    @property
    def size_bytes(self) -> int:
        """Total transfer size: depth is bytes for complex, elements otherwise."""
        if self.param_type is ParamType.COMPLEX:
            return self.depth
        return -(-self.element_width * self.depth // 8)

    def label(self) -> str:
        return f'olympus.make_channel %{self.result} "{self.name}"'


@dataclass(frozen=True)
class KernelOp:
    callee: str
    latency: int
    ii: int
    resources: ResourceVector
    inputs: tuple[int, ...]
    outputs: tuple[int, ...]
    segments: tuple[int, int] = None  # type: ignore[assignment]  # derived in __post_init__
    group: str | None = None  # super-node name after bus widening
    replica_index: int | None = None

    def __post_init__(self) -> None:
        if self.segments is None:
            object.__setattr__(self, "segments", (len(self.inputs), len(self.outputs)))

    @property
    def operands(self) -> tuple[int, ...]:
        return self.inputs + self.outputs

    def label(self) -> str:
        return f'olympus.kernel "{self.callee}"'


@dataclass(frozen=True)
class PcOp:
    channel: int  # operand value id
    id: int  # physical pseudo-channel index
    direction: Direction
    memory: str | None = None  # memory class name; None means the platform default

    def label(self) -> str:
        return f"olympus.pc (%{self.channel})"


Op = Union[ChannelOp, KernelOp, PcOp]


@dataclass(frozen=True)
class OlympusModule:
    ops: tuple[Op, ...] = ()

    def channels(self) -> Iterator[ChannelOp]:
        return (op for op in self.ops if isinstance(op, ChannelOp))

    def kernels(self) -> Iterator[KernelOp]:
        return (op for op in self.ops if isinstance(op, KernelOp))

    def pcs(self) -> Iterator[PcOp]:
        return (op for op in self.ops if isinstance(op, PcOp))

    def channel(self, value_id: int) -> ChannelOp:
        for op in self.channels():
            if op.result == value_id:
                return op
        raise KeyError(f"no channel %{value_id}")

    def channel_by_name(self, name: str) -> ChannelOp:
        for op in self.channels():
            if op.name == name:
                return op
        raise KeyError(f"no channel named {name!r}")

    def consumers(self, value_id: int) -> tuple[KernelOp, ...]:
        """Kernels that list the channel as an input."""
        return tuple(k for k in self.kernels() if value_id in k.inputs)

    def producers(self, value_id: int) -> tuple[KernelOp, ...]:
        """Kernels that list the channel as an output."""
        return tuple(k for k in self.kernels() if value_id in k.outputs)

    def pc_for(self, value_id: int) -> PcOp | None:
        for pc in self.pcs():
            if pc.channel == value_id:
                return pc
        return None

    def is_memory_facing(self, value_id: int) -> bool:
        """A channel faces memory when kernels sit on only one of its two ends."""
        has_consumer = bool(self.consumers(value_id))
        has_producer = bool(self.producers(value_id))
        return has_consumer != has_producer

    def attached_kernels(self, value_id: int) -> tuple[KernelOp, ...]:
        return self.producers(value_id) + self.consumers(value_id)

    def next_value_id(self) -> int:
        ids = [c.result for c in self.channels()]
        return max(ids) + 1 if ids else 0


# --------------------------------------------------------------------------
# Lexer


@dataclass(frozen=True)
class _Token:
    kind: str  # PCT_ID | STRING | INT | IDENT | punctuation text | EOL
    text: str
    value: object
    col: int


_PUNCT1 = "=(){}:,<>!"


def _lex_line(line: str, lineno: int) -> list[_Token]:
    tokens: list[_Token] = []
    i = 0
    n = len(line)
    while i < n:
        c = line[i]
        if c in " \t":
            i += 1
            continue
        if c == "/" and i + 1 < n and line[i + 1] == "/":
            break  # comment to end of line
        col = i + 1
        if line.startswith("->", i):
            tokens.append(_Token("->", "->", None, col))
            i += 2
            continue
        if c == "%":
            m = re.match(r"%(\d+)", line[i:])
            if not m:
                raise ParseError("expected value id after '%'", lineno, col)
            tokens.append(_Token("PCT_ID", m.group(0), int(m.group(1)), col))
            i += m.end()
            continue
        if c == '"':
            j = i + 1
            chars: list[str] = []
            while j < n and line[j] != '"':
                if line[j] == "\\" and j + 1 < n and line[j + 1] in ('"', "\\"):
                    chars.append(line[j + 1])
                    j += 2
                else:
                    chars.append(line[j])
                    j += 1
            if j >= n:
                raise ParseError("unterminated string", lineno, col)
            tokens.append(_Token("STRING", line[i : j + 1], "".join(chars), col))
            i = j + 1
            continue
        if c.isdigit():
            m = re.match(r"\d+", line[i:])
            tokens.append(_Token("INT", m.group(0), int(m.group(0)), col))
            i += m.end()
            continue
        if c.isalpha() or c == "_":
            m = re.match(r"[A-Za-z_][A-Za-z0-9_.]*", line[i:])
            tokens.append(_Token("IDENT", m.group(0), m.group(0), col))
            i += m.end()
            continue
        if c in _PUNCT1:
            tokens.append(_Token(c, c, None, col))
            i += 1
            continue
        raise ParseError(f"unexpected character {c!r}", lineno, col)
    tokens.append(_Token("EOL", "", None, n + 1))
    return tokens


# --------------------------------------------------------------------------
# Parser

_CHANNEL_ATTRS = {"name", "encapsulatedType", "paramType", "depth", "layout", "plm_instance"}
_CHANNEL_REQUIRED = {"encapsulatedType", "paramType", "depth"}
_KERNEL_ATTRS = {
    "callee",
    "latency",
    "ii",
    "ff",
    "lut",
    "bram",
    "uram",
    "dsp",
    "operand_segment_sizes",
    "group",
    "replica_index",
}
_KERNEL_REQUIRED = _KERNEL_ATTRS - {"group", "replica_index"}
_PC_ATTRS = {"id", "direction", "memory"}
_PC_REQUIRED = {"id", "direction"}


class _LineParser:
    def __init__(self, tokens: list[_Token], lineno: int):
        self.tokens = tokens
        self.lineno = lineno
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def take(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            self.fail(f"expected {kind!r}, found {tok.text or 'end of line'!r}", tok)
        return self.take()

    def fail(self, message: str, tok: _Token | None = None) -> None:
        col = (tok or self.peek()).col
        raise ParseError(message, self.lineno, col)

    # -- grammar pieces ----------------------------------------------------

    def channel_type(self) -> int:
        """`!olympus.channel<iN>` -> element width."""
        self.expect("!")
        ident = self.expect("IDENT")
        if ident.value != "olympus.channel":
            self.fail(f"unknown type !{ident.value}", ident)
        self.expect("<")
        width = self.int_type()
        self.expect(">")
        return width

    def int_type(self) -> int:
        ident = self.expect("IDENT")
        m = re.fullmatch(r"i(\d+)", str(ident.value))
        if not m:
            self.fail(f"expected integer type, found {ident.value!r}", ident)
        width = int(m.group(1))
        if width < 1:
            self.fail("element width must be at least 1", ident)
        return width

    def attr_dict(self) -> dict[str, tuple[object, _Token]]:
        self.expect("{")
        attrs: dict[str, tuple[object, _Token]] = {}
        if self.peek().kind != "}":
            while True:
                key_tok = self.expect("IDENT")
                key = str(key_tok.value)
                if key in attrs:
                    self.fail(f"duplicate attribute {key!r}", key_tok)
                self.expect("=")
                attrs[key] = (self.attr_value(key), key_tok)
                if self.peek().kind != ",":
                    break
                self.take()
        self.expect("}")
        return attrs

    def attr_value(self, key: str) -> object:
        tok = self.peek()
        if tok.kind == "STRING":
            return self.take().value
        if tok.kind == "INT":
            value = self.take().value
            if self.peek().kind == ":":  # optional `: i64` suffix
                self.take()
                suffix = self.expect("IDENT")
                if suffix.value != "i64":
                    self.fail(f"expected i64 suffix, found {suffix.value!r}", suffix)
            return value
        if tok.kind == "IDENT" and tok.value == "array":
            self.take()
            self.expect("<")
            elem = self.expect("IDENT")
            if elem.value != "i32":
                self.fail("operand_segment_sizes must be array<i32: ...>", elem)
            self.expect(":")
            first = self.expect("INT").value
            self.expect(",")
            second = self.expect("INT").value
            self.expect(">")
            return (first, second)
        if tok.kind == "IDENT":  # bare type like encapsulatedType = i32
            return ("type", self.int_type())
        self.fail(f"bad value for attribute {key!r}", tok)

    def operand_list(self) -> list[tuple[int, _Token]]:
        self.expect("(")
        operands: list[tuple[int, _Token]] = []
        if self.peek().kind != ")":
            while True:
                tok = self.expect("PCT_ID")
                operands.append((int(tok.value), tok))  # type: ignore[arg-type]
                if self.peek().kind != ",":
                    break
                self.take()
        self.expect(")")
        return operands

    def type_list(self) -> list[int]:
        self.expect("(")
        types: list[int] = []
        if self.peek().kind != ")":
            while True:
                types.append(self.channel_type())
                if self.peek().kind != ",":
                    break
                self.take()
        self.expect(")")
        return types


def _check_attrs(p: _LineParser, attrs: dict, allowed: set[str], required: set[str], op: str) -> None:
    for key, (_, tok) in attrs.items():
        if key not in allowed:
            p.fail(f"unknown attribute {key!r} on {op}", tok)
    for key in sorted(required):
        if key not in attrs:
            p.fail(f"missing attribute {key!r} on {op}")


def _attr_int(p: _LineParser, attrs: dict, key: str) -> int:
    value, tok = attrs[key]
    if not isinstance(value, int):
        p.fail(f"attribute {key!r} must be an integer", tok)
    return value


def _attr_str(p: _LineParser, attrs: dict, key: str) -> str:
    value, tok = attrs[key]
    if not isinstance(value, str):
        p.fail(f"attribute {key!r} must be a string", tok)
    return value


class _ModuleParser:
    def __init__(self) -> None:
        self.ops: list[Op] = []
        self.op_lines: list[int] = []
        self.values: dict[int, ChannelOp] = {}

    def parse(self, text: str) -> OlympusModule:
        for lineno, raw in enumerate(text.splitlines(), start=1):
            tokens = _lex_line(raw, lineno)
            if tokens[0].kind == "EOL":
                continue
            p = _LineParser(tokens, lineno)
            self.ops.append(self.parse_op(p))
            self.op_lines.append(lineno)
            p.expect("EOL")
        return OlympusModule(ops=tuple(self.ops))

    def parse_op(self, p: _LineParser) -> Op:
        result: int | None = None
        if p.peek().kind == "PCT_ID":
            result_tok = p.take()
            result = int(result_tok.value)  # type: ignore[arg-type]
            p.expect("=")
        name_tok = p.expect("STRING")
        op_name = str(name_tok.value)
        if op_name == "olympus.make_channel":
            return self.parse_channel(p, result, name_tok)
        if result is not None:
            p.fail(f"operation {op_name!r} has no results", name_tok)
        if op_name == "olympus.kernel":
            return self.parse_kernel(p)
        if op_name == "olympus.pc":
            return self.parse_pc(p)
        p.fail(f"unknown operation {op_name!r}", name_tok)
        raise AssertionError  # unreachable

    def resolve(self, p: _LineParser, operand: tuple[int, _Token]) -> ChannelOp:
        value_id, tok = operand
        if value_id not in self.values:
            p.fail(f"use of undefined value %{value_id}", tok)
        return self.values[value_id]

    def parse_channel(self, p: _LineParser, result: int | None, name_tok: _Token) -> ChannelOp:
        p.expect("(")
        p.expect(")")
        attrs = p.attr_dict()
        _check_attrs(p, attrs, _CHANNEL_ATTRS, _CHANNEL_REQUIRED, "olympus.make_channel")
        p.expect(":")
        p.expect("(")
        p.expect(")")
        p.expect("->")
        # Accept the result type with or without surrounding parentheses.
        parenthesized = p.peek().kind == "("
        if parenthesized:
            p.take()
        declared_width = p.channel_type()
        if parenthesized:
            p.expect(")")

        enc, enc_tok = attrs["encapsulatedType"]
        if not (isinstance(enc, tuple) and enc[0] == "type"):
            p.fail("encapsulatedType must be an integer type like i32", enc_tok)
        width = enc[1]
        if width != declared_width:
            p.fail(
                f"type mismatch: encapsulatedType i{width} but result type "
                f"!olympus.channel<i{declared_width}>",
                enc_tok,
            )
        param_text = _attr_str(p, attrs, "paramType")
        try:
            param_type = ParamType(param_text)
        except ValueError:
            p.fail(f"paramType must be stream, small or complex, got {param_text!r}", attrs["paramType"][1])
        depth = _attr_int(p, attrs, "depth")

        if result is None:
            result = max(self.values, default=-1) + 1
        if result in self.values:
            p.fail(f"duplicate value id %{result}")
        name = _attr_str(p, attrs, "name") if "name" in attrs else f"ch{result}"

        layout: Layout | None = None
        if "layout" in attrs:
            try:
                layout = parse_layout(_attr_str(p, attrs, "layout"))
            except (ParseError, LayoutError) as exc:
                p.fail(f"bad layout attribute: {exc}", attrs["layout"][1])
        plm_instance = _attr_str(p, attrs, "plm_instance") if "plm_instance" in attrs else None

        op = ChannelOp(
            result=result,
            name=name,
            element_width=width,
            param_type=param_type,
            depth=depth,
            layout=layout,
            plm_instance=plm_instance,
        )
        self.values[result] = op
        return op

    def parse_kernel(self, p: _LineParser) -> KernelOp:
        operands = p.operand_list()
        attrs = p.attr_dict()
        _check_attrs(p, attrs, _KERNEL_ATTRS, _KERNEL_REQUIRED, "olympus.kernel")
        p.expect(":")
        declared = p.type_list()
        p.expect("->")
        p.expect("(")
        p.expect(")")

        channels = [self.resolve(p, operand) for operand in operands]
        if len(declared) != len(operands):
            p.fail(
                f"type mismatch: {len(operands)} operands but {len(declared)} declared types"
            )
        for (value_id, tok), width, ch in zip(operands, declared, channels):
            if ch.element_width != width:
                p.fail(
                    f"type mismatch: %{value_id} is !olympus.channel<i{ch.element_width}> "
                    f"but signature declares i{width}",
                    tok,
                )

        seg, seg_tok = attrs["operand_segment_sizes"]
        if not (isinstance(seg, tuple) and len(seg) == 2 and all(isinstance(s, int) for s in seg)):
            p.fail("operand_segment_sizes must be array<i32: in, out>", seg_tok)
        n_in, n_out = seg
        if n_in < 0 or n_out < 0 or n_in + n_out != len(operands):
            p.fail(
                f"operand_segment_sizes [{n_in}, {n_out}] do not cover {len(operands)} operands",
                seg_tok,
            )
        value_ids = [value_id for value_id, _ in operands]
        return KernelOp(
            callee=_attr_str(p, attrs, "callee"),
            latency=_attr_int(p, attrs, "latency"),
            ii=_attr_int(p, attrs, "ii"),
            resources=ResourceVector(
                ff=_attr_int(p, attrs, "ff"),
                lut=_attr_int(p, attrs, "lut"),
                bram=_attr_int(p, attrs, "bram"),
                uram=_attr_int(p, attrs, "uram"),
                dsp=_attr_int(p, attrs, "dsp"),
            ),
            inputs=tuple(value_ids[:n_in]),
            outputs=tuple(value_ids[n_in:]),
            group=_attr_str(p, attrs, "group") if "group" in attrs else None,
            replica_index=_attr_int(p, attrs, "replica_index") if "replica_index" in attrs else None,
        )

    def parse_pc(self, p: _LineParser) -> PcOp:
        operands = p.operand_list()
        attrs = p.attr_dict()
        _check_attrs(p, attrs, _PC_ATTRS, _PC_REQUIRED, "olympus.pc")
        p.expect(":")
        declared = p.type_list()
        p.expect("->")
        p.expect("(")
        p.expect(")")

        if len(operands) != 1:
            p.fail(f"olympus.pc takes exactly one operand, got {len(operands)}")
        ch = self.resolve(p, operands[0])
        if len(declared) != 1 or declared[0] != ch.element_width:
            p.fail(
                f"type mismatch: %{operands[0][0]} is "
                f"!olympus.channel<i{ch.element_width}> but signature declares "
                f"{'i' + str(declared[0]) if declared else 'nothing'}",
                operands[0][1],
            )
        direction_text = _attr_str(p, attrs, "direction")
        try:
            direction = Direction(direction_text)
        except ValueError:
            p.fail(f"direction must be read or write, got {direction_text!r}", attrs["direction"][1])
        return PcOp(
            channel=operands[0][0],
            id=_attr_int(p, attrs, "id"),
            direction=direction,
            memory=_attr_str(p, attrs, "memory") if "memory" in attrs else None,
        )


def parse_module(text: str) -> OlympusModule:
    """Parse IR text into a module.  Raises :class:`ParseError` with line/column."""
    return _ModuleParser().parse(text)


def parse_module_lines(text: str) -> tuple[OlympusModule, tuple[int, ...]]:
    """Like :func:`parse_module`, also returning each op's source line number."""
    parser = _ModuleParser()
    module = parser.parse(text)
    return module, tuple(parser.op_lines)


# --------------------------------------------------------------------------
# Printer


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _print_channel(op: ChannelOp) -> str:
    attrs = [
        f"name = {_quote(op.name)}",
        f"encapsulatedType = i{op.element_width}",
        f'paramType = "{op.param_type.value}"',
        f"depth = {op.depth} : i64",
    ]
    if op.layout is not None:
        attrs.append(f"layout = {_quote(print_layout(op.layout))}")
    if op.plm_instance is not None:
        attrs.append(f"plm_instance = {_quote(op.plm_instance)}")
    return (
        f'%{op.result} = "olympus.make_channel"() {{{", ".join(attrs)}}} '
        f": () -> !olympus.channel<i{op.element_width}>"
    )


def _print_kernel(op: KernelOp, module: OlympusModule) -> str:
    operands = ", ".join(f"%{v}" for v in op.operands)
    types = ", ".join(str(module.channel(v).type) for v in op.operands)
    attrs = [
        f"callee = {_quote(op.callee)}",
        f"latency = {op.latency} : i64",
        f"ii = {op.ii} : i64",
    ]
    attrs += [f"{name} = {count} : i64" for name, count in op.resources.as_dict().items()]
    attrs.append(f"operand_segment_sizes = array<i32: {op.segments[0]}, {op.segments[1]}>")
    if op.group is not None:
        attrs.append(f"group = {_quote(op.group)}")
    if op.replica_index is not None:
        attrs.append(f"replica_index = {op.replica_index} : i64")
    return f'"olympus.kernel"({operands}) {{{", ".join(attrs)}}} : ({types}) -> ()'


def _print_pc(op: PcOp, module: OlympusModule) -> str:
    attrs = [f"id = {op.id} : i64", f'direction = "{op.direction.value}"']
    if op.memory is not None:
        attrs.append(f"memory = {_quote(op.memory)}")
    ch_type = module.channel(op.channel).type
    return f'"olympus.pc"(%{op.channel}) {{{", ".join(attrs)}}} : ({ch_type}) -> ()'


def print_module(module: OlympusModule) -> str:
    """Canonical text: one op per line; empty module prints as the empty string."""
    lines = []
    for op in module.ops:
        if isinstance(op, ChannelOp):
            lines.append(_print_channel(op))
        elif isinstance(op, KernelOp):
            lines.append(_print_kernel(op, module))
        else:
            lines.append(_print_pc(op, module))
    return "\n".join(lines) + ("\n" if lines else "")


# --------------------------------------------------------------------------
# Verifier


@dataclass(frozen=True)
class Diagnostic:
    op_index: int
    op_label: str
    rule: str
    message: str

    def __str__(self) -> str:
        return f"op {self.op_index} ({self.op_label}): {self.message} [{self.rule}]"


def verify_module(module: OlympusModule) -> list[Diagnostic]:
    """Check all structural invariants; an empty list means the module is valid."""
    diags: list[Diagnostic] = []

    def bad(index: int, rule: str, message: str) -> None:
        diags.append(Diagnostic(index, module.ops[index].label(), rule, message))

    defined_at: dict[int, int] = {}
    for index, op in enumerate(module.ops):
        if isinstance(op, ChannelOp) and op.result not in defined_at:
            defined_at[op.result] = index

    def check_operand(index: int, value_id: int) -> bool:
        if value_id not in defined_at:
            bad(index, "ssa-def", f"operand %{value_id} is not defined by any channel")
            return False
        if defined_at[value_id] > index:
            bad(index, "ssa-order", f"operand %{value_id} is used before its definition")
            return False
        return True

    seen_results: set[int] = set()
    pc_seen: dict[int, int] = {}
    for index, op in enumerate(module.ops):
        if isinstance(op, ChannelOp):
            if op.result in seen_results:
                bad(index, "unique-def", f"value %{op.result} is defined more than once")
            seen_results.add(op.result)
            if op.element_width < 1:
                bad(index, "channel-width", f"element width must be positive, got {op.element_width}")
            if op.depth < 1:
                bad(index, "channel-depth", f"depth must be at least 1, got {op.depth}")
            if op.layout is not None:
                for problem in op.layout.validate():
                    bad(index, "layout-valid", problem)
                if op.layout.bus_width != op.element_width:
                    bad(
                        index,
                        "layout-width",
                        f"layout bus width {op.layout.bus_width} does not match "
                        f"element width {op.element_width}",
                    )
        elif isinstance(op, KernelOp):
            if not (op.latency >= op.ii >= 1):
                bad(index, "kernel-timing", f"need latency >= ii >= 1, got latency={op.latency}, ii={op.ii}")
            if any(count < 0 for count in op.resources.as_tuple()):
                bad(index, "kernel-resources", "resource counts must be non-negative")
            if set(op.inputs) & set(op.outputs):
                overlap = sorted(set(op.inputs) & set(op.outputs))
                bad(index, "kernel-io-disjoint", f"channels {overlap} appear as both input and output")
            if op.segments != (len(op.inputs), len(op.outputs)):
                bad(
                    index,
                    "kernel-segments",
                    f"operand_segment_sizes {list(op.segments)} do not match "
                    f"{len(op.inputs)} inputs and {len(op.outputs)} outputs",
                )
            for value_id in op.operands:
                check_operand(index, value_id)
            if op.replica_index is not None and op.replica_index < 0:
                bad(index, "kernel-replica", f"replica_index must be non-negative, got {op.replica_index}")
        else:
            if not check_operand(index, op.channel):
                continue
            if op.id < 0:
                bad(index, "pc-id", f"id must be non-negative, got {op.id}")
            if op.channel in pc_seen:
                bad(index, "pc-unique", f"channel %{op.channel} is attached to more than one pc")
            pc_seen[op.channel] = index
            consumers = module.consumers(op.channel)
            producers = module.producers(op.channel)
            if consumers and producers:
                bad(index, "pc-both-sides", f"channel %{op.channel} connects kernels on both sides")
            elif not consumers and not producers:
                bad(index, "pc-orphan", f"channel %{op.channel} is not connected to any kernel")
            elif op.direction is Direction.READ and not consumers:
                bad(index, "pc-direction", f"read pc on channel %{op.channel} which is not a kernel input")
            elif op.direction is Direction.WRITE and not producers:
                bad(index, "pc-direction", f"write pc on channel %{op.channel} which is not a kernel output")

    # Fan-out: a channel may feed several kernels only inside one super-node group.
    for index, op in enumerate(module.ops):
        if not isinstance(op, ChannelOp):
            continue
        consumers = module.consumers(op.result)
        if len(consumers) > 1:
            groups = {k.group for k in consumers}
            if None in groups or len(groups) > 1:
                bad(index, "channel-fanout", f"channel %{op.result} feeds {len(consumers)} kernel inputs")
        producers = module.producers(op.result)
        if len(producers) > 1:
            groups = {k.group for k in producers}
            if None in groups or len(groups) > 1:
                bad(
                    index,
                    "channel-fanin",
                    f"channel %{op.result} is produced by {len(producers)} kernel outputs",
                )
    return diags
