"""Bus-word layouts: the repeating pattern of array-element bit segments on a channel.

A layout describes how array elements are arranged in the stream of bus words
flowing through a data channel.  The pattern spans ``k`` iterations worth of
elements sliced into words of ``bus_width`` bits and repeats ``repetitions``
times to cover the whole transfer.  Bits not covered by any placement are
padding ("holes"), so bandwidth efficiency is computable from the layout alone.

Serialized form (stored in the channel's ``layout`` string attribute):

    W=<bits>;k=<n>;rep=<n>;<name>:<elem>:<lo>-<hi>@<word>:<off>,...

e.g. ``W=128;k=1;rep=20;a:0:0-31@0:0,b:0:0-31@0:32,b:1:0-31@0:64,b:2:0-31@0:96``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import LayoutError, ParseError

_PLACEMENT_RE = re.compile(
    r"^(?P<array>[A-Za-z_][A-Za-z0-9_#.]*):(?P<elem>\d+):(?P<lo>\d+)-(?P<hi>\d+)"
    r"@(?P<word>\d+):(?P<off>\d+)$"
)


@dataclass(frozen=True)
class Placement:
    """One bit segment of one array element at a fixed word/offset position."""

    array: str
    elem_index: int
    bit_lo: int  # inclusive, within the element
    bit_hi: int  # inclusive, within the element
    word: int  # pattern word index
    offset: int  # bit offset within the word

    @property
    def length(self) -> int:
        return self.bit_hi - self.bit_lo + 1


@dataclass(frozen=True)
class Layout:
    bus_width: int
    k: int  # iterations folded into one pattern
    repetitions: int  # pattern repeats to cover the channel depth
    placements: tuple[Placement, ...]

    @property
    def word_count(self) -> int:
        """Words per pattern."""
        if not self.placements:
            return 0
        return max(p.word for p in self.placements) + 1

    @property
    def useful_bits(self) -> int:
        """Payload bits per pattern (padding excluded)."""
        return sum(p.length for p in self.placements)

    def arrays(self) -> tuple[str, ...]:
        """Array names in order of first appearance."""
        seen: dict[str, None] = {}
        for p in self.placements:
            seen.setdefault(p.array, None)
        return tuple(seen)

    def array_placements(self, array: str) -> tuple[Placement, ...]:
        """Placements of one array, in (elem_index, bit_lo) order."""
        ps = [p for p in self.placements if p.array == array]
        ps.sort(key=lambda p: (p.elem_index, p.bit_lo))
        return tuple(ps)

    def element_width(self, array: str) -> int:
        """Bit width of the array's elements (sum of element-0 segments)."""
        return sum(p.length for p in self.array_placements(array) if p.elem_index == 0)

    def elements_per_pattern(self, array: str) -> int:
        ps = self.array_placements(array)
        if not ps:
            return 0
        return max(p.elem_index for p in ps) + 1

    def efficiency(self) -> float:
        """Fraction of transferred bits carrying payload, in [0, 1]."""
        total = self.word_count * self.bus_width
        if total == 0:
            return 0.0
        return self.useful_bits / total

    def validate(self) -> list[str]:
        """Return structural problems; empty list means the layout is valid."""
        problems: list[str] = []
        if self.bus_width < 1:
            problems.append(f"bus width must be positive, got {self.bus_width}")
        if self.k < 1:
            problems.append(f"k must be positive, got {self.k}")
        if self.repetitions < 1:
            problems.append(f"repetitions must be positive, got {self.repetitions}")

        # Segments must sit inside their word and not collide.
        by_word: dict[int, list[Placement]] = {}
        for p in self.placements:
            if p.bit_lo < 0 or p.bit_hi < p.bit_lo:
                problems.append(f"bad bit range {p.bit_lo}-{p.bit_hi} for {p.array}[{p.elem_index}]")
                continue
            if p.offset < 0 or p.offset + p.length > self.bus_width:
                problems.append(
                    f"segment of {p.array}[{p.elem_index}] exceeds word: "
                    f"offset {p.offset} + {p.length} bits > {self.bus_width}"
                )
            by_word.setdefault(p.word, []).append(p)
        for word, ps in sorted(by_word.items()):
            ps = sorted(ps, key=lambda p: p.offset)
            for a, b in zip(ps, ps[1:]):
                if a.offset + a.length > b.offset:
                    problems.append(
                        f"overlap in word {word}: {a.array}[{a.elem_index}] and {b.array}[{b.elem_index}]"
                    )

        for array in self.arrays():
            ps = self.array_placements(array)
            width = self.element_width(array)
            # Every element must be tiled exactly by its segments.
            by_elem: dict[int, list[Placement]] = {}
            for p in ps:
                by_elem.setdefault(p.elem_index, []).append(p)
            for elem in sorted(by_elem):
                segs = sorted(by_elem[elem], key=lambda p: p.bit_lo)
                cursor = 0
                for s in segs:
                    if s.bit_lo != cursor:
                        problems.append(
                            f"{array}[{elem}] segments do not tile [0, {width}): gap/overlap at bit {cursor}"
                        )
                        break
                    cursor = s.bit_hi + 1
                else:
                    if cursor != width:
                        problems.append(
                            f"{array}[{elem}] covers {cursor} bits but element 0 covers {width}"
                        )
            # Stream order: (elem, bit) order must map to non-decreasing stream positions.
            positions = [p.word * self.bus_width + p.offset for p in ps]
            if any(b < a for a, b in zip(positions, positions[1:])):
                problems.append(f"{array} placements are not in stream order")
        return problems


def parse_layout(text: str) -> Layout:
    """Parse the layout DSL.  ``rep=`` may be omitted and defaults to 1."""
    fields = [f for f in text.strip().split(";") if f != ""]
    header: dict[str, int] = {}
    idx = 0
    while idx < len(fields) and _looks_like_header(fields[idx]):
        key, _, value = fields[idx].partition("=")
        if key in header:
            raise ParseError(f"duplicate layout header field {key!r}")
        header[key] = int(value)
        idx += 1
    if "W" not in header or "k" not in header:
        raise ParseError(f"layout header must define W and k: {text!r}")
    if len(fields) - idx > 1:
        raise ParseError(f"layout has more than one placement list: {text!r}")

    placements: list[Placement] = []
    if idx < len(fields):
        for part in fields[idx].split(","):
            m = _PLACEMENT_RE.match(part.strip())
            if m is None:
                raise ParseError(f"bad layout placement {part!r}")
            placements.append(
                Placement(
                    array=m.group("array"),
                    elem_index=int(m.group("elem")),
                    bit_lo=int(m.group("lo")),
                    bit_hi=int(m.group("hi")),
                    word=int(m.group("word")),
                    offset=int(m.group("off")),
                )
            )
    layout = Layout(
        bus_width=header["W"],
        k=header["k"],
        repetitions=header.get("rep", 1),
        placements=tuple(placements),
    )
    problems = layout.validate()
    if problems:
        raise LayoutError(f"invalid layout: {problems[0]}")
    return layout


def _looks_like_header(field: str) -> bool:
    return re.match(r"^(W|k|rep)=\d+$", field) is not None


def print_layout(layout: Layout) -> str:
    """Canonical DSL text; always includes ``rep=``."""
    head = f"W={layout.bus_width};k={layout.k};rep={layout.repetitions}"
    if not layout.placements:
        return head
    body = ",".join(
        f"{p.array}:{p.elem_index}:{p.bit_lo}-{p.bit_hi}@{p.word}:{p.offset}"
        for p in layout.placements
    )
    return f"{head};{body}"


def single_element_layout(array: str, element_width: int, repetitions: int) -> Layout:
    """Width-one layout: one whole element per bus word, as created by sanitize."""
    return Layout(
        bus_width=element_width,
        k=1,
        repetitions=repetitions,
        placements=(Placement(array, 0, 0, element_width - 1, 0, 0),),
    )
