from dataclasses import replace as dc_replace

import pytest

from olympus import (
    ChannelType,
    Direction,
    OlympusModule,
    ParamType,
    ParseError,
    ResourceVector,
    parse_module,
    parse_module_lines,
    print_module,
    verify_module,
)

CHANNEL = (
    '%0 = "olympus.make_channel"() {name = "a", encapsulatedType = i32, '
    'paramType = "stream", depth = 20 : i64} : () -> !olympus.channel<i32>'
)
KERNEL = (
    '"olympus.kernel"(%0, %1, %2) {callee = "matmul", latency = 795 : i64, '
    "ii = 268 : i64, ff = 3106 : i64, lut = 6174 : i64, bram = 61 : i64, "
    "uram = 0 : i64, dsp = 48 : i64, operand_segment_sizes = array<i32: 2, 1>} "
    ": (!olympus.channel<i32>, !olympus.channel<i32>, !olympus.channel<i32>) -> ()"
)


def three_channels(extra=""):
    lines = []
    for i, name in enumerate("abc"):
        lines.append(CHANNEL.replace('%0', f'%{i}').replace('"a"', f'"{name}"'))
    return "\n".join(lines) + "\n" + KERNEL + "\n" + extra


def test_channel_attributes():
    m = parse_module(CHANNEL)
    ch = next(m.channels())
    assert ch.result == 0
    assert ch.name == "a"
    assert ch.element_width == 32
    assert ch.param_type is ParamType.STREAM
    assert ch.depth == 20
    assert ch.layout is None
    assert ch.type == ChannelType(32)


def test_kernel_attributes():
    m = parse_module(three_channels())
    k = next(m.kernels())
    assert k.callee == "matmul"
    assert k.latency == 795
    assert k.ii == 268
    assert k.resources == ResourceVector(ff=3106, lut=6174, bram=61, uram=0, dsp=48)
    assert k.inputs == (0, 1)
    assert k.outputs == (2,)
    assert k.segments == (2, 1)


def test_pc_attributes():
    text = three_channels('"olympus.pc"(%2) {id = 5 : i64, direction = "write", memory = "DDR"} : (!olympus.channel<i32>) -> ()')
    m = parse_module(text)
    pc = next(m.pcs())
    assert pc.channel == 2
    assert pc.id == 5
    assert pc.direction is Direction.WRITE
    assert pc.memory == "DDR"


def test_print_is_reparsable_fixpoint():
    text = three_channels('"olympus.pc"(%0) {id = 0 : i64, direction = "read"} : (!olympus.channel<i32>) -> ()')
    m = parse_module(text)
    once = print_module(m)
    again = print_module(parse_module(once))
    assert once == again
    assert parse_module(once) == m


def test_comments_and_blank_lines_ignored():
    text = "// header\n\n" + CHANNEL + "  // trailing\n"
    m = parse_module(text)
    assert len(m.ops) == 1


def test_result_id_optional():
    text = '"olympus.make_channel"() {encapsulatedType = i16, paramType = "small", depth = 8 : i64} : () -> !olympus.channel<i16>'
    m = parse_module(text + "\n" + text)
    ids = [ch.result for ch in m.channels()]
    names = [ch.name for ch in m.channels()]
    assert ids == [0, 1]
    assert names == ["ch0", "ch1"]


def test_depth_suffix_optional():
    bare = CHANNEL.replace("depth = 20 : i64", "depth = 20")
    assert parse_module(bare) == parse_module(CHANNEL)


def test_string_escapes_round_trip():
    text = CHANNEL.replace('"a"', '"we\\"ird\\\\name"')
    m = parse_module(text)
    ch = next(m.channels())
    assert ch.name == 'we"ird\\name'
    assert parse_module(print_module(m)) == m


def test_parse_module_lines_tracks_source():
    text = "// comment\n" + CHANNEL + "\n\n" + CHANNEL.replace("%0", "%1").replace('"a"', '"b"')
    module, lines = parse_module_lines(text)
    assert lines == (2, 4)


@pytest.mark.parametrize(
    "text,fragment",
    [
        ('%0 = "olympus.make_channel"() {name = "a"} : () -> !olympus.channel<i32>', "missing attribute"),
        ('"olympus.bogus"() {} : () -> ()', "unknown operation"),
        (CHANNEL.replace("i32>", "i64>"), "type mismatch"),
        (CHANNEL + "\n" + CHANNEL, "duplicate value id"),
        ('"olympus.pc"(%9) {id = 0 : i64, direction = "read"} : (!olympus.channel<i32>) -> ()', "undefined value"),
        (CHANNEL.replace('paramType = "stream"', 'paramType = "huge"'), "paramType"),
        (CHANNEL.replace("name =", "nombre ="), "unknown attribute"),
        (CHANNEL + " extra", "expected"),
        ('%0 = "olympus.make_channel"() {name = "a", name = "b", encapsulatedType = i32, paramType = "stream", depth = 1} : () -> !olympus.channel<i32>', "duplicate attribute"),
    ],
)
def test_parse_errors(text, fragment):
    with pytest.raises(ParseError) as err:
        parse_module(text)
    assert fragment in str(err.value)


def test_parse_error_carries_position():
    with pytest.raises(ParseError) as err:
        parse_module("\n\n  %0 = !bad\n")
    assert err.value.line == 3
    assert err.value.col is not None


def test_verify_clean_module(matmul_sanitized):
    assert verify_module(matmul_sanitized) == []


def test_verify_fanout_rejected():
    text = three_channels(
        KERNEL.replace('"matmul"', '"other"')
    )
    m = parse_module(text)
    rules = {d.rule for d in verify_module(m)}
    assert "channel-fanout" in rules
    assert "channel-fanin" in rules


def test_verify_fanout_allowed_within_group():
    lane = KERNEL.replace(
        "operand_segment_sizes = array<i32: 2, 1>",
        'operand_segment_sizes = array<i32: 2, 1>, group = "g"',
    )
    lanes = lane + "\n" + lane.replace('"matmul"', '"matmul_l1"')
    m = parse_module(three_channels()[: -len(KERNEL) - 1] + lanes)
    assert verify_module(m) == []


def test_segment_sizes_must_cover_operands():
    text = three_channels().replace("array<i32: 2, 1>", "array<i32: 1, 1>")
    with pytest.raises(ParseError) as err:
        parse_module(text)
    assert "operand_segment_sizes" in str(err.value)


def test_verify_segments_field():
    m = parse_module(three_channels())
    k = next(m.kernels())
    bad = dc_replace(k, segments=(1, 2))
    m2 = OlympusModule(ops=tuple(bad if op is k else op for op in m.ops))
    assert "kernel-segments" in {d.rule for d in verify_module(m2)}


def test_verify_pc_on_both_sided_channel():
    producer = KERNEL.replace("array<i32: 2, 1>", "array<i32: 2, 1>")
    consumer = (
        '"olympus.kernel"(%2) {callee = "sink", latency = 1 : i64, ii = 1 : i64, '
        "ff = 0 : i64, lut = 0 : i64, bram = 0 : i64, uram = 0 : i64, dsp = 0 : i64, "
        "operand_segment_sizes = array<i32: 1, 0>} : (!olympus.channel<i32>) -> ()"
    )
    pc = '"olympus.pc"(%2) {id = 0 : i64, direction = "write"} : (!olympus.channel<i32>) -> ()'
    m = parse_module(three_channels(consumer + "\n" + pc))
    rules = {d.rule for d in verify_module(m)}
    assert "pc-both-sides" in rules


def test_verify_pc_direction_mismatch():
    pc = '"olympus.pc"(%0) {id = 0 : i64, direction = "write"} : (!olympus.channel<i32>) -> ()'
    m = parse_module(three_channels(pc))
    rules = {d.rule for d in verify_module(m)}
    assert "pc-direction" in rules


def test_verify_duplicate_pc():
    pc = '"olympus.pc"(%0) {id = 0 : i64, direction = "read"} : (!olympus.channel<i32>) -> ()'
    m = parse_module(three_channels(pc + "\n" + pc))
    rules = {d.rule for d in verify_module(m)}
    assert "pc-unique" in rules


def test_verify_kernel_timing():
    text = three_channels().replace("latency = 795", "latency = 100").replace("ii = 268", "ii = 500")
    m = parse_module(text)
    rules = {d.rule for d in verify_module(m)}
    assert "kernel-timing" in rules


def test_verify_layout_width_mismatch():
    text = CHANNEL.replace(
        'depth = 20 : i64', 'depth = 20 : i64, layout = "W=64;k=1;rep=20;a:0:0-63@0:0"'
    )
    m = parse_module(text)
    rules = {d.rule for d in verify_module(m)}
    assert "layout-width" in rules


def test_resource_vector_arithmetic():
    a = ResourceVector(ff=1, lut=2, bram=3, uram=4, dsp=5)
    b = ResourceVector(ff=10, lut=20, bram=30, uram=40, dsp=50)
    assert (a + b).as_tuple() == (11, 22, 33, 44, 55)
    assert (b - a).as_tuple() == (9, 18, 27, 36, 45)
    assert (a * 3).as_tuple() == (3, 6, 9, 12, 15)
    assert a.fits_within(b)
    assert not b.fits_within(a)
    assert a.max_with(b) == b
