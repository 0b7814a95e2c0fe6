import pytest

from olympus import (
    OlympusModule,
    ResourceVector,
    bandwidth_analysis,
    channel_demand,
    fifo_estimate,
    parse_module,
    plm_estimate,
    reassign_channels,
    resource_analysis,
    sanitize,
)


def test_fifo_estimate_values():
    assert fifo_estimate(32, 20) == ResourceVector(ff=50, lut=50, bram=1)
    assert fifo_estimate(36, 1024).bram == 1
    assert fifo_estimate(256, 4096).bram == 32


def test_plm_estimate_is_bram_only():
    est = plm_estimate(32, 1024)
    assert est == ResourceVector(bram=1)
    assert plm_estimate(72, 2048) == ResourceVector(bram=4)


def test_single_pc_demand(matmul_sanitized, u280):
    # all three channels default to HBM pc 0; each drains 32 bits per ii
    report = bandwidth_analysis(matmul_sanitized, u280)
    usage = report.per_pc[("HBM", 0)]
    assert usage.demand_bits_per_cycle == pytest.approx(3 * 32 / 268, rel=1e-12)
    assert usage.capacity_bits_per_cycle == 256
    assert usage.utilization == pytest.approx(3 * 32 / 268 / 256, rel=1e-12)
    assert not usage.oversubscribed
    assert usage.assigned_channels == ("a", "b", "c")


def test_demand_split_after_reassignment(matmul_sanitized, u280):
    before = bandwidth_analysis(matmul_sanitized, u280)
    after = bandwidth_analysis(reassign_channels(matmul_sanitized, u280), u280)
    assert len(after.per_pc) == 3
    for usage in after.per_pc.values():
        assert usage.demand_bits_per_cycle == pytest.approx(32 / 268, rel=1e-12)
    # total demand is conserved, max per-PC load drops by 3x
    assert after.total_demand_bits_per_cycle == pytest.approx(
        before.total_demand_bits_per_cycle, rel=1e-12
    )
    assert after.max_pc_utilization == pytest.approx(before.max_pc_utilization / 3, rel=1e-12)


def test_empty_module():
    report = bandwidth_analysis(OlympusModule(), _mini_platform())
    assert report.per_pc == {}
    assert report.aggregate_utilization == 0.0
    res = resource_analysis(OlympusModule(), _mini_platform())
    assert res.totals == ResourceVector()
    assert all(v == 0.0 for v in res.per_resource_utilization.values())
    assert res.headroom_factor is None


def _mini_platform():
    from olympus import loads_platform

    return loads_platform(
        """
name = "mini"
[resources]
ff = 10000
lut = 10000
bram = 100
uram = 10
dsp = 100
[[memory]]
name = "HBM"
count = 2
width_bits = 64
clock_mhz = 100
"""
    )


def test_complex_channel_contributes_no_demand(u280):
    text = """
%0 = "olympus.make_channel"() {name = "blob", encapsulatedType = i32, paramType = "complex", depth = 4096 : i64} : () -> !olympus.channel<i32>
"olympus.kernel"(%0) {callee = "walker", latency = 10 : i64, ii = 1 : i64, ff = 1 : i64, lut = 1 : i64, bram = 0 : i64, uram = 0 : i64, dsp = 0 : i64, operand_segment_sizes = array<i32: 1, 0>} : (!olympus.channel<i32>) -> ()
"olympus.pc"(%0) {id = 3 : i64, direction = "read"} : (!olympus.channel<i32>) -> ()
"""
    m = parse_module(text)
    assert channel_demand(m, m.channel_by_name("blob")) == 0.0
    report = bandwidth_analysis(m, u280)
    usage = report.per_pc[("HBM", 3)]
    assert usage.demand_bits_per_cycle == 0.0
    assert usage.assigned_channels == ("blob",)  # occupies the PC regardless


def test_kernel_totals_double_with_two_kernels(matmul_text, u280):
    single = resource_analysis(parse_module(matmul_text), u280)
    two_text = matmul_text + matmul_text.replace("%0", "%3").replace("%1", "%4").replace(
        "%2", "%5"
    ).replace('"a"', '"a2"').replace('"b"', '"b2"').replace('"c"', '"c2"').replace(
        '"matmul"', '"matmul2"'
    )
    double = resource_analysis(parse_module(two_text), u280)
    assert double.totals == single.totals * 2
    # kernel contribution alone: ff 6212, lut 12348, dsp 96
    assert double.totals.ff - 6 * 50 == 6212
    assert double.totals.lut - 6 * 50 == 12348
    assert double.totals.dsp == 96


def test_matmul_bottleneck_is_bram(matmul_sanitized, u280):
    report = resource_analysis(matmul_sanitized, u280)
    assert report.totals == ResourceVector(ff=3256, lut=6324, bram=64, uram=0, dsp=48)
    assert report.bottleneck == "bram"
    assert report.per_resource_utilization["bram"] == pytest.approx(64 / 2016)
    assert report.headroom_factor == 25


def test_totals_are_linear_in_module_union(matmul_sanitized, u280):
    doubled = OlympusModule(ops=matmul_sanitized.ops + _renumbered(matmul_sanitized).ops)
    assert (
        resource_analysis(doubled, u280).totals
        == resource_analysis(matmul_sanitized, u280).totals * 2
    )


def _renumbered(module):
    from dataclasses import replace

    from olympus import ChannelOp, KernelOp, PcOp

    shift = module.next_value_id()
    ops = []
    for op in module.ops:
        if isinstance(op, ChannelOp):
            ops.append(replace(op, result=op.result + shift, name=op.name + "x"))
        elif isinstance(op, KernelOp):
            ops.append(
                replace(
                    op,
                    callee=op.callee + "x",
                    inputs=tuple(v + shift for v in op.inputs),
                    outputs=tuple(v + shift for v in op.outputs),
                )
            )
        else:
            ops.append(replace(op, channel=op.channel + shift))
    return OlympusModule(ops=tuple(ops))


def test_shared_plm_instances_counted_once(u280):
    text = """
%0 = "olympus.make_channel"() {name = "p", encapsulatedType = i32, paramType = "small", depth = 1024 : i64, plm_instance = "plm0"} : () -> !olympus.channel<i32>
%1 = "olympus.make_channel"() {name = "q", encapsulatedType = i32, paramType = "small", depth = 2048 : i64, plm_instance = "plm0"} : () -> !olympus.channel<i32>
%2 = "olympus.make_channel"() {name = "r", encapsulatedType = i32, paramType = "small", depth = 1024 : i64} : () -> !olympus.channel<i32>
"""
    m = parse_module(text)
    totals = resource_analysis(m, u280).totals
    # shared pair costs max(1, 2) = 2 blocks, the lone buffer 1 more
    assert totals == ResourceVector(bram=3)


def test_aggregate_utilization_over_used_pcs(matmul_distinct, u280):
    report = bandwidth_analysis(matmul_distinct, u280)
    assert report.aggregate_utilization == pytest.approx(3 * (32 / 268) / (3 * 256), rel=1e-12)


def test_sanitize_preserves_demand(matmul_module, u280):
    # layout-free channels behave like their width-one sanitized form
    k = next(iter(matmul_module.kernels()))
    for ch in matmul_module.channels():
        assert channel_demand(matmul_module, ch) == pytest.approx(ch.element_width / k.ii)
    san = sanitize(matmul_module)
    for ch in san.channels():
        assert channel_demand(san, ch) == pytest.approx(ch.element_width / k.ii)
