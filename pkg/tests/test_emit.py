import json

import pytest

from olympus import (
    EmitError,
    OlympusModule,
    apply_iris,
    emit_build_plan,
    emit_cfg,
    emit_dot,
    emit_host_api,
    emit_host_api_descriptor,
    load_lifetimes,
    pack_words,
    parse_module,
    replicate,
    replay_adapter,
    share_plm,
    AdapterSpec,
)

CFG_GOLDEN = """[connectivity]
sp=matmul_1.m_axi_a:HBM[0]
sp=matmul_1.m_axi_b:HBM[1]
sp=matmul_1.m_axi_c:HBM[2]
"""


# --------------------------------------------------------------------------
# Linker config


def test_cfg_golden(matmul_distinct, u280):
    assert emit_cfg(matmul_distinct, u280) == CFG_GOLDEN


def test_cfg_is_deterministic(matmul_distinct, u280):
    assert emit_cfg(matmul_distinct, u280) == emit_cfg(matmul_distinct, u280)


def test_cfg_empty_module(u280):
    assert emit_cfg(OlympusModule(), u280) == "[connectivity]\n"


def test_cfg_replicas_share_pc_ids(matmul_distinct, u280):
    out = replicate(matmul_distinct, u280, 2)
    cfg = emit_cfg(out, u280)
    lines = cfg.splitlines()
    assert lines[0] == "[connectivity]"
    assert lines[1:] == [
        "sp=matmul_1.m_axi_a:HBM[0]",
        "sp=matmul_1.m_axi_b:HBM[1]",
        "sp=matmul_1.m_axi_c:HBM[2]",
        "sp=matmul_r1_1.m_axi_a_r1:HBM[0]",
        "sp=matmul_r1_1.m_axi_b_r1:HBM[1]",
        "sp=matmul_r1_1.m_axi_c_r1:HBM[2]",
    ]


def test_cfg_rejects_out_of_range_pc(u280):
    text = """
%0 = "olympus.make_channel"() {name = "x", encapsulatedType = i32, paramType = "stream", depth = 8 : i64} : () -> !olympus.channel<i32>
"olympus.kernel"(%0) {callee = "k", latency = 1 : i64, ii = 1 : i64, ff = 0 : i64, lut = 0 : i64, bram = 0 : i64, uram = 0 : i64, dsp = 0 : i64, operand_segment_sizes = array<i32: 1, 0>} : (!olympus.channel<i32>) -> ()
"olympus.pc"(%0) {id = 40 : i64, direction = "read"} : (!olympus.channel<i32>) -> ()
"""
    module = parse_module(text)
    with pytest.raises(EmitError, match="out of range"):
        emit_cfg(module, u280)


# --------------------------------------------------------------------------
# Build plan


def test_plan_partitions_channels(pipeline4_text, pipeline4_lifetimes, u280):
    from olympus import sanitize

    module = sanitize(parse_module(pipeline4_text))
    module, sharing = share_plm(module, load_lifetimes(pipeline4_lifetimes))
    plan = json.loads(emit_build_plan(module, u280, sharing=sharing))

    assert plan["version"] == 1
    fifo_names = {f["name"] for f in plan["fifos"]}
    plm_members = {name for p in plan["plms"] for name in p["members"]}
    axi_names = {p["channel"] for p in plan["axi_ports"]}
    all_channels = {ch.name for ch in module.channels()}
    assert fifo_names | plm_members | axi_names == all_channels
    assert not fifo_names & plm_members
    assert not fifo_names & axi_names

    assert {p["instance"] for p in plan["plms"]} == {"plm0", "plm1", "plm2"}
    shared = next(p for p in plan["plms"] if p["instance"] == "plm2")
    assert shared["members"] == ["buf0", "buf2"]
    assert shared["ports"] == 1
    assert plan["bridge"]["fifos"] == [f["name"] for f in plan["fifos"]]


def test_plan_unshared_smalls_fall_back_to_own_instances(pipeline4_text, u280):
    module = parse_module(pipeline4_text)
    plan = json.loads(emit_build_plan(module, u280))
    assert {p["instance"] for p in plan["plms"]} == {"buf0", "buf1", "buf2", "buf3"}
    for p in plan["plms"]:
        assert p["ports"] == 1 and p["estimate"] is None


def test_plan_identity_layouts_need_no_adapter(matmul_sanitized, u280):
    plan = json.loads(emit_build_plan(matmul_sanitized, u280))
    assert plan["adapters"] == []


def test_plan_adapter_survives_json_round_trip(matmul_distinct, u280):
    import random

    merged = apply_iris(matmul_distinct, ["a", "b"], 128)
    plan = json.loads(emit_build_plan(merged, u280))
    (entry,) = plan["adapters"]
    assert entry["channel"] == "ab"

    spec = AdapterSpec(
        bus_width=entry["bus_width"],
        words_per_pattern=entry["words_per_pattern"],
        programs={
            array: tuple(tuple(tuple(read) for read in elem) for elem in elems)
            for array, elems in entry["programs"].items()
        },
    )
    layout = merged.channel_by_name("ab").layout
    rng = random.Random(9)
    data = {
        name: [rng.getrandbits(32) for _ in range(layout.repetitions * 2)]
        for name in ("a", "b")
    }
    words = pack_words(layout, data)
    assert replay_adapter(spec, words, layout.repetitions) == data


def test_plan_axi_ports(u280):
    text = """
%0 = "olympus.make_channel"() {name = "tbl", encapsulatedType = i32, paramType = "complex", depth = 65536 : i64} : () -> !olympus.channel<i32>
"olympus.kernel"(%0) {callee = "walker", latency = 5 : i64, ii = 1 : i64, ff = 10 : i64, lut = 10 : i64, bram = 0 : i64, uram = 0 : i64, dsp = 0 : i64, operand_segment_sizes = array<i32: 1, 0>} : (!olympus.channel<i32>) -> ()
"olympus.pc"(%0) {id = 7 : i64, direction = "read", memory = "DDR"} : (!olympus.channel<i32>) -> ()
"""
    # DDR has two ports; id 7 is out of range, so pin it to 1 first
    module = parse_module(text.replace("id = 7", "id = 1"))
    plan = json.loads(emit_build_plan(module, u280))
    assert plan["fifos"] == [] and plan["plms"] == []
    (port,) = plan["axi_ports"]
    assert port == {
        "kernel": "walker",
        "channel": "tbl",
        "memory": "DDR",
        "pc_id": 1,
        "size_bytes": 65536,  # complex depth counts bytes directly
    }


def test_plan_kernel_impls_sorted(matmul_sanitized, u280):
    plan = json.loads(
        emit_build_plan(
            matmul_sanitized, u280, kernel_impls={"z": "z.cpp", "a": "a.cpp"}
        )
    )
    assert list(plan["kernel_impls"]) == ["a", "z"]
    assert plan["kernel_impls"]["a"] == "a.cpp"


def test_plan_is_deterministic(matmul_distinct, u280):
    a = emit_build_plan(matmul_distinct, u280)
    b = emit_build_plan(matmul_distinct, u280)
    assert a == b


# --------------------------------------------------------------------------
# Host API


def test_host_api_header(matmul_distinct):
    header = emit_host_api(matmul_distinct)
    assert header.startswith("/* Host-side control interface.")
    assert "#ifndef OLYMPUS_HOST_API_H" in header
    assert "int init(void);" in header
    assert "int create_buffer_a(void);" in header
    assert "int write_a(const void *host_src, size_t bytes);" in header
    assert "int write_b(const void *host_src, size_t bytes);" in header
    assert "int read_c(void *host_dst, size_t bytes);" in header
    assert "int run_matmul(void);" in header
    assert header.endswith("#endif /* OLYMPUS_HOST_API_H */\n")


def test_host_api_replicated_run_takes_index(matmul_distinct, u280):
    out = replicate(matmul_distinct, u280, 3)
    header = emit_host_api(out)
    assert "int run_matmul(int replica);" in header
    assert "[0, 3)" in header
    assert "run_matmul_r1" not in header


def test_host_api_buffer_sizes(matmul_distinct):
    model = json.loads(emit_host_api_descriptor(matmul_distinct))
    sizes = {b["channel"]: b["size_bytes"] for b in model["buffers"]}
    assert sizes == {"a": 80, "b": 80, "c": 80}  # 32 bits x 20 deep
    assert model["kernels"] == [{"base": "matmul", "replicas": 1, "run": "run_matmul"}]


def test_host_api_groups_collapse_lanes(matmul_module, u280):
    from olympus import DEFAULT_PIPELINE, run_pipeline

    out, _ = run_pipeline(matmul_module, u280, DEFAULT_PIPELINE)
    model = json.loads(emit_host_api_descriptor(out))
    # 8 lanes x 3 replicas collapse into one entry
    assert model["kernels"] == [{"base": "matmul", "replicas": 3, "run": "run_matmul"}]


# --------------------------------------------------------------------------
# DOT


def test_dot_golden(matmul_distinct):
    assert emit_dot(matmul_distinct) == (
        "digraph olympus {\n"
        "  rankdir=LR;\n"
        '  pc1 [label="PC[0]", shape=hexagon];\n'
        '  pc3 [label="PC[1]", shape=hexagon];\n'
        '  pc5 [label="PC[2]", shape=hexagon];\n'
        '  k6 [label="matmul", shape=box];\n'
        '  pc1 -> k6 [label="a:32"];\n'
        '  pc3 -> k6 [label="b:32"];\n'
        '  k6 -> pc5 [label="c:32"];\n'
        "}\n"
    )


def test_dot_memory_label(u280):
    text = """
%0 = "olympus.make_channel"() {name = "x", encapsulatedType = i32, paramType = "stream", depth = 8 : i64} : () -> !olympus.channel<i32>
"olympus.kernel"(%0) {callee = "k", latency = 1 : i64, ii = 1 : i64, ff = 0 : i64, lut = 0 : i64, bram = 0 : i64, uram = 0 : i64, dsp = 0 : i64, operand_segment_sizes = array<i32: 1, 0>} : (!olympus.channel<i32>) -> ()
"olympus.pc"(%0) {id = 1 : i64, direction = "read", memory = "DDR"} : (!olympus.channel<i32>) -> ()
"""
    dot = emit_dot(parse_module(text))
    assert 'label="DDR[1]"' in dot


def test_dot_open_ends_become_points(matmul_module):
    dot = emit_dot(matmul_module)
    assert dot.count("[shape=point]") == 3
    assert "open0" in dot and "open2" in dot


def test_dot_groups_become_clusters(matmul_module, u280):
    from olympus import sanitize, widen_bus

    widened = widen_bus(sanitize(matmul_module), u280, 256)
    dot = emit_dot(widened)
    assert "subgraph cluster_0 {" in dot
    assert 'label="matmul";' in dot
    assert dot.count("shape=box") == 8
