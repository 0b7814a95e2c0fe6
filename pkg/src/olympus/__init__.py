"""Olympus: a dataflow-graph compiler for memory-bandwidth-aware FPGA systems.

The package models an accelerator system as kernels joined by typed data
channels, analyzes the bandwidth each channel demands from off-chip memory
pseudo-channels, transforms the graph to spread and compact that demand, and
emits the artifacts a hardware build needs: linker connectivity config, build
plan, host API stubs, and a graph rendering.
"""

from .analysis import (
    BandwidthReport,
    PcUsage,
    ResourceReport,
    bandwidth_analysis,
    channel_demand,
    fifo_estimate,
    plm_estimate,
    resource_analysis,
)
from .emit import emit_build_plan, emit_cfg, emit_dot, emit_host_api, emit_host_api_descriptor
from .errors import (
    AnalysisError,
    EmitError,
    LayoutError,
    OlympusError,
    ParseError,
    PassError,
    PipelineError,
    PlatformError,
    TransformError,
    VerificationError,
)
from .ir import (
    ChannelOp,
    ChannelType,
    Diagnostic,
    Direction,
    KernelOp,
    OlympusModule,
    ParamType,
    PcOp,
    ResourceVector,
    parse_module,
    parse_module_lines,
    print_module,
    verify_module,
)
from .iris import (
    AdapterSpec,
    ArraySpec,
    adapter_spec,
    apply_iris,
    layout_efficiency,
    naive_layout,
    pack,
    pack_words,
    replay_adapter,
)
from .layout import Layout, Placement, parse_layout, print_layout, single_element_layout
from .pipeline import (
    DEFAULT_PIPELINE,
    PASS_NAMES,
    PassEntry,
    PassInvocation,
    PipelineReport,
    parse_pipeline,
    run_pipeline,
    sanitize,
)
from .platform import MemoryChannelClass, Platform, dump_platform, load_platform, loads_platform
from .plm import (
    Lifetime,
    PlmInstance,
    SharingPlan,
    build_conflict_graph,
    load_lifetimes,
    loads_lifetimes,
    share_plm,
)
from .transforms import (
    ReassignmentPlan,
    max_replication_factor,
    plan_reassignment,
    reassign_channels,
    replicate,
    widen_bus,
)

__version__ = "0.1.0"
