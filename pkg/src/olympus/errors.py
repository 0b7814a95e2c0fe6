"""Exception hierarchy shared by all olympus modules."""

from __future__ import annotations


class OlympusError(Exception):
    """Base class for every error raised by this package."""


class ParseError(OlympusError):
    """Malformed textual input (IR, layout DSL, lifetime sidecar)."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.message = message
        self.line = line
        self.col = col
        super().__init__(str(self))

    def __str__(self) -> str:
        if self.line is None:
            return self.message
        if self.col is None:
            return f"line {self.line}: {self.message}"
        return f"line {self.line}, col {self.col}: {self.message}"


class LayoutError(OlympusError):
    """Structurally invalid bus-word layout."""


class PlatformError(OlympusError):
    """Bad platform description file or unknown memory class."""


class VerificationError(OlympusError):
    """A module failed verification where a clean module was required."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        lines = "; ".join(str(d) for d in self.diagnostics)
        super().__init__(f"module does not verify: {lines}")


class AnalysisError(OlympusError):
    """Analysis preconditions violated (unsanitized module, bad PC id)."""


class TransformError(OlympusError):
    """A transformation cannot be applied to the given module."""


class PipelineError(OlympusError):
    """Malformed pass pipeline string."""


class PassError(OlympusError):
    """A pass failed while running a pipeline."""

    def __init__(self, index: int, name: str, cause: Exception):
        self.index = index
        self.pass_name = name
        self.cause = cause
        super().__init__(f"pass {index} ({name}): {cause}")


class EmitError(OlympusError):
    """An emitter cannot produce output for the given module."""
