"""Error types shared across the tool.

User errors (bad circuit, spec, config or manifest files) derive from
ToolError and carry a hint. The CLI maps them to exit code 2.
"""


class ToolError(Exception):
    """User-facing error with a helpful hint."""

    default_hint = "Check the input files"

    def __init__(self, message: str, hint: str | None = None):
        super().__init__(message)
        self.message = message
        self.hint = hint or self.default_hint

    def __str__(self) -> str:
        return f"{self.message}. Hint: {self.hint}"


class CircuitError(ToolError):
    """Error parsing or validating a circuit, with source position if known."""

    default_hint = "Only the OpenQASM 2.0 subset with terminal measurement is supported"

    def __init__(
        self,
        message: str,
        line: int | None = None,
        column: int | None = None,
        hint: str | None = None,
    ):
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message, hint)
        self.line = line
        self.column = column


class SpecError(ToolError):
    """Malformed or inconsistent program specification."""

    default_hint = "A spec maps input bitstrings to {output bitstring: probability} objects"


class ConfigError(ToolError):
    """Invalid run configuration."""

    default_hint = "Run 'python -m src.cli init' to see the documented keys"

    def __init__(self, message: str, key: str | None = None, hint: str | None = None):
        super().__init__(message, hint)
        self.key = key


class ManifestError(ToolError):
    """Suite manifest cannot be read or does not match the given files."""

    default_hint = "Replay needs the manifest together with the exact circuit and spec it was generated from"


class SimulationError(ToolError):
    """Internal numeric fault or resource limit hit during simulation."""

    default_hint = "Reduce the number of qubits or raise max_qubits"
