"""Exception types surfaced by the library and mapped to CLI exit codes."""


class SpecError(ValueError):
    """Invalid test specification or experiment configuration (exit code 2)."""


class ResourceRefusal(RuntimeError):
    """Requested work exceeds the configured scan budget (exit code 3)."""


class InsufficientSamples(SpecError):
    """Fewer sample blocks were supplied than repetitions requested."""
