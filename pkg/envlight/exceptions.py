"""
Error hierarchy for the envlight toolkit.

Every error carries a machine-readable ``kind`` and the process exit code the
command-line surface uses for it.
"""
import json

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_USAGE = 2

EXIT_CODES_HELP = (
    "exit codes: 0 ok, 1 unexpected error, 2 usage error, "
    "3 contract/invariant violation, 4 missing or unreadable input, "
    "5 malformed file, 6 resolution mismatch, 7 degenerate linear system"
)


class EnvlightError(Exception):
    kind = "envlight_error"
    exit_code = EXIT_UNEXPECTED

    def record(self) -> str:
        """
        Format the error as a single key=value line.

        Returns:
            str: ``error=<kind> exit=<code> message="..."``
        """
        return f"error={self.kind} exit={self.exit_code} message={json.dumps(str(self))}"


class ContractViolation(EnvlightError, ValueError):
    kind = "contract_violation"
    exit_code = 3


class BackFacingError(ContractViolation):
    kind = "back_facing"


class InputFileError(EnvlightError, OSError):
    kind = "input_file"
    exit_code = 4


class FormatError(EnvlightError, ValueError):
    """Malformed file content. ``offset`` is the byte offset of the problem, when known."""
    kind = "format"
    exit_code = 5

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ResolutionMismatch(EnvlightError, ValueError):
    kind = "resolution_mismatch"
    exit_code = 6

    def __init__(self, what, first, second):
        super().__init__(f"{what}: {_fmt(first)} vs {_fmt(second)}")
        self.first = first
        self.second = second


class DegenerateSystemError(EnvlightError, ValueError):
    kind = "degenerate_system"
    exit_code = 7


def _fmt(shape):
    if isinstance(shape, tuple) and len(shape) >= 2:
        return f"{shape[1]}x{shape[0]}"
    return str(shape)
