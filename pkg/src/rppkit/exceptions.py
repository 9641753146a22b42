"""Exception hierarchy.

Contract and configuration problems derive from ``ValueError`` so callers can
catch them generically; environment problems (missing tools, failed
subprocesses) derive from ``RuntimeError`` or ``OSError``.
"""


class ContractViolation(ValueError):
    """An operation was called with inputs outside its declared domain."""


class ConfigError(ValueError):
    """Invalid configuration value, range or template."""


class UnsupportedFormatError(ValueError):
    """The file is valid but uses a feature this package does not handle."""


class Y4MParseError(ValueError):
    """Malformed YUV4MPEG2 stream."""


class CurveDataError(ValueError):
    """RD curve is not usable (too few points, non-monotone, missing metric)."""


class OverlapError(ValueError):
    """Two RD curves share no quality interval."""


class StageUnavailableError(RuntimeError):
    """A degradation stage needs an external tool that is not configured."""


class EncoderError(RuntimeError):
    """External encoder or decoder failed."""

    def __init__(self, message, returncode=None, stderr=""):
        super().__init__(message)
        self.returncode = returncode
        self.stderr = stderr


class ExecutableNotFoundError(EncoderError, FileNotFoundError):
    """An external executable could not be resolved."""


class IntegrityError(RuntimeError):
    """Decoded output does not match the source (frame count, size, rate)."""
