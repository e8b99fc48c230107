"""Exception hierarchy shared by all pipeline stages."""


class HRVAuthError(Exception):
    """Base class; ``stage`` names the pipeline stage that raised."""

    stage = "hrvauth"


class IngestError(HRVAuthError):
    stage = "ingest"


class EmptyInputError(IngestError):
    pass


class ParseError(IngestError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(IngestError):
    pass


class UnknownDeviceError(IngestError):
    pass


class InsufficientDataError(HRVAuthError):
    stage = "preprocess"


class ConfigError(HRVAuthError):
    stage = "config"


class ModelFormatError(HRVAuthError):
    stage = "model"


class ModelVersionError(ModelFormatError):
    def __init__(self, found, expected):
        self.found = found
        self.expected = expected
        super().__init__(
            f"model container version {found!r} is not supported "
            f"(this build reads version {expected!r})"
        )


class InvariantViolation(HRVAuthError):
    stage = "evaluate"


class StreamError(HRVAuthError):
    """Out-of-order or invalid beat pushed into an authentication session."""

    stage = "authd"


class ShortSeriesWarning(UserWarning):
    """Series too short for the requested operation; a degenerate result was returned."""
