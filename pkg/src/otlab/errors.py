"""Exception types raised by otlab."""


class OtlabError(Exception):
    """Base class for all otlab errors."""


class InvalidParameterError(OtlabError, ValueError):
    """A parameter lies outside the domain an operation accepts."""


class NoRootError(OtlabError, ArithmeticError):
    """A root finder could not bracket a sign change."""


class ParameterRangeError(OtlabError, OverflowError):
    """A computation left the representable or supported range."""


class ConfigError(OtlabError, ValueError):
    """A campaign or bounds configuration is malformed.

    ``field`` names the offending key path, e.g. ``scenarios[0].alpha``.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
