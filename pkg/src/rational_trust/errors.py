"""Exception types shared across the package."""


class ParameterError(ValueError):
    """Raised when a parameter set violates its documented ranges."""


class ConfigError(ValueError):
    """Raised for malformed or invalid scenario configuration files.

    ``key`` names the offending ``section.key`` when one can be identified.
    """

    def __init__(self, message: str, key: str | None = None):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key
