"""
Error hierarchy for the subchannel virtual sensor.

Every hard error carries a short machine code so the command line can report
it as a single parsable line.
"""


class SensorError(Exception):
    """Base class for all errors raised by the package."""

    code = "error"


class ShapeError(SensorError, ValueError):
    """Array or layer shapes do not chain."""

    code = "shape_mismatch"


class NumericalError(SensorError):
    """A NaN or infinity appeared in a computed quantity."""

    code = "non_finite"


class ConfigError(SensorError, ValueError):
    """Invalid configuration value or unknown configuration key."""

    code = "config"


class FormatError(SensorError):
    """A binary file does not match its declared layout."""

    code = "format"


class OracleError(SensorError, ValueError):
    """Physical input outside the validity of the reduced-order oracle."""

    code = "oracle"


class TrainingError(SensorError):
    """Training or evaluation cannot proceed with the given data."""

    code = "training"


def describe_validation_error(error) -> str:
    """One-line summary of a pydantic ValidationError: `field: message; ...`."""
    parts = []
    for item in error.errors():
        where = ".".join(str(p) for p in item.get("loc", ())) or error.title
        parts.append(f"{where}: {item.get('msg', 'invalid value')}")
    return "; ".join(parts)
