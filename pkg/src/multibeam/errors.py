class ParameterError(ValueError):
    """Invalid numeric or structural parameter."""


class FramingError(ValueError):
    """Bit or symbol counts that do not fit the frame layout."""


class DegeneratePilotError(ValueError):
    """Pilot correlation vanished; no phase reference can be formed."""


class UnsupportedModeError(ValueError):
    """Operation requested in a pilot or decoder mode that cannot support it."""
