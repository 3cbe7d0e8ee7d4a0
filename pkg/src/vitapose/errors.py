"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """Input violates an operation's contract (shape, emptiness, range)."""


class MeshFormatError(ValueError):
    """Mesh file cannot be parsed against the supported OBJ/PLY subset."""


class SceneFormatError(ValueError):
    """Scene or trajectory JSON is malformed or missing required fields."""


class GenerationError(RuntimeError):
    """A scene recipe cannot be realized (e.g. unreachable grasp)."""


class NumericFailure(RuntimeError):
    """Optimization produced a non-finite energy; carries the trace so far."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace
