from typing import Optional


class AirCodeError(Exception):
    """
    General error class for problems in the design, imaging or decoding pipeline.

    Developers can introduce more specific error types by subclassing this error.
    Alternatively, the 'key' attribute can be used to define more granular error types.
    """

    def __init__(self, reason: Optional[str] = None, key: Optional[str] = None):
        """
        :param reason: (optional) a brief description of the cause
        :param key: (optional) a key word, e.g. the offending parameter or the failing stage
        """
        super().__init__(reason)
        self.reason = reason
        self.key = key

    def __str__(self):
        return f"{self.__class__.__name__}: {self.reason}"


class InvalidInputError(AirCodeError, ValueError):
    """Raised when the inputs of an operation violate its preconditions (e.g. non-ascending grids, h <= 0)."""
    pass


class FormatError(AirCodeError):
    """Raised when a file does not follow its schema (material CSV, layout JSON, PGM, voxel file).

    The optional 'row' points to the offending line of tabular input.
    """

    def __init__(self, reason: Optional[str] = None, key: Optional[str] = None, row: Optional[int] = None):
        super().__init__(reason, key)
        self.row = row


class NonPhysicalError(AirCodeError):
    """Raised when spectral data violates energy conservation or layers cannot be composed."""
    pass


class ConvergenceError(AirCodeError):
    """Raised when an iterative solver (halving, Newton, bisection) does not converge."""
    pass


class InfeasibleDesignError(AirCodeError):
    """Raised when no air pocket parameters satisfy the design targets; 'key' names the violated bound."""
    pass


class CapacityError(AirCodeError):
    """Raised when a codeword does not fit into the data cells of a tag."""

    def __init__(self, capacity: int, required: int):
        super().__init__(f"Tag capacity is {capacity} bits, but {required} bits are required", key="capacity")
        self.capacity = capacity
        self.required = required


class StageError(AirCodeError):
    """
    Raised when a decoding stage fails. The 'stage' names the failing step of the pipeline, e.g.

        - quad: no marker quadrilateral among the ellipse candidates
        - orientation: the bottom-right marker cannot be told apart
        - classifier: the known bits cannot be separated
    """

    def __init__(self, reason: Optional[str] = None, stage: Optional[str] = None):
        super().__init__(reason, key=stage)
        self.stage = stage


class QuadNotFoundError(StageError):
    """Raised when no combination of ellipse centers forms the marker square."""

    def __init__(self, reason: str = "No marker quad found"):
        super().__init__(reason, stage="quad")


class AmbiguousOrientationError(StageError):
    """Raised when the ring means around the markers do not single out the bottom-right marker."""

    def __init__(self, reason: str):
        super().__init__(reason, stage="orientation")


class NonSeparableError(StageError):
    """Raised when the on-the-fly classifier does not reach full accuracy on the known bits."""

    def __init__(self, reason: str):
        super().__init__(reason, stage="classifier")


class UnrecoverableError(StageError):
    """Raised when Reed-Solomon decoding cannot correct the received codeword."""

    def __init__(self, reason: str):
        super().__init__(reason, stage="ecc")


class InvalidPoseError(StageError):
    """Raised when no pose solution places the tag in front of the camera."""

    def __init__(self, reason: str):
        super().__init__(reason, stage="pose")
