"""Exception hierarchy shared by the trispec modules."""


class TrispecError(Exception):
    """Base class for all trispec failures."""


class InvalidParameterError(TrispecError, ValueError):
    """A numeric argument lies outside its admissible range."""


class InvalidModeError(InvalidParameterError):
    """An analytic mode label (m, n) does not describe an eigenfunction."""


class AssemblyError(TrispecError):
    """Finite element assembly hit a degenerate element."""


class SolverError(TrispecError):
    """The eigensolver failed to deliver the requested eigenpairs.

    ``achieved`` holds the number of eigenpairs that did converge.
    """

    def __init__(self, message, achieved=0):
        super().__init__(message)
        self.achieved = achieved


class MeshMismatchError(TrispecError):
    """Two meshes were expected to be nested but are not."""


class FormatError(TrispecError):
    """A serialized artifact could not be parsed."""
