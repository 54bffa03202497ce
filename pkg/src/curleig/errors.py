"""Exception types shared across the library.

The CLI maps these onto exit codes: ``PropertyViolationError`` exits with
status 2 (a mathematical property that should hold was violated, i.e. a bug
signal), everything else derived from ``CurlEigError`` exits with status 1.
"""


class CurlEigError(Exception):
    """Base class for all library errors."""


class MeshError(CurlEigError):
    """Invalid mesh topology or geometry (non-manifold, open boundary, ...)."""


class DegenerateMetricError(CurlEigError):
    """Conformally scaled edge lengths violate a triangle inequality."""

    def __init__(self, message, faces=None):
        super().__init__(message)
        self.faces = list(faces) if faces is not None else []


class InvalidParameterError(CurlEigError):
    """A caller-supplied parameter is out of its documented range."""


class SolverError(CurlEigError):
    """A linear or eigenvalue solve failed to converge."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class TopologyMismatchError(CurlEigError):
    """Computed topological invariants disagree (diagnostic for bad operators)."""


class DegenerateNodalSetError(CurlEigError):
    """Eigenfunction has a zero plateau; nodal set is not a curve system."""


class PropertyViolationError(CurlEigError):
    """A verified mathematical property failed beyond tolerance (bug signal)."""
