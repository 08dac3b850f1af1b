"""Exception types shared across the package."""


class EmdimError(Exception):
    """Base class for all package errors."""


class InvalidGeometryError(EmdimError, ValueError):
    """Degenerate or inconsistent geometry (zero-extent box, bad polyline, ...)."""


class InvalidParameterError(EmdimError, ValueError):
    """A numeric parameter violates its precondition."""


class MeshFormatError(EmdimError, ValueError):
    """A mesh file cannot be parsed or contains unsupported records."""


class TopologyError(EmdimError, ValueError):
    """Mesh connectivity is inconsistent (orphan triangles, bad adjacency)."""


class ClassificationError(EmdimError, ValueError):
    """A boundary classification rule failed to tag a face."""


class CoefficientError(EmdimError, ValueError):
    """A material coefficient takes an invalid value where sampled."""


class CouplingGeometryError(EmdimError, ValueError):
    """The 1D network leaves the 3D mesh where coupling terms are sampled."""


class AssemblyError(EmdimError, ValueError):
    """Block dimensions or layouts are inconsistent at system assembly."""


class PreconditionerError(EmdimError, RuntimeError):
    """Preconditioner setup failed (singular Schur factorization, ...)."""


class GenerationError(EmdimError, RuntimeError):
    """Random geometry generation exhausted its rejection budget."""


class ConfigError(EmdimError, ValueError):
    """A run configuration is malformed; carries the offending key."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
