"""Exception hierarchy shared by all modules."""


class PHSError(Exception):
    """Base class for every error raised by :mod:`phstriplet`."""


class SingularMatrixError(PHSError):
    """A matrix that has to be inverted is numerically singular."""


class RankError(PHSError):
    """A matrix does not have the rank an operation requires."""


class NotDissipativeError(PHSError):
    """A subspace or operator expected to be dissipative is not."""


class ValidationError(PHSError):
    """A port-Hamiltonian system failed its standing assumptions."""


class ConfigError(PHSError):
    """A configuration document could not be parsed.

    ``path`` points into the JSON document (``"W[0][1]"``), ``offset`` is a
    byte offset for syntax errors.
    """

    def __init__(self, message, path=None, offset=None):
        self.path = path
        self.offset = offset
        where = []
        if path is not None:
            where.append(f"at {path}")
        if offset is not None:
            where.append(f"byte offset {offset}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
