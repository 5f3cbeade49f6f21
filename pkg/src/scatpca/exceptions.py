"""Exception hierarchy shared by every module of the package."""


class ScatPCAError(Exception):
    """Base class for all package errors."""


class ConfigurationError(ScatPCAError, ValueError):
    """Invalid or inconsistent parameters (filter bank, scattering, classifier)."""


class DimensionError(ScatPCAError, ValueError):
    """Array shapes that do not fit together."""


class IncompatibleError(ScatPCAError, ValueError):
    """Objects computed under different configurations were combined."""


class DataError(ScatPCAError, ValueError):
    """Training or evaluation data that cannot be used as given."""


class FormatError(DataError):
    """Malformed file on disk.

    Parameters
    ----------
    message : str
        Human readable description.
    path : str, optional
        File being read.
    offset : int, optional
        Byte offset at which the problem was detected.
    """

    def __init__(self, message, path=None, offset=None):
        self.path = path
        self.offset = offset
        where = []
        if path is not None:
            where.append(str(path))
        if offset is not None:
            where.append(f"byte offset {offset}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
