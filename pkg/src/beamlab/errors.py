"""Exception hierarchy shared by every beamlab stage."""


class BeamlabError(Exception):
    """Base class; the CLI maps subclasses to exit codes."""

    exit_code = 1


class ParameterError(BeamlabError, ValueError):
    """An argument is outside its documented domain."""

    exit_code = 2


class ShapeError(BeamlabError, ValueError):
    """Vectors, fields or grids do not line up."""

    exit_code = 2


class ConfigurationError(BeamlabError):
    """A run configuration is incomplete or inconsistent."""

    exit_code = 2


class FormatError(BeamlabError):
    """A file on disk does not follow its documented format.

    The message always carries ``path:line:column``.
    """

    exit_code = 3

    def __init__(self, path, line, column, message):
        self.path = str(path)
        self.line = line
        self.column = column
        super().__init__(f"{self.path}:{line}:{column}: {message}")


class NumericalError(BeamlabError, ArithmeticError):
    """Non-finite values turned up where finite ones are required."""

    exit_code = 4
