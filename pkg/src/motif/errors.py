"""Exception hierarchy.

Every error raised on purpose by the package derives from ``MotifError`` so
callers (and the CLI) can separate domain failures from programming bugs.
"""


class MotifError(Exception):
    code = "motif-error"


class InvalidArgumentError(MotifError, ValueError):
    code = "invalid-argument"


class DegeneratePathError(MotifError, ValueError):
    code = "degenerate-path"


class ParseError(MotifError, ValueError):
    """Raised when a motion description contains text outside the vocabulary."""

    code = "unparseable-token"

    def __init__(self, message, span=None, text=None):
        super().__init__(message)
        self.span = span
        self.text = text


class UnknownObjectError(MotifError, KeyError):
    code = "unknown-object"

    def __str__(self):
        return str(self.args[0]) if self.args else "unknown object"


class MissingRasterError(MotifError):
    code = "missing-raster"


class MissingArtifactError(MotifError):
    code = "missing-artifact"


class CorpusTooSmallError(MotifError):
    code = "corpus-too-small"


class InfeasibleError(MotifError):
    code = "infeasible"


class ConfigError(MotifError):
    code = "config"
