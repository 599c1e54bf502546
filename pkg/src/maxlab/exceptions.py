"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`MaxlabError`,
which is itself a :class:`ValueError` so callers validating inputs can catch
the builtin type.  Each subclass carries a short machine-readable ``code`` used
by the command line front end.
"""


class MaxlabError(ValueError):
    code = "error"


class InvalidRegionError(MaxlabError):
    code = "invalid-region"


class InvalidBodyError(MaxlabError):
    code = "invalid-body"


class InvalidExponentError(MaxlabError):
    code = "invalid-exponent"


class InvalidParameterError(MaxlabError):
    code = "invalid-parameter"


class InvalidLevelError(MaxlabError):
    code = "invalid-level"


class DimensionError(MaxlabError):
    code = "dimension"


class AlignmentError(MaxlabError):
    code = "alignment"


class DomainError(MaxlabError):
    code = "domain"


class ConsistencyError(MaxlabError):
    """Inputs to an inequality check do not aggregate consistently.

    Distinct from a genuine violation of the inequality: a consistency error
    means the harness fed the check bad data.
    """

    code = "consistency"


class ConfigurationError(MaxlabError):
    code = "configuration"


class DegenerateInputError(MaxlabError):
    code = "degenerate-input"


class GridFormatError(MaxlabError):
    code = "grid-format"
