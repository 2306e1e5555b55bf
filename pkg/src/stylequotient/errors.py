"""Exception hierarchy for stylequotient.

Every error raised on purpose by the package derives from
:class:`StyleQuotientError`, so callers (and the CLI) can separate bad input
from genuine runtime failures.
"""


class StyleQuotientError(Exception):
    """Base class for all errors raised by stylequotient."""

    pass


class ConfigError(StyleQuotientError):
    """Raised when a configuration value is out of range or inconsistent.

    This exception is raised in the following scenarios:
    - A pydantic configuration model rejects a field (e.g. ``alpha <= 0``)
    - Quantile thresholds are not ordered ``0 < bottom < top < 1``
    - A split or window is incompatible with the panel it is applied to
    """

    pass


class PanelError(StyleQuotientError):
    """Raised when a sales panel cannot be loaded or violates its schema."""

    pass


class MissingColumnError(PanelError):
    """Raised when the CSV header lacks a required column.

    Attributes:
        column: Name of the missing column
    """

    def __init__(self, column: str):
        self.column = column
        super().__init__(f"Missing required column '{column}' in panel header")


class MalformedRowError(PanelError):
    """Raised when a cell cannot be parsed into its column type.

    Attributes:
        line: 1-based line number in the source file (header is line 1)
        column: Offending column
        value: Raw cell text
    """

    def __init__(self, line: int, column: str, value: object):
        self.line = line
        self.column = column
        self.value = value
        super().__init__(f"Line {line}: malformed value {value!r} in column '{column}'")


class DuplicateKeyError(PanelError):
    """Raised when two rows share the same (style_id, week) key.

    Attributes:
        style_id: Duplicated style
        week: Duplicated week (as written in the file)
        lines: Line numbers of every row carrying the key
    """

    def __init__(self, style_id: str, week: object, lines: list[int]):
        self.style_id = style_id
        self.week = week
        self.lines = lines
        joined = ", ".join(str(line) for line in lines)
        super().__init__(
            f"Duplicate key (style_id={style_id}, week={week}) on lines {joined}"
        )


class InvariantViolationError(PanelError):
    """Raised when a well-formed row breaks a domain rule.

    Examples are a non-live row with sales, ``selling_price > list_price`` or
    ``clicks > impressions``.

    Attributes:
        line: 1-based line number, or ``None`` for in-memory frames
        rule: Human readable statement of the violated rule
    """

    def __init__(self, line: int | None, rule: str):
        self.line = line
        self.rule = rule
        where = f"Line {line}: " if line is not None else ""
        super().__init__(f"{where}invariant violated: {rule}")


class WeekRangeError(PanelError):
    """Raised when a requested week or split point lies outside the panel."""

    pass


class EstimationError(StyleQuotientError):
    """Raised when the choice model cannot be estimated."""

    pass


class ProbabilityDomainError(EstimationError):
    """Raised when log-centering meets a non-positive choice probability."""

    pass


class EmptyDesignError(EstimationError):
    """Raised when no (style, week) row survives into the regression."""

    pass


class ForecastError(StyleQuotientError):
    """Raised when forecasts cannot be produced or scored."""

    pass


class UndefinedDenominatorError(ForecastError):
    """Raised when wMAPE is requested over actuals summing to zero."""

    pass


class KeyMismatchError(ForecastError):
    """Raised when actual and predicted maps do not cover the same keys."""

    pass
