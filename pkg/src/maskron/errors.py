"""Exception hierarchy.

Everything raised on purpose by this package derives from :class:`MaskronError`,
so callers can catch one type at the edge (the CLI does exactly that).
"""

from __future__ import annotations


class MaskronError(Exception):
    """Base class for all package errors."""


# -- configuration / policy ---------------------------------------------------


class ConfigError(MaskronError):
    pass


class ParseError(ConfigError):
    def __init__(self, line: int | None, reason: str):
        self.line = line
        self.reason = reason
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{reason}")


class ValidationError(ConfigError):
    pass


class InvalidPiiType(ValidationError):
    pass


class UnknownStrategy(ValidationError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown masking strategy {name!r}")


class MissingParam(ValidationError):
    def __init__(self, strategy: str, param: str):
        self.strategy = strategy
        self.param = param
        super().__init__(f"strategy {strategy} requires parameter {param!r}")


class BadThreshold(ValidationError):
    def __init__(self, value: object):
        self.value = value
        super().__init__(f"threshold must be a real in [0, 1], got {value!r}")


class DanglingKeyRef(ValidationError):
    def __init__(self, ref_id: str):
        self.ref_id = ref_id
        super().__init__(f"policy references unknown key/salt id {ref_id!r}")


# -- regex rules ----------------------------------------------------------------


class BadPattern(ValidationError):
    def __init__(self, rule_id: str, reason: str):
        self.rule_id = rule_id
        self.reason = reason
        super().__init__(f"rule {rule_id!r}: {reason}")


class DuplicateRuleId(ValidationError):
    def __init__(self, rule_id: str):
        self.rule_id = rule_id
        super().__init__(f"duplicate rule id {rule_id!r}")


class NotDigits(MaskronError, ValueError):
    pass


# -- bloom filter -----------------------------------------------------------------


class BadParameter(MaskronError, ValueError):
    pass


class EmptyDictionary(MaskronError):
    pass


class CorruptFormat(MaskronError):
    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(f"corrupt bloom filter: {reason}")


# -- external detectors -------------------------------------------------------------


class ExternalError(MaskronError):
    pass


class Timeout(ExternalError):
    pass


class Unreachable(ExternalError):
    pass


class BadResponse(ExternalError):
    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


class AuthFailed(ExternalError):
    pass


class BoundaryNotAcknowledged(ExternalError):
    """External detection requested without the data-leaves-boundary opt-in."""


# -- resolution / masking -------------------------------------------------------------


class MixedSources(MaskronError):
    pass


class MaskingError(MaskronError):
    pass


class MissingKey(MaskingError):
    pass


class WeakSalt(MaskingError):
    pass


class NotAnEmail(MaskingError):
    pass


class AuthFailure(MaskingError):
    """An encrypted token failed authentication and was left in place."""

    def __init__(self, start: int, end: int, reason: str = "authentication failed"):
        self.start = start
        self.end = end
        self.reason = reason
        super().__init__(f"token at [{start}, {end}): {reason}")


class EntropyUnavailable(MaskingError):
    pass


class SpanMaskingError(MaskingError):
    """A strategy failed; carries the span it failed on."""

    def __init__(self, span, cause: Exception):
        self.span = span
        self.cause = cause
        super().__init__(f"masking failed at [{span.start}, {span.end}): {cause}")


# -- evaluation ------------------------------------------------------------------------


class BadSpan(ValidationError):
    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class LengthMismatch(MaskronError, ValueError):
    pass
