"""Shared vocabulary: PII types, spans, detections, policies, masked output.

Offsets everywhere are byte offsets into the UTF-8 encoding of the source
text.  Detectors work on ``str`` and translate through :class:`TextIndex`, so
every emitted span lands on a character boundary.
"""

from __future__ import annotations

import enum
import math
import re
from bisect import bisect_right
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Any

from maskron.errors import (
    BadThreshold,
    DanglingKeyRef,
    InvalidPiiType,
    MissingParam,
    UnknownStrategy,
    ValidationError,
)

BUILTIN_TYPES = frozenset(
    {
        "PHONE_NUMBER",
        "EMAIL",
        "SSN",
        "CREDIT_CARD",
        "PERSON_NAME",
        "IP_ADDRESS",
        "CUSTOMER_ID",
    }
)

_CUSTOM_RE = re.compile(r"CUSTOM:[A-Z0-9_]+")
_BUILTIN_SHAPE_RE = re.compile(r"[A-Z][A-Z0-9_]*")


@dataclass(frozen=True, order=True)
class PiiType:
    """A PII category: one of :data:`BUILTIN_TYPES` or ``CUSTOM:<SUFFIX>``."""

    name: str

    def __post_init__(self):
        if not isinstance(self.name, str):
            raise InvalidPiiType(f"PII type name must be a string, got {self.name!r}")
        if _CUSTOM_RE.fullmatch(self.name):
            return
        if not _BUILTIN_SHAPE_RE.fullmatch(self.name):
            raise InvalidPiiType(f"malformed PII type name {self.name!r}")
        if self.name not in BUILTIN_TYPES:
            raise InvalidPiiType(
                f"unknown PII type {self.name!r}; use the CUSTOM: prefix for new types"
            )

    @property
    def is_custom(self) -> bool:
        return self.name.startswith("CUSTOM:")

    def __str__(self) -> str:
        return self.name


def as_pii_type(value: PiiType | str) -> PiiType:
    return value if isinstance(value, PiiType) else PiiType(value)


@dataclass(frozen=True, order=True)
class Span:
    """Half-open byte interval ``[start, end)``."""

    start: int
    end: int

    def __post_init__(self):
        if not (isinstance(self.start, int) and isinstance(self.end, int)):
            raise ValueError(f"span offsets must be integers: {self.start!r}, {self.end!r}")
        if self.start < 0 or self.start >= self.end:
            raise ValueError(f"invalid span [{self.start}, {self.end})")

    def __len__(self) -> int:
        return self.end - self.start


def spans_overlap(a: Span, b: Span) -> bool:
    return a.start < b.end and b.start < a.end


@dataclass(frozen=True)
class Detection:
    span: Span
    pii_type: PiiType
    confidence: float
    detector_id: str
    matched_text: str

    def __post_init__(self):
        if not isinstance(self.pii_type, PiiType):
            object.__setattr__(self, "pii_type", PiiType(self.pii_type))
        c = self.confidence
        if isinstance(c, bool) or not isinstance(c, (int, float)) or math.isnan(c) or not 0.0 <= c <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {c!r}")
        if len(self.matched_text.encode("utf-8")) != len(self.span):
            raise ValueError(
                f"matched_text is {len(self.matched_text.encode('utf-8'))} bytes "
                f"but span covers {len(self.span)}"
            )


class TextIndex:
    """Maps between character and UTF-8 byte offsets of one string."""

    __slots__ = ("text", "data", "_byte_at")

    def __init__(self, text: str):
        self.text = text
        self.data = text.encode("utf-8")
        if len(self.data) == len(text):
            self._byte_at = None
        else:
            offsets = [0] * (len(text) + 1)
            pos = 0
            for i, ch in enumerate(text):
                offsets[i] = pos
                o = ord(ch)
                pos += 1 if o < 0x80 else 2 if o < 0x800 else 3 if o < 0x10000 else 4
            offsets[len(text)] = pos
            self._byte_at = offsets

    def to_byte(self, char_index: int) -> int:
        return char_index if self._byte_at is None else self._byte_at[char_index]

    def to_char(self, byte_index: int) -> int:
        if self._byte_at is None:
            return byte_index
        i = bisect_right(self._byte_at, byte_index) - 1
        if self._byte_at[i] != byte_index:
            raise ValueError(f"byte offset {byte_index} is not on a character boundary")
        return i

    def span(self, char_start: int, char_end: int) -> Span:
        return Span(self.to_byte(char_start), self.to_byte(char_end))

    def is_boundary(self, byte_index: int) -> bool:
        if byte_index == len(self.data):
            return True
        if not 0 <= byte_index < len(self.data):
            return False
        return (self.data[byte_index] & 0xC0) != 0x80

    def slice(self, span: Span) -> str:
        return self.data[span.start : span.end].decode("utf-8")

    def check(self, span: Span) -> str | None:
        """Return a reason string if ``span`` is unusable against this text."""
        if span.end > len(self.data):
            return "out_of_range"
        if not (self.is_boundary(span.start) and self.is_boundary(span.end)):
            return "not_on_boundary"
        return None


def make_detection(
    index: TextIndex,
    char_start: int,
    char_end: int,
    pii_type: PiiType,
    confidence: float,
    detector_id: str,
) -> Detection:
    return Detection(
        span=index.span(char_start, char_end),
        pii_type=pii_type,
        confidence=confidence,
        detector_id=detector_id,
        matched_text=index.text[char_start:char_end],
    )


# -- policy -------------------------------------------------------------------------


class Strategy(str, enum.Enum):
    REDACT = "REDACT"
    PSEUDONYMIZE = "PSEUDONYMIZE"
    HASH = "HASH"
    ENCRYPT = "ENCRYPT"
    CUSTOM_EMAIL = "CUSTOM_EMAIL"
    PASSTHROUGH = "PASSTHROUGH"


@dataclass(frozen=True)
class PolicyEntry:
    strategy: Strategy
    params: Mapping[str, Any] = field(default_factory=dict)
    threshold_override: float | None = None

    @property
    def key_refs(self) -> tuple[str, ...]:
        return tuple(self.params[k] for k in ("key_id",) if k in self.params)

    @property
    def salt_refs(self) -> tuple[str, ...]:
        return tuple(self.params[k] for k in ("salt_id",) if k in self.params)


@dataclass(frozen=True)
class PolicyTable:
    default_threshold: float = 0.5
    entries: Mapping[PiiType, PolicyEntry] = field(default_factory=dict)
    default_entry: PolicyEntry = PolicyEntry(Strategy.REDACT)

    def entry_for(self, pii_type: PiiType) -> PolicyEntry:
        return self.entries.get(pii_type, self.default_entry)

    def threshold_for(self, pii_type: PiiType) -> float:
        entry = self.entries.get(pii_type)
        if entry is not None and entry.threshold_override is not None:
            return entry.threshold_override
        return self.default_threshold


# Allowed params per strategy; None marks "required".
_PARAM_SPEC: dict[Strategy, dict[str, Any]] = {
    Strategy.REDACT: {},
    Strategy.PASSTHROUGH: {},
    Strategy.PSEUDONYMIZE: {"mode": "RANDOM", "key_id": None},
    Strategy.HASH: {"salt_id": None, "full_digest": False},
    Strategy.ENCRYPT: {"key_id": None},
    Strategy.CUSTOM_EMAIL: {"fill_char": "x", "length_mode": "MATCH", "fixed_length": None},
}


def _threshold(value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise BadThreshold(value)
    if math.isnan(value) or not 0.0 <= value <= 1.0:
        raise BadThreshold(value)
    return float(value)


def _strategy(name: Any) -> Strategy:
    if not isinstance(name, str):
        raise UnknownStrategy(repr(name))
    try:
        return Strategy(name.upper())
    except ValueError:
        raise UnknownStrategy(name) from None


def _entry(raw: Any) -> PolicyEntry:
    if isinstance(raw, str):
        raw = {"strategy": raw}
    if not isinstance(raw, Mapping):
        raise ValidationError(f"policy entry must be a table or strategy name, got {raw!r}")
    if "strategy" not in raw:
        raise ValidationError("policy entry is missing 'strategy'")
    strategy = _strategy(raw["strategy"])
    threshold = raw.get("threshold")
    if threshold is not None:
        threshold = _threshold(threshold)

    allowed = _PARAM_SPEC[strategy]
    params = {k: v for k, v in raw.items() if k not in ("strategy", "threshold")}
    unknown = sorted(set(params) - set(allowed))
    if unknown:
        raise ValidationError(f"strategy {strategy.value} does not take {', '.join(unknown)}")
    for name, default in allowed.items():
        if name not in params and default is not None:
            params[name] = default

    if strategy is Strategy.HASH:
        if "salt_id" not in params:
            raise MissingParam(strategy.value, "salt_id")
        if not isinstance(params["full_digest"], bool):
            raise ValidationError("full_digest must be a boolean")
    elif strategy is Strategy.ENCRYPT:
        if "key_id" not in params:
            raise MissingParam(strategy.value, "key_id")
    elif strategy is Strategy.PSEUDONYMIZE:
        mode = str(params["mode"]).upper()
        if mode not in ("RANDOM", "DETERMINISTIC"):
            raise ValidationError(f"pseudonymization mode must be RANDOM or DETERMINISTIC, got {mode!r}")
        params["mode"] = mode
        if mode == "DETERMINISTIC" and "key_id" not in params:
            raise MissingParam(strategy.value, "key_id")
    elif strategy is Strategy.CUSTOM_EMAIL:
        fill = params["fill_char"]
        if not isinstance(fill, str) or len(fill) != 1:
            raise ValidationError(f"fill_char must be a single character, got {fill!r}")
        mode = str(params["length_mode"]).upper()
        params["length_mode"] = mode
        if mode == "FIXED":
            n = params.get("fixed_length")
            if n is None:
                raise MissingParam(strategy.value, "fixed_length")
            if isinstance(n, bool) or not isinstance(n, int) or n < 1:
                raise ValidationError(f"fixed_length must be a positive integer, got {n!r}")
        elif mode != "MATCH":
            raise ValidationError(f"length_mode must be MATCH or FIXED, got {mode!r}")

    for ref in ("key_id", "salt_id"):
        if ref in params and not (isinstance(params[ref], str) and params[ref]):
            raise ValidationError(f"{ref} must be a non-empty string")

    return PolicyEntry(strategy, params, threshold)


def validate_policy(raw_config: Mapping[str, Any], keyring=None) -> PolicyTable:
    """Build a :class:`PolicyTable` from a parsed ``[policy]`` table.

    Accepted keys: ``default_threshold``, ``default_strategy`` (name or entry
    table) and ``types`` mapping a type name to an entry.  An entry is either a
    bare strategy name or a table with ``strategy``, optional ``threshold`` and
    the strategy's parameters.  When ``keyring`` is given every ``key_id`` and
    ``salt_id`` must resolve in it.
    """
    if not isinstance(raw_config, Mapping):
        raise ValidationError("policy must be a table")
    unknown = sorted(set(raw_config) - {"default_threshold", "default_strategy", "types"})
    if unknown:
        raise ValidationError(f"unknown policy keys: {', '.join(unknown)}")

    default_threshold = _threshold(raw_config.get("default_threshold", 0.5))
    default_entry = _entry(raw_config.get("default_strategy", "REDACT"))
    if default_entry.strategy is Strategy.PASSTHROUGH:
        # unlisted types must never slip through unmasked
        raise ValidationError("PASSTHROUGH cannot be the default strategy; list types explicitly")

    raw_types = raw_config.get("types", {})
    if not isinstance(raw_types, Mapping):
        raise ValidationError("policy.types must be a table")
    entries = {PiiType(name): _entry(raw) for name, raw in raw_types.items()}

    if keyring is not None:
        for entry in (default_entry, *entries.values()):
            for key_id in entry.key_refs:
                if key_id not in keyring.keys:
                    raise DanglingKeyRef(key_id)
            for salt_id in entry.salt_refs:
                if salt_id not in keyring.salts:
                    raise DanglingKeyRef(salt_id)

    return PolicyTable(default_threshold, entries, default_entry)


def policy_refs(policy: PolicyTable) -> tuple[set[str], set[str]]:
    """All (key ids, salt ids) the policy needs."""
    keys: set[str] = set()
    salts: set[str] = set()
    for entry in (policy.default_entry, *policy.entries.values()):
        keys.update(entry.key_refs)
        salts.update(entry.salt_refs)
    return keys, salts


# -- masked output -------------------------------------------------------------------


@dataclass(frozen=True)
class AuditEntry:
    original_span: Span
    new_span: Span
    pii_type: PiiType
    strategy: Strategy
    detector_id: str


@dataclass(frozen=True)
class MaskedDocument:
    text: str
    audit: tuple[AuditEntry, ...] = ()
    counts: Mapping[PiiType, int] = field(default_factory=dict)
    escapes: int = 0
