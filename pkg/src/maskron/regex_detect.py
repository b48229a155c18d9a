"""Tiered regular-expression detector.

Each rule carries a base confidence.  A rule may name a checksum validator;
matches that pass it are promoted to the rule's ``validated_confidence``.

Rule patterns describe the PII itself.  They are compiled inside word-boundary
guards (no word character immediately before or after), so anchored
whole-string forms such as ``^\\d{16}$`` become usable on running text.
Matching is POSIX leftmost-longest (via the ``regex`` package), so an
alternation like ``\\d{3}|\\d{3}-\\d{4}`` takes the longer reading.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from typing import Any

import regex

from maskron.errors import BadPattern, DuplicateRuleId, NotDigits, ValidationError
from maskron.model import Detection, PiiType, TextIndex, as_pii_type, make_detection

VALIDATORS = ("LUHN", "NONE")

_LEFT_GUARD = r"(?<!\w)"
_RIGHT_GUARD = r"(?!\w)"


def luhn_check(digits: str) -> bool:
    if not (isinstance(digits, str) and digits.isascii() and digits.isdigit()):
        raise NotDigits(f"expected ASCII digits, got {digits!r}")
    total = 0
    for i, ch in enumerate(reversed(digits)):
        d = ord(ch) - 48
        if i % 2 == 1:
            d *= 2
            if d > 9:
                d -= 9
        total += d
    return total % 10 == 0


def _luhn_passes(text: str) -> bool:
    digits = "".join(ch for ch in text if ch.isascii() and ch.isdigit())
    return 12 <= len(digits) <= 19 and luhn_check(digits)


_VALIDATOR_FUNCS = {"LUHN": _luhn_passes}


@dataclass(frozen=True)
class RegexRule:
    id: str
    pii_type: PiiType
    pattern: str
    base_confidence: float
    validator: str | None = None
    validated_confidence: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "pii_type", as_pii_type(self.pii_type))
        if not self.id or not isinstance(self.id, str):
            raise ValidationError(f"rule id must be a non-empty string, got {self.id!r}")
        for name in ("base_confidence", "validated_confidence"):
            value = getattr(self, name)
            if value is None and name == "validated_confidence":
                continue
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not 0 <= value <= 1:
                raise ValidationError(f"rule {self.id!r}: {name} must be in [0, 1], got {value!r}")
        validator = (self.validator or "NONE").upper()
        if validator not in VALIDATORS:
            raise ValidationError(f"rule {self.id!r}: unknown validator {self.validator!r}")
        object.__setattr__(self, "validator", None if validator == "NONE" else validator)
        if self.validator and self.validated_confidence is None:
            raise ValidationError(f"rule {self.id!r}: validator needs validated_confidence")
        if self.validated_confidence is not None and not self.validated_confidence > self.base_confidence:
            raise ValidationError(
                f"rule {self.id!r}: validated_confidence must exceed base_confidence"
            )

    @classmethod
    def from_mapping(cls, raw: Mapping[str, Any]) -> RegexRule:
        known = {"id", "pii_type", "type", "pattern", "base_confidence", "confidence",
                 "validator", "validated_confidence"}
        extra = sorted(set(raw) - known)
        if extra:
            raise ValidationError(f"unknown regex rule keys: {', '.join(extra)}")
        try:
            return cls(
                id=raw["id"],
                pii_type=raw.get("pii_type", raw.get("type")),
                pattern=raw["pattern"],
                base_confidence=raw.get("base_confidence", raw.get("confidence")),
                validator=raw.get("validator"),
                validated_confidence=raw.get("validated_confidence"),
            )
        except KeyError as exc:
            raise ValidationError(f"regex rule is missing {exc.args[0]!r}") from None


@dataclass(frozen=True)
class CompiledRule:
    rule: RegexRule
    pattern: regex.Pattern

    @property
    def detector_id(self) -> str:
        return "regex:" + self.rule.id


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[CompiledRule, ...]

    def __len__(self) -> int:
        return len(self.rules)

    @property
    def ids(self) -> list[str]:
        return [c.rule.id for c in self.rules]


_OCTET = r"(?:25[0-5]|2[0-4]\d|1\d\d|[1-9]?\d)"

DEFAULT_RULES: tuple[RegexRule, ...] = (
    RegexRule("phone_us_v1", PiiType("PHONE_NUMBER"), r"\(\d{3}\) \d{3}-\d{4}", 0.90),
    RegexRule("phone_us_space_v1", PiiType("PHONE_NUMBER"), r"\(\d{3}\) \d{3} \d{4}", 0.90),
    RegexRule("phone_us_dash_v1", PiiType("PHONE_NUMBER"), r"\d{3}-\d{3}-\d{4}", 0.80),
    RegexRule("ssn_us_v1", PiiType("SSN"), r"\d{3}-\d{2}-\d{4}", 0.90),
    RegexRule(
        "credit_card_16_v1", PiiType("CREDIT_CARD"), r"\d{16}", 0.30,
        validator="LUHN", validated_confidence=0.85,
    ),
    RegexRule(
        "email_v1", PiiType("EMAIL"),
        r"[A-Za-z0-9._%+-]+@[A-Za-z0-9-]+(?:\.[A-Za-z0-9-]+)*\.[A-Za-z]{2,}", 0.95,
    ),
    RegexRule(
        "ipv4_v1", PiiType("IP_ADDRESS"),
        rf"(?<!\d\.){_OCTET}(?:\.{_OCTET}){{3}}(?!\.\d)", 0.90,
    ),
)


def _strip_anchors(pattern: str) -> str:
    if pattern.startswith("^"):
        pattern = pattern[1:]
    if pattern.endswith("$") and not pattern.endswith("\\$"):
        pattern = pattern[:-1]
    return pattern


def compile_ruleset(rules: Iterable[RegexRule | Mapping[str, Any]] | None = None) -> RuleSet:
    """Compile rules (default: :data:`DEFAULT_RULES`) into a :class:`RuleSet`."""
    if rules is None:
        rules = DEFAULT_RULES
    compiled = []
    seen: set[str] = set()
    for rule in rules:
        if not isinstance(rule, RegexRule):
            rule = RegexRule.from_mapping(rule)
        if rule.id in seen:
            raise DuplicateRuleId(rule.id)
        seen.add(rule.id)
        try:
            regex.compile(rule.pattern)
            guarded = regex.compile(
                _LEFT_GUARD + "(?:" + _strip_anchors(rule.pattern) + ")" + _RIGHT_GUARD,
                regex.POSIX | regex.VERSION0,
            )
        except regex.error as exc:
            raise BadPattern(rule.id, str(exc)) from None
        compiled.append(CompiledRule(rule, guarded))
    return RuleSet(tuple(compiled))


def merge_rules(
    overrides: Iterable[RegexRule | Mapping[str, Any]], base: Iterable[RegexRule] = DEFAULT_RULES
) -> list[RegexRule]:
    """Base rules with same-id overrides substituted in place and new rules appended."""
    extra = [r if isinstance(r, RegexRule) else RegexRule.from_mapping(r) for r in overrides]
    by_id = {r.id: r for r in extra}
    if len(by_id) != len(extra):
        ids = [r.id for r in extra]
        raise DuplicateRuleId(next(i for i in ids if ids.count(i) > 1))
    merged = [by_id.pop(r.id, r) for r in base]
    merged.extend(r for r in extra if r.id in by_id)
    return merged


def scan_regex(text: str, rules: RuleSet, index: TextIndex | None = None) -> list[Detection]:
    if not text:
        return []
    index = index or TextIndex(text)
    found = []
    for compiled in rules.rules:
        rule = compiled.rule
        check = _VALIDATOR_FUNCS.get(rule.validator) if rule.validator else None
        for m in compiled.pattern.finditer(text):
            if m.start() == m.end():
                continue
            confidence = rule.base_confidence
            if check is not None and check(m.group()):
                confidence = rule.validated_confidence
            found.append(
                make_detection(index, m.start(), m.end(), rule.pii_type, confidence,
                               compiled.detector_id)
            )
    return found
