import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from maskron.errors import BadPattern, DuplicateRuleId, NotDigits
from maskron.model import PiiType, TextIndex
from maskron.regex_detect import (
    DEFAULT_RULES,
    RegexRule,
    compile_ruleset,
    luhn_check,
    merge_rules,
    scan_regex,
)

RULES = compile_ruleset()


# Checksums hand-computed before implementation:
# 4111111111111111 -> doubled 4+7x1 = 8+14 = 22, undoubled 8x1 = 8, total 30 (valid)
# 4111111111111112 -> total 31 (invalid)
@pytest.mark.parametrize(
    "digits, valid",
    [("4111111111111111", True), ("4111111111111112", False), ("0000000000000000", True)],
)
def test_luhn(digits, valid):
    assert luhn_check(digits) is valid


def test_luhn_rejects_non_digits():
    with pytest.raises(NotDigits):
        luhn_check("4111-1111")


def test_default_ruleset_size():
    assert len(RULES) >= 5


def test_bad_pattern():
    with pytest.raises(BadPattern):
        compile_ruleset([RegexRule("bad", "SSN", "(", 0.5)])


def test_duplicate_rule_id():
    rule = RegexRule("phone_us_v1", "PHONE_NUMBER", r"\d", 0.5)
    with pytest.raises(DuplicateRuleId):
        compile_ruleset([rule, rule])


def test_parenthesized_phone():
    text = "My phone number is (111) 111-1111"
    [d] = scan_regex(text, RULES)
    assert d.pii_type == PiiType("PHONE_NUMBER")
    assert d.matched_text == "(111) 111-1111"
    assert d.confidence == 0.90
    assert d.detector_id == "regex:phone_us_v1"


def test_phone_space_variant_ships_as_own_rule():
    [d] = scan_regex("call (111) 111 1111", RULES)
    assert d.detector_id == "regex:phone_us_space_v1"


def test_bare_sixteen_digits_low_confidence():
    [d] = scan_regex("order 1234567812345678 shipped", RULES)
    assert d.pii_type == PiiType("CREDIT_CARD")
    assert d.confidence == 0.30


def test_luhn_valid_card_promoted():
    [d] = scan_regex("order 4111111111111111 shipped", RULES)
    assert d.pii_type == PiiType("CREDIT_CARD")
    assert d.confidence == 0.85


def test_empty_input():
    assert scan_regex("", RULES) == []


@pytest.mark.parametrize(
    "text",
    ["id 41111111111111112 x", "x4111111111111111", "ab123-45-6789", "1.2.3.4.5", "999.1.1.1"],
)
def test_boundaries_reject_embedded_matches(text):
    assert [d for d in scan_regex(text, RULES) if d.pii_type.name in ("CREDIT_CARD", "SSN", "IP_ADDRESS")] == []


@pytest.mark.parametrize(
    "text, typ, match",
    [
        ("ssn: 123-45-6789.", "SSN", "123-45-6789"),
        ("mail john.doe@example.com.", "EMAIL", "john.doe@example.com"),
        ("from 192.168.0.254, ok", "IP_ADDRESS", "192.168.0.254"),
        ("tel 555-123-4567!", "PHONE_NUMBER", "555-123-4567"),
    ],
)
def test_default_rules_in_running_text(text, typ, match):
    found = [d for d in scan_regex(text, RULES) if d.pii_type.name == typ]
    assert [d.matched_text for d in found] == [match]


def test_tier_ordering_for_cards():
    rule = next(r for r in DEFAULT_RULES if r.validator == "LUHN")
    assert rule.validated_confidence > rule.base_confidence


def test_multibyte_offsets_are_bytes():
    text = "naïve café: 123-45-6789"
    [d] = scan_regex(text, RULES)
    assert TextIndex(text).data[d.span.start : d.span.end].decode() == d.matched_text


def test_merge_rules_overrides_in_place():
    merged = merge_rules([{"id": "ssn_us_v1", "pii_type": "SSN", "pattern": r"\d{9}",
                           "base_confidence": 0.6},
                          {"id": "badge", "pii_type": "CUSTOM:BADGE", "pattern": r"B-\d+",
                           "base_confidence": 0.7}])
    ids = [r.id for r in merged]
    assert ids.index("ssn_us_v1") == [r.id for r in DEFAULT_RULES].index("ssn_us_v1")
    assert ids[-1] == "badge"
    rs = compile_ruleset(merged)
    assert [d.matched_text for d in scan_regex("badge B-9 ssn 123456789", rs)] == ["123456789", "B-9"]


def test_scan_is_deterministic():
    text = "a 123-45-6789 b (111) 111-1111 c x@y.io d 4111111111111111 e 10.0.0.1"
    assert scan_regex(text, RULES) == scan_regex(text, RULES)


@pytest.mark.parametrize("rule", DEFAULT_RULES, ids=lambda r: r.id)
@settings(max_examples=60, suppress_health_check=[HealthCheck.too_slow])
@given(data=st.data())
def test_no_false_negatives_on_rule_language(rule, data):
    s = data.draw(st.from_regex(rule.pattern, fullmatch=True))
    text = f"prefix {s} suffix"
    idx = TextIndex(text)
    start = len(b"prefix ")
    end = start + len(s.encode())
    hits = [d for d in scan_regex(text, RULES)
            if d.pii_type == rule.pii_type and d.span.start <= start and d.span.end >= end]
    assert hits, (rule.id, s)
    for d in hits:
        assert idx.slice(d.span) == d.matched_text


def test_within_rule_matching_is_leftmost_longest():
    rs = compile_ruleset([RegexRule("alt", "CUSTOM:CODE", r"\d{3}|\d{3}-\d{4}", 0.5)])
    found = scan_regex("a 123-4567 b 123 c", rs)
    assert [d.matched_text for d in found] == ["123-4567", "123"]
