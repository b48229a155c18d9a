from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from maskron.errors import BadSpan, LengthMismatch, ParseError
from maskron.evaluation import (
    AnnotatedDoc,
    TypeScore,
    bundled_names,
    generate_synthetic_corpus,
    load_corpus,
    luhn_complete,
    parse_corpus,
    save_corpus,
    score,
)
from maskron.model import PiiType, Span, TextIndex
from maskron.regex_detect import compile_ruleset, luhn_check, scan_regex

FIXTURE = Path(__file__).parent / "fixtures" / "five_docs.ndjson"
PHONE = PiiType("PHONE_NUMBER")


def test_five_doc_fixture_hand_count():
    # Hand count: doc1 tp; doc2 tp + fn (dotted format); doc3 fp (unannotated number);
    # doc4 tp; doc5 fn (international format).  tp=3 fp=1 fn=2.
    docs = load_corpus(FIXTURE)
    rules = compile_ruleset()
    m = score([scan_regex(d.text, rules) for d in docs], docs)
    s = m.per_type[PHONE]
    assert (s.tp, s.fp, s.fn) == (3, 1, 2)
    assert s.precision == pytest.approx(0.75, abs=1e-9)
    assert s.recall == pytest.approx(0.6, abs=1e-9)
    assert s.f1 == pytest.approx(2 / 3, abs=1e-9)


def test_conventions():
    assert TypeScore(0, 0, 0).precision == 1.0 and TypeScore(0, 0, 0).recall == 1.0
    empty = TypeScore(0, 0, 4)
    assert (empty.precision, empty.recall, empty.f1) == (1.0, 0.0, 0.0)
    assert TypeScore(0, 3, 3).f1 == 0.0


def test_perfect_predictions_both_modes():
    docs = generate_synthetic_corpus(3, 50)
    for mode in ("EXACT", "OVERLAP"):
        m = score([list(d.gold) for d in docs], docs, mode)
        assert all(s.f1 == 1.0 for s in m.per_type.values())
        assert m.micro.f1 == 1.0


def test_overlap_mode_credits_partial_spans():
    doc = AnnotatedDoc("call (111) 111-1111", ((Span(5, 19), PHONE),))
    pred = [[(Span(11, 19), PHONE)]]
    assert score(pred, [doc], "EXACT").per_type[PHONE].tp == 0
    assert score(pred, [doc], "OVERLAP").per_type[PHONE].tp == 1


def test_overlap_gold_consumed_once():
    doc = AnnotatedDoc("x" * 20, ((Span(0, 10), PHONE),))
    preds = [[(Span(0, 4), PHONE), (Span(5, 9), PHONE)]]
    s = score(preds, [doc], "OVERLAP").per_type[PHONE]
    assert (s.tp, s.fp, s.fn) == (1, 1, 0)


@given(st.integers(0, 2**32), st.integers(0, 19))
def test_stray_prediction_lowers_precision_only(seed, pos):
    docs = generate_synthetic_corpus(seed, 3)
    text_len = len(docs[0].text.encode())
    stray = (Span(text_len + pos, text_len + pos + 1), PHONE)  # beyond every gold span
    base = score([list(d.gold) for d in docs], docs)
    more = score([list(docs[0].gold) + [stray]] + [list(d.gold) for d in docs[1:]], docs)
    assert more.micro.precision < base.micro.precision
    assert more.micro.recall == base.micro.recall


@given(st.integers(0, 2**32))
def test_overlap_tp_at_least_exact(seed):
    docs = generate_synthetic_corpus(seed, 5)
    rules = compile_ruleset()
    preds = [scan_regex(d.text, rules) for d in docs]
    assert score(preds, docs, "OVERLAP").micro.tp >= score(preds, docs, "EXACT").micro.tp


def test_length_mismatch():
    with pytest.raises(LengthMismatch):
        score([[]], [])


@pytest.mark.parametrize(
    "line, err",
    [
        ('{"text": "abc", "entities": [{"start": 0, "end": 9, "type": "SSN"}]}', BadSpan),
        ('{"text": "abcdef", "entities": [{"start": 0, "end": 3, "type": "SSN"},'
         ' {"start": 2, "end": 5, "type": "SSN"}]}', BadSpan),
        ('{"text": "é", "entities": [{"start": 0, "end": 1, "type": "SSN"}]}', BadSpan),
        ('{"text": "abc", "entities": [{"start": 0, "end": 1, "type": "bogus"}]}', BadSpan),
        ('{"text": ', ParseError),
        ('["not an object"]', ParseError),
    ],
)
def test_corpus_errors(line, err):
    with pytest.raises(err) as exc:
        parse_corpus(["", line])
    assert exc.value.line == 2


def test_corpus_roundtrip(tmp_path):
    docs = generate_synthetic_corpus(9, 20)
    save_corpus(docs, tmp_path / "c.ndjson")
    assert load_corpus(tmp_path / "c.ndjson") == docs


def test_bundled_names():
    names = bundled_names()
    assert len(names) == 200 and len(set(names)) == 200


def test_luhn_complete():
    card = luhn_complete("411111111111111")
    assert card == "4111111111111111" and luhn_check(card)


def test_generator_deterministic():
    assert generate_synthetic_corpus(5, 30) == generate_synthetic_corpus(5, 30)
    assert generate_synthetic_corpus(5, 30) != generate_synthetic_corpus(6, 30)


def test_generator_mix_and_bounds():
    docs = generate_synthetic_corpus(1, 1000, mix={"PHONE_NUMBER": 1.0}, min_entities=2, max_entities=4)
    assert all(t == PHONE for d in docs for _, t in d.gold)
    assert all(2 <= len(d.gold) <= 4 for d in docs)


def test_generator_gold_spans_are_valid():
    for doc in generate_synthetic_corpus(11, 300):
        idx = TextIndex(doc.text)
        spans = [s for s, _ in doc.gold]
        assert all(idx.check(s) is None for s in spans)
        assert all(a.end <= b.start for a, b in zip(spans, spans[1:]))
