import io
import json
from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st

from maskron.errors import ParseError, ValidationError
from maskron.masking import Keyring, save_keyring
from maskron.model import validate_policy
from maskron.pipeline import (
    Config,
    MetricsReport,
    config_from_mapping,
    json_string_spans,
    load_config,
    mask_text,
    merge_metrics,
    run_detect,
    run_mask,
)

from conftest import KEY_A, SALT_A


def run(data: bytes, config: Config, mode=run_mask, **kw):
    out, dead = io.BytesIO(), io.BytesIO()
    metrics = mode(io.BytesIO(data), out, config, dead_letter=dead, **kw)
    return out.getvalue(), dead.getvalue(), metrics


def write_config(tmp_path, body: str):
    path = tmp_path / "maskron.toml"
    path.write_text(body)
    return path


# -- config ----------------------------------------------------------------------


def test_minimal_config(tmp_path):
    cfg = load_config(write_config(tmp_path, '[input]\nformat = "text_lines"\n[policy]\ndefault_strategy = "REDACT"\n'))
    assert cfg.input_format == "text_lines" and cfg.regex_enabled


def test_ndjson_needs_fields(tmp_path):
    with pytest.raises(ValidationError):
        load_config(write_config(tmp_path, '[input]\nformat = "ndjson"\nfields = []\n'))


def test_dangling_keyring_path(tmp_path):
    with pytest.raises(ValidationError, match="keyring"):
        load_config(write_config(tmp_path, '[runtime]\nkeyring = "missing.json"\n'))


def test_parse_error_reports_line(tmp_path):
    with pytest.raises(ParseError) as exc:
        load_config(write_config(tmp_path, '[input]\nformat = "text_lines"\nfields = [\n\n= oops\n'))
    assert exc.value.line is not None


def test_unknown_keys_rejected():
    with pytest.raises(ValidationError, match="unknown keys"):
        config_from_mapping({"runtime": {"paralelism": 2}})


def test_external_requires_acknowledgement():
    raw = {"detectors": {"external": {"endpoints": [{"name": "ner", "url": "http://localhost:1"}]}}}
    with pytest.raises(ValidationError, match="external_data_leaves_boundary"):
        config_from_mapping(raw)


def test_key_refs_need_keyring():
    raw = {"policy": {"types": {"SSN": {"strategy": "HASH", "salt_id": "s1"}}}}
    with pytest.raises(ValidationError, match="keyring"):
        config_from_mapping(raw)


def test_policy_refs_checked_against_keyring(tmp_path):
    save_keyring(Keyring({"k1": KEY_A}, {"s1": SALT_A}), tmp_path / "ring.json")
    body = ('[runtime]\nkeyring = "ring.json"\n'
            '[policy.types.SSN]\nstrategy = "ENCRYPT"\nkey_id = "nope"\n')
    with pytest.raises(ValidationError):
        load_config(write_config(tmp_path, body))


def test_full_config(tmp_path):
    save_keyring(Keyring({"k1": KEY_A}, {"s1": SALT_A}), tmp_path / "ring.json")
    (tmp_path / "staff.txt").write_text("Alice\nBob\n")
    body = """
[input]
format = "ndjson"
fields = ["message", "user.note"]

[detectors]
precedence = ["regex", "bloom"]

[detectors.regex]
rules = [{ id = "badge_v1", pii_type = "CUSTOM:BADGE", pattern = "B-\\\\d{5}", base_confidence = 0.8 }]

[[detectors.dictionary]]
name = "staff"
source = "staff.txt"

[policy]
default_threshold = 0.5

[policy.types]
SSN = { strategy = "HASH", salt_id = "s1" }
PERSON_NAME = "PSEUDONYMIZE"

[runtime]
keyring = "ring.json"
parallelism = 2
"""
    cfg = load_config(write_config(tmp_path, body))
    engine = cfg.build_engine()
    found = engine.detect("Alice badge B-12345 ssn 123-45-6789")
    assert [d.pii_type.name for d in found] == ["PERSON_NAME", "CUSTOM:BADGE", "SSN"]


# -- text lines ----------------------------------------------------------------------


def test_phone_redaction_end_to_end():
    out, _, m = run(b"My phone number is 111-111-1111\n", Config())
    assert out == b"My phone number is <PHONE_NUMBER>\n"
    assert m.records_in == m.records_out == 1
    assert m.detections_by_type == {"PHONE_NUMBER": 1}
    assert m.masks_by_strategy == {"REDACT": 1}


def test_empty_input():
    out, dead, m = run(b"", Config())
    assert out == b"" and dead == b""
    assert m.counters() == MetricsReport().counters()


def test_line_terminators_preserved():
    data = b"a 123-45-6789\r\nb\n\nlast 123-45-6789"
    out, _, _ = run(data, Config())
    assert out == b"a <SSN>\r\nb\n\nlast <SSN>"


def test_invalid_utf8_dead_lettered():
    out, dead, m = run(b"ok 123-45-6789\n\xff\xfe bad\nfine\n", Config())
    assert out == b"ok <SSN>\nfine\n"
    entry = json.loads(dead)
    assert entry["record_index"] == 1 and "UTF-8" in entry["reason"]
    assert m.records_in == 3 and m.records_out == 2 and m.records_dead_lettered == 1


def test_masked_output_is_stable_under_remasking():
    once = mask_text("ssn 123-45-6789 and 111-111-1111\n")
    assert mask_text(once) == once


def test_detect_report_and_consistency():
    data = b"call 111-111-1111 now\nnothing here\nssn 123-45-6789\n"
    report, _, _ = run(data, Config(), run_detect)
    recs = [json.loads(line) for line in report.splitlines()]
    assert [(r["record_index"], r["type"]) for r in recs] == [(0, "PHONE_NUMBER"), (2, "SSN")]
    assert recs[0]["detector_id"] == "regex:phone_us_dash_v1"
    masked, _, _ = run(data, Config())
    lines = data.splitlines()
    for r in recs:
        line = lines[r["record_index"]]
        assert masked.splitlines()[r["record_index"]] == line[: r["start"]] + f"<{r['type']}>".encode() + line[r["end"] :]


def test_detect_below_threshold_is_empty():
    cfg = Config(policy=validate_policy({"default_threshold": 0.5}))
    report, _, _ = run(b"order 1234567812345678\n", cfg, run_detect)
    assert report == b""


# -- ndjson ---------------------------------------------------------------------------


NDJSON_CFG = Config(input_format="ndjson", fields=("msg", "user.note"))


def test_ndjson_only_configured_fields():
    rec = {"id": "123-45-6789", "msg": "ssn 123-45-6789", "user": {"note": ["call 111-111-1111", 5]}}
    line = json.dumps(rec, separators=(", ", ": ")) + "\n"
    out, _, _ = run(line.encode(), NDJSON_CFG)
    got = json.loads(out)
    assert got == {"id": "123-45-6789", "msg": "ssn <SSN>",
                   "user": {"note": ["call <PHONE_NUMBER>", 5]}}
    # bytes outside the rewritten values are untouched
    assert out.decode().startswith('{"id": "123-45-6789", "msg": "ssn <SSN>"')


def test_ndjson_untouched_record_is_byte_identical():
    line = b'{ "msg" :"nothing\\u0020here",  "x":1.50e3 }\n'
    out, _, _ = run(line, NDJSON_CFG)
    assert out == line


def test_ndjson_bad_record_dead_lettered():
    out, dead, m = run(b'{"msg": "ok"}\n{"msg": \n', NDJSON_CFG)
    assert out == b'{"msg": "ok"}\n'
    assert json.loads(dead)["reason"].startswith("RecordError")
    assert m.records_dead_lettered == 1


def test_json_string_spans_paths():
    doc = '{"a": {"b": "x", "c": ["y", {"b": "z"}]}, "b": "w"}'
    spans = json_string_spans(doc, [("a", "b"), ("b",)])
    assert [(p, doc[s:e]) for p, s, e in spans] == [(("a", "b"), '"x"'), (("b",), '"w"')]


@given(st.recursive(
    st.none() | st.booleans() | st.integers() | st.text(max_size=8),
    lambda kids: st.lists(kids, max_size=3) | st.dictionaries(st.sampled_from("abc"), kids, max_size=3),
    max_leaves=10,
))
def test_json_string_spans_agree_with_json(value):
    doc = json.dumps({"a": value, "b": "tail"})
    spans = json_string_spans(doc, [("b",)])
    assert [json.loads(doc[s:e]) for _, s, e in spans] == ["tail"]


# -- csv ------------------------------------------------------------------------------


CSV_CFG = Config(input_format="csv", columns=("note",))


def test_csv_columns_and_quoting():
    data = (b'id,note,other\r\n'
            b'1,call 111-111-1111,123-45-6789\r\n'
            b'2,"multi\nline, ssn 123-45-6789 ""q""",x\r\n'
            b'3,,\r\n')
    out, _, m = run(data, CSV_CFG)
    assert out == (b'id,note,other\r\n'
                   b'1,call <PHONE_NUMBER>,123-45-6789\r\n'
                   b'2,"multi\nline, ssn <SSN> ""q""",x\r\n'
                   b'3,,\r\n')
    assert m.records_in == m.records_out == 4


def test_csv_missing_column_is_config_error():
    with pytest.raises(Exception, match="lacks configured columns"):
        run(b"a,b\n1,2\n", CSV_CFG)


def test_csv_detect_reports_column():
    report, _, _ = run(b"note\nssn 123-45-6789\n", CSV_CFG, run_detect)
    rec = json.loads(report)
    assert rec["record_index"] == 1 and rec["field"] == "note"


# -- parallelism ----------------------------------------------------------------------


def corpus(n):
    lines = []
    for i in range(n):
        lines.append(f"user {i} phone 555-{i % 1000:03d}-{i:04d} ssn 123-45-{i:04d}\n".encode())
        if i % 97 == 0:
            lines.append(b"broken \xff\n")
    return b"".join(lines)


@pytest.mark.parametrize("executor", ["thread", "process"])
def test_parallel_matches_serial(executor):
    ring = Keyring({"k1": KEY_A})
    policy = validate_policy({"types": {"PHONE_NUMBER": {"strategy": "PSEUDONYMIZE",
                                                         "mode": "DETERMINISTIC", "key_id": "k1"}}})
    data = corpus(600)
    serial = Config(policy=policy, chunk_size=16)
    parallel = Config(policy=policy, chunk_size=16, parallelism=3)
    a = run(data, serial, engine=serial.build_engine(ring))
    b = run(data, parallel, engine=parallel.build_engine(ring), executor=executor)
    assert a[0] == b[0] and a[1] == b[1]
    assert a[2].counters() == b[2].counters()
    assert a[2].records_dead_lettered == 7


# -- metrics ----------------------------------------------------------------------------


metrics = st.builds(
    lambda c, d, e: MetricsReport(*c, detections_by_type=d, masks_by_strategy=d.copy(), warnings=d.copy(),
                                  elapsed_ms=e),
    st.tuples(*[st.integers(0, 100)] * 5),
    st.dictionaries(st.sampled_from(["SSN", "EMAIL"]), st.integers(1, 5)).map(Counter),
    st.floats(0, 1e4),
)


@given(metrics, metrics, metrics)
def test_merge_metrics_laws(a, b, c):
    zero = MetricsReport()
    assert merge_metrics(a, zero) == a
    assert merge_metrics(a, b) == merge_metrics(b, a)
    assert merge_metrics(merge_metrics(a, b), c) == merge_metrics(a, merge_metrics(b, c))
