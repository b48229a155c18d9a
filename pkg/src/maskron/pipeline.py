"""Streaming write path: read records, detect, resolve, mask, write in order.

A record is one line (``text_lines``), one JSON document per line (``ndjson``,
only the configured string fields are scanned) or one CSV row (``csv``, only
the configured columns; the first row is the header).  Bytes outside the
scanned values are copied through unchanged.

Records are cut into chunks and numbered by the reader.  With
``parallelism > 1`` chunks go to a process pool; results come back through a
bounded window that is drained strictly in submission order, so output order
matches input order at any worker count.  A record that cannot be processed
goes to the dead-letter channel with its reason; the run keeps going.
"""

from __future__ import annotations

import io
import json
import logging
import os
import re
import sys
import time
from collections import Counter, deque
from collections.abc import Iterable, Iterator, Mapping, Sequence
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, field
from json.decoder import scanstring
from typing import Any, BinaryIO

from maskron.bloom import (
    BloomFilter,
    DictionaryConfig,
    bloom_load_dictionary,
    load_filter,
    scan_dictionary,
)
from maskron.errors import (
    ConfigError,
    CorruptFormat,
    EmptyDictionary,
    ExternalError,
    MaskingError,
    MaskronError,
    ParseError,
    ValidationError,
)
from maskron.evaluation import bundled_names
from maskron.external import ExternalEndpoint, RemoteDetector
from maskron.masking import OPAQUE_RE, Keyring, apply_policy, load_keyring
from maskron.model import (
    Detection,
    MaskedDocument,
    PolicyTable,
    TextIndex,
    policy_refs,
    spans_overlap,
    validate_policy,
)
from maskron.regex_detect import RuleSet, compile_ruleset, merge_rules, scan_regex
from maskron.resolve import DEFAULT_PRECEDENCE, resolve, type_conflicts

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)

KEYRING_ENV = "MASKRON_KEYRING"
BUNDLED_NAMES = "bundled:names"

FORMATS = ("text_lines", "ndjson", "csv")


# -- engine ----------------------------------------------------------------------


@dataclass
class DictionaryDetector:
    cfg: DictionaryConfig
    filter: BloomFilter

    def scan(self, text: str, index: TextIndex) -> list[Detection]:
        return scan_dictionary(text, self.filter, self.cfg, index)


@dataclass
class Engine:
    """Detectors plus policy; turns one string into a masked string."""

    ruleset: RuleSet | None = None
    dictionaries: Sequence[DictionaryDetector] = ()
    remotes: Sequence[RemoteDetector] = ()
    policy: PolicyTable = field(default_factory=PolicyTable)
    keyring: Keyring | None = None
    precedence: Sequence[str] = DEFAULT_PRECEDENCE

    def candidates(self, text: str, warnings: Counter | None = None) -> list[Detection]:
        """Raw detections from every detector, minus those touching our own tokens."""
        if not text:
            return []
        index = TextIndex(text)
        found: list[Detection] = []
        if self.ruleset is not None:
            found.extend(scan_regex(text, self.ruleset, index))
        for dd in self.dictionaries:
            found.extend(dd.scan(text, index))
        for remote in self.remotes:
            scan = remote.detect(text)
            found.extend(scan.detections)
            if warnings is not None:
                warnings.update(scan.warnings)
        opaque = [index.span(m.start(), m.end()) for m in OPAQUE_RE.finditer(text)]
        if opaque:
            found = [d for d in found if not any(spans_overlap(d.span, o) for o in opaque)]
        return found

    def detect(self, text: str, warnings: Counter | None = None) -> list[Detection]:
        found = self.candidates(text, warnings)
        kept = resolve(found, self.policy, self.precedence)
        if warnings is not None:
            conflicts = type_conflicts(found, kept)
            if conflicts:
                warnings["TypeConflict"] += conflicts
        return kept

    def mask(self, text: str, warnings: Counter | None = None) -> MaskedDocument:
        return apply_policy(text, self.detect(text, warnings), self.policy, self.keyring)


# -- config ------------------------------------------------------------------------


@dataclass
class DictionarySource:
    cfg: DictionaryConfig
    path: str
    target_fpr: float = 0.001
    prebuilt: bool = False

    def load(self) -> DictionaryDetector:
        if self.prebuilt:
            return DictionaryDetector(self.cfg, load_filter(self.path))
        source = bundled_names() if self.path == BUNDLED_NAMES else self.path
        return DictionaryDetector(self.cfg, bloom_load_dictionary(source, self.cfg, self.target_fpr))


@dataclass
class Config:
    input_format: str = "text_lines"
    fields: tuple[str, ...] = ()
    columns: tuple[str, ...] = ()
    regex_enabled: bool = True
    regex_rules: tuple = ()
    regex_defaults: bool = True
    dictionaries: tuple[DictionarySource, ...] = ()
    endpoints: tuple[ExternalEndpoint, ...] = ()
    max_in_flight: int = 8
    precedence: tuple[str, ...] = DEFAULT_PRECEDENCE
    policy: PolicyTable = field(default_factory=PolicyTable)
    keyring_path: str | None = None
    parallelism: int = 1
    chunk_size: int = 256
    metrics_path: str | None = None
    dead_letter_path: str | None = None

    def __post_init__(self):
        if self.input_format not in FORMATS:
            raise ValidationError(f"input format must be one of {FORMATS}, got {self.input_format!r}")
        if self.input_format == "ndjson" and not self.fields:
            raise ValidationError("ndjson input needs at least one field to scan")
        if self.input_format == "csv" and not self.columns:
            raise ValidationError("csv input needs at least one column to scan")
        if not isinstance(self.parallelism, int) or self.parallelism < 1:
            raise ValidationError(f"parallelism must be >= 1, got {self.parallelism!r}")
        if not isinstance(self.chunk_size, int) or self.chunk_size < 1:
            raise ValidationError("chunk_size must be >= 1")

    def load_keyring(self) -> Keyring | None:
        path = self.keyring_path or os.environ.get(KEYRING_ENV)
        return load_keyring(path) if path else None

    def build_engine(self, keyring: Keyring | None = None) -> Engine:
        if keyring is None:
            keyring = self.load_keyring()
        ruleset = None
        if self.regex_enabled:
            rules = merge_rules(self.regex_rules) if self.regex_defaults else list(self.regex_rules)
            ruleset = compile_ruleset(rules)
        return Engine(
            ruleset=ruleset,
            dictionaries=[d.load() for d in self.dictionaries],
            remotes=[RemoteDetector(ep, self.max_in_flight) for ep in self.endpoints],
            policy=self.policy,
            keyring=keyring,
            precedence=self.precedence,
        )


def _table(raw: Mapping, key: str) -> Mapping:
    value = raw.get(key, {})
    if not isinstance(value, Mapping):
        raise ValidationError(f"[{key}] must be a table")
    return value


def _reject_unknown(raw: Mapping, allowed: Iterable[str], where: str) -> None:
    extra = sorted(set(raw) - set(allowed))
    if extra:
        raise ValidationError(f"unknown keys in {where}: {', '.join(extra)}")


def config_from_mapping(raw: Mapping[str, Any], base_dir: str = ".",
                        check_files: bool = True) -> Config:
    """Validate a parsed config tree.  Relative paths resolve against ``base_dir``."""
    _reject_unknown(raw, ("input", "detectors", "policy", "runtime"), "config")

    def path(p: str | None) -> str | None:
        if p is None or p == BUNDLED_NAMES:
            return p
        p = os.path.expanduser(p)
        return p if os.path.isabs(p) else os.path.join(base_dir, p)

    def must_exist(p: str | None, what: str) -> None:
        if check_files and p is not None and p != BUNDLED_NAMES and not os.path.exists(p):
            raise ValidationError(f"{what} not found: {p}")

    inp = _table(raw, "input")
    _reject_unknown(inp, ("format", "fields", "columns"), "[input]")
    fmt = str(inp.get("format", "text_lines")).lower()

    det = _table(raw, "detectors")
    _reject_unknown(det, ("precedence", "regex", "dictionary", "external"), "[detectors]")
    regex = det.get("regex", {})
    _reject_unknown(regex, ("enabled", "defaults", "rules"), "[detectors.regex]")
    rules = tuple(regex.get("rules", ()))
    merged = merge_rules(rules) if regex.get("defaults", True) else list(rules)
    compile_ruleset(merged)  # surface BadPattern / DuplicateRuleId at load time

    dictionaries = []
    for d in det.get("dictionary", ()):
        _reject_unknown(d, ("name", "source", "filter", "pii_type", "normalization",
                            "token_pattern", "confidence", "target_fpr"), "[[detectors.dictionary]]")
        if ("source" in d) == ("filter" in d):
            raise ValidationError("a dictionary needs exactly one of 'source' or 'filter'")
        cfg = DictionaryConfig(
            pii_type=d.get("pii_type", "PERSON_NAME"),
            normalization=d.get("normalization", "LOWERCASE"),
            token_pattern=d.get("token_pattern", DictionaryConfig.token_pattern),
            confidence=d.get("confidence", 0.7),
            name=d.get("name", "names"),
        )
        p = path(d.get("source", d.get("filter")))
        must_exist(p, "dictionary")
        fpr = d.get("target_fpr", 0.001)
        if not isinstance(fpr, (int, float)) or not 0 < fpr < 1:
            raise ValidationError(f"target_fpr must be in (0, 1), got {fpr!r}")
        dictionaries.append(DictionarySource(cfg, p, fpr, prebuilt="filter" in d))
    names = [d.cfg.name for d in dictionaries]
    if len(set(names)) != len(names):
        raise ValidationError("dictionary names must be unique")

    ext = det.get("external", {})
    _reject_unknown(ext, ("external_data_leaves_boundary", "max_in_flight", "endpoints"),
                    "[detectors.external]")
    ack = ext.get("external_data_leaves_boundary", False)
    if not isinstance(ack, bool):
        raise ValidationError("external_data_leaves_boundary must be true or false")
    endpoints = []
    for e in ext.get("endpoints", ()):
        _reject_unknown(e, ("name", "url", "timeout_ms", "max_retries", "confidence_floor",
                            "api_key_env"), "[[detectors.external.endpoints]]")
        if "name" not in e or "url" not in e:
            raise ValidationError("external endpoints need 'name' and 'url'")
        endpoints.append(ExternalEndpoint(boundary_acknowledged=ack, **e))
    if endpoints and not ack:
        raise ValidationError(
            "external endpoints send text outside this process; set "
            "external_data_leaves_boundary = true to acknowledge"
        )

    rt = _table(raw, "runtime")
    _reject_unknown(rt, ("parallelism", "chunk_size", "keyring", "metrics", "dead_letter"),
                    "[runtime]")
    keyring_path = path(rt.get("keyring") or os.environ.get(KEYRING_ENV))
    must_exist(keyring_path, "keyring")
    keyring = load_keyring(keyring_path) if keyring_path and check_files else None

    policy = validate_policy(_table(raw, "policy"), keyring)
    keys, salts = policy_refs(policy)
    if (keys or salts) and keyring_path is None:
        raise ValidationError("policy references keys or salts but no keyring is configured")

    return Config(
        input_format=fmt,
        fields=tuple(inp.get("fields", ())),
        columns=tuple(inp.get("columns", ())),
        regex_enabled=regex.get("enabled", True),
        regex_rules=rules,
        regex_defaults=regex.get("defaults", True),
        dictionaries=tuple(dictionaries),
        endpoints=tuple(endpoints),
        max_in_flight=ext.get("max_in_flight", 8),
        precedence=tuple(det.get("precedence", DEFAULT_PRECEDENCE)),
        policy=policy,
        keyring_path=keyring_path,
        parallelism=rt.get("parallelism", 1),
        chunk_size=rt.get("chunk_size", 256),
        metrics_path=path(rt.get("metrics")),
        dead_letter_path=path(rt.get("dead_letter")),
    )


_TOML_LINE_RE = re.compile(r"line (\d+)")


def load_config(path: str | os.PathLike) -> Config:
    path = os.fspath(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ValidationError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        m = _TOML_LINE_RE.search(str(exc))
        raise ParseError(int(m.group(1)) if m else None, str(exc)) from None
    try:
        return config_from_mapping(raw, os.path.dirname(os.path.abspath(path)))
    except (CorruptFormat, EmptyDictionary) as exc:
        raise ValidationError(str(exc)) from exc


# -- metrics ------------------------------------------------------------------------


_COUNTERS = ("records_in", "records_out", "records_dead_lettered", "bytes_in", "bytes_out")
_MAPS = ("detections_by_type", "masks_by_strategy", "warnings")


@dataclass
class MetricsReport:
    records_in: int = 0
    records_out: int = 0
    records_dead_lettered: int = 0
    bytes_in: int = 0
    bytes_out: int = 0
    detections_by_type: Counter = field(default_factory=Counter)
    masks_by_strategy: Counter = field(default_factory=Counter)
    warnings: Counter = field(default_factory=Counter)
    elapsed_ms: float = 0.0

    @property
    def throughput_mb_s(self) -> float:
        if self.elapsed_ms <= 0:
            return 0.0
        return self.bytes_in / 1e6 / (self.elapsed_ms / 1000)

    def counters(self) -> dict:
        """Everything except timing; equal across runs over the same input."""
        out = {k: getattr(self, k) for k in _COUNTERS}
        out.update({k: dict(sorted(getattr(self, k).items())) for k in _MAPS})
        return out

    def as_dict(self) -> dict:
        out = self.counters()
        out["elapsed_ms"] = round(self.elapsed_ms, 3)
        out["throughput_mb_s"] = round(self.throughput_mb_s, 6)
        return out

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)


def merge_metrics(a: MetricsReport, b: MetricsReport) -> MetricsReport:
    return MetricsReport(
        **{k: getattr(a, k) + getattr(b, k) for k in _COUNTERS},
        **{k: getattr(a, k) + getattr(b, k) for k in _MAPS},
        elapsed_ms=max(a.elapsed_ms, b.elapsed_ms),
    )


# -- record formats --------------------------------------------------------------------


class RecordError(MaskronError):
    """A single record could not be processed; it goes to the dead-letter channel."""


def _split_terminator(raw: bytes) -> tuple[bytes, bytes]:
    if raw.endswith(b"\r\n"):
        return raw[:-2], b"\r\n"
    if raw.endswith(b"\n"):
        return raw[:-1], b"\n"
    return raw, b""


def _decode(body: bytes) -> str:
    try:
        return body.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise RecordError(f"invalid UTF-8 at byte {exc.start}") from None


_JSON_SCALAR_RE = re.compile(
    r"-?(?:0|[1-9]\d*)(?:\.\d+)?(?:[eE][+-]?\d+)?|true|false|null|NaN|-?Infinity"
)
_WS_RE = re.compile(r"[ \t\n\r]*")


def json_string_spans(doc: str, paths: Iterable[tuple[str, ...]]) -> list[tuple[tuple[str, ...], int, int]]:
    """Character spans of the string literals (quotes included) at ``paths``.

    ``doc`` must already be valid JSON.  Arrays are transparent: a path that
    reaches an array applies to each element.
    """
    targets = set(paths)
    prefixes = {p[:i] for p in targets for i in range(len(p) + 1)}
    found = []

    def ws(i):
        return _WS_RE.match(doc, i).end()

    def value(i, path):
        i = ws(i)
        c = doc[i]
        if c == "{":
            i = ws(i + 1)
            if doc[i] == "}":
                return i + 1
            while True:
                key, i = scanstring(doc, i + 1)
                i = ws(i) + 1  # ':'
                i = value(i, path + (key,) if path is not None and path + (key,) in prefixes else None)
                i = ws(i)
                if doc[i] == "}":
                    return i + 1
                i = ws(i + 1)  # ','
        if c == "[":
            i = ws(i + 1)
            if doc[i] == "]":
                return i + 1
            while True:
                i = ws(value(i, path))
                if doc[i] == "]":
                    return i + 1
                i += 1
        if c == '"':
            _, end = scanstring(doc, i + 1)
            if path in targets:
                found.append((path, i, end))
            return end
        return _JSON_SCALAR_RE.match(doc, i).end()

    value(0, ())
    return found


def _csv_cells(line: str) -> list[tuple[int, int, str, bool]]:
    """(start, end, value, quoted) for each cell of one CSV record."""
    cells = []
    i, n = 0, len(line)
    while True:
        if i < n and line[i] == '"':
            j = i + 1
            while True:
                j = line.find('"', j)
                if j < 0:
                    raise RecordError("unterminated quoted CSV field")
                if j + 1 < n and line[j + 1] == '"':
                    j += 2
                    continue
                break
            end = j + 1
            if end < n and line[end] != ",":
                raise RecordError(f"unexpected character after quoted field at {end}")
            cells.append((i, end, line[i + 1 : j].replace('""', '"'), True))
        else:
            end = line.find(",", i)
            end = n if end < 0 else end
            cells.append((i, end, line[i:end], False))
        if end >= n:
            return cells
        i = end + 1


def _csv_quote(value: str, was_quoted: bool) -> str:
    if was_quoted or any(c in value for c in ',"\r\n'):
        return '"' + value.replace('"', '""') + '"'
    return value


def iter_records(stream: BinaryIO, fmt: str) -> Iterator[bytes]:
    """Raw records including their line terminators."""
    if fmt != "csv":
        yield from stream
        return
    pending = b""
    for line in stream:
        pending += line
        if pending.count(b'"') % 2 == 0:
            yield pending
            pending = b""
    if pending:
        yield pending


# -- record processing -------------------------------------------------------------------


@dataclass
class _Job:
    mode: str  # "mask" | "detect"
    fmt: str
    fields: tuple[tuple[str, ...], ...] = ()
    column_index: dict[int, str] = field(default_factory=dict)


@dataclass
class _Outcome:
    output: bytes = b""
    dead_reason: str | None = None


def _scan_value(engine: Engine, job: _Job, text: str, metrics: MetricsReport,
                report: list[dict], where: str | None) -> str:
    if job.mode == "detect":
        for d in engine.detect(text, metrics.warnings):
            metrics.detections_by_type[d.pii_type.name] += 1
            rec = {"start": d.span.start, "end": d.span.end, "type": d.pii_type.name,
                   "confidence": d.confidence, "detector_id": d.detector_id}
            if where is not None:
                rec["field"] = where
            report.append(rec)
        return text
    doc = engine.mask(text, metrics.warnings)
    for entry in doc.audit:
        metrics.detections_by_type[entry.pii_type.name] += 1
        metrics.masks_by_strategy[entry.strategy.value] += 1
    if doc.escapes:
        metrics.warnings["EscapedSentinel"] += doc.escapes
    return doc.text


def _process_record(engine: Engine, job: _Job, raw: bytes, metrics: MetricsReport,
                    report: list[dict]) -> bytes:
    body, term = _split_terminator(raw)
    if job.fmt == "text_lines":
        return _scan_value(engine, job, _decode(body), metrics, report, None).encode() + term

    text = _decode(body)
    if job.fmt == "ndjson":
        if not text.strip():
            return raw
        try:
            json.loads(text)
        except json.JSONDecodeError as exc:
            raise RecordError(f"invalid JSON: {exc.msg} at column {exc.colno}") from None
        pieces, cursor = [], 0
        for path, start, end in json_string_spans(text, job.fields):
            original = json.loads(text[start:end])
            new = _scan_value(engine, job, original, metrics, report, ".".join(path))
            if new != original:
                pieces += [text[cursor:start], json.dumps(new, ensure_ascii=False)]
                cursor = end
        return ("".join(pieces) + text[cursor:]).encode() + term if pieces else raw

    # csv data row
    pieces, cursor = [], 0
    for i, (start, end, value, quoted) in enumerate(_csv_cells(text)):
        column = job.column_index.get(i)
        if column is None or not value:
            continue
        new = _scan_value(engine, job, value, metrics, report, column)
        if new != value:
            pieces += [text[cursor:start], _csv_quote(new, quoted)]
            cursor = end
    return ("".join(pieces) + text[cursor:]).encode() + term if pieces else raw


def _process_chunk(engine: Engine, job: _Job, chunk: Sequence[tuple[int, bytes]]):
    metrics = MetricsReport()
    outcomes = []
    for seq, raw in chunk:
        metrics.records_in += 1
        metrics.bytes_in += len(raw)
        report: list[dict] = []
        try:
            out = _process_record(engine, job, raw, metrics, report)
        except (RecordError, MaskingError, ExternalError, ValueError) as exc:
            metrics.records_dead_lettered += 1
            metrics.warnings["DeadLetter:" + type(exc).__name__] += 1
            outcomes.append(_Outcome(dead_reason=f"{type(exc).__name__}: {exc}"))
            continue
        if job.mode == "detect":
            out = b"".join(
                json.dumps({"record_index": seq, **rec}).encode() + b"\n" for rec in report
            )
        metrics.records_out += 1
        metrics.bytes_out += len(out)
        outcomes.append(_Outcome(out))
    return outcomes, metrics


_WORKER_ENGINE: Engine | None = None


def _init_worker(engine: Engine) -> None:
    global _WORKER_ENGINE
    _WORKER_ENGINE = engine


def _worker_chunk(job: _Job, chunk):
    return _process_chunk(_WORKER_ENGINE, job, chunk)


def _chunks(records: Iterable[bytes], size: int, first_seq: int) -> Iterator[list[tuple[int, bytes]]]:
    chunk = []
    for seq, raw in enumerate(records, first_seq):
        chunk.append((seq, raw))
        if len(chunk) == size:
            yield chunk
            chunk = []
    if chunk:
        yield chunk


def _csv_header(raw: bytes, columns: Sequence[str]) -> dict[int, str]:
    body, _ = _split_terminator(raw)
    header = [value for _, _, value, _ in _csv_cells(_decode(body))]
    missing = [c for c in columns if c not in header]
    if missing:
        raise ConfigError(f"CSV header lacks configured columns: {', '.join(missing)}")
    return {i: name for i, name in enumerate(header) if name in columns}


def _run(mode: str, input: BinaryIO, output: BinaryIO, config: Config, engine: Engine | None,
         dead_letter: BinaryIO | None, executor: str) -> MetricsReport:
    started = time.perf_counter()
    engine = engine or config.build_engine()
    job = _Job(mode, config.input_format, tuple(tuple(f.split(".")) for f in config.fields))
    metrics = MetricsReport()
    records = iter_records(input, config.input_format)
    first_seq = 0

    if config.input_format == "csv":
        header = next(records, None)
        if header is not None:
            job.column_index = _csv_header(header, config.columns)
            metrics.records_in = metrics.records_out = 1
            metrics.bytes_in = len(header)
            if mode == "mask":
                output.write(header)
                metrics.bytes_out = len(header)
            first_seq = 1

    def emit(chunk, result):
        nonlocal metrics
        outcomes, part = result
        metrics = merge_metrics(metrics, part)
        for (seq, raw), outcome in zip(chunk, outcomes):
            if outcome.dead_reason is None:
                output.write(outcome.output)
            elif dead_letter is not None:
                dead_letter.write(json.dumps({
                    "record_index": seq,
                    "reason": outcome.dead_reason,
                    "raw": raw.decode("utf-8", errors="replace"),
                }, ensure_ascii=False).encode() + b"\n")
            else:
                log.warning("record %d dead-lettered: %s", seq, outcome.dead_reason)

    chunks = _chunks(records, config.chunk_size, first_seq)
    if config.parallelism == 1:
        for chunk in chunks:
            emit(chunk, _process_chunk(engine, job, chunk))
    else:
        pool: Executor
        if executor == "process":
            pool = ProcessPoolExecutor(config.parallelism, initializer=_init_worker,
                                       initargs=(engine,))
            submit = lambda chunk: pool.submit(_worker_chunk, job, chunk)  # noqa: E731
        else:
            pool = ThreadPoolExecutor(config.parallelism)
            submit = lambda chunk: pool.submit(_process_chunk, engine, job, chunk)  # noqa: E731
        window: deque = deque()
        depth = 2 * config.parallelism
        with pool:
            for chunk in chunks:
                window.append((chunk, submit(chunk)))
                if len(window) >= depth:
                    head, fut = window.popleft()
                    emit(head, fut.result())
            while window:
                head, fut = window.popleft()
                emit(head, fut.result())

    output.flush()
    metrics.elapsed_ms = (time.perf_counter() - started) * 1000
    return metrics


def run_mask(input: BinaryIO, output: BinaryIO, config: Config, *, engine: Engine | None = None,
             dead_letter: BinaryIO | None = None, executor: str = "process") -> MetricsReport:
    """Mask every record of ``input`` into ``output``; returns the run's metrics."""
    return _run("mask", input, output, config, engine, dead_letter, executor)


def run_detect(input: BinaryIO, output: BinaryIO, config: Config, *, engine: Engine | None = None,
               dead_letter: BinaryIO | None = None, executor: str = "process") -> MetricsReport:
    """Write one NDJSON detection record per resolved detection; input is not rewritten."""
    return _run("detect", input, output, config, engine, dead_letter, executor)


def mask_text(text: str, config: Config | None = None, engine: Engine | None = None) -> str:
    """Convenience: mask a block of text line by line."""
    config = config or Config()
    out = io.BytesIO()
    run_mask(io.BytesIO(text.encode()), out, config, engine=engine)
    return out.getvalue().decode()
