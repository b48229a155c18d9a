"""Detector quality measurement against annotated corpora.

Corpus files are NDJSON, one document per line::

    {"text": "...", "entities": [{"start": 3, "end": 8, "type": "PERSON_NAME"}]}

with UTF-8 byte offsets.  Precision and recall use the 0/0 -> 1.0 convention
(a document with no predictions and no gold is perfect); F1 is 0 whenever
precision + recall is 0.
"""

from __future__ import annotations

import json
import random
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from importlib import resources

from maskron.errors import BadSpan, InvalidPiiType, LengthMismatch, ParseError
from maskron.model import Detection, PiiType, Span, TextIndex, spans_overlap


@dataclass(frozen=True)
class AnnotatedDoc:
    text: str
    gold: tuple[tuple[Span, PiiType], ...] = ()

    def to_json(self) -> str:
        return json.dumps(
            {
                "text": self.text,
                "entities": [
                    {"start": s.start, "end": s.end, "type": t.name} for s, t in self.gold
                ],
            },
            ensure_ascii=False,
        )


@dataclass(frozen=True)
class TypeScore:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return 1.0 if self.tp + self.fp == 0 else self.tp / (self.tp + self.fp)

    @property
    def recall(self) -> float:
        return 1.0 if self.tp + self.fn == 0 else self.tp / (self.tp + self.fn)

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 0.0 if p + r == 0 else 2 * p * r / (p + r)

    def __add__(self, other: TypeScore) -> TypeScore:
        return TypeScore(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)

    def as_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "precision": self.precision,
                "recall": self.recall, "f1": self.f1}


@dataclass(frozen=True)
class Metrics:
    per_type: Mapping[PiiType, TypeScore] = field(default_factory=dict)

    @property
    def micro(self) -> TypeScore:
        return sum(self.per_type.values(), TypeScore())

    def as_dict(self) -> dict:
        return {
            "per_type": {t.name: s.as_dict() for t, s in sorted(self.per_type.items())},
            "micro": self.micro.as_dict(),
        }


def _check_gold(text: str, entities, line: int) -> tuple[tuple[Span, PiiType], ...]:
    if not isinstance(entities, list):
        raise BadSpan(line, "'entities' must be a list")
    index = TextIndex(text)
    gold = []
    for e in entities:
        if not isinstance(e, dict):
            raise BadSpan(line, f"entity must be an object, got {e!r}")
        start, end = e.get("start"), e.get("end")
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in (start, end)):
            raise BadSpan(line, f"entity offsets must be integers: {e!r}")
        if not 0 <= start < end:
            raise BadSpan(line, f"empty or negative span [{start}, {end})")
        span = Span(start, end)
        problem = index.check(span)
        if problem:
            raise BadSpan(line, f"span [{start}, {end}) {problem.replace('_', ' ')}")
        try:
            pii_type = PiiType(e.get("type"))
        except InvalidPiiType as exc:
            raise BadSpan(line, str(exc)) from None
        gold.append((span, pii_type))
    gold.sort(key=lambda g: (g[0].start, g[0].end))
    for (a, _), (b, _) in zip(gold, gold[1:]):
        if spans_overlap(a, b):
            raise BadSpan(line, f"gold spans [{a.start}, {a.end}) and [{b.start}, {b.end}) overlap")
    return tuple(gold)


def parse_corpus(lines: Iterable[str]) -> list[AnnotatedDoc]:
    docs = []
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(lineno, exc.msg) from None
        if not isinstance(raw, dict) or not isinstance(raw.get("text"), str):
            raise ParseError(lineno, "expected an object with a string 'text'")
        docs.append(AnnotatedDoc(raw["text"], _check_gold(raw["text"], raw.get("entities", []), lineno)))
    return docs


def load_corpus(path) -> list[AnnotatedDoc]:
    with open(path, encoding="utf-8") as fh:
        return parse_corpus(fh)


def save_corpus(docs: Iterable[AnnotatedDoc], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(doc.to_json() + "\n")


def _as_pairs(preds) -> list[tuple[Span, PiiType]]:
    out = []
    for p in preds:
        if isinstance(p, Detection):
            out.append((p.span, p.pii_type))
        else:
            span, typ = p
            out.append((span, typ if isinstance(typ, PiiType) else PiiType(typ)))
    return out


def score_doc(preds, gold: Sequence[tuple[Span, PiiType]], mode: str = "EXACT") -> dict[PiiType, TypeScore]:
    mode = mode.upper()
    if mode not in ("EXACT", "OVERLAP"):
        raise ValueError(f"mode must be EXACT or OVERLAP, got {mode!r}")
    preds = sorted(_as_pairs(preds), key=lambda p: (p[0].start, p[0].end, p[1].name))
    gold = sorted(gold, key=lambda g: (g[0].start, g[0].end))
    matched = [False] * len(gold)
    tp: Counter = Counter()
    fp: Counter = Counter()
    for span, typ in preds:
        hit = None
        for j, (gspan, gtype) in enumerate(gold):
            if matched[j] or gtype != typ:
                continue
            if (gspan == span) if mode == "EXACT" else spans_overlap(gspan, span):
                hit = j
                break
        if hit is None:
            fp[typ] += 1
        else:
            matched[hit] = True
            tp[typ] += 1
    fn = Counter(gtype for (_, gtype), m in zip(gold, matched) if not m)
    types = set(tp) | set(fp) | set(fn)
    return {t: TypeScore(tp[t], fp[t], fn[t]) for t in types}


def score(predictions: Sequence, gold: Sequence[AnnotatedDoc], mode: str = "EXACT") -> Metrics:
    """Score per-document predictions (Detections or ``(Span, type)`` pairs)."""
    if len(predictions) != len(gold):
        raise LengthMismatch(f"{len(predictions)} prediction lists for {len(gold)} documents")
    totals: dict[PiiType, TypeScore] = {}
    for preds, doc in zip(predictions, gold):
        for t, s in score_doc(preds, doc.gold, mode).items():
            totals[t] = totals.get(t, TypeScore()) + s
    return Metrics(totals)


# -- synthetic corpora ---------------------------------------------------------------


def bundled_names() -> list[str]:
    text = resources.files("maskron").joinpath("data/names.txt").read_text(encoding="utf-8")
    return [ln.strip() for ln in text.splitlines() if ln.strip()]


def _digits(rng: random.Random, n: int) -> str:
    return "".join(rng.choice("0123456789") for _ in range(n))


def luhn_complete(prefix: str) -> str:
    """Append the check digit that makes ``prefix`` Luhn-valid."""
    total = 0
    for i, ch in enumerate(reversed(prefix)):
        d = int(ch)
        if i % 2 == 0:
            d *= 2
            if d > 9:
                d -= 9
        total += d
    return prefix + str((10 - total % 10) % 10)


_DOMAINS = ("example.com", "mail.example.org", "corp.test", "inbox.net", "acme.io")


def _gen_phone(rng, names):
    a, b, c = _digits(rng, 3), _digits(rng, 3), _digits(rng, 4)
    return rng.choice((f"({a}) {b}-{c}", f"{a}-{b}-{c}", f"({a}) {b} {c}"))


def _gen_ssn(rng, names):
    return f"{_digits(rng, 3)}-{_digits(rng, 2)}-{_digits(rng, 4)}"


def _gen_email(rng, names):
    first, last = rng.choice(names).lower(), rng.choice(names).lower()
    local = rng.choice((f"{first}.{last}", f"{first}{_digits(rng, 2)}", f"{first[0]}{last}"))
    return f"{local}@{rng.choice(_DOMAINS)}"


def _gen_card(rng, names):
    return luhn_complete(rng.choice("45") + _digits(rng, 14))


def _gen_ip(rng, names):
    return ".".join(str(rng.randint(1, 254)) for _ in range(4))


def _gen_name(rng, names):
    return rng.choice(names)


GENERATORS = {
    PiiType("PHONE_NUMBER"): _gen_phone,
    PiiType("SSN"): _gen_ssn,
    PiiType("EMAIL"): _gen_email,
    PiiType("CREDIT_CARD"): _gen_card,
    PiiType("IP_ADDRESS"): _gen_ip,
    PiiType("PERSON_NAME"): _gen_name,
}

_LEVELS = ("INFO", "WARN", "DEBUG", "ERROR")
_SERVICES = ("auth", "billing", "gateway", "crm", "support", "ingest")
_CLAUSES = (
    "customer {} opened a ticket",
    "callback requested by {}",
    "record for {} updated",
    "lookup on {} returned 2 rows",
    "flagged {} for review",
    "sync of {} completed",
    "notification queued for {}",
    "value {} failed validation",
)


def generate_synthetic_corpus(
    seed: int,
    n_docs: int,
    mix: Mapping[str | PiiType, float] | None = None,
    min_entities: int = 1,
    max_entities: int = 3,
) -> list[AnnotatedDoc]:
    """Deterministic log-like documents with planted PII and exact gold spans."""
    if n_docs < 1:
        raise ValueError("n_docs must be >= 1")
    if not 0 <= min_entities <= max_entities:
        raise ValueError("need 0 <= min_entities <= max_entities")
    if mix is None:
        mix = {t: 1.0 for t in GENERATORS}
    weights = {(t if isinstance(t, PiiType) else PiiType(t)): float(w) for t, w in mix.items() if w > 0}
    unsupported = [t.name for t in weights if t not in GENERATORS]
    if unsupported or not weights:
        raise ValueError(f"cannot generate types {unsupported or 'none'}")
    types = sorted(weights)
    type_weights = [weights[t] for t in types]

    rng = random.Random(seed)
    names = bundled_names()
    docs = []
    for _ in range(n_docs):
        parts = [
            f"2024-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d}T{rng.randint(0, 23):02d}:"
            f"{rng.randint(0, 59):02d}:{rng.randint(0, 59):02d}Z {rng.choice(_LEVELS)} "
            f"{rng.choice(_SERVICES)}: "
        ]
        offset = len(parts[0].encode())
        gold = []
        for i in range(rng.randint(min_entities, max_entities)):
            typ = rng.choices(types, type_weights)[0]
            value = GENERATORS[typ](rng, names)
            before, after = rng.choice(_CLAUSES).split("{}")
            if i:
                before = "; " + before
            offset += len(before.encode())
            gold.append((Span(offset, offset + len(value.encode())), typ))
            parts.extend((before, value, after))
            offset += len(value.encode()) + len(after.encode())
        parts.append(f" (req {rng.randrange(16**6):06x})")
        docs.append(AnnotatedDoc("".join(parts), tuple(gold)))
    return docs
