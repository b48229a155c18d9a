"""Masking strategies, the keyring, and the reversible token format.

Token grammar (bit-exact)::

    token   := "[[" TYPE ":" METHOD ":" ID ":" PAYLOAD "]]"
    METHOD  := "E" (AES-256-GCM, reversible) | "H" (salted SHA-256, one-way)
    ID      := [A-Za-z0-9_.-]+            key id (E) or salt id (H)
    PAYLOAD := [A-Za-z0-9_-]+             E: unpadded base64url(nonce || ciphertext || tag)
                                          H: lowercase hex digest prefix
    escape  := "[[:L:]]"                  a literal "[[" from the input

Redaction keeps the bare ``<TYPE>`` placeholder.  Any ``[[`` that was in the
input (outside a generated token) is written as the escape, so :func:`unmask`
can never mistake input text for a token.  For ``E`` tokens the string
``TYPE:ID`` is bound as associated data, so editing either fails
authentication.
"""

from __future__ import annotations

import base64
import binascii
import hashlib
import hmac
import json
import os
import re
import secrets
import uuid
from collections import Counter
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from maskron.errors import (
    AuthFailure,
    EntropyUnavailable,
    MaskingError,
    MissingKey,
    NotAnEmail,
    SpanMaskingError,
    ValidationError,
    WeakSalt,
)
from maskron.model import (
    AuditEntry,
    Detection,
    MaskedDocument,
    PiiType,
    PolicyEntry,
    PolicyTable,
    Span,
    Strategy,
    TextIndex,
)

KEY_BYTES = 32
SALT_BYTES = 16
MIN_SALT_BYTES = 16
NONCE_BYTES = 12
TAG_BYTES = 16
HASH_HEX_CHARS = 16

SENTINEL = "[["
ESCAPE = "[[:L:]]"

_ID_RE = re.compile(r"[A-Za-z0-9_.-]+")
_TYPE = r"CUSTOM:[A-Z0-9_]+|[A-Z][A-Z0-9_]*"
TOKEN_RE = re.compile(
    r"\[\[(?P<type>" + _TYPE + r"):(?P<method>[EH]):(?P<id>[A-Za-z0-9_.-]+):(?P<payload>[A-Za-z0-9_-]+)\]\]"
)
# matches a whole token, an escape, or a bare redaction placeholder
OPAQUE_RE = re.compile(TOKEN_RE.pattern + r"|\[\[:L:\]\]|<(?:" + _TYPE + r")>")


@dataclass(frozen=True)
class MaskToken:
    pii_type: PiiType
    method: str
    ref_id: str
    payload: str

    def render(self) -> str:
        return f"[[{self.pii_type.name}:{self.method}:{self.ref_id}:{self.payload}]]"

    @classmethod
    def parse(cls, s: str) -> MaskToken:
        m = TOKEN_RE.fullmatch(s)
        if m is None:
            raise ValueError(f"not a mask token: {s!r}")
        return cls(PiiType(m["type"]), m["method"], m["id"], m["payload"])


def _b64e(data: bytes) -> str:
    return base64.urlsafe_b64encode(data).rstrip(b"=").decode("ascii")


def _b64d(s: str) -> bytes:
    return base64.urlsafe_b64decode(s + "=" * (-len(s) % 4))


def escape_sentinel(s: str) -> str:
    return s.replace(SENTINEL, ESCAPE) if SENTINEL in s else s


# -- keyring --------------------------------------------------------------------


KEYRING_FORMAT = "maskron-keyring"
KEYRING_VERSION = 1


@dataclass(frozen=True)
class Keyring:
    """Symmetric keys (32 bytes) and salts (>= 16 bytes) by id.

    Retired entries stay available for unmasking but are refused for new
    encryption.  ``repr`` never shows material.
    """

    keys: Mapping[str, bytes] = field(default_factory=dict)
    salts: Mapping[str, bytes] = field(default_factory=dict)
    retired: frozenset[str] = frozenset()

    def __post_init__(self):
        for kid, key in self.keys.items():
            if not _ID_RE.fullmatch(kid):
                raise ValidationError(f"bad key id {kid!r}")
            if len(key) != KEY_BYTES:
                raise ValidationError(f"key {kid!r} is {len(key)} bytes, expected {KEY_BYTES}")
        for sid, salt in self.salts.items():
            if not _ID_RE.fullmatch(sid):
                raise ValidationError(f"bad salt id {sid!r}")
            if len(salt) < MIN_SALT_BYTES:
                raise ValidationError(f"salt {sid!r} is shorter than {MIN_SALT_BYTES} bytes")
        object.__setattr__(self, "keys", dict(self.keys))
        object.__setattr__(self, "salts", dict(self.salts))

    def __repr__(self) -> str:
        return f"Keyring(keys={sorted(self.keys)}, salts={sorted(self.salts)})"

    def key(self, key_id: str, *, for_encryption: bool = False) -> bytes:
        try:
            key = self.keys[key_id]
        except KeyError:
            raise MissingKey(f"no key {key_id!r} in keyring") from None
        if for_encryption and key_id in self.retired:
            raise MissingKey(f"key {key_id!r} is retired; it may only decrypt")
        return key

    def salt(self, salt_id: str) -> bytes:
        try:
            return self.salts[salt_id]
        except KeyError:
            raise MissingKey(f"no salt {salt_id!r} in keyring") from None


def _random_bytes(n: int) -> bytes:
    try:
        return secrets.token_bytes(n)
    except NotImplementedError as exc:  # no OS entropy source
        raise EntropyUnavailable(str(exc)) from exc


def keygen() -> tuple[str, bytes]:
    return str(uuid.uuid4()), _random_bytes(KEY_BYTES)


def salt_gen() -> tuple[str, bytes]:
    return str(uuid.uuid4()), _random_bytes(SALT_BYTES)


def keyring_to_json(keyring: Keyring) -> str:
    def section(items):
        return {
            i: {"material": m.hex(), "active": i not in keyring.retired}
            for i, m in sorted(items.items())
        }

    return json.dumps(
        {
            "format": KEYRING_FORMAT,
            "version": KEYRING_VERSION,
            "keys": section(keyring.keys),
            "salts": section(keyring.salts),
        },
        indent=2,
    )


def keyring_from_json(data: str) -> Keyring:
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"keyring is not valid JSON: {exc.msg} (line {exc.lineno})") from None
    if not isinstance(raw, dict) or raw.get("format") != KEYRING_FORMAT:
        raise ValidationError("not a keyring file")
    if raw.get("version") != KEYRING_VERSION:
        raise ValidationError(f"unsupported keyring version {raw.get('version')!r}")
    retired = set()

    def section(name):
        out = {}
        for i, entry in (raw.get(name) or {}).items():
            try:
                out[i] = bytes.fromhex(entry["material"])
            except (KeyError, TypeError, ValueError):
                raise ValidationError(f"keyring {name} entry {i!r} has bad material") from None
            if not entry.get("active", True):
                retired.add(i)
        return out

    keys, salts = section("keys"), section("salts")
    return Keyring(keys, salts, frozenset(retired))


def load_keyring(path: str | os.PathLike) -> Keyring:
    with open(path, encoding="utf-8") as fh:
        return keyring_from_json(fh.read())


def save_keyring(keyring: Keyring, path: str | os.PathLike) -> None:
    """Write atomically with mode 0600."""
    path = os.fspath(path)
    tmp = f"{path}.tmp{os.getpid()}"
    fd = os.open(tmp, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(keyring_to_json(keyring))
        os.chmod(tmp, 0o600)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def keyring_add(path: str | os.PathLike, *, key: bool = True, salt: bool = True) -> tuple[str | None, str | None]:
    """Generate a key and/or salt into the keyring at ``path`` (created if absent)."""
    ring = load_keyring(path) if os.path.exists(path) else Keyring()
    keys, salts = dict(ring.keys), dict(ring.salts)
    key_id = salt_id = None
    if key:
        key_id, keys[key_id] = keygen()
    if salt:
        salt_id, salts[salt_id] = salt_gen()
    save_keyring(Keyring(keys, salts, ring.retired), path)
    return key_id, salt_id


# -- strategies -------------------------------------------------------------------


def mask_redact(d: Detection) -> str:
    return f"<{d.pii_type.name}>"


_DIGITS = "0123456789"
_LOWER = "abcdefghijklmnopqrstuvwxyz"
_UPPER = _LOWER.upper()


class _HmacStream:
    """Unbiased draws from an HMAC-SHA-256 keystream."""

    def __init__(self, key: bytes, message: bytes):
        self._key = key
        self._message = message
        self._block = 0
        self._buf = b""
        self._pos = 0

    def _byte(self) -> int:
        if self._pos == len(self._buf):
            self._buf = hmac.new(self._key, self._message + self._block.to_bytes(4, "big"),
                                 hashlib.sha256).digest()
            self._block += 1
            self._pos = 0
        b = self._buf[self._pos]
        self._pos += 1
        return b

    def below(self, n: int) -> int:
        limit = 256 - 256 % n
        while True:
            b = self._byte()
            if b < limit:
                return b % n


def _substitute(text: str, stream: _HmacStream) -> str:
    out = []
    for ch in text:
        if "0" <= ch <= "9":
            out.append(_DIGITS[stream.below(10)])
        elif "a" <= ch <= "z":
            out.append(_LOWER[stream.below(26)])
        elif "A" <= ch <= "Z":
            out.append(_UPPER[stream.below(26)])
        else:
            out.append(ch)
    return "".join(out)


def mask_pseudonymize(d: Detection, key: bytes | None = None, mode: str = "RANDOM",
                      seed: bytes | None = None) -> str:
    """Format-preserving surrogate: digits stay digits, letters keep their case.

    DETERMINISTIC derives the replacement from HMAC-SHA-256 under ``key`` over
    the type and text, so equal inputs agree across workers and runs.  RANDOM
    uses the same construction keyed by ``seed`` (fresh OS randomness when
    omitted).  The result always differs from the input when the input has at
    least one ASCII letter or digit; otherwise there is nothing to replace.
    """
    mode = mode.upper()
    if mode == "DETERMINISTIC":
        if not key:
            raise MissingKey("deterministic pseudonymization needs a key")
        stream_key = key
    elif mode == "RANDOM":
        stream_key = seed if seed is not None else _random_bytes(KEY_BYTES)
    else:
        raise ValueError(f"unknown pseudonymization mode {mode!r}")

    text = d.matched_text
    if not any(ch.isascii() and ch.isalnum() for ch in text):
        return text
    message = b"maskron/pseudo\x00" + d.pii_type.name.encode() + b"\x00" + text.encode("utf-8") + b"\x00"
    counter = 0
    while True:
        out = _substitute(text, _HmacStream(stream_key, message + counter.to_bytes(4, "big")))
        if out != text:
            return out
        counter += 1


def mask_hash(d: Detection, salt: bytes, salt_id: str, full_digest: bool = False) -> str:
    if salt is None or len(salt) < MIN_SALT_BYTES:
        raise WeakSalt(f"salt must be at least {MIN_SALT_BYTES} bytes")
    if not _ID_RE.fullmatch(salt_id):
        raise MaskingError(f"bad salt id {salt_id!r}")
    digest = hashlib.sha256(salt + d.matched_text.encode("utf-8")).hexdigest()
    payload = digest if full_digest else digest[:HASH_HEX_CHARS]
    return MaskToken(d.pii_type, "H", salt_id, payload).render()


def _aad(type_name: str, key_id: str) -> bytes:
    return f"{type_name}:{key_id}".encode("ascii")


def mask_encrypt(d: Detection, key: bytes, key_id: str) -> str:
    if not key:
        raise MissingKey("encryption needs a key")
    if len(key) != KEY_BYTES:
        raise MaskingError(f"AES-256 key must be {KEY_BYTES} bytes")
    if not _ID_RE.fullmatch(key_id):
        raise MaskingError(f"bad key id {key_id!r}")
    nonce = _random_bytes(NONCE_BYTES)
    sealed = AESGCM(key).encrypt(nonce, d.matched_text.encode("utf-8"), _aad(d.pii_type.name, key_id))
    return MaskToken(d.pii_type, "E", key_id, _b64e(nonce + sealed)).render()


def mask_custom_email(d: Detection, fill_char: str = "x", length: int | None = None) -> str:
    """Replace the local part with ``fill_char``; keep ``@domain`` verbatim.

    ``length=None`` matches the local part's length, an integer fixes it.
    """
    text = d.matched_text
    if text.count("@") != 1:
        raise NotAnEmail(f"expected exactly one '@' in {text!r}")
    local, domain = text.split("@")
    n = len(local) if length is None else length
    return fill_char * n + "@" + domain


def replacement(d: Detection, entry: PolicyEntry, keyring: Keyring | None) -> tuple[str, bool]:
    """Replacement text for ``d`` and whether it is a generated token."""
    p = entry.params
    s = entry.strategy
    if s is Strategy.REDACT:
        return mask_redact(d), True
    if s is Strategy.PASSTHROUGH:
        return d.matched_text, False
    if s is Strategy.CUSTOM_EMAIL:
        length = p.get("fixed_length") if p.get("length_mode") == "FIXED" else None
        return mask_custom_email(d, p.get("fill_char", "x"), length), False
    if s is Strategy.PSEUDONYMIZE:
        mode = p.get("mode", "RANDOM")
        key = None
        if mode == "DETERMINISTIC":
            key = _require(keyring).key(p["key_id"])
        return mask_pseudonymize(d, key, mode), False
    if s is Strategy.HASH:
        return mask_hash(d, _require(keyring).salt(p["salt_id"]), p["salt_id"],
                         p.get("full_digest", False)), True
    if s is Strategy.ENCRYPT:
        return mask_encrypt(d, _require(keyring).key(p["key_id"], for_encryption=True),
                            p["key_id"]), True
    raise MaskingError(f"unhandled strategy {s}")


def _require(keyring: Keyring | None) -> Keyring:
    if keyring is None:
        raise MissingKey("policy needs a keyring but none was supplied")
    return keyring


def apply_policy(text: str, resolved: Sequence[Detection], policy: PolicyTable,
                 keyring: Keyring | None = None) -> MaskedDocument:
    index = TextIndex(text)
    data = index.data
    ordered = list(resolved)
    for a, b in zip(ordered, ordered[1:]):
        if b.span.start < a.span.end:
            raise MaskingError("detections must be sorted and non-overlapping")

    pieces: list[bytes] = []
    audit: list[AuditEntry] = []
    counts: Counter = Counter()
    escapes = 0
    out_len = 0
    cursor = 0

    def emit_plain(chunk: bytes) -> None:
        nonlocal out_len, escapes
        if b"[[" in chunk:
            escapes += chunk.count(b"[[")
            chunk = chunk.replace(b"[[", ESCAPE.encode())
        pieces.append(chunk)
        out_len += len(chunk)

    for d in ordered:
        problem = index.check(d.span)
        if problem is not None or index.slice(d.span) != d.matched_text:
            raise SpanMaskingError(d.span, MaskingError(problem or "matched_text differs from source"))
        entry = policy.entry_for(d.pii_type)
        try:
            new, is_token = replacement(d, entry, keyring)
        except MaskingError as exc:
            raise SpanMaskingError(d.span, exc) from exc
        emit_plain(data[cursor : d.span.start])
        start = out_len
        encoded = new.encode("utf-8")
        if is_token:
            pieces.append(encoded)
            out_len += len(encoded)
        else:
            emit_plain(encoded)
        audit.append(AuditEntry(d.span, Span(start, out_len), d.pii_type, entry.strategy,
                                d.detector_id))
        counts[d.pii_type] += 1
        cursor = d.span.end
    emit_plain(data[cursor:])

    return MaskedDocument(
        text=b"".join(pieces).decode("utf-8"),
        audit=tuple(audit),
        counts=dict(counts),
        escapes=escapes,
    )


# -- unmask ----------------------------------------------------------------------


@dataclass
class UnmaskResult:
    text: str
    restored: int = 0
    failures: list[AuthFailure] = field(default_factory=list)
    warnings: Counter = field(default_factory=Counter)


def unmask(text: str, keyring: Keyring, strict: bool = False) -> UnmaskResult:
    """Decrypt every ``E`` token whose key is known and undo ``[[`` escapes.

    Hash tokens and redaction placeholders are left alone.  Tokens that fail
    authentication stay in place and are reported; with ``strict`` the first
    one raises :class:`AuthFailure` instead.
    """
    if SENTINEL not in text:
        return UnmaskResult(text)
    index = TextIndex(text)
    result = UnmaskResult(text)
    out = []
    pos = 0
    while True:
        i = text.find(SENTINEL, pos)
        if i < 0:
            out.append(text[pos:])
            break
        out.append(text[pos:i])
        if text.startswith(ESCAPE, i):
            out.append(SENTINEL)
            pos = i + len(ESCAPE)
            continue
        m = TOKEN_RE.match(text, i)
        if m is None:
            result.warnings["MalformedToken"] += 1
            out.append(SENTINEL)
            pos = i + len(SENTINEL)
            continue
        pos = m.end()
        if m["method"] != "E":
            out.append(m.group())
            continue
        key_id = m["id"]
        if key_id not in keyring.keys:
            result.warnings["UnknownKey"] += 1
            out.append(m.group())
            continue
        plain = _open_token(m, keyring.keys[key_id])
        if plain is None:
            failure = AuthFailure(index.to_byte(m.start()), index.to_byte(m.end()))
            if strict:
                raise failure
            result.failures.append(failure)
            out.append(m.group())
            continue
        out.append(plain)
        result.restored += 1
    result.text = "".join(out)
    return result


def _open_token(m: re.Match, key: bytes) -> str | None:
    try:
        blob = _b64d(m["payload"])
    except (binascii.Error, ValueError):
        return None
    if len(blob) < NONCE_BYTES + TAG_BYTES:
        return None
    try:
        plain = AESGCM(key).decrypt(blob[:NONCE_BYTES], blob[NONCE_BYTES:], _aad(m["type"], m["id"]))
    except InvalidTag:
        return None
    try:
        return plain.decode("utf-8")
    except UnicodeDecodeError:
        return None
