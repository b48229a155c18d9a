"""Bloom filter and the dictionary detector built on it.

Hashing: two 64-bit xxh64 values of the item (seeded with ``hash_seed`` and
``hash_seed ^ 0x9E3779B97F4A7C15``) are combined by double hashing,
``h_i = (h1 + i * h2) mod m`` for ``i`` in ``0..k-1``.

On-disk format (little-endian)::

    b"BLM" version(b"1") | u64 m | u64 k | u64 n_inserted | u64 hash_seed | bits

where ``bits`` is ``ceil(m / 8)`` bytes, bit ``j`` stored at byte ``j // 8``,
position ``j % 8`` (LSB first).  Padding bits past ``m`` must be zero.
"""

from __future__ import annotations

import enum
import io
import math
import os
import re
import struct
from collections.abc import Iterable
from dataclasses import dataclass, field

import xxhash

from maskron.errors import BadParameter, CorruptFormat, EmptyDictionary, ValidationError
from maskron.model import Detection, PiiType, TextIndex, as_pii_type, make_detection

MAGIC = b"BLM"
VERSION = b"1"
_HEADER = struct.Struct("<3sc4Q")
_SEED2_XOR = 0x9E3779B97F4A7C15
_U64 = (1 << 64) - 1

MIN_BITS = 8
MAX_HASHES = 32


def optimal_parameters(n_expected: int, target_fpr: float) -> tuple[int, int]:
    """Textbook sizing: ``m = ceil(-n ln p / ln(2)^2)``, ``k = round(m/n ln 2)``.

    Unclamped; :func:`bloom_new` raises ``m`` to at least 8 bits and caps ``k``.
    """
    if isinstance(n_expected, bool) or not isinstance(n_expected, int) or n_expected < 1:
        raise BadParameter(f"n_expected must be a positive integer, got {n_expected!r}")
    if not isinstance(target_fpr, (int, float)) or not 0.0 < target_fpr < 1.0:
        raise BadParameter(f"target_fpr must be in (0, 1), got {target_fpr!r}")
    m = math.ceil(-n_expected * math.log(target_fpr) / (math.log(2) ** 2))
    k = max(1, round(m / n_expected * math.log(2)))
    return m, k


class BloomFilter:
    __slots__ = ("m", "k", "n_inserted", "hash_seed", "bits")

    def __init__(self, m: int, k: int, hash_seed: int = 0, bits: bytearray | None = None,
                 n_inserted: int = 0):
        if m < MIN_BITS or not 1 <= k <= MAX_HASHES:
            raise BadParameter(f"need m >= {MIN_BITS} and 1 <= k <= {MAX_HASHES}, got m={m}, k={k}")
        if not 0 <= hash_seed <= _U64:
            raise BadParameter("hash_seed must fit in 64 bits")
        self.m = m
        self.k = k
        self.hash_seed = hash_seed
        self.n_inserted = n_inserted
        nbytes = (m + 7) // 8
        if bits is None:
            bits = bytearray(nbytes)
        elif len(bits) != nbytes:
            raise BadParameter(f"bit array has {len(bits)} bytes, expected {nbytes}")
        self.bits = bits

    def _positions(self, item: bytes):
        h1 = xxhash.xxh64_intdigest(item, self.hash_seed)
        h2 = xxhash.xxh64_intdigest(item, self.hash_seed ^ _SEED2_XOR)
        m = self.m
        for i in range(self.k):
            yield ((h1 + i * h2) & _U64) % m

    def add(self, item: bytes | str) -> None:
        if isinstance(item, str):
            item = item.encode("utf-8")
        bits = self.bits
        for pos in self._positions(item):
            bits[pos >> 3] |= 1 << (pos & 7)
        self.n_inserted += 1

    def __contains__(self, item: bytes | str) -> bool:
        if isinstance(item, str):
            item = item.encode("utf-8")
        bits = self.bits
        for pos in self._positions(item):
            if not bits[pos >> 3] & (1 << (pos & 7)):
                return False
        return True

    def copy(self) -> BloomFilter:
        return BloomFilter(self.m, self.k, self.hash_seed, bytearray(self.bits), self.n_inserted)

    def expected_fpr(self, n: int | None = None) -> float:
        n = self.n_inserted if n is None else n
        return (1.0 - math.exp(-self.k * n / self.m)) ** self.k

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BloomFilter):
            return NotImplemented
        return (self.m, self.k, self.hash_seed, self.n_inserted, self.bits) == (
            other.m, other.k, other.hash_seed, other.n_inserted, other.bits)

    def __repr__(self) -> str:
        return f"BloomFilter(m={self.m}, k={self.k}, n_inserted={self.n_inserted}, seed={self.hash_seed})"


def bloom_new(n_expected: int, target_fpr: float, hash_seed: int = 0) -> BloomFilter:
    m, k = optimal_parameters(n_expected, target_fpr)
    m = max(m, MIN_BITS)
    k = min(MAX_HASHES, max(1, round(m / n_expected * math.log(2))))
    return BloomFilter(m, k, hash_seed)


def bloom_insert(filter: BloomFilter, item: bytes | str) -> BloomFilter:
    """Insert in place and return the same filter."""
    filter.add(item)
    return filter


def bloom_query(filter: BloomFilter, item: bytes | str) -> bool:
    return item in filter


def bloom_serialize(filter: BloomFilter) -> bytes:
    return _HEADER.pack(MAGIC, VERSION, filter.m, filter.k, filter.n_inserted,
                        filter.hash_seed) + bytes(filter.bits)


def bloom_deserialize(data: bytes) -> BloomFilter:
    if len(data) < _HEADER.size:
        raise CorruptFormat(f"truncated header ({len(data)} bytes)")
    magic, version, m, k, n_inserted, seed = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CorruptFormat(f"bad magic {magic!r}")
    if version != VERSION:
        raise CorruptFormat(f"unsupported version {version!r}")
    if m < MIN_BITS or not 1 <= k <= MAX_HASHES:
        raise CorruptFormat(f"parameters out of range: m={m}, k={k}")
    nbytes = (m + 7) // 8
    body = data[_HEADER.size:]
    if len(body) != nbytes:
        raise CorruptFormat(f"bit array is {len(body)} bytes, expected {nbytes}")
    if m % 8 and body[-1] >> (m % 8):
        raise CorruptFormat("padding bits set past m")
    return BloomFilter(m, k, seed, bytearray(body), n_inserted)


def save_filter(filter: BloomFilter, path: str | os.PathLike) -> None:
    with open(path, "wb") as fh:
        fh.write(bloom_serialize(filter))


def load_filter(path: str | os.PathLike) -> BloomFilter:
    with open(path, "rb") as fh:
        return bloom_deserialize(fh.read())


# -- dictionary detector --------------------------------------------------------


class Normalization(str, enum.Enum):
    LOWERCASE = "LOWERCASE"
    NONE = "NONE"

    def apply(self, token: str) -> str:
        return token.lower() if self is Normalization.LOWERCASE else token


DEFAULT_TOKEN_PATTERN = r"[^\W\d_]{2,}"


@dataclass(frozen=True)
class DictionaryConfig:
    pii_type: PiiType = PiiType("PERSON_NAME")
    normalization: Normalization = Normalization.LOWERCASE
    token_pattern: str = DEFAULT_TOKEN_PATTERN
    confidence: float = 0.7
    name: str = "names"
    _regex: re.Pattern = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "pii_type", as_pii_type(self.pii_type))
        if not isinstance(self.normalization, Normalization):
            object.__setattr__(self, "normalization", Normalization(str(self.normalization).upper()))
        if not isinstance(self.confidence, (int, float)) or not 0 <= self.confidence <= 1:
            raise ValidationError(f"dictionary confidence must be in [0, 1], got {self.confidence!r}")
        try:
            object.__setattr__(self, "_regex", re.compile(self.token_pattern))
        except re.error as exc:
            raise ValidationError(f"bad token_pattern: {exc}") from None

    @property
    def detector_id(self) -> str:
        return "bloom:" + self.name


def _entries(source: Iterable[str] | io.IOBase | str | os.PathLike, cfg: DictionaryConfig):
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    else:
        lines = [ln.decode("utf-8") if isinstance(ln, bytes) else ln for ln in source]
    out = []
    for line in lines:
        entry = line.strip()
        if entry:
            out.append(cfg.normalization.apply(entry))
    return out


def bloom_load_dictionary(source, cfg: DictionaryConfig, target_fpr: float,
                          hash_seed: int = 0) -> BloomFilter:
    """Build a filter sized for the dictionary's non-empty line count.

    ``source`` is a path or an iterable of lines (str or UTF-8 bytes).
    """
    entries = _entries(source, cfg)
    if not entries:
        raise EmptyDictionary("dictionary has no entries")
    filt = bloom_new(len(entries), target_fpr, hash_seed)
    for entry in entries:
        filt.add(entry)
    return filt


def scan_dictionary(text: str, filter: BloomFilter, cfg: DictionaryConfig,
                    index: TextIndex | None = None) -> list[Detection]:
    if not text:
        return []
    index = index or TextIndex(text)
    found = []
    for m in cfg._regex.finditer(text):
        if m.start() == m.end():
            continue
        if cfg.normalization.apply(m.group()) in filter:
            found.append(make_detection(index, m.start(), m.end(), cfg.pii_type,
                                        cfg.confidence, cfg.detector_id))
    return found
