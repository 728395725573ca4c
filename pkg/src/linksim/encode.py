"""Keyed Bloom-filter encoding of QID lists and one-way record-id encoding.

All QID attributes of a record are folded into a single fixed-length
filter. Bit positions for one gram follow the double-hashing scheme
(h1 + i * h2) mod bf_len for i in 0..num_hashes-1, where h1 and h2 come
from two HMAC-SHA256 digests keyed with the shared secret. The attribute
index is mixed into the HMAC input so equal grams in different attributes
set different bits. Filters are stored as plain integers; bit p of the
filter is (bits >> p) & 1.
"""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass, field

from .errors import ConfigError, ContractError, ParseError
from .model import Database

PAD_CHAR = "#"

_KEY_LEN = 32


@dataclass(frozen=True)
class EncodingParams:
    bf_len: int = 1000
    num_hashes: int = 30
    gram_size: int = 2
    pad: bool = True

    def __post_init__(self):
        if self.bf_len < 64:
            raise ConfigError(f"bf_len must be at least 64, got {self.bf_len}")
        if not 1 <= self.num_hashes <= 64:
            raise ConfigError(f"num_hashes must be in 1..64, got {self.num_hashes}")
        if self.gram_size not in (1, 2, 3):
            raise ConfigError(f"gram_size must be 1, 2, or 3, got {self.gram_size}")

    @property
    def fingerprint(self) -> str:
        text = f"{self.bf_len}:{self.num_hashes}:{self.gram_size}:{int(self.pad)}"
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class SecretKey:
    """32-byte secret shared by the two database owners only.

    The raw bytes never appear in reprs, logs, or protocol messages; only
    a commitment digest may be published.
    """

    key_bytes: bytes = field(repr=False)

    def __post_init__(self):
        if len(self.key_bytes) != _KEY_LEN:
            raise ConfigError(f"secret key must be {_KEY_LEN} bytes, got {len(self.key_bytes)}")

    def __repr__(self) -> str:
        return "SecretKey(<redacted>)"

    __str__ = __repr__

    @property
    def commitment(self) -> str:
        """One-way digest of the key, safe to publish for fingerprinting."""
        return hashlib.sha256(self.key_bytes).hexdigest()

    @classmethod
    def from_seed(cls, seed: int) -> "SecretKey":
        return cls(hashlib.sha256(f"key-seed:{seed}".encode()).digest())

    @classmethod
    def from_hex(cls, text: str) -> "SecretKey":
        try:
            return cls(bytes.fromhex(text.strip()))
        except ValueError as exc:
            raise ConfigError(f"bad key hex: {exc}") from None


@dataclass(frozen=True)
class BloomFilter:
    bits: int
    bf_len: int
    params_fingerprint: str

    @property
    def popcount(self) -> int:
        return self.bits.bit_count()

    def to_wire(self) -> str:
        """Length-prefixed hex serialization used in transcripts."""
        width = (self.bf_len + 3) // 4
        return f"{self.bf_len}:{self.params_fingerprint}:{self.bits:0{width}x}"

    @classmethod
    def from_wire(cls, text: str) -> "BloomFilter":
        parts = text.split(":")
        if len(parts) != 3:
            raise ParseError(f"bad filter wire format: {text[:40]!r}")
        try:
            bf_len = int(parts[0])
            bits = int(parts[2], 16)
        except ValueError as exc:
            raise ParseError(f"bad filter wire format: {exc}") from None
        if bits.bit_length() > bf_len:
            raise ParseError("filter bits exceed declared length")
        return cls(bits, bf_len, parts[1])


def qgrams(value: str, gram_size: int, pad: bool, pad_char: str = PAD_CHAR) -> list[str]:
    """Contiguous substrings of length gram_size, with multiplicity.

    Input is lowercased. With pad set, non-empty values get gram_size - 1
    boundary markers on each side; empty values always yield no grams.
    """
    if gram_size < 1:
        raise ContractError(f"gram_size must be positive, got {gram_size}")
    value = value.lower()
    if not value:
        return []
    if pad:
        value = pad_char * (gram_size - 1) + value + pad_char * (gram_size - 1)
    return [value[i : i + gram_size] for i in range(len(value) - gram_size + 1)]


def _gram_hashes(attr_index: int, gram: str, key: SecretKey) -> tuple[int, int]:
    message = f"{attr_index}|{gram}".encode()
    h1 = hmac.new(key.key_bytes, b"h1|" + message, hashlib.sha256).digest()
    h2 = hmac.new(key.key_bytes, b"h2|" + message, hashlib.sha256).digest()
    return int.from_bytes(h1, "big"), int.from_bytes(h2, "big")


def clk_encode(qid: tuple[str, ...], params: EncodingParams, key: SecretKey) -> BloomFilter:
    """Encode all grams of all non-empty QID attributes into one filter."""
    bits = 0
    for attr_index, value in enumerate(qid):
        for gram in qgrams(value, params.gram_size, params.pad):
            h1, h2 = _gram_hashes(attr_index, gram, key)
            for i in range(params.num_hashes):
                bits |= 1 << ((h1 + i * h2) % params.bf_len)
    return BloomFilter(bits, params.bf_len, params.fingerprint)


EncodedRecordId = str


def encode_record_id(record_id: str, key: SecretKey) -> EncodedRecordId:
    """Keyed one-way digest of a record id, as lowercase hex."""
    return hmac.new(key.key_bytes, b"rid|" + record_id.encode(), hashlib.sha256).hexdigest()


def encode_database(
    db: Database, params: EncodingParams, key: SecretKey
) -> list[tuple[EncodedRecordId, BloomFilter]]:
    """One (encoded id, filter) pair per record, in database order.

    PD values are never read.
    """
    return [
        (encode_record_id(rec.id, key), clk_encode(rec.qid, params, key))
        for rec in db.records
    ]
