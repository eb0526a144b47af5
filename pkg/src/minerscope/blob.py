"""Block-header hashing blob: the byte sequence a pool hands to miners.

Layout, in field order:

    varint(major_version) varint(minor_version) varint(timestamp)
    prev_id (32 raw bytes) nonce (4 bytes little-endian)
    merkle_root (32 raw bytes) varint(tx_count)

Varints are unsigned LEB128 limited to 64-bit values and must be canonical
(no redundant continuation groups).
"""

from dataclasses import dataclass

from .errors import MalformedBlob

HASH_SIZE = 32
NONCE_SIZE = 4
MAX_VARINT_BITS = 64


def encode_varint(value: int) -> bytes:
    """Encode an unsigned integer as canonical LEB128 (7 data bits per byte,
    least-significant group first, high bit set on all but the final byte)."""
    if value < 0 or value >= 1 << MAX_VARINT_BITS:
        raise ValueError("varint out of range: %r" % (value,))
    out = bytearray()
    while True:
        group = value & 0x7F
        value >>= 7
        if value:
            out.append(group | 0x80)
        else:
            out.append(group)
            return bytes(out)


def decode_varint(data: bytes, offset: int = 0) -> tuple[int, int]:
    """Decode a canonical LEB128 varint starting at ``offset``.

    Returns (value, next_offset). Raises MalformedBlob on truncation,
    overflow beyond 64 bits, or a non-canonical encoding.
    """
    result = 0
    shift = 0
    pos = offset
    while True:
        if pos >= len(data):
            raise MalformedBlob("truncated varint at offset %d" % offset)
        byte = data[pos]
        pos += 1
        if shift >= MAX_VARINT_BITS or (shift == 63 and byte > 0x01):
            raise MalformedBlob("varint exceeds 64 bits at offset %d" % offset)
        result |= (byte & 0x7F) << shift
        if byte & 0x80:
            shift += 7
            continue
        if byte == 0 and shift > 0:
            raise MalformedBlob("non-canonical varint at offset %d" % offset)
        return result, pos


@dataclass(frozen=True)
class BlockHeaderBlob:
    """Parsed form of the hashing blob.

    tx_count includes the Coinbase transaction, so it is always >= 1.
    """

    major_version: int
    minor_version: int
    timestamp: int
    prev_id: bytes
    nonce: int
    merkle_root: bytes
    tx_count: int

    def __post_init__(self):
        for name in ("prev_id", "merkle_root"):
            value = getattr(self, name)
            if len(value) != HASH_SIZE:
                raise ValueError("%s must be %d bytes" % (name, HASH_SIZE))
        if not 0 <= self.nonce < 1 << 32:
            raise ValueError("nonce must fit 32 bits")
        if self.tx_count < 1:
            raise ValueError("tx_count must include the Coinbase transaction")
        for name in ("major_version", "minor_version", "timestamp"):
            value = getattr(self, name)
            if value < 0 or value >= 1 << MAX_VARINT_BITS:
                raise ValueError("%s out of varint range" % name)


def serialize_blob(header: BlockHeaderBlob) -> bytes:
    return b"".join(
        (
            encode_varint(header.major_version),
            encode_varint(header.minor_version),
            encode_varint(header.timestamp),
            header.prev_id,
            header.nonce.to_bytes(NONCE_SIZE, "little"),
            header.merkle_root,
            encode_varint(header.tx_count),
        )
    )


def parse_blob(data: bytes) -> BlockHeaderBlob:
    """Inverse of serialize_blob. Trailing bytes are rejected."""
    major, pos = decode_varint(data, 0)
    minor, pos = decode_varint(data, pos)
    timestamp, pos = decode_varint(data, pos)
    if len(data) < pos + HASH_SIZE + NONCE_SIZE + HASH_SIZE:
        raise MalformedBlob("truncated blob: %d bytes" % len(data))
    prev_id = data[pos:pos + HASH_SIZE]
    pos += HASH_SIZE
    nonce = int.from_bytes(data[pos:pos + NONCE_SIZE], "little")
    pos += NONCE_SIZE
    merkle_root = data[pos:pos + HASH_SIZE]
    pos += HASH_SIZE
    tx_count, pos = decode_varint(data, pos)
    if tx_count < 1:
        raise MalformedBlob("tx_count must be >= 1")
    if pos != len(data):
        raise MalformedBlob("%d trailing bytes after blob" % (len(data) - pos))
    return BlockHeaderBlob(major, minor, timestamp, prev_id, nonce,
                           merkle_root, tx_count)


def nonce_offset(blob: bytes) -> int:
    """Byte offset of the 4-byte nonce field inside a serialized blob."""
    _, pos = decode_varint(blob, 0)
    _, pos = decode_varint(blob, pos)
    _, pos = decode_varint(blob, pos)
    return pos + HASH_SIZE


def set_nonce(blob: bytes, nonce: int) -> bytes:
    """Return ``blob`` with its nonce field replaced; everything else is
    byte-identical. The blob must parse."""
    if not 0 <= nonce < 1 << 32:
        raise ValueError("nonce must fit 32 bits")
    parse_blob(blob)
    off = nonce_offset(blob)
    return blob[:off] + nonce.to_bytes(NONCE_SIZE, "little") + blob[off + NONCE_SIZE:]
