import random

import pytest

from minerscope.blob import (BlockHeaderBlob, decode_varint, encode_varint,
                             nonce_offset, parse_blob, serialize_blob, set_nonce)
from minerscope.errors import MalformedBlob


def random_header(rng: random.Random) -> BlockHeaderBlob:
    return BlockHeaderBlob(
        major_version=rng.randrange(1 << 8),
        minor_version=rng.randrange(1 << 8),
        timestamp=rng.randrange(1 << 40),
        prev_id=rng.getrandbits(256).to_bytes(32, "little"),
        nonce=rng.randrange(1 << 32),
        merkle_root=rng.getrandbits(256).to_bytes(32, "little"),
        tx_count=rng.randrange(1, 1 << 12),
    )


class TestVarint:
    def test_zero_is_single_null_byte(self):
        assert encode_varint(0) == b"\x00"

    def test_300_encodes_to_ac_02(self):
        # 300 = 0b10_0101100: low seven bits 0x2C with continuation, then 0x02
        assert encode_varint(300) == b"\xac\x02"
        assert decode_varint(b"\xac\x02") == (300, 2)

    def test_round_trip(self):
        rng = random.Random(1)
        for _ in range(1000):
            value = rng.randrange(1 << rng.randrange(1, 65)) % (1 << 64)
            encoded = encode_varint(value)
            assert decode_varint(encoded) == (value, len(encoded))

    def test_max_value(self):
        top = (1 << 64) - 1
        assert decode_varint(encode_varint(top)) == (top, 10)

    def test_ten_continuation_bytes_overflow(self):
        with pytest.raises(MalformedBlob):
            decode_varint(b"\xff" * 10)

    def test_non_canonical_rejected(self):
        with pytest.raises(MalformedBlob):
            decode_varint(b"\x80\x00")
        with pytest.raises(MalformedBlob):
            decode_varint(b"\xff\x00")

    def test_truncated_rejected(self):
        with pytest.raises(MalformedBlob):
            decode_varint(b"\x80")

    def test_out_of_range_encode(self):
        with pytest.raises(ValueError):
            encode_varint(1 << 64)
        with pytest.raises(ValueError):
            encode_varint(-1)


class TestBlobRoundTrip:
    def test_parse_inverts_serialize(self):
        rng = random.Random(2)
        for _ in range(1000):
            header = random_header(rng)
            assert parse_blob(serialize_blob(header)) == header

    def test_empty_input_rejected(self):
        with pytest.raises(MalformedBlob):
            parse_blob(b"")

    def test_truncated_rejected(self):
        blob = serialize_blob(random_header(random.Random(3)))
        with pytest.raises(MalformedBlob):
            parse_blob(blob[:-1])

    def test_trailing_garbage_rejected(self):
        blob = serialize_blob(random_header(random.Random(4)))
        with pytest.raises(MalformedBlob):
            parse_blob(blob + b"\x00")

    def test_nonce_bytes_little_endian(self):
        header = random_header(random.Random(5))
        header = BlockHeaderBlob(**{**header.__dict__, "nonce": 0x01020304})
        blob = serialize_blob(header)
        off = nonce_offset(blob)
        assert blob[off:off + 4] == bytes([0x04, 0x03, 0x02, 0x01])


class TestSetNonce:
    def test_round_trip_and_idempotence(self):
        rng = random.Random(6)
        for _ in range(200):
            blob = serialize_blob(random_header(rng))
            nonce = rng.randrange(1 << 32)
            updated = set_nonce(blob, nonce)
            assert parse_blob(updated).nonce == nonce
            assert set_nonce(updated, nonce) == updated

    def test_changes_exactly_four_bytes(self):
        rng = random.Random(7)
        for _ in range(200):
            blob = serialize_blob(random_header(rng))
            updated = set_nonce(blob, rng.randrange(1 << 32))
            assert len(updated) == len(blob)
            diff = sum(1 for a, b in zip(blob, updated) if a != b)
            assert diff <= 4
            off = nonce_offset(blob)
            assert blob[:off] == updated[:off]
            assert blob[off + 4:] == updated[off + 4:]

    def test_mainnet_style_offset_is_39(self):
        # three leading varints of 1+1+5 bytes put the nonce after 7+32 bytes
        header = BlockHeaderBlob(
            major_version=9, minor_version=0, timestamp=1 << 28,
            prev_id=b"\x11" * 32, nonce=0, merkle_root=b"\x22" * 32, tx_count=1)
        blob = serialize_blob(header)
        assert nonce_offset(blob) == 39

    def test_malformed_blob_rejected(self):
        with pytest.raises(MalformedBlob):
            set_nonce(b"\x00\x01", 5)
