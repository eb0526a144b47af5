import hashlib
import random
from fractions import Fraction

import pytest

from minerscope.errors import UnavailableHash
from minerscope.pow import (MAX_TARGET, compact_target, hash_to_int,
                            meets_compact_target, meets_difficulty, pow_hash,
                            register_pow_hash, double_sha256)


def random_digest(rng):
    return rng.getrandbits(256).to_bytes(32, "little")


class TestMeetsDifficulty:
    def test_difficulty_one_accepts_everything(self):
        rng = random.Random(21)
        for _ in range(50):
            assert meets_difficulty(random_digest(rng), 1)

    def test_boundary_product_equal_to_2_256(self):
        digest = (1 << 255).to_bytes(32, "little")
        assert not meets_difficulty(digest, 2)
        below = ((1 << 255) - 1).to_bytes(32, "little")
        assert meets_difficulty(below, 2)

    def test_agrees_with_rational_oracle(self):
        # oracle: H < 2^256 / d as an exact rational comparison
        rng = random.Random(22)
        for _ in range(1000):
            digest = random_digest(rng)
            difficulty = rng.randrange(1, 1 << rng.randrange(1, 65))
            expected = hash_to_int(digest) < Fraction(1 << 256, difficulty)
            assert meets_difficulty(digest, difficulty) == expected

    def test_monotone_in_difficulty(self):
        rng = random.Random(23)
        for _ in range(200):
            digest = random_digest(rng)
            difficulty = rng.randrange(2, 1 << 40)
            if meets_difficulty(digest, difficulty):
                assert meets_difficulty(digest, rng.randrange(1, difficulty))

    def test_little_endian_interpretation(self):
        assert hash_to_int(b"\x01" + b"\x00" * 31) == 1
        assert hash_to_int(b"\x00" * 31 + b"\x01") == 1 << 248


class TestCompactTarget:
    def test_difficulty_one_full_range(self):
        assert compact_target(1) == 0xFFFFFFFF

    def test_difficulty_256(self):
        assert compact_target(256) == 0x00FFFFFF

    def test_monotone_non_increasing(self):
        rng = random.Random(24)
        for _ in range(300):
            a = rng.randrange(1, 1 << 48)
            b = rng.randrange(1, 1 << 48)
            lo, hi = sorted((a, b))
            assert compact_target(hi) <= compact_target(lo)

    def test_full_range_target_accepts_everything(self):
        rng = random.Random(25)
        for _ in range(20):
            assert meets_compact_target(random_digest(rng), MAX_TARGET)

    def test_compact_check_tracks_full_check(self):
        # both checks accept ~1/256 of uniform hashes; on identical samples
        # they may only disagree inside the quantization sliver
        rng = random.Random(26)
        difficulty = 256
        target = compact_target(difficulty)
        samples = 10_000
        compact = full = 0
        for _ in range(samples):
            digest = random_digest(rng)
            if meets_compact_target(digest, target):
                compact += 1
            if meets_difficulty(digest, difficulty):
                full += 1
        assert abs(compact - full) <= 1
        assert compact == pytest.approx(samples / difficulty, rel=0.5)


class TestPowRegistry:
    def test_test_pow_is_double_sha256(self):
        data = b"pow input"
        expected = hashlib.sha256(hashlib.sha256(data).digest()).digest()
        assert double_sha256(data) == expected
        assert pow_hash("test-pow")(data) == expected

    def test_deterministic(self):
        assert double_sha256(b"x") == double_sha256(b"x")

    def test_cryptonight_slot_declared_but_unimplemented(self):
        fn = pow_hash("cryptonight")
        with pytest.raises(UnavailableHash):
            fn(b"data")

    def test_unknown_identifier(self):
        with pytest.raises(UnavailableHash):
            pow_hash("no-such-hash")

    def test_registration(self):
        register_pow_hash("unit-test-hash", lambda data: b"\x00" * 32)
        assert pow_hash("unit-test-hash")(b"") == b"\x00" * 32
