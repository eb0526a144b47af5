"""Proof-of-work arithmetic: difficulty checks, compact share targets, and
the pluggable PoW hash registry.

A PoW digest is interpreted as a 256-bit little-endian integer H. A block
is valid for difficulty d iff H * d < 2**256, computed exactly.
"""

import hashlib
from typing import Callable

from .errors import UnavailableHash

HASH_BITS = 256
TWO_256 = 1 << HASH_BITS
MAX_TARGET = 0xFFFFFFFF

PowHashFn = Callable[[bytes], bytes]

_POW_HASHES: dict[str, PowHashFn] = {}


def register_pow_hash(identifier: str, fn: PowHashFn) -> None:
    _POW_HASHES[identifier] = fn


def pow_hash(identifier: str) -> PowHashFn:
    """Look up a registered PoW hash by identifier."""
    try:
        return _POW_HASHES[identifier]
    except KeyError:
        raise UnavailableHash("no implementation registered for %r" % identifier)


def double_sha256(data: bytes) -> bytes:
    """Deterministic stand-in PoW hash: SHA-256 applied twice."""
    return hashlib.sha256(hashlib.sha256(data).digest()).digest()


def _cryptonight_stub(data: bytes) -> bytes:
    raise UnavailableHash(
        "cryptonight is declared but not implemented; register an adapter "
        "with register_pow_hash('cryptonight', fn)")


register_pow_hash("test-pow", double_sha256)
register_pow_hash("cryptonight", _cryptonight_stub)


def hash_to_int(digest: bytes) -> int:
    """256-bit little-endian integer value of a digest."""
    if len(digest) != 32:
        raise ValueError("digest must be 32 bytes")
    return int.from_bytes(digest, "little")


def meets_difficulty(digest: bytes, difficulty: int) -> bool:
    """True iff hash_to_int(digest) * difficulty < 2**256 (exact)."""
    if difficulty < 1:
        raise ValueError("difficulty must be >= 1")
    return hash_to_int(digest) * difficulty < TWO_256


def compact_target(difficulty: int) -> int:
    """4-byte share target sent in pool jobs: floor((2**32 - 1) / difficulty)."""
    if difficulty < 1:
        raise ValueError("difficulty must be >= 1")
    return MAX_TARGET // difficulty


def meets_compact_target(digest: bytes, target: int) -> bool:
    """Share check against a compact target.

    Reads hash bytes [28..32) as a 32-bit little-endian integer and compares
    strictly against the target; the difficulty-1 target accepts everything.
    """
    if not 0 <= target <= MAX_TARGET:
        raise ValueError("target must fit 32 bits")
    if target == MAX_TARGET:
        return True
    if len(digest) != 32:
        raise ValueError("digest must be 32 bytes")
    return int.from_bytes(digest[28:32], "little") < target
