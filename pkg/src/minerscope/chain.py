"""Chain snapshot records and line-delimited snapshot file IO.

Snapshot format: one JSON object per line with fields
height, block_hash (hex), prev_id (hex), timestamp, difficulty,
reward_atomic_units, tx_hashes (ordered hex list, Coinbase first) and an
optional header_blob (hex). All hex lowercase.
"""

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import FileError, SchemaError


@dataclass(frozen=True)
class ChainBlock:
    height: int
    block_hash: bytes
    prev_id: bytes
    timestamp: int
    difficulty: int
    reward: int  # atomic currency units
    tx_hashes: tuple[bytes, ...]  # Coinbase first
    header_blob: Optional[bytes] = field(default=None, compare=False)

    def __post_init__(self):
        if len(self.block_hash) != 32 or len(self.prev_id) != 32:
            raise ValueError("block_hash and prev_id must be 32 bytes")
        if not self.tx_hashes:
            raise ValueError("tx_hashes must be non-empty (Coinbase first)")
        if any(len(h) != 32 for h in self.tx_hashes):
            raise ValueError("tx hashes must be 32 bytes")
        if self.difficulty < 1:
            raise ValueError("difficulty must be >= 1")


def block_to_record(block: ChainBlock) -> dict:
    rec = {
        "height": block.height,
        "block_hash": block.block_hash.hex(),
        "prev_id": block.prev_id.hex(),
        "timestamp": block.timestamp,
        "difficulty": block.difficulty,
        "reward_atomic_units": block.reward,
        "tx_hashes": [h.hex() for h in block.tx_hashes],
    }
    if block.header_blob is not None:
        rec["header_blob"] = block.header_blob.hex()
    return rec


def block_from_record(rec: dict) -> ChainBlock:
    try:
        blob = rec.get("header_blob")
        return ChainBlock(
            height=int(rec["height"]),
            block_hash=bytes.fromhex(rec["block_hash"]),
            prev_id=bytes.fromhex(rec["prev_id"]),
            timestamp=int(rec["timestamp"]),
            difficulty=int(rec["difficulty"]),
            reward=int(rec["reward_atomic_units"]),
            tx_hashes=tuple(bytes.fromhex(h) for h in rec["tx_hashes"]),
            header_blob=bytes.fromhex(blob) if blob is not None else None,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError("bad chain record: %s" % exc)


def load_chain(path: str) -> list[ChainBlock]:
    """Load a snapshot file, sorted by height. Raises SchemaError on the
    first malformed line (snapshots are authoritative inputs)."""
    blocks = []
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise FileError(str(exc))
    with fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError("line %d: %s" % (lineno, exc))
            blocks.append(block_from_record(rec))
    blocks.sort(key=lambda b: b.height)
    return blocks


def save_chain(path: str, blocks: Iterable[ChainBlock]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for block in blocks:
            fh.write(json.dumps(block_to_record(block)) + "\n")


def chain_gaps(blocks: list[ChainBlock]) -> list[tuple[int, int]]:
    """Missing height ranges (inclusive) between consecutive snapshot blocks."""
    gaps = []
    ordered = sorted(blocks, key=lambda b: b.height)
    for prev, cur in zip(ordered, ordered[1:]):
        if cur.height > prev.height + 1:
            gaps.append((prev.height + 1, cur.height - 1))
    return gaps


def contiguous_segments(blocks: list[ChainBlock]) -> list[list[ChainBlock]]:
    """Split a snapshot into height-contiguous runs, ascending."""
    ordered = sorted(blocks, key=lambda b: b.height)
    segments: list[list[ChainBlock]] = []
    for block in ordered:
        if segments and block.height == segments[-1][-1].height + 1:
            segments[-1].append(block)
        else:
            segments.append([block])
    return segments
