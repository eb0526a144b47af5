"""Tree hash over transaction digests, CryptoNote style.

The bottom layer is partial when the leaf count is not a power of two: with
``cnt`` the largest power of two <= count, the first ``2*cnt - count`` leaves
are carried unchanged and the remaining leaves are digested pairwise, after
which layers halve by pairwise digesting until one digest remains.
"""

import hashlib
from typing import Callable, Sequence

from .errors import EmptyLeaves

DigestFn = Callable[[bytes], bytes]


def sha256_digest(data: bytes) -> bytes:
    """Default node digest for the tree (independent of the PoW hash)."""
    return hashlib.sha256(data).digest()


def tree_hash(leaves: Sequence[bytes], digest: DigestFn = sha256_digest) -> bytes:
    if not leaves:
        raise EmptyLeaves("tree hash over zero leaves")
    count = len(leaves)
    if count == 1:
        return leaves[0]
    if count == 2:
        return digest(leaves[0] + leaves[1])

    cnt = 1
    while cnt * 2 <= count:
        cnt *= 2
    carried = 2 * cnt - count
    row = list(leaves[:carried])
    for i in range(carried, count, 2):
        row.append(digest(leaves[i] + leaves[i + 1]))
    # row now holds cnt digests
    while len(row) > 1:
        row = [digest(row[i] + row[i + 1]) for i in range(0, len(row), 2)]
    return row[0]
