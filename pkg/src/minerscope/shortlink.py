"""Short-link mechanics: ID-space enumeration, hash-gated resolution, and
resolution-time arithmetic.

A link is resolved once the accepted shares, valued at the pool's share
difficulty, cover the creator's required hash count.
"""

import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional

from .blob import set_nonce
from .errors import Cancelled, StaleJob
from .pool import ObfuscationKey, deobfuscate
from .pow import MAX_TARGET, meets_compact_target, pow_hash

ID_ALPHABET = "abcdefghijklmnopqrstuvwxyz0123456789"
MAX_ID_LENGTH = 4
SECONDS_PER_YEAR = 31_557_600  # Julian year
NONCE_SPACE = 1 << 32


def enumerate_ids(max_length: int = MAX_ID_LENGTH) -> Iterator[str]:
    """All link IDs of length 1..max_length, shortest first, lexicographic
    within a length over the 36-symbol alphabet."""
    if not 1 <= max_length <= MAX_ID_LENGTH:
        raise ValueError("max_length must be in 1..%d" % MAX_ID_LENGTH)
    base = len(ID_ALPHABET)
    for length in range(1, max_length + 1):
        for index in range(base ** length):
            digits = []
            value = index
            for _ in range(length):
                value, digit = divmod(value, base)
                digits.append(ID_ALPHABET[digit])
            yield "".join(reversed(digits))


def id_space_size(max_length: int = MAX_ID_LENGTH) -> int:
    if not 1 <= max_length <= MAX_ID_LENGTH:
        raise ValueError("max_length must be in 1..%d" % MAX_ID_LENGTH)
    base = len(ID_ALPHABET)
    return sum(base ** k for k in range(1, max_length + 1))


def time_to_resolve(required_hashes: int, client_rate) -> Fraction:
    """Exact rational seconds to compute ``required_hashes`` at a client
    hash rate."""
    if required_hashes < 0:
        raise ValueError("required_hashes must be non-negative")
    rate = Fraction(str(client_rate))
    if rate <= 0:
        raise ValueError("client_rate must be positive")
    return Fraction(required_hashes) / rate


def years_to_resolve(required_hashes: int, client_rate) -> Fraction:
    return time_to_resolve(required_hashes, client_rate) / SECONDS_PER_YEAR


@dataclass(frozen=True)
class ShortLinkTask:
    link_id: str
    required_hashes: int
    creator_token: str = ""

    def __post_init__(self):
        if not 1 <= len(self.link_id) <= MAX_ID_LENGTH or \
                any(c not in ID_ALPHABET for c in self.link_id):
            raise ValueError("link id must be 1..%d chars over [a-z0-9]"
                             % MAX_ID_LENGTH)
        if self.required_hashes < 1:
            raise ValueError("required_hashes must be >= 1")


class SolveProgress:
    """Thread-safe view of a running solve."""

    def __init__(self):
        self._lock = threading.Lock()
        self._hashes_done = 0
        self._shares_submitted = 0
        self._accepted = 0
        self._resolved_url: Optional[str] = None

    def add_hash(self) -> None:
        with self._lock:
            self._hashes_done += 1

    def record_share(self, accepted: bool) -> None:
        with self._lock:
            self._shares_submitted += 1
            if accepted:
                self._accepted += 1

    def resolve(self, url: str) -> None:
        with self._lock:
            self._resolved_url = url

    @property
    def hashes_done(self) -> int:
        with self._lock:
            return self._hashes_done

    @property
    def shares_submitted(self) -> int:
        with self._lock:
            return self._shares_submitted

    @property
    def accepted_shares(self) -> int:
        with self._lock:
            return self._accepted

    @property
    def resolved_url(self) -> Optional[str]:
        with self._lock:
            return self._resolved_url


def _share_difficulty(target: int) -> int:
    if target <= 0:
        return MAX_TARGET
    return max(1, MAX_TARGET // target)


def solve(task: ShortLinkTask, session, workers: int = 1,
          pow_id: str = "test-pow",
          key: Optional[ObfuscationKey] = None,
          cancel: Optional[threading.Event] = None,
          submit_hook=None) -> SolveProgress:
    """Resolve one short link against a pool session.

    Fetches jobs, partitions the 32-bit nonce space across workers, submits
    every hash meeting the compact target, and stops once accepted work
    covers the required hashes (the pool then reveals the URL).
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    progress = SolveProgress()
    hash_fn = pow_hash(pow_id)

    already = getattr(session, "login_resolution", None)
    if already is not None:
        url = already()
        if url is not None:
            progress.resolve(url)
            return progress

    stop = threading.Event()
    refresh = threading.Event()
    submit_lock = threading.Lock()

    def check_cancel():
        if cancel is not None and cancel.is_set():
            stop.set()
            raise Cancelled("solve of %s cancelled" % task.link_id)

    def run_worker(job_id: str, blob: bytes, target: int, difficulty: int,
                   start: int, end: int, errors: list):
        try:
            for nonce in range(start, end):
                if stop.is_set() or refresh.is_set():
                    return
                check_cancel()
                digest = hash_fn(set_nonce(blob, nonce))
                progress.add_hash()
                if not meets_compact_target(digest, target):
                    continue
                with submit_lock:
                    if stop.is_set():
                        return
                    try:
                        result = session.submit(job_id, nonce, digest)
                    except StaleJob:
                        refresh.set()
                        return
                    progress.record_share(result.get("status") == "OK")
                    if submit_hook is not None:
                        submit_hook(blob, nonce, digest, target)
                    url = result.get("resolved_url")
                    if url is not None:
                        progress.resolve(url)
                        stop.set()
                        return
                    if progress.accepted_shares * difficulty >= task.required_hashes:
                        stop.set()
                        return
        except Cancelled:
            errors.append("cancelled")
        except Exception as exc:  # propagated after join
            errors.append(exc)
            stop.set()

    while not stop.is_set():
        check_cancel()
        job = session.get_job()
        blob = deobfuscate(job.blob, key) if key is not None else job.blob
        difficulty = _share_difficulty(job.target)
        refresh.clear()
        step = NONCE_SPACE // workers
        errors: list = []
        threads = []
        for i in range(workers):
            start = i * step
            end = NONCE_SPACE if i == workers - 1 else (i + 1) * step
            t = threading.Thread(target=run_worker,
                                 args=(job.job_id, blob, job.target, difficulty,
                                       start, end, errors),
                                 daemon=True)
            threads.append(t)
            t.start()
        for t in threads:
            t.join()
        if "cancelled" in errors:
            raise Cancelled("solve of %s cancelled" % task.link_id)
        real = [e for e in errors if isinstance(e, Exception)]
        if real:
            raise real[0]
        if not refresh.is_set() and not stop.is_set():
            # whole nonce space exhausted without finishing: fetch a new job
            continue
    return progress
