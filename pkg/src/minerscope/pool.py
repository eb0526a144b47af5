"""Stratum-style pool client and the shared wire format.

Frames are newline-delimited JSON over a persistent TCP connection.
Requests carry integer ids; the server answers with ``result`` or
``error`` and may push unsolicited ``job`` notifications:

    -> {"id": 1, "method": "login", "params": {"token": "..."}}
    <- {"id": 1, "result": {"session": "...", "job": {...}}}
    -> {"id": 2, "method": "getjob", "params": {}}
    <- {"id": 2, "result": {"job_id": "...", "blob": "<hex>", "target": "<hex8>"}}
    -> {"id": 3, "method": "submit", "params": {"job_id": "...", "nonce": "<hex8>",
                                                "result": "<hex64>"}}
    <- {"id": 3, "result": {"status": "OK"}}
    <- {"method": "job", "params": {...}}            # push, no id

Targets travel as 8 hex digits, big-endian rendering of the 32-bit compact
target. Nonces travel as the 4 nonce bytes in blob order (little-endian).
"""

import json
import socket
import threading
import time
from dataclasses import dataclass
from typing import Optional

from .errors import (AuthRejected, ConnectFailure, InvalidShare, OffsetOutOfRange,
                     PoolError, ProtocolError, StaleJob)

DEFAULT_POLL_INTERVAL = 0.5
BACKOFF_BASE = 1.0
BACKOFF_CAP = 60.0
REPLY_TIMEOUT = 10.0

ERROR_CODES = {
    "stale-job": StaleJob,
    "invalid-share": InvalidShare,
    "auth": AuthRejected,
}


@dataclass(frozen=True)
class ObfuscationKey:
    """XOR of a single byte value at a fixed blob offset; its own inverse."""
    offset: int
    value: int

    def __post_init__(self):
        if not 0 <= self.value <= 0xFF:
            raise ValueError("key value must be one byte")
        if self.offset < 0:
            raise ValueError("key offset must be non-negative")


def deobfuscate(blob: bytes, key: ObfuscationKey) -> bytes:
    """Revert (or apply) the pool's blob obfuscation."""
    if key.offset >= len(blob):
        raise OffsetOutOfRange("offset %d beyond blob of %d bytes"
                               % (key.offset, len(blob)))
    out = bytearray(blob)
    out[key.offset] ^= key.value
    return bytes(out)


@dataclass(frozen=True)
class PoolEndpoint:
    url: str                      # host:port
    token: str
    poll_interval: float = DEFAULT_POLL_INTERVAL
    obfuscation: Optional[ObfuscationKey] = None
    name: str = ""                # defaults to url

    def __post_init__(self):
        if self.poll_interval <= 0:
            raise ValueError("poll_interval must be positive")

    @property
    def label(self) -> str:
        return self.name or self.url

    def address(self) -> tuple[str, int]:
        host, _, port = self.url.rpartition(":")
        if not host:
            raise ValueError("endpoint url must be host:port")
        return host, int(port)


@dataclass(frozen=True)
class Job:
    job_id: str
    blob: bytes
    target: int
    received_at: float            # epoch seconds
    endpoint: str


def job_from_wire(params: dict, endpoint: str) -> Job:
    try:
        return Job(job_id=str(params["job_id"]),
                   blob=bytes.fromhex(params["blob"]),
                   target=int(params["target"], 16),
                   received_at=time.time(),
                   endpoint=endpoint)
    except (KeyError, TypeError, ValueError) as exc:
        raise ProtocolError("bad job frame: %s" % exc)


def job_to_log_record(job: Job) -> dict:
    return {
        "endpoint": job.endpoint,
        "received_at": int(job.received_at * 1000),
        "job_id": job.job_id,
        "blob_hex": job.blob.hex(),
        "target_hex": "%08x" % job.target,
    }


def job_from_log_record(rec: dict) -> Job:
    return Job(job_id=rec["job_id"],
               blob=bytes.fromhex(rec["blob_hex"]),
               target=int(rec["target_hex"], 16),
               received_at=rec["received_at"] / 1000.0,
               endpoint=rec["endpoint"])


def nonce_to_wire(nonce: int) -> str:
    return nonce.to_bytes(4, "little").hex()


def nonce_from_wire(text: str) -> int:
    raw = bytes.fromhex(text)
    if len(raw) != 4:
        raise ProtocolError("nonce must be 4 bytes")
    return int.from_bytes(raw, "little")


class _LineSocket:
    """Blocking newline-framed JSON over a socket."""

    def __init__(self, sock: socket.socket):
        self.sock = sock
        self.buffer = b""

    def send(self, frame: dict) -> None:
        self.sock.sendall(json.dumps(frame).encode() + b"\n")

    def recv(self, timeout: Optional[float]) -> dict:
        self.sock.settimeout(timeout)
        while b"\n" not in self.buffer:
            try:
                chunk = self.sock.recv(4096)
            except socket.timeout:
                raise ProtocolError("timed out waiting for a frame")
            if not chunk:
                raise ConnectionError("pool closed the connection")
            self.buffer += chunk
        line, self.buffer = self.buffer.split(b"\n", 1)
        try:
            frame = json.loads(line)
        except json.JSONDecodeError:
            raise ProtocolError("non-JSON frame: %r" % line[:80])
        if not isinstance(frame, dict):
            raise ProtocolError("frame is not an object")
        return frame

    def pending(self) -> bool:
        if b"\n" in self.buffer:
            return True
        self.sock.settimeout(0)
        try:
            chunk = self.sock.recv(4096)
            if not chunk:
                raise ConnectionError("pool closed the connection")
            self.buffer += chunk
        except (BlockingIOError, socket.timeout):
            pass
        return b"\n" in self.buffer

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass


class PoolSession:
    """One authenticated connection to a pool endpoint."""

    def __init__(self, endpoint: PoolEndpoint, link_id: Optional[str] = None):
        self.endpoint = endpoint
        self.link_id = link_id
        self.line: Optional[_LineSocket] = None
        self.session_id = ""
        self.next_id = 1
        self.pushed_jobs: list[Job] = []
        self.gaps: list[tuple[float, float]] = []
        self.current_job: Optional[Job] = None
        self._login_resolution: Optional[str] = None

    # -- connection management ------------------------------------------------

    def connect(self) -> Job:
        host, port = self.endpoint.address()
        try:
            sock = socket.create_connection((host, port), timeout=REPLY_TIMEOUT)
        except OSError as exc:
            raise ConnectFailure("%s: %s" % (self.endpoint.url, exc))
        self.line = _LineSocket(sock)
        params = {"token": self.endpoint.token, "endpoint": self.endpoint.label}
        if self.link_id is not None:
            params["link_id"] = self.link_id
        result = self.request("login", params)
        try:
            self.session_id = result["session"]
            job = job_from_wire(result["job"], self.endpoint.label)
        except (KeyError, TypeError) as exc:
            raise ProtocolError("bad login result: %s" % exc)
        self.current_job = job
        self._login_resolution = result.get("resolved_url")
        return job

    def login_resolution(self) -> Optional[str]:
        """Resolved URL revealed at login time, when the link is already paid."""
        return self._login_resolution

    def close(self) -> None:
        if self.line is not None:
            self.line.close()
            self.line = None

    # -- request/reply ----------------------------------------------------------

    def request(self, method: str, params: dict) -> dict:
        if self.line is None:
            raise ConnectionError("session is not connected")
        msg_id = self.next_id
        self.next_id += 1
        self.line.send({"id": msg_id, "method": method, "params": params})
        while True:
            frame = self.line.recv(REPLY_TIMEOUT)
            if frame.get("id") is None and frame.get("method") == "job":
                self.pushed_jobs.append(
                    job_from_wire(frame.get("params", {}), self.endpoint.label))
                continue
            if frame.get("id") != msg_id:
                raise ProtocolError("reply id %r does not match request %d"
                                    % (frame.get("id"), msg_id))
            error = frame.get("error")
            if error is not None:
                code = (error or {}).get("code", "")
                exc_type = ERROR_CODES.get(code, PoolError)
                raise exc_type(error.get("message", code))
            result = frame.get("result")
            if result is None:
                raise ProtocolError("frame carries neither result nor error")
            return result

    def drain_pushes(self) -> list[Job]:
        jobs = []
        if self.line is not None:
            try:
                while self.line.pending():
                    frame = self.line.recv(REPLY_TIMEOUT)
                    if frame.get("method") == "job":
                        jobs.append(job_from_wire(frame.get("params", {}),
                                                  self.endpoint.label))
            except (ConnectionError, OSError):
                pass
        self.pushed_jobs.extend(jobs)
        return jobs

    def get_job(self) -> Job:
        result = self.request("getjob", {})
        job = job_from_wire(result, self.endpoint.label)
        self.current_job = job
        return job

    def submit(self, job_id: str, nonce: int, result_digest: bytes) -> dict:
        return self.request("submit", {
            "job_id": job_id,
            "nonce": nonce_to_wire(nonce),
            "result": result_digest.hex(),
        })


def login(endpoint: PoolEndpoint, link_id: Optional[str] = None) -> PoolSession:
    """Connect and authorize; the session holds the first pushed job."""
    session = PoolSession(endpoint, link_id=link_id)
    session.connect()
    return session


def submit_share(session: PoolSession, job_id: str, nonce: int,
                 result_digest: bytes) -> bool:
    """Submit a share and return the pool verdict. Raises StaleJob or
    InvalidShare on the corresponding pool error codes."""
    result = session.submit(job_id, nonce, result_digest)
    return result.get("status") == "OK"


def poll_jobs(session: PoolSession, duration: float,
              backoff_base: float = BACKOFF_BASE,
              backoff_cap: float = BACKOFF_CAP) -> list[Job]:
    """Request a fresh job every poll interval for ``duration`` seconds.

    Disconnections are never fatal: the session reconnects with exponential
    backoff and the dead span is recorded in ``session.gaps``.
    """
    interval = session.endpoint.poll_interval
    started = time.monotonic()
    deadline = started + duration
    next_poll = started
    jobs: list[Job] = []

    while time.monotonic() < deadline:
        for job in session.drain_pushes():
            jobs.append(job)
        session.pushed_jobs.clear()
        now = time.monotonic()
        if now >= next_poll:
            try:
                jobs.append(session.get_job())
            except (ConnectionError, OSError, ProtocolError, ConnectFailure):
                gap_start = time.time()
                backoff = backoff_base
                while time.monotonic() < deadline:
                    session.close()
                    try:
                        initial = session.connect()
                        jobs.append(initial)
                        break
                    except (ConnectFailure, ProtocolError, ConnectionError, OSError):
                        time.sleep(min(backoff, max(0.0, deadline - time.monotonic())))
                        backoff = min(backoff * 2, backoff_cap)
                session.gaps.append((gap_start, time.time()))
            next_poll += interval
            if next_poll < time.monotonic():
                # an outage outlasted one interval: resume cadence, no catch-up
                next_poll = time.monotonic()
        time.sleep(max(0.0, min(next_poll, deadline) - time.monotonic()))
    return jobs


class JobLogWriter:
    """Serialized append-only writer for the job log file."""

    def __init__(self, path: str):
        self.path = path
        self.lock = threading.Lock()
        self.fh = open(path, "a", encoding="utf-8")

    def append(self, job: Job) -> None:
        line = json.dumps(job_to_log_record(job))
        with self.lock:
            self.fh.write(line + "\n")
            self.fh.flush()

    def close(self) -> None:
        with self.lock:
            self.fh.close()


def load_job_log(path: str) -> list[Job]:
    jobs = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                jobs.append(job_from_log_record(json.loads(line)))
    return jobs
