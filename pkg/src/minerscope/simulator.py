"""Mock mining pool: issues jobs from a scripted chain, validates shares,
and records ground truth so the attribution pipeline is testable offline.

The core is a plain state machine guarded by one lock; ``SimulatorServer``
exposes it over the wire protocol, ``LocalPoolSession`` drives it in-process
with the same request surface as a live session.
"""

import json
import random
import socket
import socketserver
import threading
import time
import uuid
from dataclasses import dataclass
from typing import Callable, Optional

from .blob import BlockHeaderBlob, serialize_blob, set_nonce
from .chain import ChainBlock
from .errors import AuthRejected, InvalidShare, PoolError, StaleJob
from .merkle import DigestFn, sha256_digest, tree_hash
from .pool import (Job, ObfuscationKey, deobfuscate, nonce_from_wire)
from .pow import compact_target, meets_compact_target, meets_difficulty, pow_hash

DEFAULT_BLOCK_TIME = 120
DEFAULT_BASE_TIMESTAMP = 1_527_811_200  # 2018-06-01 00:00 UTC
DEFAULT_REWARD = 3_000_000_000_000     # 3.0 coins in atomic units
HIGH_DIFFICULTY = 1 << 192             # never met by accident in tests


@dataclass(frozen=True)
class BlockTemplate:
    height: int
    difficulty: int = HIGH_DIFFICULTY
    reward: int = DEFAULT_REWARD
    timestamp: Optional[int] = None


def make_chain_script(blocks: int, start_height: int = 1,
                      difficulty: int = HIGH_DIFFICULTY,
                      reward: int = DEFAULT_REWARD,
                      base_timestamp: int = DEFAULT_BASE_TIMESTAMP,
                      block_time: int = DEFAULT_BLOCK_TIME) -> list[BlockTemplate]:
    return [BlockTemplate(height=start_height + i, difficulty=difficulty,
                          reward=reward,
                          timestamp=base_timestamp + i * block_time)
            for i in range(blocks)]


def load_chain_script(path: str) -> list[BlockTemplate]:
    templates = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            templates.append(BlockTemplate(
                height=int(rec["height"]),
                difficulty=int(rec.get("difficulty", HIGH_DIFFICULTY)),
                reward=int(rec.get("reward", DEFAULT_REWARD)),
                timestamp=rec.get("timestamp")))
    return templates


@dataclass(frozen=True)
class TipVariant:
    blob: bytes                    # nonce zeroed, unobfuscated
    tx_hashes: tuple[bytes, ...]
    merkle_root: bytes


@dataclass(frozen=True)
class ShortLink:
    link_id: str
    required_hashes: int
    url: str
    creator_token: str


@dataclass
class _IssuedJob:
    tip: bytes
    backend: int
    variant: int


class PoolSimulator:
    """Authoritative pool state: one chain tip, per-backend blob variants,
    share accounting, and the mined-chain ground truth."""

    def __init__(self, templates: list[BlockTemplate],
                 blobs_per_tip: int = 8,
                 endpoints: tuple[str, ...] = ("pool-0",),
                 backends: int = 1,
                 share_difficulty: int = 16,
                 tokens: tuple[str, ...] = ("demo",),
                 pow_id: str = "test-pow",
                 obfuscation: Optional[ObfuscationKey] = None,
                 tree_digest: DigestFn = sha256_digest,
                 seed: int = 0):
        if not templates:
            raise ValueError("chain script must contain at least one template")
        if backends < 1 or blobs_per_tip < 1:
            raise ValueError("backends and blobs_per_tip must be >= 1")
        self.templates = sorted(templates, key=lambda t: t.height)
        self.blobs_per_tip = blobs_per_tip
        self.endpoints = tuple(endpoints)
        self.backend_of = {name: i % backends
                           for i, name in enumerate(self.endpoints)}
        self.backends = backends
        self.share_difficulty = share_difficulty
        self.share_target = compact_target(share_difficulty)
        self.tokens = set(tokens)
        self.pow_fn = pow_hash(pow_id)
        self.obfuscation = obfuscation
        self.tree_digest = tree_digest
        self.rng = random.Random(seed)
        self.lock = threading.RLock()

        self.links: dict[str, ShortLink] = {}
        self.link_credit: dict[str, int] = {}

        self.issued: dict[str, _IssuedJob] = {}
        self.issued_blobs_by_tip: dict[bytes, set[bytes]] = {}
        self.accepted_shares: list[tuple[str, str, int]] = []  # token, job_id, nonce
        self.pool_won_heights: set[int] = set()
        self.on_advance: Optional[Callable[[], None]] = None

        self._job_counter = 0
        self._next_template = 0
        genesis_height = self.templates[0].height - 1
        genesis = ChainBlock(
            height=genesis_height,
            block_hash=self._random_hash(),
            prev_id=b"\x00" * 32,
            timestamp=(self.templates[0].timestamp or DEFAULT_BASE_TIMESTAMP)
            - DEFAULT_BLOCK_TIME,
            difficulty=self.templates[0].difficulty,
            reward=0,
            tx_hashes=(self._random_hash(),),
        )
        self.chain: list[ChainBlock] = [genesis]
        self._variants: dict[int, list[TipVariant]] = {}
        self._rebuild_variants()

    # -- helpers ----------------------------------------------------------------

    def _random_hash(self) -> bytes:
        return self.rng.getrandbits(256).to_bytes(32, "little")

    @property
    def tip(self) -> bytes:
        return self.chain[-1].block_hash

    def next_height(self) -> int:
        return self.chain[-1].height + 1

    def current_template(self) -> Optional[BlockTemplate]:
        if self._next_template >= len(self.templates):
            return None
        return self.templates[self._next_template]

    def exhausted(self) -> bool:
        return self.current_template() is None

    def _rebuild_variants(self) -> None:
        template = self.current_template()
        timestamp = template.timestamp if template is not None else None
        if timestamp is None:
            timestamp = self.chain[-1].timestamp + DEFAULT_BLOCK_TIME
        shared_txs = tuple(self._random_hash()
                           for _ in range(self.rng.randrange(4)))
        self._variants = {}
        for backend in range(self.backends):
            variants = []
            for _ in range(self.blobs_per_tip):
                coinbase = self._random_hash()
                txs = (coinbase,) + shared_txs
                root = tree_hash(txs, self.tree_digest)
                header = BlockHeaderBlob(
                    major_version=9, minor_version=9, timestamp=timestamp,
                    prev_id=self.tip, nonce=0, merkle_root=root,
                    tx_count=len(txs))
                variants.append(TipVariant(blob=serialize_blob(header),
                                           tx_hashes=txs, merkle_root=root))
            self._variants[backend] = variants

    # -- token / link registry ----------------------------------------------------

    def check_token(self, token: str) -> None:
        if token not in self.tokens:
            raise AuthRejected("unknown token")

    def register_link(self, link: ShortLink) -> None:
        with self.lock:
            self.links[link.link_id] = link
            self.link_credit.setdefault(link.link_id, 0)

    def link_resolution(self, link_id: Optional[str]) -> Optional[str]:
        """Resolved URL once accepted work covers the link requirement."""
        if link_id is None or link_id not in self.links:
            return None
        link = self.links[link_id]
        if self.link_credit.get(link_id, 0) * self.share_difficulty >= \
                link.required_hashes:
            return link.url
        return None

    # -- jobs and shares ------------------------------------------------------------

    def job_for(self, endpoint: str) -> dict:
        """Wire form of a fresh job for one endpoint, drawn uniformly from
        the endpoint's backend variants for the current tip."""
        with self.lock:
            backend = self.backend_of.get(endpoint, 0)
            index = self.rng.randrange(self.blobs_per_tip)
            variant = self._variants[backend][index]
            self._job_counter += 1
            job_id = "j%08d" % self._job_counter
            self.issued[job_id] = _IssuedJob(tip=self.tip, backend=backend,
                                             variant=index)
            self.issued_blobs_by_tip.setdefault(self.tip, set()).add(variant.blob)
            blob = variant.blob
            if self.obfuscation is not None:
                blob = deobfuscate(blob, self.obfuscation)  # XOR is its own inverse
            return {"job_id": job_id, "blob": blob.hex(),
                    "target": "%08x" % self.share_target}

    def submit(self, token: str, job_id: str, nonce: int, result_digest: bytes,
               link_id: Optional[str] = None) -> dict:
        """Validate a share by recomputing the PoW hash. Raises StaleJob or
        InvalidShare; advances the tip when the share also meets the network
        difficulty."""
        with self.lock:
            self.check_token(token)
            issued = self.issued.get(job_id)
            if issued is None or issued.tip != self.tip:
                raise StaleJob("job %s is unknown or expired" % job_id)
            variant = self._variants[issued.backend][issued.variant]
            digest = self.pow_fn(set_nonce(variant.blob, nonce))
            if digest != result_digest:
                raise InvalidShare("result digest does not match recomputation")
            if not meets_compact_target(digest, self.share_target):
                raise InvalidShare("share misses the compact target")
            self.accepted_shares.append((token, job_id, nonce))
            if link_id is not None and link_id in self.links:
                self.link_credit[link_id] = self.link_credit.get(link_id, 0) + 1
            result = {"status": "OK"}
            resolved = self.link_resolution(link_id)
            if resolved is not None:
                result["resolved_url"] = resolved
            template = self.current_template()
            if template is not None and meets_difficulty(digest, template.difficulty):
                self.advance_tip(winner=(issued.backend, issued.variant))
            return result

    def advance_tip(self, winner: Optional[tuple[int, int]] = None) -> ChainBlock:
        """Mount the next scripted block onto the chain. ``winner`` names a
        (backend, variant) pair when the pool found the block; otherwise an
        external miner wins with a foreign Coinbase."""
        with self.lock:
            template = self.current_template()
            if template is None:
                raise PoolError("chain script exhausted")
            if winner is not None:
                backend, index = winner
                variant = self._variants[backend][index]
                txs = variant.tx_hashes
            else:
                txs = (self._random_hash(),) + tuple(
                    self._random_hash() for _ in range(self.rng.randrange(4)))
            block = ChainBlock(
                height=template.height,
                block_hash=self._random_hash(),
                prev_id=self.tip,
                timestamp=(template.timestamp
                           or self.chain[-1].timestamp + DEFAULT_BLOCK_TIME),
                difficulty=template.difficulty,
                reward=template.reward,
                tx_hashes=txs)
            self.chain.append(block)
            if winner is not None:
                self.pool_won_heights.add(block.height)
            self._next_template += 1
            if not self.exhausted():
                self._rebuild_variants()
            callback = self.on_advance
        if callback is not None:
            callback()
        return block


class LocalPoolSession:
    """In-process session over a simulator core with the live-session call
    surface (get_job / submit), for tests and batch drivers."""

    def __init__(self, simulator: PoolSimulator, endpoint: str = "pool-0",
                 token: str = "demo", link_id: Optional[str] = None):
        simulator.check_token(token)
        self.simulator = simulator
        self.endpoint_name = endpoint
        self.token = token
        self.link_id = link_id

    def get_job(self) -> Job:
        wire = self.simulator.job_for(self.endpoint_name)
        return Job(job_id=wire["job_id"], blob=bytes.fromhex(wire["blob"]),
                   target=int(wire["target"], 16), received_at=time.time(),
                   endpoint=self.endpoint_name)

    def submit(self, job_id: str, nonce: int, result_digest: bytes) -> dict:
        return self.simulator.submit(self.token, job_id, nonce, result_digest,
                                     link_id=self.link_id)

    def login_resolution(self) -> Optional[str]:
        return self.simulator.link_resolution(self.link_id)


# -- wire server ----------------------------------------------------------------

class _Handler(socketserver.StreamRequestHandler):
    # self.server is the ThreadingTCPServer; SimulatorServer hangs the core
    # and the connection registry off it before serving.

    def handle(self):
        self.token = None
        self.link_id = None
        self.endpoint_name = self.server.endpoint_name
        self.write_lock = threading.Lock()
        self.server.register(self)
        try:
            for raw in self.rfile:
                try:
                    frame = json.loads(raw)
                    if not isinstance(frame, dict):
                        raise ValueError("frame is not an object")
                except ValueError:
                    self._send({"id": None,
                                "error": {"code": "protocol",
                                          "message": "unparseable frame"}})
                    return
                self._dispatch(frame)
        except (ConnectionError, OSError):
            pass
        finally:
            self.server.unregister(self)

    def _send(self, frame: dict) -> None:
        data = json.dumps(frame).encode() + b"\n"
        with self.write_lock:
            self.wfile.write(data)
            self.wfile.flush()

    def _dispatch(self, frame: dict) -> None:
        msg_id = frame.get("id")
        method = frame.get("method")
        params = frame.get("params") or {}
        core = self.server.core
        try:
            if method == "login":
                token = str(params.get("token", ""))
                core.check_token(token)
                self.token = token
                self.link_id = params.get("link_id")
                if params.get("endpoint") in core.backend_of:
                    self.endpoint_name = params["endpoint"]
                result = {"session": uuid.uuid4().hex,
                          "job": core.job_for(self.endpoint_name)}
                resolved = core.link_resolution(self.link_id)
                if resolved is not None:
                    result["resolved_url"] = resolved
                self._send({"id": msg_id, "result": result})
            elif method == "getjob":
                self._require_login()
                self._send({"id": msg_id,
                            "result": core.job_for(self.endpoint_name)})
            elif method == "submit":
                self._require_login()
                result = core.submit(self.token, str(params.get("job_id", "")),
                                     nonce_from_wire(str(params.get("nonce", ""))),
                                     bytes.fromhex(str(params.get("result", ""))),
                                     link_id=self.link_id)
                self._send({"id": msg_id, "result": result})
            else:
                self._send({"id": msg_id,
                            "error": {"code": "protocol",
                                      "message": "unknown method %r" % method}})
        except AuthRejected as exc:
            self._send({"id": msg_id, "error": {"code": "auth",
                                                "message": str(exc)}})
        except StaleJob as exc:
            self._send({"id": msg_id, "error": {"code": "stale-job",
                                                "message": str(exc)}})
        except InvalidShare as exc:
            self._send({"id": msg_id, "error": {"code": "invalid-share",
                                                "message": str(exc)}})
        except (PoolError, ValueError) as exc:
            self._send({"id": msg_id, "error": {"code": "protocol",
                                                "message": str(exc)}})

    def _require_login(self):
        if self.token is None:
            raise AuthRejected("login first")

    def push_job(self):
        try:
            self._send({"method": "job",
                        "params": self.server.core.job_for(self.endpoint_name)})
        except (ConnectionError, OSError):
            pass


class _ThreadingServer(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True


class SimulatorServer:
    """Threaded TCP front end for one endpoint name of a simulator core."""

    def __init__(self, core: PoolSimulator, host: str = "127.0.0.1",
                 port: int = 0, endpoint_name: Optional[str] = None,
                 push_on_advance: bool = True):
        self.core = core
        self.endpoint_name = endpoint_name or core.endpoints[0]
        self._connections: set[_Handler] = set()
        self._conn_lock = threading.Lock()

        server = _ThreadingServer((host, port), _Handler)
        server.core = core
        server.endpoint_name = self.endpoint_name
        server.register = self.register
        server.unregister = self.unregister
        self.server = server
        self.thread: Optional[threading.Thread] = None
        if push_on_advance:
            previous = core.on_advance

            def fanout():
                if previous is not None:
                    previous()
                self.broadcast()

            core.on_advance = fanout

    @property
    def address(self) -> tuple[str, int]:
        return self.server.server_address

    @property
    def url(self) -> str:
        host, port = self.address
        return "%s:%d" % (host, port)

    def register(self, handler: _Handler) -> None:
        with self._conn_lock:
            self._connections.add(handler)

    def unregister(self, handler: _Handler) -> None:
        with self._conn_lock:
            self._connections.discard(handler)

    def broadcast(self) -> None:
        with self._conn_lock:
            handlers = [h for h in self._connections if h.token is not None]
        for handler in handlers:
            handler.push_job()

    def start(self) -> "SimulatorServer":
        self.thread = threading.Thread(target=self.server.serve_forever,
                                       kwargs={"poll_interval": 0.05},
                                       daemon=True)
        self.thread.start()
        return self

    def stop(self) -> None:
        self.server.shutdown()
        self.server.server_close()
        with self._conn_lock:
            handlers = list(self._connections)
        for handler in handlers:
            try:
                handler.connection.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            try:
                handler.connection.close()
            except OSError:
                pass
        if self.thread is not None:
            self.thread.join(timeout=5)


def simulate_pool(templates: list[BlockTemplate], blobs_per_tip: int = 8,
                  tokens: tuple[str, ...] = ("demo",),
                  host: str = "127.0.0.1", port: int = 0,
                  **kwargs) -> SimulatorServer:
    """Start a mock pool server for a scripted chain; caller stops it."""
    core = PoolSimulator(templates, blobs_per_tip=blobs_per_tip,
                         tokens=tokens, **kwargs)
    return SimulatorServer(core, host=host, port=port).start()


# -- offline driver ---------------------------------------------------------------

@dataclass
class ScriptedRun:
    jobs: list[Job]
    chain: list[ChainBlock]
    won_heights: set[int]
    simulator: PoolSimulator


def scripted_run(seed: int, blocks: int = 100, blobs_per_tip: int = 8,
                 polls_per_tip: int = 120,
                 endpoints: tuple[str, ...] = ("pool-0",), backends: int = 1,
                 wins: tuple[int, int] = (20, 40),
                 obfuscation: Optional[ObfuscationKey] = None,
                 block_time: int = DEFAULT_BLOCK_TIME) -> ScriptedRun:
    """Drive a simulator through ``blocks`` tips without sockets, logging
    uniform job polls per tip and scripting which heights the pool wins."""
    rng = random.Random(seed)
    templates = make_chain_script(blocks, block_time=block_time)
    sim = PoolSimulator(templates, blobs_per_tip=blobs_per_tip,
                        endpoints=endpoints, backends=backends,
                        obfuscation=obfuscation, seed=rng.randrange(1 << 63))
    win_count = min(rng.randint(*wins), blocks)
    win_heights = set(rng.sample(range(templates[0].height,
                                       templates[-1].height + 1), win_count))
    jobs: list[Job] = []
    clock = float(templates[0].timestamp or DEFAULT_BASE_TIMESTAMP)
    for _ in range(blocks):
        for poll in range(polls_per_tip):
            endpoint = endpoints[poll % len(endpoints)]
            wire = sim.job_for(endpoint)
            jobs.append(Job(job_id=wire["job_id"],
                            blob=bytes.fromhex(wire["blob"]),
                            target=int(wire["target"], 16),
                            received_at=clock + poll * 0.5,
                            endpoint=endpoint))
        if sim.next_height() in win_heights:
            winner = (rng.randrange(backends), rng.randrange(blobs_per_tip))
            sim.advance_tip(winner=winner)
        else:
            sim.advance_tip()
        clock += block_time
    return ScriptedRun(jobs=jobs, chain=list(sim.chain),
                       won_heights=set(sim.pool_won_heights), simulator=sim)
