import json
import socket
import threading
import time

import pytest

from minerscope.blob import parse_blob, set_nonce
from minerscope.errors import (AuthRejected, InvalidShare, OffsetOutOfRange,
                               ProtocolError, StaleJob)
from minerscope.merkle import tree_hash
from minerscope.pool import (Job, JobLogWriter, ObfuscationKey, PoolEndpoint,
                             deobfuscate, load_job_log, login, poll_jobs,
                             submit_share)
from minerscope.pow import meets_compact_target, pow_hash
from minerscope.simulator import (PoolSimulator, SimulatorServer,
                                  make_chain_script)

TEST_POW = pow_hash("test-pow")


def find_share(blob: bytes, target: int, start: int = 0):
    nonce = start
    while True:
        digest = TEST_POW(set_nonce(blob, nonce))
        if meets_compact_target(digest, target):
            return nonce, digest
        nonce += 1


def make_core(**kwargs) -> PoolSimulator:
    defaults = dict(templates=make_chain_script(50), blobs_per_tip=8,
                    share_difficulty=16, tokens=("tok-1",), seed=7)
    defaults.update(kwargs)
    return PoolSimulator(**defaults)


@pytest.fixture()
def server():
    srv = SimulatorServer(make_core()).start()
    yield srv
    srv.stop()


def endpoint_for(server, token="tok-1", interval=0.5):
    return PoolEndpoint(url=server.url, token=token, poll_interval=interval)


class TestObfuscation:
    def test_involution(self):
        key = ObfuscationKey(offset=3, value=0x5A)
        blob = bytes(range(16))
        assert deobfuscate(deobfuscate(blob, key), key) == blob

    def test_known_xor(self):
        key = ObfuscationKey(offset=2, value=0xFF)
        blob = b"\x00\x00\xab\x00"
        assert deobfuscate(blob, key)[2] == 0x54

    def test_zero_value_is_identity(self):
        key = ObfuscationKey(offset=0, value=0)
        blob = b"\x10\x20"
        assert deobfuscate(blob, key) == blob

    def test_offset_out_of_range(self):
        with pytest.raises(OffsetOutOfRange):
            deobfuscate(b"\x00\x01", ObfuscationKey(offset=2, value=1))


class TestLogin:
    def test_login_returns_session_and_initial_job(self, server):
        session = login(endpoint_for(server))
        try:
            job = session.current_job
            assert job is not None
            header = parse_blob(job.blob)
            assert header.prev_id == server.core.tip
            assert job.target == server.core.share_target
        finally:
            session.close()

    def test_unknown_token_rejected(self, server):
        with pytest.raises(AuthRejected):
            login(endpoint_for(server, token="who-dis"))

    def test_garbage_from_server_is_protocol_error(self):
        listener = socket.create_server(("127.0.0.1", 0))

        def serve():
            conn, _ = listener.accept()
            conn.recv(4096)
            conn.sendall(b"not json at all\n")
            conn.close()

        thread = threading.Thread(target=serve, daemon=True)
        thread.start()
        endpoint = PoolEndpoint(url="127.0.0.1:%d" % listener.getsockname()[1],
                                token="tok-1")
        with pytest.raises(ProtocolError):
            login(endpoint)
        listener.close()


class TestShares:
    def test_valid_share_accepted(self, server):
        session = login(endpoint_for(server))
        try:
            job = session.get_job()
            nonce, digest = find_share(job.blob, job.target)
            assert submit_share(session, job.job_id, nonce, digest) is True
        finally:
            session.close()

    def test_wrong_digest_rejected(self, server):
        session = login(endpoint_for(server))
        try:
            job = session.get_job()
            nonce, digest = find_share(job.blob, job.target)
            bad = bytes(b ^ 0xFF for b in digest)
            with pytest.raises(InvalidShare):
                submit_share(session, job.job_id, nonce, bad)
        finally:
            session.close()

    def test_unknown_job_is_stale(self, server):
        session = login(endpoint_for(server))
        try:
            with pytest.raises(StaleJob):
                submit_share(session, "j99999999", 0, b"\x00" * 32)
        finally:
            session.close()

    def test_expired_job_is_stale(self, server):
        session = login(endpoint_for(server))
        try:
            job = session.get_job()
            server.core.advance_tip()
            nonce, digest = find_share(job.blob, job.target)
            with pytest.raises(StaleJob):
                submit_share(session, job.job_id, nonce, digest)
        finally:
            session.close()

    def test_share_accept_iff_target_met(self, server):
        # accepted exactly when the recomputed digest meets the compact target
        session = login(endpoint_for(server))
        try:
            job = session.get_job()
            nonce = 0
            accepted = tried = 0
            while accepted < 2 and tried < 2000:
                digest = TEST_POW(set_nonce(job.blob, nonce))
                expected = meets_compact_target(digest, job.target)
                if expected:
                    assert submit_share(session, job.job_id, nonce, digest)
                    accepted += 1
                tried += 1
                nonce += 1
            assert accepted == 2
        finally:
            session.close()


class TestTipAdvance:
    def test_winning_share_advances_the_tip(self):
        # network difficulty 2: half of all share digests also win the block
        core = make_core(templates=make_chain_script(20, difficulty=2))
        before_tip = core.tip
        before_height = core.chain[-1].height
        wire = core.job_for("pool-0")
        blob = bytes.fromhex(wire["blob"])
        target = int(wire["target"], 16)
        nonce = 0
        won = False
        for _ in range(2000):
            digest = TEST_POW(set_nonce(blob, nonce))
            if meets_compact_target(digest, target):
                core.submit("tok-1", wire["job_id"], nonce, digest)
                if core.tip != before_tip:
                    won = True
                    break
                # share accepted but block not won: job is still current
                wire = core.job_for("pool-0")
                blob = bytes.fromhex(wire["blob"])
            nonce += 1
        assert won, "no winning share found in 2000 nonces"
        block = core.chain[-1]
        assert block.height == before_height + 1
        assert block.height in core.pool_won_heights
        assert parse_blob(blob).merkle_root == tree_hash(block.tx_hashes)

    def test_jobs_follow_the_tip(self, server):
        session = login(endpoint_for(server))
        try:
            before = parse_blob(session.get_job().blob).prev_id
            assert before == server.core.tip
            server.core.advance_tip()
            after = parse_blob(session.get_job().blob).prev_id
            assert after == server.core.tip
            assert after != before
        finally:
            session.close()

    def test_push_on_advance(self, server):
        session = login(endpoint_for(server))
        try:
            server.core.advance_tip()
            pushed = []
            deadline = time.monotonic() + 2.0
            while not pushed and time.monotonic() < deadline:
                pushed = session.drain_pushes()
                time.sleep(0.02)
            assert pushed
            assert parse_blob(pushed[0].blob).prev_id == server.core.tip
        finally:
            session.close()


class TestPolling:
    def test_poll_count_over_five_seconds(self, server):
        session = login(endpoint_for(server, interval=0.5))
        try:
            jobs = poll_jobs(session, 5.0)
        finally:
            session.close()
        polled = [j for j in jobs if j.endpoint == session.endpoint.label]
        assert 9 <= len(polled) <= 11
        stamps = [j.received_at for j in polled]
        assert stamps == sorted(stamps)

    def test_zero_duration(self, server):
        session = login(endpoint_for(server))
        try:
            assert poll_jobs(session, 0.0) == []
        finally:
            session.close()

    def test_gap_recorded_and_polling_resumes(self):
        core = make_core()
        srv = SimulatorServer(core).start()
        host, port = srv.address
        endpoint = PoolEndpoint(url="%s:%d" % (host, port), token="tok-1",
                                poll_interval=0.25)
        session = login(endpoint)
        result = {}

        def run():
            result["jobs"] = poll_jobs(session, 6.0, backoff_base=0.25,
                                       backoff_cap=1.0)

        thread = threading.Thread(target=run)
        thread.start()
        time.sleep(1.0)
        srv.stop()            # fault injection: kill the pool mid-poll
        time.sleep(1.0)
        restarted = SimulatorServer(make_core(), host=host, port=port).start()
        thread.join()
        session.close()
        restarted.stop()

        assert session.gaps, "outage was not recorded"
        start, end = session.gaps[0]
        assert end >= start
        resumed = [j for j in result["jobs"] if j.received_at > end]
        assert resumed, "polling did not resume after the outage"

    def test_every_polled_blob_parses_to_a_known_tip(self):
        key = ObfuscationKey(offset=5, value=0xA7)
        core = make_core(obfuscation=key)
        srv = SimulatorServer(core).start()
        try:
            endpoint = PoolEndpoint(url=srv.url, token="tok-1",
                                    poll_interval=0.05, obfuscation=key)
            session = login(endpoint)
            tips = {core.tip}
            jobs = [session.current_job]
            jobs += poll_jobs(session, 0.5)
            core.advance_tip()
            tips.add(core.tip)
            jobs += poll_jobs(session, 0.5)
            session.close()
            for job in jobs:
                header = parse_blob(deobfuscate(job.blob, key))
                assert header.prev_id in tips
        finally:
            srv.stop()


class TestDistinctBlobs:
    def test_at_most_eight_distinct_blobs_per_tip(self):
        core = make_core(blobs_per_tip=8)
        seen = set()
        for _ in range(500):
            wire = core.job_for("pool-0")
            seen.add(wire["blob"])
        assert len(seen) <= 8
        assert len(seen) >= 6  # uniform draws cover nearly all variants

    def test_32_endpoints_on_16_backends_cap_at_128(self):
        endpoints = tuple("pool-%d" % i for i in range(32))
        core = make_core(endpoints=endpoints, backends=16)
        seen = set()
        for round_ in range(60):
            for name in endpoints:
                seen.add(core.job_for(name)["blob"])
        assert len(seen) <= 128
        assert len(seen) > 8  # multiple backends contribute distinct blobs


class TestJobLog:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "jobs.log"
        writer = JobLogWriter(str(path))
        job = Job(job_id="j1", blob=b"\x01\x02", target=0x00FFFFFF,
                  received_at=1234.5678, endpoint="pool-0")
        writer.append(job)
        writer.close()
        loaded = load_job_log(str(path))
        assert len(loaded) == 1
        assert loaded[0].job_id == "j1"
        assert loaded[0].blob == b"\x01\x02"
        assert loaded[0].target == 0x00FFFFFF
        assert abs(loaded[0].received_at - 1234.567) < 0.01
        assert loaded[0].endpoint == "pool-0"
