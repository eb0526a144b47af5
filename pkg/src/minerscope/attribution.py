"""Attribute mined blocks to the pool and derive size and revenue figures.

Logged jobs are clustered by previous-block pointer; a block belongs to the
pool iff the Merkle root of its transactions equals the root inside one of
the cluster's PoW inputs. The Coinbase leaf makes roots miner-specific, so
equality cannot occur across miners.
"""

import statistics
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from fractions import Fraction
from typing import Optional, Union

from .blob import parse_blob, set_nonce
from .chain import ChainBlock, chain_gaps
from .errors import EmptyWindow, MalformedBlob, OffsetOutOfRange
from .merkle import DigestFn, sha256_digest, tree_hash
from .pool import Job, ObfuscationKey, deobfuscate

ATOMIC_PER_COIN = 10 ** 12


@dataclass
class JobCluster:
    prev_id: bytes
    distinct_blobs: set[bytes]       # nonce field zeroed
    first_seen: float
    last_seen: float


@dataclass
class ClusterResult:
    clusters: list[JobCluster]
    malformed: int = 0

    def by_prev_id(self) -> dict[bytes, JobCluster]:
        return {c.prev_id: c for c in self.clusters}


def cluster_jobs(jobs: list[Job],
                 key: Optional[ObfuscationKey] = None) -> ClusterResult:
    """Group de-obfuscated job blobs by previous-block pointer.

    Blobs are canonicalized by zeroing the nonce before deduplication.
    Malformed entries are counted and skipped, never fatal.
    """
    canonical: dict[bytes, tuple[bytes, bytes]] = {}  # raw -> (prev_id, canon)
    clusters: dict[bytes, JobCluster] = {}
    malformed = 0
    for job in jobs:
        cached = canonical.get(job.blob)
        if cached is None:
            try:
                blob = deobfuscate(job.blob, key) if key is not None else job.blob
                header = parse_blob(blob)
                cached = (header.prev_id, set_nonce(blob, 0))
            except (MalformedBlob, OffsetOutOfRange):
                cached = (b"", b"")
            canonical[job.blob] = cached
        prev_id, canon = cached
        if not prev_id:
            malformed += 1
            continue
        cluster = clusters.get(prev_id)
        if cluster is None:
            clusters[prev_id] = JobCluster(prev_id=prev_id,
                                           distinct_blobs={canon},
                                           first_seen=job.received_at,
                                           last_seen=job.received_at)
        else:
            cluster.distinct_blobs.add(canon)
            cluster.first_seen = min(cluster.first_seen, job.received_at)
            cluster.last_seen = max(cluster.last_seen, job.received_at)
    return ClusterResult(clusters=list(clusters.values()), malformed=malformed)


@dataclass
class AttributionReport:
    attributed: list[tuple[ChainBlock, bytes]]     # block, matching blob
    per_day_counts: dict[str, int]                 # UTC date -> count
    total_blocks: int
    total_reward: int                              # atomic units
    gaps: list[tuple[int, int]] = field(default_factory=list)

    @property
    def attributed_heights(self) -> set[int]:
        return {block.height for block, _ in self.attributed}


def _utc_date(timestamp: int) -> str:
    return datetime.fromtimestamp(timestamp, tz=timezone.utc).date().isoformat()


def attribute(clusters: Union[ClusterResult, list[JobCluster]],
              chain: list[ChainBlock],
              tree_digest: DigestFn = sha256_digest) -> AttributionReport:
    """Match each chain block's transaction tree root against the blobs of
    the cluster that references its previous block."""
    if isinstance(clusters, ClusterResult):
        clusters = clusters.clusters
    roots_by_prev: dict[bytes, dict[bytes, bytes]] = {}
    for cluster in clusters:
        table = roots_by_prev.setdefault(cluster.prev_id, {})
        for blob in cluster.distinct_blobs:
            table[parse_blob(blob).merkle_root] = blob

    attributed: list[tuple[ChainBlock, bytes]] = []
    per_day: dict[str, int] = {}
    seen_heights: set[int] = set()
    for block in sorted(chain, key=lambda b: b.height):
        table = roots_by_prev.get(block.prev_id)
        if not table:
            continue
        root = tree_hash(block.tx_hashes, tree_digest)
        blob = table.get(root)
        if blob is None:
            continue
        assert block.height not in seen_heights, "block attributed twice"
        seen_heights.add(block.height)
        attributed.append((block, blob))
        day = _utc_date(block.timestamp)
        per_day[day] = per_day.get(day, 0) + 1
    return AttributionReport(
        attributed=attributed,
        per_day_counts=per_day,
        total_blocks=len(attributed),
        total_reward=sum(block.reward for block, _ in attributed),
        gaps=chain_gaps(chain))


@dataclass(frozen=True)
class HashrateEstimate:
    median_difficulty: float
    network_hashrate: float           # hashes per second
    pool_share: float                 # fraction of all blocks
    pool_hashrate: float
    user_bounds: tuple[float, float]  # (low, high) concurrent users
    assumed_client_rates: tuple[float, float]
    block_time: float
    window_days: int
    blocks_per_day_median: float
    blocks_per_day_mean: float
    reward_sum: int                   # atomic units


def _window_days(chain: list[ChainBlock]) -> tuple[int, list[str]]:
    first = min(b.timestamp for b in chain)
    last = max(b.timestamp for b in chain)
    start = datetime.fromtimestamp(first, tz=timezone.utc).date()
    end = datetime.fromtimestamp(last, tz=timezone.utc).date()
    days = (end - start).days + 1
    dates = [(start + timedelta(days=i)).isoformat() for i in range(days)]
    return days, dates


def estimate(report: AttributionReport, chain: list[ChainBlock],
             client_rates: tuple[float, float] = (20.0, 100.0),
             block_time: float = 120.0,
             blocks_per_day: int = 720) -> HashrateEstimate:
    """Scale the pool's block share up to network terms.

    The network rate follows from difficulty being the expected hash count
    per block; the pool rate is its block share of that; user bounds divide
    by the assumed fastest and slowest per-client rates.
    """
    if not chain:
        raise EmptyWindow("no chain blocks in the observation window")
    days, dates = _window_days(chain)
    if days < 1:
        raise EmptyWindow("window spans less than one day")
    low_rate, high_rate = client_rates
    if low_rate <= 0 or high_rate <= 0:
        raise ValueError("client rates must be positive")

    median_difficulty = statistics.median(b.difficulty for b in chain)
    network_hashrate = median_difficulty / block_time
    pool_share = report.total_blocks / (days * blocks_per_day)
    pool_hashrate = pool_share * network_hashrate
    daily = [report.per_day_counts.get(day, 0) for day in dates]
    return HashrateEstimate(
        median_difficulty=median_difficulty,
        network_hashrate=network_hashrate,
        pool_share=pool_share,
        pool_hashrate=pool_hashrate,
        user_bounds=(pool_hashrate / high_rate, pool_hashrate / low_rate),
        assumed_client_rates=(low_rate, high_rate),
        block_time=block_time,
        window_days=days,
        blocks_per_day_median=statistics.median(daily),
        blocks_per_day_mean=statistics.fmean(daily),
        reward_sum=report.total_reward)


@dataclass(frozen=True)
class RevenueBreakdown:
    total_atomic: int
    operator_cut_atomic: int
    user_payout_atomic: int
    total_coins: float
    fiat_value: float
    split: Fraction
    price: float


def revenue(report: AttributionReport, split: Union[float, str, Fraction] = "0.30",
            price: float = 0.0) -> RevenueBreakdown:
    """Split attributed rewards between operator and users.

    Accounting stays in atomic units so the operator cut and user payout sum
    to the total exactly; coin and fiat figures are presentation only.
    """
    split = Fraction(str(split)) if not isinstance(split, Fraction) else split
    if not 0 <= split <= 1:
        raise ValueError("split must be a fraction in [0, 1]")
    total = report.total_reward
    operator = (total * split.numerator) // split.denominator
    total_coins = total / ATOMIC_PER_COIN
    return RevenueBreakdown(
        total_atomic=total,
        operator_cut_atomic=operator,
        user_payout_atomic=total - operator,
        total_coins=total_coins,
        fiat_value=total_coins * price,
        split=split,
        price=price)
