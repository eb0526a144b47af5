"""Rendering of scan summaries, contingency tables, and estimate figures
as aligned text and machine-readable records."""

import json
from dataclasses import dataclass
from typing import Iterable, Union

from .attribution import (ATOMIC_PER_COIN, AttributionReport, HashrateEstimate,
                          RevenueBreakdown)
from .captures import ScanSummary


def round_half_up_percent(numerator: int, denominator: int) -> int:
    """Integer percent with exact half-up rounding (100*n + d/2) // d."""
    if denominator <= 0:
        return 0
    return (200 * numerator + denominator) // (2 * denominator)


@dataclass(frozen=True)
class ContingencyRow:
    dataset: str
    nocoin_hits: int
    wasm_hits: int
    blocked: int

    @property
    def missed(self) -> int:
        return self.wasm_hits - self.blocked

    @property
    def missed_percent(self) -> int:
        return round_half_up_percent(self.missed, self.wasm_hits)


def summary_row(summary: ScanSummary) -> ContingencyRow:
    return ContingencyRow(dataset=summary.dataset or "-",
                          nocoin_hits=summary.nocoin_hits,
                          wasm_hits=summary.wasm_hits,
                          blocked=summary.blocked)


def _table(headers: list[str], rows: list[list[str]]) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    def fmt(cells):
        return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    lines = [fmt(headers), fmt(["-" * w for w in widths])]
    lines.extend(fmt(row) for row in rows)
    return "\n".join(lines)


def render_contingency(rows: Iterable[ContingencyRow]) -> str:
    headers = ["dataset", "nocoin hits", "wasm hits", "blocked by nocoin",
               "missed by nocoin"]
    body = [[r.dataset, str(r.nocoin_hits), str(r.wasm_hits), str(r.blocked),
             "%d (%d%%)" % (r.missed, r.missed_percent)] for r in rows]
    return _table(headers, body)


def render_label_shares(summary: ScanSummary) -> str:
    """Per-label share of mining pages, largest first."""
    headers = ["label", "pages", "share"]
    total = summary.wasm_hits
    rows = [[label, str(count),
             "%d%%" % round_half_up_percent(count, total)]
            for label, count in sorted(summary.miner_counts.items(),
                                       key=lambda kv: (-kv[1], kv[0]))]
    return _table(headers, rows)


def render_summary(summary: ScanSummary) -> str:
    parts = [
        "dataset: %s" % (summary.dataset or "-"),
        "domains scanned: %d" % summary.total_domains,
        render_contingency([summary_row(summary)]),
    ]
    if summary.miner_counts:
        parts.append("")
        parts.append(render_label_shares(summary))
    if summary.wasm_parse_failures:
        parts.append("")
        parts.append("wasm parse failures: %d" % summary.wasm_parse_failures)
    return "\n".join(parts)


def summary_to_records(summary: ScanSummary) -> list[dict]:
    row = summary_row(summary)
    records = [{
        "kind": "contingency",
        "dataset": row.dataset,
        "nocoin_hits": row.nocoin_hits,
        "wasm_hits": row.wasm_hits,
        "blocked": row.blocked,
        "missed": row.missed,
        "missed_percent": row.missed_percent,
    }]
    for label, count in sorted(summary.miner_counts.items()):
        records.append({"kind": "label", "dataset": row.dataset,
                        "label": label, "count": count})
    return records


def render_estimate(est: HashrateEstimate) -> str:
    low_users, high_users = est.user_bounds
    return "\n".join([
        "window: %d day(s)" % est.window_days,
        "median difficulty: %.6g hashes" % est.median_difficulty,
        "network hash rate: %.6g h/s" % est.network_hashrate,
        "pool share of blocks: %.2f%%" % (est.pool_share * 100),
        "pool hash rate: %.6g h/s" % est.pool_hashrate,
        "attributed blocks/day: median %.1f, mean %.1f"
        % (est.blocks_per_day_median, est.blocks_per_day_mean),
        "constantly mining users: %d to %d (at %g..%g h/s each)"
        % (round(low_users), round(high_users),
           est.assumed_client_rates[0], est.assumed_client_rates[1]),
        "attributed reward: %.6f coins" % (est.reward_sum / ATOMIC_PER_COIN),
    ])


def render_revenue(rev: RevenueBreakdown) -> str:
    return "\n".join([
        "total mined: %.6f coins (%d atomic units)"
        % (rev.total_coins, rev.total_atomic),
        "operator cut (%.0f%%): %d atomic units"
        % (float(rev.split) * 100, rev.operator_cut_atomic),
        "user payout: %d atomic units" % rev.user_payout_atomic,
        "fiat value at %.2f per coin: %.2f" % (rev.price, rev.fiat_value),
    ])


def attribution_records(report: AttributionReport) -> list[dict]:
    records = [{
        "kind": "attributed",
        "height": block.height,
        "block_hash": block.block_hash.hex(),
        "timestamp": block.timestamp,
        "reward_atomic_units": block.reward,
        "blob_hex": blob.hex(),
    } for block, blob in report.attributed]
    records.append({
        "kind": "summary",
        "total_blocks": report.total_blocks,
        "total_reward": report.total_reward,
        "per_day_counts": report.per_day_counts,
        "gaps": [list(g) for g in report.gaps],
    })
    return records


def write_records(path: str, records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record) + "\n")


def render(target: Union[ScanSummary, HashrateEstimate, RevenueBreakdown],
           fmt: str = "text") -> str:
    if fmt == "jsonl":
        if isinstance(target, ScanSummary):
            return "\n".join(json.dumps(r) for r in summary_to_records(target))
        return json.dumps(target.__dict__, default=str)
    if isinstance(target, ScanSummary):
        return render_summary(target)
    if isinstance(target, HashrateEstimate):
        return render_estimate(target)
    return render_revenue(target)
