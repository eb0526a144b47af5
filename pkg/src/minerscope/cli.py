"""Command-line entry points.

Exit codes: 0 success, 1 partial (some records skipped or some domains
failed), 2 fatal. MINERSCOPE_CONFIG may point at a JSON file whose keys
override argument defaults (token, endpoints, xor_offset, xor_value, ...).
"""

import argparse
import base64
import json
import os
import sys
import threading
import time

from . import attribution, captures, filters, pages, pool, report, shortlink
from .chain import load_chain
from .errors import MinerscopeError
from .fingerprint import load_signature_db
from .simulator import (PoolSimulator, SimulatorServer, load_chain_script,
                        make_chain_script)

CONFIG_ENV = "MINERSCOPE_CONFIG"

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_FATAL = 2


def parse_duration(text: str) -> float:
    """'500ms', '5s', '2m', or bare seconds."""
    text = text.strip().lower()
    if text.endswith("ms"):
        return float(text[:-2]) / 1000.0
    if text.endswith("s") and not text.endswith("ms"):
        return float(text[:-1])
    if text.endswith("m"):
        return float(text[:-1]) * 60.0
    return float(text)


def load_config_defaults() -> dict:
    path = os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
        return cfg if isinstance(cfg, dict) else {}
    except (OSError, json.JSONDecodeError) as exc:
        print("warning: unusable config %s: %s" % (path, exc), file=sys.stderr)
        return {}


def obfuscation_from_args(args) -> pool.ObfuscationKey | None:
    offset = getattr(args, "xor_offset", None)
    value = getattr(args, "xor_value", None)
    if offset is None or value is None:
        return None
    return pool.ObfuscationKey(offset=offset, value=value)


def _read_lines(path: str) -> list[str]:
    fh = sys.stdin if path == "-" else open(path, "r", encoding="utf-8")
    with fh:
        return [line.strip() for line in fh if line.strip()]


# -- verbs ---------------------------------------------------------------------

def cmd_fetch(args) -> int:
    domains = _read_lines(args.domains)
    outcomes = pages.fetch_batch(domains, limit=args.limit, workers=args.workers,
                                 timeout=args.timeout, scheme=args.scheme,
                                 prefix=args.prefix, port=args.port)
    failures = 0
    with open(args.out, "w", encoding="utf-8") as fh:
        for outcome in outcomes:
            if outcome.ok:
                doc = outcome.document
                rec = {"domain": doc.domain, "final_url": doc.final_url,
                       "body_b64": base64.b64encode(doc.body).decode(),
                       "truncated_at": doc.truncated_at}
            else:
                failures += 1
                rec = {"domain": outcome.domain, "error_kind": outcome.error_kind,
                       "error": outcome.error}
            fh.write(json.dumps(rec) + "\n")
    print("fetched %d/%d domains" % (len(domains) - failures, len(domains)))
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_match(args) -> int:
    with open(args.filters, "r", encoding="utf-8") as fh:
        rules = filters.load_filter_list(fh.read())
    skipped = 0
    hits_total = 0
    with open(args.pages, "r", encoding="utf-8") as src, \
            open(args.out, "w", encoding="utf-8") as dst:
        for line in src:
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                body = base64.b64decode(rec.get("body_b64", ""))
                domain = rec["domain"]
            except (json.JSONDecodeError, KeyError, ValueError):
                skipped += 1
                continue
            doc = pages.PageDocument(domain=domain, body=body)
            for hit in filters.match_page(pages.extract_scripts(doc), rules,
                                          fold_case=args.fold_case):
                hits_total += 1
                dst.write(json.dumps({
                    "domain": domain,
                    "rule": hit.rule.raw,
                    "script_src": hit.script.src,
                    "label": hit.label,
                }) + "\n")
    print("%d hits (%d unusable input lines)" % (hits_total, skipped))
    return EXIT_PARTIAL if skipped else EXIT_OK


def cmd_scan(args) -> int:
    ingest = captures.ingest_captures(args.captures)
    db = load_signature_db(args.signatures)
    with open(args.filters, "r", encoding="utf-8") as fh:
        rules = filters.load_filter_list(fh.read())
    summary = captures.scan(ingest.records, db, rules, dataset=args.dataset,
                            fold_case=args.fold_case)
    output = report.render(summary, fmt=args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(output + "\n")
    else:
        print(output)
    if ingest.skipped:
        print("skipped %d malformed capture lines" % ingest.skipped,
              file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_pool_simulate(args) -> int:
    templates = (load_chain_script(args.script) if args.script
                 else make_chain_script(args.blocks))
    host, _, port = args.listen.rpartition(":")
    core = PoolSimulator(templates, blobs_per_tip=args.blobs_per_tip,
                         share_difficulty=args.share_difficulty,
                         tokens=tuple(args.tokens.split(",")),
                         obfuscation=obfuscation_from_args(args),
                         seed=args.seed)
    server = SimulatorServer(core, host=host or "127.0.0.1",
                             port=int(port)).start()
    print("simulator listening on %s" % server.url)
    stop = threading.Event()
    try:
        while not core.exhausted() and not stop.is_set():
            time.sleep(args.advance_every)
            if core.exhausted():
                break
            core.advance_tip()
            print("tip advanced to height %d" % core.chain[-1].height)
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return EXIT_OK


def cmd_pool_collect(args) -> int:
    key = obfuscation_from_args(args)
    endpoints = [pool.PoolEndpoint(url=url, token=args.token,
                                   poll_interval=parse_duration(args.interval),
                                   obfuscation=key)
                 for url in args.endpoints.split(",")]
    writer = pool.JobLogWriter(args.out)
    duration = parse_duration(args.duration)
    gaps: list[tuple[float, float]] = []

    def collect(endpoint: pool.PoolEndpoint):
        session = pool.login(endpoint)
        writer.append(session.current_job)
        try:
            for job in pool.poll_jobs(session, duration):
                writer.append(job)
        finally:
            gaps.extend(session.gaps)
            session.close()

    threads = [threading.Thread(target=collect, args=(ep,), daemon=True)
               for ep in endpoints]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    writer.close()
    for start, end in gaps:
        print("gap: %.3f -> %.3f (%.1fs)" % (start, end, end - start),
              file=sys.stderr)
    print("collected into %s" % args.out)
    return EXIT_OK


def cmd_attribute(args) -> int:
    jobs = pool.load_job_log(args.jobs)
    chain = load_chain(args.chain)
    clustering = attribution.cluster_jobs(jobs, key=obfuscation_from_args(args))
    result = attribution.attribute(clustering, chain)
    records = report.attribution_records(result)
    if args.out:
        report.write_records(args.out, records)
    print("attributed %d of %d blocks; %d clusters; %d malformed jobs"
          % (result.total_blocks, len(chain), len(clustering.clusters),
             clustering.malformed))
    for start, end in result.gaps:
        print("chain gap: heights %d..%d" % (start, end), file=sys.stderr)
    return EXIT_PARTIAL if clustering.malformed else EXIT_OK


def _report_from_records(path: str) -> attribution.AttributionReport:
    summary = None
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            if rec.get("kind") == "summary":
                summary = rec
    if summary is None:
        raise MinerscopeError("no summary record in %s" % path)
    return attribution.AttributionReport(
        attributed=[],
        per_day_counts=dict(summary.get("per_day_counts", {})),
        total_blocks=int(summary["total_blocks"]),
        total_reward=int(summary["total_reward"]),
        gaps=[tuple(g) for g in summary.get("gaps", [])])


def cmd_estimate(args) -> int:
    rep = _report_from_records(args.report)
    chain = load_chain(args.chain)
    low, high = (float(x) for x in args.client_rates.split(","))
    est = attribution.estimate(rep, chain, client_rates=(low, high),
                               block_time=args.block_time,
                               blocks_per_day=args.blocks_per_day)
    print(report.render_estimate(est))
    if args.price is not None:
        rev = attribution.revenue(rep, split=args.split, price=args.price)
        print(report.render_revenue(rev))
    return EXIT_OK


def cmd_shortlink_enumerate(args) -> int:
    if args.count_only:
        print(shortlink.id_space_size(args.max_len))
        return EXIT_OK
    out = sys.stdout
    for link_id in shortlink.enumerate_ids(args.max_len):
        out.write(link_id + "\n")
    return EXIT_OK


def cmd_shortlink_solve(args) -> int:
    endpoint = pool.PoolEndpoint(url=args.endpoint, token=args.token)
    session = pool.login(endpoint)
    task = shortlink.ShortLinkTask(link_id=args.id,
                                   required_hashes=args.required,
                                   creator_token=args.token)
    try:
        progress = shortlink.solve(task, session, workers=args.workers,
                                   key=obfuscation_from_args(args))
    finally:
        session.close()
    print("hashes: %d  shares: %d  resolved: %s"
          % (progress.hashes_done, progress.shares_submitted,
             progress.resolved_url or "-"))
    return EXIT_OK if progress.resolved_url else EXIT_PARTIAL


def cmd_shortlink_eta(args) -> int:
    seconds = shortlink.time_to_resolve(args.hashes, args.rate)
    print("%s seconds (%.4f)" % (seconds, float(seconds)))
    years = shortlink.years_to_resolve(args.hashes, args.rate)
    if years >= 1:
        print("about %.3g years" % float(years))
    return EXIT_OK


def cmd_report(args) -> int:
    rows = []
    for spec_text in args.row or []:
        dataset, nocoin, wasm, blocked = spec_text.split(",")
        rows.append(report.ContingencyRow(dataset=dataset,
                                          nocoin_hits=int(nocoin),
                                          wasm_hits=int(wasm),
                                          blocked=int(blocked)))
    if args.rows_file:
        with open(args.rows_file, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                rows.append(report.ContingencyRow(
                    dataset=rec.get("dataset", "-"),
                    nocoin_hits=int(rec["nocoin_hits"]),
                    wasm_hits=int(rec["wasm_hits"]),
                    blocked=int(rec["blocked"])))
    print(report.render_contingency(rows))
    return EXIT_OK


# -- wiring ----------------------------------------------------------------------

def build_parser(cfg: dict | None = None) -> argparse.ArgumentParser:
    cfg = cfg or {}
    token_default = cfg.get("token", "demo")
    xor_offset_default = cfg.get("xor_offset")
    xor_value_default = cfg.get("xor_value")
    parser = argparse.ArgumentParser(
        prog="minerscope",
        description="Detect browser miners and attribute mined blocks to a pool.")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("fetch", help="download landing pages with a byte cap")
    p.add_argument("--domains", required=True, help="domain list file or -")
    p.add_argument("--out", required=True)
    p.add_argument("--limit", type=int, default=pages.DEFAULT_TRUNCATE)
    p.add_argument("--workers", type=int, default=8)
    p.add_argument("--timeout", type=float, default=pages.DEFAULT_TIMEOUT)
    p.add_argument("--scheme", default="https")
    p.add_argument("--prefix", default="www.")
    p.add_argument("--port", type=int, default=None)
    p.set_defaults(func=cmd_fetch)

    p = sub.add_parser("match", help="match fetched pages against a filter list")
    p.add_argument("--pages", required=True)
    p.add_argument("--filters", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--fold-case", action="store_true")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("scan", help="scan captures with signatures and filters")
    p.add_argument("--captures", required=True)
    p.add_argument("--signatures", required=True)
    p.add_argument("--filters", required=True)
    p.add_argument("--dataset", default="")
    p.add_argument("--format", choices=("text", "jsonl"), default="text")
    p.add_argument("--fold-case", action="store_true")
    p.add_argument("--out", default="")
    p.set_defaults(func=cmd_scan)

    pool_parser = sub.add_parser("pool", help="pool client and simulator")
    pool_sub = pool_parser.add_subparsers(dest="pool_verb", required=True)

    p = pool_sub.add_parser("simulate", help="run the mock pool server")
    p.add_argument("--script", default="", help="chain script JSONL")
    p.add_argument("--blocks", type=int, default=100,
                   help="generated script length when --script is omitted")
    p.add_argument("--blobs-per-tip", type=int, default=8)
    p.add_argument("--listen", default="127.0.0.1:0")
    p.add_argument("--tokens", default=token_default)
    p.add_argument("--share-difficulty", type=int, default=16)
    p.add_argument("--advance-every", type=float, default=120.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--xor-offset", type=int, default=xor_offset_default)
    p.add_argument("--xor-value", type=int, default=xor_value_default)
    p.set_defaults(func=cmd_pool_simulate)

    p = pool_sub.add_parser("collect", help="poll jobs into a log file")
    p.add_argument("--endpoints", required=True, help="host:port[,host:port...]")
    p.add_argument("--token", default=token_default)
    p.add_argument("--interval", default="500ms")
    p.add_argument("--duration", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pool_collect)

    p = sub.add_parser("attribute", help="match job log against a chain snapshot")
    p.add_argument("--jobs", required=True)
    p.add_argument("--chain", required=True)
    p.add_argument("--xor-offset", type=int, default=xor_offset_default)
    p.add_argument("--xor-value", type=int, default=xor_value_default)
    p.add_argument("--out", default="")
    p.set_defaults(func=cmd_attribute)

    p = sub.add_parser("estimate", help="derive hash-rate and user estimates")
    p.add_argument("--report", required=True, help="attribute output records")
    p.add_argument("--chain", required=True)
    p.add_argument("--client-rates", default="20,100")
    p.add_argument("--block-time", type=float, default=120.0)
    p.add_argument("--blocks-per-day", type=int, default=720)
    p.add_argument("--price", type=float, default=None)
    p.add_argument("--split", default="0.30")
    p.set_defaults(func=cmd_estimate)

    link_parser = sub.add_parser("shortlink", help="short-link tooling")
    link_sub = link_parser.add_subparsers(dest="link_verb", required=True)

    p = link_sub.add_parser("enumerate", help="emit the ID space")
    p.add_argument("--max-len", type=int, default=4)
    p.add_argument("--count-only", action="store_true")
    p.set_defaults(func=cmd_shortlink_enumerate)

    p = link_sub.add_parser("solve", help="resolve a link against a pool")
    p.add_argument("--id", required=True)
    p.add_argument("--required", type=int, required=True)
    p.add_argument("--endpoint", required=True)
    p.add_argument("--token", default=token_default)
    p.add_argument("--workers", type=int, default=4)
    p.add_argument("--xor-offset", type=int, default=xor_offset_default)
    p.add_argument("--xor-value", type=int, default=xor_value_default)
    p.set_defaults(func=cmd_shortlink_solve)

    p = link_sub.add_parser("eta", help="time to compute N hashes")
    p.add_argument("--hashes", type=int, required=True)
    p.add_argument("--rate", type=float, default=20.0)
    p.set_defaults(func=cmd_shortlink_eta)

    p = sub.add_parser("report", help="render contingency tables")
    p.add_argument("--row", action="append",
                   help="dataset,nocoin,wasm,blocked (repeatable)")
    p.add_argument("--rows-file", default="")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser(load_config_defaults())
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MinerscopeError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_FATAL
    except OSError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
