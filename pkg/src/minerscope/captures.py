"""Capture-record ingestion and corpus scanning.

Capture files are line-delimited JSON with the fields domain, final_url,
html_b64, wasm_modules (base64 list), ws_frames and load_state, as emitted
by the browser capture harness. The HTML field is capped at 64 KiB.
"""

import base64
import binascii
import json
from dataclasses import dataclass, field

from .errors import FileError, NotWasm, MalformedSection, OpcodeDecodeError, \
    SchemaError, UnsupportedVersion
from .filters import FilterRule, match_page, page_labels
from .fingerprint import SignatureRecord, classify
from .pages import PageDocument, SOURCE_CAPTURE, extract_scripts
from .wasm import parse_wasm

HTML_CAP = 65536
LOAD_STATES = ("loaded", "timeout")
FRAME_DIRECTIONS = ("sent", "received")


@dataclass(frozen=True)
class WebsocketFrame:
    direction: str
    timestamp_ms: int
    payload: bytes


@dataclass(frozen=True)
class CaptureRecord:
    domain: str
    final_url: str
    html: bytes
    wasm_modules: tuple[bytes, ...]
    websocket_frames: tuple[WebsocketFrame, ...]
    load_state: str
    error: str = ""


def record_from_json(rec: dict) -> CaptureRecord:
    try:
        html = base64.b64decode(rec["html_b64"], validate=True)
        if len(html) > HTML_CAP:
            raise SchemaError("html exceeds %d bytes" % HTML_CAP)
        load_state = rec["load_state"]
        if load_state not in LOAD_STATES:
            raise SchemaError("bad load_state %r" % load_state)
        modules = tuple(base64.b64decode(m, validate=True)
                        for m in rec.get("wasm_modules", []))
        frames = []
        for f in rec.get("ws_frames", []):
            direction = f["direction"]
            if direction not in FRAME_DIRECTIONS:
                raise SchemaError("bad frame direction %r" % direction)
            frames.append(WebsocketFrame(
                direction=direction,
                timestamp_ms=int(f["timestamp_ms"]),
                payload=base64.b64decode(f["payload_b64"], validate=True)))
        return CaptureRecord(domain=str(rec["domain"]),
                             final_url=str(rec.get("final_url", "")),
                             html=html,
                             wasm_modules=modules,
                             websocket_frames=tuple(frames),
                             load_state=load_state,
                             error=str(rec.get("error") or ""))
    except SchemaError:
        raise
    except (KeyError, TypeError, ValueError, binascii.Error) as exc:
        raise SchemaError("bad capture record: %s" % exc)


@dataclass
class IngestResult:
    records: list[CaptureRecord]
    skipped: int = 0
    errors: list[str] = field(default_factory=list)


def ingest_captures(path: str) -> IngestResult:
    """Load a capture file; schema-violating lines are counted and skipped."""
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise FileError(str(exc))
    result = IngestResult(records=[])
    with fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                if not isinstance(rec, dict):
                    raise SchemaError("record is not an object")
                result.records.append(record_from_json(rec))
            except (json.JSONDecodeError, SchemaError) as exc:
                result.skipped += 1
                result.errors.append("line %d: %s" % (lineno, exc))
    return result


@dataclass
class ScanSummary:
    dataset: str
    total_domains: int = 0
    nocoin_hits: int = 0
    wasm_hits: int = 0
    blocked: int = 0                 # wasm miners also caught by the list
    miner_counts: dict[str, int] = field(default_factory=dict)
    filter_label_counts: dict[str, int] = field(default_factory=dict)
    wasm_parse_failures: int = 0

    @property
    def missed(self) -> int:
        return self.wasm_hits - self.blocked


def scan(captures: list[CaptureRecord], signature_db: list[SignatureRecord],
         rules: list[FilterRule], dataset: str = "",
         feature_tolerance: float = 0.10,
         fold_case: bool = False) -> ScanSummary:
    """Classify every capture's Wasm modules and match its HTML against the
    filter list, producing blocked/missed contingency counts."""
    summary = ScanSummary(dataset=dataset)
    for record in captures:
        summary.total_domains += 1
        wasm_labels: set[str] = set()
        for raw in record.wasm_modules:
            try:
                module = parse_wasm(raw)
            except (NotWasm, MalformedSection, UnsupportedVersion,
                    OpcodeDecodeError):
                summary.wasm_parse_failures += 1
                continue
            verdict = classify(module, signature_db,
                               feature_tolerance=feature_tolerance)
            if verdict.match_kind != "none" and verdict.matched is not None \
                    and verdict.matched.is_miner:
                wasm_labels.add(verdict.label)
        doc = PageDocument(domain=record.domain, body=record.html,
                           source=SOURCE_CAPTURE, final_url=record.final_url)
        hits = match_page(extract_scripts(doc), rules, fold_case=fold_case)
        nocoin_hit = bool(hits)
        if nocoin_hit:
            summary.nocoin_hits += 1
            for label in page_labels(hits):
                summary.filter_label_counts[label] = \
                    summary.filter_label_counts.get(label, 0) + 1
        if wasm_labels:
            summary.wasm_hits += 1
            if nocoin_hit:
                summary.blocked += 1
            for label in sorted(wasm_labels):
                summary.miner_counts[label] = \
                    summary.miner_counts.get(label, 0) + 1
    return summary
