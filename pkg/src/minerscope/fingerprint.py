"""Miner fingerprinting: canonical module signatures, instruction-histogram
features, and classification against a signature database."""

import hashlib
import json
from dataclasses import asdict, dataclass
from typing import Iterable, Optional

from .errors import FileError, SchemaError
from .wasm import (OP_LOAD, OP_SHIFT, OP_STORE, OP_XOR, WasmModule,
                   iterate_opcodes)

# Function-name fragments that hint at a hash implementation.
DEFAULT_NAME_HINTS = (
    "keccak", "cn_", "cryptonight", "hash", "skein", "blake", "groestl", "jh",
)

NON_MINER_LABEL = "non-miner"


def signature(module: WasmModule) -> str:
    """SHA-256 over the concatenation, in code-section order, of each
    function's locals declaration and code bytes. Hex encoded.

    A module without functions hashes the empty string.
    """
    h = hashlib.sha256()
    for fn in module.functions:
        h.update(fn.locals_declaration)
        h.update(fn.code)
    return h.hexdigest()


@dataclass(frozen=True)
class FeatureVector:
    xor_count: int = 0
    shift_count: int = 0
    load_count: int = 0
    store_count: int = 0
    function_count: int = 0
    total_instruction_count: int = 0
    name_hints: tuple[str, ...] = ()

    COUNT_FIELDS = ("xor_count", "shift_count", "load_count", "store_count",
                    "function_count", "total_instruction_count")

    def counts(self) -> tuple[int, ...]:
        return tuple(getattr(self, f) for f in self.COUNT_FIELDS)


def features(module: WasmModule,
             name_keywords: Iterable[str] = DEFAULT_NAME_HINTS) -> FeatureVector:
    """Single pass over all function bodies, counting opcode classes."""
    xor = shift = load = store = total = 0
    for fn in module.functions:
        for op in iterate_opcodes(fn.code):
            total += 1
            if op in OP_XOR:
                xor += 1
            elif op in OP_SHIFT:
                shift += 1
            elif op in OP_LOAD:
                load += 1
            elif op in OP_STORE:
                store += 1
    keywords = tuple(k.lower() for k in name_keywords)
    hints = tuple(name for _, name in sorted(module.names.items())
                  if any(k in name.lower() for k in keywords))
    return FeatureVector(xor_count=xor, shift_count=shift, load_count=load,
                         store_count=store, function_count=len(module.functions),
                         total_instruction_count=total, name_hints=hints)


@dataclass(frozen=True)
class SignatureRecord:
    digest: str
    label: str
    features: FeatureVector
    notes: str = ""

    @property
    def is_miner(self) -> bool:
        return self.label.lower() != NON_MINER_LABEL


@dataclass(frozen=True)
class Classification:
    label: Optional[str]
    match_kind: str  # "exact" | "feature" | "none"
    matched: Optional[SignatureRecord] = None


def _relative_deviation(have: int, want: int) -> float:
    return abs(have - want) / max(want, 1)


def classify(module: WasmModule, db: list[SignatureRecord],
             feature_tolerance: float = 0.10) -> Classification:
    """Exact digest match first; otherwise the closest miner-labelled record
    whose every count is within the relative tolerance; otherwise none.

    Ties break on smallest summed relative deviation, then record position.
    """
    digest = signature(module)
    for record in db:
        if record.digest == digest:
            return Classification(record.label, "exact", record)

    vector = features(module)
    best: Optional[tuple[float, int, SignatureRecord]] = None
    for position, record in enumerate(db):
        if not record.is_miner:
            continue
        deviations = [_relative_deviation(a, b)
                      for a, b in zip(vector.counts(), record.features.counts())]
        if max(deviations) > feature_tolerance:
            continue
        key = (sum(deviations), position)
        if best is None or key < (best[0], best[1]):
            best = (key[0], key[1], record)
    if best is not None:
        return Classification(best[2].label, "feature", best[2])
    return Classification(None, "none", None)


# -- signature database file ---------------------------------------------------

def record_to_json(record: SignatureRecord) -> dict:
    rec = asdict(record)
    rec["features"]["name_hints"] = list(record.features.name_hints)
    return rec


def record_from_json(rec: dict) -> SignatureRecord:
    try:
        feats = dict(rec["features"])
        feats["name_hints"] = tuple(feats.get("name_hints", ()))
        return SignatureRecord(digest=rec["digest"], label=rec["label"],
                               features=FeatureVector(**feats),
                               notes=rec.get("notes", ""))
    except (KeyError, TypeError) as exc:
        raise SchemaError("bad signature record: %s" % exc)


def load_signature_db(path: str) -> list[SignatureRecord]:
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise FileError(str(exc))
    records = []
    seen = set()
    with fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                record = record_from_json(json.loads(line))
            except json.JSONDecodeError as exc:
                raise SchemaError("line %d: %s" % (lineno, exc))
            if record.digest in seen:
                raise SchemaError("line %d: duplicate digest %s"
                                  % (lineno, record.digest))
            seen.add(record.digest)
            records.append(record)
    return records


def save_signature_db(path: str, records: Iterable[SignatureRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record_to_json(record)) + "\n")
