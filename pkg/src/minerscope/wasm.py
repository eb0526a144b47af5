"""WebAssembly binary parser.

Decodes the section layout, the code section into per-function byte spans,
and the custom name section. Function bodies are kept as the exact byte
spans from the module so downstream hashing sees the original encoding.
"""

from dataclasses import dataclass, field

from .errors import MalformedSection, NotWasm, OpcodeDecodeError, UnsupportedVersion

WASM_MAGIC = b"\x00asm"
SUPPORTED_VERSIONS = (1,)

SECTION_CUSTOM = 0
SECTION_CODE = 10


@dataclass(frozen=True)
class FunctionBody:
    index: int
    locals_declaration: bytes
    code: bytes

    @property
    def span(self) -> bytes:
        return self.locals_declaration + self.code


@dataclass
class WasmModule:
    version: int
    sections: list[tuple[int, bytes]] = field(default_factory=list)
    functions: list[FunctionBody] = field(default_factory=list)
    names: dict[int, str] = field(default_factory=dict)


class _Reader:
    def __init__(self, data: bytes, base: int = 0):
        self.data = data
        self.pos = 0
        self.base = base  # original-module offset, for error messages

    def eof(self) -> bool:
        return self.pos >= len(self.data)

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise MalformedSection(
                "need %d bytes at offset %d, have %d"
                % (n, self.base + self.pos, len(self.data) - self.pos))
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def byte(self) -> int:
        return self.take(1)[0]

    def u32(self) -> int:
        result = 0
        shift = 0
        while True:
            b = self.byte()
            result |= (b & 0x7F) << shift
            if not b & 0x80:
                break
            shift += 7
            if shift >= 35:
                raise MalformedSection("u32 LEB128 too long at offset %d"
                                       % (self.base + self.pos))
        if result >= 1 << 32:
            raise MalformedSection("u32 LEB128 overflow")
        return result

    def skip_signed_leb(self, max_bytes: int) -> None:
        for _ in range(max_bytes):
            if not self.byte() & 0x80:
                return
        raise MalformedSection("signed LEB128 too long at offset %d"
                               % (self.base + self.pos))

    def name(self) -> str:
        length = self.u32()
        return self.take(length).decode("utf-8", errors="replace")


def parse_wasm(data: bytes) -> WasmModule:
    if data[:4] != WASM_MAGIC:
        raise NotWasm("missing \\0asm magic prefix")
    if len(data) < 8:
        raise MalformedSection("module shorter than header")
    version = int.from_bytes(data[4:8], "little")
    if version not in SUPPORTED_VERSIONS:
        raise UnsupportedVersion("wasm version %d" % version)

    module = WasmModule(version=version)
    reader = _Reader(data[8:], base=8)
    while not reader.eof():
        section_id = reader.byte()
        size = reader.u32()
        payload = reader.take(size)
        module.sections.append((section_id, payload))
        if section_id == SECTION_CODE:
            module.functions = _parse_code_section(payload)
        elif section_id == SECTION_CUSTOM:
            sub = _Reader(payload)
            name = sub.name()
            if name == "name":
                module.names = _parse_name_section(payload[sub.pos:])
    return module


def _parse_code_section(payload: bytes) -> list[FunctionBody]:
    reader = _Reader(payload)
    count = reader.u32()
    functions = []
    for index in range(count):
        body_size = reader.u32()
        body = reader.take(body_size)
        locals_len = _locals_declaration_length(body)
        functions.append(FunctionBody(index=index,
                                      locals_declaration=body[:locals_len],
                                      code=body[locals_len:]))
    if not reader.eof():
        raise MalformedSection("%d trailing bytes in code section"
                               % (len(payload) - reader.pos))
    return functions


def _locals_declaration_length(body: bytes) -> int:
    reader = _Reader(body)
    groups = reader.u32()
    for _ in range(groups):
        reader.u32()   # repetition count
        reader.byte()  # value type
    return reader.pos


def _parse_name_section(payload: bytes) -> dict[int, str]:
    names: dict[int, str] = {}
    reader = _Reader(payload)
    while not reader.eof():
        subsection_id = reader.byte()
        size = reader.u32()
        content = _Reader(reader.take(size))
        if subsection_id == 1:  # function names
            for _ in range(content.u32()):
                idx = content.u32()
                names[idx] = content.name()
    return names


# -- opcode stream ------------------------------------------------------------
#
# Immediate kinds: "" none, "u" one u32 LEB, "uu" two, "bt" blocktype,
# "brt" br_table, "s32"/"s64" signed LEB to skip, "f32"/"f64" raw floats,
# "vt" vector of value types, "b" one raw byte.

_OPCODE_IMMEDIATES: dict[int, str] = {}


def _define(ops, immediates: str):
    for op in ops:
        _OPCODE_IMMEDIATES[op] = immediates


_define([0x00, 0x01, 0x05, 0x0B, 0x0F, 0x1A, 0x1B], "")
_define([0x02, 0x03, 0x04], "bt")
_define([0x0C, 0x0D, 0x10], "u")
_define([0x0E], "brt")
_define([0x11], "uu")               # call_indirect: type index + table
_define([0x1C], "vt")               # typed select
_define(range(0x20, 0x25), "u")     # local/global access
_define(range(0x28, 0x3F), "uu")    # loads and stores: align + offset
_define([0x3F, 0x40], "u")          # memory.size / memory.grow
_define([0x41], "s32")
_define([0x42], "s64")
_define([0x43], "f32")
_define([0x44], "f64")
_define(range(0x45, 0xC0), "")      # comparisons, arithmetic, conversions
_define(range(0xC0, 0xC5), "")      # sign extension
_define([0xD0], "b")                # ref.null
_define([0xD1], "")
_define([0xD2], "u")                # ref.func

# 0xFC sub-opcode -> number of trailing u32 immediates
_FC_IMMEDIATE_COUNTS = {
    **{n: 0 for n in range(8)},     # saturating truncations
    8: 2, 9: 1, 10: 2, 11: 1,       # memory.init/copy/fill, data.drop
    12: 3, 13: 1, 14: 2, 15: 1, 16: 1, 17: 1,  # table ops
}

OP_XOR = frozenset({0x73, 0x85})
OP_SHIFT = frozenset(range(0x74, 0x79)) | frozenset(range(0x86, 0x8B))
OP_LOAD = frozenset(range(0x28, 0x36))
OP_STORE = frozenset(range(0x36, 0x3F))


def iterate_opcodes(code: bytes):
    """Yield the opcode of each instruction in a function body, walking and
    discarding immediates. Raises OpcodeDecodeError on unknown opcodes."""
    reader = _Reader(code)
    while not reader.eof():
        op = reader.byte()
        if op == 0xFC:
            sub = reader.u32()
            if sub not in _FC_IMMEDIATE_COUNTS:
                raise OpcodeDecodeError("unknown 0xFC sub-opcode %d" % sub)
            for _ in range(_FC_IMMEDIATE_COUNTS[sub]):
                reader.u32()
            yield 0xFC00 | sub
            continue
        kind = _OPCODE_IMMEDIATES.get(op)
        if kind is None:
            raise OpcodeDecodeError("unknown opcode 0x%02X at offset %d"
                                    % (op, reader.pos - 1))
        if kind == "u":
            reader.u32()
        elif kind == "uu":
            reader.u32()
            reader.u32()
        elif kind == "bt":
            # blocktype: empty/valtype single byte, or signed type index
            b = reader.byte()
            if b & 0x80:
                reader.pos -= 1
                reader.skip_signed_leb(5)
        elif kind == "brt":
            for _ in range(reader.u32()):
                reader.u32()
            reader.u32()
        elif kind == "s32":
            reader.skip_signed_leb(5)
        elif kind == "s64":
            reader.skip_signed_leb(10)
        elif kind == "f32":
            reader.take(4)
        elif kind == "f64":
            reader.take(8)
        elif kind == "vt":
            reader.take(reader.u32())
        elif kind == "b":
            reader.byte()
        yield op
