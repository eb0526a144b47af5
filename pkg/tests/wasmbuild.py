"""Hand assembler for small WebAssembly fixtures used across the tests."""

MAGIC = b"\x00asm"

# opcode shorthands
NOP = 0x01
END = 0x0B
DROP = 0x1A
LOCAL_GET = 0x20
I32_LOAD = 0x28
I32_STORE = 0x36
I32_CONST = 0x41
I32_XOR = 0x73
I32_SHL = 0x74
I64_XOR = 0x85


def leb(value: int) -> bytes:
    out = bytearray()
    while True:
        group = value & 0x7F
        value >>= 7
        if value:
            out.append(group | 0x80)
        else:
            out.append(group)
            return bytes(out)


def locals_decl(groups=()) -> bytes:
    out = bytearray(leb(len(groups)))
    for count, valtype in groups:
        out += leb(count) + bytes([valtype])
    return bytes(out)


def section(section_id: int, payload: bytes) -> bytes:
    return bytes([section_id]) + leb(len(payload)) + payload


def code_section(bodies) -> bytes:
    payload = leb(len(bodies)) + b"".join(leb(len(b)) + b for b in bodies)
    return section(10, payload)


def custom_section(name: str, content: bytes) -> bytes:
    encoded = name.encode()
    return section(0, leb(len(encoded)) + encoded + content)


def name_section(names: dict) -> bytes:
    entries = leb(len(names))
    for index, name in sorted(names.items()):
        encoded = name.encode()
        entries += leb(index) + leb(len(encoded)) + encoded
    sub = bytes([1]) + leb(len(entries)) + entries
    return custom_section("name", sub)


def data_section(payload: bytes = b"\x00") -> bytes:
    segment = leb(0) + bytes([I32_CONST, 0x00, END]) + leb(len(payload)) + payload
    return section(11, leb(1) + segment)


def module(*sections) -> bytes:
    return MAGIC + (1).to_bytes(4, "little") + b"".join(sections)


def const_expr(value: int) -> bytes:
    return bytes([I32_CONST]) + leb(value)


def xor_pair() -> bytes:
    """Push two constants and xor them (three instructions)."""
    return const_expr(1) + const_expr(2) + bytes([I32_XOR])


def load_expr() -> bytes:
    """address const + i32.load with align 2, offset 0 (two instructions)."""
    return const_expr(0) + bytes([I32_LOAD, 0x02, 0x00])


def store_expr() -> bytes:
    return const_expr(0) + const_expr(7) + bytes([I32_STORE, 0x02, 0x00])


def shift_expr() -> bytes:
    return const_expr(8) + const_expr(1) + bytes([I32_SHL])


def simple_body(code: bytes, groups=()) -> bytes:
    return locals_decl(groups) + code
