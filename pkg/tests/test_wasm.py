import pytest

from minerscope.errors import (MalformedSection, NotWasm, OpcodeDecodeError,
                               UnsupportedVersion)
from minerscope.wasm import iterate_opcodes, parse_wasm

import wasmbuild as wb


def test_empty_module_has_no_functions():
    module = parse_wasm(wb.module())
    assert module.version == 1
    assert module.functions == []
    assert module.sections == []


def test_bad_magic_rejected():
    with pytest.raises(NotWasm):
        parse_wasm(b"\x7fELF" + b"\x00" * 8)
    with pytest.raises(NotWasm):
        parse_wasm(b"")


def test_unsupported_version():
    raw = wb.MAGIC + (2).to_bytes(4, "little")
    with pytest.raises(UnsupportedVersion):
        parse_wasm(raw)


def test_two_function_bodies_are_exact_spans():
    body_a = wb.simple_body(wb.xor_pair() + bytes([wb.DROP, wb.END]))
    body_b = wb.simple_body(wb.load_expr() + bytes([wb.DROP, wb.END]),
                            groups=[(2, 0x7F)])
    module = parse_wasm(wb.module(wb.code_section([body_a, body_b])))
    assert len(module.functions) == 2
    assert module.functions[0].span == body_a
    assert module.functions[1].span == body_b
    assert module.functions[1].locals_declaration == wb.locals_decl([(2, 0x7F)])


def test_code_order_preserved():
    bodies = [wb.simple_body(wb.const_expr(i) + bytes([wb.DROP, wb.END]))
              for i in range(5)]
    module = parse_wasm(wb.module(wb.code_section(bodies)))
    assert [fn.span for fn in module.functions] == bodies
    assert [fn.index for fn in module.functions] == list(range(5))


def test_unknown_sections_kept_opaque():
    payload = b"\x01\x02\x03"
    module = parse_wasm(wb.module(wb.section(42, payload),
                                  wb.code_section([])))
    assert (42, payload) in module.sections


def test_truncated_section_rejected():
    raw = wb.module() + bytes([10]) + wb.leb(100) + b"\x00"
    with pytest.raises(MalformedSection):
        parse_wasm(raw)


def test_trailing_bytes_in_code_section_rejected():
    payload = wb.leb(0) + b"\xde\xad"
    with pytest.raises(MalformedSection):
        parse_wasm(wb.module(wb.section(10, payload)))


def test_name_section_decoded():
    body = wb.simple_body(bytes([wb.END]))
    raw = wb.module(wb.code_section([body, body]),
                    wb.name_section({0: "add", 1: "cryptonight_hash"}))
    module = parse_wasm(raw)
    assert module.names == {0: "add", 1: "cryptonight_hash"}


def test_non_name_custom_section_ignored():
    raw = wb.module(wb.custom_section("producers", b"\x00"),
                    wb.code_section([]))
    module = parse_wasm(raw)
    assert module.names == {}
    assert module.sections[0][0] == 0


class TestOpcodeStream:
    def test_simple_sequence(self):
        code = wb.xor_pair() + bytes([wb.DROP, wb.END])
        assert list(iterate_opcodes(code)) == [0x41, 0x41, wb.I32_XOR,
                                               wb.DROP, wb.END]

    def test_memarg_immediates_skipped(self):
        code = wb.load_expr() + bytes([wb.DROP, wb.END])
        assert list(iterate_opcodes(code)) == [0x41, wb.I32_LOAD,
                                               wb.DROP, wb.END]

    def test_block_with_type_index(self):
        # block with multi-byte signed blocktype (type index 0)
        code = bytes([0x02, 0x80, 0x00, 0x0B, 0x0B])
        assert list(iterate_opcodes(code)) == [0x02, 0x0B, 0x0B]

    def test_br_table(self):
        code = bytes([0x0E]) + wb.leb(2) + wb.leb(0) + wb.leb(1) + wb.leb(0) \
            + bytes([wb.END])
        assert list(iterate_opcodes(code)) == [0x0E, wb.END]

    def test_saturating_truncation_prefix(self):
        code = bytes([0xFC]) + wb.leb(0) + bytes([wb.END])
        assert list(iterate_opcodes(code)) == [0xFC00, wb.END]

    def test_unknown_opcode_raises(self):
        with pytest.raises(OpcodeDecodeError):
            list(iterate_opcodes(bytes([0xFE, 0x00])))

    def test_unknown_fc_sub_opcode_raises(self):
        with pytest.raises(OpcodeDecodeError):
            list(iterate_opcodes(bytes([0xFC]) + wb.leb(99)))
