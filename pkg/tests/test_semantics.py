"""Tests for register/flag/memory effects and the swap check."""

import pytest

from opcode_sim.asm.parser import parse_instruction
from opcode_sim.asm.semantics import (
    SEMANTICS,
    can_swap,
    memory_access,
    registers_read,
    registers_written,
)


def instr(text):
    return parse_instruction(text)


@pytest.mark.parametrize(
    "text, read, written",
    [
        ("mov eax, ebx", {"ebx"}, {"eax"}),
        ("add esi, ebx", {"esi", "ebx"}, {"esi"}),
        ("mov [esi], edi", {"esi", "edi"}, set()),
        ("push ecx", {"ecx", "esp"}, {"esp"}),
        ("pop edx", {"esp"}, {"edx", "esp"}),
        ("mov dh, 40", set(), {"edx"}),
        ("mov al, [esi+ecx*2]", {"esi", "ecx"}, {"eax"}),
        ("lea edi, [esi+10h]", {"esi"}, {"edi"}),
        ("xchg eax, ebx", {"eax", "ebx"}, {"eax", "ebx"}),
        ("cmp eax, ebx", {"eax", "ebx"}, set()),
        ("mul ecx", {"eax", "ecx", "edx"}, {"eax", "ecx", "edx"}),
        ("nop", set(), set()),
    ],
)
def test_register_sets(text, read, written):
    assert registers_read(instr(text)) == read
    assert registers_written(instr(text)) == written


def test_unknown_mnemonic_is_conservative():
    unknown = instr("bswap ecx")
    assert "bswap" not in SEMANTICS
    assert registers_read(unknown) == {"ecx"}
    assert registers_written(unknown) == {"ecx"}
    assert not can_swap(unknown, instr("nop"))


def test_memory_access():
    assert memory_access(instr("mov [esi], edi")) == (False, True)
    assert memory_access(instr("mov eax, [esi]")) == (True, False)
    assert memory_access(instr("add [esi], eax")) == (True, True)
    assert memory_access(instr("lea eax, [esi+4]")) == (False, False)
    assert memory_access(instr("push eax")) == (False, True)


class TestCanSwap:
    def test_independent_pair(self):
        assert can_swap(instr("mov eax, 0Fh"), instr("push ecx"))
        assert can_swap(instr("push ecx"), instr("add esi, ebx"))
        assert can_swap(instr("mov eax, 0Fh"), instr("add esi, ebx"))

    def test_read_after_write(self):
        assert not can_swap(instr("mov eax, 1"), instr("add ebx, eax"))

    def test_write_after_read(self):
        assert not can_swap(instr("add ebx, eax"), instr("mov eax, 1"))

    def test_write_after_write(self):
        assert not can_swap(instr("mov eax, 1"), instr("mov eax, 2"))

    def test_sub_register_aliases_parent(self):
        assert not can_swap(instr("mov dh, 40"), instr("mov edx, 5151EC8Bh"))

    def test_flags_hazard(self):
        assert not can_swap(instr("cmp eax, ebx"), instr("add ecx, 1"))
        assert not can_swap(instr("add ecx, 1"), instr("adc edx, 0"))

    def test_memory_hazard(self):
        assert not can_swap(instr("mov [esi], eax"), instr("mov ebx, [edi]"))
        assert can_swap(instr("mov ebx, [edi]"), instr("mov ecx, [esi]"))

    def test_stack_order_kept(self):
        assert not can_swap(instr("push eax"), instr("push ebx"))

    def test_control_transfer_never_moves(self):
        assert not can_swap(instr("mov eax, 1"), instr("jmp done"))
        assert not can_swap(instr("je done"), instr("mov eax, 1"))
        assert not can_swap(instr("ret"), instr("nop"))
