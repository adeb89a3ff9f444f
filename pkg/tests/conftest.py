"""Shared fixtures: historical virus fragments as listings."""

from pathlib import Path

import pytest

from opcode_sim.asm.parser import parse_program
from opcode_sim.models.program import Program

EVOL_V1 = """\
proc main
    mov [esi], 5500000Fh
    mov[esi+0004],5151EC8Bh
endp
"""

EVOL_V2 = """\
proc main
    mov edi,5500000Fh
    mov [esi],edi
    pop edi
    push edx
    mov dh,40
    mov edx,5151EC8Bh
    push ebx
    mov ebx,edx
    mov [esi+0004],ebx
endp
"""

REGSWAP_V1 = """\
proc main
    pop edx
    mov edi,0004h
    mov esi,ebp
    mov eax,000Ch
    add edx,0088h
    mov ebx,[edx]
    mov [esi+eax*4+00001118],ebx
endp
"""

REGSWAP_V2 = """\
proc main
    pop eax
    mov ebx,0004h
    mov edx,ebp
    mov edi,000Ch
    add eax,0088h
    mov esi,[eax]
    mov [edx+edi*4+00001118],esi
endp
"""

BISTRO_V1 = """\
proc main
    push ebp
    mov ebp, esp
    mov esi, dword ptr [ebp + 08]
    test esi, esi
    je 401045
    mov edi, dword ptr [ebp + 0ch]
    or edi, edi
    je 401045
    xor edx, edx
endp
"""

BISTRO_V2 = """\
proc main
    push ebp
    push esp
    pop ebp
    mov esi, dword ptr [ebp + 08]
    or esi, esi
    je 401045
    mov edi, dword ptr [ebp + 0ch]
    test edi, edi
    je 401045
    sub edx, edx
endp
"""

PERMUTATION_ORDER_1 = """\
proc main
    mov eax, 0Fh
    push ecx
    add esi, ebx
endp
"""

PERMUTATION_ORDER_2 = """\
proc main
    add esi, ebx
    mov eax, 0Fh
    push ecx
endp
"""

# Longer base with labels, loops and several subroutines
WORKER = """\
; worker module
proc setup
    push ebp
    mov ebp, esp
    sub esp, 10h
    mov eax, [ebp+8]
    mov ecx, [ebp+0ch]
    xor edx, edx
    mov esi, eax
    mov edi, ecx
    pop ebp
    ret
endp

proc checksum
    xor eax, eax
    mov ecx, 40h
    mov ebx, 7
sum:
    add eax, [esi+ecx*4]
    imul ebx, ebx, 3
    mov edx, eax
    and edx, 0ffh
    add ebx, edx
    loop sum
    ret
endp

proc fill
    mov ecx, 20h
    mov eax, 0
    mov edx, 1
    lea edi, [esi+10h]
again:
    mov [edi+ecx*4], eax
    add eax, edx
    inc edx
    dec ecx
    jnz again
    mov ebx, eax
    shl ebx, 2
    or ebx, ebx
    ret
endp
"""


@pytest.fixture
def evol_v1() -> Program:
    return parse_program(EVOL_V1, "evol_v1")


@pytest.fixture
def evol_v2() -> Program:
    return parse_program(EVOL_V2, "evol_v2")


@pytest.fixture
def regswap_v1() -> Program:
    return parse_program(REGSWAP_V1, "regswap_v1")


@pytest.fixture
def regswap_v2() -> Program:
    return parse_program(REGSWAP_V2, "regswap_v2")


@pytest.fixture
def bistro_v1() -> Program:
    return parse_program(BISTRO_V1, "bistro_v1")


@pytest.fixture
def bistro_v2() -> Program:
    return parse_program(BISTRO_V2, "bistro_v2")


@pytest.fixture
def worker() -> Program:
    return parse_program(WORKER, "worker")


@pytest.fixture
def listing_dir(tmp_path: Path) -> Path:
    """Directory with a few listings on disk."""
    directory = tmp_path / "corpus"
    directory.mkdir()
    (directory / "evol_v1.oasm").write_text(EVOL_V1)
    (directory / "evol_v2.oasm").write_text(EVOL_V2)
    (directory / "regswap_v1.oasm").write_text(REGSWAP_V1)
    (directory / "regswap_v2.oasm").write_text(REGSWAP_V2)
    return directory
