import pytest

from lowfat import (GlobalExhausted, InvalidFree, StackExhausted, StackMachine, StackMisuse,
                    global_register)
from lowfat.stack_global import STACK_AREA_BASE


def test_stack_alloc_rounds_to_pow2(sim):
    sm = StackMachine(sim)
    a = sm.stack_alloc(24)
    assert sim.size(a) == 32 and sim.index(a) == 2
    assert sim.is_stack_ptr(a) and sim.offset(a) == 0


def test_stack_pointer_arithmetic(sim):
    sm = StackMachine(sim)
    sp = sm.sp
    a = sm.stack_alloc(16)
    assert sm.sp == sp - 16
    b = sm.stack_alloc(16)
    assert a - b == 16 and sim.index(a) == sim.index(b)
    assert a == sm.sp + 16 - STACK_AREA_BASE + sim.layout.stack[1].start


def test_stack_alignment_masks_sp(sim):
    sm = StackMachine(sim)
    sm.stack_alloc(16)
    a = sm.stack_alloc(100)
    assert sm.sp % 128 == 0 and a % 128 == 0 and sim.size(a) == 128


def test_frames(sim):
    sm = StackMachine(sim)
    sm.frame_enter()
    a = sm.stack_alloc(16)
    sm.frame_exit()
    sm.frame_enter()
    assert sm.stack_alloc(16) == a
    sm.frame_exit()
    sp = sm.sp
    with sm:
        pass
    assert sm.sp == sp
    with pytest.raises(StackMisuse):
        sm.frame_exit()


def test_lifo_bit_identical(sim):
    sm = StackMachine(sim)
    sizes = [16, 40, 300, 16, 5000]
    with sm:
        first = [sm.stack_alloc(n) for n in sizes]
    with sm:
        assert [sm.stack_alloc(n) for n in sizes] == first


def test_stack_exhausted(sim):
    sm = StackMachine(sim, area_size=4096)
    sm.stack_alloc(2048)
    sm.stack_alloc(2048)
    with pytest.raises(StackExhausted):
        sm.stack_alloc(16)


def test_machines_are_disjoint(sim):
    a, b = StackMachine(sim), StackMachine(sim)
    assert a.stack_alloc(64) != b.stack_alloc(64)


def test_global_register(sim):
    g = global_register(sim, 100)
    assert sim.size(g) == 128 and g % 128 == 0
    assert sim.is_global_ptr(g) and g >= sim.layout.glob[sim.index(g)].start
    assert sim.size(global_register(sim, 16)) == 16
    h = global_register(sim, 100)
    assert h == g + 128
    with pytest.raises(InvalidFree):
        sim.free(global_register(sim, 16))


def test_global_exhausted(small):
    span = small.layout.glob[small.M]
    n = (span.end - span.start) // 16384
    for _ in range(n):
        global_register(small, 16384)
    with pytest.raises(GlobalExhausted):
        global_register(small, 16384)
