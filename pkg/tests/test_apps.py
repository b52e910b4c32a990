import random

import pytest
from hypothesis import given, settings, strategies as st

from lowfat import BoundsError, InvalidFree, InvalidTag, NoMetadata, StackMachine, UntypedAddress
from lowfat import global_register
from lowfat.apps import (FatVector, LowFatVectorType, Tree234, checked_free, checked_memcpy_auto,
                         checked_memcpy_opt, ext_tag_get, ext_tag_set, ext_untag, is_oob,
                         meta_alloc, meta_get, meta_global_register, meta_stack_alloc, tag_get,
                         tag_set, type_index, untag)
from lowfat.apps.tree234 import MODES, NODE_WORDS


# --- bounds ------------------------------------------------------------------

def test_is_oob_boundaries():
    assert not is_oob(100, 100, 16, 16)
    assert is_oob(100 + 16 - 4 + 1, 100, 16, 4)
    assert is_oob(99, 100, 16, 1)


def test_is_oob_exhaustive():
    for size in range(1, 65):
        for access in range(1, 9):
            for p in range(-10, size + 10):
                inside = set(range(p, p + access)) <= set(range(size))
                assert is_oob(p, 0, size, access) != inside


@pytest.mark.parametrize("copy", [checked_memcpy_auto, checked_memcpy_opt])
def test_memcpy_variants(sim, copy):
    src, dst = sim.malloc(16), sim.malloc(16)
    sim.memory.write(src, bytes(range(16)))
    copy(sim, dst, src, 16)
    assert sim.memory.read(dst, 16) == bytes(range(16))
    with pytest.raises(BoundsError) as e:
        copy(sim, dst, src, sim.usable_size(dst) + 1)
    assert e.value.operand == "dst"
    big = sim.malloc(64)
    with pytest.raises(BoundsError) as e:
        copy(sim, big, src + 8, 9)
    assert e.value.operand == "src"
    copy(sim, big, src + 8, 8)  # usable size of src + 8 is exactly 8
    assert sim.memory.read(big, 8) == bytes(range(8, 16))


def test_memcpy_auto_reports_offset(sim):
    src, dst = sim.malloc(64), sim.malloc(32)
    with pytest.raises(BoundsError) as e:
        checked_memcpy_auto(sim, dst, src, 40)
    assert e.value.offset == 32


def test_checked_free(sim):
    checked_free(sim, sim.malloc(10))
    with pytest.raises(InvalidFree) as e:
        checked_free(sim, global_register(sim, 16))
    assert e.value.kind == "non-heap"
    with pytest.raises(InvalidFree) as e:
        checked_free(sim, sim.malloc(100) + 8)
    assert e.value.kind == "interior"


# --- metadata ----------------------------------------------------------------

def test_meta_examples(sim):
    a = meta_alloc(sim, 100, 0x1234)
    assert meta_get(sim, a + 50) == 0x1234
    assert all(meta_get(sim, a + k) == 0x1234 for k in range(100))
    assert meta_get(sim, meta_alloc(sim, 8, 77)) == 77
    with pytest.raises(NoMetadata):
        meta_get(sim, 4096)


def test_meta_stack_and_global(sim):
    sm = StackMachine(sim)
    s = meta_stack_alloc(sm, 40, 5)
    g = meta_global_register(sim, 40, 6)
    assert all(meta_get(sim, s + k) == 5 and meta_get(sim, g + k) == 6 for k in range(40))


# --- typed addresses -----------------------------------------------------------

def test_type_index_node_kinds(sim):
    idx = [type_index(sim, sim.malloc(8 * w)) for w in (3, 5, 7)]
    assert idx == [2, 3, 4]
    assert len(set(idx)) == 3
    with pytest.raises(UntypedAddress):
        type_index(sim, 64)


def test_classic_tags():
    a = 0x800000040
    for t in range(16):
        assert tag_get(tag_set(a, t)) == t and untag(tag_set(a, t)) == a
    assert tag_set(a, 0) == a
    with pytest.raises(InvalidTag):
        tag_set(a, 16)
    with pytest.raises(InvalidTag):
        tag_set(a + 8, 1)


def test_extended_tags(sim):
    a = sim.malloc(48)
    assert sim.size(a) == 48
    ta = ext_tag_set(sim, a, 37)
    assert ext_tag_get(sim, ta) == 37 and ext_untag(sim, ta) == a
    assert ext_tag_set(sim, a, 0) == a
    with pytest.raises(InvalidTag):
        ext_tag_set(sim, a, 48)
    with pytest.raises(InvalidTag):
        ext_tag_set(sim, a + 1, 0)


# --- vectors -------------------------------------------------------------------

def test_vector_basics(sim):
    vt = LowFatVectorType(sim)
    v = vt.new()
    assert vt.len(v) == 2 and vt.pos(v) == 0 and vt.data(v) == v
    for x in range(1, 101):
        v = vt.push(v, x)
    assert vt.sum(v) == 5050 and vt.pos(v) == 100
    assert vt.get(v, 99) == 100
    with pytest.raises(BoundsError):
        vt.get(v, 100)
    vt.free(v)


def test_vector_growth_steps(sim):
    vt = LowFatVectorType(sim)
    v = vt.new()
    caps = []
    for x in range(8):
        v = vt.push(v, x)
        caps.append(sim.size(v))
    # the handle stays inside its object, so a full array grows immediately
    # capacities 2, 4, 6, 8, 10 items: growth happens on the push that fills a class
    assert caps == [16, 32, 32, 48, 48, 64, 64, 80]
    assert vt.pos(v) < vt.len(v)


def test_vector_pow2_growth(sim):
    vt = LowFatVectorType(sim, pow2=True)
    v = vt.new()
    for x in range(100):
        v = vt.push(v, x)
    assert sim.size(v) == 1024


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8).filter(lambda k: k in (1, 2, 4, 8)), st.booleans(),
       st.lists(st.integers(0, (1 << 64) - 1), max_size=600))
def test_vector_matches_fat_oracle(item, pow2, xs):
    from lowfat import Allocator
    from conftest import DEFAULT_SIM
    with Allocator(DEFAULT_SIM) as alloc:
        mask = (1 << (8 * item)) - 1
        fat, vt = FatVector(alloc, item, pow2), LowFatVectorType(alloc, item, pow2)
        v = vt.new()
        for x in xs:
            fat.push(x)
            v = vt.push(v, x)
            assert vt.pos(v) == fat.pos
        assert vt.to_list(v) == fat.to_list() == [x & mask for x in xs]
        assert all(vt.get(v, i) == fat.get(i) for i in range(len(xs)))
        assert vt.sum(v) == fat.sum()
        assert fat.storage_words() - vt.storage_words(v) == 3


# --- 2-3-4 tree ----------------------------------------------------------------

def test_node_sizes(sim):
    t = Tree234(sim, "size")
    assert sorted(t.kind_of_index) == [2, 3, 4]
    assert NODE_WORDS == {2: 3, 3: 5, 4: 7}


@pytest.mark.parametrize("mode", MODES)
def test_tree_against_set(sim, mode):
    rng = random.Random(5)
    t = Tree234(sim, mode)
    ref = set()
    for _ in range(3000):
        k = rng.randrange(5000)
        assert t.insert(k) == (k not in ref)
        ref.add(k)
    assert t.keys() == sorted(ref)
    assert len(set(t.depths())) == 1
    assert all((k in t) == (k in ref) for k in range(-5, 5005))
    t.free_all()
    assert sim.live_objects() == []


def test_tree_modes_agree(sim):
    rng = random.Random(9)
    keys = rng.sample(range(1 << 40), 2000)
    probes = keys[:500] + rng.sample(range(1 << 40), 500)
    answers = []
    for mode in MODES:
        t = Tree234(sim, mode)
        for k in keys:
            t.insert(k)
        answers.append([p in t for p in probes])
    assert answers[0] == answers[1] == answers[2]
