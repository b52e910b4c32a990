"""2-3-4 trees whose node kind is recovered from the node address.

Nodes hold keys first, then child addresses: a 2-node is 3 words, a
3-node 5 and a 4-node 7, so the three kinds land in three different size
classes.  The kind of a child is encoded in one of three ways:

``tag``       low 4 bits of the child address (classic tagged pointer)
``size``      the region index of the address (size-typed)
``extended``  the in-object offset of the address (extended tag)
"""
from __future__ import annotations

import struct

from ..errors import InvalidArgument
from ..layout import alloc_size_for

MODES = ("tag", "size", "extended")
NODE_WORDS = {2: 3, 3: 5, 4: 7}


class Tree234:
    def __init__(self, alloc, mode="size"):
        if mode not in MODES:
            raise InvalidArgument(f"unknown tree mode {mode!r}")
        self.alloc = alloc
        self.mode = mode
        self.root = 0
        self.count = 0
        self._mem = alloc.memory
        self.kind_of_index = {}
        for kind, w in NODE_WORDS.items():
            i, _ = alloc_size_for(w * 8, alloc.tables)
            self.kind_of_index[i] = kind
        if mode == "size" and len(self.kind_of_index) != 3:
            raise InvalidArgument("node kinds share a size class; size typing is impossible")
        if mode == "tag":
            self.decode = self._decode_tag
        elif mode == "size":
            self.decode = self._decode_size
        else:
            self.decode = self._decode_extended

    # --- encodings -----------------------------------------------------------

    def encode(self, base, kind):
        if self.mode == "tag":
            return base | kind
        if self.mode == "size":
            return base
        return base + kind

    def _decode_tag(self, p):
        return p & ~0xF, p & 0xF

    def _decode_size(self, p):
        return p, self.kind_of_index[p >> self.alloc.shift]

    def _decode_extended(self, p):
        b = self.alloc.base(p)
        return b, p - b

    # --- node storage --------------------------------------------------------

    def _new(self, keys, children):
        kind = len(keys) + 1
        base = self.alloc.malloc(NODE_WORDS[kind] * 8)
        words = keys + children
        self._mem.write(base, struct.pack(f"<{len(words)}Q", *words))
        return self.encode(base, kind)

    def _read(self, p):
        base, kind = self.decode(p)
        words = self._mem.words(base, NODE_WORDS[kind] * 8)
        return base, words[:kind - 1], words[kind - 1:]

    def _replace(self, slot, p):
        if slot is None:
            self.root = p
        else:
            self._mem.write_word(slot, p)

    # --- operations ----------------------------------------------------------

    def __contains__(self, key):
        mem_words = self._mem.words
        decode = self.decode
        p = self.root
        while p:
            base, kind = decode(p)
            words = mem_words(base, (2 * kind - 1) * 8)
            nk = kind - 1
            j = 0
            while j < nk:
                k = words[j]
                if key == k:
                    return True
                if key < k:
                    break
                j += 1
            p = words[nk + j]
        return False

    def insert(self, key) -> bool:
        """Insert ``key`` with top-down splitting; False if already present."""
        if not self.root:
            self.root = self._new([key], [0, 0])
            self.count = 1
            return True
        base, keys, kids = self._read(self.root)
        if len(keys) == 3:
            left = self._new(keys[:1], kids[:2])
            right = self._new(keys[2:], kids[2:])
            self.alloc.free(base)
            self.root = self._new(keys[1:2], [left, right])
        slot, p = None, self.root
        base, keys, kids = self._read(p)
        while True:
            if key in keys:
                return False
            j = 0
            while j < len(keys) and keys[j] < key:
                j += 1
            child = kids[j]
            if not child:
                keys.insert(j, key)
                q = self._new(keys, [0] * (len(keys) + 1))
                self._replace(slot, q)
                self.alloc.free(base)
                self.count += 1
                return True
            cbase, ckeys, ckids = self._read(child)
            if len(ckeys) == 3:
                # split the full child around its middle key before descending
                left = self._new(ckeys[:1], ckids[:2])
                right = self._new(ckeys[2:], ckids[2:])
                keys.insert(j, ckeys[1])
                kids[j:j + 1] = [left, right]
                q = self._new(keys, kids)
                self._replace(slot, q)
                self.alloc.free(base)
                self.alloc.free(cbase)
                p, base = q, self.decode(q)[0]
                continue
            slot = base + (len(keys) + j) * 8
            p, base, keys, kids = child, cbase, ckeys, ckids

    def keys(self):
        """All keys in ascending order."""
        out = []

        def walk(p):  # depth is logarithmic, recursion is fine
            _, keys, kids = self._read(p)
            for j, k in enumerate(keys):
                if kids[j]:
                    walk(kids[j])
                out.append(k)
            if kids[-1]:
                walk(kids[-1])

        if self.root:
            walk(self.root)
        return out

    def depths(self):
        """Depth of every leaf (all equal in a valid tree)."""
        out = []
        stack = [(self.root, 1)] if self.root else []
        while stack:
            p, d = stack.pop()
            _, keys, kids = self._read(p)
            if not kids[0]:
                out.append(d)
            else:
                stack.extend((c, d + 1) for c in kids)
        return out

    def free_all(self):
        stack = [self.root] if self.root else []
        while stack:
            base, _, kids = self._read(stack.pop())
            stack.extend(c for c in kids if c)
            self.alloc.free(base)
        self.root = 0
        self.count = 0
