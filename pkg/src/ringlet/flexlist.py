"""Hybrid list used for every guest list.

A doubly linked deque with two optional accelerators:

* a singleton cache remembering the last visited node and the 1-based index
  of the item after it, so sequential reads are O(1);
* an index table (one node reference per item) built on request, giving O(1)
  random reads without touching the cache.

Any insert or delete drops the index table and resets the cache. In shared
mode reads never touch bookkeeping, which makes concurrent readers safe.
"""

from __future__ import annotations

import pickle
from typing import Any, Iterable, Iterator

from .errors import IndexOutOfRange, PositionOutOfRange

NODE_CELL_BYTES = 32


class _Node:
    __slots__ = ("value", "prev", "next", "cell")

    def __init__(self, value, prev=None, next=None, cell=None):
        self.value = value
        self.prev = prev
        self.next = next
        self.cell = cell


class FlexList:
    __slots__ = ("_head", "_tail", "_size", "_cache_node", "_cache_next", "_index",
                 "shared_mode", "cache_enabled", "uniform_cell_hint", "_pool",
                 "cache_hits", "table_hits", "traversal_steps", "__weakref__")

    def __init__(self, items: Iterable[Any] = (), *, pool=None, uniform_cell_hint: int | None = None):
        self._head: _Node | None = None
        self._tail: _Node | None = None
        self._size = 0
        self._cache_node: _Node | None = None
        self._cache_next = 0
        self._index: list[_Node] | None = None
        self.shared_mode = False
        self.cache_enabled = True
        self.uniform_cell_hint = uniform_cell_hint
        self._pool = pool
        self.cache_hits = 0
        self.table_hits = 0
        self.traversal_steps = 0
        for item in items:
            self.append(item)

    # -- size / iteration ---------------------------------------------------

    def __len__(self) -> int:
        return self._size

    @property
    def size(self) -> int:
        return self._size

    def __iter__(self) -> Iterator[Any]:
        node = self._head
        while node is not None:
            yield node.value
            node = node.next

    def to_list(self) -> list:
        return list(self)

    def __repr__(self) -> str:
        return f"FlexList({self.to_list()!r})"

    def __eq__(self, other) -> bool:
        if isinstance(other, FlexList):
            return self._size == other._size and all(a == b for a, b in zip(self, other))
        return NotImplemented

    __hash__ = None

    # -- locating -----------------------------------------------------------

    def _locate(self, index: int) -> _Node:
        """Node of 1-based ``index``; caller has range-checked it."""
        if self._index is not None:
            if not self.shared_mode:
                self.table_hits += 1
            return self._index[index - 1]
        cnode = self._cache_node
        if cnode is not None and index == self._cache_next:
            if not self.shared_mode:
                self.cache_hits += 1
            return cnode.next
        size = self._size
        best = index - 1  # distance from head
        start = self._head
        forward = True
        d_tail = size - index
        if d_tail < best:
            best, start, forward = d_tail, self._tail, False
        if cnode is not None:
            cpos = self._cache_next - 1
            d_cache = index - cpos
            if d_cache < 0:
                d_cache = -d_cache
            if d_cache <= best:
                best, start, forward = d_cache, cnode, index >= cpos
        node = start
        steps = best
        if forward:
            while steps:
                node = node.next
                steps -= 1
        else:
            while steps:
                node = node.prev
                steps -= 1
        if not self.shared_mode:
            self.traversal_steps += best
        return node

    def get(self, index: int):
        """Item at 1-based ``index``."""
        if index < 1 or index > self._size:
            raise IndexOutOfRange(f"index {index} outside 1..{self._size}")
        node = self._locate(index)
        if not self.shared_mode and self._index is None and self.cache_enabled:
            self._cache_node = node
            self._cache_next = index + 1
        return node.value

    def set(self, index: int, value) -> None:
        if index < 1 or index > self._size:
            raise IndexOutOfRange(f"index {index} outside 1..{self._size}")
        node = self._locate(index)
        node.value = value
        if not self.shared_mode and self._index is None and self.cache_enabled:
            self._cache_node = node
            self._cache_next = index + 1

    def first(self):
        if self._head is None:
            raise IndexOutOfRange("list is empty")
        return self._head.value

    def last(self):
        if self._tail is None:
            raise IndexOutOfRange("list is empty")
        return self._tail.value

    # -- mutation -----------------------------------------------------------

    def _invalidate(self) -> None:
        self._index = None
        self._cache_node = None
        self._cache_next = 0

    def _new_node(self, value) -> _Node:
        cell = self._pool.alloc(NODE_CELL_BYTES) if self._pool is not None else None
        return _Node(value, cell=cell)

    def append(self, value) -> None:
        node = self._new_node(value)
        tail = self._tail
        if tail is None:
            self._head = self._tail = node
        else:
            node.prev = tail
            tail.next = node
            self._tail = node
        self._size += 1
        if self._index is not None or self._cache_node is not None:
            self._invalidate()

    def insert(self, position: int, value) -> None:
        """Insert so that ``value`` becomes item ``position + 1``."""
        if position < 0 or position > self._size:
            raise PositionOutOfRange(f"position {position} outside 0..{self._size}")
        if position == self._size:
            self.append(value)
            return
        node = self._new_node(value)
        if position == 0:
            node.next = self._head
            self._head.prev = node
            self._head = node
        else:
            before = self._locate(position)
            after = before.next
            node.prev = before
            node.next = after
            before.next = node
            after.prev = node
        self._size += 1
        self._invalidate()

    def delete(self, index: int) -> None:
        if index < 1 or index > self._size:
            raise IndexOutOfRange(f"index {index} outside 1..{self._size}")
        node = self._locate(index)
        prev, nxt = node.prev, node.next
        if prev is None:
            self._head = nxt
        else:
            prev.next = nxt
        if nxt is None:
            self._tail = prev
        else:
            nxt.prev = prev
        node.prev = node.next = None
        self._size -= 1
        self._invalidate()
        if node.cell is not None:
            self._pool.release(node.cell)

    def clear(self) -> None:
        while self._size:
            self.delete(self._size)

    # -- configuration ------------------------------------------------------

    def configure(self, *, build_index: bool | None = None, shared_mode: bool | None = None,
                  cache: bool | None = None) -> None:
        if build_index:
            table = []
            node = self._head
            while node is not None:
                table.append(node)
                node = node.next
            self._index = table
            self._cache_node = None
            self._cache_next = 0
        elif build_index is False:
            self._index = None
        if shared_mode is not None:
            self.shared_mode = shared_mode
        if cache is not None:
            self.cache_enabled = cache
            if not cache:
                self._cache_node = None
                self._cache_next = 0

    @property
    def has_index(self) -> bool:
        return self._index is not None

    @property
    def cache_position(self) -> int | None:
        """``next_index`` of the singleton cache, or None when empty."""
        return self._cache_next if self._cache_node is not None else None

    def bookkeeping(self) -> bytes:
        """Serialized bookkeeping: size, cache position, index-table shape, mode."""
        return pickle.dumps((self._size, self.cache_position,
                             None if self._index is None else len(self._index),
                             self.shared_mode, self.cache_hits, self.table_hits,
                             self.traversal_steps))

    # -- copying / ownership ------------------------------------------------

    def copy(self, pool=None) -> "FlexList":
        """Deep copy: nested lists are copied, other values are shared."""
        out = FlexList(pool=pool if pool is not None else self._pool,
                       uniform_cell_hint=self.uniform_cell_hint)
        node = self._head
        while node is not None:
            v = node.value
            out.append(v.copy() if type(v) is FlexList else v)
            node = node.next
        return out

    def __del__(self):
        pool = self._pool
        if pool is None or pool.closed:
            return
        node = self._head
        while node is not None:
            if node.cell is not None:
                try:
                    pool.release(node.cell)
                except ValueError:
                    pass
                node.cell = None
            node = node.next
