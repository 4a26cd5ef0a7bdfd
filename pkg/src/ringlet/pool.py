"""Pre-allocated memory pool with fixed size classes.

The pool carves cells out of one arena allocated up front. Each size class
keeps its own free list, so a released cell is reused by the next request of
the same class. Requests bigger than the largest class, or requests made after
the arena is full, fall back to ordinary host allocation and are counted;
a *strict* pool (the microcontroller profile) raises instead.

Handles are plain integers: arena cells encode ``offset << 3 | class``, host
fallback cells are negative.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import PoolExhausted

SIZE_CLASSES = (16, 32, 64, 128)

KiB = 1024
MiB = 1024 * KiB


@dataclass(frozen=True)
class PoolProfile:
    name: str
    capacity_bytes: int
    strict: bool
    instruction_width: int


# The micro profile's 16-unit instruction width is recorded for reference only;
# the compiler always emits 24-unit records.
PROFILES = {
    "desktop": PoolProfile("desktop", 4 * MiB, strict=False, instruction_width=24),
    "micro": PoolProfile("micro", 16 * KiB, strict=True, instruction_width=16),
}


@dataclass
class PoolStats:
    allocated: int = 0
    freed: int = 0
    high_water: int = 0
    fallback: int = 0
    in_use_bytes: int = 0

    @property
    def live(self) -> int:
        return self.allocated - self.freed


class MemoryPool:
    def __init__(self, capacity_bytes: int = PROFILES["desktop"].capacity_bytes,
                 size_classes: tuple[int, ...] = SIZE_CLASSES, strict: bool = False):
        if capacity_bytes < 0:
            raise ValueError("capacity must be non-negative")
        self.capacity_bytes = capacity_bytes
        self.size_classes = tuple(size_classes)
        self.strict = strict
        self.arena = bytearray(capacity_bytes)
        self.stats = PoolStats()
        self._free: list[list[int]] = [[] for _ in self.size_classes]
        self._top = 0
        self._live: set[int] = set()
        self._fallback_serial = 0
        self._fallback_bytes: dict[int, int] = {}
        self.closed = False

    @classmethod
    def for_profile(cls, profile: str | PoolProfile) -> "MemoryPool":
        p = PROFILES[profile] if isinstance(profile, str) else profile
        return cls(p.capacity_bytes, strict=p.strict)

    def class_for(self, size: int) -> int:
        """Index of the smallest size class holding ``size`` bytes, or -1."""
        for i, c in enumerate(self.size_classes):
            if size <= c:
                return i
        return -1

    def alloc(self, size: int) -> int:
        if size <= 0:
            raise ValueError("allocation size must be positive")
        if self.closed:
            raise PoolExhausted("pool is closed")
        ci = self.class_for(size)
        st = self.stats
        if ci >= 0:
            free = self._free[ci]
            if free:
                handle = free.pop()
            else:
                csize = self.size_classes[ci]
                if self._top + csize <= self.capacity_bytes:
                    handle = (self._top << 3) | ci
                    self._top += csize
                else:
                    handle = self._fallback(ci, size)
            nbytes = self.size_classes[ci]
        else:
            handle = self._fallback(len(self.size_classes) - 1, size)
            nbytes = size
        if handle < 0:
            self._fallback_bytes[handle] = nbytes
        self._live.add(handle)
        st.allocated += 1
        st.in_use_bytes += nbytes
        if st.in_use_bytes > st.high_water:
            st.high_water = st.in_use_bytes
        return handle

    def _fallback(self, ci: int, size: int) -> int:
        if self.strict:
            raise PoolExhausted(
                f"pool of {self.capacity_bytes} bytes exhausted allocating {size} bytes")
        self.stats.fallback += 1
        self._fallback_serial += 1
        return -((self._fallback_serial << 3) | ci) - 1

    def release(self, handle: int) -> None:
        if self.closed:
            return
        try:
            self._live.remove(handle)
        except KeyError:
            raise ValueError(f"handle {handle} is not live in this pool") from None
        st = self.stats
        st.freed += 1
        if handle >= 0:
            ci = handle & 7
            st.in_use_bytes -= self.size_classes[ci]
            self._free[ci].append(handle)
        else:
            # fallback cells go back to the host, not to a free list
            st.in_use_bytes -= self._fallback_bytes.pop(handle)

    def view(self, handle: int) -> memoryview:
        """Writable view of an arena cell's bytes."""
        if handle < 0 or handle not in self._live:
            raise ValueError("only live arena cells have a view")
        off, ci = handle >> 3, handle & 7
        return memoryview(self.arena)[off:off + self.size_classes[ci]]

    @property
    def live(self) -> int:
        return len(self._live)

    def close(self) -> None:
        """Release every live cell and refuse further allocation."""
        if self.closed:
            return
        for handle in list(self._live):
            self.release(handle)
        self.closed = True
