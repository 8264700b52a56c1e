"""Replacement policies for the simulation engine.

A policy implements five operations the engine drives:

    on_hit(object_id, now)
    on_miss_admit(object_id, size, now) -> bool   admit decision
    choose_victims(bytes_needed, now) -> [ids]    eviction list
    on_modification_fetched(object_id, size, now)
    on_expire_stats(now)

The engine calls choose_victims whenever total occupancy exceeds
capacity or the policy has flagged `over_limit`; the returned objects
are gone and the policy must already have forgotten them.  A refetch of
a stale copy is delivered through on_modification_fetched and counts as
one access to the object.  Policies also expose `kernel_bytes` and
`accessory_bytes` for occupancy reporting (single-area policies report
everything as kernel).
"""

from __future__ import annotations

import math
from collections import OrderedDict, deque
from heapq import heappop, heappush

import numpy as np

__all__ = [
    "POLICY_IDS",
    "EvictionInfeasible",
    "LRUCache",
    "LFUCache",
    "FIFOCache",
    "ZBSCache",
    "make_policy",
    "stats_retention_for",
]

DAY = 86400.0
MIN_RETENTION = 30 * DAY
MAX_RETENTION = 183 * DAY

POLICY_IDS = ("zbs", "zbs-byte", "lru", "lfu", "fifo")


class EvictionInfeasible(RuntimeError):
    """The policy cannot free the requested space."""


def stats_retention_for(capacity_bytes: float, nu_int: float) -> float:
    """Statistics retention span max(30 d, 10 * capacity / bandwidth), capped
    at half a year.  `nu_int` is the demand bandwidth in bytes per second."""
    if nu_int <= 0:
        raise ValueError(f"nu_int must be > 0, got {nu_int!r}")
    return min(max(MIN_RETENTION, 10.0 * capacity_bytes / nu_int), MAX_RETENTION)


class _SingleArea:
    """Shared bookkeeping for the one-area baseline policies."""

    over_limit = False  # single-area policies only overflow engine capacity

    def __init__(self, capacity: float):
        self.capacity = capacity
        self.total = 0

    @property
    def kernel_bytes(self) -> float:
        return self.total

    accessory_bytes = 0

    def on_expire_stats(self, now: float) -> None:
        pass


class LRUCache(_SingleArea):
    """Evict the least recently used document."""

    def __init__(self, capacity: float):
        super().__init__(capacity)
        self.entries: OrderedDict[str, int] = OrderedDict()

    def on_hit(self, obj: str, now: float) -> None:
        self.entries.move_to_end(obj)

    def on_miss_admit(self, obj: str, size: int, now: float) -> bool:
        if size > self.capacity:
            return False
        self.entries[obj] = size
        self.total += size
        return True

    def on_modification_fetched(self, obj: str, size: int, now: float) -> None:
        self.total += size - self.entries[obj]
        self.entries[obj] = size
        self.entries.move_to_end(obj)

    def choose_victims(self, bytes_needed: float, now: float) -> list[str]:
        victims: list[str] = []
        while bytes_needed > 0:
            if not self.entries:
                raise EvictionInfeasible("LRU cache empty but space still needed")
            obj, size = self.entries.popitem(last=False)
            self.total -= size
            bytes_needed -= size
            victims.append(obj)
        return victims

    def force_forget(self, obj: str) -> None:
        self.total -= self.entries.pop(obj)


class FIFOCache(_SingleArea):
    """Evict in admission order; requests never refresh position."""

    def __init__(self, capacity: float):
        super().__init__(capacity)
        self.entries: OrderedDict[str, int] = OrderedDict()

    def on_hit(self, obj: str, now: float) -> None:
        pass

    def on_miss_admit(self, obj: str, size: int, now: float) -> bool:
        if size > self.capacity:
            return False
        self.entries[obj] = size
        self.total += size
        return True

    def on_modification_fetched(self, obj: str, size: int, now: float) -> None:
        self.total += size - self.entries[obj]
        self.entries[obj] = size

    def choose_victims(self, bytes_needed: float, now: float) -> list[str]:
        victims: list[str] = []
        while bytes_needed > 0:
            if not self.entries:
                raise EvictionInfeasible("FIFO cache empty but space still needed")
            obj, size = self.entries.popitem(last=False)
            self.total -= size
            bytes_needed -= size
            victims.append(obj)
        return victims

    def force_forget(self, obj: str) -> None:
        self.total -= self.entries.pop(obj)


class LFUCache(_SingleArea):
    """Evict the least frequently used document, oldest access first on ties.

    Frequency is counted per residency; it does not survive eviction.
    """

    def __init__(self, capacity: float):
        super().__init__(capacity)
        self.entries: dict[str, list] = {}  # obj -> [size, freq]
        self.buckets: dict[int, OrderedDict[str, None]] = {}
        self.min_freq = 0

    def _bump(self, obj: str) -> None:
        entry = self.entries[obj]
        freq = entry[1]
        bucket = self.buckets[freq]
        del bucket[obj]
        if not bucket:
            del self.buckets[freq]
            if self.min_freq == freq:
                self.min_freq = freq + 1
        entry[1] = freq + 1
        self.buckets.setdefault(freq + 1, OrderedDict())[obj] = None

    def on_hit(self, obj: str, now: float) -> None:
        self._bump(obj)

    def on_miss_admit(self, obj: str, size: int, now: float) -> bool:
        if size > self.capacity:
            return False
        self.entries[obj] = [size, 1]
        self.buckets.setdefault(1, OrderedDict())[obj] = None
        self.min_freq = 1
        self.total += size
        return True

    def on_modification_fetched(self, obj: str, size: int, now: float) -> None:
        entry = self.entries[obj]
        self.total += size - entry[0]
        entry[0] = size
        self._bump(obj)

    def choose_victims(self, bytes_needed: float, now: float) -> list[str]:
        victims: list[str] = []
        while bytes_needed > 0:
            if not self.entries:
                raise EvictionInfeasible("LFU cache empty but space still needed")
            while self.min_freq not in self.buckets:
                self.min_freq += 1
            bucket = self.buckets[self.min_freq]
            obj, _ = bucket.popitem(last=False)
            if not bucket:
                del self.buckets[self.min_freq]
            size = self.entries.pop(obj)[0]
            self.total -= size
            bytes_needed -= size
            victims.append(obj)
        return victims

    def force_forget(self, obj: str) -> None:
        size, freq = self.entries.pop(obj)
        bucket = self.buckets[freq]
        del bucket[obj]
        if not bucket:
            del self.buckets[freq]
        self.total -= size


class _KernelEntry:
    __slots__ = ("theta", "last_modified", "size", "admitted_at", "seq")

    def __init__(self, theta, last_modified, size, admitted_at, seq):
        self.theta = theta
        self.last_modified = last_modified
        self.size = size
        self.admitted_at = admitted_at
        self.seq = seq


class _Stats:
    """Per-document request history at day granularity plus counters."""

    __slots__ = ("days", "total", "first_seen", "last_seen", "mod_count")

    def __init__(self, now: float):
        self.days: deque = deque()  # [day_index, count] pairs
        self.total = 0
        self.first_seen = now
        self.last_seen = now
        self.mod_count = 0

    def add(self, now: float) -> None:
        day = int(now // DAY)
        if self.days and self.days[-1][0] == day:
            self.days[-1][1] += 1
        else:
            self.days.append([day, 1])
        self.total += 1
        self.last_seen = now

    def window_total(self, now: float, retention: float) -> int:
        cutoff = int((now - retention) // DAY)
        days = self.days
        while days and days[0][0] < cutoff:
            self.total -= days.popleft()[1]
        return self.total


class ZBSCache:
    """Two-area policy driven by long-horizon Zipf request statistics.

    The cache splits into a kernel for documents requested at least
    twice, a small accessory area (at most `accessory_fraction` of
    capacity) that absorbs first-time requests, and a management record
    of per-document request counts kept for `retention` seconds, which
    survives eviction.

    Placement: a first-ever request is admitted to the accessory area
    (FIFO eviction).  A second request promotes the document to the
    kernel with theta = 2; if the document was meanwhile evicted but its
    statistics still show a request inside the retention window, it is
    re-admitted directly to the kernel.  A stale document that gets
    re-fetched (on demand or by prefetch) is stored in the kernel with
    theta reset to 1.

    Kernel eviction removes the document with the largest staleness
    metric C = T_z / theta, where T_z is the time since the copy was
    fetched or last refreshed; in byte mode the metric is divided by the
    document size, favouring small popular documents per byte.  Ties
    evict the oldest admission first.
    """

    def __init__(
        self,
        capacity: float,
        accessory_fraction: float = 0.10,
        retention: float = MAX_RETENTION,
        byte_metric: bool = False,
    ):
        self.capacity = capacity
        if math.isinf(capacity):
            self.acc_cap = self.kern_cap = math.inf
        else:
            self.acc_cap = accessory_fraction * capacity
            self.kern_cap = capacity - self.acc_cap
        self.retention = retention
        self.byte_metric = byte_metric
        self.kernel: dict[str, _KernelEntry] = {}
        self.accessory: OrderedDict[str, list] = OrderedDict()  # [size, admitted_at]
        self.stats: dict[str, _Stats] = {}
        self.kernel_bytes = 0
        self.accessory_bytes = 0
        self.peak_accessory_bytes = 0
        self.over_limit = False
        self._seq = 0
        self._start: float | None = None
        # Bucket index for the object metric: per-theta min-heaps ordered
        # by (last_modified, admitted_at, seq) plus a dense head array so
        # victim search is one vectorised scan over thetas.
        self._heaps: dict[int, list] = {}
        self._head_lm = np.full(1024, math.inf)
        self._inv_theta = np.empty(1024)
        self._inv_theta[0] = 1.0
        self._inv_theta[1:] = 1.0 / np.arange(1, 1024)
        self._max_theta = 0
        # Slot index for the byte metric: per-entry last_modified and
        # 1/(theta*size) weights in parallel arrays, victim by argmax of
        # (now - lm) * w.  Freed slots carry lm = inf so they score -inf.
        self._slot: dict[str, int] = {}
        self._slot_obj: list = []
        self._arr_lm = np.full(1024, math.inf)
        self._arr_w = np.ones(1024)
        self._free: list[int] = []
        self._used = 0

    # -- statistics ---------------------------------------------------

    def _note_request(self, obj: str, now: float) -> _Stats:
        if self._start is None:
            self._start = now
        st = self.stats.get(obj)
        if st is None:
            st = self.stats[obj] = _Stats(now)
        st.add(now)
        return st

    def on_expire_stats(self, now: float) -> None:
        if self._start is None or now - self._start <= self.retention:
            return
        cutoff = now - self.retention
        drop = [
            obj
            for obj, st in self.stats.items()
            if st.last_seen < cutoff and obj not in self.kernel and obj not in self.accessory
        ]
        for obj in drop:
            del self.stats[obj]

    # -- theta bucket maintenance -------------------------------------

    def _grow(self, theta: int) -> None:
        size = len(self._head_lm)
        new_size = size
        while theta >= new_size:
            new_size *= 2
        head = np.full(new_size, math.inf)
        head[:size] = self._head_lm
        inv = np.empty(new_size)
        inv[:size] = self._inv_theta
        inv[size:] = 1.0 / np.arange(size, new_size)
        self._head_lm = head
        self._inv_theta = inv

    def _bucket_add(self, theta: int, entry: _KernelEntry, obj: str) -> None:
        if theta >= len(self._head_lm):
            self._grow(theta)
        heappush(
            self._heaps.setdefault(theta, []),
            (entry.last_modified, entry.admitted_at, entry.seq, obj),
        )
        if entry.last_modified < self._head_lm[theta]:
            self._head_lm[theta] = entry.last_modified
        if theta > self._max_theta:
            self._max_theta = theta

    def _refresh_head(self, theta: int) -> None:
        heap = self._heaps.get(theta)
        kernel = self.kernel
        while heap:
            lm, _, seq, obj = heap[0]
            e = kernel.get(obj)
            if e is not None and e.theta == theta and e.last_modified == lm and e.seq == seq:
                self._head_lm[theta] = lm
                return
            heappop(heap)
        if heap is not None and not heap:
            del self._heaps[theta]
        self._head_lm[theta] = math.inf

    def _bucket_remove(self, theta: int, old_lm: float) -> None:
        # Lazy removal: only rebuild the head when the departing entry
        # could have been it.
        if old_lm <= self._head_lm[theta]:
            self._refresh_head(theta)

    # -- byte-metric slot maintenance ----------------------------------

    def _slot_alloc(self, obj: str, entry: _KernelEntry) -> None:
        if self._free:
            i = self._free.pop()
            self._slot_obj[i] = obj
        else:
            i = self._used
            self._used += 1
            if i >= len(self._arr_lm):
                n = len(self._arr_lm)
                self._arr_lm = np.concatenate([self._arr_lm, np.full(n, math.inf)])
                self._arr_w = np.concatenate([self._arr_w, np.ones(n)])
            self._slot_obj.append(obj)
        self._slot[obj] = i
        self._arr_lm[i] = entry.last_modified
        self._arr_w[i] = 1.0 / (entry.theta * entry.size)

    def _slot_update(self, obj: str, entry: _KernelEntry) -> None:
        i = self._slot[obj]
        self._arr_lm[i] = entry.last_modified
        self._arr_w[i] = 1.0 / (entry.theta * entry.size)

    def _slot_release(self, obj: str) -> None:
        i = self._slot.pop(obj)
        self._slot_obj[i] = None
        self._arr_lm[i] = math.inf
        self._arr_w[i] = 1.0
        self._free.append(i)

    # -- placement ----------------------------------------------------

    def _admit_kernel(self, obj: str, size: int, now: float, theta: int,
                      last_modified: float, admitted_at: float) -> None:
        self._seq += 1
        entry = _KernelEntry(theta, last_modified, size, admitted_at, self._seq)
        self.kernel[obj] = entry
        self.kernel_bytes += size
        if self.byte_metric:
            self._slot_alloc(obj, entry)
        else:
            self._bucket_add(theta, entry, obj)
        if self.kernel_bytes > self.kern_cap:
            self.over_limit = True

    def on_miss_admit(self, obj: str, size: int, now: float) -> bool:
        st = self.stats.get(obj)
        prior = st.window_total(now, self.retention) if st is not None else 0
        self._note_request(obj, now)
        if prior >= 1:
            if size > self.kern_cap:
                return False
            self._admit_kernel(obj, size, now, prior + 1, now, now)
        else:
            if size > self.acc_cap:
                return False
            self.accessory[obj] = [size, now]
            self.accessory_bytes += size
            if self.accessory_bytes > self.acc_cap:
                self.over_limit = True
            elif self.accessory_bytes > self.peak_accessory_bytes:
                # Peak tracks settled states; an over-limit admission is
                # drained within the same event before it can be observed.
                self.peak_accessory_bytes = self.accessory_bytes
        return True

    def on_hit(self, obj: str, now: float) -> None:
        self._note_request(obj, now)
        entry = self.kernel.get(obj)
        if entry is not None:
            theta = entry.theta
            entry.theta = theta + 1
            if self.byte_metric:
                self._slot_update(obj, entry)
            else:
                self._bucket_remove(theta, entry.last_modified)
                self._bucket_add(theta + 1, entry, obj)
            return
        acc = self.accessory.pop(obj, None)
        if acc is None:
            return
        size, admitted_at = acc
        self.accessory_bytes -= size
        if size > self.kern_cap:
            # A document too large for the kernel stays in the accessory
            # area rather than vanish on its second request.
            self.accessory[obj] = acc
            self.accessory_bytes += size
            return
        self._admit_kernel(obj, size, now, 2, admitted_at, admitted_at)

    def on_modification_fetched(self, obj: str, size: int, now: float) -> None:
        st = self._note_request(obj, now)
        st.mod_count += 1
        entry = self.kernel.get(obj)
        if entry is not None:
            old_theta = entry.theta
            old_lm = entry.last_modified
            self.kernel_bytes += size - entry.size
            entry.size = size
            entry.theta = 1
            entry.last_modified = now
            if self.byte_metric:
                self._slot_update(obj, entry)
            else:
                self._bucket_remove(old_theta, old_lm)
                self._bucket_add(1, entry, obj)
        else:
            acc = self.accessory.pop(obj, None)
            if acc is None:
                return
            self.accessory_bytes -= acc[0]
            self._admit_kernel(obj, size, now, 1, now, acc[1])
        if self.kernel_bytes > self.kern_cap:
            self.over_limit = True

    def force_forget(self, obj: str) -> None:
        entry = self.kernel.pop(obj, None)
        if entry is not None:
            self.kernel_bytes -= entry.size
            if self.byte_metric:
                self._slot_release(obj)
            else:
                self._bucket_remove(entry.theta, entry.last_modified)
            return
        acc = self.accessory.pop(obj, None)
        if acc is not None:
            self.accessory_bytes -= acc[0]

    # -- eviction -----------------------------------------------------

    def metric(self, obj: str, now: float) -> float:
        """Staleness metric C of a kernel-resident document."""
        e = self.kernel[obj]
        c = (now - e.last_modified) / e.theta
        return c / e.size if self.byte_metric else c

    def _kernel_victim(self, now: float) -> str:
        if self.byte_metric:
            # Highest metric wins; earlier admission (then sequence) on ties.
            used = self._used
            if used == 0:
                raise EvictionInfeasible("kernel index empty but space still needed")
            c = (now - self._arr_lm[:used]) * self._arr_w[:used]
            best = float(c.max())
            if best == -math.inf:
                raise EvictionInfeasible("kernel index empty but space still needed")
            tied = np.flatnonzero(c == best)
            if len(tied) == 1:
                return self._slot_obj[int(tied[0])]
            kernel = self.kernel
            return min((self._slot_obj[int(i)] for i in tied),
                       key=lambda o: (kernel[o].admitted_at, kernel[o].seq))
        # Head timestamps are maintained lazily and can only understate the
        # true head (overstating C), so a bucket whose head survives
        # revalidation at the argmax is the genuine global maximum.
        top = self._max_theta + 1
        inv = self._inv_theta[:top]
        while True:
            c = (now - self._head_lm[:top]) * inv
            best = int(np.argmax(c))
            best_c = c[best]
            if best_c == -math.inf:
                raise EvictionInfeasible("kernel index empty but space still needed")
            before = self._head_lm[best]
            self._refresh_head(best)
            if self._head_lm[best] == before:
                break
        tied = np.flatnonzero(c == best_c)
        if len(tied) == 1:
            return self._heaps[best][0][3]
        choices = []
        for theta in tied:
            theta = int(theta)
            self._refresh_head(theta)
            if (now - self._head_lm[theta]) * self._inv_theta[theta] == best_c:
                lm, admitted_at, seq, obj = self._heaps[theta][0]
                choices.append((admitted_at, seq, obj))
        return min(choices)[2]

    def choose_victims(self, bytes_needed: float, now: float) -> list[str]:
        victims: list[str] = []
        while self.accessory_bytes > self.acc_cap:
            obj, (size, _) = self.accessory.popitem(last=False)
            self.accessory_bytes -= size
            victims.append(obj)
        if self.accessory_bytes > self.peak_accessory_bytes:
            self.peak_accessory_bytes = self.accessory_bytes
        while self.kernel_bytes > self.kern_cap:
            if not self.kernel:
                raise EvictionInfeasible("kernel empty but space still needed")
            obj = self._kernel_victim(now)
            entry = self.kernel.pop(obj)
            self.kernel_bytes -= entry.size
            if self.byte_metric:
                self._slot_release(obj)
            else:
                self._bucket_remove(entry.theta, entry.last_modified)
            victims.append(obj)
        self.over_limit = False
        return victims


def make_policy(config) -> object:
    """Build the policy named by `config.policy_id` for the engine."""
    capacity = config.capacity_bytes
    pid = config.policy_id
    if pid == "lru":
        return LRUCache(capacity)
    if pid == "lfu":
        return LFUCache(capacity)
    if pid == "fifo":
        return FIFOCache(capacity)
    if pid in ("zbs", "zbs-byte"):
        retention = config.stats_retention_seconds
        if retention is None:
            retention = MAX_RETENTION
        return ZBSCache(
            capacity,
            accessory_fraction=config.accessory_fraction,
            retention=retention,
            byte_metric=pid == "zbs-byte" or config.byte_metric_mode,
        )
    raise ValueError(f"unknown policy {pid!r}; valid ids: {', '.join(POLICY_IDS)}")
