"""Long-term prefetching schemes layered over the simulation engine.

Three ways to decide which documents are worth keeping fresh at the
origin's expense:

* ``goodfetch``  fetch documents likely to be requested again before
  they change, P = 1 - (1 - p_i)^(a l_i);
* ``api``        fetch documents with a large a p_i l_i product;
* ``lifetime``   fetch a stale document once its copy age exceeds the
  mean observed interval between its modifications.

The first two are threshold filters re-evaluated whenever the document
changes; the lifetime rule can trigger without an observed change, so it
is additionally evaluated once per simulated day.  Prefetched bytes are
reported separately from demand bytes so the added bandwidth is
measurable against the hit-ratio gain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .simcore import CacheConfig, SimReport, simulate

__all__ = [
    "SCHEME_IDS",
    "ObjectPrefetchStats",
    "good_fetch_probability",
    "api_value",
    "freshness_factor",
    "select_prefetch_set",
    "lifetime_threshold",
    "PrefetchLayer",
    "simulate_with_prefetch",
]

SCHEME_IDS = ("goodfetch", "api", "lifetime")


@dataclass(frozen=True)
class ObjectPrefetchStats:
    """Per-document quantities the scoring rules consume.

    p_i is the document's share of all requests, l_i its mean lifetime
    between modifications in seconds, a_rate the aggregate request
    arrival rate in requests per second.  install_time is when tracking
    began (trace start unless earlier history is known) and mod_count
    the number of modifications observed since then.
    """

    object_id: str
    p_i: float
    l_i: float
    a_rate: float
    mod_count: int
    install_time: float
    last_modified: float

    def __post_init__(self):
        if not 0.0 <= self.p_i <= 1.0:
            raise ValueError(f"p_i must be within [0, 1], got {self.p_i!r}")
        if self.l_i <= 0.0:
            raise ValueError(f"l_i must be > 0, got {self.l_i!r}")
        if self.a_rate < 0.0:
            raise ValueError(f"a_rate must be >= 0, got {self.a_rate!r}")
        if self.mod_count < 0:
            raise ValueError(f"mod_count must be >= 0, got {self.mod_count!r}")


def good_fetch_probability(stats: ObjectPrefetchStats) -> float:
    """Probability the document is requested before its next change,
    1 - (1 - p_i)^(a l_i) for a l_i request opportunities per lifetime."""
    exponent = stats.a_rate * stats.l_i
    if exponent == 0.0:
        return 0.0
    if stats.p_i >= 1.0:
        return 1.0
    return -math.expm1(exponent * math.log1p(-stats.p_i))


def api_value(stats: ObjectPrefetchStats) -> float:
    """Expected requests per lifetime, a * p_i * l_i."""
    return stats.a_rate * stats.p_i * stats.l_i


def freshness_factor(stats: ObjectPrefetchStats) -> float:
    """Fraction of requests that find a prefetched copy fresh,
    a p_i l_i / (a p_i l_i + 1)."""
    apl = api_value(stats)
    return apl / (apl + 1.0)


_SCORERS = {"goodfetch": good_fetch_probability, "api": api_value}


def select_prefetch_set(
    stats_list: list[ObjectPrefetchStats],
    scheme: str,
    threshold: float,
) -> list[str]:
    """Object ids whose scheme score strictly exceeds `threshold`,
    highest score first (ties broken by id for determinism)."""
    try:
        score = _SCORERS[scheme]
    except KeyError:
        raise ValueError(
            f"unknown scheme {scheme!r}; threshold schemes: goodfetch, api"
        ) from None
    picked = [(score(st), st.object_id) for st in stats_list]
    picked = [(s, obj) for s, obj in picked if s > threshold]
    picked.sort(key=lambda t: (-t[0], t[1]))
    return [obj for _, obj in picked]


def lifetime_threshold(stats: ObjectPrefetchStats, now: float) -> bool:
    """Fetch decision of the lifetime rule.

    The copy's age since the last known modification is compared against
    the mean inter-modification interval (now - install_time)/mod_count;
    fetch only on strict excess.  With no modification history the
    document is never prefetched.
    """
    if now < stats.install_time:
        raise ValueError("now precedes install_time")
    if stats.mod_count == 0:
        return False
    t_p = (now - stats.install_time) / stats.mod_count
    return (now - stats.last_modified) > t_p


class PrefetchLayer:
    """Adapter the engine drives at modification events and daily ticks.

    Estimates the scoring inputs from the run itself: p_i from the
    engine's per-document request counters, a from the aggregate request
    count over elapsed time, and l_i as the mean observed time between
    modifications since the trace start.
    """

    def __init__(self, scheme: str, threshold: float = -math.inf):
        if scheme not in SCHEME_IDS:
            raise ValueError(
                f"unknown scheme {scheme!r}; valid ids: {', '.join(SCHEME_IDS)}"
            )
        self.scheme = scheme
        self.threshold = threshold
        self.engine = None
        self.start: float | None = None
        self.mod_counts: dict[str, int] = {}
        self.last_mod: dict[str, float] = {}
        self.cur_size: dict[str, int] = {}

    def attach(self, engine) -> None:
        self.engine = engine

    def note_start(self, t: float) -> None:
        if self.start is None:
            self.start = t

    def stats_for(self, obj: str, now: float) -> ObjectPrefetchStats | None:
        """Current estimates for one document; None while inestimable."""
        start = self.start
        if start is None or now <= start:
            return None
        mods = self.mod_counts.get(obj, 0)
        if mods == 0:
            return None
        elapsed = now - start
        total = self.engine.cacheable_requests
        return ObjectPrefetchStats(
            object_id=obj,
            p_i=self.engine.req_counts.get(obj, 0) / total if total else 0.0,
            l_i=elapsed / mods,
            a_rate=total / elapsed,
            mod_count=mods,
            install_time=start,
            last_modified=self.last_mod[obj],
        )

    def on_modification(self, obj: str, size: int, now: float, resident: bool) -> bool:
        self.mod_counts[obj] = self.mod_counts.get(obj, 0) + 1
        self.last_mod[obj] = now
        self.cur_size[obj] = size
        if not resident:
            return False
        st = self.stats_for(obj, now)
        if st is None:
            return False
        if self.scheme == "lifetime":
            return lifetime_threshold(st, now)
        return _SCORERS[self.scheme](st) > self.threshold

    def tick_refetches(self, now: float) -> list[tuple[str, int]]:
        if self.scheme != "lifetime":
            return []
        out = []
        for obj, entry in self.engine.resident.items():
            if entry[1]:  # still fresh
                continue
            st = self.stats_for(obj, now)
            if st is not None and lifetime_threshold(st, now):
                out.append((obj, self.cur_size[obj]))
        return out


def simulate_with_prefetch(
    events,
    config: CacheConfig,
    scheme: str | None = None,
    threshold: float | None = None,
) -> SimReport:
    """simcore.simulate with a prefetch layer built from the arguments,
    falling back to `config.prefetch` for unspecified ones."""
    pf = config.prefetch
    if scheme is None:
        if pf is None:
            raise ValueError("no prefetch scheme given in arguments or config")
        scheme = pf.scheme
    if threshold is None:
        threshold = pf.threshold if pf is not None else -math.inf
    return simulate(events, config, PrefetchLayer(scheme, threshold))
