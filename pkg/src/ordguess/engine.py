"""Generation engines: the ordered bounded-frontier search and its baselines.

The ordered search runs in two phases. Phase 1 is a single search from the
root that fills the shared frontier until it holds at least `capacity` nodes.
Phase 2 hands that frontier to `subsearches` workers: each keeps a private
frontier of the same capacity, refills it with `fetch_k` nodes popped from the
shared one whenever it runs dry, and terminates once both are empty. Children
always go to the worker's own frontier, so the shared one only drains.

Candidates stream out in approximately descending path probability; with
packing off and capacity above the reachable set size the order is exact.
The emitted set is exactly the strings whose path probability (END included)
clears p_min within the length window, regardless of packing, capacity, or
worker count.
"""

from __future__ import annotations

import heapq
import math
import queue
import threading
import time
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from . import vocab
from .errors import ConfigError, StateSpaceError
from .models import CountingModel, InferenceCounter, ProbabilityModel
from .search import CHILD_IDS, NEG_INF, ROOT, Frontier, PackingLadder, SearchState, expand


@dataclass(frozen=True, slots=True)
class CandidateRecord:
    password: str
    log_prob: float
    seq: int


@dataclass
class GenerationConfig:
    p_min: float
    capacity: int = 100_000
    packing: bool = True
    ladder: Optional[PackingLadder] = None
    max_len: int = 32
    min_len: int = 6
    subsearches: int = 1
    fetch_k: Optional[int] = None  # defaults to min(64, capacity)
    # Rank packed nodes by parent log_prob + log(band threshold), an upper
    # bound on any child they hold. With the raw parent log_prob a packed
    # node ties with its own parent, pops immediately, and the whole chain
    # unpacks on the spot: the frontier then grows exactly as fast as pruned
    # UCS and packing saves nothing. The bound defers each band until the
    # search's probability level actually reaches it.
    upper_bound_priority: bool = True
    stop_at_capacity: bool = False

    def __post_init__(self):
        if not 0.0 < self.p_min <= 1.0:
            raise ConfigError(f"p_min must be in (0, 1], got {self.p_min}")
        if self.capacity < 1:
            raise ConfigError(f"capacity must be >= 1, got {self.capacity}")
        if self.max_len < 1:
            raise ConfigError(f"max_len must be >= 1, got {self.max_len}")
        if not 0 <= self.min_len <= self.max_len:
            raise ConfigError(
                f"min_len must be in [0, max_len], got {self.min_len}/{self.max_len}")
        if self.subsearches < 1:
            raise ConfigError(f"subsearches must be >= 1, got {self.subsearches}")
        if self.fetch_k is None:
            self.fetch_k = min(64, self.capacity)
        if not 1 <= self.fetch_k <= self.capacity:
            # an over-capacity fetch into an empty sub-frontier would break
            # the frontier peak bound
            raise ConfigError(
                f"fetch_k must be in [1, capacity], got {self.fetch_k}")
        if self.packing and self.ladder is None:
            self.ladder = PackingLadder.geometric()

    @property
    def effective_ladder(self) -> Optional[PackingLadder]:
        return self.ladder if self.packing else None


@dataclass
class RunSummary:
    emitted: int = 0
    inferences: int = 0
    ordinary_expansions: int = 0
    packed_expansions: int = 0
    peak_frontier: int = 0
    wall_time: float = 0.0

    def as_dict(self) -> dict:
        return {
            "emitted": self.emitted,
            "inferences": self.inferences,
            "ordinary_expansions": self.ordinary_expansions,
            "packed_expansions": self.packed_expansions,
            "peak_frontier": self.peak_frontier,
            "wall_time": self.wall_time,
        }


class _Sink:
    """Serialized emission point; assigns seq numbers in stream order."""

    def __init__(self, out: queue.SimpleQueue, start: int = 0):
        self._lock = threading.Lock()
        self._seq = start
        self._out = out

    def emit(self, state: SearchState):
        with self._lock:
            rec = CandidateRecord(state.text, state.log_prob, self._seq)
            self._seq += 1
            self._out.put(rec)

    @property
    def count(self):
        return self._seq


class OrderedSearch:
    """Two-phase bounded-frontier generation over any probability model."""

    def __init__(self, model: ProbabilityModel, config: GenerationConfig,
                 counter: Optional[InferenceCounter] = None):
        self.config = config
        self.counter = counter if counter is not None else InferenceCounter()
        self.model = CountingModel(model, self.counter)
        self.summary = RunSummary()
        self._log_p_min = math.log(config.p_min)
        self._key = self._make_key()
        self._exp_lock = threading.Lock()

    def _make_key(self):
        cfg = self.config
        if not cfg.upper_bound_priority or cfg.effective_ladder is None:
            return SearchState.sort_key
        logs = cfg.effective_ladder.log_thresholds

        def key(state: SearchState):
            lp = state.log_prob
            if state.band >= 1:
                lp += logs[state.band - 1]
            return (-lp, state.band, state.text, 0 if state.terminal else 1)

        return key

    def _expand(self, state: SearchState) -> list[SearchState]:
        cfg = self.config
        children = expand(state, self.model, cfg.effective_ladder,
                          self._log_p_min, cfg.min_len, cfg.max_len)
        with self._exp_lock:
            if state.band == 0:
                self.summary.ordinary_expansions += 1
            else:
                self.summary.packed_expansions += 1
        return children

    def run(self) -> Iterator[CandidateRecord]:
        """Generate the candidate stream; each call starts a fresh search."""
        cfg = self.config
        self.summary = RunSummary()
        t0 = time.perf_counter()
        seq = 0
        shared = Frontier(cfg.capacity, cfg.max_len, key=self._key)
        shared.push(ROOT)
        peaks = [shared]

        # phase 1: one search fills the shared frontier up to capacity
        while len(shared) > 0:
            state = shared.pop()
            if state.terminal:
                yield CandidateRecord(state.text, state.log_prob, seq)
                seq += 1
            else:
                for child in self._expand(state):
                    shared.push(child)
            if len(shared) >= cfg.capacity:
                break

        if len(shared) > 0 and not cfg.stop_at_capacity:
            if cfg.subsearches == 1:
                seq = yield from self._drain_single(shared, peaks, seq)
            else:
                yield from self._drain_workers(shared, peaks, seq)
                seq = self._sink_count

        self.summary.emitted = seq
        self.summary.inferences = self.counter.count
        self.summary.peak_frontier = max(f.peak for f in peaks)
        self.summary.wall_time = time.perf_counter() - t0

    def _drain_single(self, shared: Frontier, peaks: list, seq: int):
        # phase 2 with one worker, inline so single-threaded runs stay
        # byte-reproducible
        cfg = self.config
        local = Frontier(cfg.capacity, cfg.max_len, key=self._key)
        peaks.append(local)
        while True:
            if len(local) == 0:
                batch = shared.pop_many(cfg.fetch_k)
                if not batch:
                    break
                for s in batch:
                    local.push(s)
                continue
            state = local.pop()
            if state.terminal:
                yield CandidateRecord(state.text, state.log_prob, seq)
                seq += 1
            else:
                for child in self._expand(state):
                    local.push(child)
        return seq

    def _drain_workers(self, shared: Frontier, peaks: list, seq_base: int):
        cfg = self.config
        out: queue.SimpleQueue = queue.SimpleQueue()
        sink = _Sink(out, start=seq_base)
        shared_lock = threading.Lock()
        stop = threading.Event()
        done = object()

        def work():
            local = Frontier(cfg.capacity, cfg.max_len, key=self._key)
            try:
                while not stop.is_set():
                    if len(local) == 0:
                        with shared_lock:
                            batch = shared.pop_many(cfg.fetch_k)
                        if not batch:
                            break
                        for s in batch:
                            local.push(s)
                        continue
                    state = local.pop()
                    if state.terminal:
                        sink.emit(state)
                    else:
                        for child in self._expand(state):
                            local.push(child)
            finally:
                peaks.append(local)
                out.put(done)

        threads = [threading.Thread(target=work, name=f"subsearch-{i}")
                   for i in range(cfg.subsearches)]
        for t in threads:
            t.start()
        finished = 0
        try:
            while finished < len(threads):
                item = out.get()
                if item is done:
                    finished += 1
                else:
                    yield item
        finally:
            stop.set()
            for t in threads:
                t.join()
            self._sink_count = sink.count


def ucs_generate(model: ProbabilityModel, p_min: Optional[float], node_budget: int,
                 *, min_len: int = 6, max_len: int = 32,
                 counter: Optional[InferenceCounter] = None) -> Iterator[CandidateRecord]:
    """Classic uniform-cost search baseline: one priority queue, no packing.

    p_min=None runs the unpruned variant. Stops when the frontier first
    reaches node_budget nodes (or exhausts); emissions are strictly
    non-increasing in log_prob because completions are re-queued and
    emitted on pop.
    """
    if node_budget < 1:
        raise ConfigError(f"node_budget must be >= 1, got {node_budget}")
    if p_min is not None and not 0.0 < p_min <= 1.0:
        raise ConfigError(f"p_min must be in (0, 1], got {p_min}")
    if counter is not None:
        model = CountingModel(model, counter)
    log_p_min = math.log(p_min) if p_min is not None else NEG_INF

    heap: list = []
    heapq.heappush(heap, (ROOT.sort_key(), ROOT))
    seq = 0
    while heap:
        state = heapq.heappop(heap)[1]
        if state.terminal:
            yield CandidateRecord(state.text, state.log_prob, seq)
            seq += 1
        else:
            for child in expand(state, model, None, log_p_min, min_len, max_len):
                heapq.heappush(heap, (child.sort_key(), child))
        if len(heap) >= node_budget:
            break


def random_sample_generate(model: ProbabilityModel, count: int, rng_seed: int,
                           *, max_len: int = 32, min_len: Optional[int] = None,
                           counter: Optional[InferenceCounter] = None
                           ) -> Iterator[tuple[str, int]]:
    """Monte Carlo ancestral sampling baseline; yields (password, inferences).

    Each sample costs exactly len+1 model evaluations: one per drawn
    character, plus the final evaluation that produced END (forced when the
    length cap is hit, mirroring the search's END-only rule at max depth).
    Duplicates are expected. min_len, when set, drops short samples from the
    yielded stream but they still count toward `count` and the inference
    total.
    """
    if count < 1:
        raise ConfigError(f"count must be >= 1, got {count}")
    if counter is not None:
        model = CountingModel(model, counter)
    rng = np.random.default_rng(rng_seed)
    n_syms = len(CHILD_IDS)

    for _ in range(count):
        prefix = [vocab.START]
        text = []
        while True:
            dist = model.next_log_probs(tuple(prefix))
            if len(text) >= max_len:
                sym = vocab.END
            else:
                probs = np.exp(dist[CHILD_IDS])
                total = probs.sum()
                sym = int(CHILD_IDS[rng.choice(n_syms, p=probs / total)])
            if sym == vocab.END:
                break
            text.append(chr(sym + 0x20))
            prefix.append(sym)
        password = "".join(text)
        if min_len is None or len(password) >= min_len:
            yield password, len(password) + 1


def brute_force_enumerate(model: ProbabilityModel, p_min: float,
                          min_len: int = 6, max_len: int = 32,
                          *, visit_budget: int = 2_000_000) -> list[tuple[str, float]]:
    """Exhaustive oracle: every string in the length window with path
    probability >= p_min, sorted by (log_prob desc, string asc).

    Prunes prefixes already below p_min; aborts with StateSpaceError once
    visit_budget prefixes have been inspected. Depends only on the model
    interface, deliberately sharing nothing with the frontier search.
    """
    if not 0.0 < p_min <= 1.0:
        raise ConfigError(f"p_min must be in (0, 1], got {p_min}")
    if not 0 <= min_len <= max_len:
        raise ConfigError(f"bad length window [{min_len}, {max_len}]")
    log_p_min = math.log(p_min)
    results: list[tuple[str, float]] = []
    visits = 0

    def visit(prefix: tuple, text: str, lp: float):
        nonlocal visits
        visits += 1
        if visits > visit_budget:
            raise StateSpaceError(
                f"enumeration exceeded the visit budget of {visit_budget} prefixes")
        dist = model.next_log_probs(prefix)
        end_lp = lp + float(dist[vocab.END])
        if min_len <= len(text) and end_lp >= log_p_min and end_lp > NEG_INF:
            results.append((text, end_lp))
        if len(text) < max_len:
            for sym in range(95):
                child_lp = lp + float(dist[sym])
                if child_lp >= log_p_min and child_lp > NEG_INF:
                    visit(prefix + (sym,), text + chr(sym + 0x20), child_lp)

    visit((vocab.START,), "", 0.0)
    results.sort(key=lambda r: (-r[1], r[0]))
    return results
