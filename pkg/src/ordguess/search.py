"""Search states, the packing ladder, the bounded frontier, and node expansion.

The frontier keeps one max-heap per depth. Below its node capacity it pops the
globally best state (uniform-cost behavior); at or above capacity it pops from
the deepest non-empty heap (depth-first on the longest prefixes), which is what
bounds memory at the price of strict ordering.

Low-probability children are not pushed individually: symbols whose conditional
probability falls below the ladder's top threshold are represented by a single
packed node that stores only the parent's state plus a band index. Expanding a
band-k packed node re-infers the parent and materializes exactly the symbols in
the half-open conditional-probability band [P_k, P_{k-1}); whatever lies below
is packed one band further. The bands partition the probability axis, so every
string is still generated exactly once.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import vocab
from .errors import ConfigError, EmptyFrontierError
from .models import ProbabilityModel

NEG_INF = float("-inf")

# Candidate next symbols, in id order: the 95 printables then END.
# START/BLANK/UNK are never expanded into children: a candidate containing
# them is not a password, and skipping them keeps search-vs-oracle
# equivalence independent of whether a model masks UNK.
CHILD_IDS = np.array(list(range(95)) + [vocab.END], dtype=np.int64)
_END_ONLY = np.array([vocab.END], dtype=np.int64)


@dataclass(frozen=True, slots=True)
class SearchState:
    """One frontier node.

    input:    START-led token ids; terminal states carry a trailing END.
    deep:     number of non-START tokens in input (search depth).
    log_prob: path log-probability of the prefix.
    band:     0 for an ordinary node; k >= 1 marks a packed node whose
              unexpanded children have conditional probability < P_{k-1}.
    text:     decoded characters (no markers), kept for tie-breaking and
              emission without a decode pass.
    """

    input: tuple[int, ...]
    deep: int
    log_prob: float
    band: int
    text: str

    @property
    def terminal(self) -> bool:
        return self.input[-1] == vocab.END

    def sort_key(self):
        # Max-first under heapq's min ordering. Probability dominates, then
        # ordinary before packed (lower band = larger threshold first), then
        # the character string ascending with completed candidates ahead of
        # same-text internal nodes. Total and deterministic.
        return (-self.log_prob, self.band, self.text, 0 if self.terminal else 1)


ROOT = SearchState(input=(vocab.START,), deep=0, log_prob=0.0, band=0, text="")


def compare_states(a: SearchState, b: SearchState) -> int:
    """-1, 0 or +1; positive means a outranks b (pops first)."""
    ka, kb = a.sort_key(), b.sort_key()
    if ka < kb:
        return 1
    if ka > kb:
        return -1
    return 0


class PackingLadder:
    """Strictly descending conditional-probability cutoffs P_0 > ... > P_s > 0."""

    def __init__(self, thresholds: Sequence[float]):
        t = [float(x) for x in thresholds]
        if not t:
            raise ConfigError("packing ladder must contain at least one threshold")
        if any(not 0.0 < x < 1.0 for x in t):
            raise ConfigError(f"ladder thresholds must lie in (0, 1): {t}")
        if any(t[i] <= t[i + 1] for i in range(len(t) - 1)):
            raise ConfigError(f"ladder thresholds must be strictly descending: {t}")
        self.thresholds = tuple(t)
        self.log_thresholds = tuple(math.log(x) for x in t)

    @classmethod
    def geometric(cls, top: float = 0.05, ratio: float = 0.1, steps: int = 4):
        return cls([top * ratio**k for k in range(steps + 1)])

    def __len__(self):
        return len(self.thresholds)

    @property
    def max_band(self) -> int:
        # band s+1 materializes everything below P_s with no further packing
        return len(self.thresholds)

    def band_bounds(self, band: int) -> tuple[float, float]:
        """Log-space [floor, ceiling) of the conditional band a node materializes."""
        logs = self.log_thresholds
        if band == 0:
            return logs[0], math.inf
        if band > self.max_band:
            raise ConfigError(f"band {band} beyond ladder of {len(logs)} thresholds")
        if band == self.max_band:
            return NEG_INF, logs[band - 1]
        return logs[band], logs[band - 1]


def expand(
    state: SearchState,
    model: ProbabilityModel,
    ladder: Optional[PackingLadder],
    log_p_min: float,
    min_len: int,
    max_len: int,
) -> list[SearchState]:
    """One model inference; returns the surviving children of `state`.

    Completed candidates come back as terminal states (END-suffixed) and are
    emitted by the caller when popped, never here. With ladder=None every
    symbol materializes immediately (packing disabled).
    """
    dist = model.next_log_probs(state.input)
    syms = CHILD_IDS if state.deep < max_len else _END_ONLY
    logp = dist[syms]

    if ladder is None:
        lo, hi = NEG_INF, math.inf
    else:
        lo, hi = ladder.band_bounds(state.band)

    # zero-probability symbols are outside the model's support and never
    # become children, even when log_p_min itself is -inf (unpruned UCS)
    paths = state.log_prob + logp
    in_band = (logp >= lo) & (logp < hi)
    keep = in_band & (paths >= log_p_min) & (paths > NEG_INF)

    children: list[SearchState] = []
    for idx in np.nonzero(keep)[0]:
        sym = int(syms[idx])
        lp = float(paths[idx])
        if sym == vocab.END:
            if state.deep >= min_len:
                children.append(SearchState(
                    input=state.input + (sym,),
                    deep=state.deep + 1,
                    log_prob=lp,
                    band=0,
                    text=state.text,
                ))
        else:
            children.append(SearchState(
                input=state.input + (sym,),
                deep=state.deep + 1,
                log_prob=lp,
                band=0,
                text=state.text + chr(sym + 0x20),
            ))

    if ladder is not None and state.band < ladder.max_band:
        # pack the below-floor remainder, but only if some symbol in it can
        # still clear p_min when eventually materialized
        viable = (logp < lo) & (paths >= log_p_min) & (paths > NEG_INF)
        if bool(viable.any()):
            children.append(SearchState(
                input=state.input,
                deep=state.deep,
                log_prob=state.log_prob,
                band=state.band + 1,
                text=state.text,
            ))
    return children


def expand_packed(
    state: SearchState,
    model: ProbabilityModel,
    ladder: PackingLadder,
    log_p_min: float,
    min_len: int,
    max_len: int,
) -> list[SearchState]:
    """Re-infer a packed node's stored parent and materialize its band."""
    if state.band < 1:
        raise ValueError("expand_packed requires a packed node (band >= 1)")
    return expand(state, model, ladder, log_p_min, min_len, max_len)


class Frontier:
    """Capacity-bounded frontier of per-depth max-heaps.

    pop() is globally best-first while size < capacity and deepest-heap-first
    once size >= capacity. capacity=None never switches modes. The peak size
    is instrumented; one expansion batch may overshoot capacity before pops
    catch up, bounded by capacity + max_len * 95.
    """

    def __init__(self, capacity: Optional[int], max_depth: int,
                 key: Callable[[SearchState], tuple] = SearchState.sort_key):
        if capacity is not None and capacity < 1:
            raise ConfigError(f"frontier capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._key = key
        # terminal states sit one past max_len (END token depth)
        self._heaps: list[list] = [[] for _ in range(max_depth + 2)]
        self._size = 0
        self.peak = 0

    def __len__(self):
        return self._size

    def push(self, state: SearchState):
        heapq.heappush(self._heaps[state.deep], (self._key(state), state))
        self._size += 1
        if self._size > self.peak:
            self.peak = self._size

    def pop(self) -> SearchState:
        if self._size == 0:
            raise EmptyFrontierError("pop from empty frontier")
        if self.capacity is not None and self._size >= self.capacity:
            for heap in reversed(self._heaps):
                if heap:
                    self._size -= 1
                    return heapq.heappop(heap)[1]
        best = None
        for heap in self._heaps:
            if heap and (best is None or heap[0][0] < best[0][0]):
                best = heap
        self._size -= 1
        return heapq.heappop(best)[1]

    def pop_many(self, k: int) -> list[SearchState]:
        return [self.pop() for _ in range(min(k, self._size))]
