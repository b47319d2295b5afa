"""Probability models: the pluggable next-symbol oracle and the n-gram default.

Every model maps a START-led token prefix to a length-99 array of natural-log
probabilities over the vocabulary. Contracts the search depends on:

  * normalized: exp-sum = 1 within 1e-6,
  * START and BLANK carry probability 0 (-inf),
  * deterministic: the same prefix always yields bit-identical arrays
    (packed-node expansion re-infers parents and would silently corrupt
    the search otherwise).
"""

from __future__ import annotations

import math
import threading
from collections import defaultdict
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from . import vocab
from .errors import (
    CorruptModelError,
    EmptyCorpusError,
    InvalidCorpusError,
    InvalidOrderError,
    MalformedPrefixError,
    ModelVersionError,
)

NEG_INF = float("-inf")

_MAGIC = "ordguess-ngram"
_VERSION = 1

# ids a model may predict: the 95 printables followed by END
EFFECTIVE_IDS = tuple(range(95)) + (vocab.END,)


class ProbabilityModel:
    """Abstract conditional next-symbol distribution."""

    def next_log_probs(self, prefix: Sequence[int]) -> np.ndarray:
        raise NotImplementedError

    def next_log_probs_batch(self, prefixes: Sequence[Sequence[int]]) -> list[np.ndarray]:
        return [self.next_log_probs(p) for p in prefixes]

    def close(self):
        pass


class InferenceCounter:
    """Monotone count of model evaluations; one tick per prefix queried."""

    def __init__(self):
        self._count = 0
        self._lock = threading.Lock()

    def add(self, n: int = 1):
        with self._lock:
            self._count += n

    @property
    def count(self) -> int:
        return self._count


class CountingModel(ProbabilityModel):
    """Wraps a model so a run can meter its own queries without touching others'."""

    def __init__(self, inner: ProbabilityModel, counter: InferenceCounter):
        self.inner = inner
        self.counter = counter

    def next_log_probs(self, prefix):
        self.counter.add(1)
        return self.inner.next_log_probs(prefix)

    def next_log_probs_batch(self, prefixes):
        self.counter.add(len(prefixes))
        return self.inner.next_log_probs_batch(prefixes)

    def close(self):
        self.inner.close()


def check_prefix(prefix: Sequence[int]):
    """A well-formed prefix is START followed by printable ids only."""
    if len(prefix) == 0 or prefix[0] != vocab.START:
        raise MalformedPrefixError("prefix must begin with START")
    for t in prefix[1:]:
        if not 0 <= t < 95:
            raise MalformedPrefixError(f"prefix token {t} is not a printable-character id")


class NGramModel(ProbabilityModel):
    """Additively smoothed character n-gram with backoff to shorter contexts.

    counts maps a context tuple (up to order-1 ids, START included) to a
    per-next-id count dict; every suffix of each training context is counted
    too, down to the empty tuple, so backoff always terminates. Conditionals
    are smoothed over the 96 effective symbols:

        P(s | ctx) = (count(ctx, s) + delta) / (total(ctx) + 96 * delta)

    and fall back to the longest *seen* suffix context when the full context
    never occurred in training.
    """

    def __init__(self, order: int, smoothing: float):
        if not 2 <= order <= 6:
            raise InvalidOrderError(f"order must be in [2, 6], got {order}")
        if smoothing < 0:
            raise InvalidOrderError(f"smoothing must be >= 0, got {smoothing}")
        self.order = order
        self.smoothing = float(smoothing)
        self.counts: dict[tuple, dict[int, int]] = defaultdict(lambda: defaultdict(int))
        self.context_totals: dict[tuple, int] = defaultdict(int)
        # cache is keyed on the resolved context; bounded so long runs stay flat
        self._dist = lru_cache(maxsize=1 << 16)(self._dist_uncached)

    def _add(self, ctx: tuple, nxt: int):
        # count the transition under the full context and every shorter suffix
        for start in range(len(ctx) + 1):
            sub = ctx[start:]
            self.counts[sub][nxt] += 1
            self.context_totals[sub] += 1

    def fit(self, corpus: Iterable[str]):
        n_seen = 0
        for pw in corpus:
            n_seen += 1
            ids = []
            for ch in pw:
                t = vocab.VOCAB.encode_char(ch)
                if t == vocab.UNK:
                    raise InvalidCorpusError(
                        f"corpus password contains non-printable byte: {pw!r}"
                    )
                ids.append(t)
            tokens = [vocab.START] + ids + [vocab.END]
            for i in range(1, len(tokens)):
                ctx = tuple(tokens[max(0, i - (self.order - 1)):i])
                self._add(ctx, tokens[i])
        if n_seen == 0:
            raise EmptyCorpusError("training corpus is empty")
        self._dist.cache_clear()
        return self

    def _dist_uncached(self, ctx: tuple) -> np.ndarray:
        total = self.context_totals.get(ctx, 0)
        counts = self.counts.get(ctx, {})
        delta = self.smoothing
        out = np.full(vocab.VOCAB_SIZE, NEG_INF)
        denom = total + vocab.EFFECTIVE_SIZE * delta
        for sym in EFFECTIVE_IDS:
            num = counts.get(sym, 0) + delta
            if num > 0:
                out[sym] = math.log(num) - math.log(denom)
        out.setflags(write=False)
        return out

    def _resolve_context(self, prefix: Sequence[int]) -> tuple:
        ctx = tuple(prefix[max(0, len(prefix) - (self.order - 1)):])
        while ctx and ctx not in self.context_totals:
            ctx = ctx[1:]
        return ctx

    def next_log_probs(self, prefix: Sequence[int]) -> np.ndarray:
        check_prefix(prefix)
        return self._dist(self._resolve_context(prefix))


def train_ngram(corpus: Sequence[str], order: int, smoothing: float) -> NGramModel:
    return NGramModel(order, smoothing).fit(corpus)


def sequence_log_prob(model: ProbabilityModel, password: str) -> float:
    """Path log-probability of a full password, END transition included."""
    if len(password) == 0:
        raise MalformedPrefixError("password must be non-empty")
    ids = []
    for ch in password:
        t = vocab.VOCAB.encode_char(ch)
        if t == vocab.UNK:
            raise MalformedPrefixError(f"password contains non-printable byte: {password!r}")
        ids.append(t)
    prefix = [vocab.START]
    lp = 0.0
    for t in ids:
        lp += float(model.next_log_probs(tuple(prefix))[t])
        prefix.append(t)
    lp += float(model.next_log_probs(tuple(prefix))[vocab.END])
    return lp


def save_model(model: NGramModel, path):
    """Versioned, sorted, line-oriented text; identical models save byte-identically."""
    records = []
    for ctx in model.counts:
        for nxt, cnt in model.counts[ctx].items():
            records.append((ctx, nxt, cnt))
    records.sort(key=lambda r: (len(r[0]), r[0], r[1]))
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{_MAGIC} {_VERSION}\n")
        fh.write(f"order {model.order}\n")
        fh.write(f"smoothing {model.smoothing!r}\n")
        fh.write(f"records {len(records)}\n")
        for ctx, nxt, cnt in records:
            fh.write(f"{' '.join(str(t) for t in ctx)},{nxt},{cnt}\n")


def load_model(path) -> NGramModel:
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 2 or header[0] != _MAGIC:
            raise ModelVersionError(f"{path}: not a {_MAGIC} file")
        if header[1] != str(_VERSION):
            raise ModelVersionError(f"{path}: unsupported format version {header[1]}")
        try:
            order = int(_header_field(fh, "order"))
            smoothing = float(_header_field(fh, "smoothing"))
            n_records = int(_header_field(fh, "records"))
        except (ValueError, CorruptModelError) as exc:
            raise CorruptModelError(f"{path}: bad header ({exc})") from exc
        model = NGramModel(order, smoothing)
        for i in range(n_records):
            line = fh.readline()
            if not line:
                raise CorruptModelError(f"{path}: truncated after {i} of {n_records} records")
            try:
                ctx_part, nxt, cnt = line.rstrip("\n").split(",")
                ctx = tuple(int(t) for t in ctx_part.split()) if ctx_part else ()
                model.counts[ctx][int(nxt)] += int(cnt)
                model.context_totals[ctx] += int(cnt)
            except ValueError as exc:
                raise CorruptModelError(f"{path}: bad record line {i + 1}: {line!r}") from exc
    return model


def _header_field(fh, name: str) -> str:
    parts = fh.readline().split()
    if len(parts) != 2 or parts[0] != name:
        raise CorruptModelError(f"expected '{name} <value>' header line")
    return parts[1]
