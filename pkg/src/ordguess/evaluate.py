"""Corpus preparation, quality metrics, and the comparison protocols.

Cover rate is the share of unique test-only passwords (Test - Train) that the
generated set hits; effect rate is the share of unique generated passwords
that are such hits. Both are percentages over *unique* sets even though the
corpus split itself is multiset-level.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from scipy.stats import kendalltau

from .engine import (
    CandidateRecord,
    GenerationConfig,
    OrderedSearch,
    random_sample_generate,
    ucs_generate,
)
from .errors import EmptyCorpusError, MetricError, SetMismatchError, TargetUnreachableError
from .models import InferenceCounter, ProbabilityModel

MIN_LEN = 6
MAX_LEN = 32


@dataclass
class CorpusStats:
    total: int = 0
    removed_charset: int = 0
    removed_length: int = 0
    unique: int = 0

    @property
    def repetition_rate(self) -> float:
        return 1.0 - self.unique / self.total if self.total else 0.0

    def as_dict(self) -> dict:
        return {
            "total": self.total,
            "removed_charset": self.removed_charset,
            "removed_length": self.removed_length,
            "unique": self.unique,
            "repetition_rate": self.repetition_rate,
        }


@dataclass
class EvalReport:
    new_unique: int
    match_number: int
    hit_number: int
    cover_rate: float
    effect_rate: float

    def as_dict(self) -> dict:
        return {
            "new_unique": self.new_unique,
            "match_number": self.match_number,
            "hit_number": self.hit_number,
            "cover_rate": self.cover_rate,
            "effect_rate": self.effect_rate,
        }


def is_clean(pw: str) -> bool:
    return (MIN_LEN <= len(pw) <= MAX_LEN
            and all(0x20 <= ord(c) <= 0x7E for c in pw))


def clean_corpus(lines: Iterable[str]) -> tuple[list[str], CorpusStats]:
    """Keeps lines that are printable ASCII with length in [6, 32]."""
    kept: list[str] = []
    stats = CorpusStats()
    for pw in lines:
        if not all(0x20 <= ord(c) <= 0x7E for c in pw):
            stats.removed_charset += 1
        elif not MIN_LEN <= len(pw) <= MAX_LEN:
            stats.removed_length += 1
        else:
            kept.append(pw)
    stats.total = len(kept)
    stats.unique = len(set(kept))
    return kept, stats


def split_corpus(passwords: Sequence[str], ratio: float, seed: int
                 ) -> tuple[list[str], list[str]]:
    """Seeded uniform random partition of the multiset, duplicates preserved."""
    if not passwords:
        raise EmptyCorpusError("cannot split an empty corpus")
    if not 0.0 < ratio < 1.0:
        raise MetricError(f"split ratio must be in (0, 1), got {ratio}")
    order = list(passwords)
    random.Random(seed).shuffle(order)
    n_train = round(ratio * len(order))
    return order[:n_train], order[n_train:]


def cover_rate(generated_unique: set, test: set, train: set) -> float:
    test_only = test - train
    if not test_only:
        raise MetricError("Test - Train is empty; cover rate undefined")
    return 100.0 * len(generated_unique & test_only) / len(test_only)


def effect_rate(generated_unique: set, test: set, train: set) -> float:
    if not generated_unique:
        raise MetricError("no generated passwords; effect rate undefined")
    test_only = test - train
    return 100.0 * len(generated_unique & test_only) / len(generated_unique)


def evaluate_generated(generated_unique: set, test: set, train: set) -> EvalReport:
    test_only = test - train
    hits = generated_unique & test_only
    return EvalReport(
        new_unique=len(generated_unique),
        match_number=len(generated_unique & test),
        hit_number=len(hits),
        cover_rate=cover_rate(generated_unique, test, train),
        effect_rate=effect_rate(generated_unique, test, train),
    )


def ordering_quality(emitted: Sequence[CandidateRecord],
                     oracle: Sequence[tuple[str, float]]) -> dict:
    """Kendall tau of the emission order against the oracle order, plus the
    fraction of adjacent emitted pairs whose log_prob increases.

    Raises SetMismatchError first when the sets differ: that is a
    completeness failure, a more serious bug than bad ordering.
    """
    emitted_set = {r.password for r in emitted}
    oracle_set = {pw for pw, _ in oracle}
    if emitted_set != oracle_set or len(emitted) != len(oracle):
        missing = sorted(oracle_set - emitted_set)[:5]
        extra = sorted(emitted_set - oracle_set)[:5]
        raise SetMismatchError(
            f"emitted set differs from oracle set: {len(emitted_set)} vs "
            f"{len(oracle_set)} (missing e.g. {missing}, extra e.g. {extra})")
    if len(emitted) <= 1:
        return {"kendall_tau": 1.0, "inversion_fraction": 0.0}
    rank = {pw: i for i, (pw, _) in enumerate(oracle)}
    emitted_ranks = [rank[r.password] for r in emitted]
    tau = float(kendalltau(range(len(emitted)), emitted_ranks).statistic)
    lps = [r.log_prob for r in emitted]
    inversions = sum(1 for i in range(len(lps) - 1) if lps[i + 1] > lps[i])
    return {"kendall_tau": tau, "inversion_fraction": inversions / (len(lps) - 1)}


@dataclass
class CoverRow:
    target: float
    method: str
    generated: int
    unique: int
    inferences: int

    def as_dict(self) -> dict:
        return {"target": self.target, "method": self.method,
                "generated": self.generated, "unique": self.unique,
                "inferences": self.inferences}


def _track_targets(stream: Iterator[str], counter: InferenceCounter,
                   targets: Sequence[float], test_only: set, method: str,
                   ) -> list[CoverRow]:
    rows: list[CoverRow] = []
    pending = sorted(targets)
    seen: set = set()
    hits = 0
    generated = 0
    denom = len(test_only)
    for pw in stream:
        generated += 1
        if pw not in seen:
            seen.add(pw)
            if pw in test_only:
                hits += 1
        cover = 100.0 * hits / denom
        while pending and cover >= pending[0]:
            rows.append(CoverRow(pending.pop(0), method, generated, len(seen),
                                 counter.count))
        if not pending:
            break
    if pending:
        raise TargetUnreachableError(
            f"{method} never reached cover target {pending[0]}% "
            f"(max achieved {100.0 * hits / denom:.4f}%)",
            max_cover=100.0 * hits / denom)
    return rows


def compare_at_cover(model: ProbabilityModel, targets: Sequence[float],
                     test: set, train: set, config: GenerationConfig,
                     rs_seed: int = 0, rs_max_count: int = 2_000_000
                     ) -> list[CoverRow]:
    """Table rows for the ordered search vs random sampling at cover targets."""
    test_only = test - train
    if not test_only:
        raise MetricError("Test - Train is empty")
    rows: list[CoverRow] = []

    counter = InferenceCounter()
    search = OrderedSearch(model, config, counter)
    rows += _track_targets((r.password for r in search.run()), counter,
                           targets, test_only, "ordered")

    counter = InferenceCounter()
    sampler = random_sample_generate(model, rs_max_count, rs_seed,
                                     max_len=config.max_len, counter=counter)
    rows += _track_targets((pw for pw, _ in sampler), counter,
                           targets, test_only, "random")
    rows.sort(key=lambda r: (r.target, r.method))
    return rows


@dataclass
class CapacityRow:
    capacity: int
    method: str
    passwords_found: int

    def as_dict(self) -> dict:
        return {"capacity": self.capacity, "method": self.method,
                "passwords_found": self.passwords_found}


def frontier_capacity_sweep(model: ProbabilityModel, capacities: Sequence[int],
                            p_min: float, *, min_len: int = MIN_LEN,
                            max_len: int = MAX_LEN,
                            ladder=None) -> list[CapacityRow]:
    """Passwords found by each method by the time its frontier first holds N
    nodes: unpruned UCS, UCS with p_min pruning, and the phase-1 ordered
    search (packing on, same pruning)."""
    rows: list[CapacityRow] = []
    for cap in capacities:
        n_ucs = sum(1 for _ in ucs_generate(model, None, cap,
                                            min_len=min_len, max_len=max_len))
        rows.append(CapacityRow(cap, "ucs", n_ucs))
        n_pruned = sum(1 for _ in ucs_generate(model, p_min, cap,
                                               min_len=min_len, max_len=max_len))
        rows.append(CapacityRow(cap, "ucs+prune", n_pruned))
        cfg = GenerationConfig(p_min=p_min, capacity=cap, min_len=min_len,
                               max_len=max_len, ladder=ladder,
                               stop_at_capacity=True)
        search = OrderedSearch(model, cfg)
        n_ordered = sum(1 for _ in search.run())
        rows.append(CapacityRow(cap, "ordered", n_ordered))
    return rows


def format_table(rows: Sequence, columns: Sequence[str]) -> str:
    """Aligned-column text table from row objects with as_dict()."""
    data = [[str(r.as_dict()[c]) for c in columns] for r in rows]
    widths = [max(len(c), *(len(d[i]) for d in data)) if data else len(c)
              for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for d in data:
        lines.append("  ".join(v.ljust(w) for v, w in zip(d, widths)))
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# synthetic corpus: seeded, Zipf-weighted mix of common password shapes, for
# CI-scale fixtures (real breach corpora are not bundled)

_WORDS = [
    "password", "dragon", "monkey", "shadow", "master", "killer", "summer",
    "soccer", "flower", "purple", "silver", "orange", "cheese", "banana",
    "jordan", "harley", "ranger", "tigger", "cookie", "pepper", "daniel",
    "ashley", "jessica", "michael", "charlie", "andrew", "thomas", "robert",
    "hunter", "buster", "ginger", "prince", "sunshine", "love", "angel",
    "star", "baby", "blue", "rock", "king", "iloveyou", "princess",
    "football", "welcome", "freedom", "batman", "superman", "qwerty",
]
_SUFFIXES = ["", "1", "12", "123", "1234", "12345", "2008", "2009", "69",
             "007", "21", "22", "11", "99", "00", "01", "13", "7", "8"]
_SYMBOLS = ["", "!", ".", "_", "@"]
_DIGITS = ["123456", "1234567", "12345678", "123456789", "111111", "000000",
           "654321", "123123", "666666", "112233", "121212", "777777"]


def _zipf_pick(rng: random.Random, items: Sequence[str], a: float = 1.2) -> str:
    weights = [1.0 / (i + 1) ** a for i in range(len(items))]
    return rng.choices(items, weights=weights, k=1)[0]


def synth_corpus(count: int, seed: int = 0) -> list[str]:
    """Deterministic line-per-password corpus: a heavily repeated head plus a
    long combinatorial tail (word x digits), so an 8:2 split leaves plenty of
    moderately probable passwords in Test - Train."""
    rng = random.Random(seed)
    out: list[str] = []
    while len(out) < count:
        shape = rng.random()
        if shape < 0.25:
            pw = _zipf_pick(rng, _WORDS) + _zipf_pick(rng, _SUFFIXES)
        elif shape < 0.37:
            pw = _zipf_pick(rng, _DIGITS)
        elif shape < 0.60:
            pw = _zipf_pick(rng, _WORDS) + f"{rng.randrange(100):02d}"
        elif shape < 0.75:
            pw = _zipf_pick(rng, _WORDS) + str(rng.randrange(1950, 2011))
        elif shape < 0.85:
            pw = _zipf_pick(rng, _WORDS) + _zipf_pick(rng, _SYMBOLS) \
                + _zipf_pick(rng, _SUFFIXES)
        elif shape < 0.95:
            pw = rng.choice(_WORDS) + rng.choice(_WORDS)
        else:
            pw = _zipf_pick(rng, _DIGITS) + f"{rng.randrange(100):02d}"
        if MIN_LEN <= len(pw) <= MAX_LEN:
            out.append(pw)
    return out
