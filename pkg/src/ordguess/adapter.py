"""Client for external probability models served over a child process's stdio.

Line-oriented JSON, natural-log probabilities, -1e30 or lower meaning -inf:

    -> {"type": "hello", "vocab_size": 99, "protocol": 1}
    <- {"type": "ready", "max_batch": B}
    -> {"type": "infer", "id": K, "prefixes": [[int, ...], ...]}
    <- {"type": "dist", "id": K, "log_probs": [[99 floats], ...]}
    -> {"type": "bye"}

Token ids follow the vocab module's published index order. The client
validates every response (shape, id, normalization within 1e-4) and
spot-checks determinism by periodically re-querying a recent prefix; a
drift above 1e-6 in any coordinate is an error, not a tolerance case.
"""

from __future__ import annotations

import json
import queue
import shlex
import subprocess
import threading
from typing import Optional, Sequence

import numpy as np

from . import vocab
from .errors import (
    AdapterTimeoutError,
    DeterminismError,
    NormalizationError,
    ProtocolError,
)
from .models import ProbabilityModel, check_prefix

NEG_INF = float("-inf")
_INF_WIRE = -1e30


def _max_drift(d1: np.ndarray, d2: np.ndarray) -> float:
    """Largest coordinate difference; -inf agreeing with -inf counts as 0."""
    both_inf = np.isneginf(d1) & np.isneginf(d2)
    with np.errstate(invalid="ignore"):
        diff = np.abs(d1 - d2)
    diff[both_inf] = 0.0
    if not np.all(np.isfinite(diff)):
        return float("inf")
    return float(diff.max()) if diff.size else 0.0


class ExternalModel(ProbabilityModel):
    """Spawns the adapter command and speaks the wire protocol over its stdio."""

    def __init__(self, command, timeout: float = 60.0, spot_check_interval: int = 64):
        if isinstance(command, str):
            command = shlex.split(command)
        self.command = list(command)
        self.timeout = timeout
        self.spot_check_interval = spot_check_interval
        self._lock = threading.RLock()
        self._next_id = 0
        self._batches_seen = 0
        self._remembered: Optional[tuple[tuple, np.ndarray]] = None
        self._closed = False

        self._proc = subprocess.Popen(
            self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE)
        self._lines: queue.Queue = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

        self._send({"type": "hello", "vocab_size": vocab.VOCAB_SIZE, "protocol": 1})
        ready = self._recv()
        if ready.get("type") != "ready":
            raise ProtocolError(f"expected ready, got {ready!r}")
        self.max_batch = int(ready.get("max_batch", 1))
        if self.max_batch < 1:
            raise ProtocolError(f"adapter advertised max_batch {self.max_batch}")

    def _pump(self):
        for raw in self._proc.stdout:
            self._lines.put(raw)
        self._lines.put(None)

    def _send(self, obj):
        try:
            self._proc.stdin.write((json.dumps(obj) + "\n").encode("ascii"))
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ProtocolError(f"adapter process is gone: {exc}") from exc

    def _recv(self) -> dict:
        try:
            raw = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            raise AdapterTimeoutError(
                f"no adapter response within {self.timeout}s") from None
        if raw is None:
            raise ProtocolError("adapter closed its stdout")
        try:
            msg = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"adapter sent non-JSON line: {raw[:120]!r}") from exc
        if not isinstance(msg, dict):
            raise ProtocolError(f"adapter sent a non-object message: {msg!r}")
        return msg

    def _roundtrip(self, prefixes: Sequence[Sequence[int]]) -> list[np.ndarray]:
        req_id = self._next_id
        self._next_id += 1
        self._send({"type": "infer", "id": req_id,
                    "prefixes": [list(map(int, p)) for p in prefixes]})
        msg = self._recv()
        if msg.get("type") != "dist":
            raise ProtocolError(f"expected dist, got {msg.get('type')!r}")
        if msg.get("id") != req_id:
            raise ProtocolError(f"response id {msg.get('id')} != request id {req_id}")
        rows = msg.get("log_probs")
        if not isinstance(rows, list) or len(rows) != len(prefixes):
            raise ProtocolError(
                f"expected {len(prefixes)} distributions, got "
                f"{len(rows) if isinstance(rows, list) else type(rows).__name__}")
        return [self._decode_row(row) for row in rows]

    @staticmethod
    def _decode_row(row) -> np.ndarray:
        if not isinstance(row, list) or len(row) != vocab.VOCAB_SIZE:
            raise ProtocolError(f"distribution must hold {vocab.VOCAB_SIZE} floats")
        arr = np.asarray(row, dtype=np.float64)
        arr[arr <= _INF_WIRE] = NEG_INF
        total = float(np.exp(arr).sum())
        if not abs(total - 1.0) <= 1e-4:
            raise NormalizationError(f"distribution exp-sum {total} outside 1 +/- 1e-4")
        arr.setflags(write=False)
        return arr

    def _spot_check(self):
        prefix, expected = self._remembered
        got = self._roundtrip([prefix])[0]
        drift = _max_drift(expected, got)
        if drift > 1e-6:
            raise DeterminismError(
                "adapter returned a different distribution for a repeated prefix "
                f"(max drift {drift})")

    def next_log_probs(self, prefix: Sequence[int]) -> np.ndarray:
        return self.next_log_probs_batch([prefix])[0]

    def next_log_probs_batch(self, prefixes: Sequence[Sequence[int]]) -> list[np.ndarray]:
        for p in prefixes:
            check_prefix(p)
        out: list[np.ndarray] = []
        with self._lock:
            for start in range(0, len(prefixes), self.max_batch):
                chunk = prefixes[start:start + self.max_batch]
                dists = self._roundtrip(chunk)
                self._batches_seen += 1
                if self._remembered is None:
                    self._remembered = (tuple(chunk[0]), dists[0])
                elif self._batches_seen % self.spot_check_interval == 0:
                    self._spot_check()
                    self._remembered = (tuple(chunk[0]), dists[0])
                out.extend(dists)
        return out

    def close(self):
        with self._lock:
            if self._closed:
                return
            self._closed = True
            try:
                self._send({"type": "bye"})
            except ProtocolError:
                pass
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def adapter_query(client: ExternalModel, prefixes: Sequence[Sequence[int]]) -> list[np.ndarray]:
    """Batch query preserving request order; one distribution per prefix."""
    return client.next_log_probs_batch(prefixes)


def conformance_report(command, sample_prefixes: Optional[list] = None) -> dict:
    """Protocol conformance checks any adapter must pass.

    Returns {check_name: True/error message}. Checks: handshake, batch
    alignment, normalization (inside _decode_row), determinism on repeated
    queries, and START/BLANK masking.
    """
    if sample_prefixes is None:
        a = vocab.VOCAB.encode_char("a")
        b = vocab.VOCAB.encode_char("b")
        sample_prefixes = [(vocab.START,), (vocab.START, a), (vocab.START, a, b)]
    report: dict = {}
    with ExternalModel(command, spot_check_interval=1) as client:
        report["handshake"] = client.max_batch >= 1
        try:
            dists = adapter_query(client, sample_prefixes)
            report["batch_alignment"] = len(dists) == len(sample_prefixes)
            report["normalization"] = True
        except ProtocolError as exc:
            report["batch_alignment"] = str(exc)
            return report
        masked = all(d[vocab.START] == NEG_INF and d[vocab.BLANK] == NEG_INF
                     for d in dists)
        report["masking"] = masked if masked else "START/BLANK not masked to -inf"
        try:
            again = adapter_query(client, sample_prefixes)
            drift = max(_max_drift(d1, d2) for d1, d2 in zip(dists, again))
            report["determinism"] = True if drift <= 1e-6 else f"drift {drift}"
        except DeterminismError as exc:
            report["determinism"] = str(exc)
    return report
