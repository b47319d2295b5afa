"""Stdio JSON server speaking the engine adapter protocol.

    <- {"type": "hello", "vocab_size": 99, "protocol": 1}
    -> {"type": "ready", "max_batch": B}
    <- {"type": "infer", "id": K, "prefixes": [[int, ...], ...]}
    -> {"type": "dist", "id": K, "log_probs": [[99 floats], ...]}
    <- {"type": "bye"}

Each prefix is forwarded through the model individually: batched matmuls can
shift low-order bits with batch composition, and the protocol's determinism
contract (repeat queries identical within 1e-6) leaves no room for that.
Malformed requests get {"type": "error", ...} and the process stays alive.
"""

from __future__ import annotations

import argparse
import json
import sys

import torch

from .model import load_checkpoint
from .vocabulary import VOCAB_SIZE

WIRE_NEG_INF = -1e30


def _encode_row(log_probs: torch.Tensor) -> list[float]:
    row = log_probs.tolist()
    return [v if v > WIRE_NEG_INF and v == v else WIRE_NEG_INF for v in row]


def _check_prefix(prefix) -> str | None:
    if not isinstance(prefix, list) or not prefix:
        return "each prefix must be a non-empty list of token ids"
    if any(not isinstance(t, int) or not 0 <= t < VOCAB_SIZE for t in prefix):
        return "prefix token out of range"
    return None


def serve(model_path: str, max_batch: int = 64,
          stdin=None, stdout=None) -> None:
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    torch.set_num_threads(1)
    torch.manual_seed(0)
    model, _ = load_checkpoint(model_path)

    def reply(obj):
        stdout.write(json.dumps(obj) + "\n")
        stdout.flush()

    for line in stdin:
        if not line.strip():
            continue
        try:
            msg = json.loads(line)
        except json.JSONDecodeError:
            reply({"type": "error", "message": "request is not valid JSON"})
            continue
        kind = msg.get("type")
        if kind == "hello":
            reply({"type": "ready", "max_batch": max_batch})
        elif kind == "infer":
            prefixes = msg.get("prefixes")
            if not isinstance(prefixes, list) or not prefixes:
                reply({"type": "error", "message": "infer needs a prefixes list",
                       "id": msg.get("id")})
                continue
            problem = next((p for p in map(_check_prefix, prefixes) if p), None)
            if problem:
                reply({"type": "error", "message": problem, "id": msg.get("id")})
                continue
            if any(len(p) > model.cfg.context_len for p in prefixes):
                reply({"type": "error", "message": "prefix exceeds context length",
                       "id": msg.get("id")})
                continue
            rows = [_encode_row(model.next_log_probs(p)) for p in prefixes]
            reply({"type": "dist", "id": msg.get("id"), "log_probs": rows})
        elif kind == "bye":
            break
        else:
            reply({"type": "error", "message": f"unknown message type {kind!r}"})


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description="Serve a trained tiny password LM.")
    ap.add_argument("model_path")
    ap.add_argument("--max-batch", type=int, default=64)
    args = ap.parse_args(argv)
    serve(args.model_path, max_batch=args.max_batch)
    return 0


if __name__ == "__main__":
    sys.exit(main())
