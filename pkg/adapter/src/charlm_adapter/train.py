"""Train the tiny character LM on a line-per-password corpus."""

from __future__ import annotations

import argparse
import json
import random
import sys

import torch
import torch.nn.functional as F

from .model import CharTransformer, TinyModelConfig, save_checkpoint
from .vocabulary import BLANK, END, START, encode_password


def encode_pair(pw: str, width: int) -> tuple[list[int], list[int]]:
    """Input [START, chars, pad] and target [chars, END, pad] of equal width."""
    ids = encode_password(pw)
    pad = width - len(ids) - 1
    return ([START] + ids + [BLANK] * pad,
            ids + [END] + [BLANK] * pad)


def batches(corpus: list[str], batch_size: int, rng: random.Random):
    order = list(range(len(corpus)))
    rng.shuffle(order)
    for start in range(0, len(order), batch_size):
        rows = [corpus[i] for i in order[start:start + batch_size]]
        width = max(len(r) for r in rows) + 1  # room for START / END
        xs, ys = zip(*(encode_pair(r, width) for r in rows))
        yield (torch.tensor(xs, dtype=torch.long),
               torch.tensor(ys, dtype=torch.long))


def corpus_loss(model: CharTransformer, corpus: list[str], batch_size: int) -> float:
    model.eval()
    total, count = 0.0, 0
    rng = random.Random(0)  # fixed order: evaluation must be reproducible
    with torch.no_grad():
        for xs, ys in batches(corpus, batch_size, rng):
            logits = model(xs)
            loss = F.cross_entropy(logits.reshape(-1, logits.shape[-1]),
                                   ys.reshape(-1), ignore_index=BLANK,
                                   reduction="sum")
            total += float(loss)
            count += int((ys != BLANK).sum())
    model.train()
    return total / count


def train_model(corpus: list[str], config: TinyModelConfig, *, epochs: int = 3,
                batch_size: int = 64, lr: float = 3e-3, seed: int = 0,
                log=lambda msg: print(msg, file=sys.stderr)):
    if not corpus:
        raise ValueError("training corpus is empty")
    too_long = [pw for pw in corpus if len(pw) + 1 > config.context_len]
    if too_long:
        raise ValueError(f"{len(too_long)} passwords exceed context_len - 1")
    torch.manual_seed(seed)
    torch.set_num_threads(1)  # bit-reproducible retraining
    rng = random.Random(seed)
    model = CharTransformer(config)
    initial_loss = corpus_loss(model, corpus, batch_size)
    opt = torch.optim.Adam(model.parameters(), lr=lr)
    model.train()
    for epoch in range(epochs):
        running, steps = 0.0, 0
        for xs, ys in batches(corpus, batch_size, rng):
            logits = model(xs)
            loss = F.cross_entropy(logits.reshape(-1, logits.shape[-1]),
                                   ys.reshape(-1), ignore_index=BLANK)
            opt.zero_grad()
            loss.backward()
            opt.step()
            running += float(loss.detach())
            steps += 1
        log(f"epoch {epoch + 1}/{epochs}: train loss {running / steps:.4f}")
    final_loss = corpus_loss(model, corpus, batch_size)
    model.eval()
    meta = {"initial_loss": initial_loss, "final_loss": final_loss,
            "epochs": epochs, "seed": seed, "passwords": len(corpus)}
    log(f"eval loss {initial_loss:.4f} -> {final_loss:.4f}")
    return model, meta


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description="Train the tiny password LM.")
    ap.add_argument("--corpus", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--layers", type=int, default=2)
    ap.add_argument("--embed-dim", type=int, default=64)
    ap.add_argument("--heads", type=int, default=2)
    ap.add_argument("--ffn-dim", type=int, default=128)
    ap.add_argument("--context-len", type=int, default=34)
    ap.add_argument("--epochs", type=int, default=3)
    ap.add_argument("--batch-size", type=int, default=64)
    ap.add_argument("--lr", type=float, default=3e-3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    with open(args.corpus, "r", encoding="ascii", errors="strict") as fh:
        corpus = [line.rstrip("\n") for line in fh if line.strip()]
    config = TinyModelConfig(layers=args.layers, embed_dim=args.embed_dim,
                             heads=args.heads, ffn_dim=args.ffn_dim,
                             context_len=args.context_len)
    model, meta = train_model(corpus, config, epochs=args.epochs,
                              batch_size=args.batch_size, lr=args.lr,
                              seed=args.seed)
    save_checkpoint(model, args.out, meta)
    print(json.dumps(meta), file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
