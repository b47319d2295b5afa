"""A very small causal transformer over the 99-symbol password alphabet."""

from __future__ import annotations

from dataclasses import dataclass, asdict

import torch
import torch.nn as nn
import torch.nn.functional as F

from .vocabulary import VOCAB_SIZE, START, BLANK


@dataclass
class TinyModelConfig:
    layers: int = 2
    embed_dim: int = 64
    heads: int = 2
    ffn_dim: int = 128
    context_len: int = 34
    dropout: float = 0.1
    vocab_size: int = VOCAB_SIZE

    def as_dict(self):
        return asdict(self)


class Block(nn.Module):
    def __init__(self, cfg: TinyModelConfig):
        super().__init__()
        self.ln1 = nn.LayerNorm(cfg.embed_dim)
        self.attn = nn.MultiheadAttention(cfg.embed_dim, cfg.heads,
                                          dropout=cfg.dropout, batch_first=True)
        self.ln2 = nn.LayerNorm(cfg.embed_dim)
        self.mlp = nn.Sequential(
            nn.Linear(cfg.embed_dim, cfg.ffn_dim),
            nn.GELU(),
            nn.Linear(cfg.ffn_dim, cfg.embed_dim),
            nn.Dropout(cfg.dropout),
        )

    def forward(self, x, causal_mask):
        h = self.ln1(x)
        a, _ = self.attn(h, h, h, attn_mask=causal_mask, need_weights=False)
        x = x + a
        return x + self.mlp(self.ln2(x))


class CharTransformer(nn.Module):
    def __init__(self, cfg: TinyModelConfig):
        super().__init__()
        self.cfg = cfg
        self.tok = nn.Embedding(cfg.vocab_size, cfg.embed_dim)
        self.pos = nn.Embedding(cfg.context_len, cfg.embed_dim)
        self.drop = nn.Dropout(cfg.dropout)
        self.blocks = nn.ModuleList(Block(cfg) for _ in range(cfg.layers))
        self.ln_f = nn.LayerNorm(cfg.embed_dim)
        self.head = nn.Linear(cfg.embed_dim, cfg.vocab_size)

    def forward(self, ids: torch.Tensor) -> torch.Tensor:
        n = ids.shape[1]
        if n > self.cfg.context_len:
            raise ValueError(f"sequence length {n} exceeds context {self.cfg.context_len}")
        mask = torch.triu(torch.ones(n, n, dtype=torch.bool, device=ids.device), 1)
        x = self.tok(ids) + self.pos(torch.arange(n, device=ids.device))
        x = self.drop(x)
        for block in self.blocks:
            x = block(x, mask)
        return self.head(self.ln_f(x))

    @torch.no_grad()
    def next_log_probs(self, prefix: list[int]) -> torch.Tensor:
        """Length-99 natural-log distribution; START/BLANK masked to -inf."""
        ids = torch.tensor([prefix], dtype=torch.long)
        logits = self.forward(ids)[0, -1].clone()
        logits[START] = float("-inf")
        logits[BLANK] = float("-inf")
        return F.log_softmax(logits, dim=-1)


def save_checkpoint(model: CharTransformer, path, meta: dict):
    torch.save({"config": model.cfg.as_dict(), "state": model.state_dict(),
                "meta": meta}, path)


def load_checkpoint(path) -> tuple[CharTransformer, dict]:
    blob = torch.load(path, map_location="cpu", weights_only=True)
    cfg = TinyModelConfig(**blob["config"])
    model = CharTransformer(cfg)
    model.load_state_dict(blob["state"])
    model.eval()
    return model, blob.get("meta", {})
