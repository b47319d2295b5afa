import numpy as np
import pytest

from ordguess import vocab
from ordguess.models import ProbabilityModel

NEG_INF = float("-inf")


def make_dist(pairs):
    """Length-99 log-prob array from {char-or-'END': prob}."""
    out = np.full(vocab.VOCAB_SIZE, NEG_INF)
    for key, p in pairs.items():
        idx = vocab.END if key == "END" else vocab.VOCAB.encode_char(key)
        if p > 0:
            out[idx] = np.log(p)
    out.setflags(write=False)
    return out


class UniformModel(ProbabilityModel):
    """Context-free: the given chars plus END, equiprobable at every step."""

    def __init__(self, chars):
        p = 1.0 / (len(chars) + 1)
        self._dist = make_dist({**{c: p for c in chars}, "END": p})

    def next_log_probs(self, prefix):
        return self._dist


class TableModel(ProbabilityModel):
    """Distribution looked up by decoded prefix text; exact per-context control."""

    def __init__(self, table, default=None):
        self._table = {k: make_dist(v) for k, v in table.items()}
        self._default = make_dist(default) if default is not None else None

    def next_log_probs(self, prefix):
        text = "".join(chr(t + 0x20) for t in prefix[1:])
        dist = self._table.get(text, self._default)
        if dist is None:
            raise KeyError(f"no distribution for prefix text {text!r}")
        return dist


@pytest.fixture
def uniform_ab():
    return UniformModel("ab")
