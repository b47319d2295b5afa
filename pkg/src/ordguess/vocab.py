"""Fixed 99-symbol alphabet and sequence encoding.

The index order is a published contract (the external-model wire protocol
sends token ids in exactly this order):

    0..94   printable ASCII, id = codepoint - 0x20 (space .. tilde)
    95      START   (beginning-of-password marker)
    96      END     (end-of-password marker)
    97      UNK     (any byte outside 0x20-0x7E)
    98      BLANK   (padding placeholder)
"""

from __future__ import annotations

from .errors import LengthOverflowError

PRINTABLE = [chr(c) for c in range(0x20, 0x7F)]  # 95 chars incl. space

START = 95
END = 96
UNK = 97
BLANK = 98

VOCAB_SIZE = 99
# Symbols a model may actually predict as "next": printables plus END.
EFFECTIVE_SIZE = 96

_SPECIAL_NAMES = {START: "<S>", END: "</S>", UNK: "<unk>", BLANK: "<blank>"}


class Vocabulary:
    """Bijective symbol <-> id map over the fixed alphabet."""

    def __init__(self):
        self.symbols = PRINTABLE + [_SPECIAL_NAMES[i] for i in (START, END, UNK, BLANK)]

    def encode_char(self, ch: str) -> int:
        cp = ord(ch)
        if 0x20 <= cp <= 0x7E:
            return cp - 0x20
        return UNK

    def decode_id(self, token: int) -> str:
        if 0 <= token < 95:
            return chr(token + 0x20)
        if token in _SPECIAL_NAMES:
            raise ValueError(f"id {token} is the special symbol {_SPECIAL_NAMES[token]}")
        raise ValueError(f"id {token} outside vocabulary")

    def decode(self, ids) -> str:
        return "".join(self.decode_id(i) for i in ids)

    def __len__(self):
        return VOCAB_SIZE


VOCAB = Vocabulary()


def encode_chars(password: str) -> list[int]:
    """Character ids only, no START/END/BLANK framing."""
    return [VOCAB.encode_char(c) for c in password]


def encode_input(password: str, n: int) -> list[int]:
    """Model input sequence: START, the password's chars, BLANK padding to n."""
    m = len(password)
    if m >= n:
        raise LengthOverflowError(f"password length {m} must be < sequence length {n}")
    return [START] + encode_chars(password) + [BLANK] * (n - m - 1)


def encode_target(password: str, n: int) -> list[int]:
    """Training target: the input shifted left one step, END where BLANK began."""
    m = len(password)
    if m >= n:
        raise LengthOverflowError(f"password length {m} must be < sequence length {n}")
    return encode_chars(password) + [END] + [BLANK] * (n - m - 1)
